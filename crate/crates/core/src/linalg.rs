//! Small dense matrices and the eigenvalue machinery used for monodromy
//! spectra: Parlett–Reinsch balancing, Householder reduction to Hessenberg
//! form, and a Francis double-shift QR iteration that deflates 1×1/2×2
//! diagonal blocks of the real Schur form into real eigenvalues and complex
//! conjugate pairs. Matrices here never exceed 16×16.

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix size {size} exceeds supported maximum {max}")]
    TooLarge { size: usize, max: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("QR iteration failed to converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
}

pub const MAX_EIG_SIZE: usize = 16;

/// Dense row-major matrix of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut m = Mat::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> f64 {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| {
                    a[i * n + col]
                        .abs()
                        .partial_cmp(&a[j * n + col].abs())
                        .unwrap()
                })
                .unwrap();
            if a[pivot * n + col] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for row in col + 1..n {
                let f = a[row * n + col] / p;
                for j in col..n {
                    a[row * n + j] -= f * a[col * n + j];
                }
            }
        }
        det
    }

    /// Smallest singular value, from the eigenvalues of the Gram matrix of
    /// the shorter side (Jacobi iteration; sizes here are tiny).
    pub fn smallest_singular_value(&self) -> f64 {
        let (m, n) = (self.rows, self.cols);
        if m == 0 || n == 0 {
            return 0.0;
        }
        // If the matrix is wider than tall, A Aᵀ has the m nonzero squared
        // singular values; a tall matrix uses Aᵀ A.
        let k = m.min(n);
        let mut gram = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                let mut s = 0.0;
                if m <= n {
                    for l in 0..n {
                        s += self[(i, l)] * self[(j, l)];
                    }
                } else {
                    for l in 0..m {
                        s += self[(l, i)] * self[(l, j)];
                    }
                }
                gram[i * k + j] = s;
            }
        }
        let eigs = jacobi_symmetric_eigenvalues(&mut gram, k);
        eigs.into_iter()
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
            .sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Cyclic Jacobi sweeps on a symmetric matrix (in place); returns the
/// eigenvalues. Convergence is quadratic; 30 sweeps is far beyond need.
fn jacobi_symmetric_eigenvalues(a: &mut [f64], n: usize) -> Vec<f64> {
    for _ in 0..30 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off.sqrt() < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

/// Eigenvalues of a real square matrix: balancing, Householder Hessenberg
/// reduction, then Francis double-shift QR. Eigenvalues come from the
/// 1×1/2×2 diagonal blocks of the resulting quasi-triangular form.
pub fn eigenvalues(m: &Mat) -> Result<Vec<Complex64>, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let n = m.rows;
    if n > MAX_EIG_SIZE {
        return Err(LinalgError::TooLarge {
            size: n,
            max: MAX_EIG_SIZE,
        });
    }
    if m.data.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a = m.clone();
    balance(&mut a);
    hessenberg(&mut a);
    hqr_eigenvalues(&mut a)
}

/// Parlett–Reinsch balancing: diagonal similarity with powers of two that
/// equalizes row/column norms. Leaves eigenvalues unchanged.
fn balance(a: &mut Mat) {
    let n = a.rows();
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                let mut c_acc = c;
                while c_acc < g {
                    f *= RADIX;
                    c_acc *= sqrdx;
                }
                g = r * RADIX;
                while c_acc > g {
                    f /= RADIX;
                    c_acc /= sqrdx;
                }
                if (c_acc + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 0..n {
                        a[(i, j)] *= g;
                    }
                    for j in 0..n {
                        a[(j, i)] *= f;
                    }
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Householder similarity reduction to upper Hessenberg form (in place).
fn hessenberg(a: &mut Mat) {
    let n = a.rows();
    for k in 0..n.saturating_sub(2) {
        // Reflector annihilating a[k+2.., k].
        let mut norm_sq = 0.0;
        for i in k + 1..n {
            norm_sq += a[(i, k)] * a[(i, k)];
        }
        let alpha = norm_sq.sqrt();
        if alpha == 0.0 {
            continue;
        }
        let pivot = a[(k + 1, k)];
        let alpha = if pivot > 0.0 { -alpha } else { alpha };
        let mut v = vec![0.0; n];
        v[k + 1] = pivot - alpha;
        for i in k + 2..n {
            v[i] = a[(i, k)];
        }
        let vnorm_sq: f64 = v[k + 1..].iter().map(|x| x * x).sum();
        if vnorm_sq == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm_sq;
        // A <- (I - beta v vᵀ) A
        for j in 0..n {
            let mut dot = 0.0;
            for i in k + 1..n {
                dot += v[i] * a[(i, j)];
            }
            let dot = beta * dot;
            for i in k + 1..n {
                a[(i, j)] -= dot * v[i];
            }
        }
        // A <- A (I - beta v vᵀ)
        for i in 0..n {
            let mut dot = 0.0;
            for j in k + 1..n {
                dot += a[(i, j)] * v[j];
            }
            let dot = beta * dot;
            for j in k + 1..n {
                a[(i, j)] -= dot * v[j];
            }
        }
        // Enforce exact zeros below the subdiagonal in this column.
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix; returns all
/// eigenvalues. Classic hqr scheme with exceptional shifts at iterations
/// 10 and 20 of each deflation and a hard cap that reports non-convergence.
fn hqr_eigenvalues(a: &mut Mat) -> Result<Vec<Complex64>, LinalgError> {
    let n = a.rows();
    let mut eigs = Vec::with_capacity(n);
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    if anorm == 0.0 {
        return Ok(vec![Complex64::new(0.0, 0.0); n]);
    }
    let eps = f64::EPSILON;
    let mut t = 0.0;
    let mut nn = n as isize - 1;
    let mut total_iters = 0usize;
    while nn >= 0 {
        let mut its = 0;
        loop {
            // Look for a negligible subdiagonal element.
            let mut l = nn;
            while l >= 1 {
                let s = a[((l - 1) as usize, (l - 1) as usize)].abs()
                    + a[(l as usize, l as usize)].abs();
                let s = if s == 0.0 { anorm } else { s };
                if a[(l as usize, (l - 1) as usize)].abs() <= eps * s {
                    a[(l as usize, (l - 1) as usize)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let x = a[(nn as usize, nn as usize)];
            if l == nn {
                eigs.push(Complex64::new(x + t, 0.0));
                nn -= 1;
                break;
            }
            let y = a[((nn - 1) as usize, (nn - 1) as usize)];
            let w = a[(nn as usize, (nn - 1) as usize)] * a[((nn - 1) as usize, nn as usize)];
            if l == nn - 1 {
                // 2x2 block: real pair or complex conjugates.
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                let x_shifted = x + t;
                if q >= 0.0 {
                    let z = p + z.copysign(p);
                    eigs.push(Complex64::new(x_shifted + z, 0.0));
                    if z != 0.0 {
                        eigs.push(Complex64::new(x_shifted - w / z, 0.0));
                    } else {
                        eigs.push(Complex64::new(x_shifted, 0.0));
                    }
                } else {
                    eigs.push(Complex64::new(x_shifted + p, z));
                    eigs.push(Complex64::new(x_shifted + p, -z));
                }
                nn -= 2;
                break;
            }
            if its == 30 {
                return Err(LinalgError::NoConvergence {
                    iterations: total_iters,
                });
            }
            let (mut x, mut y, mut w) = (x, y, w);
            if its == 10 || its == 20 {
                // Exceptional shift.
                t += x;
                for i in 0..=nn as usize {
                    a[(i, i)] -= x;
                }
                let s = a[(nn as usize, (nn - 1) as usize)].abs()
                    + a[((nn - 1) as usize, (nn - 2) as usize)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            total_iters += 1;
            // Form the first column of (A - aI)(A - bI) and find a good
            // starting row m for the implicit double shift.
            let mut m = nn - 2;
            let (mut p, mut q, mut r) = (0.0, 0.0, 0.0);
            while m >= l {
                let z = a[(m as usize, m as usize)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[((m + 1) as usize, m as usize)]
                    + a[(m as usize, (m + 1) as usize)];
                q = a[((m + 1) as usize, (m + 1) as usize)] - z - rr - ss;
                r = a[((m + 2) as usize, (m + 1) as usize)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[(m as usize, (m - 1) as usize)].abs() * (q.abs() + r.abs());
                let v = p.abs()
                    * (a[((m - 1) as usize, (m - 1) as usize)].abs()
                        + z.abs()
                        + a[((m + 1) as usize, (m + 1) as usize)].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nn {
                a[(i as usize, (i - 2) as usize)] = 0.0;
                if i > m + 2 {
                    a[(i as usize, (i - 3) as usize)] = 0.0;
                }
            }
            // Double QR sweep over rows l..nn.
            for k in m..=nn - 1 {
                if k != m {
                    p = a[(k as usize, (k - 1) as usize)];
                    q = a[((k + 1) as usize, (k - 1) as usize)];
                    r = if k != nn - 1 {
                        a[((k + 2) as usize, (k - 1) as usize)]
                    } else {
                        0.0
                    };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s == 0.0 {
                    continue;
                }
                if k == m {
                    if l != m {
                        a[(k as usize, (k - 1) as usize)] = -a[(k as usize, (k - 1) as usize)];
                    }
                } else {
                    a[(k as usize, (k - 1) as usize)] = -s * x;
                }
                p += s;
                x = p / s;
                y = q / s;
                let z = r / s;
                q /= p;
                r /= p;
                // Row modification.
                for j in k as usize..=nn as usize {
                    let mut pp = a[(k as usize, j)] + q * a[((k + 1) as usize, j)];
                    if k != nn - 1 {
                        pp += r * a[((k + 2) as usize, j)];
                        a[((k + 2) as usize, j)] -= pp * z;
                    }
                    a[((k + 1) as usize, j)] -= pp * y;
                    a[(k as usize, j)] -= pp * x;
                }
                // Column modification.
                let upper = if (nn as usize) < k as usize + 3 {
                    nn as usize
                } else {
                    k as usize + 3
                };
                for i in l as usize..=upper {
                    let mut pp = x * a[(i, k as usize)] + y * a[(i, (k + 1) as usize)];
                    if k != nn - 1 {
                        pp += z * a[(i, (k + 2) as usize)];
                        a[(i, (k + 2) as usize)] -= pp * r;
                    }
                    a[(i, (k + 1) as usize)] -= pp * q;
                    a[(i, k as usize)] -= pp;
                }
            }
        }
    }
    Ok(eigs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn sorted_real(mut eigs: Vec<Complex64>) -> Vec<Complex64> {
        eigs.sort_by(|a, b| {
            a.re.partial_cmp(&b.re)
                .unwrap()
                .then(a.im.partial_cmp(&b.im).unwrap())
        });
        eigs
    }

    #[test]
    fn identity_eigenvalues() {
        let eigs = eigenvalues(&Mat::identity(3)).unwrap();
        for e in eigs {
            assert!((e - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn rotation_block_gives_conjugate_pair() {
        let m = Mat::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]);
        let eigs = sorted_real(eigenvalues(&m).unwrap());
        assert!((eigs[0] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((eigs[1] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn companion_matrix_of_cubic() {
        // (λ-1)(λ-2)(λ-3) = λ^3 - 6λ^2 + 11λ - 6
        let m = Mat::from_rows(&[
            vec![6.0, -11.0, 6.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ]);
        let eigs = sorted_real(eigenvalues(&m).unwrap());
        for (e, expect) in eigs.iter().zip([1.0, 2.0, 3.0]) {
            assert!((e - Complex64::new(expect, 0.0)).norm() < 1e-10, "{eigs:?}");
        }
    }

    #[test]
    fn random_similarity_preserves_known_spectrum() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for n in 2..=8usize {
            let spectrum: Vec<f64> = (0..n).map(|i| (i as f64) - 2.5).collect();
            // D = diag(spectrum), conjugate by a random well-conditioned P.
            let mut p = Mat::identity(n);
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        p[(i, j)] = rng.gen_range(-0.3..0.3);
                    }
                }
            }
            // B = P D P^{-1} computed as solving P^{-1} via Gauss-Jordan.
            let mut pd = Mat::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    pd[(i, j)] = p[(i, j)] * spectrum[j];
                }
            }
            let pinv = invert(&p);
            let b = pd.matmul(&pinv);
            let eigs = sorted_real(eigenvalues(&b).unwrap());
            for (e, expect) in eigs.iter().zip(&spectrum) {
                assert!(
                    (e - Complex64::new(*expect, 0.0)).norm() < 1e-8,
                    "n={n}: {eigs:?}"
                );
            }
        }
    }

    #[test]
    fn mixed_real_and_complex_spectrum() {
        // Block diag: rotation scaled by 2 (eigs 2e^{±iπ/4}) plus real 0.5.
        let c = std::f64::consts::FRAC_PI_4.cos() * 2.0;
        let s = std::f64::consts::FRAC_PI_4.sin() * 2.0;
        let m = Mat::from_rows(&[vec![c, -s, 0.3], vec![s, c, -0.7], vec![0.0, 0.0, 0.5]]);
        let eigs = eigenvalues(&m).unwrap();
        let mut found_real = false;
        let mut found_pair = 0;
        for e in eigs {
            if e.im.abs() < 1e-12 {
                assert!((e.re - 0.5).abs() < 1e-10);
                found_real = true;
            } else {
                assert!((e.norm() - 2.0).abs() < 1e-10);
                found_pair += 1;
            }
        }
        assert!(found_real && found_pair == 2);
    }

    #[test]
    fn badly_scaled_matrix_needs_balancing() {
        // Same spectrum as diag(1, 2) but scaled off-diagonals.
        let m = Mat::from_rows(&[vec![1.0, 1e8], vec![1e-8, 2.0]]);
        let eigs = sorted_real(eigenvalues(&m).unwrap());
        assert!((eigs[0].re - (1.5 - 1.25f64.sqrt())).abs() < 1e-9);
        assert!((eigs[1].re - (1.5 + 1.25f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn determinant_and_trace() {
        let m = Mat::from_rows(&[
            vec![2.0, 1.0, 0.0],
            vec![1.0, 3.0, 1.0],
            vec![0.0, 1.0, 4.0],
        ]);
        // det = 2*(12-1) - 1*(4-0) = 18
        assert!((m.det() - 18.0).abs() < 1e-12);
        assert!((m.trace() - 9.0).abs() < 1e-15);
    }

    #[test]
    fn smallest_singular_value_cases() {
        // Orthonormal rows: sigma_min = 1.
        let m = Mat::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        assert!((m.smallest_singular_value() - 1.0).abs() < 1e-10);
        // Rank-deficient: sigma_min = 0.
        let m = Mat::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]);
        assert!(m.smallest_singular_value() < 1e-8);
        // diag(3, 2) singular values are 3 and 2.
        let m = Mat::from_rows(&[vec![3.0, 0.0], vec![0.0, 2.0]]);
        assert!((m.smallest_singular_value() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn non_finite_and_shape_errors() {
        let m = Mat::from_rows(&[vec![f64::NAN, 0.0], vec![0.0, 1.0]]);
        assert!(matches!(eigenvalues(&m), Err(LinalgError::NonFinite)));
        let m = Mat::zeros(2, 3);
        assert!(matches!(
            eigenvalues(&m),
            Err(LinalgError::NotSquare { .. })
        ));
        let m = Mat::zeros(17, 17);
        assert!(matches!(eigenvalues(&m), Err(LinalgError::TooLarge { .. })));
    }

    fn invert(m: &Mat) -> Mat {
        let n = m.rows();
        let mut a = m.clone();
        let mut inv = Mat::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[(i, col)].abs().partial_cmp(&a[(j, col)].abs()).unwrap())
                .unwrap();
            if pivot != col {
                for j in 0..n {
                    let t = a[(col, j)];
                    a[(col, j)] = a[(pivot, j)];
                    a[(pivot, j)] = t;
                    let t = inv[(col, j)];
                    inv[(col, j)] = inv[(pivot, j)];
                    inv[(pivot, j)] = t;
                }
            }
            let p = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= p;
                inv[(col, j)] /= p;
            }
            for row in 0..n {
                if row != col {
                    let f = a[(row, col)];
                    for j in 0..n {
                        a[(row, j)] -= f * a[(col, j)];
                        inv[(row, j)] -= f * inv[(col, j)];
                    }
                }
            }
        }
        inv
    }
}
