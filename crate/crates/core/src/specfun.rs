//! Complete elliptic integral K(k) and the Jacobi elliptic functions
//! sn, cn, dn, via the arithmetic–geometric mean.
//!
//! `jacobi` runs the descending Landen scale with a backward recurrence for
//! the amplitude, generically over [`Scalar`] so closed-form orbit
//! parameterizations can be differentiated with dual numbers.

use crate::dual::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EllipticError {
    #[error("modulus^2 = {k_sq} outside [0, 1) beyond round-off tolerance")]
    ModulusOutOfRange { k_sq: f64 },
}

/// Elliptic modulus k with 0 <= k < 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticModulus {
    k: f64,
}

/// Round-off slack when clamping k² computed from level-set data.
const CLAMP_TOL: f64 = 1e-12;

impl EllipticModulus {
    pub fn new(k: f64) -> Result<Self, EllipticError> {
        Self::from_k_squared(k * k)
    }

    /// Construct from k². Values within `1e-12` of the valid range are
    /// clamped into [0, 1-1e-12]; anything further out is an error.
    pub fn from_k_squared(k_sq: f64) -> Result<Self, EllipticError> {
        if !k_sq.is_finite() || !(-CLAMP_TOL..1.0).contains(&k_sq) {
            return Err(EllipticError::ModulusOutOfRange { k_sq });
        }
        let clamped = k_sq.clamp(0.0, 1.0 - CLAMP_TOL);
        Ok(EllipticModulus { k: clamped.sqrt() })
    }

    pub fn k(self) -> f64 {
        self.k
    }

    pub fn k_squared(self) -> f64 {
        self.k * self.k
    }

    /// Complementary modulus k' = sqrt(1 - k²).
    pub fn complementary(self) -> f64 {
        (1.0 - self.k * self.k).sqrt()
    }
}

/// Complete elliptic integral of the first kind,
/// K = pi / (2 agm(1, k')).
pub fn complete_k(modulus: EllipticModulus) -> f64 {
    let mut a = 1.0f64;
    let mut b = modulus.complementary();
    // AGM converges quadratically; 8 iterations reach 1e-16 for k <= 0.9999.
    for _ in 0..40 {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    std::f64::consts::FRAC_PI_2 / a
}

/// Jacobi elliptic functions (sn, cn, dn) at argument `u`.
///
/// AGM scale a_{i+1} = (a_i + b_i)/2, b_{i+1} = sqrt(a_i b_i),
/// c_{i+1} = (a_i - b_i)/2, then the amplitude recurrence
/// phi_{i-1} = (phi_i + asin(c_i sin(phi_i)/a_i)) / 2 run backwards from
/// phi_N = 2^N a_N u.
pub fn jacobi<T: Scalar>(u: T, modulus: EllipticModulus) -> (T, T, T) {
    let m = modulus.k_squared();
    if m < 1e-16 {
        // Degenerate modulus: circular functions.
        return (u.sin(), u.cos(), T::one());
    }
    const MAX_LEVELS: usize = 20;
    let mut a = [0.0f64; MAX_LEVELS + 1];
    let mut c = [0.0f64; MAX_LEVELS + 1];
    a[0] = 1.0;
    let mut b = (1.0 - m).sqrt();
    c[0] = m.sqrt();
    let mut levels = 0;
    while c[levels].abs() > f64::EPSILON * a[levels] && levels < MAX_LEVELS {
        let ai = a[levels];
        levels += 1;
        a[levels] = 0.5 * (ai + b);
        c[levels] = 0.5 * (ai - b);
        b = (ai * b).sqrt();
    }
    let mut phi = T::from_f64((1u64 << levels) as f64 * a[levels]) * u;
    for i in (1..=levels).rev() {
        let ratio = T::from_f64(c[i] / a[i]) * phi.sin();
        phi = (ratio.asin() + phi) * T::from_f64(0.5);
    }
    let sn = phi.sin();
    let cn = phi.cos();
    // dn from the defining identity; the amplitude-ratio formula
    // cos(phi_0)/cos(phi_0 - phi_1) degenerates to 0/0 at quarter periods.
    // dn > 0 always holds for real u and k < 1.
    let dn = (T::one() - T::from_f64(m) * sn * sn).sqrt();
    (sn, cn, dn)
}

/// f64 convenience wrapper that also pins dn into its analytic range
/// [k', 1] (round-off can leave it a few ulps outside).
pub fn jacobi_f64(u: f64, modulus: EllipticModulus) -> (f64, f64, f64) {
    let (sn, cn, dn) = jacobi(u, modulus);
    let dn = dn.clamp(modulus.complementary(), 1.0);
    (sn, cn, dn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::Dual;
    use rand::{Rng, SeedableRng};

    fn modulus(k: f64) -> EllipticModulus {
        EllipticModulus::new(k).unwrap()
    }

    /// Adaptive Simpson quadrature of K's defining integral
    /// ∫₀¹ dt/√((1-t²)(1-k²t²)), rewritten with t = sin θ to remove the
    /// endpoint singularity: ∫₀^{π/2} dθ/√(1-k² sin²θ).
    fn k_by_quadrature(k: f64) -> f64 {
        let f = |theta: f64| 1.0 / (1.0 - k * k * theta.sin().powi(2)).sqrt();
        adaptive_simpson(&f, 0.0, std::f64::consts::FRAC_PI_2, 1e-14, 40)
    }

    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn recurse(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            b: f64,
            whole: f64,
            tol: f64,
            depth: usize,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, m);
            let right = simpson(f, m, b);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                recurse(f, a, m, left, tol / 2.0, depth - 1)
                    + recurse(f, m, b, right, tol / 2.0, depth - 1)
            }
        }
        recurse(f, a, b, simpson(f, a, b), tol, depth)
    }

    #[test]
    fn complete_k_at_zero_is_half_pi() {
        assert!((complete_k(modulus(0.0)) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn complete_k_matches_defining_integral() {
        for &k in &[0.3, std::f64::consts::FRAC_1_SQRT_2, 0.95] {
            let agm = complete_k(modulus(k));
            let quad = k_by_quadrature(k);
            assert!(
                (agm - quad).abs() <= 1e-12 * quad,
                "k={k}: AGM {agm} vs quadrature {quad}"
            );
        }
        // Near the singular end the quadrature oracle is looser.
        let agm = complete_k(modulus(0.99));
        let quad = k_by_quadrature(0.99);
        assert!(agm.is_finite() && (agm - quad).abs() <= 1e-10 * quad);
    }

    #[test]
    fn jacobi_at_zero_and_degenerate_modulus() {
        let (sn, cn, dn) = jacobi_f64(0.0, modulus(0.6));
        assert!(sn.abs() < 1e-15 && (cn - 1.0).abs() < 1e-15 && (dn - 1.0).abs() < 1e-15);
        for &u in &[0.0, 0.5, 2.0, -1.3] {
            let (sn, cn, dn) = jacobi_f64(u, modulus(0.0));
            assert!((sn - u.sin()).abs() < 1e-15);
            assert!((cn - u.cos()).abs() < 1e-15);
            assert!((dn - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn quarter_period_identity() {
        for &k in &[0.2, 0.5, 0.8, 0.99] {
            let m = modulus(k);
            let big_k = complete_k(m);
            let (sn, cn, _) = jacobi_f64(big_k, m);
            assert!((sn - 1.0).abs() < 1e-12, "k={k}, sn(K)={sn}");
            assert!(cn.abs() < 1e-12, "k={k}, cn(K)={cn}");
        }
    }

    #[test]
    fn pythagorean_identities_random_inputs() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(1234);
        for _ in 0..1000 {
            let u = rng.gen_range(-10.0..10.0);
            let k = rng.gen_range(0.0..0.999);
            let m = modulus(k);
            let (sn, cn, dn) = jacobi_f64(u, m);
            assert!((sn * sn + cn * cn - 1.0).abs() <= 1e-12);
            assert!((dn * dn + m.k_squared() * sn * sn - 1.0).abs() <= 1e-12);
            assert!(sn.abs() <= 1.0 + 1e-15 && cn.abs() <= 1.0 + 1e-15);
            assert!(dn >= m.complementary() - 1e-15 && dn <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn derivative_identities_by_finite_differences() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(99);
        let h = 1e-5;
        for _ in 0..200 {
            let u = rng.gen_range(-4.0..4.0);
            let k = rng.gen_range(0.05..0.95);
            let m = modulus(k);
            let (sn, cn, dn) = jacobi_f64(u, m);
            let (sp, cp, dp) = jacobi_f64(u + h, m);
            let (sm, cm, dm) = jacobi_f64(u - h, m);
            let dsn = (sp - sm) / (2.0 * h);
            let dcn = (cp - cm) / (2.0 * h);
            let ddn = (dp - dm) / (2.0 * h);
            assert!((dsn - cn * dn).abs() <= 1e-6, "sn' at u={u}, k={k}");
            assert!((dcn + sn * dn).abs() <= 1e-6, "cn' at u={u}, k={k}");
            assert!(
                (ddn + m.k_squared() * sn * cn).abs() <= 1e-6,
                "dn' at u={u}, k={k}"
            );
        }
    }

    #[test]
    fn dual_argument_matches_derivative_identities() {
        for &(u, k) in &[(0.4, 0.3), (1.7, 0.7), (-2.2, 0.55)] {
            let m = modulus(k);
            let (sn, cn, dn) = jacobi_f64(u, m);
            let (dsn, dcn, ddn) = jacobi(Dual::seeded(u), m);
            assert!((dsn.du - cn * dn).abs() < 1e-10);
            assert!((dcn.du + sn * dn).abs() < 1e-10);
            assert!((ddn.du + m.k_squared() * sn * cn).abs() < 1e-10);
        }
    }

    #[test]
    fn periodicity_4k() {
        for &k in &[0.3, 0.6, 0.9] {
            let m = modulus(k);
            let period = 4.0 * complete_k(m);
            for &u in &[0.0, 0.7, 2.9] {
                let (s0, c0, d0) = jacobi_f64(u, m);
                let (s1, c1, d1) = jacobi_f64(u + period, m);
                assert!((s0 - s1).abs() < 1e-10);
                assert!((c0 - c1).abs() < 1e-10);
                assert!((d0 - d1).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn modulus_validation_and_clamping() {
        assert!(EllipticModulus::new(1.0).is_err());
        assert!(EllipticModulus::new(1.5).is_err());
        assert!(EllipticModulus::from_k_squared(-1e-15).unwrap().k() == 0.0);
        assert!(EllipticModulus::from_k_squared(-1e-6).is_err());
        assert!(EllipticModulus::from_k_squared(f64::NAN).is_err());
        let m = EllipticModulus::from_k_squared(1.0 / 3.0).unwrap();
        assert!((m.k_squared() - 1.0 / 3.0).abs() < 1e-15);
    }
}
