//! Exact exterior algebra over ℝⁿ with the standard inner product.
//!
//! Multivectors are stored as dense maps from basis blades (strictly
//! increasing index tuples, encoded as bitmasks) to coefficients. The basis
//! ordering is lexicographic on increasing tuples and the orientation is
//! fixed by `e₁∧…∧e_n`; [`Orientation::Reversed`] flips the volume form,
//! which is used to check that downstream constructions are
//! orientation-independent.

use std::collections::BTreeMap;

use crate::dual::Scalar;

/// Largest supported dimension (blades are stored as `u16` bitmasks).
pub const MAX_DIM: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExteriorError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("grade mismatch: {left} vs {right}")]
    GradeMismatch { left: usize, right: usize },
    #[error("wedge grade overflow: {left} + {right} > dimension {dim}")]
    GradeOverflow {
        left: usize,
        right: usize,
        dim: usize,
    },
    #[error("invalid index tuple {indices:?} for dimension {dim}: {reason}")]
    InvalidIndices {
        indices: Vec<usize>,
        dim: usize,
        reason: &'static str,
    },
    #[error("dimension {dim} out of range 1..={max}", max = MAX_DIM)]
    DimensionOutOfRange { dim: usize },
    #[error("expected a grade-1 multivector, found grade {grade}")]
    NotAVector { grade: usize },
    #[error("empty vector list")]
    EmptyVectorList,
}

/// Orientation of the volume form; `Standard` is `e₁∧…∧e_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    #[default]
    Standard,
    Reversed,
}

impl Orientation {
    fn sign(self) -> f64 {
        match self {
            Orientation::Standard => 1.0,
            Orientation::Reversed => -1.0,
        }
    }
}

/// Grade-`r` element of Λʳ(ℝⁿ) in canonical basis coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiVector<T = f64> {
    dim: usize,
    grade: usize,
    coeffs: BTreeMap<u16, T>,
}

fn check_dim(dim: usize) -> Result<(), ExteriorError> {
    if dim == 0 || dim > MAX_DIM {
        return Err(ExteriorError::DimensionOutOfRange { dim });
    }
    Ok(())
}

fn mask_from_indices(indices: &[usize], dim: usize) -> Result<u16, ExteriorError> {
    let mut mask: u16 = 0;
    let mut prev = 0usize;
    for &i in indices {
        if i < 1 || i > dim {
            return Err(ExteriorError::InvalidIndices {
                indices: indices.to_vec(),
                dim,
                reason: "index out of range",
            });
        }
        if i <= prev {
            return Err(ExteriorError::InvalidIndices {
                indices: indices.to_vec(),
                dim,
                reason: "indices must be strictly increasing",
            });
        }
        prev = i;
        mask |= 1 << (i - 1);
    }
    Ok(mask)
}

fn indices_from_mask(mask: u16) -> Vec<usize> {
    (0..MAX_DIM)
        .filter(|b| mask & (1 << b) != 0)
        .map(|b| b + 1)
        .collect()
}

/// Parity sign (+1/-1) of merging two disjoint increasing tuples `a`, `b`
/// into one sorted tuple: counts pairs (i ∈ a, j ∈ b) with i > j.
fn merge_sign(a: u16, b: u16) -> f64 {
    let mut inversions = 0u32;
    let mut bits = a;
    while bits != 0 {
        let i = bits.trailing_zeros();
        inversions += (b & ((1u16 << i) - 1)).count_ones();
        bits &= bits - 1;
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

impl<T: Scalar> MultiVector<T> {
    pub fn zero(dim: usize, grade: usize) -> Result<Self, ExteriorError> {
        check_dim(dim)?;
        if grade > dim {
            return Err(ExteriorError::GradeOverflow {
                left: grade,
                right: 0,
                dim,
            });
        }
        Ok(MultiVector {
            dim,
            grade,
            coeffs: BTreeMap::new(),
        })
    }

    pub fn scalar(dim: usize, value: T) -> Result<Self, ExteriorError> {
        let mut m = Self::zero(dim, 0)?;
        m.insert_mask(0, value);
        Ok(m)
    }

    /// Basis blade `e_{i₁}∧…∧e_{i_r}` with 1-based strictly increasing indices.
    pub fn basis(dim: usize, indices: &[usize]) -> Result<Self, ExteriorError> {
        let mut m = Self::zero(dim, indices.len())?;
        let mask = mask_from_indices(indices, dim)?;
        m.insert_mask(mask, T::one());
        Ok(m)
    }

    /// Grade-1 multivector with the given coordinates.
    pub fn from_vector(coords: &[T]) -> Result<Self, ExteriorError> {
        let mut m = Self::zero(coords.len(), 1)?;
        for (i, &c) in coords.iter().enumerate() {
            m.insert_mask(1 << i, c);
        }
        Ok(m)
    }

    pub fn from_terms(
        dim: usize,
        grade: usize,
        terms: &[(Vec<usize>, T)],
    ) -> Result<Self, ExteriorError> {
        let mut m = Self::zero(dim, grade)?;
        for (indices, value) in terms {
            if indices.len() != grade {
                return Err(ExteriorError::GradeMismatch {
                    left: grade,
                    right: indices.len(),
                });
            }
            let mask = mask_from_indices(indices, dim)?;
            let entry = m.coeffs.remove(&mask).unwrap_or_else(T::zero) + *value;
            m.insert_mask(mask, entry);
        }
        Ok(m)
    }

    /// The volume form `e₁∧…∧e_n`.
    pub fn volume(dim: usize) -> Result<Self, ExteriorError> {
        check_dim(dim)?;
        let mut m = Self::zero(dim, dim)?;
        m.insert_mask(((1u32 << dim) - 1) as u16, T::one());
        Ok(m)
    }

    fn insert_mask(&mut self, mask: u16, value: T) {
        if value != T::zero() {
            self.coeffs.insert(mask, value);
        } else {
            self.coeffs.remove(&mask);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grade(&self) -> usize {
        self.grade
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coefficient(&self, indices: &[usize]) -> Result<T, ExteriorError> {
        if indices.len() != self.grade {
            return Err(ExteriorError::GradeMismatch {
                left: self.grade,
                right: indices.len(),
            });
        }
        let mask = mask_from_indices(indices, self.dim)?;
        Ok(self.coeffs.get(&mask).copied().unwrap_or_else(T::zero))
    }

    /// Terms in lexicographic blade order as (1-based indices, coefficient).
    pub fn terms(&self) -> impl Iterator<Item = (Vec<usize>, T)> + '_ {
        self.coeffs.iter().map(|(&m, &c)| (indices_from_mask(m), c))
    }

    /// Drop coefficients with |value| <= eps.
    pub fn prune(&mut self, eps: f64) {
        self.coeffs.retain(|_, c| c.value().abs() > eps);
    }

    pub fn scale(&self, factor: T) -> Self {
        let mut out = MultiVector {
            dim: self.dim,
            grade: self.grade,
            coeffs: BTreeMap::new(),
        };
        for (&m, &c) in &self.coeffs {
            out.insert_mask(m, c * factor);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self, ExteriorError> {
        if self.dim != other.dim {
            return Err(ExteriorError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        if self.grade != other.grade {
            return Err(ExteriorError::GradeMismatch {
                left: self.grade,
                right: other.grade,
            });
        }
        let mut out = self.clone();
        for (&m, &c) in &other.coeffs {
            let v = out.coeffs.remove(&m).unwrap_or_else(T::zero) + c;
            out.insert_mask(m, v);
        }
        Ok(out)
    }

    /// Graded-anticommutative wedge product. Grade overflow is an error.
    pub fn wedge(&self, other: &Self) -> Result<Self, ExteriorError> {
        if self.dim != other.dim {
            return Err(ExteriorError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        if self.grade + other.grade > self.dim {
            return Err(ExteriorError::GradeOverflow {
                left: self.grade,
                right: other.grade,
                dim: self.dim,
            });
        }
        let mut out = Self::zero(self.dim, self.grade + other.grade)?;
        for (&ma, &ca) in &self.coeffs {
            for (&mb, &cb) in &other.coeffs {
                if ma & mb != 0 {
                    continue; // repeated factor
                }
                let sign = T::from_f64(merge_sign(ma, mb));
                let mask = ma | mb;
                let v = out.coeffs.remove(&mask).unwrap_or_else(T::zero) + sign * ca * cb;
                out.insert_mask(mask, v);
            }
        }
        Ok(out)
    }

    /// Hodge star for the standard orientation: on blades,
    /// `⋆e_J = sgn(σ)·e_{J^c}` where σ permutes (J, J^c) to (1,…,n).
    pub fn hodge_star(&self) -> Self {
        self.hodge_star_with(Orientation::Standard)
    }

    /// Hodge star with an explicit orientation of the volume form.
    pub fn hodge_star_with(&self, orientation: Orientation) -> Self {
        let full = ((1u32 << self.dim) - 1) as u16;
        let mut out = MultiVector {
            dim: self.dim,
            grade: self.dim - self.grade,
            coeffs: BTreeMap::new(),
        };
        for (&m, &c) in &self.coeffs {
            let comp = full & !m;
            let sign = T::from_f64(merge_sign(m, comp) * orientation.sign());
            out.insert_mask(comp, sign * c);
        }
        out
    }

    /// Inner product of same-grade multivectors (orthonormal blade basis).
    pub fn inner(&self, other: &Self) -> Result<T, ExteriorError> {
        if self.dim != other.dim {
            return Err(ExteriorError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        if self.grade != other.grade {
            return Err(ExteriorError::GradeMismatch {
                left: self.grade,
                right: other.grade,
            });
        }
        let mut acc = T::zero();
        for (&m, &c) in &self.coeffs {
            if let Some(&d) = other.coeffs.get(&m) {
                acc = acc + c * d;
            }
        }
        Ok(acc)
    }

    /// Squared Euclidean norm of the coefficient vector.
    pub fn norm_sq(&self) -> T {
        let mut acc = T::zero();
        for &c in self.coeffs.values() {
            acc = acc + c * c;
        }
        acc
    }

    /// Coordinates of a grade-1 multivector.
    pub fn to_vector(&self) -> Result<Vec<T>, ExteriorError> {
        if self.grade != 1 {
            return Err(ExteriorError::NotAVector { grade: self.grade });
        }
        let mut v = vec![T::zero(); self.dim];
        for (&m, &c) in &self.coeffs {
            v[m.trailing_zeros() as usize] = c;
        }
        Ok(v)
    }
}

/// Wedge a list of grade-1 factors together; empty input is the scalar 1.
pub fn wedge_vectors<T: Scalar>(
    dim: usize,
    vectors: &[Vec<T>],
) -> Result<MultiVector<T>, ExteriorError> {
    let mut acc = MultiVector::scalar(dim, T::one())?;
    for v in vectors {
        if v.len() != dim {
            return Err(ExteriorError::DimensionMismatch {
                left: dim,
                right: v.len(),
            });
        }
        acc = acc.wedge(&MultiVector::from_vector(v)?)?;
    }
    Ok(acc)
}

/// Norm `‖v₁∧…∧v_r‖` computed as `√det(G)` with `G` the Gram matrix of the
/// inputs. Agrees with the coefficient norm of the wedge product.
pub fn decomposable_norm(vectors: &[Vec<f64>]) -> Result<f64, ExteriorError> {
    if vectors.is_empty() {
        return Err(ExteriorError::EmptyVectorList);
    }
    let dim = vectors[0].len();
    check_dim(dim)?;
    if vectors.len() > dim {
        return Err(ExteriorError::GradeOverflow {
            left: vectors.len(),
            right: 0,
            dim,
        });
    }
    for v in vectors {
        if v.len() != dim {
            return Err(ExteriorError::DimensionMismatch {
                left: dim,
                right: v.len(),
            });
        }
    }
    let r = vectors.len();
    let mut gram = vec![0.0; r * r];
    for i in 0..r {
        for j in 0..r {
            gram[i * r + j] = vectors[i].iter().zip(&vectors[j]).map(|(a, b)| a * b).sum();
        }
    }
    // Gaussian elimination with partial pivoting; Gram determinants are >= 0
    // up to round-off.
    let mut det = 1.0;
    for col in 0..r {
        let pivot = (col..r)
            .max_by(|&a, &b| {
                gram[a * r + col]
                    .abs()
                    .partial_cmp(&gram[b * r + col].abs())
                    .unwrap()
            })
            .unwrap();
        if gram[pivot * r + col].abs() == 0.0 {
            return Ok(0.0);
        }
        if pivot != col {
            for j in 0..r {
                gram.swap(col * r + j, pivot * r + j);
            }
            det = -det;
        }
        let p = gram[col * r + col];
        det *= p;
        for row in col + 1..r {
            let f = gram[row * r + col] / p;
            for j in col..r {
                gram[row * r + j] -= f * gram[col * r + j];
            }
        }
    }
    Ok(det.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e(dim: usize, indices: &[usize]) -> MultiVector {
        MultiVector::basis(dim, indices).unwrap()
    }

    fn approx_eq(a: &MultiVector, b: &MultiVector, tol: f64) -> bool {
        if a.dim() != b.dim() || a.grade() != b.grade() {
            return false;
        }
        let diff = a.add(&b.scale(-1.0)).unwrap();
        diff.norm_sq().sqrt() <= tol
    }

    #[test]
    fn wedge_repeated_factor_is_zero() {
        let v = e(3, &[1]);
        assert!(v.wedge(&v).unwrap().is_zero());
    }

    #[test]
    fn wedge_antisymmetry_on_basis() {
        let a = e(3, &[2]).wedge(&e(3, &[1])).unwrap();
        let b = e(3, &[1]).wedge(&e(3, &[2])).unwrap().scale(-1.0);
        assert_eq!(a, b);
    }

    #[test]
    fn wedge_bilinearity() {
        // (2e1 + 3e2) ∧ e3 = 2 e13 + 3 e23
        let v = MultiVector::from_vector(&[2.0, 3.0, 0.0]).unwrap();
        let w = v.wedge(&e(3, &[3])).unwrap();
        assert_eq!(w.coefficient(&[1, 3]).unwrap(), 2.0);
        assert_eq!(w.coefficient(&[2, 3]).unwrap(), 3.0);
        assert_eq!(w.coefficient(&[1, 2]).unwrap(), 0.0);
    }

    #[test]
    fn wedge_grade_overflow_is_error() {
        let a = e(3, &[1, 2]);
        let b = e(3, &[2, 3]);
        assert!(matches!(
            a.wedge(&b),
            Err(ExteriorError::GradeOverflow { .. })
        ));
    }

    #[test]
    fn wedge_dimension_mismatch_is_error() {
        let a = e(3, &[1]);
        let b = e(4, &[1]);
        assert!(matches!(
            a.wedge(&b),
            Err(ExteriorError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn hodge_star_canonical_orientation() {
        // ⋆(e1∧e2) = e3 in R^3
        let s = e(3, &[1, 2]).hodge_star();
        assert_eq!(s, e(3, &[3]));
        // ⋆1 = volume form
        let one: MultiVector = MultiVector::scalar(4, 1.0).unwrap();
        assert_eq!(one.hodge_star(), MultiVector::volume(4).unwrap());
    }

    #[test]
    fn hodge_star_of_product_blade() {
        // ⋆(e3 ∧ 2e2) = -2 e1 in R^3; expected value fixed by brute-force
        // check of α∧⋆β = <α,β> vol over all basis pairs (see property below).
        let w = e(3, &[3]).wedge(&e(3, &[2]).scale(2.0)).unwrap();
        let s = w.hodge_star();
        assert_eq!(s, e(3, &[1]).scale(-2.0));
    }

    #[test]
    fn hodge_defining_identity_on_all_basis_pairs() {
        // α ∧ ⋆β = <α,β> e1∧…∧en, brute force over every basis pair.
        for dim in 1..=6usize {
            for grade in 0..=dim {
                let blades: Vec<Vec<usize>> = subsets(dim, grade);
                for a in &blades {
                    for b in &blades {
                        let alpha = e(dim, a);
                        let beta = e(dim, b);
                        let lhs = alpha.wedge(&beta.hodge_star()).unwrap();
                        let ip = alpha.inner(&beta).unwrap();
                        let rhs = MultiVector::volume(dim).unwrap().scale(ip);
                        assert_eq!(lhs, rhs, "failed for dim {dim} {a:?} {b:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn hodge_involution_sign_law() {
        // ⋆⋆ = (-1)^{r(n-r)} on every basis blade.
        for dim in 1..=6usize {
            for grade in 0..=dim {
                for indices in subsets(dim, grade) {
                    let blade = e(dim, &indices);
                    let twice = blade.hodge_star().hodge_star();
                    let sign = if (grade * (dim - grade)) % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    };
                    assert_eq!(twice, blade.scale(sign));
                }
            }
        }
    }

    #[test]
    fn reversed_orientation_flips_star_once() {
        let blade = e(3, &[1, 2]);
        assert_eq!(
            blade.hodge_star_with(Orientation::Reversed),
            blade.hodge_star().scale(-1.0)
        );
        // Applied twice the orientation sign cancels.
        let twice = blade
            .hodge_star_with(Orientation::Reversed)
            .hodge_star_with(Orientation::Reversed);
        assert_eq!(twice, blade.hodge_star().hodge_star());
    }

    #[test]
    fn decomposable_norm_examples() {
        // Orthonormal pair.
        let n = decomposable_norm(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert!((n - 1.0).abs() < 1e-15);
        // Gram determinant by hand: |(2,0,0)|^2 * |(0,0,1)|^2 - 0 = 4, norm 2.
        let n = decomposable_norm(&[vec![2.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert!((n - 2.0).abs() < 1e-14);
        // Linear dependence.
        let v = vec![0.3, -1.2, 0.5];
        let w: Vec<f64> = v.iter().map(|x| 2.0 * x).collect();
        let n = decomposable_norm(&[v, w]).unwrap();
        assert!(n.abs() < 1e-12);
        // Empty list is an error.
        assert!(matches!(
            decomposable_norm(&[]),
            Err(ExteriorError::EmptyVectorList)
        ));
    }

    fn subsets(dim: usize, grade: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for mask in 0u32..(1 << dim) {
            if mask.count_ones() as usize == grade {
                out.push(
                    (0..dim)
                        .filter(|b| mask & (1 << b) != 0)
                        .map(|b| b + 1)
                        .collect(),
                );
            }
        }
        out
    }

    /// Random multivector of the given grade with coefficients in [-2, 2].
    fn arb_multivector(dim: usize, grade: usize) -> impl Strategy<Value = MultiVector> {
        let blades = subsets(dim, grade);
        let len = blades.len();
        proptest::collection::vec(-2.0f64..2.0, len).prop_map(move |coeffs| {
            let terms: Vec<(Vec<usize>, f64)> =
                blades.iter().cloned().zip(coeffs.iter().copied()).collect();
            MultiVector::from_terms(dim, grade, &terms).unwrap()
        })
    }

    fn arb_triple() -> impl Strategy<Value = (MultiVector, MultiVector, MultiVector)> {
        (2usize..=6)
            .prop_flat_map(|n| {
                (Just(n), 0..=n, 0..=n, 0..=n)
                    .prop_filter("grades fit", |&(n, a, b, c)| a + b + c <= n)
            })
            .prop_flat_map(|(n, ga, gb, gc)| {
                (
                    arb_multivector(n, ga),
                    arb_multivector(n, gb),
                    arb_multivector(n, gc),
                )
            })
    }

    fn arb_pair(same_grade: bool) -> impl Strategy<Value = (MultiVector, MultiVector)> {
        (2usize..=6)
            .prop_flat_map(move |n| {
                (Just(n), 0..=n, 0..=n).prop_filter("grades fit", move |&(n, a, b)| {
                    if same_grade {
                        a == b
                    } else {
                        a + b <= n
                    }
                })
            })
            .prop_flat_map(|(n, ga, gb)| (arb_multivector(n, ga), arb_multivector(n, gb)))
    }

    proptest! {
        #[test]
        fn wedge_associativity((a, b, c) in arb_triple()) {
            let left = a.wedge(&b).unwrap().wedge(&c).unwrap();
            let right = a.wedge(&b.wedge(&c).unwrap()).unwrap();
            let scale = left.norm_sq().sqrt().max(1.0);
            prop_assert!(approx_eq(&left, &right, 1e-12 * scale));
        }

        #[test]
        fn wedge_graded_anticommutativity((a, b) in arb_pair(false)) {
            let ab = a.wedge(&b).unwrap();
            let sign = if (a.grade() * b.grade()) % 2 == 0 { 1.0 } else { -1.0 };
            let ba = b.wedge(&a).unwrap().scale(sign);
            let scale = ab.norm_sq().sqrt().max(1.0);
            prop_assert!(approx_eq(&ab, &ba, 1e-12 * scale));
        }

        #[test]
        fn star_identity_matches_inner_product((a, b) in arb_pair(true)) {
            let dim = a.dim();
            let vol_coeff = a
                .wedge(&b.hodge_star())
                .unwrap()
                .coefficient(&(1..=dim).collect::<Vec<_>>())
                .unwrap();
            let ip = a.inner(&b).unwrap();
            prop_assert!((vol_coeff - ip).abs() <= 1e-12 * ip.abs().max(1.0));
        }

        #[test]
        fn gram_norm_matches_wedge_coefficients(
            (dim, count) in (2usize..=6).prop_flat_map(|n| (Just(n), 1..=n)),
            raw in proptest::collection::vec(-2.0f64..2.0, 36),
        ) {
            let vectors: Vec<Vec<f64>> = (0..count)
                .map(|i| raw[i * dim..(i + 1) * dim].to_vec())
                .collect();
            let gram = decomposable_norm(&vectors).unwrap();
            let wedge = wedge_vectors(dim, &vectors).unwrap();
            let coeff = wedge.norm_sq().sqrt();
            prop_assert!((gram * gram - coeff * coeff).abs() <= 1e-10 * (coeff * coeff).max(1.0));
        }
    }
}
