//! Vector fields as evaluation + exact Jacobian.

use crate::dual::{seed_point, Dual, Scalar};
use crate::expr::{EvalError, ScalarField};
use crate::linalg::Mat;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FieldError {
    #[error("expression evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("singular point: gradient wedge norm^2 = {norm_sq:e} <= {epsilon:e}")]
    SingularPoint { norm_sq: f64, epsilon: f64 },
    #[error("point has {found} coordinates, field expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("internal evaluation error: {0}")]
    Internal(String),
}

/// An autonomous vector field on ℝⁿ with an exact Jacobian.
pub trait VectorField {
    fn dim(&self) -> usize;

    /// Field value at `x`.
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>, FieldError>;

    /// Jacobian matrix DX(x), entry (i, j) = ∂Xᵢ/∂xⱼ.
    fn jacobian(&self, x: &[f64]) -> Result<Mat, FieldError>;

    /// Divergence tr DX(x).
    fn divergence(&self, x: &[f64]) -> Result<f64, FieldError> {
        Ok(self.jacobian(x)?.trace())
    }
}

/// Vector field whose components are parsed expressions; Jacobian rows come
/// from the components' dual-number gradients.
pub struct ExprVectorField {
    components: Vec<ScalarField>,
}

impl ExprVectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self, FieldError> {
        let n = components.len();
        for c in &components {
            if c.arity() != n {
                return Err(FieldError::DimensionMismatch {
                    expected: n,
                    found: c.arity(),
                });
            }
        }
        Ok(ExprVectorField { components })
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    /// Generic evaluation; dual inputs propagate derivatives.
    pub fn eval_scalar<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>, FieldError> {
        self.components
            .iter()
            .map(|c| c.eval_scalar(x).map_err(FieldError::from))
            .collect()
    }
}

impl VectorField for ExprVectorField {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn eval(&self, x: &[f64]) -> Result<Vec<f64>, FieldError> {
        self.eval_scalar(x)
    }

    fn jacobian(&self, x: &[f64]) -> Result<Mat, FieldError> {
        let n = self.dim();
        let mut jac = Mat::zeros(n, n);
        for (i, c) in self.components.iter().enumerate() {
            let row = c.gradient(x)?;
            for j in 0..n {
                jac[(i, j)] = row[j];
            }
        }
        Ok(jac)
    }
}

/// Field defined by closures; used where a hand-written Jacobian is the
/// reference (tests, linear systems).
pub struct ClosureField<F, J>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, FieldError>,
    J: Fn(&[f64]) -> Result<Mat, FieldError>,
{
    dim: usize,
    eval: F,
    jac: J,
}

impl<F, J> ClosureField<F, J>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, FieldError>,
    J: Fn(&[f64]) -> Result<Mat, FieldError>,
{
    pub fn new(dim: usize, eval: F, jac: J) -> Self {
        ClosureField { dim, eval, jac }
    }
}

impl<F, J> VectorField for ClosureField<F, J>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, FieldError>,
    J: Fn(&[f64]) -> Result<Mat, FieldError>,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Result<Vec<f64>, FieldError> {
        (self.eval)(x)
    }

    fn jacobian(&self, x: &[f64]) -> Result<Mat, FieldError> {
        (self.jac)(x)
    }
}

/// Jacobian by forward passes of a dual-generic evaluator: column j is the
/// derivative part of one evaluation with coordinate j seeded.
pub fn jacobian_from_dual<E>(n: usize, x: &[f64], eval: E) -> Result<Mat, FieldError>
where
    E: Fn(&[Dual]) -> Result<Vec<Dual>, FieldError>,
{
    let mut jac = Mat::zeros(n, n);
    for j in 0..n {
        let seeded = seed_point(x, j);
        let out = eval(&seeded)?;
        for i in 0..n {
            jac[(i, j)] = out[i].du;
        }
    }
    Ok(jac)
}
