//! Codimension-one dissipative systems: construction of the control field
//! X₀ and the full field from conserved/dissipated data, Lie-derivative
//! residuals, rate templates, and the regularity report for the multiplier
//! hypotheses.
//!
//! For an n-dimensional system with k conserved fields I and p dissipated
//! fields D (k + p = n - 1), writing w = ∇D₁∧…∧∇D_p∧∇I₁∧…∧∇I_k:
//!
//! ```text
//! X₀ = ‖w‖⁻² Σᵢ (-1)^{n-i} hᵢ Dᵢ Θᵢ,
//! Θᵢ = ⋆[ (∧_{j≠i} ∇D_j) ∧ (∧_l ∇I_l) ∧ ⋆w ],
//! X  = X₀ + ν ⋆w            (synthesis mode)
//! X  = X_base + X₀          (perturbation mode)
//! ```
//!
//! which satisfies L_X I_l = 0 and L_X D_i = hᵢ Dᵢ.

use crate::dual::{Dual, Scalar};
use crate::expr::{EvalError, ParseError, ScalarField};
use crate::exterior::{ExteriorError, MultiVector, Orientation};
use crate::field::{jacobian_from_dual, FieldError, VectorField};
use crate::linalg::Mat;
use crate::orbit::PeriodicOrbit;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SystemError {
    #[error("codimension violated: k={conserved} conserved + p={dissipated} dissipated must equal n-1={expected}")]
    Codimension {
        conserved: usize,
        dissipated: usize,
        expected: usize,
    },
    #[error("{rates} rates for {dissipated} dissipated fields")]
    RateCount { rates: usize, dissipated: usize },
    #[error("{role} field has arity {found}, system dimension is {expected}")]
    Arity {
        role: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("base field has {found} components, system dimension is {expected}")]
    BaseFieldLen { expected: usize, found: usize },
    #[error("rescale function is not allowed together with a base field")]
    RescaleWithBaseField,
    #[error("dissipation index {index} out of range 1..={count}")]
    RateIndex { index: usize, count: usize },
    #[error("rate template requires c > 0, got {c}")]
    NonPositiveTemplateConstant { c: f64 },
    #[error("singular point: gradient wedge norm^2 = {norm_sq:e} <= {epsilon:e}")]
    SingularPoint { norm_sq: f64, epsilon: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
    #[error("failed to parse {role} expression `{text}`: {source}")]
    Parse {
        role: &'static str,
        text: String,
        source: ParseError,
    },
}

impl From<SystemError> for FieldError {
    fn from(e: SystemError) -> FieldError {
        match e {
            SystemError::Eval(inner) => FieldError::Eval(inner),
            SystemError::SingularPoint { norm_sq, epsilon } => {
                FieldError::SingularPoint { norm_sq, epsilon }
            }
            other => FieldError::Internal(other.to_string()),
        }
    }
}

/// Default absolute threshold on ‖w‖² below which a point is reported as
/// singular instead of amplifying round-off through the ‖w‖⁻² factor.
pub const DEFAULT_SINGULAR_EPS: f64 = 1e-12;

/// String form of a system, the unit of (de)serialization for files and
/// builtins. Expressions use the `expr` grammar.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemDefinition {
    pub dim: usize,
    pub conserved: Vec<String>,
    pub dissipated: Vec<String>,
    pub rates: Vec<String>,
    pub rescale: Option<String>,
    pub base_field: Option<Vec<String>>,
    pub manifold_label: Option<String>,
}

impl SystemDefinition {
    pub fn build(&self) -> Result<DissipativeSystem, SystemError> {
        let parse_all = |texts: &[String], role: &'static str| {
            texts
                .iter()
                .map(|t| {
                    ScalarField::parse(t, self.dim).map_err(|source| SystemError::Parse {
                        role,
                        text: t.clone(),
                        source,
                    })
                })
                .collect::<Result<Vec<_>, _>>()
        };
        let conserved = parse_all(&self.conserved, "conserved")?;
        let dissipated = parse_all(&self.dissipated, "dissipated")?;
        let rates = parse_all(&self.rates, "rate")?;
        let rescale = self
            .rescale
            .as_ref()
            .map(|t| {
                ScalarField::parse(t, self.dim).map_err(|source| SystemError::Parse {
                    role: "rescale",
                    text: t.clone(),
                    source,
                })
            })
            .transpose()?;
        let base_field = self
            .base_field
            .as_ref()
            .map(|texts| parse_all(texts, "base field"))
            .transpose()?;
        let mut sys =
            DissipativeSystem::new(self.dim, conserved, dissipated, rates, rescale, base_field)?;
        sys.manifold_label = self.manifold_label.clone();
        Ok(sys)
    }
}

/// Dimension, conserved fields I₁..I_k, dissipated fields D₁..D_p, rates
/// h₁..h_p, optional rescale ν, optional base field (perturbation mode).
/// Immutable after construction; all evaluations are pure.
#[derive(Debug, Clone)]
pub struct DissipativeSystem {
    dim: usize,
    conserved: Vec<ScalarField>,
    dissipated: Vec<ScalarField>,
    rates: Vec<ScalarField>,
    rescale: Option<ScalarField>,
    base_field: Option<Vec<ScalarField>>,
    singular_eps: f64,
    manifold_label: Option<String>,
}

impl DissipativeSystem {
    pub fn new(
        dim: usize,
        conserved: Vec<ScalarField>,
        dissipated: Vec<ScalarField>,
        rates: Vec<ScalarField>,
        rescale: Option<ScalarField>,
        base_field: Option<Vec<ScalarField>>,
    ) -> Result<Self, SystemError> {
        if conserved.len() + dissipated.len() + 1 != dim {
            return Err(SystemError::Codimension {
                conserved: conserved.len(),
                dissipated: dissipated.len(),
                expected: dim.saturating_sub(1),
            });
        }
        if rates.len() != dissipated.len() {
            return Err(SystemError::RateCount {
                rates: rates.len(),
                dissipated: dissipated.len(),
            });
        }
        let check = |fields: &[ScalarField], role: &'static str| {
            for f in fields {
                if f.arity() != dim {
                    return Err(SystemError::Arity {
                        role,
                        expected: dim,
                        found: f.arity(),
                    });
                }
            }
            Ok(())
        };
        check(&conserved, "conserved")?;
        check(&dissipated, "dissipated")?;
        check(&rates, "rate")?;
        if let Some(nu) = &rescale {
            check(std::slice::from_ref(nu), "rescale")?;
        }
        if let Some(base) = &base_field {
            if base.len() != dim {
                return Err(SystemError::BaseFieldLen {
                    expected: dim,
                    found: base.len(),
                });
            }
            check(base, "base field")?;
            if rescale.is_some() {
                return Err(SystemError::RescaleWithBaseField);
            }
        }
        Ok(DissipativeSystem {
            dim,
            conserved,
            dissipated,
            rates,
            rescale,
            base_field,
            singular_eps: DEFAULT_SINGULAR_EPS,
            manifold_label: None,
        })
    }

    pub fn with_singular_eps(mut self, eps: f64) -> Self {
        self.singular_eps = eps;
        self
    }

    pub fn with_manifold_label(mut self, label: impl Into<String>) -> Self {
        self.manifold_label = Some(label.into());
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn conserved(&self) -> &[ScalarField] {
        &self.conserved
    }

    pub fn dissipated(&self) -> &[ScalarField] {
        &self.dissipated
    }

    pub fn rates(&self) -> &[ScalarField] {
        &self.rates
    }

    pub fn rescale(&self) -> Option<&ScalarField> {
        self.rescale.as_ref()
    }

    pub fn base_field(&self) -> Option<&[ScalarField]> {
        self.base_field.as_deref()
    }

    pub fn is_perturbation_mode(&self) -> bool {
        self.base_field.is_some()
    }

    pub fn singular_eps(&self) -> f64 {
        self.singular_eps
    }

    /// Human-readable description of the invariant manifold I⁻¹({0}).
    pub fn manifold_description(&self) -> String {
        match (&self.manifold_label, self.conserved.is_empty()) {
            (Some(label), _) => format!("I^-1({{0}}) {label}"),
            (None, true) => "whole space (no conserved fields)".to_string(),
            (None, false) => {
                let eqs: Vec<String> = self.conserved.iter().map(|f| format!("{f} = 0")).collect();
                format!("I^-1({{0}}): {}", eqs.join(", "))
            }
        }
    }

    /// w = ∇D₁∧…∧∇D_p∧∇I₁∧…∧∇I_k (D-gradients first).
    fn gradient_wedge<T: Scalar>(
        &self,
        x: &[T],
        skip_dissipated: Option<usize>,
    ) -> Result<MultiVector<T>, SystemError> {
        let mut acc = MultiVector::scalar(self.dim, T::one())?;
        for (j, d) in self.dissipated.iter().enumerate() {
            if Some(j) == skip_dissipated {
                continue;
            }
            let grad = d.gradient_scalar(x)?;
            acc = acc.wedge(&MultiVector::from_vector(&grad)?)?;
        }
        for i in &self.conserved {
            let grad = i.gradient_scalar(x)?;
            acc = acc.wedge(&MultiVector::from_vector(&grad)?)?;
        }
        Ok(acc)
    }

    /// ⋆(∇D₁∧…∧∇I_k): solves the homogeneous system (everything conserved).
    /// The zero vector signals gradient dependence at the point.
    pub fn homogeneous_field<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>, SystemError> {
        self.homogeneous_field_oriented(x, Orientation::Standard)
    }

    pub(crate) fn homogeneous_field_oriented<T: Scalar>(
        &self,
        x: &[T],
        orientation: Orientation,
    ) -> Result<Vec<T>, SystemError> {
        self.check_point_len(x)?;
        let w = self.gradient_wedge(x, None)?;
        Ok(w.hodge_star_with(orientation).to_vector()?)
    }

    /// Θᵢ = ⋆[(∧_{j≠i}∇D_j) ∧ (∧∇I_l) ∧ ⋆w], 1-based dissipation index.
    pub fn theta<T: Scalar>(&self, index: usize, x: &[T]) -> Result<Vec<T>, SystemError> {
        self.theta_oriented(index, x, Orientation::Standard)
    }

    pub(crate) fn theta_oriented<T: Scalar>(
        &self,
        index: usize,
        x: &[T],
        orientation: Orientation,
    ) -> Result<Vec<T>, SystemError> {
        self.check_point_len(x)?;
        if index == 0 || index > self.dissipated.len() {
            return Err(SystemError::RateIndex {
                index,
                count: self.dissipated.len(),
            });
        }
        let w = self.gradient_wedge(x, None)?;
        let star_w = w.hodge_star_with(orientation);
        let partial = self.gradient_wedge(x, Some(index - 1))?;
        let inner = partial.wedge(&star_w)?;
        Ok(inner.hodge_star_with(orientation).to_vector()?)
    }

    /// The control field X₀; zero on the common zero set of the dissipated
    /// fields and singular where the gradients degenerate.
    pub fn control_field_x0<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>, SystemError> {
        self.control_field_x0_oriented(x, Orientation::Standard)
    }

    pub(crate) fn control_field_x0_oriented<T: Scalar>(
        &self,
        x: &[T],
        orientation: Orientation,
    ) -> Result<Vec<T>, SystemError> {
        self.check_point_len(x)?;
        let p = self.dissipated.len();
        if p == 0 {
            return Ok(vec![T::zero(); self.dim]);
        }
        let w = self.gradient_wedge(x, None)?;
        let norm_sq = w.norm_sq();
        if norm_sq.value() <= self.singular_eps {
            return Err(SystemError::SingularPoint {
                norm_sq: norm_sq.value(),
                epsilon: self.singular_eps,
            });
        }
        let star_w = w.hodge_star_with(orientation);
        let mut acc = vec![T::zero(); self.dim];
        for i in 1..=p {
            let sign = if (self.dim - i).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            let h = self.rates[i - 1].eval_scalar(x)?;
            let d = self.dissipated[i - 1].eval_scalar(x)?;
            let partial = self.gradient_wedge(x, Some(i - 1))?;
            let theta = partial.wedge(&star_w)?.hodge_star_with(orientation);
            let factor = T::from_f64(sign) * h * d;
            for (out, t) in acc.iter_mut().zip(theta.to_vector()?) {
                *out = *out + factor * t;
            }
        }
        for out in &mut acc {
            *out = *out / norm_sq;
        }
        Ok(acc)
    }

    /// Synthesis mode: X₀ + ν·⋆w. Perturbation mode: X_base + X₀.
    pub fn full_field<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>, SystemError> {
        self.check_point_len(x)?;
        let x0 = self.control_field_x0(x)?;
        match &self.base_field {
            Some(base) => {
                let mut out = Vec::with_capacity(self.dim);
                for (component, x0_i) in base.iter().zip(&x0) {
                    out.push(component.eval_scalar(x)? + *x0_i);
                }
                Ok(out)
            }
            None => match &self.rescale {
                Some(nu) => {
                    let scale = nu.eval_scalar(x)?;
                    let hom = self.homogeneous_field(x)?;
                    Ok(x0.iter().zip(&hom).map(|(a, b)| *a + scale * *b).collect())
                }
                None => Ok(x0),
            },
        }
    }

    /// View the system as a vector field with exact dual-number Jacobians.
    pub fn as_field(&self) -> SynthesizedField<'_> {
        SynthesizedField { system: self }
    }

    fn check_point_len<T>(&self, x: &[T]) -> Result<(), SystemError> {
        if x.len() != self.dim {
            return Err(SystemError::Eval(EvalError::ArityMismatch {
                expected: self.dim,
                found: x.len(),
            }));
        }
        Ok(())
    }
}

/// Lie-derivative residuals of an arbitrary field against the system data:
/// (⟨X,∇I₁⟩, …, ⟨X,∇I_k⟩, ⟨X,∇D₁⟩-h₁D₁, …, ⟨X,∇D_p⟩-h_pD_p).
/// All entries vanish for fields produced by `full_field`.
pub fn lie_residuals(
    field: &dyn VectorField,
    sys: &DissipativeSystem,
    x: &[f64],
) -> Result<Vec<f64>, FieldError> {
    let value = field.eval(x)?;
    let mut residuals = Vec::with_capacity(sys.conserved.len() + sys.dissipated.len());
    for i in &sys.conserved {
        let grad = i.gradient(x)?;
        residuals.push(dot(&value, &grad));
    }
    for (d, h) in sys.dissipated.iter().zip(&sys.rates) {
        let grad = d.gradient(x)?;
        residuals.push(dot(&value, &grad) - h.eval(x)? * d.eval(x)?);
    }
    Ok(residuals)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateKind {
    /// -(ψ² + c): the orbit integral is at most -T·c.
    Stabilizing,
    /// ψ² + c: the orbit integral is at least T·c.
    Destabilizing,
}

/// Rate function template with a guaranteed integral sign over any orbit.
pub fn rate_template(
    kind: RateKind,
    psi: &ScalarField,
    c: f64,
) -> Result<ScalarField, SystemError> {
    if c <= 0.0 {
        return Err(SystemError::NonPositiveTemplateConstant { c });
    }
    Ok(match kind {
        RateKind::Stabilizing => psi.negated_square_plus(c),
        RateKind::Destabilizing => psi.square_plus(c),
    })
}

/// Adapter exposing a [`DissipativeSystem`] as a [`VectorField`] whose
/// Jacobian is computed with nested dual numbers through the synthesis.
pub struct SynthesizedField<'a> {
    system: &'a DissipativeSystem,
}

impl VectorField for SynthesizedField<'_> {
    fn dim(&self) -> usize {
        self.system.dim
    }

    fn eval(&self, x: &[f64]) -> Result<Vec<f64>, FieldError> {
        self.system.full_field(x).map_err(FieldError::from)
    }

    fn jacobian(&self, x: &[f64]) -> Result<Mat, FieldError> {
        jacobian_from_dual(self.system.dim, x, |seeded: &[Dual]| {
            self.system.full_field(seeded).map_err(FieldError::from)
        })
    }
}

#[derive(Debug, Clone)]
pub struct RegularityOptions {
    /// Max |I_j(γ)| and |D_i(γ)| allowed for orbit membership in ID⁻¹({0}).
    pub membership_tol: f64,
    /// Minimum smallest singular value of the full stack (gradients + X).
    pub independence_min: f64,
    /// Minimum smallest singular value of the gradient-only stack.
    pub regular_value_min: f64,
}

impl Default for RegularityOptions {
    fn default() -> Self {
        RegularityOptions {
            membership_tol: 1e-8,
            independence_min: 1e-6,
            regular_value_min: 1e-6,
        }
    }
}

/// Sampled verification of the multiplier-formula hypotheses along an orbit.
#[derive(Debug, Clone)]
pub struct RegularityReport {
    pub samples: usize,
    /// max over samples of max_j |I_j(γ(t))|.
    pub max_conserved: f64,
    /// max over samples of max_i |D_i(γ(t))|.
    pub max_dissipated: f64,
    /// min over samples of σ_min of the n×n stack (I-grads, D-grads, X).
    pub independence_margin: f64,
    /// min over samples of σ_min of the (n-1)×n gradient stack.
    pub regular_value_margin: f64,
    /// min over samples of σ_min of the conserved-only gradient stack;
    /// `None` when there are no conserved fields (vacuously regular).
    pub conserved_regular_value_margin: Option<f64>,
    pub options: RegularityOptions,
    pub pass: bool,
    pub failures: Vec<String>,
}

impl RegularityReport {
    /// Whether 0 is (empirically) a regular value of the conserved-only map,
    /// the extra hypothesis of the stable classification branch.
    pub fn conserved_regular_value(&self) -> bool {
        match self.conserved_regular_value_margin {
            None => true,
            Some(margin) => margin >= self.options.regular_value_min,
        }
    }
}

/// Evaluate membership and rank margins at `samples` points of the orbit.
/// Rows are stacked as I-gradients, then D-gradients, then X.
pub fn regularity_report(
    sys: &DissipativeSystem,
    orbit: &PeriodicOrbit,
    samples: usize,
    options: &RegularityOptions,
) -> Result<RegularityReport, SystemError> {
    assert!(samples >= 2, "need at least two samples");
    let n = sys.dim;
    let k = sys.conserved.len();
    let mut report = RegularityReport {
        samples,
        max_conserved: 0.0,
        max_dissipated: 0.0,
        independence_margin: f64::INFINITY,
        regular_value_margin: f64::INFINITY,
        conserved_regular_value_margin: (k > 0).then_some(f64::INFINITY),
        options: options.clone(),
        pass: true,
        failures: Vec::new(),
    };
    let period = orbit.period();
    for s in 0..samples {
        let t = period * s as f64 / samples as f64;
        let point = orbit.at(t);
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
        for f in &sys.conserved {
            report.max_conserved = report.max_conserved.max(f.eval(&point)?.abs());
            rows.push(f.gradient(&point)?);
        }
        for f in &sys.dissipated {
            report.max_dissipated = report.max_dissipated.max(f.eval(&point)?.abs());
            rows.push(f.gradient(&point)?);
        }
        if k > 0 {
            let sv = Mat::from_rows(&rows[..k]).smallest_singular_value();
            let margin = report.conserved_regular_value_margin.unwrap();
            report.conserved_regular_value_margin = Some(margin.min(sv));
        }
        let sv = Mat::from_rows(&rows).smallest_singular_value();
        report.regular_value_margin = report.regular_value_margin.min(sv);
        match sys.full_field(&point) {
            Ok(x) => {
                rows.push(x);
                let sv = Mat::from_rows(&rows).smallest_singular_value();
                report.independence_margin = report.independence_margin.min(sv);
            }
            Err(SystemError::SingularPoint { .. }) => {
                // Degenerate gradients at an orbit sample: the stack cannot
                // have full rank there.
                report.independence_margin = 0.0;
            }
            Err(e) => return Err(e),
        }
    }
    if report.max_conserved > options.membership_tol
        || report.max_dissipated > options.membership_tol
    {
        report.pass = false;
        report.failures.push(format!(
            "orbit leaves ID^-1({{0}}): max level residual {:.3e} > {:.3e}",
            report.max_conserved.max(report.max_dissipated),
            options.membership_tol
        ));
    }
    if report.independence_margin < options.independence_min {
        report.pass = false;
        report.failures.push(format!(
            "gradients and X nearly dependent: margin {:.3e} < {:.3e}",
            report.independence_margin, options.independence_min
        ));
    }
    if report.regular_value_margin < options.regular_value_min {
        report.pass = false;
        report.failures.push(format!(
            "0 not a regular value of ID: margin {:.3e} < {:.3e}",
            report.regular_value_margin, options.regular_value_min
        ));
    }
    Ok(report)
}
