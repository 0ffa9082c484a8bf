//! Characteristic (Floquet) multipliers of periodic orbits, three ways:
//!
//! * `monodromy` integrates the full variational equation
//!   du/dt = DX(γ(t))u with exact Jacobians and takes eigenvalues of u(T);
//! * `reduced_monodromy` propagates the (n-1)-dimensional level-set system
//!   dv/dt = k(γ(t))v with k = blockdiag(0, diag(h₁..h_p)), either
//!   numerically or in the closed block-diagonal form of its solution;
//! * `analytic_multipliers` assembles the closed-form multiset
//!   {1 (k+1 times), exp(∫h₁), …, exp(∫h_p)}.
//!
//! `classify` turns the signs of the rate integrals into a stability
//! verdict for the orbit restricted to the invariant manifold I⁻¹({0}).

use num_complex::Complex64;

use crate::field::{FieldError, VectorField};
use crate::linalg::{self, Mat};
use crate::ode::{integrate_final, OdeError, OdeOptions};
use crate::orbit::{rate_integral, verify_periodicity, OrbitError, PeriodicOrbit};
use crate::system::{regularity_report, DissipativeSystem, RegularityOptions, RegularityReport};

pub use crate::linalg::eigenvalues;

#[derive(Debug, thiserror::Error)]
pub enum FloquetError {
    #[error("orbit dimension {orbit} does not match system dimension {system}")]
    DimensionMismatch { orbit: usize, system: usize },
    #[error("orbit failed periodicity verification: closure {closure:e}, residual {residual:e} (tol {tol:e})")]
    OrbitNotVerified {
        closure: f64,
        residual: f64,
        tol: f64,
    },
    #[error("multiplier-formula hypotheses failed: {reasons:?}")]
    HypothesisFailed {
        report: Box<RegularityReport>,
        reasons: Vec<String>,
    },
    #[error(transparent)]
    Integration(#[from] OdeError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Eigen(#[from] linalg::LinalgError),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    System(#[from] crate::system::SystemError),
}

/// Monodromy matrix u(T): the state and the n×n variational matrix are
/// integrated as one augmented system so the Jacobian is evaluated on the
/// computed trajectory.
pub fn monodromy(
    field: &dyn VectorField,
    orbit: &PeriodicOrbit,
    opts: &OdeOptions,
) -> Result<Mat, FloquetError> {
    let n = field.dim();
    if orbit.dim() != n {
        return Err(FloquetError::DimensionMismatch {
            orbit: orbit.dim(),
            system: n,
        });
    }
    let mut y0 = orbit.at(0.0);
    y0.extend(Mat::identity(n).as_slice());
    let (y_final, _stats) = integrate_final(
        |_t, y, dy| {
            let state = &y[..n];
            let v = field.eval(state)?;
            dy[..n].copy_from_slice(&v);
            let jac = field.jacobian(state)?;
            // du/dt = J u, with u stored row-major after the state.
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for l in 0..n {
                        acc += jac[(i, l)] * y[n + l * n + j];
                    }
                    dy[n + i * n + j] = acc;
                }
            }
            Ok(())
        },
        0.0,
        &y0,
        orbit.period(),
        opts,
    )?;
    let mut u = Mat::zeros(n, n);
    u.as_mut_slice().copy_from_slice(&y_final[n..]);
    Ok(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReducedMode {
    /// Closed-form block solution diag(I_k, diag(exp ∫hᵢ)).
    Analytic,
    /// Numerical integration of dv/dt = k(γ(t)) v.
    Numeric,
}

/// Fundamental solution v(T) of the reduced (n-1)-dimensional system.
pub fn reduced_monodromy(
    sys: &DissipativeSystem,
    orbit: &PeriodicOrbit,
    mode: ReducedMode,
    panels: usize,
    opts: &OdeOptions,
) -> Result<Mat, FloquetError> {
    let k = sys.conserved().len();
    let p = sys.dissipated().len();
    let m = k + p;
    match mode {
        ReducedMode::Analytic => {
            let mut v = Mat::identity(m);
            for (i, rate) in sys.rates().iter().enumerate() {
                let integral = rate_integral(rate, orbit, panels)?;
                v[(k + i, k + i)] = integral.value.exp();
            }
            Ok(v)
        }
        ReducedMode::Numeric => {
            if m == 0 {
                return Ok(Mat::identity(0));
            }
            let y0: Vec<f64> = Mat::identity(m).as_slice().to_vec();
            let rates = sys.rates().to_vec();
            let (y_final, _) = integrate_final(
                |t, y, dy| {
                    let point = orbit.at(t);
                    // Rows 0..k have zero coefficient; row k+i scales by
                    // h_i along the orbit.
                    for entry in dy[..k * m].iter_mut() {
                        *entry = 0.0;
                    }
                    for (i, rate) in rates.iter().enumerate() {
                        let h = rate.eval(&point).map_err(FieldError::from)?;
                        let row = k + i;
                        for j in 0..m {
                            dy[row * m + j] = h * y[row * m + j];
                        }
                    }
                    Ok(())
                },
                0.0,
                &y0,
                orbit.period(),
                opts,
            )?;
            let mut v = Mat::zeros(m, m);
            v.as_mut_slice().copy_from_slice(&y_final);
            Ok(v)
        }
    }
}

/// An analytic multiplier matched to its nearest numeric eigenvalue.
#[derive(Debug, Clone, Copy)]
pub struct MultiplierPair {
    pub analytic: Complex64,
    pub numeric: Complex64,
    pub gap: f64,
}

/// Multiplier multiset with provenance and the exponent integrals.
#[derive(Debug, Clone)]
pub struct MultiplierReport {
    pub conserved_count: usize,
    pub dissipated_count: usize,
    pub period: f64,
    /// {1 (k+1 times), exp(∫h₁), …, exp(∫h_p)} in that order.
    pub analytic: Vec<Complex64>,
    /// ∫₀ᵀ hᵢ(γ(s)) ds.
    pub integrals: Vec<f64>,
    /// Richardson error estimates for the integrals.
    pub integral_errors: Vec<f64>,
    /// Eigenvalues of the full monodromy u(T), when computed.
    pub numeric: Vec<Complex64>,
    /// Eigenvalues of the reduced v(T) (numeric mode), when computed.
    pub reduced: Vec<Complex64>,
    /// Greedy minimal-gap matching of analytic to numeric values.
    pub pairing: Vec<MultiplierPair>,
    /// How many numeric eigenvalues sit within `unit_tol` of 1.
    pub unit_cluster_count: Option<usize>,
    pub unit_tol: f64,
    /// Absolute floor added to the 10x-quadrature-error sign margin.
    pub margin_floor: f64,
}

impl MultiplierReport {
    pub fn max_pairing_gap(&self) -> Option<f64> {
        self.pairing
            .iter()
            .map(|p| p.gap)
            .fold(None, |acc, g| Some(acc.map_or(g, |a: f64| a.max(g))))
    }

    /// Sign margin for integral i: max(10 × quadrature error, floor).
    pub fn sign_margin(&self, i: usize) -> f64 {
        (10.0 * self.integral_errors[i]).max(self.margin_floor)
    }
}

#[derive(Debug, Clone)]
pub struct MultiplierOptions {
    /// Samples for the regularity and periodicity pre-checks.
    pub samples: usize,
    /// Simpson panels for the rate integrals.
    pub panels: usize,
    /// Tolerance for the orbit/field residual check.
    pub orbit_tol: f64,
    /// Also integrate the full and reduced monodromies.
    pub attach_numeric: bool,
    pub ode: OdeOptions,
    pub regularity: RegularityOptions,
    /// Eigenvalues within this distance of 1 count as the unit cluster.
    pub unit_tol: f64,
    pub margin_floor: f64,
}

impl Default for MultiplierOptions {
    fn default() -> Self {
        MultiplierOptions {
            samples: 64,
            panels: 256,
            orbit_tol: 1e-7,
            attach_numeric: true,
            ode: OdeOptions::default(),
            regularity: RegularityOptions::default(),
            unit_tol: 1e-4,
            margin_floor: 1e-12,
        }
    }
}

/// Closed-form multipliers of the orbit, with hypothesis checks, and
/// optionally the numeric spectra and the analytic/numeric pairing.
pub fn analytic_multipliers(
    sys: &DissipativeSystem,
    orbit: &PeriodicOrbit,
    opts: &MultiplierOptions,
) -> Result<MultiplierReport, FloquetError> {
    let field = sys.as_field();
    let periodicity = verify_periodicity(orbit, &field, opts.samples, opts.orbit_tol)?;
    if !periodicity.pass {
        return Err(FloquetError::OrbitNotVerified {
            closure: periodicity.closure_error,
            residual: periodicity.max_residual,
            tol: opts.orbit_tol,
        });
    }
    let regularity = regularity_report(sys, orbit, opts.samples, &opts.regularity)?;
    if !regularity.pass {
        let reasons = regularity.failures.clone();
        return Err(FloquetError::HypothesisFailed {
            report: Box::new(regularity),
            reasons,
        });
    }

    let k = sys.conserved().len();
    let p = sys.dissipated().len();
    let mut integrals = Vec::with_capacity(p);
    let mut integral_errors = Vec::with_capacity(p);
    let mut analytic = vec![Complex64::new(1.0, 0.0); k + 1];
    for rate in sys.rates() {
        let q = rate_integral(rate, orbit, opts.panels)?;
        integrals.push(q.value);
        integral_errors.push(q.error_estimate);
        analytic.push(Complex64::new(q.value.exp(), 0.0));
    }

    let mut report = MultiplierReport {
        conserved_count: k,
        dissipated_count: p,
        period: orbit.period(),
        analytic,
        integrals,
        integral_errors,
        numeric: Vec::new(),
        reduced: Vec::new(),
        pairing: Vec::new(),
        unit_cluster_count: None,
        unit_tol: opts.unit_tol,
        margin_floor: opts.margin_floor,
    };

    if opts.attach_numeric {
        let u = monodromy(&field, orbit, &opts.ode)?;
        report.numeric = eigenvalues(&u)?;
        let v = reduced_monodromy(sys, orbit, ReducedMode::Numeric, opts.panels, &opts.ode)?;
        report.reduced = eigenvalues(&v)?;
        report.pairing = pair_spectra(&report.analytic, &report.numeric);
        report.unit_cluster_count = Some(
            report
                .numeric
                .iter()
                .filter(|e| (*e - Complex64::new(1.0, 0.0)).norm() <= opts.unit_tol)
                .count(),
        );
    }
    Ok(report)
}

/// Greedy minimal-absolute-gap matching between two small spectra.
pub fn pair_spectra(analytic: &[Complex64], numeric: &[Complex64]) -> Vec<MultiplierPair> {
    let mut pairs = Vec::with_capacity(analytic.len());
    let mut available: Vec<Complex64> = numeric.to_vec();
    let mut remaining: Vec<Complex64> = analytic.to_vec();
    while !remaining.is_empty() && !available.is_empty() {
        let mut best = (0usize, 0usize, f64::INFINITY);
        for (i, a) in remaining.iter().enumerate() {
            for (j, n) in available.iter().enumerate() {
                let gap = (a - n).norm();
                if gap < best.2 {
                    best = (i, j, gap);
                }
            }
        }
        let (i, j, gap) = best;
        pairs.push(MultiplierPair {
            analytic: remaining.remove(i),
            numeric: available.remove(j),
            gap,
        });
    }
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// All rate integrals negative beyond margin and 0 a regular value of
    /// the conserved map: orbitally phase asymptotically stable for
    /// perturbations along I⁻¹({0}).
    StableOnManifold,
    /// Some rate integral positive beyond margin.
    Unstable,
    /// Signs not resolvable beyond the margin (includes the completely
    /// integrable case where every multiplier is 1).
    Inconclusive,
}

#[derive(Debug, Clone)]
pub enum Witness {
    /// 1-based index and value of a positive integral.
    PositiveIntegral { index: usize, integral: f64 },
    /// All integrals, each negative beyond its margin.
    NegativeIntegrals { integrals: Vec<f64> },
    /// Why no branch applied.
    None { reason: String },
}

#[derive(Debug, Clone)]
pub struct StabilityVerdict {
    pub outcome: Outcome,
    pub witness: Witness,
    /// Description of the invariant manifold I⁻¹({0}).
    pub manifold: String,
}

/// Classification from the signs of the rate integrals. The unstable branch
/// needs no regularity of the conserved-only map; the stable branch does.
pub fn classify(
    report: &MultiplierReport,
    regular_value_conserved: bool,
    manifold: String,
) -> StabilityVerdict {
    for (i, &integral) in report.integrals.iter().enumerate() {
        if integral > report.sign_margin(i) {
            return StabilityVerdict {
                outcome: Outcome::Unstable,
                witness: Witness::PositiveIntegral {
                    index: i + 1,
                    integral,
                },
                manifold,
            };
        }
    }
    if report.dissipated_count == 0 {
        return StabilityVerdict {
            outcome: Outcome::Inconclusive,
            witness: Witness::None {
                reason: "no dissipated fields: completely integrable, all multipliers 1"
                    .to_string(),
            },
            manifold,
        };
    }
    let all_negative = report
        .integrals
        .iter()
        .enumerate()
        .all(|(i, &v)| v < -report.sign_margin(i));
    if all_negative {
        if regular_value_conserved {
            return StabilityVerdict {
                outcome: Outcome::StableOnManifold,
                witness: Witness::NegativeIntegrals {
                    integrals: report.integrals.clone(),
                },
                manifold,
            };
        }
        return StabilityVerdict {
            outcome: Outcome::Inconclusive,
            witness: Witness::None {
                reason: "all integrals negative but 0 is not a regular value of the conserved map"
                    .to_string(),
            },
            manifold,
        };
    }
    StabilityVerdict {
        outcome: Outcome::Inconclusive,
        witness: Witness::None {
            reason: "some rate integral within the sign margin of zero".to_string(),
        },
        manifold,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LiouvilleCheck {
    pub det_monodromy: f64,
    pub divergence_integral: f64,
    /// |det u(T) - exp(∫ div X)| / |exp(∫ div X)|.
    pub relative_error: f64,
}

/// Liouville's identity det u(T) = exp(∫₀ᵀ div X(γ(s)) ds), an independent
/// consistency check on the variational integration.
pub fn liouville_check(
    field: &dyn VectorField,
    orbit: &PeriodicOrbit,
    monodromy_matrix: &Mat,
    panels: usize,
) -> Result<LiouvilleCheck, FloquetError> {
    assert!(panels >= 16 && panels.is_multiple_of(2));
    let period = orbit.period();
    let dt = period / panels as f64;
    let mut values = Vec::with_capacity(panels + 1);
    for j in 0..=panels {
        let point = orbit.at_unreduced((j as f64 * dt).min(period));
        values.push(field.divergence(&point)?);
    }
    let n = values.len() - 1;
    let mut acc = values[0] + values[n];
    for (j, v) in values.iter().enumerate().take(n).skip(1) {
        acc += if j % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    let divergence_integral = acc * dt / 3.0;
    let det = monodromy_matrix.det();
    let expected = divergence_integral.exp();
    Ok(LiouvilleCheck {
        det_monodromy: det,
        divergence_integral,
        relative_error: (det - expected).abs() / expected.abs(),
    })
}
