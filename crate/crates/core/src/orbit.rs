//! Periodic orbits: closed-form parameterizations (circle, rigid-body
//! elliptic) and uniform sample tables with cubic interpolation, plus
//! verification, rate-integral quadrature, trajectory simulation, and
//! distance-to-orbit.

use crate::dual::{Dual, Scalar};
use crate::expr::{EvalError, ScalarField};
use crate::field::{FieldError, VectorField};
use crate::ode::{integrate, OdeError, OdeOptions};
use crate::specfun::{jacobi, EllipticModulus};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OrbitError {
    #[error("period must be positive, got {period}")]
    NonPositivePeriod { period: f64 },
    #[error("sample table needs at least 4 rows, got {rows}")]
    TooFewSamples { rows: usize },
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("sample times must start at 0 and advance uniformly to the period (line {line})")]
    NonUniformGrid { line: usize },
    #[error("sample state contains non-finite values at line {line}")]
    NonFiniteSample { line: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone)]
enum OrbitSource {
    /// (sin t, cos t, 0) with period 2π.
    Circle,
    /// (a₁ cn(λt), a₂ sn(λt), a₃ dn(λt)); amplitudes carry their signs.
    Elliptic {
        amps: [f64; 3],
        freq: f64,
        modulus: EllipticModulus,
    },
    Samples(SampleTable),
}

#[derive(Debug, Clone)]
struct SampleTable {
    /// γ(iΔ) for i = 0..N-1; the grid wraps periodically.
    states: Vec<Vec<f64>>,
    /// The raw final row γ(T) as read from the file (closure witness).
    last: Vec<f64>,
    dt: f64,
}

/// A T-periodic orbit with a closed-form or sampled parameterization.
#[derive(Debug, Clone)]
pub struct PeriodicOrbit {
    period: f64,
    dim: usize,
    source: OrbitSource,
}

impl PeriodicOrbit {
    /// The unit circle (sin t, cos t, 0) in the plane z = 0, period 2π.
    pub fn circle() -> Self {
        PeriodicOrbit {
            period: 2.0 * std::f64::consts::PI,
            dim: 3,
            source: OrbitSource::Circle,
        }
    }

    /// Rigid-body style orbit (a₁ cn(λt), a₂ sn(λt), a₃ dn(λt)) with period
    /// 4K(k)/λ.
    pub fn elliptic(
        amps: [f64; 3],
        freq: f64,
        modulus: EllipticModulus,
        period: f64,
    ) -> Result<Self, OrbitError> {
        if period <= 0.0 || !period.is_finite() {
            return Err(OrbitError::NonPositivePeriod { period });
        }
        Ok(PeriodicOrbit {
            period,
            dim: 3,
            source: OrbitSource::Elliptic {
                amps,
                freq,
                modulus,
            },
        })
    }

    /// Uniform sample table: rows (tᵢ, γ(tᵢ)) with t₀ = 0, uniform spacing,
    /// and the last row at t = period.
    pub fn from_samples(
        times: &[f64],
        states: Vec<Vec<f64>>,
        period: f64,
    ) -> Result<Self, OrbitError> {
        if period <= 0.0 || !period.is_finite() {
            return Err(OrbitError::NonPositivePeriod { period });
        }
        let rows = times.len();
        if rows < 4 || states.len() != rows {
            return Err(OrbitError::TooFewSamples { rows });
        }
        let n = rows - 1;
        let dt = period / n as f64;
        let tol = dt * 1e-6;
        for (i, &t) in times.iter().enumerate() {
            if (t - i as f64 * dt).abs() > tol {
                return Err(OrbitError::NonUniformGrid { line: i + 2 });
            }
        }
        let dim = states[0].len();
        for (i, s) in states.iter().enumerate() {
            if s.len() != dim {
                return Err(OrbitError::Csv {
                    line: i + 2,
                    message: format!("expected {dim} coordinates, got {}", s.len()),
                });
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(OrbitError::NonFiniteSample { line: i + 2 });
            }
        }
        let last = states[n].clone();
        let mut wrap = states;
        wrap.truncate(n);
        Ok(PeriodicOrbit {
            period,
            dim,
            source: OrbitSource::Samples(SampleTable {
                states: wrap,
                last,
                dt,
            }),
        })
    }

    /// Parse a `t,x1..xn` CSV (header required) into a sampled orbit.
    pub fn from_csv_str(content: &str, period: f64) -> Result<Self, OrbitError> {
        let mut lines = content.lines().enumerate();
        let (_, header) = lines.next().ok_or(OrbitError::Csv {
            line: 1,
            message: "empty file".to_string(),
        })?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() < 2 || cols[0] != "t" {
            return Err(OrbitError::Csv {
                line: 1,
                message: "expected header `t,x1,...,xn`".to_string(),
            });
        }
        for (i, c) in cols[1..].iter().enumerate() {
            if *c != format!("x{}", i + 1) {
                return Err(OrbitError::Csv {
                    line: 1,
                    message: format!("expected column `x{}`, found `{c}`", i + 1),
                });
            }
        }
        let dim = cols.len() - 1;
        let mut times = Vec::new();
        let mut states = Vec::new();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != dim + 1 {
                return Err(OrbitError::Csv {
                    line: idx + 1,
                    message: format!("expected {} fields, got {}", dim + 1, fields.len()),
                });
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| OrbitError::Csv {
                    line: idx + 1,
                    message: format!("not a number: `{s}`"),
                })
            };
            times.push(parse(fields[0])?);
            states.push(
                fields[1..]
                    .iter()
                    .map(|s| parse(s))
                    .collect::<Result<Vec<f64>, _>>()?,
            );
        }
        Self::from_samples(&times, states, period)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// γ(t) with t reduced modulo the period.
    pub fn at(&self, t: f64) -> Vec<f64> {
        let t = t.rem_euclid(self.period);
        self.at_reduced(t)
    }

    /// γ(t) without modular reduction; used for the closure check γ(T) vs
    /// γ(0). Sampled orbits return the raw stored final row at t = T.
    pub fn at_unreduced(&self, t: f64) -> Vec<f64> {
        match &self.source {
            OrbitSource::Circle | OrbitSource::Elliptic { .. } => self
                .eval_closed(t)
                .expect("closed-form sources cover all t"),
            OrbitSource::Samples(table) => {
                if (t - self.period).abs() <= table.dt * 1e-9 {
                    table.last.clone()
                } else {
                    self.at(t)
                }
            }
        }
    }

    /// γ'(t): dual numbers through the closed-form parameterization, or
    /// centered differences on the grid for sampled orbits (t snaps to the
    /// nearest node).
    pub fn velocity(&self, t: f64) -> Vec<f64> {
        match &self.source {
            OrbitSource::Circle | OrbitSource::Elliptic { .. } => {
                let td = Dual::seeded(t.rem_euclid(self.period));
                self.eval_closed_scalar(td)
                    .expect("closed-form sources cover all t")
                    .into_iter()
                    .map(|c| c.du)
                    .collect()
            }
            OrbitSource::Samples(table) => {
                let n = table.states.len();
                let i = (t.rem_euclid(self.period) / table.dt).round() as usize % n;
                let next = &table.states[(i + 1) % n];
                let prev = &table.states[(i + n - 1) % n];
                next.iter()
                    .zip(prev)
                    .map(|(a, b)| (a - b) / (2.0 * table.dt))
                    .collect()
            }
        }
    }

    fn at_reduced(&self, t: f64) -> Vec<f64> {
        match &self.source {
            OrbitSource::Circle | OrbitSource::Elliptic { .. } => self
                .eval_closed(t)
                .expect("closed-form sources cover all t"),
            OrbitSource::Samples(table) => {
                // Four-point Lagrange cubic on the periodic uniform grid.
                let n = table.states.len();
                let s = t / table.dt;
                let cell = s.floor() as usize % n;
                let u = s - s.floor();
                let p0 = &table.states[(cell + n - 1) % n];
                let p1 = &table.states[cell];
                let p2 = &table.states[(cell + 1) % n];
                let p3 = &table.states[(cell + 2) % n];
                let w0 = -u * (u - 1.0) * (u - 2.0) / 6.0;
                let w1 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
                let w2 = -(u + 1.0) * u * (u - 2.0) / 2.0;
                let w3 = (u + 1.0) * u * (u - 1.0) / 6.0;
                (0..self.dim)
                    .map(|c| w0 * p0[c] + w1 * p1[c] + w2 * p2[c] + w3 * p3[c])
                    .collect()
            }
        }
    }

    fn eval_closed(&self, t: f64) -> Option<Vec<f64>> {
        self.eval_closed_scalar(t)
    }

    /// Closed-form evaluation generic over the scalar type; `None` for
    /// sampled orbits.
    pub fn eval_closed_scalar<T: Scalar>(&self, t: T) -> Option<Vec<T>> {
        match &self.source {
            OrbitSource::Circle => Some(vec![t.sin(), t.cos(), T::zero()]),
            OrbitSource::Elliptic {
                amps,
                freq,
                modulus,
            } => {
                let u = t * T::from_f64(*freq);
                let (sn, cn, dn) = jacobi(u, *modulus);
                Some(vec![
                    T::from_f64(amps[0]) * cn,
                    T::from_f64(amps[1]) * sn,
                    T::from_f64(amps[2]) * dn,
                ])
            }
            OrbitSource::Samples(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PeriodicityReport {
    /// ‖γ(T) - γ(0)‖.
    pub closure_error: f64,
    /// max over samples of ‖γ'(t) - X(γ(t))‖.
    pub max_residual: f64,
    pub worst_time: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Check closure and that the parameterization solves ẋ = X(x) at `m`
/// uniform samples.
pub fn verify_periodicity(
    orbit: &PeriodicOrbit,
    field: &dyn VectorField,
    m: usize,
    tol: f64,
) -> Result<PeriodicityReport, FieldError> {
    assert!(m >= 8, "need at least eight samples");
    let start = orbit.at_unreduced(0.0);
    let end = orbit.at_unreduced(orbit.period());
    let closure_error = norm_diff(&end, &start);
    let mut max_residual: f64 = 0.0;
    let mut worst_time = 0.0;
    for j in 0..m {
        let t = orbit.period() * j as f64 / m as f64;
        let gamma = orbit.at(t);
        let velocity = orbit.velocity(t);
        let xval = field.eval(&gamma)?;
        let residual = norm_diff(&velocity, &xval);
        if residual > max_residual {
            max_residual = residual;
            worst_time = t;
        }
    }
    let pass = closure_error <= tol && max_residual <= tol;
    Ok(PeriodicityReport {
        closure_error,
        max_residual,
        worst_time,
        tolerance: tol,
        pass,
    })
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureResult {
    pub value: f64,
    /// Richardson estimate |S_m - S_{m/2}| / 15.
    pub error_estimate: f64,
}

/// ∫₀ᵀ h(γ(s)) ds by composite Simpson with `panels` subintervals
/// (even, at least 16). The Richardson estimate compares against the
/// doubled grid, which also serves monodromy cross-checks sampled there.
pub fn rate_integral(
    h: &ScalarField,
    orbit: &PeriodicOrbit,
    panels: usize,
) -> Result<QuadratureResult, OrbitError> {
    assert!(
        panels >= 16 && panels.is_multiple_of(2),
        "panels must be even, >= 16"
    );
    let period = orbit.period();
    let fine_panels = 2 * panels;
    let dt = period / fine_panels as f64;
    let mut values = Vec::with_capacity(fine_panels + 1);
    for j in 0..=fine_panels {
        let point = orbit.at_unreduced((j as f64 * dt).min(period));
        values.push(h.eval(&point)?);
    }
    let refined = simpson_sum(&values, dt);
    let requested_values: Vec<f64> = values.iter().copied().step_by(2).collect();
    let requested = simpson_sum(&requested_values, 2.0 * dt);
    Ok(QuadratureResult {
        value: requested,
        error_estimate: (refined - requested).abs() / 15.0,
    })
}

fn simpson_sum(values: &[f64], dt: f64) -> f64 {
    let n = values.len() - 1;
    debug_assert!(n >= 2 && n.is_multiple_of(2));
    let mut acc = values[0] + values[n];
    for (j, v) in values.iter().enumerate().take(n).skip(1) {
        acc += if j % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * dt / 3.0
}

/// Simulated solution samples plus stepper metadata.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// Integrate ẋ = X(x) from `x0` over [0, t_end], sampling `points` states
/// at uniform times (dense output).
pub fn simulate(
    field: &dyn VectorField,
    x0: &[f64],
    t_end: f64,
    points: usize,
    opts: &OdeOptions,
) -> Result<Trajectory, OdeError> {
    assert!(points >= 2, "need at least start and end points");
    let times: Vec<f64> = (0..points)
        .map(|i| t_end * i as f64 / (points - 1) as f64)
        .collect();
    let (states, _, stats) = integrate(
        |_t, y, dy| {
            let v = field.eval(y)?;
            dy.copy_from_slice(&v);
            Ok(())
        },
        0.0,
        x0,
        t_end,
        &times,
        opts,
    )?;
    Ok(Trajectory {
        times,
        states,
        accepted_steps: stats.accepted,
        rejected_steps: stats.rejected,
    })
}

/// dist(x, Γ): minimum over `m` uniform samples refined by a golden-section
/// pass around the best sample.
pub fn distance_to_orbit(x: &[f64], orbit: &PeriodicOrbit, m: usize) -> f64 {
    assert!(m >= 32, "need at least 32 samples");
    let period = orbit.period();
    let d = |t: f64| norm_diff(x, &orbit.at(t));
    let mut best_t = 0.0;
    let mut best = f64::INFINITY;
    for j in 0..m {
        let t = period * j as f64 / m as f64;
        let dist = d(t);
        if dist < best {
            best = dist;
            best_t = t;
        }
    }
    // Golden-section refinement on the bracket around the best sample.
    let delta = period / m as f64;
    let (mut lo, mut hi) = (best_t - delta, best_t + delta);
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - phi * (hi - lo);
    let mut dd = lo + phi * (hi - lo);
    let (mut fc, mut fd) = (d(c), d(dd));
    for _ in 0..80 {
        if fc < fd {
            hi = dd;
            dd = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = d(c);
        } else {
            lo = c;
            c = dd;
            fc = fd;
            dd = lo + phi * (hi - lo);
            fd = d(dd);
        }
    }
    best.min(fc).min(fd)
}
