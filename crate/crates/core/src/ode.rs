//! Adaptive Dormand–Prince 5(4) integrator with PI step-size control and
//! fifth-order dense output.

use crate::field::FieldError;

#[derive(Debug, Clone)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    pub initial_step: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        // Tight defaults: downstream multiplier comparisons need 1e-6.
        OdeOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 2_000_000,
            initial_step: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h:e}); likely blow-up")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("exceeded {max} steps at t = {t}")]
    MaxStepsExceeded { t: f64, max: usize },
    #[error("output times must ascend within [t0, t_end]")]
    BadOutputTimes,
    #[error(transparent)]
    Rhs(#[from] FieldError),
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
// Difference between the 5th and embedded 4th order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Dense output correction weights.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

// PI controller constants (classic DOPRI5 settings).
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2; // max shrink factor per step is 1/5
const FAC_MAX: f64 = 10.0;

struct DenseSegment {
    t0: f64,
    h: f64,
    cont: [Vec<f64>; 5],
}

impl DenseSegment {
    fn eval(&self, t: f64, out: &mut [f64]) {
        let theta = if self.h == 0.0 {
            0.0
        } else {
            (t - self.t0) / self.h
        };
        let theta1 = 1.0 - theta;
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.cont[0][i]
                + theta
                    * (self.cont[1][i]
                        + theta1
                            * (self.cont[2][i]
                                + theta * (self.cont[3][i] + theta1 * self.cont[4][i])));
        }
    }
}

/// Output states at the requested times, the final state, and step stats.
pub type IntegrationOutput = (Vec<Vec<f64>>, Vec<f64>, OdeStats);

/// Integrate `dy/dt = rhs(t, y)` from `t0` to `t_end`, producing the states
/// at the requested `output_times` (ascending, within [t0, t_end]) via dense
/// output.
pub fn integrate<F>(
    mut rhs: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    output_times: &[f64],
    opts: &OdeOptions,
) -> Result<IntegrationOutput, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), FieldError>,
{
    let n = y0.len();
    let span = t_end - t0;
    assert!(span > 0.0, "integration span must be positive");
    let mut prev = t0;
    for &t in output_times {
        if t < prev || t > t_end + 1e-12 * span.abs() {
            return Err(OdeError::BadOutputTimes);
        }
        prev = t;
    }

    let mut stats = OdeStats::default();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; n]).collect();
    let mut y_stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];

    let mut outputs: Vec<Vec<f64>> = Vec::with_capacity(output_times.len());
    let mut out_idx = 0;
    while out_idx < output_times.len() && output_times[out_idx] <= t0 {
        outputs.push(y.clone());
        out_idx += 1;
    }

    rhs(t, &y, &mut k[0])?;
    stats.rhs_evals += 1;

    let mut h = match opts.initial_step {
        Some(h0) => h0.min(span),
        None => initial_step(&mut rhs, t, &y, &k[0].clone(), opts, &mut stats)?.min(span),
    };
    let mut fac_old: f64 = 1e-4;

    loop {
        if t >= t_end {
            break;
        }
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(OdeError::MaxStepsExceeded {
                t,
                max: opts.max_steps,
            });
        }
        if h < 1e-14 * (t.abs().max(1.0)) {
            return Err(OdeError::StepSizeUnderflow { t, h });
        }
        let mut last = false;
        if t + h >= t_end {
            h = t_end - t;
            last = true;
        }

        // Stages 2..7 (k[0] holds f(t, y) from FSAL).
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        acc += a * kj[i];
                    }
                }
                y_stage[i] = y[i] + h * acc;
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            rhs(t + C[s] * h, &y_stage, &mut tail[0])?;
            stats.rhs_evals += 1;
        }
        // 5th-order solution (stage 7 evaluated the RHS at it already:
        // row 7 of A equals B, the FSAL property).
        for i in 0..n {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate() {
                if B[j] != 0.0 {
                    acc += B[j] * kj[i];
                }
            }
            y_new[i] = y[i] + h * acc;
        }

        // Scaled error norm of the embedded difference.
        let mut err_sq = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    e += E[j] * kj[i];
                }
            }
            let scale = opts.abs_tol + opts.rel_tol * y[i].abs().max(y_new[i].abs());
            let r = h * e / scale;
            err_sq += r * r;
        }
        let err = (err_sq / n as f64).sqrt();

        let fac11 = err.powf(EXPO1);
        if err <= 1.0 {
            // Accept. The controller uses the previous accepted error
            // (PI term) before it is overwritten.
            let fac = (fac11 / fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            fac_old = err.max(1e-4);
            stats.accepted += 1;
            if y_new.iter().any(|v| !v.is_finite()) {
                return Err(OdeError::NonFiniteState { t: t + h });
            }

            // Dense output for any requested times inside this step.
            if out_idx < output_times.len() && output_times[out_idx] <= t + h {
                let segment = dense_segment(t, h, &y, &y_new, &k);
                while out_idx < output_times.len() && output_times[out_idx] <= t + h + 1e-14 {
                    let mut out = vec![0.0; n];
                    segment.eval(output_times[out_idx].min(t + h), &mut out);
                    outputs.push(out);
                    out_idx += 1;
                }
            }

            k.swap(0, 6); // FSAL: f at (t+h, y_new) becomes next k1
            std::mem::swap(&mut y, &mut y_new);
            t += h;
            if last {
                break;
            }
            h /= fac;
        } else {
            // Reject and shrink.
            stats.rejected += 1;
            let fac = (fac11 / SAFETY).min(1.0 / FAC_MIN);
            h /= fac;
            if !h.is_finite() {
                return Err(OdeError::NonFiniteState { t });
            }
        }
    }

    // Any trailing outputs exactly at t_end.
    while out_idx < output_times.len() {
        outputs.push(y.clone());
        out_idx += 1;
    }
    Ok((outputs, y, stats))
}

/// Final state only.
pub fn integrate_final<F>(
    rhs: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &OdeOptions,
) -> Result<(Vec<f64>, OdeStats), OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), FieldError>,
{
    let (_, y, stats) = integrate(rhs, t0, y0, t_end, &[], opts)?;
    Ok((y, stats))
}

fn dense_segment(t: f64, h: f64, y: &[f64], y_new: &[f64], k: &[Vec<f64>]) -> DenseSegment {
    let n = y.len();
    let mut cont = [
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    ];
    for i in 0..n {
        let ydiff = y_new[i] - y[i];
        let bspl = h * k[0][i] - ydiff;
        cont[0][i] = y[i];
        cont[1][i] = ydiff;
        cont[2][i] = bspl;
        cont[3][i] = ydiff - h * k[6][i] - bspl;
        let mut dsum = 0.0;
        for (j, kj) in k.iter().enumerate() {
            if D[j] != 0.0 {
                dsum += D[j] * kj[i];
            }
        }
        cont[4][i] = h * dsum;
    }
    DenseSegment { t0: t, h, cont }
}

/// Standard starting-step heuristic from the magnitudes of y, f(y), and an
/// explicit Euler probe.
fn initial_step<F>(
    rhs: &mut F,
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    opts: &OdeOptions,
    stats: &mut OdeStats,
) -> Result<f64, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), FieldError>,
{
    let n = y0.len();
    let sc: Vec<f64> = y0
        .iter()
        .map(|&v| opts.abs_tol + opts.rel_tol * v.abs())
        .collect();
    let d0 = (y0
        .iter()
        .zip(&sc)
        .map(|(y, s)| (y / s) * (y / s))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    let d1 = (f0
        .iter()
        .zip(&sc)
        .map(|(f, s)| (f / s) * (f / s))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let mut f1 = vec![0.0; n];
    rhs(t0 + h0, &y1, &mut f1)?;
    stats.rhs_evals += 1;
    let d2 = (f1
        .iter()
        .zip(f0)
        .zip(&sc)
        .map(|((a, b), s)| ((a - b) / s) * ((a - b) / s))
        .sum::<f64>()
        / n as f64)
        .sqrt()
        / h0;
    let max_d = d1.max(d2);
    let h1 = if max_d <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / max_d).powf(0.2)
    };
    Ok((100.0 * h0).min(h1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_exponential_decay() {
        // z' = -z, z(0) = 1 -> z(1) = e^{-1}
        let (y, _) = integrate_final(
            |_t, y, dy| {
                dy[0] = -y[0];
                Ok(())
            },
            0.0,
            &[1.0],
            1.0,
            &OdeOptions::default(),
        )
        .unwrap();
        assert!((y[0] - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn rotation_returns_to_start() {
        // Harmonic oscillator in the plane over one period.
        let t_end = 2.0 * std::f64::consts::PI;
        let (y, stats) = integrate_final(
            |_t, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            0.0,
            &[0.0, 1.0],
            t_end,
            &OdeOptions::default(),
        )
        .unwrap();
        assert!((y[0] - 0.0).abs() < 1e-8 && (y[1] - 1.0).abs() < 1e-8);
        assert!(stats.accepted > 0);
    }

    #[test]
    fn energy_conserved_over_hundred_periods() {
        let t_end = 200.0 * std::f64::consts::PI;
        let opts = OdeOptions::default();
        let (y, _) = integrate_final(
            |_t, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            0.0,
            &[0.0, 1.0],
            t_end,
            &opts,
        )
        .unwrap();
        let energy = y[0] * y[0] + y[1] * y[1];
        assert!(
            (energy - 1.0).abs() < 10.0 * opts.rel_tol * t_end,
            "energy drift {}",
            (energy - 1.0).abs()
        );
    }

    #[test]
    fn dense_output_matches_analytic_solution() {
        let times: Vec<f64> = (0..=100).map(|i| i as f64 * 0.05).collect();
        let (outs, _, _) = integrate(
            |_t, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            0.0,
            &[0.0, 1.0],
            5.0,
            &times,
            &OdeOptions::default(),
        )
        .unwrap();
        for (t, y) in times.iter().zip(&outs) {
            assert!((y[0] - t.sin()).abs() < 1e-8, "t={t}");
            assert!((y[1] - t.cos()).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn blow_up_reports_underflow_or_nonfinite() {
        // y' = y^2 from y(0)=1 blows up at t=1.
        let result = integrate_final(
            |_t, y, dy| {
                dy[0] = y[0] * y[0];
                Ok(())
            },
            0.0,
            &[1.0],
            2.0,
            &OdeOptions {
                max_steps: 100_000,
                ..OdeOptions::default()
            },
        );
        assert!(matches!(
            result,
            Err(OdeError::StepSizeUnderflow { .. })
                | Err(OdeError::NonFiniteState { .. })
                | Err(OdeError::MaxStepsExceeded { .. })
        ));
    }

    #[test]
    fn rhs_errors_propagate() {
        let result = integrate_final(
            |_t, _y, _dy| {
                Err(FieldError::SingularPoint {
                    norm_sq: 0.0,
                    epsilon: 1e-12,
                })
            },
            0.0,
            &[1.0],
            1.0,
            &OdeOptions::default(),
        );
        assert!(matches!(result, Err(OdeError::Rhs(_))));
    }

    #[test]
    fn bad_output_times_rejected() {
        let result = integrate(
            |_t, y, dy| {
                dy[0] = -y[0];
                Ok(())
            },
            0.0,
            &[1.0],
            1.0,
            &[0.5, 0.2],
            &OdeOptions::default(),
        );
        assert!(matches!(result, Err(OdeError::BadOutputTimes)));
    }
}
