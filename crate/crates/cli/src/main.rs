//! Command-line driver: verify system/orbit hypotheses, compute multipliers,
//! synthesize stabilizing perturbations, and simulate trajectories.
//!
//! Exit codes: 0 success, 1 failed mathematical check, 2 input error.

mod report;
mod sysfile;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};

use floq_core::expr::ScalarField;
use floq_core::floquet::{
    analytic_multipliers, classify, FloquetError, MultiplierOptions, MultiplierReport,
    StabilityVerdict,
};
use floq_core::ode::{OdeError, OdeOptions};
use floq_core::orbit::{distance_to_orbit, simulate, verify_periodicity};
use floq_core::scenarios::EulerParams;
use floq_core::system::{
    lie_residuals, rate_template, regularity_report, RateKind, RegularityOptions, SystemError,
};

use report::{fmt_f64, multiplier_csv, JsonWriter};
use sysfile::{load_system, LoadedSystem, EXIT_INPUT, EXIT_MATH, EXIT_OK};

#[derive(Parser)]
#[command(
    name = "floq",
    version,
    about = "Floquet multipliers and stability control for codimension-one dissipative systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that the orbit solves the field and the multiplier-formula
    /// hypotheses hold (membership, independence, Lie residuals).
    Verify(VerifyArgs),
    /// Closed-form characteristic multipliers, the monodromy cross-check,
    /// and the stability verdict.
    Multipliers(MultipliersArgs),
    /// Attach a rate-templated control field to a completely integrable
    /// system and classify the perturbed orbit.
    Stabilize(StabilizeArgs),
    /// Integrate trajectories and observe the distance to the orbit.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct SystemArgs {
    /// Builtin name (harmonic:zD, harmonic:planar, euler:energyI,
    /// euler:momentumI) or path to a system JSON file.
    system: String,
    /// Rate expression u for builtin systems.
    #[arg(long, default_value = "0")]
    rate: String,
    /// Euler builtin parameters as I1,I2,I3,h,c.
    #[arg(long, value_name = "I1,I2,I3,H,C", default_value = "3,2,1,1,1.5")]
    euler_params: String,
}

#[derive(Args)]
struct CheckArgs {
    /// Orbit/regularity sample count.
    #[arg(long, default_value_t = 64)]
    samples: usize,
    /// Tolerance for orbit closure and field residual.
    #[arg(long, default_value_t = 1e-7)]
    orbit_tol: f64,
    /// Max |I_j|, |D_i| allowed along the orbit.
    #[arg(long, default_value_t = 1e-8)]
    membership_tol: f64,
    /// Minimum singular value of the gradients+X stack.
    #[arg(long, default_value_t = 1e-6)]
    independence_min: f64,
    /// Minimum singular value of the gradient-only stack.
    #[arg(long, default_value_t = 1e-6)]
    regular_min: f64,
}

#[derive(Args)]
struct OdeArgs {
    /// Relative integration tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol_rel: f64,
    /// Absolute integration tolerance.
    #[arg(long, default_value_t = 1e-12)]
    tol_abs: f64,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    checks: CheckArgs,
    /// Tolerance for Lie-derivative residuals.
    #[arg(long, default_value_t = 1e-9)]
    lie_tol: f64,
    /// Random points (within the orbit bounding box) for the Lie check.
    #[arg(long, default_value_t = 50)]
    box_points: usize,
    /// Seed for the randomized point sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MultipliersArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    checks: CheckArgs,
    #[command(flatten)]
    ode: OdeArgs,
    /// Simpson panels for the rate integrals.
    #[arg(long, default_value_t = 256)]
    panels: usize,
    /// Compute the numeric monodromy spectra (default).
    #[arg(long, overrides_with = "no_numeric")]
    numeric: bool,
    /// Skip the numeric monodromy spectra.
    #[arg(long)]
    no_numeric: bool,
    /// Eigenvalues within this distance of 1 count as the unit cluster.
    #[arg(long, default_value_t = 1e-4)]
    unit_tol: f64,
    /// Absolute floor on the integral sign margin.
    #[arg(long, default_value_t = 1e-12)]
    margin_floor: f64,
    /// Report path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a CSV summary (one row per multiplier).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct StabilizeArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    checks: CheckArgs,
    #[command(flatten)]
    ode: OdeArgs,
    /// Template sign: stabilizing gives -(psi^2+c), destabilizing psi^2+c.
    #[arg(long, value_parser = parse_rate_kind)]
    rate_kind: RateKind,
    /// Template function psi.
    #[arg(long, default_value = "0")]
    psi: String,
    /// Template constant c > 0.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Where to write the augmented system file.
    #[arg(long)]
    out: PathBuf,
    /// Simpson panels for the rate integrals.
    #[arg(long, default_value_t = 256)]
    panels: usize,
    /// Report path (stdout when omitted).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    ode: OdeArgs,
    /// Initial condition as comma-separated coordinates.
    #[arg(long, value_name = "X1,...,XN")]
    x0: String,
    /// Integration end time.
    #[arg(long)]
    t_end: f64,
    /// Output rows (uniform in time).
    #[arg(long, default_value_t = 601)]
    points: usize,
    /// Observable to append per row; `dist` adds dist_to_orbit.
    #[arg(long, value_parser = ["dist"])]
    observe: Option<String>,
    /// Samples for the distance-to-orbit minimization.
    #[arg(long, default_value_t = 512)]
    dist_samples: usize,
    /// Trajectory CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_rate_kind(s: &str) -> Result<RateKind, String> {
    match s {
        "stabilizing" => Ok(RateKind::Stabilizing),
        "destabilizing" => Ok(RateKind::Destabilizing),
        other => Err(format!(
            "`{other}` is not a rate kind (expected stabilizing or destabilizing)"
        )),
    }
}

fn parse_euler_params(text: &str) -> Result<EulerParams> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("parsing --euler-params `{text}`"))?;
    if parts.len() != 5 {
        bail!("--euler-params needs exactly five values I1,I2,I3,h,c");
    }
    Ok(EulerParams {
        i1: parts[0],
        i2: parts[1],
        i3: parts[2],
        h: parts[3],
        c: parts[4],
    })
}

fn load(args: &SystemArgs) -> Result<LoadedSystem> {
    let params = parse_euler_params(&args.euler_params)?;
    load_system(&args.system, &args.rate, &params)
}

fn validate_samples(samples: usize) -> Result<()> {
    if samples < 8 {
        bail!("--samples must be at least 8");
    }
    Ok(())
}

fn validate_panels(panels: usize) -> Result<()> {
    if panels < 16 || !panels.is_multiple_of(2) {
        bail!("--panels must be even and at least 16");
    }
    Ok(())
}

fn write_output(path: Option<&PathBuf>, content: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, content).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Verify(args) => run_verify(&args),
        Command::Multipliers(args) => run_multipliers(&args),
        Command::Stabilize(args) => run_stabilize(&args),
        Command::Simulate(args) => run_simulate(&args),
    };
    let code = code.unwrap_or_else(|err| {
        eprintln!("error: {err:#}");
        EXIT_INPUT
    });
    std::process::exit(code);
}

fn regularity_options(checks: &CheckArgs) -> RegularityOptions {
    RegularityOptions {
        membership_tol: checks.membership_tol,
        independence_min: checks.independence_min,
        regular_value_min: checks.regular_min,
    }
}

fn run_verify(args: &VerifyArgs) -> Result<i32> {
    validate_samples(args.checks.samples)?;
    let loaded = load(&args.system)?;
    let sys = &loaded.system;
    let orbit = &loaded.orbit;
    let field = sys.as_field();

    let periodicity = verify_periodicity(orbit, &field, args.checks.samples, args.checks.orbit_tol)
        .map_err(|e| anyhow::anyhow!("periodicity check failed to evaluate: {e}"))?;
    let regularity = regularity_report(
        sys,
        orbit,
        args.checks.samples,
        &regularity_options(&args.checks),
    )?;

    // Lie residuals at orbit samples and at random points of the orbit
    // bounding box (inflated by 0.5), skipping singular points.
    let mut max_lie_orbit: f64 = 0.0;
    for j in 0..args.checks.samples {
        let t = orbit.period() * j as f64 / args.checks.samples as f64;
        let point = orbit.at(t);
        match lie_residuals(&field, sys, &point) {
            Ok(res) => {
                for r in res {
                    max_lie_orbit = max_lie_orbit.max(r.abs());
                }
            }
            Err(floq_core::field::FieldError::SingularPoint { .. }) => {
                max_lie_orbit = f64::INFINITY;
            }
            Err(e) => bail!("lie residual evaluation failed: {e}"),
        }
    }
    let mut lo = vec![f64::INFINITY; sys.dim()];
    let mut hi = vec![f64::NEG_INFINITY; sys.dim()];
    for j in 0..args.checks.samples {
        let p = orbit.at(orbit.period() * j as f64 / args.checks.samples as f64);
        for (c, v) in p.iter().enumerate() {
            lo[c] = lo[c].min(*v);
            hi[c] = hi[c].max(*v);
        }
    }
    let mut rng = rand::rngs::StdRng::seed_from_u64(args.seed);
    let mut max_lie_box: f64 = 0.0;
    let mut box_checked = 0usize;
    let mut attempts = 0usize;
    while box_checked < args.box_points && attempts < 100 * args.box_points.max(1) {
        attempts += 1;
        let point: Vec<f64> = (0..sys.dim())
            .map(|c| rng.gen_range((lo[c] - 0.5)..(hi[c] + 0.5)))
            .collect();
        match lie_residuals(&field, sys, &point) {
            Ok(res) => {
                for r in res {
                    max_lie_box = max_lie_box.max(r.abs());
                }
                box_checked += 1;
            }
            Err(floq_core::field::FieldError::SingularPoint { .. }) => continue,
            Err(e) => bail!("lie residual evaluation failed: {e}"),
        }
    }
    let lie_pass = max_lie_orbit <= args.lie_tol && max_lie_box <= args.lie_tol;

    let reason = if !periodicity.pass {
        Some("closure")
    } else if regularity.max_conserved > args.checks.membership_tol
        || regularity.max_dissipated > args.checks.membership_tol
    {
        Some("membership")
    } else if regularity.independence_margin < args.checks.independence_min {
        Some("independence")
    } else if regularity.regular_value_margin < args.checks.regular_min {
        Some("regular-value")
    } else if !lie_pass {
        Some("lie")
    } else {
        None
    };
    let pass = reason.is_none();

    let mut w = JsonWriter::new();
    w.begin_object();
    w.key("system").value_str(&loaded.name);
    w.key("command").value_str("verify");
    w.key("pass").value_bool(pass);
    w.key("reason");
    match reason {
        Some(r) => {
            w.value_str(r);
        }
        None => {
            w.value_null();
        }
    }
    w.key("periodicity");
    report::write_periodicity(&mut w, &periodicity);
    w.key("regularity");
    report::write_regularity(&mut w, &regularity);
    w.key("lie");
    w.begin_object();
    w.key("max_residual_orbit").value_f64(max_lie_orbit);
    w.key("max_residual_box").value_f64(max_lie_box);
    w.key("box_points_checked").value_usize(box_checked);
    w.key("tolerance").value_f64(args.lie_tol);
    w.key("pass").value_bool(lie_pass);
    w.end_object();
    w.end_object();
    write_output(args.out.as_ref(), &w.finish())?;
    Ok(if pass { EXIT_OK } else { EXIT_MATH })
}

fn multiplier_options(args: &MultipliersArgs) -> MultiplierOptions {
    MultiplierOptions {
        samples: args.checks.samples,
        panels: args.panels,
        orbit_tol: args.checks.orbit_tol,
        attach_numeric: !args.no_numeric,
        ode: OdeOptions {
            rel_tol: args.ode.tol_rel,
            abs_tol: args.ode.tol_abs,
            ..OdeOptions::default()
        },
        regularity: regularity_options(&args.checks),
        unit_tol: args.unit_tol,
        margin_floor: args.margin_floor,
    }
}

/// Shared by `multipliers` and `stabilize`: compute the report + verdict or
/// map the failure to an exit code and a reason slug.
fn multipliers_pipeline(
    loaded: &LoadedSystem,
    opts: &MultiplierOptions,
) -> Result<Result<(MultiplierReport, StabilityVerdict), (i32, String)>> {
    let sys = &loaded.system;
    let orbit = &loaded.orbit;
    match analytic_multipliers(sys, orbit, opts) {
        Ok(report) => {
            let regularity = regularity_report(sys, orbit, opts.samples, &opts.regularity)?;
            let verdict = classify(
                &report,
                regularity.conserved_regular_value(),
                sys.manifold_description(),
            );
            Ok(Ok((report, verdict)))
        }
        Err(FloquetError::OrbitNotVerified {
            closure,
            residual,
            tol,
        }) => Ok(Err((
            EXIT_MATH,
            format!("closure: orbit residuals {closure:.3e}/{residual:.3e} exceed {tol:.3e}"),
        ))),
        Err(FloquetError::HypothesisFailed { reasons, .. }) => Ok(Err((
            EXIT_MATH,
            format!("hypothesis: {}", reasons.join("; ")),
        ))),
        Err(FloquetError::Integration(e)) => Ok(Err((EXIT_MATH, format!("integration: {e}")))),
        Err(FloquetError::Eigen(e)) => Ok(Err((EXIT_MATH, format!("eigen: {e}")))),
        Err(FloquetError::System(SystemError::SingularPoint { norm_sq, epsilon })) => Ok(Err((
            EXIT_MATH,
            format!("singular: wedge norm^2 {norm_sq:.3e} <= {epsilon:.3e} on the orbit"),
        ))),
        Err(e) => Err(e.into()),
    }
}

fn write_multiplier_report(
    loaded: &LoadedSystem,
    command: &str,
    outcome: &Result<(MultiplierReport, StabilityVerdict), (i32, String)>,
    extra: impl FnOnce(&mut JsonWriter),
    out: Option<&PathBuf>,
) -> Result<()> {
    let mut w = JsonWriter::new();
    w.begin_object();
    w.key("system").value_str(&loaded.name);
    w.key("command").value_str(command);
    match outcome {
        Ok((report, verdict)) => {
            w.key("pass").value_bool(true);
            w.key("reason").value_null();
            extra(&mut w);
            report::write_multiplier_body(&mut w, report);
            report::write_verdict(&mut w, verdict);
        }
        Err((_, reason)) => {
            w.key("pass").value_bool(false);
            w.key("reason").value_str(reason);
            extra(&mut w);
        }
    }
    w.end_object();
    write_output(out, &w.finish())
}

fn run_multipliers(args: &MultipliersArgs) -> Result<i32> {
    validate_samples(args.checks.samples)?;
    validate_panels(args.panels)?;
    let loaded = load(&args.system)?;
    let opts = multiplier_options(args);
    let outcome = multipliers_pipeline(&loaded, &opts)?;
    write_multiplier_report(&loaded, "multipliers", &outcome, |_| {}, args.out.as_ref())?;
    match outcome {
        Ok((report, _)) => {
            if let Some(csv_path) = &args.csv {
                std::fs::write(csv_path, multiplier_csv(&report))
                    .with_context(|| format!("writing {}", csv_path.display()))?;
            }
            Ok(EXIT_OK)
        }
        Err((code, reason)) => {
            eprintln!("multipliers: {reason}");
            Ok(code)
        }
    }
}

fn run_stabilize(args: &StabilizeArgs) -> Result<i32> {
    validate_samples(args.checks.samples)?;
    validate_panels(args.panels)?;
    let loaded = load(&args.system)?;
    if !loaded.system.is_perturbation_mode() {
        bail!(
            "stabilize requires a base field (completely integrable system \
             in perturbation form); `{}` has none",
            loaded.name
        );
    }
    if args.c <= 0.0 {
        bail!("rate template requires c > 0, got {}", args.c);
    }
    let psi = ScalarField::parse(&args.psi, loaded.system.dim())
        .map_err(|e| anyhow::anyhow!("--psi `{}`: {e}", args.psi))?;
    let template =
        rate_template(args.rate_kind, &psi, args.c).map_err(|e| anyhow::anyhow!("{e}"))?;
    let rate_text = template.to_string();

    // Augmented file: same data with every rate replaced by the template.
    let mut file = loaded.file.clone();
    file.rates = vec![rate_text.clone(); file.dissipated.len()];
    let augmented_system = file
        .definition()
        .build()
        .map_err(|e| anyhow::anyhow!("augmented system invalid: {e}"))?;
    let augmented = LoadedSystem {
        name: loaded.name.clone(),
        system: augmented_system,
        orbit: loaded.orbit.clone(),
        file: file.clone(),
    };
    let json = serde_json::to_string_pretty(&file).context("serializing augmented system")?;
    std::fs::write(&args.out, json + "\n")
        .with_context(|| format!("writing {}", args.out.display()))?;

    let mopts = MultiplierOptions {
        samples: args.checks.samples,
        panels: args.panels,
        orbit_tol: args.checks.orbit_tol,
        attach_numeric: true,
        ode: OdeOptions {
            rel_tol: args.ode.tol_rel,
            abs_tol: args.ode.tol_abs,
            ..OdeOptions::default()
        },
        regularity: regularity_options(&args.checks),
        ..MultiplierOptions::default()
    };
    let outcome = multipliers_pipeline(&augmented, &mopts)?;
    let kind = match args.rate_kind {
        RateKind::Stabilizing => "stabilizing",
        RateKind::Destabilizing => "destabilizing",
    };
    let out_path = args.out.display().to_string();
    write_multiplier_report(
        &augmented,
        "stabilize",
        &outcome,
        |w| {
            w.key("rate_kind").value_str(kind);
            w.key("psi").value_str(&args.psi);
            w.key("c").value_f64(args.c);
            w.key("rate").value_str(&rate_text);
            w.key("augmented_system").value_str(&out_path);
        },
        args.report.as_ref(),
    )?;
    match outcome {
        Ok(_) => Ok(EXIT_OK),
        Err((code, reason)) => {
            eprintln!("stabilize: {reason}");
            Ok(code)
        }
    }
}

fn run_simulate(args: &SimulateArgs) -> Result<i32> {
    let loaded = load(&args.system)?;
    let x0: Vec<f64> = args
        .x0
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("parsing --x0 `{}`", args.x0))?;
    if x0.len() != loaded.system.dim() {
        bail!(
            "--x0 has {} coordinates, system dimension is {}",
            x0.len(),
            loaded.system.dim()
        );
    }
    // Negated comparison so a NaN --t-end is rejected as well.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(args.t_end > 0.0) {
        bail!("--t-end must be positive");
    }
    if args.points < 2 {
        bail!("--points must be at least 2");
    }
    if args.observe.is_some() && args.dist_samples < 32 {
        bail!("--dist-samples must be at least 32");
    }
    let opts = OdeOptions {
        rel_tol: args.ode.tol_rel,
        abs_tol: args.ode.tol_abs,
        ..OdeOptions::default()
    };
    let observe_dist = args.observe.as_deref() == Some("dist");
    let field = loaded.system.as_field();
    let trajectory = match simulate(&field, &x0, args.t_end, args.points, &opts) {
        Ok(t) => t,
        Err(OdeError::StepSizeUnderflow { t, h }) => {
            eprintln!("simulate: blow-up, step size underflow at t = {t} (h = {h:e})");
            return Ok(EXIT_MATH);
        }
        Err(OdeError::NonFiniteState { t }) => {
            eprintln!("simulate: state became non-finite at t = {t}");
            return Ok(EXIT_MATH);
        }
        Err(OdeError::MaxStepsExceeded { t, max }) => {
            eprintln!("simulate: exceeded {max} steps at t = {t}");
            return Ok(EXIT_MATH);
        }
        Err(OdeError::Rhs(e)) => {
            eprintln!("simulate: field evaluation failed: {e}");
            return Ok(EXIT_MATH);
        }
        Err(e) => bail!("{e}"),
    };

    let mut csv = String::from("t");
    for i in 1..=loaded.system.dim() {
        csv.push_str(&format!(",x{i}"));
    }
    if observe_dist {
        csv.push_str(",dist_to_orbit");
    }
    csv.push('\n');
    for (t, state) in trajectory.times.iter().zip(&trajectory.states) {
        csv.push_str(&fmt_f64(*t));
        for v in state {
            csv.push(',');
            csv.push_str(&fmt_f64(*v));
        }
        if observe_dist {
            csv.push(',');
            csv.push_str(&fmt_f64(distance_to_orbit(
                state,
                &loaded.orbit,
                args.dist_samples,
            )));
        }
        csv.push('\n');
    }
    write_output(args.out.as_ref(), &csv)?;
    Ok(EXIT_OK)
}
