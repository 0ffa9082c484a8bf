//! Cross-checks on every builtin scenario: analytic multiplier against the
//! monodromy spectrum, and the reduced system against the analytic values.

use floq_core::floquet::{analytic_multipliers, MultiplierOptions};
use floq_core::ode::OdeOptions;
use floq_core::scenarios::{
    euler_rigid_body, harmonic_oscillator, EulerCase, EulerParams, HarmonicCase,
};
use floq_core::Complex64;

fn tight_options() -> MultiplierOptions {
    // The unit multiplier carries a Jordan block; its numeric splitting
    // scales like sqrt of the integration error, so hitting 1e-5 pairing
    // gaps needs rel_tol 1e-12.
    MultiplierOptions {
        ode: OdeOptions {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            ..OdeOptions::default()
        },
        panels: 512,
        ..MultiplierOptions::default()
    }
}

fn builtins(
    rate: &str,
) -> Vec<(
    String,
    floq_core::system::DissipativeSystem,
    floq_core::orbit::PeriodicOrbit,
)> {
    let params = EulerParams::default();
    vec![
        {
            let (s, o) = harmonic_oscillator(HarmonicCase::ZD, rate).unwrap();
            ("harmonic:zD".into(), s, o)
        },
        {
            let (s, o) = harmonic_oscillator(HarmonicCase::Planar, rate).unwrap();
            ("harmonic:planar".into(), s, o)
        },
        {
            let (s, o) = euler_rigid_body(&params, rate, EulerCase::EnergyI).unwrap();
            ("euler:energyI".into(), s, o)
        },
        {
            let (s, o) = euler_rigid_body(&params, rate, EulerCase::MomentumI).unwrap();
            ("euler:momentumI".into(), s, o)
        },
    ]
}

#[test]
fn oracle_agreement_on_every_builtin() {
    let opts = tight_options();
    for (name, sys, orbit) in builtins("-1") {
        let report = analytic_multipliers(&sys, &orbit, &opts).unwrap();
        assert_eq!(report.analytic.len(), 3, "{name}");
        let gap = report.max_pairing_gap().unwrap();
        assert!(gap <= 1e-5, "{name}: max pairing gap {gap:e}");
        // Multiplicity-(k+1) cluster at 1 (k = 1 in all builtins).
        assert_eq!(
            report.unit_cluster_count,
            Some(2),
            "{name}: {:?}",
            report.numeric
        );
    }
}

#[test]
fn reduced_spectrum_matches_nonunit_analytic_values() {
    // The reduced system is diagonal, so this isolates quadrature error
    // from variational-integration error.
    let opts = tight_options();
    for (name, sys, orbit) in builtins("-(x^2+0.5)") {
        let report = analytic_multipliers(&sys, &orbit, &opts).unwrap();
        let unit = Complex64::new(1.0, 0.0);
        let nonunit_analytic: Vec<Complex64> = report
            .analytic
            .iter()
            .copied()
            .filter(|m| (m - unit).norm() > 1e-4)
            .collect();
        let nonunit_reduced: Vec<Complex64> = report
            .reduced
            .iter()
            .copied()
            .filter(|m| (m - unit).norm() > 1e-4)
            .collect();
        assert_eq!(nonunit_analytic.len(), 1, "{name}");
        assert_eq!(nonunit_reduced.len(), 1, "{name}");
        let gap = (nonunit_analytic[0] - nonunit_reduced[0]).norm();
        assert!(gap <= 1e-8, "{name}: reduced/analytic gap {gap:e}");
    }
}
