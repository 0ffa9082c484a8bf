//! Builtin systems: the three-dimensional dissipative harmonic oscillator
//! (both conserved/dissipated assignments) and Euler's rigid-body equations
//! with the elliptic-function orbit.

use std::fmt;
use std::str::FromStr;

use crate::expr::ScalarField;
use crate::orbit::{OrbitError, PeriodicOrbit};
use crate::specfun::{complete_k, EllipticError, EllipticModulus};
use crate::system::{DissipativeSystem, SystemDefinition, SystemError};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("euler parameter constraint violated: {constraint}")]
    InvalidEulerParams { constraint: String },
    #[error("rate expression `{text}`: {source}")]
    Rate {
        text: String,
        source: crate::expr::ParseError,
    },
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
}

/// Which first integral of the oscillator plays the dissipated role.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarmonicCase {
    /// I = x²+y²-1 conserved, D = z dissipated.
    ZD,
    /// I = z conserved, D = x²+y²-1 dissipated (domain excludes the z-axis).
    Planar,
}

/// Which rigid-body integral (energy ellipsoid J₁ or momentum sphere J₂)
/// plays the conserved role.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EulerCase {
    /// I = J₁ (ellipsoid level), D = J₂ (sphere level).
    EnergyI,
    /// I = J₂, D = J₁.
    MomentumI,
}

/// Builtin system names addressable from files and the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinSystem {
    Harmonic(HarmonicCase),
    Euler(EulerCase),
}

impl FromStr for BuiltinSystem {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "harmonic:zD" => Ok(BuiltinSystem::Harmonic(HarmonicCase::ZD)),
            "harmonic:planar" => Ok(BuiltinSystem::Harmonic(HarmonicCase::Planar)),
            "euler:energyI" => Ok(BuiltinSystem::Euler(EulerCase::EnergyI)),
            "euler:momentumI" => Ok(BuiltinSystem::Euler(EulerCase::MomentumI)),
            other => Err(format!(
                "unknown builtin `{other}`; expected one of harmonic:zD, harmonic:planar, euler:energyI, euler:momentumI"
            )),
        }
    }
}

impl fmt::Display for BuiltinSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            BuiltinSystem::Harmonic(HarmonicCase::ZD) => "harmonic:zD",
            BuiltinSystem::Harmonic(HarmonicCase::Planar) => "harmonic:planar",
            BuiltinSystem::Euler(EulerCase::EnergyI) => "euler:energyI",
            BuiltinSystem::Euler(EulerCase::MomentumI) => "euler:momentumI",
        };
        f.write_str(name)
    }
}

/// Moments of inertia I₁ > I₂ > I₃ > 0 and level values (h, c) of the
/// energy and momentum integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerParams {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub h: f64,
    pub c: f64,
}

impl Default for EulerParams {
    /// Test default satisfying every inequality with comfortable margin.
    fn default() -> Self {
        EulerParams {
            i1: 3.0,
            i2: 2.0,
            i3: 1.0,
            h: 1.0,
            c: 1.5,
        }
    }
}

impl EulerParams {
    // Negated comparisons so NaN parameters fail validation too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let EulerParams { i1, i2, i3, h, c } = *self;
        let fail = |constraint: String| Err(ScenarioError::InvalidEulerParams { constraint });
        if !(i3 > 0.0) {
            return fail(format!("I3 > 0 (I3 = {i3})"));
        }
        if !(i2 > i3) {
            return fail(format!("I2 > I3 (I2 = {i2}, I3 = {i3})"));
        }
        if !(i1 > i2) {
            return fail(format!("I1 > I2 (I1 = {i1}, I2 = {i2})"));
        }
        if !(h * i1 - c > 0.0) {
            return fail(format!("h*I1 - c > 0 (= {})", h * i1 - c));
        }
        if !(c - h * i3 > 0.0) {
            return fail(format!("c - h*I3 > 0 (= {})", c - h * i3));
        }
        let k_sq = self.modulus_squared();
        if !(0.0..1.0).contains(&k_sq) {
            return fail(format!("k^2 in [0, 1) (k^2 = {k_sq})"));
        }
        Ok(())
    }

    /// k² = (hI₃-c)(I₁-I₂) / ((hI₁-c)(I₃-I₂)); both factors pair up
    /// negative in the valid regime, giving a positive ratio.
    pub fn modulus_squared(&self) -> f64 {
        let EulerParams { i1, i2, i3, h, c } = *self;
        ((h * i3 - c) * (i1 - i2)) / ((h * i1 - c) * (i3 - i2))
    }

    pub fn modulus(&self) -> Result<EllipticModulus, EllipticError> {
        EllipticModulus::from_k_squared(self.modulus_squared())
    }

    /// Angular frequency of the elliptic argument,
    /// λ = √(2(I₂-I₃)(hI₁-c) / (I₁I₂I₃)).
    pub fn frequency(&self) -> f64 {
        let EulerParams { i1, i2, i3, h, c } = *self;
        (2.0 * (i2 - i3) * (h * i1 - c) / (i1 * i2 * i3)).sqrt()
    }

    /// Orbit period T = 4K(k)/λ = 4K√(I₁I₂I₃)/√(2(I₂-I₃)(hI₁-c)).
    pub fn period(&self) -> Result<f64, EllipticError> {
        Ok(4.0 * complete_k(self.modulus()?) / self.frequency())
    }
}

fn fmt_const(v: f64) -> String {
    format!("{v:.16e}")
}

/// Dissipative data of the perturbed oscillator as expression strings.
pub fn harmonic_definition(case: HarmonicCase, rate: &str) -> SystemDefinition {
    let (conserved, dissipated, manifold) = match case {
        HarmonicCase::ZD => ("x^2+y^2-1", "z", "cylinder x^2+y^2=1"),
        HarmonicCase::Planar => ("z", "x^2+y^2-1", "plane z=0"),
    };
    SystemDefinition {
        dim: 3,
        conserved: vec![conserved.to_string()],
        dissipated: vec![dissipated.to_string()],
        rates: vec![rate.to_string()],
        rescale: None,
        base_field: Some(vec!["y".to_string(), "-x".to_string(), "0".to_string()]),
        manifold_label: Some(manifold.to_string()),
    }
}

/// Perturbed oscillator X + X₀ with the circle orbit (sin t, cos t, 0).
pub fn harmonic_oscillator(
    case: HarmonicCase,
    rate: &str,
) -> Result<(DissipativeSystem, PeriodicOrbit), ScenarioError> {
    ScalarField::parse(rate, 3).map_err(|source| ScenarioError::Rate {
        text: rate.to_string(),
        source,
    })?;
    let sys = harmonic_definition(case, rate).build()?;
    Ok((sys, PeriodicOrbit::circle()))
}

/// Dissipative data of the perturbed rigid body as expression strings.
pub fn euler_definition(params: &EulerParams, rate: &str, case: EulerCase) -> SystemDefinition {
    let EulerParams { i1, i2, i3, h, c } = *params;
    let j1 = format!(
        "{}*x^2+{}*y^2+{}*z^2-{}",
        fmt_const(0.5 / i1),
        fmt_const(0.5 / i2),
        fmt_const(0.5 / i3),
        fmt_const(h)
    );
    let j2 = format!("0.5*x^2+0.5*y^2+0.5*z^2-{}", fmt_const(c));
    let base_field = vec![
        format!("{}*y*z", fmt_const(1.0 / i3 - 1.0 / i2)),
        format!("{}*z*x", fmt_const(1.0 / i1 - 1.0 / i3)),
        format!("{}*x*y", fmt_const(1.0 / i2 - 1.0 / i1)),
    ];
    let (conserved, dissipated, manifold) = match case {
        EulerCase::EnergyI => (
            j1,
            j2,
            format!(
                "ellipsoid x^2/{}+y^2/{}+z^2/{} = {}",
                2.0 * i1,
                2.0 * i2,
                2.0 * i3,
                h
            ),
        ),
        EulerCase::MomentumI => (j2, j1, format!("sphere (x^2+y^2+z^2)/2 = {c}")),
    };
    SystemDefinition {
        dim: 3,
        conserved: vec![conserved],
        dissipated: vec![dissipated],
        rates: vec![rate.to_string()],
        rescale: None,
        base_field: Some(base_field),
        manifold_label: Some(manifold),
    }
}

/// The elliptic-function orbit on the intersection of the energy ellipsoid
/// and momentum sphere:
/// γ(t) = (a₁ cn(λt; k), a₂ sn(λt; k), a₃ dn(λt; k)).
pub fn euler_orbit(params: &EulerParams) -> Result<PeriodicOrbit, ScenarioError> {
    params.validate()?;
    let EulerParams { i1, i2, i3, h, c } = *params;
    let amps = [
        (2.0 * i1 * (c - h * i3) / (i1 - i3)).sqrt(),
        (2.0 * i2 * (c - h * i3) / (i2 - i3)).sqrt(),
        // The third coordinate carries a minus sign; the ODE-residual test
        // settles the sign consistency against the field orientation.
        -(2.0 * i3 * (h * i1 - c) / (i1 - i3)).sqrt(),
    ];
    let modulus = params.modulus()?;
    let freq = params.frequency();
    let period = 4.0 * complete_k(modulus) / freq;
    Ok(PeriodicOrbit::elliptic(amps, freq, modulus, period)?)
}

/// Perturbed rigid body X + X₀ with the elliptic orbit.
pub fn euler_rigid_body(
    params: &EulerParams,
    rate: &str,
    case: EulerCase,
) -> Result<(DissipativeSystem, PeriodicOrbit), ScenarioError> {
    params.validate()?;
    ScalarField::parse(rate, 3).map_err(|source| ScenarioError::Rate {
        text: rate.to_string(),
        source,
    })?;
    let sys = euler_definition(params, rate, case).build()?;
    let orbit = euler_orbit(params)?;
    Ok((sys, orbit))
}

/// Build any builtin by name with the given rate expression and parameters.
pub fn build_builtin(
    which: BuiltinSystem,
    rate: &str,
    params: &EulerParams,
) -> Result<(DissipativeSystem, PeriodicOrbit), ScenarioError> {
    match which {
        BuiltinSystem::Harmonic(case) => harmonic_oscillator(case, rate),
        BuiltinSystem::Euler(case) => euler_rigid_body(params, rate, case),
    }
}

/// Definition strings for any builtin (for serialization back to files).
pub fn builtin_definition(
    which: BuiltinSystem,
    rate: &str,
    params: &EulerParams,
) -> SystemDefinition {
    match which {
        BuiltinSystem::Harmonic(case) => harmonic_definition(case, rate),
        BuiltinSystem::Euler(case) => euler_definition(params, rate, case),
    }
}
