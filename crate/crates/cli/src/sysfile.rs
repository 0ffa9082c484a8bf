//! System definition files: a single JSON document holding the dissipative
//! data as expression strings plus an orbit reference.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use floq_core::orbit::PeriodicOrbit;
use floq_core::scenarios::{
    build_builtin, builtin_definition, euler_orbit, BuiltinSystem, EulerParams,
};
use floq_core::system::{DissipativeSystem, SystemDefinition};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub dim: usize,
    pub conserved: Vec<String>,
    pub dissipated: Vec<String>,
    pub rates: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_field: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifold: Option<String>,
    pub orbit: OrbitRef,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum OrbitRef {
    /// Unit circle (sin t, cos t, 0), period 2π.
    #[serde(rename = "circle")]
    Circle,
    /// Rigid-body elliptic orbit for the given parameters.
    #[serde(rename = "euler")]
    Euler {
        i1: f64,
        i2: f64,
        i3: f64,
        h: f64,
        c: f64,
    },
    /// Uniform sample table `t,x1..xn` with the given period.
    #[serde(rename = "csv")]
    Csv { path: String, period: f64 },
}

impl SystemFile {
    pub fn from_definition(def: &SystemDefinition, orbit: OrbitRef) -> Self {
        SystemFile {
            dim: def.dim,
            conserved: def.conserved.clone(),
            dissipated: def.dissipated.clone(),
            rates: def.rates.clone(),
            nu: def.rescale.clone(),
            base_field: def.base_field.clone(),
            manifold: def.manifold_label.clone(),
            orbit,
        }
    }

    pub fn definition(&self) -> SystemDefinition {
        SystemDefinition {
            dim: self.dim,
            conserved: self.conserved.clone(),
            dissipated: self.dissipated.clone(),
            rates: self.rates.clone(),
            rescale: self.nu.clone(),
            base_field: self.base_field.clone(),
            manifold_label: self.manifold.clone(),
        }
    }
}

/// A loaded system: where it came from, the built objects, and the file
/// form (for re-serialization by `stabilize`).
pub struct LoadedSystem {
    pub name: String,
    pub system: DissipativeSystem,
    pub orbit: PeriodicOrbit,
    pub file: SystemFile,
}

/// Either a builtin name (`harmonic:zD`, `euler:energyI`, ...) or a path to
/// a system JSON file.
pub fn load_system(spec: &str, rate: &str, params: &EulerParams) -> Result<LoadedSystem> {
    if let Ok(builtin) = spec.parse::<BuiltinSystem>() {
        let (system, orbit) = build_builtin(builtin, rate, params).map_err(|e| anyhow!("{e}"))?;
        let def = builtin_definition(builtin, rate, params);
        let orbit_ref = match builtin {
            BuiltinSystem::Harmonic(_) => OrbitRef::Circle,
            BuiltinSystem::Euler(_) => OrbitRef::Euler {
                i1: params.i1,
                i2: params.i2,
                i3: params.i3,
                h: params.h,
                c: params.c,
            },
        };
        return Ok(LoadedSystem {
            name: builtin.to_string(),
            system,
            orbit,
            file: SystemFile::from_definition(&def, orbit_ref),
        });
    }
    let path = Path::new(spec);
    if !path.exists() {
        bail!(
            "`{spec}` is neither a builtin system name nor an existing file \
             (builtins: harmonic:zD, harmonic:planar, euler:energyI, euler:momentumI)"
        );
    }
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading system file `{spec}`"))?;
    let mut file: SystemFile =
        serde_json::from_str(&text).with_context(|| format!("parsing system file `{spec}`"))?;
    // Make csv orbit paths absolute relative to the file location so the
    // loaded system is independent of the working directory.
    if let OrbitRef::Csv { path: csv_path, .. } = &mut file.orbit {
        let resolved = resolve_relative(path, csv_path);
        *csv_path = resolved.to_string_lossy().into_owned();
    }
    let system = file
        .definition()
        .build()
        .map_err(|e| anyhow!("invalid system in `{spec}`: {e}"))?;
    let orbit = build_orbit(&file.orbit, system.dim())?;
    Ok(LoadedSystem {
        name: spec.to_string(),
        system,
        orbit,
        file,
    })
}

pub fn build_orbit(orbit_ref: &OrbitRef, dim: usize) -> Result<PeriodicOrbit> {
    let orbit = match orbit_ref {
        OrbitRef::Circle => PeriodicOrbit::circle(),
        OrbitRef::Euler { i1, i2, i3, h, c } => {
            let params = EulerParams {
                i1: *i1,
                i2: *i2,
                i3: *i3,
                h: *h,
                c: *c,
            };
            euler_orbit(&params).map_err(|e| anyhow!("{e}"))?
        }
        OrbitRef::Csv { path, period } => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading orbit table `{path}`"))?;
            PeriodicOrbit::from_csv_str(&text, *period)
                .map_err(|e| anyhow!("orbit table `{path}`: {e}"))?
        }
    };
    if orbit.dim() != dim {
        bail!(
            "orbit dimension {} does not match system dimension {dim}",
            orbit.dim()
        );
    }
    Ok(orbit)
}

fn resolve_relative(system_path: &Path, target: &str) -> PathBuf {
    let target_path = Path::new(target);
    if target_path.is_absolute() {
        return target_path.to_path_buf();
    }
    system_path
        .parent()
        .map(|dir| dir.join(target_path))
        .unwrap_or_else(|| target_path.to_path_buf())
}

/// Classification of command failures into the exit-code contract:
/// 0 = success, 1 = failed mathematical check, 2 = input error.
pub const EXIT_OK: i32 = 0;
pub const EXIT_MATH: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
