//! TOML experiment files.
//!
//! ```toml
//! [physical]        # PhysicalParams fields, SI units; omitted keys take the reference device values
//! mu_c = 2e-4
//! t_c = 1.0         # K
//!
//! [drives]          # units of omega_ref
//! delta_c = 1.0
//! delta_w = 0.0
//!
//! [couplings]
//! g_oc = 1e-3       # units of omega_ref, required
//! delta_eg = 5.0    # units of omega_ref, optional
//! pd_noise = "lindblad"
//!
//! [atmosphere]      # kappa_atm (1/m), range_r (m), t_atm (K)
//! [target]          # kappa_t (1/m), slab_dz (m), t_target (K), t_mag
//!
//! [sweep]
//! variable = "delta_eg"   # delta_eg | t_c | mu_c | d_td
//! min = -50.0
//! max = 50.0
//! count = 200
//! scale = "linear"        # linear | log; or give `values = [...]` instead
//! stages = ["c_w", "c_b"] # curves drawn in plots
//!
//! [sweep.secondary]       # optional family of curves, same keys
//! variable = "t_c"
//! values = [0.5, 1.0, 2.0]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channels::{AtmosphereParams, TargetParams};
use crate::dynamics::PdNoise;
use crate::error::{Error, Result};
use crate::params::{PhysicalParams, Tuning};
use crate::pipeline::Profile;
use crate::sweep::{Axis, Grid, Stage, SweepSpec, SweepVar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub physical: PhysicalParams,
    #[serde(default)]
    pub drives: Drives,
    pub couplings: Couplings,
    #[serde(default)]
    pub atmosphere: AtmosphereParams,
    #[serde(default)]
    pub target: TargetParams,
    pub sweep: SweepSection,
}

/// Drive detunings in units of `omega_ref`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Drives {
    pub delta_c: f64,
    pub delta_w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Couplings {
    /// OC-PD coupling in units of `omega_ref`.
    pub g_oc: f64,
    /// PD detuning in units of `omega_ref`; overridden when swept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_eg: Option<f64>,
    #[serde(default)]
    pub pd_noise: PdNoise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSection {
    pub variable: SweepVar,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<Scale>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl AxisSection {
    pub fn range(variable: SweepVar, min: f64, max: f64, count: usize) -> Self {
        AxisSection {
            variable,
            min: Some(min),
            max: Some(max),
            count: Some(count),
            scale: None,
            values: None,
        }
    }

    pub fn values(variable: SweepVar, values: &[f64]) -> Self {
        AxisSection {
            variable,
            min: None,
            max: None,
            count: None,
            scale: None,
            values: Some(values.to_vec()),
        }
    }

    fn to_axis(&self) -> Result<Axis> {
        let grid = match (&self.values, self.min, self.max, self.count) {
            (Some(v), None, None, None) if self.scale.is_none() => Grid::Values(v.clone()),
            (Some(_), ..) => {
                return Err(Error::Config(format!(
                    "axis `{}`: `values` excludes min/max/count/scale",
                    self.variable
                )))
            }
            (None, Some(min), Some(max), Some(count)) => match self.scale.unwrap_or_default() {
                Scale::Linear => Grid::Linear { min, max, count },
                Scale::Log => Grid::Log { min, max, count },
            },
            _ => {
                return Err(Error::Config(format!(
                    "axis `{}` needs min, max and count, or values",
                    self.variable
                )))
            }
        };
        grid.validate()?;
        Ok(Axis {
            var: self.variable,
            grid,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(flatten)]
    pub primary: AxisSection,
    #[serde(default = "default_stages")]
    pub stages: Vec<Stage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary: Option<AxisSection>,
}

fn default_stages() -> Vec<Stage> {
    vec![Stage::CW]
}

/// A validated experiment: what to compute and which stages to plot.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub spec: SweepSpec,
    pub stages: Vec<Stage>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config values are always representable in TOML")
    }

    pub fn profile(&self) -> Profile {
        let w = self.physical.omega_ref;
        Profile {
            physical: self.physical,
            tuning: Tuning {
                delta_c: self.drives.delta_c * w,
                delta_w: self.drives.delta_w * w,
                delta_eg: self.couplings.delta_eg.map(|x| x * w),
                g_oc: self.couplings.g_oc * w,
            },
            atmosphere: self.atmosphere,
            target: self.target,
            pd_noise: self.couplings.pd_noise,
        }
    }

    pub fn experiment(&self) -> Result<Experiment> {
        if self.sweep.stages.is_empty() {
            return Err(Error::Config("`sweep.stages` must not be empty".into()));
        }
        let spec = SweepSpec {
            base: self.profile(),
            primary: self.sweep.primary.to_axis()?,
            secondary: self
                .sweep
                .secondary
                .as_ref()
                .map(AxisSection::to_axis)
                .transpose()?,
        };
        spec.validate()?;
        Ok(Experiment {
            spec,
            stages: self.sweep.stages.clone(),
        })
    }
}
