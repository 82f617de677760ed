//! One-mode lossy thermal channels for the atmosphere and the target.
//!
//! A channel `(tau, n_env)` mixes the selected mode with a thermal bath on a
//! beam splitter of transmissivity `tau`. On second moments this is
//! `B -> tau B + (1 - tau)(n_env + 1/2) I` and `C -> sqrt(tau) C`.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::entanglement::TwoModeCM;
use crate::error::{Error, Result};
use crate::params::thermal_occupation;

pub const DEFAULT_KAPPA_ATM: f64 = 2e-6;
pub const DEFAULT_T_ATM: f64 = 260.0;
pub const DEFAULT_KAPPA_T: f64 = 18.2;
pub const DEFAULT_SLAB_DZ: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    pub tau: f64,
    pub n_env: f64,
}

impl ChannelSpec {
    pub const IDENTITY: ChannelSpec = ChannelSpec {
        tau: 1.0,
        n_env: 0.0,
    };

    pub fn new(tau: f64, n_env: f64) -> Result<Self> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::invalid("tau", format!("{tau} not in (0, 1]")));
        }
        if !(n_env >= 0.0 && n_env.is_finite()) {
            return Err(Error::invalid(
                "n_env",
                format!("{n_env} must be finite and >= 0"),
            ));
        }
        Ok(ChannelSpec { tau, n_env })
    }

    /// True when the channel destroys any entanglement of the mode it acts on.
    pub fn is_entanglement_breaking(&self) -> bool {
        self.n_env * (1.0 - self.tau) >= self.tau
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AtmosphereParams {
    /// Field attenuation coefficient (1/m).
    pub kappa_atm: f64,
    /// One-way path length (m).
    pub range_r: f64,
    /// Air temperature (K).
    pub t_atm: f64,
}

impl Default for AtmosphereParams {
    fn default() -> Self {
        AtmosphereParams {
            kappa_atm: DEFAULT_KAPPA_ATM,
            range_r: 20.0,
            t_atm: DEFAULT_T_ATM,
        }
    }
}

impl AtmosphereParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("kappa_atm", self.kappa_atm),
            ("range_r", self.range_r),
            ("t_atm", self.t_atm),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("{v} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetParams {
    /// Absorption coefficient inside the target (1/m).
    pub kappa_t: f64,
    /// Slab thickness traversed by the field (m).
    pub slab_dz: f64,
    /// Target temperature (K).
    pub t_target: f64,
    /// Transmission amplitude magnitude `|t|`; the reflection is `sqrt(1 - |t|^2)`.
    pub t_mag: f64,
}

impl Default for TargetParams {
    fn default() -> Self {
        TargetParams {
            kappa_t: DEFAULT_KAPPA_T,
            slab_dz: DEFAULT_SLAB_DZ,
            t_target: DEFAULT_T_ATM,
            t_mag: 1.0,
        }
    }
}

impl TargetParams {
    pub fn r_mag(&self) -> f64 {
        (1.0 - self.t_mag * self.t_mag).max(0.0).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("kappa_t", self.kappa_t),
            ("slab_dz", self.slab_dz),
            ("t_target", self.t_target),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("{v} must be finite and >= 0")));
            }
        }
        if !(0.0..=1.0).contains(&self.t_mag) {
            return Err(Error::invalid(
                "t_mag",
                format!("{} not in [0, 1]", self.t_mag),
            ));
        }
        Ok(())
    }
}

pub fn atmosphere_channel(p: &AtmosphereParams, omega: f64) -> ChannelSpec {
    ChannelSpec {
        tau: (-2.0 * p.kappa_atm * p.range_r).exp(),
        n_env: thermal_occupation(omega, p.t_atm),
    }
}

pub fn target_channel(p: &TargetParams, omega: f64) -> Result<ChannelSpec> {
    let tau = p.t_mag * p.t_mag * (-2.0 * p.kappa_t * p.slab_dz).exp();
    if tau <= 0.0 {
        return Err(Error::AbsorbingTarget);
    }
    Ok(ChannelSpec {
        tau,
        n_env: thermal_occupation(omega, p.t_target),
    })
}

/// Which mode of a [`TwoModeCM`] a channel acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    First,
    Second,
}

pub fn apply_channel(cm: &TwoModeCM, which: Slot, ch: &ChannelSpec) -> TwoModeCM {
    let noise = Matrix2::identity() * ((1.0 - ch.tau) * (ch.n_env + 0.5));
    let amp = ch.tau.sqrt();
    let mut out = *cm;
    match which {
        Slot::First => out.a_block = cm.a_block * ch.tau + noise,
        Slot::Second => out.b_block = cm.b_block * ch.tau + noise,
    }
    out.c_block = cm.c_block * amp;
    out
}

/// States of the pair after each leg of the radar path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Staged {
    /// After the outbound atmosphere pass.
    pub c_a: TwoModeCM,
    /// After scattering off the target.
    pub c_t: TwoModeCM,
    /// After the return atmosphere pass.
    pub c_b: TwoModeCM,
}

/// Send the second mode out through the atmosphere, off the target and back.
pub fn roundtrip(
    cm: &TwoModeCM,
    atm: &AtmosphereParams,
    tgt: &TargetParams,
    omega: f64,
) -> Result<Staged> {
    let air = atmosphere_channel(atm, omega);
    let scatter = target_channel(tgt, omega)?;
    let c_a = apply_channel(cm, Slot::Second, &air);
    let c_t = apply_channel(&c_a, Slot::Second, &scatter);
    let c_b = apply_channel(&c_t, Slot::Second, &air);
    Ok(Staged { c_a, c_t, c_b })
}
