//! Built-in experiments reproducing the figure sweeps.
//!
//! Each preset fixes its mu_c, D_td and T_c ladders. The remaining quantities
//! use the shipped calibration: `g_oc = 1e-3 omega_ref`,
//! `delta_c = omega_ref`, `delta_w = 0`, and a 200-point `delta_eg` axis on
//! `[-50, 50] omega_ref`. The even point count keeps `delta_eg = 0`, where no
//! fixed point exists, off the grid.

use crate::channels::{AtmosphereParams, TargetParams};
use crate::config::{AxisSection, ConfigFile, Couplings, Drives, SweepSection};
use crate::dynamics::PdNoise;
use crate::error::{Error, Result};
use crate::params::PhysicalParams;
use crate::sweep::{Stage, SweepVar};

pub const CAL_G_OC: f64 = 1e-3;
pub const CAL_DELTA_C: f64 = 1.0;
pub const CAL_DELTA_W: f64 = 0.0;
pub const CAL_SPAN: f64 = 50.0;
pub const CAL_COUNT: usize = 200;

pub const LADDER_LOW: [f64; 5] = [0.5, 1.0, 2.0, 3.5, 5.0];
pub const LADDER_WIDE: [f64; 5] = [1.0, 3.5, 5.0, 50.0, 150.0];
pub const MU_LADDER: [f64; 3] = [1e-4, 2e-4, 3.09e-4];
pub const DISTANCES: [f64; 3] = [20.0, 200.0, 2000.0];

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    build: fn() -> ConfigFile,
}

impl Preset {
    pub fn config(&self) -> ConfigFile {
        (self.build)()
    }
}

pub const PRESETS: [Preset; 6] = [
    Preset {
        name: "fig2a",
        description:
            "a_c & c_w vs delta_eg, T_c in {0.5, 1, 2, 3.5, 5} K, mu_c = 2e-4, D_td = 20 m",
        build: fig2a,
    },
    Preset {
        name: "fig2b",
        description:
            "a_c & c_b vs delta_eg, T_c in {0.5, 1, 2, 3.5, 5} K, mu_c = 2e-4, D_td = 20 m",
        build: fig2b,
    },
    Preset {
        name: "fig3",
        description: "a_c & c_w vs delta_eg, mu_c in {1, 2, 3.09}e-4, T_c = 5 K, D_td = 20 m",
        build: fig3,
    },
    Preset {
        name: "fig4",
        description: "all stages vs delta_eg, D_td in {20, 200, 2000} m, mu_c = 2e-4, T_c = 1 K",
        build: fig4,
    },
    Preset {
        name: "fig5",
        description:
            "a_c & c_w and a_c & c_b vs delta_eg, T_c in {1, 3.5, 5, 50, 150} K, mu_c = 2e-4",
        build: fig5,
    },
    Preset {
        name: "fig6",
        description:
            "a_c & c_w and a_c & c_b vs delta_eg, T_c in {1, 3.5, 5, 50, 150} K, mu_c = 3.09e-4",
        build: fig6,
    },
];

pub fn find(name: &str) -> Result<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let names: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
        Error::Config(format!(
            "unknown preset `{name}` (available: {})",
            names.join(", ")
        ))
    })
}

/// Calibrated base configuration at the given `mu_c`, `T_c` and range.
pub fn base(mu_c: f64, t_c: f64, range_r: f64) -> ConfigFile {
    ConfigFile {
        physical: PhysicalParams {
            mu_c,
            t_c,
            ..PhysicalParams::reference_device()
        },
        drives: Drives {
            delta_c: CAL_DELTA_C,
            delta_w: CAL_DELTA_W,
        },
        couplings: Couplings {
            g_oc: CAL_G_OC,
            delta_eg: None,
            pd_noise: PdNoise::Lindblad,
        },
        atmosphere: AtmosphereParams {
            range_r,
            ..AtmosphereParams::default()
        },
        target: TargetParams::default(),
        sweep: SweepSection {
            primary: AxisSection::range(SweepVar::DeltaEg, -CAL_SPAN, CAL_SPAN, CAL_COUNT),
            stages: vec![Stage::CW],
            secondary: None,
        },
    }
}

fn family(mut c: ConfigFile, var: SweepVar, values: &[f64], stages: &[Stage]) -> ConfigFile {
    c.sweep.secondary = Some(AxisSection::values(var, values));
    c.sweep.stages = stages.to_vec();
    c
}

fn fig2a() -> ConfigFile {
    family(
        base(2e-4, 1.0, 20.0),
        SweepVar::TC,
        &LADDER_LOW,
        &[Stage::CW],
    )
}

fn fig2b() -> ConfigFile {
    family(
        base(2e-4, 1.0, 20.0),
        SweepVar::TC,
        &LADDER_LOW,
        &[Stage::CB],
    )
}

fn fig3() -> ConfigFile {
    family(
        base(2e-4, 5.0, 20.0),
        SweepVar::MuC,
        &MU_LADDER,
        &[Stage::CW],
    )
}

fn fig4() -> ConfigFile {
    family(
        base(2e-4, 1.0, 20.0),
        SweepVar::DTd,
        &DISTANCES,
        &Stage::ALL,
    )
}

fn fig5() -> ConfigFile {
    family(
        base(2e-4, 1.0, 20.0),
        SweepVar::TC,
        &LADDER_WIDE,
        &[Stage::CW, Stage::CB],
    )
}

fn fig6() -> ConfigFile {
    family(
        base(3.09e-4, 1.0, 20.0),
        SweepVar::TC,
        &LADDER_WIDE,
        &[Stage::CW, Stage::CB],
    )
}
