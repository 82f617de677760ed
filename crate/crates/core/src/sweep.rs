//! Parameter sweeps over one primary and an optional secondary variable.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entanglement::EntanglementVerdict;
use crate::error::{Error, Result};
use crate::pipeline::{evaluate_point, Profile};

/// Quantity a sweep axis varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    /// PD detuning, in units of `omega_ref`.
    DeltaEg,
    /// Transmitter temperature (K).
    TC,
    /// Varactor modulation ratio.
    MuC,
    /// Transmitter-target distance (m).
    DTd,
}

impl SweepVar {
    pub const ALL: [SweepVar; 4] = [
        SweepVar::DeltaEg,
        SweepVar::TC,
        SweepVar::MuC,
        SweepVar::DTd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepVar::DeltaEg => "delta_eg",
            SweepVar::TC => "t_c",
            SweepVar::MuC => "mu_c",
            SweepVar::DTd => "d_td",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            SweepVar::DeltaEg => "omega_ref",
            SweepVar::TC => "K",
            SweepVar::MuC => "1",
            SweepVar::DTd => "m",
        }
    }

    /// Write `x` (in this variable's unit) into `profile`.
    pub fn apply(self, profile: &mut Profile, x: f64) {
        match self {
            SweepVar::DeltaEg => profile.tuning.delta_eg = Some(x * profile.physical.omega_ref),
            SweepVar::TC => profile.physical.t_c = x,
            SweepVar::MuC => profile.physical.mu_c = x,
            SweepVar::DTd => profile.atmosphere.range_r = x,
        }
    }
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepVar::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown sweep variable `{s}`")))
    }
}

/// Grid of values along one axis.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Linear { min: f64, max: f64, count: usize },
    Log { min: f64, max: f64, count: usize },
    Values(Vec<f64>),
}

impl Grid {
    pub fn validate(&self) -> Result<()> {
        match self {
            Grid::Linear { min, max, count } | Grid::Log { min, max, count } => {
                if *count < 2 {
                    return Err(Error::Config(format!(
                        "grid count must be >= 2, got {count}"
                    )));
                }
                if !(min.is_finite() && max.is_finite() && min < max) {
                    return Err(Error::Config(format!(
                        "grid needs finite min < max, got [{min}, {max}]"
                    )));
                }
                if matches!(self, Grid::Log { .. }) && *min <= 0.0 {
                    return Err(Error::Config(format!("log grid needs min > 0, got {min}")));
                }
            }
            Grid::Values(v) => {
                if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Config(
                        "value list must be non-empty and finite".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        match self {
            Grid::Linear { min, max, count } => {
                let n = (*count - 1) as f64;
                (0..*count)
                    .map(|i| {
                        if i + 1 == *count {
                            *max
                        } else {
                            min + (max - min) * i as f64 / n
                        }
                    })
                    .collect()
            }
            Grid::Log { min, max, count } => {
                let (a, b) = (min.ln(), max.ln());
                let n = (*count - 1) as f64;
                (0..*count)
                    .map(|i| match i {
                        0 => *min,
                        i if i + 1 == *count => *max,
                        i => (a + (b - a) * i as f64 / n).exp(),
                    })
                    .collect()
            }
            Grid::Values(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub var: SweepVar,
    pub grid: Grid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: Profile,
    pub primary: Axis,
    /// One curve per value, for families of curves.
    pub secondary: Option<Axis>,
}

impl SweepSpec {
    /// Grid values in row order: the secondary axis is the outer loop.
    pub fn points(&self) -> Vec<(f64, Option<f64>)> {
        let xs = self.primary.grid.points();
        match &self.secondary {
            None => xs.into_iter().map(|x| (x, None)).collect(),
            Some(s) => s
                .grid
                .points()
                .into_iter()
                .flat_map(|y| xs.iter().map(move |&x| (x, Some(y))))
                .collect(),
        }
    }

    pub fn profile_at(&self, x: f64, y: Option<f64>) -> Profile {
        let mut p = self.base;
        if let (Some(s), Some(y)) = (&self.secondary, y) {
            s.var.apply(&mut p, y);
        }
        self.primary.var.apply(&mut p, x);
        p
    }

    /// Checks the grids and every point's parameters.
    pub fn validate(&self) -> Result<()> {
        self.primary.grid.validate()?;
        if let Some(s) = &self.secondary {
            s.grid.validate()?;
            if s.var == self.primary.var {
                return Err(Error::Config(format!(
                    "primary and secondary both sweep `{}`",
                    s.var
                )));
            }
        }
        for (x, y) in self.points() {
            self.profile_at(x, y).validate().map_err(|e| {
                Error::Config(format!(
                    "{} = {x}{}: {e}",
                    self.primary.var,
                    match (&self.secondary, y) {
                        (Some(s), Some(y)) => format!(", {} = {y}", s.var),
                        _ => String::new(),
                    }
                ))
            })?;
        }
        Ok(())
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut cols = vec![self.primary.var.name().to_string()];
        if let Some(s) = &self.secondary {
            cols.push(s.var.name().to_string());
        }
        cols.extend(FIXED_COLUMNS.iter().map(|s| s.to_string()));
        cols
    }
}

/// Columns that follow the swept variables in every result table.
pub const FIXED_COLUMNS: [&str; 12] = [
    "abs_a_s",
    "abs_c_s",
    "stable",
    "status",
    "two_eta_c_w",
    "log_neg_c_w",
    "two_eta_c_a",
    "log_neg_c_a",
    "two_eta_c_t",
    "log_neg_c_t",
    "two_eta_c_b",
    "log_neg_c_b",
];

/// Stage of the radar path at which the microwave mode is paired with the
/// optical mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    /// Leaving the microwave cavity.
    #[serde(rename = "c_w")]
    CW,
    /// After the outbound atmosphere.
    #[serde(rename = "c_a")]
    CA,
    /// After the target.
    #[serde(rename = "c_t")]
    CT,
    /// Back at the receiver.
    #[serde(rename = "c_b")]
    CB,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::CW, Stage::CA, Stage::CT, Stage::CB];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::CW => "c_w",
            Stage::CA => "c_a",
            Stage::CT => "c_t",
            Stage::CB => "c_b",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Stage::CW => "a_c & c_w",
            Stage::CA => "a_c & c_a",
            Stage::CT => "a_c & c_t",
            Stage::CB => "a_c & c_b",
        }
    }
}

/// Outcome of one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Picard,
    Reduced,
    Constrained,
    /// The target absorbed the signal; only the cavity verdict exists.
    Absorbing,
    NonPhysical,
    NonConvergence,
    Degenerate,
    Error,
}

impl Status {
    pub const ALL: [Status; 8] = [
        Status::Picard,
        Status::Reduced,
        Status::Constrained,
        Status::Absorbing,
        Status::NonPhysical,
        Status::NonConvergence,
        Status::Degenerate,
        Status::Error,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Picard => "picard",
            Status::Reduced => "reduced",
            Status::Constrained => "constrained",
            Status::Absorbing => "absorbing",
            Status::NonPhysical => "nonphysical",
            Status::NonConvergence => "nonconvergence",
            Status::Degenerate => "degenerate",
            Status::Error => "error",
        }
    }

    /// Points that count as failures for the exit code.
    pub fn is_failure(self) -> bool {
        matches!(
            self,
            Status::NonPhysical | Status::NonConvergence | Status::Degenerate | Status::Error
        )
    }
}

impl FromStr for Status {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Status::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown status `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub primary: f64,
    pub secondary: Option<f64>,
    pub abs_a_s: Option<f64>,
    pub abs_c_s: Option<f64>,
    /// `None` when no fixed point was found.
    pub stable: Option<bool>,
    pub status: Status,
    /// Indexed by [`Stage::index`].
    pub verdicts: [Option<EntanglementVerdict>; 4],
}

impl ResultRow {
    pub fn two_eta(&self, stage: Stage) -> Option<f64> {
        self.verdicts[stage.index()].map(|v| v.two_eta)
    }

    pub fn log_negativity(&self, stage: Stage) -> Option<f64> {
        self.verdicts[stage.index()].map(|v| v.log_negativity)
    }
}

pub fn evaluate_row(profile: &Profile, x: f64, y: Option<f64>) -> ResultRow {
    let mut row = ResultRow {
        primary: x,
        secondary: y,
        abs_a_s: None,
        abs_c_s: None,
        stable: None,
        status: Status::Error,
        verdicts: [None; 4],
    };
    let r = match evaluate_point(profile) {
        Ok(r) => r,
        Err(e) => {
            row.status = match e {
                Error::NonConvergence { .. } => Status::NonConvergence,
                Error::DegenerateDetuning { .. } => Status::Degenerate,
                _ => Status::Error,
            };
            return row;
        }
    };
    row.abs_a_s = Some(r.fixed_point.state.a_s.norm());
    row.abs_c_s = Some(r.fixed_point.state.c_s.norm());
    row.stable = Some(r.stability.stable);
    row.status = match r.fixed_point.branch {
        crate::steadystate::Branch::Picard => Status::Picard,
        crate::steadystate::Branch::Reduced => Status::Reduced,
        crate::steadystate::Branch::Constrained => Status::Constrained,
    };
    if let Some(v) = r.verdicts {
        row.verdicts[0] = Some(v.c_w);
        match v.path {
            Some([a, t, b]) => {
                row.verdicts[1] = Some(a);
                row.verdicts[2] = Some(t);
                row.verdicts[3] = Some(b);
            }
            None => row.status = Status::Absorbing,
        }
    } else if r.stability.stable {
        row.status = match r.verdict_error {
            Some(Error::NonPhysicalCm(_)) => Status::NonPhysical,
            _ => Status::Error,
        };
    }
    row
}

/// Evaluate every grid point. Points run in parallel on `jobs` threads
/// (all cores when `None`); rows come back in grid order.
pub fn run_sweep(spec: &SweepSpec, jobs: Option<usize>) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let points = spec.points();
    let work = || {
        points
            .par_iter()
            .map(|&(x, y)| evaluate_row(&spec.profile_at(x, y), x, y))
            .collect::<Vec<_>>()
    };
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))
            .map(|pool| pool.install(work)),
        None => Ok(work()),
    }
}
