//! Steady-state entanglement of an optoelectronic microwave quantum
//! illumination transmitter, and its degradation along the radar path.
//!
//! Pipeline per parameter point: [`params`] derives rates, [`steadystate`]
//! finds the semiclassical fixed point, [`dynamics`] linearizes about it and
//! solves for the stationary covariance, [`entanglement`] judges mode pairs,
//! and [`channels`] propagates the microwave mode through atmosphere and
//! target.

pub mod channels;
pub mod config;
pub mod constants;
pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod output;
pub mod params;
pub mod pipeline;
pub mod presets;
pub mod selfcheck;
pub mod steadystate;
pub mod sweep;

pub use error::{Error, Result};
