//! One parameter point, end to end: rates, fixed point, stationary
//! covariance, and the entanglement of the OC-MC pair along the radar path.

use crate::channels::{roundtrip, AtmosphereParams, TargetParams};
use crate::dynamics::{
    build_diffusion_with, build_drift, certify_uncertainty, is_stable, solve_stationary_covariance,
    CovarianceMatrix, DiffusionMatrix, DriftMatrix, PdNoise, Stability,
};
use crate::entanglement::{extract_pair, verdict, EntanglementVerdict, ModePair};
use crate::error::{Error, Result};
use crate::params::{DerivedRates, PhysicalParams, Tuning};
use crate::steadystate::{solve_fixed_point, FixedPointReport, SolverOptions};

/// Everything needed to evaluate one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    pub physical: PhysicalParams,
    pub tuning: Tuning,
    pub atmosphere: AtmosphereParams,
    pub target: TargetParams,
    pub pd_noise: PdNoise,
}

impl Profile {
    pub fn validate(&self) -> Result<()> {
        self.physical.validate()?;
        self.atmosphere.validate()?;
        self.target.validate()?;
        DerivedRates::derive(&self.physical, &self.tuning).map(|_| ())
    }
}

/// Verdicts for the optical mode paired with the microwave mode at each stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageVerdicts {
    /// Microwave mode as it leaves the cavity.
    pub c_w: EntanglementVerdict,
    /// Remaining stages; `None` when the target absorbs everything.
    pub path: Option<[EntanglementVerdict; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub rates: DerivedRates,
    pub fixed_point: FixedPointReport,
    pub drift: DriftMatrix,
    pub diffusion: DiffusionMatrix,
    pub stability: Stability,
    /// Present only for stable points.
    pub covariance: Option<CovarianceMatrix>,
    /// Present only for stable points whose covariance is physical.
    pub verdicts: Option<StageVerdicts>,
    /// Why the verdicts are missing for a stable point.
    pub verdict_error: Option<Error>,
}

/// Evaluate a single point. Errors are reserved for invalid inputs and for
/// points with no usable fixed point; instability is reported in the result.
pub fn evaluate_point(profile: &Profile) -> Result<PointResult> {
    let rates = DerivedRates::derive(&profile.physical, &profile.tuning)?;
    let opts = SolverOptions::for_reference(profile.physical.omega_ref);
    let fixed_point = solve_fixed_point(&rates, &opts)?;
    let drift = build_drift(&rates, &fixed_point.state);
    let diffusion = build_diffusion_with(&rates, profile.physical.t_c, profile.pd_noise);
    let stability = is_stable(&drift)?;
    let mut out = PointResult {
        rates,
        fixed_point,
        drift,
        diffusion,
        stability,
        covariance: None,
        verdicts: None,
        verdict_error: None,
    };
    if !stability.stable {
        return Ok(out);
    }
    let v = solve_stationary_covariance(&drift, &diffusion)?;
    let checked = check_physical(&v, &drift, &diffusion)
        .and_then(|_| stage_verdicts(&v, profile, rates.omega_w));
    match checked {
        Ok(s) => out.verdicts = Some(s),
        Err(e) => out.verdict_error = Some(e),
    }
    out.covariance = Some(v);
    Ok(out)
}

/// Physicality of the stationary covariance. When the f64 eigenvalue test of
/// the uncertainty relation fails, the bound is decided in double-double.
pub fn check_physical(v: &CovarianceMatrix, a: &DriftMatrix, d: &DiffusionMatrix) -> Result<()> {
    match v.check_physical() {
        Err(e @ Error::NonPhysicalCm(_)) => {
            if v.is_symmetric(1e-12) && v.is_positive_definite() && certify_uncertainty(a, d, 1e-9)?
            {
                Ok(())
            } else {
                Err(e)
            }
        }
        r => r,
    }
}

fn stage_verdicts(v: &CovarianceMatrix, profile: &Profile, omega_w: f64) -> Result<StageVerdicts> {
    let cm = extract_pair(v, ModePair::OC_MC);
    let c_w = verdict(&cm)?;
    let path = match roundtrip(&cm, &profile.atmosphere, &profile.target, omega_w) {
        Ok(s) => Some([verdict(&s.c_a)?, verdict(&s.c_t)?, verdict(&s.c_b)?]),
        Err(Error::AbsorbingTarget) => None,
        Err(e) => return Err(e),
    };
    Ok(StageVerdicts { c_w, path })
}
