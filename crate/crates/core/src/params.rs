//! Physical inputs of the transmitter and the rates derived from them.
//!
//! All quantities are SI. Rates and frequencies are angular (rad/s) unless
//! a field says otherwise.

use serde::{Deserialize, Serialize};

use crate::constants::{C_LIGHT, E_CHARGE, HBAR, K_B, M_ELECTRON};
use crate::error::{Error, Result};

/// Raw device parameters of the OC / PD / varactor / MC subsystem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalParams {
    /// Optical drive wavelength (m).
    pub lambda_c: f64,
    /// Microwave drive voltage amplitude (V).
    pub v_d: f64,
    /// Varactor capacitance-modulation ratio C'(x)/C0.
    pub mu_c: f64,
    /// Varactor depletion width (m).
    pub d: f64,
    /// PD band gap (eV).
    pub e_gap: f64,
    /// PD damping rate (1/s).
    pub gamma_p: f64,
    /// Effective mass in units of the electron mass.
    pub m_eff_ratio: f64,
    /// MC inductance (H).
    pub inductance_l: f64,
    /// OC decay rate (1/s).
    pub kappa_c: f64,
    /// MC decay rate (1/s).
    pub kappa_w: f64,
    /// Reference angular frequency (rad/s).
    pub omega_ref: f64,
    /// Total MC capacitance (F).
    pub c0: f64,
    /// Drive coupling capacitance (F).
    pub cd: f64,
    /// OC excitation power (W).
    pub p_c: f64,
    /// Operating temperature of the transmitter (K).
    pub t_c: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self::reference_device()
    }
}

impl PhysicalParams {
    /// The tabulated device used throughout the figure presets, at 1 K.
    pub fn reference_device() -> Self {
        let omega_ref = 2.0 * std::f64::consts::PI * 1.0e6;
        Self {
            lambda_c: 875e-9,
            v_d: 0.1e-3,
            mu_c: 2e-4,
            d: 100e-9,
            e_gap: 1.42,
            gamma_p: 32e9,
            m_eff_ratio: 0.45,
            inductance_l: 120e-12,
            kappa_c: 0.08 * omega_ref,
            kappa_w: 0.02 * omega_ref,
            omega_ref,
            c0: 2.67e-9,
            cd: 2e-12,
            p_c: 30e-3,
            t_c: 1.0,
        }
    }

    /// Effective PD carrier mass (kg).
    pub fn m_eff(&self) -> f64 {
        self.m_eff_ratio * M_ELECTRON
    }

    /// Rejects non-finite and out-of-range values.
    ///
    /// Drive amplitudes (`v_d`, `p_c`), `mu_c` and `t_c` may be zero; every
    /// other quantity must be strictly positive.
    pub fn validate(&self) -> Result<()> {
        let strictly_positive: [(&'static str, f64); 11] = [
            ("lambda_c", self.lambda_c),
            ("d", self.d),
            ("e_gap", self.e_gap),
            ("gamma_p", self.gamma_p),
            ("m_eff_ratio", self.m_eff_ratio),
            ("inductance_l", self.inductance_l),
            ("kappa_c", self.kappa_c),
            ("kappa_w", self.kappa_w),
            ("omega_ref", self.omega_ref),
            ("c0", self.c0),
            ("cd", self.cd),
        ];
        for (name, v) in strictly_positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(
                    name,
                    format!("must be finite and > 0, got {v}"),
                ));
            }
        }
        for (name, v) in [("v_d", self.v_d), ("p_c", self.p_c), ("t_c", self.t_c)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(
                    name,
                    format!("must be finite and >= 0, got {v}"),
                ));
            }
        }
        if !self.mu_c.is_finite() || !(0.0..1.0).contains(&self.mu_c) {
            return Err(Error::invalid(
                "mu_c",
                format!("must lie in [0, 1), got {}", self.mu_c),
            ));
        }
        Ok(())
    }
}

/// Drive detunings and the OC-PD coupling, all in rad/s.
///
/// `delta_eg = None` keeps the PD detuning implied by `lambda_c` and `e_gap`.
/// `Some(x)` retunes the optical cavity so that `omega_eg - omega_c = x`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Tuning {
    pub delta_c: f64,
    pub delta_w: f64,
    pub delta_eg: Option<f64>,
    pub g_oc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedRates {
    pub omega_c: f64,
    pub omega_eg: f64,
    pub omega_w: f64,
    pub omega_oc: f64,
    pub omega_wd: f64,
    pub delta_c: f64,
    pub delta_w: f64,
    pub delta_eg: f64,
    pub e_c: f64,
    pub e_w: f64,
    pub g_oc: f64,
    pub g_mc: f64,
    pub kappa_c: f64,
    pub kappa_w: f64,
    pub gamma_p: f64,
}

impl DerivedRates {
    pub fn derive(p: &PhysicalParams, tuning: &Tuning) -> Result<Self> {
        p.validate()?;
        for (name, v) in [("delta_c", tuning.delta_c), ("delta_w", tuning.delta_w)] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        let (lambda_omega_c, omega_eg, omega_w) = derive_frequencies(p)?;
        let omega_c = match tuning.delta_eg {
            Some(x) if !x.is_finite() => return Err(Error::invalid("delta_eg", "must be finite")),
            Some(x) => omega_eg - x,
            None => lambda_omega_c,
        };
        if omega_c <= 0.0 {
            return Err(Error::invalid(
                "delta_eg",
                "retuned optical frequency is not positive",
            ));
        }
        let omega_oc = omega_c - tuning.delta_c;
        let omega_wd = omega_w - tuning.delta_w;
        let (e_c, e_w) = derive_drives(p, omega_w, omega_oc)?;
        let (g_oc, g_mc) = derive_couplings(p, omega_w, omega_eg, tuning.g_oc)?;
        Ok(Self {
            omega_c,
            omega_eg,
            omega_w,
            omega_oc,
            omega_wd,
            delta_c: omega_c - omega_oc,
            delta_w: omega_w - omega_wd,
            delta_eg: omega_eg - omega_c,
            e_c,
            e_w,
            g_oc,
            g_mc,
            kappa_c: p.kappa_c,
            kappa_w: p.kappa_w,
            gamma_p: p.gamma_p,
        })
    }
}

/// Optical cavity, PD gap and LC resonance frequencies.
pub fn derive_frequencies(p: &PhysicalParams) -> Result<(f64, f64, f64)> {
    for (name, v) in [
        ("lambda_c", p.lambda_c),
        ("e_gap", p.e_gap),
        ("inductance_l", p.inductance_l),
        ("c0", p.c0),
    ] {
        if !(v > 0.0) {
            return Err(Error::invalid(name, format!("must be > 0, got {v}")));
        }
    }
    let omega_c = 2.0 * std::f64::consts::PI * C_LIGHT / p.lambda_c;
    let omega_eg = p.e_gap * E_CHARGE / HBAR;
    let omega_w = 1.0 / (p.inductance_l * p.c0).sqrt();
    Ok((omega_c, omega_eg, omega_w))
}

/// OC and MC drive rates `(e_c, e_w)`.
pub fn derive_drives(p: &PhysicalParams, omega_w: f64, omega_oc: f64) -> Result<(f64, f64)> {
    if !(omega_oc > 0.0) {
        return Err(Error::invalid(
            "omega_oc",
            format!("must be > 0, got {omega_oc}"),
        ));
    }
    if !(omega_w > 0.0) {
        return Err(Error::invalid(
            "omega_w",
            format!("must be > 0, got {omega_w}"),
        ));
    }
    let e_w = p.v_d * p.cd * (omega_w / (2.0 * HBAR * p.c0)).sqrt();
    let e_c = (2.0 * p.p_c * p.kappa_c / (HBAR * omega_oc)).sqrt();
    Ok((e_c, e_w))
}

/// `(g_oc, g_mc)`. The OC-PD rate is a configuration input and passes through.
pub fn derive_couplings(
    p: &PhysicalParams,
    omega_w: f64,
    omega_eg: f64,
    g_oc: f64,
) -> Result<(f64, f64)> {
    if !(p.d > 0.0) {
        return Err(Error::invalid("d", format!("must be > 0, got {}", p.d)));
    }
    if !(omega_eg > 0.0) {
        return Err(Error::invalid("omega_eg", "must be > 0"));
    }
    if !g_oc.is_finite() || g_oc < 0.0 {
        return Err(Error::invalid(
            "g_oc",
            format!("must be finite and >= 0, got {g_oc}"),
        ));
    }
    let zero_point_length = (HBAR / (omega_eg * p.m_eff())).sqrt();
    let g_mc = p.mu_c * omega_w / (2.0 * p.d) * zero_point_length;
    Ok((g_oc, g_mc))
}

/// Bose-Einstein occupation of a mode at angular frequency `omega` (rad/s)
/// and temperature `t` (K). Zero at `t = 0` and when the exponent overflows.
pub fn thermal_occupation(omega: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let x = HBAR * omega / (K_B * t);
    if x > 700.0 {
        return 0.0;
    }
    1.0 / x.exp_m1()
}
