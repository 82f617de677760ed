//! Two-mode covariance blocks and the symplectic-eigenvalue entanglement test.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Matrix4, SMatrix};

use crate::dynamics::CovarianceMatrix;
use crate::error::{Error, Result};

/// Relative tolerance for the real-spectrum guard `sigma^2 >= 4 det V`.
pub const SPECTRUM_GUARD: f64 = 1e-12;

/// One of the three bosonic modes of the linearized system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Photodetector oscillator `(q, p)`.
    Pd,
    /// Optical cavity `a_c`.
    Oc,
    /// Microwave cavity `c_w`.
    Mc,
}

impl Mode {
    /// Row offset of the mode's quadrature pair in the 6x6 ordering.
    pub fn offset(self) -> usize {
        match self {
            Mode::Pd => 0,
            Mode::Oc => 2,
            Mode::Mc => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Pd => "pd",
            Mode::Oc => "oc",
            Mode::Mc => "mc",
        }
    }
}

/// An ordered pair of distinct modes, e.g. `oc-mc`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModePair {
    pub first: Mode,
    pub second: Mode,
}

impl ModePair {
    pub const OC_MC: ModePair = ModePair {
        first: Mode::Oc,
        second: Mode::Mc,
    };

    pub fn new(first: Mode, second: Mode) -> Result<Self> {
        if first == second {
            return Err(Error::InvalidPair(format!(
                "{}-{}",
                first.as_str(),
                second.as_str()
            )));
        }
        Ok(ModePair { first, second })
    }
}

impl fmt::Display for ModePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.first.as_str(), self.second.as_str())
    }
}

impl FromStr for ModePair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mode = |m: &str| match m.trim().to_ascii_lowercase().as_str() {
            "pd" => Some(Mode::Pd),
            "oc" => Some(Mode::Oc),
            "mc" => Some(Mode::Mc),
            _ => None,
        };
        let (a, b) = s
            .split_once(['-', '&', ','])
            .ok_or_else(|| Error::InvalidPair(s.to_string()))?;
        match (mode(a), mode(b)) {
            (Some(a), Some(b)) => ModePair::new(a, b),
            _ => Err(Error::InvalidPair(s.to_string())),
        }
    }
}

/// Covariance matrix of two modes, `[[A, C], [C^T, B]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeCM {
    pub a_block: Matrix2<f64>,
    pub b_block: Matrix2<f64>,
    pub c_block: Matrix2<f64>,
}

impl TwoModeCM {
    pub fn from_matrix(m: &Matrix4<f64>) -> Self {
        TwoModeCM {
            a_block: m.fixed_view::<2, 2>(0, 0).into_owned(),
            b_block: m.fixed_view::<2, 2>(2, 2).into_owned(),
            c_block: m.fixed_view::<2, 2>(0, 2).into_owned(),
        }
    }

    pub fn assemble(&self) -> Matrix4<f64> {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&self.a_block);
        m.fixed_view_mut::<2, 2>(2, 2).copy_from(&self.b_block);
        m.fixed_view_mut::<2, 2>(0, 2).copy_from(&self.c_block);
        m.fixed_view_mut::<2, 2>(2, 0)
            .copy_from(&self.c_block.transpose());
        m
    }

    /// Both modes in vacuum.
    pub fn vacuum() -> Self {
        Self::thermal(0.0, 0.0)
    }

    /// Uncorrelated thermal modes with mean occupations `n1`, `n2`.
    pub fn thermal(n1: f64, n2: f64) -> Self {
        TwoModeCM {
            a_block: Matrix2::identity() * (n1 + 0.5),
            b_block: Matrix2::identity() * (n2 + 0.5),
            c_block: Matrix2::zeros(),
        }
    }

    /// Two-mode squeezed vacuum with squeezing parameter `r`.
    pub fn two_mode_squeezed(r: f64) -> Self {
        let ch = 0.5 * (2.0 * r).cosh();
        let sh = 0.5 * (2.0 * r).sinh();
        TwoModeCM {
            a_block: Matrix2::identity() * ch,
            b_block: Matrix2::identity() * ch,
            c_block: Matrix2::new(sh, 0.0, 0.0, -sh),
        }
    }

    /// Smallest eigenvalue of `V + i Omega/2`, via its real 8x8 embedding.
    pub fn min_uncertainty_eigenvalue(&self) -> f64 {
        let v = self.assemble();
        let mut omega = Matrix4::zeros();
        omega[(0, 1)] = 1.0;
        omega[(1, 0)] = -1.0;
        omega[(2, 3)] = 1.0;
        omega[(3, 2)] = -1.0;
        let mut big = SMatrix::<f64, 8, 8>::zeros();
        big.fixed_view_mut::<4, 4>(0, 0).copy_from(&v);
        big.fixed_view_mut::<4, 4>(4, 4).copy_from(&v);
        big.fixed_view_mut::<4, 4>(0, 4).copy_from(&(-0.5 * omega));
        big.fixed_view_mut::<4, 4>(4, 0).copy_from(&(0.5 * omega));
        big.symmetric_eigenvalues().min()
    }

    /// Symmetry, positive definiteness and the uncertainty relation.
    pub fn check_physical(&self) -> Result<()> {
        let v = self.assemble();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonPhysicalCm("non-finite entry".into()));
        }
        let scale = v.amax().max(1.0);
        let a = self.a_block;
        let b = self.b_block;
        if (a[(0, 1)] - a[(1, 0)]).abs() > 1e-12 * scale
            || (b[(0, 1)] - b[(1, 0)]).abs() > 1e-12 * scale
        {
            return Err(Error::NonPhysicalCm("diagonal blocks not symmetric".into()));
        }
        if v.cholesky().is_none() {
            return Err(Error::NonPhysicalCm("not positive definite".into()));
        }
        let lam = self.min_uncertainty_eigenvalue();
        if lam < -1e-9 {
            return Err(Error::NonPhysicalCm(format!(
                "uncertainty relation violated (min eigenvalue {lam:.3e})"
            )));
        }
        Ok(())
    }
}

/// Copy the blocks of `pair` out of a 6x6 covariance matrix.
pub fn extract_pair(v: &CovarianceMatrix, pair: ModePair) -> TwoModeCM {
    let (i, j) = (pair.first.offset(), pair.second.offset());
    let m = &v.0;
    TwoModeCM {
        a_block: m.fixed_view::<2, 2>(i, i).into_owned(),
        b_block: m.fixed_view::<2, 2>(j, j).into_owned(),
        c_block: m.fixed_view::<2, 2>(i, j).into_owned(),
    }
}

/// Seralian invariant `sigma = det A + det B - 2 det C` and `det V`.
fn invariants(cm: &TwoModeCM) -> (f64, f64) {
    let sigma =
        cm.a_block.determinant() + cm.b_block.determinant() - 2.0 * cm.c_block.determinant();
    (sigma, cm.assemble().determinant())
}

fn discriminant(sigma: f64, det_v: f64) -> Result<f64> {
    let disc = sigma * sigma - 4.0 * det_v;
    if disc < -SPECTRUM_GUARD * (sigma * sigma).max(1.0) {
        return Err(Error::NonPhysicalCm(format!(
            "complex symplectic spectrum (sigma^2 - 4 det V = {disc:.3e})"
        )));
    }
    Ok(disc.max(0.0))
}

/// Smallest symplectic eigenvalue of the partially transposed CM.
///
/// Evaluated as `2 det V / (sigma + sqrt(disc))`, the cancellation-free form
/// of `(sigma - sqrt(disc)) / 2`.
pub fn symplectic_eta(cm: &TwoModeCM) -> Result<f64> {
    let (sigma, det_v) = invariants(cm);
    if !(sigma.is_finite() && det_v.is_finite()) {
        return Err(Error::NonPhysicalCm("non-finite invariants".into()));
    }
    let disc = discriminant(sigma, det_v)?;
    let denom = sigma + disc.sqrt();
    if det_v <= 0.0 || denom <= 0.0 {
        return Err(Error::NonPhysicalCm(format!(
            "non-positive invariants (sigma {sigma:.3e}, det V {det_v:.3e})"
        )));
    }
    Ok((2.0 * det_v / denom).sqrt())
}

/// Larger symplectic eigenvalue of the partially transposed CM.
pub fn symplectic_eta_plus(cm: &TwoModeCM) -> Result<f64> {
    let (sigma, det_v) = invariants(cm);
    let disc = discriminant(sigma, det_v)?;
    Ok((0.5 * (sigma + disc.sqrt())).max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntanglementVerdict {
    pub two_eta: f64,
    pub entangled: bool,
    pub log_negativity: f64,
}

impl EntanglementVerdict {
    pub fn from_two_eta(two_eta: f64) -> Self {
        EntanglementVerdict {
            two_eta,
            entangled: two_eta < 1.0,
            log_negativity: (-two_eta.ln()).max(0.0),
        }
    }
}

pub fn verdict(cm: &TwoModeCM) -> Result<EntanglementVerdict> {
    Ok(EntanglementVerdict::from_two_eta(2.0 * symplectic_eta(cm)?))
}
