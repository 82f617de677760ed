//! Linearized fluctuation dynamics and the stationary covariance matrix.
//!
//! Quadrature ordering is `(dq, dp, dX_c, dY_c, dX_w, dY_w)` with
//! `X = (a + a^+)/sqrt(2)`, `Y = (a - a^+)/(i sqrt(2))`; the vacuum variance
//! of each quadrature is 1/2.

use nalgebra::{DMatrix, DVector, Matrix6, SMatrix, Vector6};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::params::{thermal_occupation, DerivedRates};
use crate::steadystate::SteadyState;

pub const DIM: usize = 6;

/// Symplectic form of the three modes in the quadrature ordering above.
pub fn symplectic_form() -> Matrix6<f64> {
    let mut om = Matrix6::zeros();
    for k in 0..3 {
        om[(2 * k, 2 * k + 1)] = 1.0;
        om[(2 * k + 1, 2 * k)] = -1.0;
    }
    om
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftMatrix(pub Matrix6<f64>);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionMatrix(pub Vector6<f64>);

impl DiffusionMatrix {
    pub fn matrix(&self) -> Matrix6<f64> {
        Matrix6::from_diagonal(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix(pub Matrix6<f64>);

/// Noise model for the photodetector coordinate pair.
///
/// `Brownian` puts all PD noise on the momentum quadrature, matching the
/// damping that acts on `p` alone. That generator is not completely
/// positive, and in the strongly overdamped regime of the tabulated device
/// (`gamma_p >> |delta_eg|`) it yields states violating the uncertainty
/// relation. `Lindblad` adds the smallest temperature-independent position
/// diffusion, `gamma_p / 4`, for which the PD block satisfies
/// `D + i/2 (A Om + Om A^T) >= 0` at every temperature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PdNoise {
    Brownian,
    #[default]
    Lindblad,
}

impl PdNoise {
    pub fn as_str(&self) -> &'static str {
        match self {
            PdNoise::Brownian => "brownian",
            PdNoise::Lindblad => "lindblad",
        }
    }
}

/// Linearized drift about the fixed point `s`.
///
/// The effective cavity detunings are `delta_c + g_oc p_s` and
/// `delta_w - g_mc q_s`. Entries are the exact Jacobian of the equations of
/// motion written in quadratures; the PD momentum row therefore carries
/// `+sqrt(2) g_mc Im(c_s)` against `dY_w`.
pub fn build_drift(r: &DerivedRates, s: &SteadyState) -> DriftMatrix {
    let sq2 = std::f64::consts::SQRT_2;
    let (ar, ai) = (s.a_s.re, s.a_s.im);
    let (cr, ci) = (s.c_s.re, s.c_s.im);
    let dc = r.delta_c + r.g_oc * s.p_s;
    let dw = r.delta_w - r.g_mc * s.q_s;
    let go = sq2 * r.g_oc;
    let gm = sq2 * r.g_mc;
    #[rustfmt::skip]
    let a = Matrix6::new(
        0.0,          r.delta_eg,  go,         0.0,        0.0,        0.0,
        -r.delta_eg,  -r.gamma_p,  0.0,        0.0,        gm * cr,    gm * ci,
        0.0,          go * ai,     -r.kappa_c, dc,         0.0,        0.0,
        0.0,          -go * ar,    -dc,        -r.kappa_c, 0.0,        0.0,
        -gm * ci,     0.0,         0.0,        0.0,        -r.kappa_w, dw,
        gm * cr,      0.0,         0.0,        0.0,        -dw,        -r.kappa_w,
    );
    DriftMatrix(a)
}

/// Input-noise diffusion at transmitter temperature `t_c` (K), using the
/// default [`PdNoise`] model.
pub fn build_diffusion(r: &DerivedRates, t_c: f64) -> DiffusionMatrix {
    build_diffusion_with(r, t_c, PdNoise::default())
}

/// The PD bath occupation is taken at the gap frequency `omega_eg`; the
/// PD entry is `gamma_p (2N + 1)`, the fluctuation-dissipation partner of
/// the momentum damping.
pub fn build_diffusion_with(r: &DerivedRates, t_c: f64, model: PdNoise) -> DiffusionMatrix {
    let n_pd = thermal_occupation(r.omega_eg, t_c);
    let n_c = thermal_occupation(r.omega_c, t_c);
    let n_w = thermal_occupation(r.omega_w, t_c);
    let dq = match model {
        PdNoise::Brownian => 0.0,
        PdNoise::Lindblad => 0.25 * r.gamma_p,
    };
    let dc = r.kappa_c * (2.0 * n_c + 1.0);
    let dw = r.kappa_w * (2.0 * n_w + 1.0);
    DiffusionMatrix(Vector6::new(
        dq,
        r.gamma_p * (2.0 * n_pd + 1.0),
        dc,
        dc,
        dw,
        dw,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stability {
    pub stable: bool,
    /// Largest real part over the spectrum.
    pub abscissa: f64,
}

/// Hurwitz test on the drift spectrum.
pub fn is_stable(a: &DriftMatrix) -> Result<Stability> {
    if a.0.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure("non-finite drift entries".into()));
    }
    let scale = a.0.amax().max(f64::MIN_POSITIVE);
    let schur = (a.0 / scale)
        .try_schur(1e-15, 10_000)
        .ok_or_else(|| Error::EigenFailure("Schur iteration did not converge".into()))?;
    let abscissa = schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re * scale)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Stability {
        stable: abscissa < 0.0,
        abscissa,
    })
}

/// Frobenius norm of `A V + V A^T + D`.
pub fn lyapunov_residual(a: &DriftMatrix, d: &DiffusionMatrix, v: &Matrix6<f64>) -> f64 {
    (a.0 * v + v * a.0.transpose() + d.matrix()).norm()
}

/// Diagonal similarity that balances row and column norms of `a`.
fn balance(a: &Matrix6<f64>) -> Vector6<f64> {
    let mut t = Vector6::repeat(1.0);
    let mut m = *a;
    for _ in 0..50 {
        let mut changed = false;
        for i in 0..DIM {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..DIM {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let f = (r / c).sqrt();
            if !(0.5..=2.0).contains(&f) {
                let f = 2f64.powi(f.log2().round() as i32);
                t[i] *= f;
                for j in 0..DIM {
                    m[(j, i)] *= f;
                    m[(i, j)] /= f;
                }
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    t
}

/// LU factorization of the vectorized Lyapunov operator
/// `X -> A X + X A^T`, built in balanced coordinates.
struct LyapunovOperator {
    t: Vector6<f64>,
    k: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl LyapunovOperator {
    fn new(a: &DriftMatrix) -> Self {
        // A' = T^-1 A T, D' = T^-1 D T^-1, V = T V' T.
        let t = balance(&a.0);
        let ab = Matrix6::from_fn(|i, j| a.0[(i, j)] * t[j] / t[i]);
        let n = DIM;
        let mut k = DMatrix::<f64>::zeros(n * n, n * n);
        // vec is column-major: index (i, j) -> i + n j
        for j in 0..n {
            for i in 0..n {
                let row = i + n * j;
                for l in 0..n {
                    k[(row, l + n * j)] += ab[(i, l)];
                    k[(row, i + n * l)] += ab[(j, l)];
                }
            }
        }
        let lu = k.clone().lu();
        LyapunovOperator { t, k, lu }
    }

    /// Solves `A X + X A^T = rhs`.
    fn solve(&self, rhs: &Matrix6<f64>) -> Result<Matrix6<f64>> {
        let t = &self.t;
        let rb = Matrix6::from_fn(|i, j| rhs[(i, j)] / (t[i] * t[j]));
        let rhs = DVector::from_column_slice(rb.as_slice());
        let mut x = self.lu.solve(&rhs).ok_or(Error::SingularLyapunov)?;
        for _ in 0..3 {
            let r = &rhs - &self.k * &x;
            match self.lu.solve(&r) {
                Some(dx) => x += dx,
                None => break,
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularLyapunov);
        }
        let xb = Matrix6::from_column_slice(x.as_slice());
        let x = Matrix6::from_fn(|i, j| xb[(i, j)] * t[i] * t[j]);
        Ok(0.5 * (x + x.transpose()))
    }
}

fn require_stable(a: &DriftMatrix) -> Result<()> {
    let st = is_stable(a)?;
    if !st.stable {
        return Err(Error::UnstableDrift {
            abscissa: st.abscissa,
        });
    }
    Ok(())
}

/// Stationary covariance from the vectorized Lyapunov equation
/// `(I (x) A + A (x) I) vec(V) = -vec(D)`.
pub fn solve_stationary_covariance(
    a: &DriftMatrix,
    d: &DiffusionMatrix,
) -> Result<CovarianceMatrix> {
    require_stable(a)?;
    LyapunovOperator::new(a)
        .solve(&(-d.matrix()))
        .map(CovarianceMatrix)
}

/// Real symmetric embedding `[[S, -K], [K, S]]` of the Hermitian matrix
/// `S + i K`; it has the same spectrum with doubled multiplicity.
fn hermitian_embedding(s: &Matrix6<f64>, k: &Matrix6<f64>) -> SMatrix<f64, 12, 12> {
    let mut m = SMatrix::<f64, 12, 12>::zeros();
    m.fixed_view_mut::<6, 6>(0, 0).copy_from(s);
    m.fixed_view_mut::<6, 6>(6, 6).copy_from(s);
    m.fixed_view_mut::<6, 6>(0, 6).copy_from(&(-k));
    m.fixed_view_mut::<6, 6>(6, 0).copy_from(k);
    m
}

/// Smallest eigenvalue of `D - (i/2)(A Om + Om A^T)`. When it is
/// non-negative the stationary covariance is guaranteed to obey the
/// uncertainty relation. The OC-PD coupling is not generated by a
/// Hamiltonian, so this fails once `g_oc |a_s|` is comparable to
/// `sqrt(gamma_p kappa_c)`; the stationary state may then still be physical.
pub fn noise_condition_eigenvalue(a: &DriftMatrix, d: &DiffusionMatrix) -> f64 {
    let om = symplectic_form();
    let k = (a.0 * om + om * a.0.transpose()) * -0.5;
    hermitian_embedding(&d.matrix(), &k)
        .symmetric_eigenvalues()
        .min()
}

/// Decides `V + (i/2) Om >= -tol` for the exact stationary solution.
///
/// The covariance is refined against a double-double residual and the
/// shifted embedding is tested by a double-double Cholesky factorization.
/// An f64 eigenvalue cannot resolve such a bound once entries of `V` are
/// much larger than `tol / eps`.
pub fn certify_uncertainty(a: &DriftMatrix, d: &DiffusionMatrix, tol: f64) -> Result<bool> {
    require_stable(a)?;
    let op = LyapunovOperator::new(a);
    let dm = dd_from(&d.matrix());
    let ad = dd_from(&a.0);
    let mut v = dd_from(&op.solve(&(-d.matrix()))?);
    for _ in 0..3 {
        // R = A V + V A^T + D
        let av = dd_mul(&ad, &v);
        let mut r = dd_zero();
        for i in 0..DIM {
            for j in 0..DIM {
                r[i][j] = av[i][j] + av[j][i] + dm[i][j];
            }
        }
        let dv = op.solve(&(-dd_to(&r)))?;
        for i in 0..DIM {
            for j in 0..DIM {
                v[i][j] += Dd::from(dv[(i, j)]);
            }
        }
    }
    let om = symplectic_form() * 0.5;
    let n = 2 * DIM;
    let mut m = vec![vec![Dd::from(0.0); n]; n];
    for i in 0..DIM {
        for j in 0..DIM {
            m[i][j] = v[i][j];
            m[i + DIM][j + DIM] = v[i][j];
            m[i][j + DIM] = Dd::from(-om[(i, j)]);
            m[i + DIM][j] = Dd::from(om[(i, j)]);
        }
        m[i][i] += Dd::from(tol);
        m[i + DIM][i + DIM] += Dd::from(tol);
    }
    Ok(dd_cholesky_succeeds(&mut m))
}

fn dd_cholesky_succeeds(m: &mut [Vec<Dd>]) -> bool {
    let n = m.len();
    for j in 0..n {
        let mut pivot = m[j][j];
        for k in 0..j {
            pivot -= m[j][k] * m[j][k];
        }
        if !(pivot.hi() > 0.0) {
            return false;
        }
        let l = pivot.sqrt();
        m[j][j] = l;
        for i in j + 1..n {
            let mut x = m[i][j];
            for k in 0..j {
                x -= m[i][k] * m[j][k];
            }
            m[i][j] = x / l;
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeReport {
    pub v: CovarianceMatrix,
    pub time: f64,
    /// `||A V + V A^T + D||_F` at the final state.
    pub residual: f64,
    pub converged: bool,
}

fn covariance_rate(a: &Matrix6<f64>, d: &Matrix6<f64>, v: &Matrix6<f64>) -> Matrix6<f64> {
    a * v + v * a.transpose() + d
}

/// Classical fixed-step RK4 on `dV/dt = A V + V A^T + D`, symmetrized each
/// step. Stops early once `||dV/dt||_F <= tol`.
pub fn integrate_covariance_ode(
    a: &DriftMatrix,
    d: &DiffusionMatrix,
    v0: &Matrix6<f64>,
    horizon: f64,
    step: f64,
    tol: f64,
) -> Result<OdeReport> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::invalid("step", "must be finite and > 0"));
    }
    let dm = d.matrix();
    let mut v = *v0;
    let mut t = 0.0;
    loop {
        let rate = covariance_rate(&a.0, &dm, &v);
        let residual = rate.norm();
        if residual <= tol || t >= horizon || !residual.is_finite() {
            return Ok(OdeReport {
                v: CovarianceMatrix(v),
                time: t,
                residual,
                converged: residual <= tol,
            });
        }
        let h = step;
        let k1 = rate;
        let k2 = covariance_rate(&a.0, &dm, &(v + k1 * (0.5 * h)));
        let k3 = covariance_rate(&a.0, &dm, &(v + k2 * (0.5 * h)));
        let k4 = covariance_rate(&a.0, &dm, &(v + k3 * h));
        v += (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0);
        v = 0.5 * (v + v.transpose());
        t += h;
    }
}

type Dd = TwoFloat;
type DdMat = [[Dd; DIM]; DIM];

fn dd_zero() -> DdMat {
    [[Dd::from(0.0); DIM]; DIM]
}

fn dd_from(m: &Matrix6<f64>) -> DdMat {
    let mut out = dd_zero();
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = Dd::from(m[(i, j)]);
        }
    }
    out
}

fn dd_to(m: &DdMat) -> Matrix6<f64> {
    Matrix6::from_fn(|i, j| m[i][j].hi() + m[i][j].lo())
}

fn dd_mul(a: &DdMat, b: &DdMat) -> DdMat {
    let mut out = dd_zero();
    for i in 0..DIM {
        for j in 0..DIM {
            let mut acc = Dd::from(0.0);
            for k in 0..DIM {
                acc += a[i][k] * b[k][j];
            }
            out[i][j] = acc;
        }
    }
    out
}

fn dd_mul_bt(a: &DdMat, b: &DdMat) -> DdMat {
    let mut out = dd_zero();
    for i in 0..DIM {
        for j in 0..DIM {
            let mut acc = Dd::from(0.0);
            for k in 0..DIM {
                acc += a[i][k] * b[j][k];
            }
            out[i][j] = acc;
        }
    }
    out
}

/// `E X E^T + Y`, symmetrized.
fn dd_congruence_add(e: &DdMat, x: &DdMat, y: &DdMat) -> DdMat {
    let ex = dd_mul(e, x);
    let mut out = dd_mul_bt(&ex, e);
    for i in 0..DIM {
        for j in 0..=i {
            let s = (out[i][j] + out[j][i]) * 0.5 + y[i][j];
            out[i][j] = s;
            out[j][i] = s;
        }
    }
    out
}

fn dd_amax(m: &DdMat) -> f64 {
    m.iter()
        .flat_map(|r| r.iter())
        .fold(0.0_f64, |acc, x| acc.max(x.hi().abs()))
}

/// Time propagation for stiff drifts, carried out in double-double
/// arithmetic. A Taylor series of high order gives the exact one-step flow
/// `V -> E V E^T + W` over a short interval, and repeated composition of
/// the flow with itself doubles the elapsed time until `E` has decayed.
pub fn propagate_covariance_doubling(
    a: &DriftMatrix,
    d: &DiffusionMatrix,
    v0: &Matrix6<f64>,
    max_doublings: usize,
    tol: f64,
) -> Result<OdeReport> {
    if a.0.iter().any(|v| !v.is_finite()) || a.0.amax() == 0.0 {
        return Err(Error::invalid("drift", "must have finite nonzero entries"));
    }
    // Same flow in balanced coordinates, u = T u'. Powers of two keep this exact.
    let t = balance(&a.0);
    let ab = Matrix6::from_fn(|i, j| a.0[(i, j)] * t[j] / t[i]);
    let dm = Matrix6::from_fn(|i, j| d.matrix()[(i, j)] / (t[i] * t[j]));
    let v0b = dd_from(&Matrix6::from_fn(|i, j| v0[(i, j)] / (t[i] * t[j])));

    let row_norm = (0..DIM)
        .map(|i| ab.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let h = 2f64.powi(-(2.0 * row_norm).log2().ceil() as i32);
    let ha = dd_from(&(ab * h));
    let a_dd = dd_from(&ab);

    // E(h) = sum (hA)^k / k!, W(h) = sum_k h^(k+1)/(k+1)! L^k(D), L(X) = AX + XA^T.
    let mut e = dd_zero();
    for (i, row) in e.iter_mut().enumerate() {
        row[i] = Dd::from(1.0);
    }
    let mut term_e = e;
    let mut term_w = dd_from(&(dm * h));
    let mut w = term_w;
    for k in 1..=40 {
        let mut next = dd_mul(&ha, &term_e);
        for row in next.iter_mut() {
            for x in row.iter_mut() {
                *x /= k as f64;
            }
        }
        term_e = next;
        let ax = dd_mul(&a_dd, &term_w);
        let mut next = dd_zero();
        for i in 0..DIM {
            for j in 0..DIM {
                next[i][j] = (ax[i][j] + ax[j][i]) * (h / (k + 1) as f64);
            }
        }
        term_w = next;
        for i in 0..DIM {
            for j in 0..DIM {
                e[i][j] += term_e[i][j];
                w[i][j] += term_w[i][j];
            }
        }
        if dd_amax(&term_e) < 1e-34 * dd_amax(&e) && dd_amax(&term_w) < 1e-34 * dd_amax(&w) {
            break;
        }
    }

    let mut time = h;
    let mut v = dd_congruence_add(&e, &v0b, &w);
    let mut converged = false;
    for _ in 0..max_doublings {
        w = dd_congruence_add(&e, &w, &w);
        e = dd_mul(&e, &e);
        time *= 2.0;
        let next = dd_congruence_add(&e, &v0b, &w);
        let mut change = 0.0_f64;
        for i in 0..DIM {
            for j in 0..DIM {
                change = change.max((next[i][j] - v[i][j]).hi().abs());
            }
        }
        v = next;
        if change <= tol * dd_amax(&v).max(1.0) && dd_amax(&e) < 1e-30 {
            converged = true;
            break;
        }
    }
    let vb = dd_to(&v);
    let v = Matrix6::from_fn(|i, j| vb[(i, j)] * t[i] * t[j]);
    let residual = lyapunov_residual(a, d, &v);
    Ok(OdeReport {
        v: CovarianceMatrix(v),
        time,
        residual,
        converged,
    })
}

impl CovarianceMatrix {
    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        let scale = self.0.amax().max(f64::MIN_POSITIVE);
        (self.0 - self.0.transpose()).amax() <= rel_tol * scale
    }

    pub fn is_positive_definite(&self) -> bool {
        self.0.cholesky().is_some()
    }

    /// Smallest eigenvalue of the Hermitian matrix `V + (i/2) Om`.
    ///
    /// Computed from the real symmetric embedding `[[V, -Om/2], [Om/2, V]]`,
    /// whose spectrum is that of `V + (i/2) Om` with doubled multiplicity.
    pub fn min_uncertainty_eigenvalue(&self) -> f64 {
        hermitian_embedding(&self.0, &(symplectic_form() * 0.5))
            .symmetric_eigenvalues()
            .min()
    }

    /// Symmetry to 1e-12 relative, positive definiteness and the
    /// uncertainty relation to -1e-9.
    pub fn check_physical(&self) -> Result<()> {
        if !self.is_symmetric(1e-12) {
            return Err(Error::NonPhysicalCm("not symmetric".into()));
        }
        if !self.is_positive_definite() {
            return Err(Error::NonPhysicalCm("not positive definite".into()));
        }
        let m = self.min_uncertainty_eigenvalue();
        if m < -1e-9 {
            return Err(Error::NonPhysicalCm(format!(
                "uncertainty relation violated, min eigenvalue {m:.3e}"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{PhysicalParams, Tuning};
    use crate::steadystate::{solve_fixed_point, SolverOptions};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn device_rates(g_oc: f64, delta_eg: f64) -> DerivedRates {
        let p = PhysicalParams::reference_device();
        DerivedRates::derive(
            &p,
            &Tuning {
                delta_eg: Some(delta_eg * p.omega_ref),
                g_oc: g_oc * p.omega_ref,
                ..Tuning::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn decoupled_drift_is_block_diagonal() {
        let mut r = device_rates(0.0, 7.0);
        r.g_mc = 0.0;
        r.delta_c = 1.1e5;
        r.delta_w = -3.0e4;
        let s = SteadyState::decoupled(&r);
        let a = build_drift(&r, &s).0;
        #[rustfmt::skip]
        let want = Matrix6::new(
            0.0, r.delta_eg, 0.0, 0.0, 0.0, 0.0,
            -r.delta_eg, -r.gamma_p, 0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, -r.kappa_c, r.delta_c, 0.0, 0.0,
            0.0, 0.0, -r.delta_c, -r.kappa_c, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0, -r.kappa_w, r.delta_w,
            0.0, 0.0, 0.0, 0.0, -r.delta_w, -r.kappa_w,
        );
        assert_eq!(a, want);
    }

    #[test]
    fn rotation_pair_and_zero_pattern() {
        let r = device_rates(0.3, -4.0);
        let s = SteadyState {
            a_s: Complex64::new(1e5, 2e5),
            c_s: Complex64::new(-3e3, 4e3),
            q_s: 10.0,
            p_s: -20.0,
        };
        let a = build_drift(&r, &s).0;
        assert_eq!(a[(0, 1)], r.delta_eg);
        assert_eq!(a[(1, 0)], -r.delta_eg);
        for (i, j) in [
            (2, 4),
            (2, 5),
            (3, 4),
            (3, 5),
            (4, 2),
            (4, 3),
            (5, 2),
            (5, 3),
            (0, 0),
        ] {
            assert_eq!(a[(i, j)], 0.0, "({i},{j})");
        }
    }

    #[test]
    fn vacuum_diffusion_at_zero_temperature() {
        let r = device_rates(0.1, 3.0);
        let d = build_diffusion_with(&r, 0.0, PdNoise::Brownian).0;
        assert_eq!(
            d,
            Vector6::new(0.0, r.gamma_p, r.kappa_c, r.kappa_c, r.kappa_w, r.kappa_w)
        );
        let d = build_diffusion(&r, 0.0).0;
        assert_eq!(d[0], 0.25 * r.gamma_p);
        assert_eq!(
            d.rows(1, 5),
            Vector6::new(0.0, r.gamma_p, r.kappa_c, r.kappa_c, r.kappa_w, r.kappa_w).rows(1, 5)
        );
    }

    #[test]
    fn diffusion_is_affine_in_occupation() {
        let r = device_rates(0.1, 3.0);
        for t in [0.1, 1.0, 5.0, 50.0] {
            let d = build_diffusion(&r, t).0;
            let n = thermal_occupation(r.omega_w, t);
            assert!((d[4] - r.kappa_w - 2.0 * r.kappa_w * n).abs() <= 1e-12 * d[4]);
        }
        // frozen: 1 + 2 N(omega_w, 5 K)
        let d = build_diffusion(&r, 5.0).0;
        assert!((d[4] / r.kappa_w - 741.060_455_736_016_8).abs() < 1e-9);
    }

    #[test]
    fn stability_basic_cases() {
        let mut r = device_rates(0.0, 2.0);
        r.g_mc = 0.0;
        let a = build_drift(&r, &SteadyState::decoupled(&r));
        assert!(is_stable(&a).unwrap().stable);
        let z = is_stable(&DriftMatrix(Matrix6::zeros())).unwrap();
        assert!(!z.stable);
        assert_eq!(z.abscissa, 0.0);
        let nan = DriftMatrix(Matrix6::from_element(f64::NAN));
        assert!(matches!(is_stable(&nan), Err(Error::EigenFailure(_))));
    }

    #[test]
    fn isotropic_relaxation() {
        let a = DriftMatrix(-Matrix6::identity());
        let d = DiffusionMatrix(Vector6::repeat(2.0));
        let v = solve_stationary_covariance(&a, &d).unwrap().0;
        assert!((v - Matrix6::identity()).amax() < 1e-14);
        let ode = integrate_covariance_ode(&a, &d, &Matrix6::zeros(), 100.0, 1e-2, 1e-13).unwrap();
        assert!(ode.converged);
        assert!((ode.v.0 - Matrix6::identity()).amax() < 1e-12);
    }

    #[test]
    fn pure_decay_goes_to_zero() {
        let a = DriftMatrix(-Matrix6::identity() * 0.5);
        let d = DiffusionMatrix(Vector6::zeros());
        let ode =
            integrate_covariance_ode(&a, &d, &Matrix6::identity(), 200.0, 1e-2, 1e-14).unwrap();
        assert!(ode.v.0.amax() < 1e-13);
        let v = solve_stationary_covariance(&a, &d).unwrap().0;
        assert_eq!(v.amax(), 0.0);
    }

    #[test]
    fn unstable_drift_is_rejected() {
        let a = DriftMatrix(Matrix6::identity());
        let d = DiffusionMatrix(Vector6::repeat(1.0));
        assert!(matches!(
            solve_stationary_covariance(&a, &d),
            Err(Error::UnstableDrift { .. })
        ));
    }

    #[test]
    fn decoupled_cavity_is_thermal() {
        let mut r = device_rates(0.0, 2.0);
        r.g_mc = 0.0;
        let t = 3.0;
        let a = build_drift(&r, &SteadyState::decoupled(&r));
        let d = build_diffusion_with(&r, t, PdNoise::Brownian);
        let v = solve_stationary_covariance(&a, &d).unwrap().0;
        let nw = thermal_occupation(r.omega_w, t);
        assert!((v[(4, 4)] - (2.0 * nw + 1.0) / 2.0).abs() < 1e-9 * nw);
        assert!((v[(5, 5)] - (2.0 * nw + 1.0) / 2.0).abs() < 1e-9 * nw);
        assert!(v[(4, 5)].abs() < 1e-9);
        assert!((v[(2, 2)] - 0.5).abs() < 1e-12);
        assert!((v[(0, 0)] - 0.5).abs() < 1e-9);
    }

    fn random_stable(rng: &mut ChaCha8Rng) -> DriftMatrix {
        loop {
            let m = Matrix6::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let a = m - Matrix6::identity() * rng.gen_range(0.5..2.5);
            if is_stable(&DriftMatrix(a)).unwrap().abscissa < -0.05 {
                return DriftMatrix(a);
            }
        }
    }

    #[test]
    fn ode_limit_independent_of_initial_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..3 {
            let a = random_stable(&mut rng);
            let d = DiffusionMatrix(Vector6::from_fn(|_, _| rng.gen_range(0.0..2.0)));
            let v1 =
                integrate_covariance_ode(&a, &d, &Matrix6::zeros(), 2000.0, 5e-3, 1e-12).unwrap();
            let v2 =
                integrate_covariance_ode(&a, &d, &(Matrix6::identity() * 3.0), 2000.0, 5e-3, 1e-12)
                    .unwrap();
            assert!(v1.converged && v2.converged);
            assert!((v1.v.0 - v2.v.0).amax() < 1e-8);
        }
    }

    #[test]
    fn doubling_matches_direct_solve_on_device_point() {
        let p = PhysicalParams::reference_device();
        let r = device_rates(0.01, 6.0);
        let fp = solve_fixed_point(&r, &SolverOptions::for_reference(p.omega_ref)).unwrap();
        let a = build_drift(&r, &fp.state);
        let d = build_diffusion(&r, 1.0);
        let v = solve_stationary_covariance(&a, &d).unwrap();
        let ode = propagate_covariance_doubling(&a, &d, &(Matrix6::identity() * 0.5), 200, 1e-16)
            .unwrap();
        let diff = (v.0 - ode.v.0).amax();
        assert!(diff < 1e-8, "diff {diff:e}");
        assert!(lyapunov_residual(&a, &d, &v.0) <= 1e-10 * d.matrix().norm());
    }

    #[test]
    fn hotter_bath_never_lowers_variances() {
        let p = PhysicalParams::reference_device();
        let r = device_rates(0.01, 6.0);
        let fp = solve_fixed_point(&r, &SolverOptions::for_reference(p.omega_ref)).unwrap();
        let a = build_drift(&r, &fp.state);
        let mut prev: Option<Matrix6<f64>> = None;
        for t in [0.0, 0.5, 1.0, 2.0, 5.0, 20.0] {
            let v = solve_stationary_covariance(&a, &build_diffusion(&r, t))
                .unwrap()
                .0;
            if let Some(pv) = prev {
                for k in 0..DIM {
                    assert!(v[(k, k)] >= pv[(k, k)] * (1.0 - 1e-12), "T={t} k={k}");
                }
            }
            prev = Some(v);
        }
    }

    #[test]
    fn vacuum_is_minimally_physical() {
        let v = CovarianceMatrix(Matrix6::identity() * 0.5);
        assert!(v.min_uncertainty_eigenvalue().abs() < 1e-14);
        assert!(v.check_physical().is_ok());
        let squeezed_too_far = CovarianceMatrix(Matrix6::identity() * 0.4);
        assert!(squeezed_too_far.check_physical().is_err());
    }

    /// `A = -k I` with `D = 2 k diag(v)` has stationary covariance `diag(v)`;
    /// the uncertainty margin is `min(v) - 1/2` on the vacuum-like modes.
    fn diagonal_system(k: f64, v: [f64; 6]) -> (DriftMatrix, DiffusionMatrix) {
        let a = DriftMatrix(Matrix6::identity() * -k);
        let d = DiffusionMatrix(Vector6::from_iterator(v.iter().map(|x| 2.0 * k * x)));
        (a, d)
    }

    #[test]
    fn certification_resolves_below_f64_eigenvalue_precision() {
        let big = 1.0e8;
        let inside = 0.5 - 5e-10;
        let outside = 0.5 - 2e-9;
        let (a, d) = diagonal_system(1e5, [big, big, inside, inside, 0.5, 0.5]);
        assert!(certify_uncertainty(&a, &d, 1e-9).unwrap());
        let (a, d) = diagonal_system(1e5, [big, big, outside, 0.5, 0.5, 0.5]);
        assert!(!certify_uncertainty(&a, &d, 1e-9).unwrap());
        let (a, d) = diagonal_system(1e5, [big, 1.0 / (4.0 * big), 0.5, 0.5, 0.5, 0.5]);
        assert!(certify_uncertainty(&a, &d, 1e-9).unwrap());
        let (a, d) = diagonal_system(1e5, [big, 0.1 / (4.0 * big), 0.5, 0.5, 0.5, 0.5]);
        assert!(!certify_uncertainty(&a, &d, 1e-9).unwrap());
    }

    #[test]
    fn noise_condition_of_damped_vacuum_is_saturated() {
        let (a, d) = diagonal_system(3.0, [0.5; 6]);
        assert!(noise_condition_eigenvalue(&a, &d).abs() < 1e-12);
        let (a, d) = diagonal_system(3.0, [0.4, 0.5, 0.5, 0.5, 0.5, 0.5]);
        assert!(noise_condition_eigenvalue(&a, &d) < -0.1);
    }
}
