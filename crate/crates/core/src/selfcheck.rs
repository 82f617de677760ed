//! Randomized property checks of the pipeline, reproducible from a seed.

use nalgebra::{Matrix6, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use twofloat::TwoFloat;

use crate::channels::{AtmosphereParams, TargetParams};
use crate::dynamics::{propagate_covariance_doubling, DiffusionMatrix, DriftMatrix, PdNoise};
use crate::error::Result;
use crate::params::{DerivedRates, PhysicalParams, Tuning};
use crate::pipeline::{evaluate_point, PointResult, Profile};
use crate::steadystate::SteadyState;

/// One random parameter point.
///
/// `g_oc = 10^U(-3, 6)` rad/s; `delta_c`, `delta_w` are `±10^U(-2, 2)`
/// and `delta_eg` is `±10^U(-1, 2)` in units of `omega_ref`;
/// `T_c ~ U(0, 300)` K; `mu_c ~ U(0, 5e-4)`.
pub fn random_profile<R: Rng>(rng: &mut R, pd_noise: PdNoise) -> Profile {
    let mut signed_log = |lo: f64, hi: f64| {
        let m = 10f64.powf(rng.gen_range(lo..hi));
        if rng.gen_bool(0.5) {
            m
        } else {
            -m
        }
    };
    let physical = PhysicalParams::reference_device();
    let w = physical.omega_ref;
    let delta_c = signed_log(-2.0, 2.0) * w;
    let delta_w = signed_log(-2.0, 2.0) * w;
    let delta_eg = signed_log(-1.0, 2.0) * w;
    let g_oc = 10f64.powf(rng.gen_range(-3.0..6.0));
    let physical = PhysicalParams {
        t_c: rng.gen_range(0.0..300.0),
        mu_c: rng.gen_range(0.0..5e-4),
        ..physical
    };
    Profile {
        physical,
        tuning: Tuning {
            delta_c,
            delta_w,
            delta_eg: Some(delta_eg),
            g_oc,
        },
        atmosphere: AtmosphereParams::default(),
        target: TargetParams::default(),
        pd_noise,
    }
}

/// First `n` random points with a stable fixed point, in draw order.
///
/// Returns the points and the number of draws consumed. Draws whose
/// evaluation fails outright are skipped like unstable ones.
pub fn stable_draws(
    seed: u64,
    n: usize,
    pd_noise: PdNoise,
) -> (Vec<(Profile, PointResult)>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut used = 0;
    while out.len() < n {
        let batch: Vec<Profile> = (0..4 * n.max(8))
            .map(|_| random_profile(&mut rng, pd_noise))
            .collect();
        let results: Vec<_> = batch.par_iter().map(evaluate_point).collect();
        for (p, r) in batch.into_iter().zip(results) {
            if out.len() == n {
                break;
            }
            used += 1;
            if let Ok(r) = r {
                if r.stability.stable {
                    out.push((p, r));
                }
            }
        }
    }
    (out, used)
}

/// Quadratures `(q, p, X_c, Y_c, X_w, Y_w)` of a mean-field state.
pub fn quadratures(s: &SteadyState) -> Vector6<f64> {
    let r = std::f64::consts::SQRT_2;
    Vector6::new(
        s.q_s,
        s.p_s,
        r * s.a_s.re,
        r * s.a_s.im,
        r * s.c_s.re,
        r * s.c_s.im,
    )
}

/// Nonlinear mean-field flow written directly in quadratures, evaluated in
/// double-double arithmetic.
pub fn quadrature_flow(r: &DerivedRates, x: &[TwoFloat; 6]) -> [TwoFloat; 6] {
    let k = |v: f64| TwoFloat::from(v);
    let [q, p, xc, yc, xw, yw] = *x;
    let sqrt2 = k(2.0).sqrt();
    [
        k(r.delta_eg) * p + sqrt2 * k(r.g_oc) * xc,
        -k(r.gamma_p) * p - k(r.delta_eg) * q + k(r.g_mc) * (xw * xw + yw * yw) / 2.0,
        k(r.delta_c) * yc - k(r.kappa_c) * xc + k(r.g_oc) * p * yc + sqrt2 * k(r.e_c),
        -k(r.delta_c) * xc - k(r.kappa_c) * yc - k(r.g_oc) * p * xc,
        k(r.delta_w) * yw - k(r.kappa_w) * xw - k(r.g_mc) * q * yw + sqrt2 * k(r.e_w),
        -k(r.delta_w) * xw - k(r.kappa_w) * yw + k(r.g_mc) * q * xw,
    ]
}

/// Central-difference Jacobian of [`quadrature_flow`] at `s`. The flow is
/// quadratic, so the central difference has no truncation error and the
/// double-double evaluation removes cancellation.
pub fn finite_difference_jacobian(r: &DerivedRates, s: &SteadyState) -> Matrix6<f64> {
    let x0 = quadratures(s);
    let h = 1e-3 * x0.amax().max(1.0);
    let mut j = Matrix6::zeros();
    for col in 0..6 {
        let base: [TwoFloat; 6] = std::array::from_fn(|i| TwoFloat::from(x0[i]));
        let (mut xp, mut xm) = (base, base);
        xp[col] += h;
        xm[col] -= h;
        let (fp, fm) = (quadrature_flow(r, &xp), quadrature_flow(r, &xm));
        for row in 0..6 {
            j[(row, col)] = f64::from((fp[row] - fm[row]) / (2.0 * h));
        }
    }
    j
}

/// Largest entrywise relative deviation of `a` from the finite-difference
/// Jacobian `fd`. An entry that is exactly zero in `a` is compared against
/// the row scale instead, as `|fd| / max|row|`.
pub fn jacobian_deviation(a: &DriftMatrix, fd: &Matrix6<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..6 {
        let row_scale = a.0.row(i).amax();
        for j in 0..6 {
            let (x, y) = (a.0[(i, j)], fd[(i, j)]);
            let e = if x == 0.0 {
                if row_scale == 0.0 {
                    y.abs()
                } else {
                    y.abs() / row_scale
                }
            } else {
                (x - y).abs() / x.abs()
            };
            worst = worst.max(e);
        }
    }
    worst
}

/// Deviation between the direct stationary solve and time propagation
/// from vacuum: `(max |dV|, max |dV| / max |V|)`.
pub fn lyapunov_deviation(
    a: &DriftMatrix,
    d: &DiffusionMatrix,
    v: &Matrix6<f64>,
) -> Result<(f64, f64)> {
    let ode = propagate_covariance_doubling(a, d, &(Matrix6::identity() * 0.5), 300, 1e-20)?;
    let abs = (ode.v.0 - v).amax();
    Ok((abs, abs / v.amax()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_reproducible() {
        let (a, na) = stable_draws(7, 5, PdNoise::Lindblad);
        let (b, nb) = stable_draws(7, 5, PdNoise::Lindblad);
        assert_eq!(na, nb);
        assert!(a.iter().zip(&b).all(|(x, y)| x.0 == y.0));
    }

    #[test]
    fn drift_matches_finite_differences() {
        let (points, _) = stable_draws(11, 50, PdNoise::Lindblad);
        for (_, r) in &points {
            let fd = finite_difference_jacobian(&r.rates, &r.fixed_point.state);
            assert!(jacobian_deviation(&r.drift, &fd) < 1e-6);
        }
    }
}
