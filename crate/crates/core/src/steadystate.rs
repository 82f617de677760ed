//! Semiclassical fixed point of the driven OC / PD / MC system.
//!
//! The noise-free equations of motion are
//!
//! ```text
//! da/dt = -(i delta_c + kappa_c) a - i g_oc p a + e_c
//! dc/dt = -(i delta_w + kappa_w) c + i g_mc q c + e_w
//! dq/dt =  delta_eg p + g_oc (a* + a)
//! dp/dt = -gamma_p p - delta_eg q + g_mc |c|^2
//! ```
//!
//! and the steady state zeroes all four right-hand sides.

use nalgebra::{Matrix6, Vector6};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::DerivedRates;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SteadyState {
    pub a_s: Complex64,
    pub c_s: Complex64,
    pub q_s: f64,
    pub p_s: f64,
}

impl SteadyState {
    /// Fixed point with both PD couplings switched off.
    pub fn decoupled(r: &DerivedRates) -> Self {
        Self {
            a_s: r.e_c / Complex64::new(r.kappa_c, r.delta_c),
            c_s: r.e_w / Complex64::new(r.kappa_w, r.delta_w),
            q_s: 0.0,
            p_s: 0.0,
        }
    }

    fn to_vector(self) -> Vector6<f64> {
        Vector6::new(
            self.a_s.re,
            self.a_s.im,
            self.c_s.re,
            self.c_s.im,
            self.q_s,
            self.p_s,
        )
    }

    fn from_vector(x: &Vector6<f64>) -> Self {
        Self {
            a_s: Complex64::new(x[0], x[1]),
            c_s: Complex64::new(x[2], x[3]),
            q_s: x[4],
            p_s: x[5],
        }
    }

    fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

/// Right-hand sides of the four equations of motion at a given state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub f1: Complex64,
    pub f2: Complex64,
    pub f3: f64,
    pub f4: f64,
}

impl Residual {
    pub fn norm(&self) -> f64 {
        (self.f1.norm_sqr() + self.f2.norm_sqr() + self.f3 * self.f3 + self.f4 * self.f4).sqrt()
    }

    fn to_vector(self) -> Vector6<f64> {
        Vector6::new(
            self.f1.re, self.f1.im, self.f2.re, self.f2.im, self.f3, self.f4,
        )
    }
}

/// Which route produced the reported fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Damped substitution chain converged directly.
    Picard,
    /// Exact reduction to two real cubics, polished by Newton.
    Reduced,
    /// `|delta_eg|` below threshold, solved with the PD restoring force removed.
    Constrained,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Picard => "picard",
            Branch::Reduced => "reduced",
            Branch::Constrained => "constrained",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointReport {
    pub state: SteadyState,
    pub iterations: usize,
    pub residual_norm: f64,
    pub converged: bool,
    pub branch: Branch,
    /// `Re(a_s) > 10` and `|c_s| > 10`, the regime in which linearization is
    /// usually justified. Reported only.
    pub large_amplitude: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Mixing weight of the new iterate in the substitution chain.
    pub damping: f64,
    /// Iterations without residual improvement before switching to Newton.
    pub stall_limit: usize,
    pub rel_tol: f64,
    pub max_iterations: usize,
    /// Absolute threshold on `|delta_eg|` (rad/s).
    pub eps_detuning: f64,
    pub constrained_branch: bool,
    /// Starting point of the substitution chain; `None` uses the decoupled seed.
    pub seed: Option<SteadyState>,
}

impl SolverOptions {
    pub fn for_reference(omega_ref: f64) -> Self {
        Self {
            damping: 0.5,
            stall_limit: 200,
            rel_tol: 1e-10,
            max_iterations: 10_000,
            eps_detuning: 1e-6 * omega_ref,
            constrained_branch: false,
            seed: None,
        }
    }

    pub fn tolerance(&self, r: &DerivedRates) -> f64 {
        self.rel_tol * r.e_c.max(r.e_w).max(1.0)
    }
}

pub fn fixed_point_residual(s: &SteadyState, r: &DerivedRates) -> Residual {
    let i = Complex64::i();
    let f1 = -(i * r.delta_c + r.kappa_c) * s.a_s - i * r.g_oc * s.p_s * s.a_s + r.e_c;
    let f2 = -(i * r.delta_w + r.kappa_w) * s.c_s + i * r.g_mc * s.q_s * s.c_s + r.e_w;
    let f3 = r.delta_eg * s.p_s + r.g_oc * 2.0 * s.a_s.re;
    let f4 = -r.gamma_p * s.p_s - r.delta_eg * s.q_s + r.g_mc * s.c_s.norm_sqr();
    Residual { f1, f2, f3, f4 }
}

/// Jacobian of the residual with respect to `(Re a, Im a, Re c, Im c, q, p)`.
fn residual_jacobian(s: &SteadyState, r: &DerivedRates) -> Matrix6<f64> {
    let (ar, ai) = (s.a_s.re, s.a_s.im);
    let (cr, ci) = (s.c_s.re, s.c_s.im);
    let d1 = r.delta_c + r.g_oc * s.p_s;
    let d2 = r.delta_w - r.g_mc * s.q_s;
    #[rustfmt::skip]
    let j = Matrix6::new(
        -r.kappa_c, d1,         0.0,             0.0,             0.0,          r.g_oc * ai,
        -d1,        -r.kappa_c, 0.0,             0.0,             0.0,          -r.g_oc * ar,
        0.0,        0.0,        -r.kappa_w,      d2,              -r.g_mc * ci, 0.0,
        0.0,        0.0,        -d2,             -r.kappa_w,      r.g_mc * cr,  0.0,
        2.0 * r.g_oc, 0.0,      0.0,             0.0,             0.0,          r.delta_eg,
        0.0,        0.0,        2.0 * r.g_mc * cr, 2.0 * r.g_mc * ci, -r.delta_eg, -r.gamma_p,
    );
    j
}

fn picard_step(s: &SteadyState, r: &DerivedRates) -> SteadyState {
    let p_s = -2.0 * r.g_oc * s.a_s.re / r.delta_eg;
    let q_s = (r.g_mc * s.c_s.norm_sqr() - r.gamma_p * p_s) / r.delta_eg;
    SteadyState {
        a_s: r.e_c / Complex64::new(r.kappa_c, r.delta_c + r.g_oc * p_s),
        c_s: r.e_w / Complex64::new(r.kappa_w, r.delta_w - r.g_mc * q_s),
        q_s,
        p_s,
    }
}

fn mix(old: &SteadyState, new: &SteadyState, w: f64) -> SteadyState {
    SteadyState {
        a_s: old.a_s * (1.0 - w) + new.a_s * w,
        c_s: old.c_s * (1.0 - w) + new.c_s * w,
        q_s: old.q_s * (1.0 - w) + new.q_s * w,
        p_s: old.p_s * (1.0 - w) + new.p_s * w,
    }
}

/// Damped Newton on the six real unknowns. Returns the corrected state and
/// the number of Newton steps on success.
fn newton(
    start: &SteadyState,
    r: &DerivedRates,
    tol: f64,
    max_steps: usize,
) -> Option<(SteadyState, usize, f64)> {
    let mut x = start.to_vector();
    let mut s = *start;
    let mut res = fixed_point_residual(&s, r).norm();
    for step in 0..max_steps {
        if res <= tol {
            return Some((s, step, res));
        }
        let f = fixed_point_residual(&s, r).to_vector();
        let dx = residual_jacobian(&s, r).lu().solve(&(-f))?;
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-6 {
            let trial_x = x + dx * lambda;
            let trial = SteadyState::from_vector(&trial_x);
            let trial_res = fixed_point_residual(&trial, r).norm();
            if trial.is_finite() && trial_res < res {
                x = trial_x;
                s = trial;
                res = trial_res;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    (res <= tol).then_some((s, max_steps, res))
}

/// Real roots of `x^3 + b x^2 + c x + d`, each refined by Newton steps.
fn cubic_real_roots(b: f64, c: f64, d: f64) -> Vec<f64> {
    let f = |x: f64| ((x + b) * x + c) * x + d;
    let df = |x: f64| (3.0 * x + 2.0 * b) * x + c;
    let mut out: Vec<f64> = roots::find_roots_cubic(1.0, b, c, d)
        .as_ref()
        .iter()
        .map(|&x0| {
            let mut x = x0;
            for _ in 0..8 {
                let slope = df(x);
                if slope == 0.0 {
                    break;
                }
                let next = x - f(x) / slope;
                if !next.is_finite() || (next - x).abs() <= 1e-15 * x.abs() {
                    break;
                }
                x = next;
            }
            x
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
    out
}

/// Solves the fixed point through two scalar equations.
///
/// Eliminating `a` between the OC equation and `dq/dt = 0` leaves a cubic in
/// the effective optical detuning `u = delta_c + g_oc p`. With `p` known,
/// eliminating `c` between the MC equation and `dp/dt = 0` leaves a cubic in
/// `v = delta_w - g_mc q`. Where several roots exist, the one nearest the
/// uncoupled detuning is taken.
fn reduced(r: &DerivedRates) -> Option<SteadyState> {
    let i = Complex64::i();
    let pick = |roots: Vec<f64>, target: f64| {
        roots
            .into_iter()
            .min_by(|x, y| (x - target).abs().total_cmp(&(y - target).abs()))
    };
    let p_s = if r.g_oc == 0.0 || r.e_c == 0.0 {
        0.0
    } else {
        let k = r.kappa_c;
        let dc = r.delta_c / k;
        let load = 2.0 * r.g_oc * r.g_oc * r.e_c / (r.delta_eg * k * k);
        let x = pick(cubic_real_roots(-dc, 1.0, load - dc), dc)?;
        (x * k - r.delta_c) / r.g_oc
    };
    let a_s = r.e_c / (r.kappa_c + i * (r.delta_c + r.g_oc * p_s));
    let q_s = if r.g_mc == 0.0 || r.e_w == 0.0 {
        -r.gamma_p * p_s / r.delta_eg
    } else {
        let k = r.kappa_w;
        let w = (r.delta_w + r.gamma_p * p_s * r.g_mc / r.delta_eg) / k;
        let load = r.g_mc * r.g_mc * r.e_w * r.e_w / (r.delta_eg * k * k * k);
        let y = pick(cubic_real_roots(-w, 1.0, load - w), r.delta_w / k)?;
        (r.delta_w - y * k) / r.g_mc
    };
    let c_s = r.e_w / (r.kappa_w + i * (r.delta_w - r.g_mc * q_s));
    let s = SteadyState { a_s, c_s, q_s, p_s };
    s.is_finite().then_some(s)
}

fn constrained(r: &DerivedRates, opts: &SolverOptions) -> Result<FixedPointReport> {
    // With no PD restoring force, dq/dt = 2 g_oc Re(a) must vanish on its own
    // and q_s is left free; it is pinned to zero.
    if r.g_oc * r.e_c != 0.0 {
        return Err(Error::DegenerateDetuning {
            delta_eg: r.delta_eg,
            eps: opts.eps_detuning,
        });
    }
    let c_s = r.e_w / Complex64::new(r.kappa_w, r.delta_w);
    let p_s = r.g_mc * c_s.norm_sqr() / r.gamma_p;
    let a_s = r.e_c / Complex64::new(r.kappa_c, r.delta_c);
    let state = SteadyState {
        a_s,
        c_s,
        q_s: 0.0,
        p_s,
    };
    let zeroed = DerivedRates {
        delta_eg: 0.0,
        ..*r
    };
    let residual_norm = fixed_point_residual(&state, &zeroed).norm();
    Ok(report(
        state,
        1,
        residual_norm,
        opts.tolerance(r),
        Branch::Constrained,
    ))
}

fn report(
    state: SteadyState,
    iterations: usize,
    residual_norm: f64,
    tol: f64,
    branch: Branch,
) -> FixedPointReport {
    FixedPointReport {
        state,
        iterations,
        residual_norm,
        converged: residual_norm <= tol,
        branch,
        large_amplitude: state.a_s.re > 10.0 && state.c_s.norm() > 10.0,
    }
}

pub fn solve_fixed_point(r: &DerivedRates, opts: &SolverOptions) -> Result<FixedPointReport> {
    if r.delta_eg.abs() < opts.eps_detuning {
        if opts.constrained_branch {
            return constrained(r, opts);
        }
        return Err(Error::DegenerateDetuning {
            delta_eg: r.delta_eg,
            eps: opts.eps_detuning,
        });
    }
    let tol = opts.tolerance(r);
    let mut s = opts.seed.unwrap_or_else(|| SteadyState::decoupled(r));
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let res = fixed_point_residual(&s, r).norm();
        if res <= tol {
            return Ok(report(s, iterations, res, tol, Branch::Picard));
        }
        if !res.is_finite() {
            break;
        }
        if res < best * (1.0 - 1e-6) {
            best = res;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= opts.stall_limit {
                break;
            }
        }
        s = mix(&s, &picard_step(&s, r), opts.damping);
    }

    let budget = opts.max_iterations.saturating_sub(iterations).min(200);
    let fallback = reduced(r).and_then(|start| {
        let res = fixed_point_residual(&start, r).norm();
        newton(&start, r, tol, budget).or(Some((start, 0, res)))
    });
    match fallback {
        Some((state, n, res)) if res <= tol => {
            Ok(report(state, iterations + n, res, tol, Branch::Reduced))
        }
        Some((_, n, res)) => Err(Error::NonConvergence {
            iterations: iterations + n,
            residual: res,
        }),
        None => Err(Error::NonConvergence {
            iterations: opts.max_iterations,
            residual: best,
        }),
    }
}
