//! ADMM filter update for one `(d_k, α_k)` block.
//!
//! The block problem `min ||E - d T_α(d^H X)||²  s.t. ||d|| <= 1` is split
//! with `v = X^H d` and iterated as
//!
//! ```text
//! v ← argmin ½||E - d T_α(v)^H||² + ρ/2 ||v - (X^H d + u)||²   (element-wise)
//! d ← argmin ½ d^H H d - Re{d^H b}  s.t. ||d|| <= 1            (QCQP)
//! u ← u + X^H d - v
//! ```
//!
//! with `H = ||T_α(v)||² I + ρ X X^H` and `b = E T_α(v) + ρ X (v - u)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::linalg::{block_objective, combine, dot_conj, norm_sqr};
use super::qcqp::solve_qcqp;
use crate::error::{Error, Result};
use crate::numerics::{shrink, PatchMatrix};

/// Backtracking: start at the full (curvature-scaled) step and halve at most
/// this many times.
pub(crate) const MAX_HALVINGS: usize = 20;

/// Filters whose norm falls below this are treated as dead.
pub const DEAD_FILTER_NORM: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmmParams {
    pub iters: usize,
    pub v_iters: usize,
    pub rho0: f64,
}

impl Default for AdmmParams {
    fn default() -> Self {
        Self { iters: 4, v_iters: 4, rho0: 1.0 }
    }
}

/// Gradient, in the `∂/∂v_R + i ∂/∂v_I` convention, of
/// `f(v) = ½|T_α(v) - g|² + ρ/2 |v - h|²`.
///
/// Outside the dead zone this is
/// `ζ + ρ(v - h) + (α/|v|³)(-i v)(-Im{v ζ*})` with `ζ = T_α(v) - g`. On
/// `|v| <= α`, including the kink `|v| = α`, it is `ρ(v - h)`.
#[inline]
pub fn grad_threshold_quadratic(v: Complex64, g: Complex64, h: Complex64, alpha: f64, rho: f64) -> Complex64 {
    let mag = v.norm();
    if mag <= alpha {
        return (v - h) * rho;
    }
    let zeta = v - (v / mag) * alpha - g;
    let minus_iv = Complex64::new(v.im, -v.re);
    let im = (v * zeta.conj()).im;
    zeta + (v - h) * rho + minus_iv * (-im * (alpha / (mag * mag * mag)))
}

/// Real-valued counterpart: `(T_α(v) - g) 1_{|v|>α} + ρ(v - h)`.
#[inline]
pub fn grad_threshold_quadratic_real(v: f64, g: f64, h: f64, alpha: f64, rho: f64) -> f64 {
    let mag = v.abs();
    if mag <= alpha {
        return (v - h) * rho;
    }
    let zeta = v - (v / mag) * alpha - g;
    zeta + (v - h) * rho
}

#[inline]
fn v_cost(v: Complex64, g: Complex64, h: Complex64, alpha: f64, ratio: f64) -> f64 {
    0.5 * (shrink(v, alpha) - g).norm_sqr() + 0.5 * ratio * (v - h).norm_sqr()
}

/// One element of the v-step:
/// `argmin_v ½|T_α(v) - g|² + ρ/(2c) |v - h|²` by backtracking subgradient
/// descent from `v_init`. Steps are scaled by `1 / (1 + ρ/c)`, the curvature
/// of the smooth part, and only non-increasing moves are taken.
pub fn v_update_elementwise(
    g: Complex64,
    h: Complex64,
    alpha: f64,
    rho: f64,
    c: f64,
    v_init: Complex64,
    iters: usize,
) -> Result<Complex64> {
    if !(c > 0.0) {
        return Err(Error::DegenerateFilter(c));
    }
    Ok(v_update_unchecked(g, h, alpha, rho / c, v_init, iters))
}

#[inline]
fn v_update_unchecked(
    g: Complex64,
    h: Complex64,
    alpha: f64,
    ratio: f64,
    v_init: Complex64,
    iters: usize,
) -> Complex64 {
    let inv_curv = 1.0 / (1.0 + ratio);
    let mut v = v_init;
    let mut cost = v_cost(v, g, h, alpha, ratio);
    for _ in 0..iters {
        let grad = grad_threshold_quadratic(v, g, h, alpha, ratio);
        if grad.re == 0.0 && grad.im == 0.0 {
            break;
        }
        let mut step = inv_curv;
        let mut moved = false;
        for _ in 0..=MAX_HALVINGS {
            let cand = v - grad * step;
            let cand_cost = v_cost(cand, g, h, alpha, ratio);
            if cand_cost <= cost {
                v = cand;
                cost = cand_cost;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    v
}

/// Residual balancing: double ρ when the primal residual is more than ten
/// times the dual one, halve it in the opposite case.
pub fn residual_balance(rho: f64, primal: f64, dual: f64) -> f64 {
    if primal > 10.0 * dual {
        rho * 2.0
    } else if dual > 10.0 * primal {
        rho * 0.5
    } else {
        rho
    }
}

/// Working state of one ADMM run.
#[derive(Clone, Debug)]
pub struct AdmmState {
    pub d: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub u: Vec<Complex64>,
    pub rho: f64,
}

/// Summary of a filter update.
#[derive(Clone, Debug)]
pub struct FilterUpdate {
    pub filter: Vec<Complex64>,
    pub objective_before: f64,
    pub objective_after: f64,
    pub rho_trace: Vec<f64>,
}

/// Runs the ADMM filter update from `d` with the threshold held at `alpha`.
/// Returns the iterate with the lowest block objective, which is never worse
/// than `d` itself.
pub fn update_filter_admm(
    e: &PatchMatrix,
    x: &PatchMatrix,
    d: &[Complex64],
    alpha: f64,
    params: &AdmmParams,
) -> Result<Vec<Complex64>> {
    let gram = super::linalg::gram(x);
    Ok(run_filter_admm(e, x, &gram, d, alpha, params)?.filter)
}

pub(crate) fn run_filter_admm(
    e: &PatchMatrix,
    x: &PatchMatrix,
    gram: &DMatrix<Complex64>,
    d: &[Complex64],
    alpha: f64,
    params: &AdmmParams,
) -> Result<FilterUpdate> {
    let r = x.patch_len();
    let n = x.n_cols();
    if e.patch_len() != r || e.n_cols() != n || d.len() != r {
        return Err(Error::shape("filter update operands disagree in size"));
    }
    let objective_before = block_objective(e, x, d, alpha);
    let mut best = (d.to_vec(), objective_before);

    let mut state = AdmmState {
        d: d.to_vec(),
        v: x.columns().map(|col| dot_conj(col, d)).collect(),
        u: vec![Complex64::default(); n],
        rho: params.rho0,
    };
    let mut rho_trace = vec![state.rho];
    let mut t = vec![Complex64::default(); n];
    let mut v_next = vec![Complex64::default(); n];

    for _ in 0..params.iters {
        let c = norm_sqr(&state.d);
        if c < DEAD_FILTER_NORM * DEAD_FILTER_NORM {
            break;
        }
        let ratio = state.rho / c;

        // v-step, element-wise
        for col in 0..n {
            let g = dot_conj(e.column(col), &state.d) / c;
            let hv = dot_conj(x.column(col), &state.d) + state.u[col];
            v_next[col] = v_update_unchecked(g, hv, alpha, ratio, state.v[col], params.v_iters);
            t[col] = shrink(v_next[col], alpha);
        }

        // d-step
        let t_norm_sqr = norm_sqr(&t);
        let mut h = gram * Complex64::new(state.rho, 0.0);
        for i in 0..r {
            h[(i, i)] += t_norm_sqr;
        }
        let et = combine(e, &t);
        let diff: Vec<Complex64> = v_next.iter().zip(&state.u).map(|(a, b)| a - b).collect();
        let xd = combine(x, &diff);
        let b = DVector::from_iterator(r, et.iter().zip(&xd).map(|(a, b)| a + b * state.rho));
        let sol = solve_qcqp(&h, &b)?;
        state.d = sol.d.iter().copied().collect();

        // u-step and residuals
        let mut primal_sqr = 0.0;
        for ((col, &vn), u) in x.columns().zip(&v_next).zip(state.u.iter_mut()) {
            let resid = dot_conj(col, &state.d) - vn;
            *u += resid;
            primal_sqr += resid.norm_sqr();
        }
        let dv: Vec<Complex64> = v_next.iter().zip(&state.v).map(|(a, b)| a - b).collect();
        let dual = state.rho * norm_sqr(&combine(x, &dv)).sqrt();
        std::mem::swap(&mut state.v, &mut v_next);

        let rho_next = residual_balance(state.rho, primal_sqr.sqrt(), dual);
        if rho_next != state.rho {
            // scaled dual variable follows ρ
            let s = state.rho / rho_next;
            state.u.iter_mut().for_each(|u| *u *= s);
            state.rho = rho_next;
        }
        rho_trace.push(state.rho);

        let obj = block_objective(e, x, &state.d, alpha);
        if obj < best.1 {
            best = (state.d.clone(), obj);
        }
    }

    Ok(FilterUpdate { filter: best.0, objective_before, objective_after: best.1, rho_trace })
}
