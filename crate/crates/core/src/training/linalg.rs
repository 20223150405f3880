//! Small kernels on patch matrices that the training loops share.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::numerics::{shrink, PatchMatrix};

#[inline]
pub(crate) fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// `Σ_n x_n t_n`.
pub(crate) fn combine(x: &PatchMatrix, t: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); x.patch_len()];
    for (col, &tn) in x.columns().zip(t) {
        if tn.re == 0.0 && tn.im == 0.0 {
            continue;
        }
        out.iter_mut().zip(col).for_each(|(o, c)| *o += c * tn);
    }
    out
}

/// `X X^H`.
pub(crate) fn gram(x: &PatchMatrix) -> DMatrix<Complex64> {
    let r = x.patch_len();
    let mut g = DMatrix::<Complex64>::zeros(r, r);
    for col in x.columns() {
        for j in 0..r {
            let cj = col[j].conj();
            for i in j..r {
                g[(i, j)] += col[i] * cj;
            }
        }
    }
    for j in 0..r {
        for i in 0..j {
            g[(i, j)] = g[(j, i)].conj();
        }
    }
    g
}

/// `||E - d T_α(d^H X)||_F²`, evaluated column by column.
pub(crate) fn block_objective(e: &PatchMatrix, x: &PatchMatrix, d: &[Complex64], alpha: f64) -> f64 {
    let mut total = 0.0;
    for (ecol, xcol) in e.columns().zip(x.columns()) {
        let t = shrink(dot_conj(d, xcol), alpha);
        total += ecol.iter().zip(d).map(|(ev, dv)| (ev - dv * t).norm_sqr()).sum::<f64>();
    }
    total
}

/// `target -= d T_α(d^H X)` (or `+=` with `sign = 1.0`).
pub(crate) fn add_contribution(target: &mut PatchMatrix, x: &PatchMatrix, d: &[Complex64], alpha: f64, sign: f64) {
    for n in 0..x.n_cols() {
        let t = shrink(dot_conj(d, x.column(n)), alpha) * sign;
        if t.re == 0.0 && t.im == 0.0 {
            continue;
        }
        target.column_mut(n).iter_mut().zip(d).for_each(|(o, dv)| *o += dv * t);
    }
}
