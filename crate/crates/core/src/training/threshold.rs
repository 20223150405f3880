//! Threshold step for one block: backtracking subgradient descent on
//! `φ(α) = ||E - d T_α(d^H X)||_F²` with `d` fixed.

use num_complex::Complex64;

use super::admm::MAX_HALVINGS;
use super::linalg::{dot_conj, norm_sqr};
use crate::error::{Error, Result};
use crate::numerics::{shrink, PatchMatrix};

/// `φ` reduced to per-column scalars.
///
/// With `w_n = d^H x_n`, `q_n = e_n^H d` and `c = ||d||²`,
/// `φ(α) = ||E||² - 2 Σ Re{T_α(w_n) q_n} + c Σ |T_α(w_n)|²`.
#[derive(Clone, Debug)]
pub struct ThresholdObjective {
    codes: Vec<Complex64>,
    cross: Vec<Complex64>,
    e_norm_sqr: f64,
    filter_norm_sqr: f64,
}

impl ThresholdObjective {
    pub fn new(e: &PatchMatrix, x: &PatchMatrix, d: &[Complex64]) -> Result<Self> {
        if e.patch_len() != d.len() || x.patch_len() != d.len() || e.n_cols() != x.n_cols() {
            return Err(Error::shape("threshold update operands disagree in size"));
        }
        Ok(Self {
            codes: x.columns().map(|col| dot_conj(d, col)).collect(),
            cross: e.columns().map(|col| dot_conj(col, d)).collect(),
            e_norm_sqr: e.frobenius_sqr(),
            filter_norm_sqr: norm_sqr(d),
        })
    }

    pub fn value(&self, alpha: f64) -> f64 {
        let mut lin = 0.0;
        let mut quad = 0.0;
        for (&w, &q) in self.codes.iter().zip(&self.cross) {
            let t = shrink(w, alpha);
            lin += (t * q).re;
            quad += t.norm_sqr();
        }
        self.e_norm_sqr - 2.0 * lin + self.filter_norm_sqr * quad
    }

    /// `dφ/dα = Σ_{|w_n| > α} 2 Re{q_n sgn(w_n)} - 2c (|w_n| - α)`; zero on
    /// the dead zone.
    pub fn subgradient(&self, alpha: f64) -> f64 {
        let mut grad = 0.0;
        for (&w, &q) in self.codes.iter().zip(&self.cross) {
            let mag = w.norm();
            if mag > alpha {
                grad += 2.0 * (q * (w / mag)).re - 2.0 * self.filter_norm_sqr * (mag - alpha);
            }
        }
        grad
    }

    /// `2c · #{n : |w_n| > α}`, the second derivative away from the kinks.
    fn curvature(&self, alpha: f64) -> f64 {
        let active = self.codes.iter().filter(|w| w.norm() > alpha).count();
        2.0 * self.filter_norm_sqr * active as f64
    }
}

/// Takes `iters` backtracking subgradient steps from `alpha`. Each step
/// starts at `1 / φ''` and halves until `φ` does not increase; the result is
/// clamped to `α >= 0`.
pub fn update_threshold(e: &PatchMatrix, x: &PatchMatrix, d: &[Complex64], alpha: f64, iters: usize) -> Result<f64> {
    if !(alpha >= 0.0) {
        return Err(Error::InvalidThreshold(alpha));
    }
    let obj = ThresholdObjective::new(e, x, d)?;
    Ok(descend(&obj, alpha, iters))
}

pub(crate) fn descend(obj: &ThresholdObjective, mut alpha: f64, iters: usize) -> f64 {
    let mut value = obj.value(alpha);
    for _ in 0..iters {
        let grad = obj.subgradient(alpha);
        let curv = obj.curvature(alpha);
        if grad == 0.0 || curv == 0.0 {
            break;
        }
        let mut step = 1.0 / curv;
        let mut moved = false;
        for _ in 0..=MAX_HALVINGS {
            let cand = (alpha - step * grad).max(0.0);
            let cand_value = obj.value(cand);
            if cand_value <= value {
                moved = cand != alpha;
                alpha = cand;
                value = cand_value;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    alpha
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::training::linalg::block_objective;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn dead_zone_leaves_alpha_alone() {
        let x = PatchMatrix::new(1, 2, vec![c(0.5), c(-0.3)]).unwrap();
        let e = PatchMatrix::new(1, 2, vec![c(1.0), c(1.0)]).unwrap();
        let obj = ThresholdObjective::new(&e, &x, &[c(1.0)]).unwrap();
        assert_eq!(obj.subgradient(0.6), 0.0);
        assert_eq!(update_threshold(&e, &x, &[c(1.0)], 0.6, 4).unwrap(), 0.6);
    }

    #[test]
    fn scalar_case_reaches_one() {
        // φ(α) = (3 - α - 2)² for α < 3
        let x = PatchMatrix::new(1, 1, vec![c(3.0)]).unwrap();
        let e = PatchMatrix::new(1, 1, vec![c(2.0)]).unwrap();
        let obj = ThresholdObjective::new(&e, &x, &[c(1.0)]).unwrap();
        for a in [0.0, 0.5, 2.0] {
            assert!((obj.value(a) - (1.0 - a).powi(2)).abs() < 1e-12);
        }
        let grid = (0..=3000)
            .map(|i| i as f64 * 1e-3)
            .min_by(|a, b| obj.value(*a).partial_cmp(&obj.value(*b)).unwrap())
            .unwrap();
        assert!((grid - 1.0).abs() < 1e-3);
        let alpha = update_threshold(&e, &x, &[c(1.0)], 0.0, 4).unwrap();
        assert!((alpha - 1.0).abs() < 1e-12);
    }

    #[test]
    fn objective_and_subgradient_against_direct_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let rc = |rng: &mut ChaCha8Rng| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        for _ in 0..50 {
            let (r, n) = (4, 9);
            let x = PatchMatrix::new(r, n, (0..r * n).map(|_| rc(&mut rng)).collect()).unwrap();
            let e = PatchMatrix::new(r, n, (0..r * n).map(|_| rc(&mut rng)).collect()).unwrap();
            let mut d: Vec<Complex64> = (0..r).map(|_| rc(&mut rng)).collect();
            let s = norm_sqr(&d).sqrt() * rng.random_range(1.0..2.0);
            d.iter_mut().for_each(|v| *v /= s);
            let obj = ThresholdObjective::new(&e, &x, &d).unwrap();
            let alpha = rng.random_range(0.0..0.8);
            let direct = block_objective(&e, &x, &d, alpha);
            assert!((obj.value(alpha) - direct).abs() < 1e-12 * direct.max(1.0));

            if obj.codes.iter().any(|w| (w.norm() - alpha).abs() < 1e-4) {
                continue;
            }
            let hstep = 1e-6;
            let fd = (obj.value(alpha + hstep) - obj.value(alpha - hstep)) / (2.0 * hstep);
            let sg = obj.subgradient(alpha);
            assert!((sg - fd).abs() <= 1e-6 * fd.abs().max(1.0), "sg {sg} fd {fd}");

            let updated = update_threshold(&e, &x, &d, alpha, 4).unwrap();
            assert!(updated >= 0.0);
            assert!(obj.value(updated) <= obj.value(alpha));
        }
    }

    #[test]
    fn negative_alpha_rejected() {
        let x = PatchMatrix::new(1, 1, vec![c(1.0)]).unwrap();
        assert!(update_threshold(&x, &x, &[c(1.0)], -1.0, 1).is_err());
    }
}
