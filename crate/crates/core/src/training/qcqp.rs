//! `min_d ½ d^H H d - Re{d^H b}  s.t. ||d|| <= 1` for Hermitian PSD `H`.
//!
//! One eigendecomposition `H = Q Λ Q^H` turns the boundary case into the
//! scalar secular equation `Σ |β_i|² / (λ_i + μ)² = 1` with `β = Q^H b`. The
//! root is found with Newton's method on `1/||d(μ)|| - 1`, which is concave
//! and increasing in `μ`, inside a bisection bracket.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-10;
const MAX_ROOT_ITERS: usize = 200;

#[derive(Clone, Debug)]
pub struct QcqpSolution {
    pub d: DVector<Complex64>,
    /// Lagrange multiplier of the norm constraint; zero for interior solutions.
    pub multiplier: f64,
}

pub fn solve_qcqp(h: &DMatrix<Complex64>, b: &DVector<Complex64>) -> Result<QcqpSolution> {
    let n = b.len();
    if h.nrows() != n || h.ncols() != n || n == 0 {
        return Err(Error::shape(format!("QCQP with {}x{} Hessian and length-{n} linear term", h.nrows(), h.ncols())));
    }
    let scale = h.iter().map(|v| v.norm()).fold(1.0, f64::max);
    for i in 0..n {
        for j in 0..=i {
            if (h[(i, j)] - h[(j, i)].conj()).norm() > HERMITIAN_TOL * scale {
                return Err(Error::InvalidInput(format!("QCQP Hessian is not Hermitian at ({i}, {j})")));
            }
        }
    }
    let sym = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let lambdas: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let q = eig.eigenvectors;
    let beta = q.adjoint() * b;
    let weights: Vec<f64> = beta.iter().map(|v| v.norm_sqr()).collect();

    let lmax = lambdas.iter().cloned().fold(0.0, f64::max);
    let null_tol = 1e-12 * lmax;
    let b_norm = b.norm();

    // interior candidate: pseudo-inverse solution
    let mut interior = true;
    let mut norm_sqr = 0.0;
    for (&l, &w) in lambdas.iter().zip(&weights) {
        if l <= null_tol {
            if w.sqrt() > 1e-14 * b_norm.max(f64::MIN_POSITIVE) {
                interior = false;
            }
        } else {
            norm_sqr += w / (l * l);
        }
    }
    if interior && norm_sqr <= 1.0 {
        let p = DVector::from_iterator(
            n,
            lambdas.iter().zip(beta.iter()).map(|(&l, &bv)| if l > null_tol { bv / l } else { Complex64::default() }),
        );
        return Ok(QcqpSolution { d: &q * p, multiplier: 0.0 });
    }

    let mu = secular_root(&lambdas, &weights, b_norm);
    let p = DVector::from_iterator(n, lambdas.iter().zip(beta.iter()).map(|(&l, &bv)| bv / (l + mu)));
    let mut d = &q * p;
    let dn = d.norm();
    if dn > 1.0 {
        d /= Complex64::new(dn, 0.0);
    }
    Ok(QcqpSolution { d, multiplier: mu })
}

/// Root of `ψ(μ) = Σ w_i / (λ_i + μ)² = 1` on `(0, ||b||]`.
fn secular_root(lambdas: &[f64], weights: &[f64], b_norm: f64) -> f64 {
    // ψ(||b||) <= ||b||² / ||b||² = 1, so the root is bracketed.
    let mut lo = 0.0;
    let mut hi = b_norm;
    let eval = |mu: f64| -> (f64, f64) {
        let mut psi = 0.0;
        let mut dpsi = 0.0;
        for (&l, &w) in lambdas.iter().zip(weights) {
            let s = l + mu;
            psi += w / (s * s);
            dpsi += w / (s * s * s);
        }
        // φ = ψ^{-1/2} - 1, φ' = ψ^{-3/2} Σ w/(λ+μ)³
        let phi = 1.0 / psi.sqrt() - 1.0;
        let dphi = dpsi / (psi * psi.sqrt());
        (phi, dphi)
    };
    let mut mu = 0.5 * (lo + hi);
    for _ in 0..MAX_ROOT_ITERS {
        let (phi, dphi) = eval(mu);
        if !phi.is_finite() {
            lo = mu;
            mu = 0.5 * (lo + hi);
            continue;
        }
        if phi.abs() <= 1e-15 {
            break;
        }
        if phi < 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        if hi - lo <= 1e-16 * hi.max(1e-300) {
            break;
        }
        let newton = mu - phi / dphi;
        mu = if newton.is_finite() && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    mu
}
