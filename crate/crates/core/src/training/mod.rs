//! Layer-wise training.
//!
//! Each layer solves
//!
//! ```text
//! min_{D, α} ||X_train - D T_α(D^H X)||_F²   s.t. ||d_k|| <= 1
//! ```
//!
//! by sweeping the `K` blocks `(d_k, α_k)` in order. Block `k` sees the
//! residual `E_k = X_train - Σ_{k'≠k} d_k' T_α_k'(d_k'^H X)` and first moves
//! `α_k` ([`update_threshold`]) and then `d_k` ([`update_filter_admm`]).

mod admm;
mod linalg;
mod qcqp;
mod threshold;

pub use admm::{
    grad_threshold_quadratic, grad_threshold_quadratic_real, residual_balance, update_filter_admm,
    v_update_elementwise, AdmmParams, AdmmState, FilterUpdate, DEAD_FILTER_NORM,
};
pub use qcqp::{solve_qcqp, QcqpSolution};
pub use threshold::{update_threshold, ThresholdObjective};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mapping::{init_dct_filters, LayerMapping};
use crate::numerics::{psnr_default_peak, Image, PatchMatrix};
use crate::recovery::{ForwardProblem, RecoveryModel};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingConfig {
    pub n_filters: usize,
    pub patch_h: usize,
    pub patch_w: usize,
    pub n_patches: usize,
    pub lambda: f64,
    pub n_layers: usize,
    pub admm_iters: usize,
    pub v_iters: usize,
    pub alpha_iters: usize,
    pub rel_tol: f64,
    pub max_sweeps: usize,
    pub rho0: f64,
    pub seed: u64,
}

impl TrainingConfig {
    /// Denoising defaults; `sigma_scaled` is the noise level on the image's
    /// own intensity scale and sets `λ = 10 / sigma_scaled`.
    pub fn denoising(sigma_scaled: f64) -> Self {
        Self { lambda: 10.0 / sigma_scaled, max_sweeps: 120, ..Self::default() }
    }

    pub fn mri() -> Self {
        Self { lambda: 1e6, max_sweeps: 180, ..Self::default() }
    }

    pub fn admm(&self) -> AdmmParams {
        AdmmParams { iters: self.admm_iters, v_iters: self.v_iters, rho0: self.rho0 }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("filters_k", self.n_filters),
            ("patch_h", self.patch_h),
            ("patch_w", self.patch_w),
            ("n_patches", self.n_patches),
            ("admm_iters", self.admm_iters),
            ("v_iters", self.v_iters),
            ("alpha_iters", self.alpha_iters),
            ("max_sweeps", self.max_sweeps),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.n_filters > self.patch_h * self.patch_w {
            return Err(Error::Config(format!(
                "filters_k = {} exceeds the patch length {}",
                self.n_filters,
                self.patch_h * self.patch_w
            )));
        }
        for (name, value) in [("lambda", self.lambda), ("rel_tol", self.rel_tol), ("rho0", self.rho0)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {value}")));
            }
        }
        Ok(())
    }
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            n_filters: 64,
            patch_h: 8,
            patch_w: 8,
            n_patches: 20_000,
            lambda: 1.0,
            n_layers: 10,
            admm_iters: 4,
            v_iters: 4,
            alpha_iters: 4,
            rel_tol: 2e-3,
            max_sweeps: 120,
            rho0: 1.0,
            seed: 0,
        }
    }
}

/// Co-located patches from the clean images and the current estimates.
#[derive(Clone, Debug)]
pub struct TrainingSet {
    pub clean: PatchMatrix,
    pub current: PatchMatrix,
    /// `(image index, row, col)` of each column.
    pub positions: Vec<(usize, usize, usize)>,
}

impl TrainingSet {
    pub fn new(clean: PatchMatrix, current: PatchMatrix) -> Result<Self> {
        if clean.patch_len() != current.patch_len() || clean.n_cols() != current.n_cols() {
            return Err(Error::shape("clean and current patch matrices differ in shape"));
        }
        Ok(Self { clean, current, positions: Vec::new() })
    }

    /// Draws `n_patches` positions uniformly without replacement from every
    /// circular position of every image (all of them if fewer exist).
    pub fn sample(
        clean: &[Image],
        current: &[Image],
        patch_h: usize,
        patch_w: usize,
        n_patches: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let positions = sample_positions(clean, current, patch_h, patch_w, n_patches, rng)?;
        let r = patch_h * patch_w;
        let mut clean_pm = PatchMatrix::zeros(r, positions.len())?;
        let mut current_pm = PatchMatrix::zeros(r, positions.len())?;
        for (n, &(l, r0, c0)) in positions.iter().enumerate() {
            let (h, w) = clean[l].dims();
            crate::numerics::gather(clean[l].pixels(), clean_pm.column_mut(n), r0, c0, patch_h, patch_w, h, w);
            crate::numerics::gather(current[l].pixels(), current_pm.column_mut(n), r0, c0, patch_h, patch_w, h, w);
        }
        Ok(Self { clean: clean_pm, current: current_pm, positions })
    }
}

fn sample_positions(
    clean: &[Image],
    current: &[Image],
    patch_h: usize,
    patch_w: usize,
    n_patches: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(usize, usize, usize)>> {
    let first = clean.first().ok_or_else(|| Error::InvalidCount("no training images".into()))?;
    let (h, w) = first.dims();
    if current.len() != clean.len() {
        return Err(Error::shape("clean and current image lists differ in length"));
    }
    for img in clean.iter().chain(current) {
        if img.dims() != (h, w) {
            return Err(Error::shape("training images must share one size"));
        }
    }
    if patch_h == 0 || patch_w == 0 || patch_h > h || patch_w > w {
        return Err(Error::shape(format!("patch {patch_h}x{patch_w} does not fit {h}x{w} images")));
    }
    let per_image = h * w;
    let total = per_image * clean.len();
    let amount = n_patches.min(total);
    let mut picked = rand::seq::index::sample(rng, total, amount).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| (i / per_image, (i % per_image) / w, i % w)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    ObjectiveIncreased,
    MaxSweeps,
}

#[derive(Clone, Debug)]
pub struct LayerReport {
    /// Objective at the start and after every sweep.
    pub sweep_objectives: Vec<f64>,
    /// Objective at the start and after every threshold or filter update.
    pub update_objectives: Vec<f64>,
    pub sweeps: usize,
    pub stop: StopReason,
    pub dead_filter_resets: usize,
}

#[derive(Clone, Debug)]
pub struct TrainedLayer {
    pub mapping: LayerMapping,
    pub objective: f64,
    pub report: LayerReport,
}

/// `||X_train - D T_α(D^H X)||_F²`.
pub fn layer_objective(ts: &TrainingSet, layer: &LayerMapping) -> f64 {
    residual(ts, layer).frobenius_sqr()
}

fn residual(ts: &TrainingSet, layer: &LayerMapping) -> PatchMatrix {
    let mut res = ts.clean.clone();
    for k in 0..layer.n_filters() {
        linalg::add_contribution(&mut res, &ts.current, layer.filter(k), layer.thresholds()[k], -1.0);
    }
    res
}

fn relative_change(prev: &LayerMapping, next: &LayerMapping) -> f64 {
    let mut diff = 0.0;
    let mut base = 0.0;
    for (a, b) in prev.filters().iter().zip(next.filters()) {
        diff += (a - b).norm_sqr();
        base += b.norm_sqr();
    }
    for (a, b) in prev.thresholds().iter().zip(next.thresholds()) {
        diff += (a - b).powi(2);
        base += b * b;
    }
    if base == 0.0 {
        return if diff == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (diff / base).sqrt()
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Block coordinate descent on one layer, starting from `init`.
///
/// Sweeps stop when the relative change of `(D, α)` drops to `rel_tol`, when
/// a sweep ends with a higher objective than the previous one, or after
/// `max_sweeps`. The lowest-objective iterate seen at a sweep boundary is
/// returned.
pub fn train_layer(ts: &TrainingSet, init: &LayerMapping, cfg: &TrainingConfig) -> Result<TrainedLayer> {
    let r = init.patch_len();
    if ts.clean.patch_len() != r || ts.current.patch_len() != r || ts.clean.n_cols() != ts.current.n_cols() {
        return Err(Error::shape("training set does not match the layer's patch size"));
    }
    let k_total = init.n_filters();
    let params = cfg.admm();
    let gram = linalg::gram(&ts.current);

    let mut layer = init.clone();
    let start = layer_objective(ts, &layer);
    let mut best = (layer.clone(), start);
    let mut sweep_objectives = vec![start];
    let mut update_objectives = vec![start];
    let mut stop = StopReason::MaxSweeps;
    let mut dead_filter_resets = 0;
    let mut sweeps = 0;

    for _ in 0..cfg.max_sweeps {
        let previous = layer.clone();
        // fresh residual each sweep, updated incrementally inside it
        let mut res = residual(ts, &layer);
        for k in 0..k_total {
            let mut e = res;
            linalg::add_contribution(&mut e, &ts.current, layer.filter(k), layer.thresholds()[k], 1.0);

            let alpha = update_threshold(&e, &ts.current, layer.filter(k), layer.thresholds()[k], cfg.alpha_iters)?;
            layer.set_threshold(k, alpha);
            update_objectives.push(linalg::block_objective(&e, &ts.current, layer.filter(k), alpha));

            let d = layer.filter(k).to_vec();
            let update = admm::run_filter_admm(&e, &ts.current, &gram, &d, alpha, &params)?;
            layer.filter_mut(k).copy_from_slice(&update.filter);

            if linalg::norm_sqr(layer.filter(k)).sqrt() < DEAD_FILTER_NORM {
                let atom = init_dct_filters(layer.patch_h(), layer.patch_w(), k + 1)?;
                layer.filter_mut(k).copy_from_slice(&atom[k * r..]);
                let others: Vec<f64> = layer.thresholds().to_vec();
                layer.set_threshold(k, median(&others));
                dead_filter_resets += 1;
            }

            linalg::add_contribution(&mut e, &ts.current, layer.filter(k), layer.thresholds()[k], -1.0);
            update_objectives.push(e.frobenius_sqr());
            res = e;
        }
        sweeps += 1;

        let objective = layer_objective(ts, &layer);
        let last = *sweep_objectives.last().expect("non-empty");
        sweep_objectives.push(objective);
        if objective < best.1 {
            best = (layer.clone(), objective);
        }
        if objective > last {
            stop = StopReason::ObjectiveIncreased;
            break;
        }
        if relative_change(&previous, &layer) <= cfg.rel_tol {
            stop = StopReason::Converged;
            break;
        }
    }

    Ok(TrainedLayer {
        mapping: best.0,
        objective: best.1,
        report: LayerReport { sweep_objectives, update_objectives, sweeps, stop, dead_filter_resets },
    })
}

#[derive(Clone, Debug)]
pub struct TrainedNetwork {
    pub model: RecoveryModel,
    pub layers: Vec<TrainedLayer>,
    /// Mean PSNR of the training estimates, `x(0)` first.
    pub train_psnr: Vec<f64>,
    /// Final training estimates `x(N)`.
    pub estimates: Vec<Image>,
}

/// Trains `cfg.n_layers` mappings. After each layer every training estimate
/// is pushed through the new mapping and the data-fit step, exactly as at
/// recovery time, and the next layer learns from those estimates.
pub fn train_network(clean: &[Image], problems: &[ForwardProblem], cfg: &TrainingConfig) -> Result<TrainedNetwork> {
    cfg.validate()?;
    if clean.is_empty() {
        return Err(Error::InvalidCount("at least one training pair is required".into()));
    }
    if clean.len() != problems.len() {
        return Err(Error::shape(format!("{} clean images but {} measurements", clean.len(), problems.len())));
    }
    let kind = problems[0].kind();
    if problems.iter().any(|p| p.kind() != kind) {
        return Err(Error::Config("training measurements mix problem kinds".into()));
    }
    for (img, p) in clean.iter().zip(problems) {
        if img.dims() != clean[0].dims() || p.dims() != img.dims() {
            return Err(Error::shape("training images and measurements must share one size"));
        }
    }

    let mut estimates: Vec<Image> = problems.iter().map(ForwardProblem::warm_start).collect();
    let mut train_psnr = vec![mean_psnr(&estimates, clean)?];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut layers = Vec::with_capacity(cfg.n_layers);

    for _ in 0..cfg.n_layers {
        let ts = TrainingSet::sample(clean, &estimates, cfg.patch_h, cfg.patch_w, cfg.n_patches, &mut rng)?;
        let init = LayerMapping::dct(cfg.patch_h, cfg.patch_w, cfg.n_filters, 0.0)?;
        let trained = train_layer(&ts, &init, cfg)?;
        estimates = estimates
            .iter()
            .zip(problems)
            .map(|(x, p)| p.x_update(&trained.mapping.apply_averaged(x)?, cfg.lambda))
            .collect::<Result<_>>()?;
        train_psnr.push(mean_psnr(&estimates, clean)?);
        layers.push(trained);
    }

    let model = RecoveryModel::new(
        kind,
        cfg.lambda,
        cfg.n_filters,
        cfg.patch_h,
        cfg.patch_w,
        layers.iter().map(|l| l.mapping.clone()).collect(),
    )?;
    Ok(TrainedNetwork { model, layers, train_psnr, estimates })
}

fn mean_psnr(estimates: &[Image], clean: &[Image]) -> Result<f64> {
    let total = estimates.iter().zip(clean).map(|(x, c)| psnr_default_peak(x, c)).sum::<Result<f64>>()?;
    Ok(total / clean.len() as f64)
}
