use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::recovery::ProblemKind;
use crate::simulate::scale_sigma;
use crate::training::TrainingConfig;

/// Everything a `train` run needs, read from a flat `key=value` file.
///
/// `sigma` is quoted on the `[0, 255]` scale and rescaled by `peak` (the
/// clean images' maximum, 1 for the built-in phantoms). Without an explicit
/// `lambda`, denoising uses `10 / σ'` and MRI uses `1e6`.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub training: TrainingConfig,
    pub sigma: Option<f64>,
    pub peak: f64,
    pub rate: f64,
    pub center_fraction: f64,
    pub train_dir: Option<PathBuf>,
    pub meas_dir: Option<PathBuf>,
    pub mask: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub metrics: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "problem",
    "lambda",
    "sigma",
    "peak",
    "layers",
    "filters_k",
    "patch_h",
    "patch_w",
    "n_patches",
    "admm_iters",
    "v_iters",
    "alpha_iters",
    "rel_tol",
    "max_sweeps",
    "rho0",
    "rate",
    "center_fraction",
    "seed",
    "train_dir",
    "meas_dir",
    "mask",
    "model",
    "metrics",
];

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

fn num<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(line, format!("{key} = '{value}' is not a valid number")))
}

/// Parses config text. Relative paths are resolved against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<RunConfig> {
    let mut pairs = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| bad(line_no, format!("expected key=value, got '{line}'")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(bad(line_no, format!("unknown key '{key}'")));
        }
        if !seen.insert(key.to_string()) {
            return Err(bad(line_no, format!("duplicate key '{key}'")));
        }
        pairs.push((line_no, key, value));
    }

    let problem = match pairs.iter().find(|(_, k, _)| *k == "problem") {
        Some((_, _, v)) => v.parse::<ProblemKind>()?,
        None => return Err(Error::Config("missing required key 'problem'".into())),
    };
    let mut cfg = RunConfig {
        problem,
        training: TrainingConfig::default(),
        sigma: None,
        peak: 1.0,
        rate: 0.25,
        center_fraction: 0.3,
        train_dir: None,
        meas_dir: None,
        mask: None,
        model: None,
        metrics: None,
    };
    let mut lambda = None;
    let mut max_sweeps = None;
    let path = |v: &str| base.join(v);
    let t = &mut cfg.training;
    for &(n, key, v) in &pairs {
        match key {
            "problem" => {}
            "lambda" => lambda = Some(num::<f64>(n, key, v)?),
            "sigma" => cfg.sigma = Some(num(n, key, v)?),
            "peak" => cfg.peak = num(n, key, v)?,
            "layers" => t.n_layers = num(n, key, v)?,
            "filters_k" => t.n_filters = num(n, key, v)?,
            "patch_h" => t.patch_h = num(n, key, v)?,
            "patch_w" => t.patch_w = num(n, key, v)?,
            "n_patches" => t.n_patches = num(n, key, v)?,
            "admm_iters" => t.admm_iters = num(n, key, v)?,
            "v_iters" => t.v_iters = num(n, key, v)?,
            "alpha_iters" => t.alpha_iters = num(n, key, v)?,
            "rel_tol" => t.rel_tol = num(n, key, v)?,
            "max_sweeps" => max_sweeps = Some(num(n, key, v)?),
            "rho0" => t.rho0 = num(n, key, v)?,
            "rate" => cfg.rate = num(n, key, v)?,
            "center_fraction" => cfg.center_fraction = num(n, key, v)?,
            "seed" => t.seed = num(n, key, v)?,
            "train_dir" => cfg.train_dir = Some(path(v)),
            "meas_dir" => cfg.meas_dir = Some(path(v)),
            "mask" => cfg.mask = Some(path(v)),
            "model" => cfg.model = Some(path(v)),
            "metrics" => cfg.metrics = Some(path(v)),
            _ => unreachable!("key list checked above"),
        }
    }

    if !(cfg.peak > 0.0) || !cfg.peak.is_finite() {
        return Err(Error::Config(format!("peak must be positive, got {}", cfg.peak)));
    }
    if let Some(s) = cfg.sigma {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Config(format!("sigma must be positive, got {s}")));
        }
    }
    let defaults = match problem {
        ProblemKind::Denoising => {
            let l = match (lambda, cfg.sigma) {
                (Some(l), _) => l,
                (None, Some(s)) => 10.0 / scale_sigma(s, cfg.peak),
                (None, None) => return Err(Error::Config("denoising needs 'sigma' or an explicit 'lambda'".into())),
            };
            TrainingConfig { lambda: l, ..TrainingConfig::denoising(1.0) }
        }
        ProblemKind::Mri => TrainingConfig { lambda: lambda.unwrap_or(1e6), ..TrainingConfig::mri() },
    };
    cfg.training.lambda = defaults.lambda;
    cfg.training.max_sweeps = max_sweeps.unwrap_or(defaults.max_sweeps);
    cfg.training.validate()?;
    Ok(cfg)
}

/// Reads and parses a config file; relative paths resolve against its directory.
pub fn read_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}
