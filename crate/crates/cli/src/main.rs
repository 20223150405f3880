//! Command-line front end: simulate test data, train a network, recover
//! images and score reconstructions.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use bcdnet::io::{self, MetricsRow};
use bcdnet::simulate::{self, PhantomKind, SimulationSpec};
use bcdnet::{psnr, recover, train_network, Domain, ForwardProblem, Image, ProblemKind};

#[derive(Parser)]
#[command(name = "bcdnet", version, about = "Train and run block-coordinate-descent image recovery networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate phantoms and their simulated measurements.
    Simulate(SimulateArgs),
    /// Train a network from clean images and paired measurements.
    Train(TrainArgs),
    /// Run a trained network on one measurement.
    Recover(RecoverArgs),
    /// Print the PSNR of a reconstruction against a reference.
    Eval(EvalArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Output directory; receives truth/, meas/ and, for MRI, zf/ and mask.cmsk.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "denoise")]
    problem: ProblemKind,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 64)]
    height: usize,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value = "ellipses")]
    phantom: PhantomKind,
    /// Noise standard deviation on the [0, 255] scale. For MRI it applies to
    /// each component of the sampled k-space bins.
    #[arg(long, default_value_t = 30.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0.25)]
    rate: f64,
    #[arg(long, default_value_t = 0.3)]
    center_fraction: f64,
    #[arg(long, default_value_t = 3)]
    supersample: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// First index used in output file names.
    #[arg(long, default_value_t = 0)]
    first_index: usize,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    /// Directory of clean CIMG images (overrides `train_dir`).
    #[arg(long)]
    train_dir: Option<PathBuf>,
    /// Directory of measurements paired with the clean images by file stem.
    #[arg(long)]
    meas_dir: Option<PathBuf>,
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Output model file (overrides `model`).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Per-layer training metrics CSV (overrides `metrics`).
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Optional CSV with the objective after every sweep of every layer.
    #[arg(long)]
    sweep_metrics: Option<PathBuf>,
}

#[derive(Args)]
struct RecoverArgs {
    #[arg(long)]
    model: PathBuf,
    /// Noisy image (denoising) or sampled k-space (MRI).
    #[arg(long)]
    meas: PathBuf,
    /// Sampling mask, required for MRI models.
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Ground truth; enables the PSNR column of the metrics.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    recon: PathBuf,
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Peak value; defaults to the reference's largest magnitude.
    #[arg(long)]
    peak: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => run_simulate(&a),
        Command::Train(a) => run_train(&a),
        Command::Recover(a) => run_recover(&a),
        Command::Eval(a) => run_eval(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for filesystem failures, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    let io = err.chain().any(|cause| {
        cause.downcast_ref::<std::io::Error>().is_some()
            || cause.downcast_ref::<bcdnet::Error>().is_some_and(bcdnet::Error::is_io)
    });
    if io {
        2
    } else {
        1
    }
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

fn run_simulate(a: &SimulateArgs) -> Result<()> {
    if a.count == 0 {
        bail!("--count must be at least 1");
    }
    let truth_dir = a.out.join("truth");
    let meas_dir = a.out.join("meas");
    create_dir(&truth_dir)?;
    create_dir(&meas_dir)?;
    let spec = |i: usize| SimulationSpec {
        phantom: a.phantom,
        height: a.height,
        width: a.width,
        sigma: simulate::scale_sigma(a.sigma, 1.0),
        rate: a.rate,
        center_fraction: a.center_fraction,
        seed: a.seed.wrapping_mul(1_000_003).wrapping_add(i as u64),
        supersample: a.supersample,
    };
    let mask = match a.problem {
        ProblemKind::Denoising => None,
        ProblemKind::Mri => {
            let mask = simulate::gen_mask(a.height, a.width, a.rate, a.center_fraction, a.seed)?;
            let path = a.out.join("mask.cmsk");
            io::write_cmsk(&path, &mask).with_context(|| format!("writing {}", path.display()))?;
            create_dir(&a.out.join("zf"))?;
            Some(mask)
        }
    };
    for i in a.first_index..a.first_index + a.count {
        let stem = format!("img{i:03}");
        let (truth, problem) = match &mask {
            None => simulate::simulate_denoising(&spec(i))?,
            Some(m) => simulate::simulate_mri(&spec(i), m)?,
        };
        let file = format!("{stem}.cimg");
        write_image(&truth_dir.join(&file), &truth)?;
        write_image(&meas_dir.join(&file), problem.measurement())?;
        if mask.is_some() {
            write_image(&a.out.join("zf").join(&file), &problem.warm_start())?;
        }
    }
    println!("wrote {} {} case(s) to {}", a.count, problem_name(a.problem), a.out.display());
    Ok(())
}

fn problem_name(kind: ProblemKind) -> &'static str {
    match kind {
        ProblemKind::Denoising => "denoising",
        ProblemKind::Mri => "MRI",
    }
}

fn write_image(path: &Path, img: &Image) -> Result<()> {
    io::write_cimg(path, img).with_context(|| format!("writing {}", path.display()))
}

fn read_image(path: &Path, domain: Domain) -> Result<Image> {
    io::read_cimg(path, domain).with_context(|| format!("reading {}", path.display()))
}

fn measurement_domain(kind: ProblemKind) -> Domain {
    match kind {
        ProblemKind::Denoising => Domain::Spatial,
        ProblemKind::Mri => Domain::Frequency,
    }
}

fn build_problem(kind: ProblemKind, y: Image, mask: Option<&bcdnet::Mask>) -> Result<ForwardProblem> {
    Ok(match kind {
        ProblemKind::Denoising => ForwardProblem::denoising(y)?,
        ProblemKind::Mri => {
            let mask = mask.ok_or_else(|| anyhow!("MRI needs a sampling mask (--mask or `mask` in the config)"))?;
            ForwardProblem::mri(y, mask.clone())?
        }
    })
}

/// Sorted `(stem, path)` pairs of the `.cimg` files in `dir`.
fn list_cimg(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let entries = std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.with_context(|| format!("listing {}", dir.display()))?.path();
        if path.extension().is_some_and(|e| e == "cimg") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.push((stem.to_string(), path.clone()));
            }
        }
    }
    out.sort();
    Ok(out)
}

fn run_train(a: &TrainArgs) -> Result<()> {
    let cfg = io::read_config(&a.config).with_context(|| format!("reading config {}", a.config.display()))?;
    let pick = |flag: &Option<PathBuf>, key: &Option<PathBuf>, name: &str| -> Result<PathBuf> {
        flag.clone()
            .or_else(|| key.clone())
            .ok_or_else(|| anyhow!("no {name} given: pass --{} or set `{name}` in the config", name.replace('_', "-")))
    };
    let train_dir = pick(&a.train_dir, &cfg.train_dir, "train_dir")?;
    let meas_dir = pick(&a.meas_dir, &cfg.meas_dir, "meas_dir")?;
    let model_path = pick(&a.model, &cfg.model, "model")?;
    let metrics_path = a.metrics.clone().or_else(|| cfg.metrics.clone());
    let mask = match cfg.problem {
        ProblemKind::Denoising => None,
        ProblemKind::Mri => {
            let path = pick(&a.mask, &cfg.mask, "mask")?;
            Some(io::read_cmsk(&path).with_context(|| format!("reading {}", path.display()))?)
        }
    };

    let clean_files = list_cimg(&train_dir)?;
    if clean_files.is_empty() {
        bail!("no .cimg files in {}", train_dir.display());
    }
    let mut clean = Vec::new();
    let mut problems = Vec::new();
    for (stem, path) in &clean_files {
        let meas_path = meas_dir.join(format!("{stem}.cimg"));
        if !meas_path.exists() {
            bail!("no measurement {} for training image {stem}", meas_path.display());
        }
        clean.push(read_image(path, Domain::Spatial)?);
        let y = read_image(&meas_path, measurement_domain(cfg.problem))?;
        problems.push(build_problem(cfg.problem, y, mask.as_ref())?);
    }

    let net = train_network(&clean, &problems, &cfg.training)?;
    io::save_model(&model_path, &net.model).with_context(|| format!("writing {}", model_path.display()))?;
    let rows: Vec<MetricsRow> = net
        .layers
        .iter()
        .enumerate()
        .map(|(i, l)| MetricsRow { layer: i + 1, psnr_db: net.train_psnr[i + 1], layer_cost: l.objective })
        .collect();
    if let Some(path) = &metrics_path {
        io::write_metrics_csv(path, &rows).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &a.sweep_metrics {
        let mut text = String::from("layer,sweep,objective\n");
        for (i, l) in net.layers.iter().enumerate() {
            for (s, obj) in l.report.sweep_objectives.iter().enumerate() {
                text.push_str(&format!("{},{s},{obj:.14e}\n", i + 1));
            }
        }
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    println!(
        "trained {} layer(s) on {} image(s); mean training PSNR {:.2} dB -> {:.2} dB",
        net.layers.len(),
        clean.len(),
        net.train_psnr[0],
        net.train_psnr.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn run_recover(a: &RecoverArgs) -> Result<()> {
    let model = io::load_model(&a.model).with_context(|| format!("reading model {}", a.model.display()))?;
    let y = read_image(&a.meas, measurement_domain(model.kind()))?;
    let mask = match &a.mask {
        Some(path) => Some(io::read_cmsk(path).with_context(|| format!("reading {}", path.display()))?),
        None => None,
    };
    let problem = build_problem(model.kind(), y, mask.as_ref())?;
    let reference = a.reference.as_deref().map(|p| read_image(p, Domain::Spatial)).transpose()?;
    let trace = recover(&model, &problem, None)?;
    write_image(&a.out, trace.final_image())?;

    let psnrs = match &reference {
        Some(r) => trace.psnr_trace(r, r.max_abs())?,
        None => vec![f64::NAN; trace.iterates.len()],
    };
    if let Some(path) = &a.metrics {
        let rows: Vec<MetricsRow> = trace
            .layer_costs
            .iter()
            .enumerate()
            .map(|(i, &cost)| MetricsRow { layer: i + 1, psnr_db: psnrs[i + 1], layer_cost: cost })
            .collect();
        io::write_metrics_csv(path, &rows).with_context(|| format!("writing {}", path.display()))?;
    }
    if reference.is_some() {
        println!("PSNR {} -> {}", fmt_db(psnrs[0]), fmt_db(*psnrs.last().expect("non-empty")));
    }
    Ok(())
}

fn fmt_db(v: f64) -> String {
    if v.is_infinite() {
        "inf dB".to_string()
    } else {
        format!("{v:.4} dB")
    }
}

fn run_eval(a: &EvalArgs) -> Result<()> {
    let recon = read_image(&a.recon, Domain::Spatial)?;
    let reference = read_image(&a.reference, Domain::Spatial)?;
    let peak = a.peak.unwrap_or_else(|| reference.max_abs());
    let value = psnr(&recon, &reference, peak)?;
    println!("{}", fmt_db(value));
    Ok(())
}
