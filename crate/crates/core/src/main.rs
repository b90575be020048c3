use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sosmp::basis::{Basis, BasisSpec};
use sosmp::bp_dense::{marginal, run_to_fixed_point};
use sosmp::config::{
    canonical, parse_config, preset, ChainMixtureConfig, FlowConfig, KernelSmoothnessConfig, ModelFile, Preset,
};
use sosmp::experiments::{self, mean_tail, mean_tail_rel, mean_trace, run_seeds};
use sosmp::flow::{self, FramePair, Readout};
use sosmp::io::{config_hash, write_coeffs, write_marginals, write_trace, CsvWriter};
use sosmp::planner::{log_delta_grid, ops_estimate, DecayModel};
use sosmp::sosmp::{SosmpConfig, StepRule};
use sosmp::Error;

/// Stochastic orthogonal-series message passing on continuous-state MRFs.
#[derive(Parser)]
#[command(name = "sosmp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dense BP fixed point: coefficient dump and node marginals.
    Baseline(BaselineArgs),
    /// SOSMP on a Gaussian-mixture chain, swept over r and k.
    ChainMixture(ChainArgs),
    /// SOSMP with kernel edge potentials of varying smoothness.
    KernelSmoothness(KernelArgs),
    /// Optical flow from two frames.
    Flow(FlowArgs),
    /// Critical dimension and operation-count estimates.
    Plan(PlanArgs),
    /// Writes a synthetic translated frame pair as PGM files.
    SynthFrames(SynthArgs),
}

#[derive(Args)]
struct BaselineArgs {
    /// Model file (TOML).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Chain length of the built-in mixture model when no model file is given.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Seed of the built-in mixture model.
    #[arg(long, default_value_t = 1)]
    model_seed: u64,
    /// Coefficients in the dump.
    #[arg(long, default_value_t = 10)]
    r: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_sweeps: usize,
    /// Refuse models whose graph has a cycle.
    #[arg(long)]
    require_tree: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ChainArgs {
    #[arg(long, value_parser = ["fig4", "fig6a", "fig6b"])]
    preset: Option<String>,
    /// Configuration file (TOML); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    model_seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Use the contractive step size `1 / (gamma (t + 1))`.
    #[arg(long)]
    gamma: Option<f64>,
    /// Record wall-clock time in traces (breaks byte-identical output).
    #[arg(long)]
    timing: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct KernelArgs {
    #[arg(long, value_parser = ["fig8", "fig9"])]
    preset: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    model_seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long)]
    terms: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<usize>>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    timing: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct FlowArgs {
    #[arg(long, value_parser = ["fig11"])]
    preset: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// First frame (binary PGM).
    #[arg(long, requires = "second")]
    first: Option<PathBuf>,
    /// Second frame (binary PGM).
    #[arg(long, requires = "first")]
    second: Option<PathBuf>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    snapshots: Option<Vec<usize>>,
    /// Largest displacement per axis.
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    sigma_u: Option<f64>,
    /// Defaults to a quarter of `d`.
    #[arg(long)]
    sigma_uv: Option<f64>,
    #[arg(long)]
    points_per_unit: Option<usize>,
    #[arg(long, value_enum)]
    readout: Option<ReadoutArg>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReadoutArg {
    Mode,
    Mean,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum DecayKind {
    Polynomial,
    Exponential,
    Kernel,
}

#[derive(Args, Serialize)]
struct PlanArgs {
    #[arg(long, value_enum, default_value = "polynomial")]
    decay: DecayKind,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    /// Exponential decay rate.
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    /// Terms of the kernel expansion `lambda_j = j^{-alpha}`.
    #[arg(long, default_value_t = 1000)]
    terms: usize,
    #[arg(long, default_value_t = 1e-4)]
    delta_min: f64,
    #[arg(long, default_value_t = 1e-1)]
    delta_max: f64,
    #[arg(long, default_value_t = 13)]
    count: usize,
    /// Extra deltas appended to the logarithmic grid.
    #[arg(long, value_delimiter = ',')]
    delta: Option<Vec<f64>>,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 32)]
    width: usize,
    #[arg(long, default_value_t = 32)]
    height: usize,
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    dx: i64,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    dy: i64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

/// Error or non-convergence, mapped to the process exit code.
enum Failure {
    Error(Error),
    NotConverged(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Error(e.into())
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Baseline(a) => baseline(a),
        Command::ChainMixture(a) => chain_mixture(a),
        Command::KernelSmoothness(a) => kernel_smoothness(a),
        Command::Flow(a) => flow_cmd(a),
        Command::Plan(a) => plan(a),
        Command::SynthFrames(a) => synth(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(Failure::NotConverged(msg)) => {
            eprintln!("not converged: {msg}");
            ExitCode::from(4)
        }
    }
}

fn out_dir(path: &Path) -> Result<(), Failure> {
    fs::create_dir_all(path)?;
    Ok(())
}

fn baseline(a: BaselineArgs) -> CmdResult {
    let model = match &a.model {
        Some(p) => ModelFile::load(p)?,
        None => ModelFile::mixture_chain(a.n, a.model_seed),
    };
    let mrf = model.build()?;
    if a.require_tree && !mrf.graph().is_tree() {
        return Err(Error::Structure("model graph is not a tree".into()).into());
    }
    let hash = config_hash(&format!(
        "{}\nr = {}\ntol = {}\nmax_sweeps = {}\n",
        model.to_toml(),
        a.r,
        a.tol,
        a.max_sweeps
    ));
    let fp = run_to_fixed_point(&mrf, a.tol, a.max_sweeps)?;
    println!("sweeps = {}, residual = {:e}", fp.sweeps, fp.residual);
    out_dir(&a.out)?;
    let basis = Basis::new(BasisSpec::for_space(mrf.space(), a.r)?, mrf.grid());
    write_coeffs(&a.out.join("baseline_coeffs.csv"), &hash, &fp.messages.project(&basis)?)?;
    let marginals = (0..mrf.graph().num_nodes())
        .map(|u| marginal(&mrf, &fp.messages, u))
        .collect::<sosmp::Result<Vec<_>>>()?;
    write_marginals(&a.out.join("baseline_marginals.csv"), &hash, mrf.grid(), &marginals)?;
    if !fp.converged {
        return Err(Failure::NotConverged(format!(
            "residual {:e} after {} sweeps",
            fp.residual, fp.sweeps
        )));
    }
    Ok(())
}

fn load_or<T: for<'de> serde::Deserialize<'de>>(path: &Option<PathBuf>, default: T) -> sosmp::Result<T> {
    match path {
        Some(p) => parse_config(&fs::read_to_string(p)?),
        None => Ok(default),
    }
}

fn chain_mixture(a: ChainArgs) -> CmdResult {
    let base = match preset(a.preset.as_deref().unwrap_or("fig4"))? {
        Preset::ChainMixture(c) => c,
        _ => unreachable!("chain presets are validated by clap"),
    };
    let mut cfg: ChainMixtureConfig = load_or(&a.config, base)?;
    if let Some(v) = a.n {
        cfg.n = v;
    }
    if let Some(v) = a.model_seed {
        cfg.model_seed = v;
    }
    if let Some(v) = a.r {
        cfg.r_values = v;
    }
    if let Some(v) = a.k {
        cfg.k_values = v;
    }
    if let Some(v) = a.iters {
        cfg.iters = v;
    }
    if let Some(v) = a.seeds {
        cfg.seeds = v;
    }
    if let Some(g) = a.gamma {
        cfg.step_rule = StepRule::Contractive { gamma: g };
    }
    cfg.validate()?;
    let hash = config_hash(&canonical(&cfg));
    let mrf = experiments::mixture_chain(cfg.n, cfg.model_seed)?;
    let oracle = experiments::oracle(&mrf)?;
    if !oracle.converged {
        return Err(Failure::NotConverged(format!("baseline residual {:e}", oracle.residual)));
    }
    out_dir(&a.out)?;
    let mut floors = CsvWriter::create(&a.out.join("floors.csv"), &hash, &["r", "k", "final_error", "final_error_rel"])?;
    for &r in &cfg.r_values {
        let prepared = experiments::prepare(&mrf, &oracle, r)?;
        for &k in &cfg.k_values {
            let sc = SosmpConfig::new(r, k)
                .with_iters(cfg.iters)
                .with_step_rule(cfg.step_rule);
            let traces = run_seeds(&mrf, &prepared, &sc, &cfg.seeds)?;
            for (s, tr) in cfg.seeds.iter().zip(&traces) {
                write_trace(&a.out.join(format!("trace_r{r}_k{k}_seed{s}.csv")), &hash, tr, a.timing)?;
            }
            write_mean(&a.out.join(format!("mean_r{r}_k{k}.csv")), &hash, &traces)?;
            let tail = mean_tail(&traces);
            floors.row(&[&r, &k, &tail, &mean_tail_rel(&traces)])?;
            println!("r = {r}, k = {k}: final-decade mean error {tail:e}");
        }
    }
    floors.finish()?;
    Ok(())
}

fn write_mean(path: &Path, hash: &str, traces: &[sosmp::sosmp::RunTrace]) -> sosmp::Result<()> {
    let mut w = CsvWriter::create(path, hash, &["t", "mean_e_t", "mean_e_rel"])?;
    for p in mean_trace(traces) {
        w.row(&[&p.t, &p.e_t, &p.e_rel])?;
    }
    w.finish()?;
    Ok(())
}

fn kernel_smoothness(a: KernelArgs) -> CmdResult {
    let base = match preset(a.preset.as_deref().unwrap_or("fig9"))? {
        Preset::KernelSmoothness(c) => c,
        _ => unreachable!("kernel presets are validated by clap"),
    };
    let mut cfg: KernelSmoothnessConfig = load_or(&a.config, base)?;
    if let Some(v) = a.n {
        cfg.n = v;
    }
    if let Some(v) = a.model_seed {
        cfg.model_seed = v;
    }
    if let Some(v) = a.alpha {
        cfg.alphas = v;
    }
    if let Some(v) = a.terms {
        cfg.terms = v;
    }
    if let Some(v) = a.r {
        cfg.r_values = v;
    }
    if let Some(v) = a.k {
        cfg.k = v;
    }
    if let Some(v) = a.iters {
        cfg.iters = v;
    }
    if let Some(v) = a.seeds {
        cfg.seeds = v;
    }
    cfg.validate()?;
    let hash = config_hash(&canonical(&cfg));
    out_dir(&a.out)?;
    let mut floors = CsvWriter::create(&a.out.join("floors.csv"), &hash, &["alpha", "r", "final_error", "final_error_rel"])?;
    for &alpha in &cfg.alphas {
        let mrf = experiments::kernel_chain(cfg.n, alpha, cfg.terms, cfg.model_seed)?;
        let oracle = experiments::oracle(&mrf)?;
        if !oracle.converged {
            return Err(Failure::NotConverged(format!("baseline residual {:e}", oracle.residual)));
        }
        for &r in &cfg.r_values {
            let prepared = experiments::prepare(&mrf, &oracle, r)?;
            let sc = SosmpConfig::new(r, cfg.k).with_iters(cfg.iters);
            let traces = run_seeds(&mrf, &prepared, &sc, &cfg.seeds)?;
            for (s, tr) in cfg.seeds.iter().zip(&traces) {
                write_trace(
                    &a.out.join(format!("trace_alpha{alpha}_r{r}_seed{s}.csv")),
                    &hash,
                    tr,
                    a.timing,
                )?;
            }
            write_mean(&a.out.join(format!("mean_alpha{alpha}_r{r}.csv")), &hash, &traces)?;
            let tail = mean_tail(&traces);
            floors.row(&[&alpha, &r, &tail, &mean_tail_rel(&traces)])?;
            println!("alpha = {alpha}, r = {r}: final-decade mean error {tail:e}");
        }
    }
    floors.finish()?;
    Ok(())
}

fn flow_cmd(a: FlowArgs) -> CmdResult {
    let base = match preset(a.preset.as_deref().unwrap_or("fig11"))? {
        Preset::Flow(c) => c,
        _ => unreachable!("flow presets are validated by clap"),
    };
    let mut cfg: FlowConfig = load_or(&a.config, base)?;
    if let Some(v) = a.r {
        cfg.r = v;
    }
    if let Some(v) = a.k {
        cfg.k = v;
    }
    if let Some(v) = a.iters {
        cfg.iters = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.snapshots {
        cfg.snapshots = v;
    }
    if let Some(v) = a.d {
        cfg.params.d = v;
        cfg.params.sigma_uv = 0.25 * v;
    }
    if let Some(v) = a.sigma_u {
        cfg.params.sigma_u = v;
    }
    if let Some(v) = a.sigma_uv {
        cfg.params.sigma_uv = v;
    }
    if let Some(v) = a.points_per_unit {
        cfg.params.points_per_unit = v;
    }
    if let Some(v) = a.readout {
        cfg.readout = match v {
            ReadoutArg::Mode => Readout::Mode,
            ReadoutArg::Mean => Readout::Mean,
        };
    }
    let frames = match (&a.first, &a.second) {
        (Some(f), Some(s)) => FramePair::load(f, s)?,
        _ => flow::synthetic_shift_pair(32, 32, 1, 0, cfg.seed)?,
    };
    let mut fingerprint = canonical(&cfg);
    fingerprint.push_str(&format!("{:?}{:?}", frames.first(), frames.second()));
    let hash = config_hash(&fingerprint);
    let (w, h) = (frames.width(), frames.height());
    let mrf = flow::build_flow_mrf(Arc::new(frames), &cfg.params)?;
    let sc = SosmpConfig::new(cfg.r, cfg.k).with_iters(cfg.iters).with_seed(cfg.seed);
    let run = flow::estimate_flow(&mrf, sc, cfg.readout, &cfg.snapshots)?;
    out_dir(&a.out)?;
    for (t, f) in &run.snapshots {
        flow::write_ppm(&a.out.join(format!("flow_t{t}.ppm")), w, h, &flow::hsv_encode(f, cfg.params.d))?;
    }
    flow::write_ppm(&a.out.join("flow_final.ppm"), w, h, &flow::hsv_encode(&run.flow, cfg.params.d))?;
    let mut csv = CsvWriter::create(&a.out.join("flow.csv"), &hash, &["i", "j", "x1", "x2"])?;
    for j in 0..h {
        for i in 0..w {
            let v = run.flow.at(i, j);
            csv.row(&[&i, &j, &v[0], &v[1]])?;
        }
    }
    csv.finish()?;
    let m = run.flow.interior_median(1);
    println!("median interior flow = ({}, {})", m[0], m[1]);
    Ok(())
}

fn plan(a: PlanArgs) -> CmdResult {
    let decay = match a.decay {
        DecayKind::Polynomial => DecayModel::Polynomial { c: a.c, alpha: a.alpha },
        DecayKind::Exponential => DecayModel::Exponential {
            c: a.c,
            rate: a.rate,
            alpha: a.alpha,
        },
        DecayKind::Kernel => sosmp::planner::spectrum_of_model(
            &sosmp::model::EdgePotential::kernel_expansion(a.alpha, a.terms),
        )?,
    };
    decay.validate()?;
    let mut deltas = log_delta_grid(a.delta_min, a.delta_max, a.count)?;
    deltas.extend(a.delta.iter().flatten().copied());
    let hash = config_hash(&toml::to_string(&a).expect("plan arguments serialize"));
    let header = ["delta", "r_star", "sum_lambda_sq", "ops_estimate"];
    let sink: Box<dyn std::io::Write> = match &a.out {
        Some(p) => Box::new(std::io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = CsvWriter::new(sink, &hash, &header)?;
    for d in deltas {
        let p = ops_estimate(&decay, d)?;
        w.row(&[&p.delta, &p.r_star, &p.sum_lambda_sq, &p.ops_estimate])?;
    }
    w.finish()?;
    Ok(())
}

fn synth(a: SynthArgs) -> CmdResult {
    let f = flow::synthetic_shift_pair(a.width, a.height, a.dx, a.dy, a.seed)?;
    out_dir(&a.out)?;
    flow::write_pgm(&a.out.join("frame1.pgm"), a.width, a.height, f.first())?;
    flow::write_pgm(&a.out.join("frame2.pgm"), a.width, a.height, f.second())?;
    Ok(())
}
