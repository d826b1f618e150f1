//! The `splithmc` command-line harness.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 runtime error.

pub mod config;
pub mod output;
pub mod theory;
pub mod verify;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::diagnostics::{cox_intensity_map, summarize, ChainSummary};
use crate::error::{Error, Result};
use crate::integrators::IntegratorSpec;
use crate::linear::{B_MAX, B_MIN};
use crate::rng::RngState;
use crate::sampler::{hmc_run, hmc_run_adaptive, AdaptiveState, ChainOutput, HmcConfig};
use crate::targets::{synthesize_cox, synthesize_logistic, write_logistic_csv};

use config::{
    build_adaptive, build_hmc, build_integrator, build_target, read_config, BuiltTarget,
    ExperimentConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "splithmc",
    version,
    about = "HMC with energy-preserving splitting integrators"
)]
pub struct Cli {
    /// Override the configuration seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (or file, for `theory` and `synth`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Number of independent chains, run in parallel.
    #[arg(long, global = true, default_value_t = 1)]
    pub chains: usize,
    /// Suppress progress output.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print step sizes and map coefficients as CSV.
    Theory(TheoryArgs),
    /// Run HMC with a fixed integrator.
    Sample {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run adaptive-b HMC.
    Adaptive {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check the linear-map identities numerically.
    Verify,
    /// Write synthetic data sets.
    #[command(subcommand)]
    Synth(SynthCommand),
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    /// Include the four preset values of b (the default when no b is given).
    #[arg(long)]
    pub presets: bool,
    /// Explicit values of b.
    #[arg(long = "b", num_args = 1.., allow_negative_numbers = true)]
    pub b: Vec<f64>,
    /// Evenly spaced b values: LO HI COUNT.
    #[arg(long = "b-range", num_args = 3, value_names = ["LO", "HI", "COUNT"])]
    pub b_range: Option<Vec<f64>>,
    /// σ = β/α of the test problem.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Steps N used for the expected energy error.
    #[arg(long, default_value_t = 1)]
    pub n_steps: usize,
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Logistic-regression CSV: covariates then a 0/1 label.
    Logistic {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 8)]
        covariates: usize,
        #[arg(long)]
        header: bool,
    },
    /// Count grid from a log-Gaussian Cox process.
    Cox {
        #[arg(long, default_value_t = 16)]
        grid_side: usize,
        #[arg(long, default_value_t = 3.5881)]
        sigma2: f64,
        #[arg(long, default_value_t = 0.127)]
        beta: f64,
        /// Expected total number of points.
        #[arg(long, default_value_t = 185.0)]
        intensity: f64,
    },
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

enum Failure {
    Config(Error),
    Runtime(Error),
}

fn config_failure(e: Error) -> Failure {
    Failure::Config(e)
}

fn runtime_failure(e: Error) -> Failure {
    Failure::Runtime(e)
}

fn dispatch(cli: &Cli) -> std::result::Result<(), Failure> {
    if cli.chains == 0 {
        return Err(Failure::Config(Error::Config {
            path: "--chains".into(),
            message: "must be >= 1".into(),
        }));
    }
    match &cli.command {
        Command::Theory(args) => cmd_theory(cli, args).map_err(runtime_failure),
        Command::Sample { config } => cmd_run(cli, config, false),
        Command::Adaptive { config } => cmd_run(cli, config, true),
        Command::Verify => cmd_verify(cli),
        Command::Synth(s) => cmd_synth(cli, s).map_err(runtime_failure),
    }
}

fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.out {
        Some(path) => output::write_text(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_theory(cli: &Cli, args: &TheoryArgs) -> Result<()> {
    let mut rows = Vec::new();
    if args.presets || (args.b.is_empty() && args.b_range.is_none()) {
        rows.extend(theory::preset_rows());
    }
    rows.extend(args.b.iter().map(|&b| theory::TheoryRow {
        label: "b".into(),
        b,
    }));
    if let Some(r) = &args.b_range {
        let (lo, hi, count) = (r[0], r[1], r[2] as usize);
        for k in 0..count {
            let t = if count > 1 {
                k as f64 / (count - 1) as f64
            } else {
                0.0
            };
            rows.push(theory::TheoryRow {
                label: "range".into(),
                b: lo + (hi - lo) * t,
            });
        }
    }
    if !(args.sigma.is_finite() && args.sigma > 0.0) || args.n_steps == 0 {
        return Err(Error::Contract(
            "--sigma must be > 0 and --n-steps >= 1".into(),
        ));
    }
    emit(cli, &theory::table(&rows, args.sigma, args.n_steps))
}

fn cmd_verify(cli: &Cli) -> std::result::Result<(), Failure> {
    let checks = verify::run_checks();
    let mut text = String::new();
    for c in &checks {
        text.push_str(&format!(
            "{} {}: {}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        ));
    }
    emit(cli, &text).map_err(runtime_failure)?;
    if checks.iter().all(|c| c.passed) {
        Ok(())
    } else {
        Err(Failure::Runtime(Error::Contract(
            "some identity checks failed".into(),
        )))
    }
}

fn cmd_synth(cli: &Cli, cmd: &SynthCommand) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    let out = cli
        .out
        .as_ref()
        .ok_or_else(|| Error::Contract("synth needs --out".into()))?;
    match cmd {
        SynthCommand::Logistic {
            n,
            covariates,
            header,
        } => {
            let (rows, labels) = synthesize_logistic(seed, *n, *covariates);
            write_logistic_csv(out, &rows, &labels, *header)
        }
        SynthCommand::Cox {
            grid_side,
            sigma2,
            beta,
            intensity,
        } => {
            let model = synthesize_cox(seed, *grid_side, *sigma2, *beta, *intensity)?;
            let counts: Vec<f64> = model.counts().iter().map(|&c| c as f64).collect();
            let text: String = counts
                .chunks(*grid_side)
                .map(|row| {
                    row.iter()
                        .map(|c| format!("{c}"))
                        .collect::<Vec<_>>()
                        .join(",")
                        + "\n"
                })
                .collect();
            output::write_text(out, &text)
        }
    }
}

/// Everything needed to run one experiment, validated up front.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub target: BuiltTarget,
    pub hmc: HmcConfig,
    pub mode: Mode,
    pub seed: u64,
}

pub enum Mode {
    Fixed(IntegratorSpec),
    Adaptive(AdaptiveState),
}

/// Reads and validates a configuration; `seed` overrides the configured one.
pub fn load_experiment(path: &Path, adaptive: bool, seed: Option<u64>) -> Result<Experiment> {
    let config = read_config(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let target = build_target(&config.target, base)?;
    let mode = if adaptive {
        let a = config.adaptive.as_ref().ok_or_else(|| Error::Config {
            path: "/adaptive".into(),
            message: "the adaptive command needs an `adaptive` block".into(),
        })?;
        Mode::Adaptive(build_adaptive(a)?)
    } else {
        let i = config.integrator.as_ref().ok_or_else(|| Error::Config {
            path: "/integrator".into(),
            message: "the sample command needs an `integrator` block".into(),
        })?;
        Mode::Fixed(build_integrator(i, &target)?)
    };
    let hmc = build_hmc(&config.hmc, &target, adaptive)?;
    Ok(Experiment {
        seed: seed.unwrap_or(config.seed),
        config,
        target,
        hmc,
        mode,
    })
}

pub struct ChainRun {
    pub output: ChainOutput,
    pub adaptive: Option<AdaptiveState>,
    pub seconds: f64,
}

impl Experiment {
    pub fn run_chain(&self, stream: u64) -> Result<ChainRun> {
        let mut rng = RngState::with_stream(self.seed, stream);
        let start = Instant::now();
        let (output, adaptive) = match &self.mode {
            Mode::Fixed(spec) => (
                hmc_run(self.target.model(), &self.hmc, spec, &mut rng)?,
                None,
            ),
            Mode::Adaptive(a) => {
                let mut a = a.clone();
                let out = hmc_run_adaptive(self.target.model(), &self.hmc, &mut a, &mut rng)?;
                (out, Some(a))
            }
        };
        Ok(ChainRun {
            output,
            adaptive,
            seconds: start.elapsed().as_secs_f64(),
        })
    }

    /// Runs `chains` chains on streams `0..chains`, in parallel.
    pub fn run_chains(&self, chains: usize) -> Result<Vec<ChainRun>> {
        if chains == 1 {
            return Ok(vec![self.run_chain(0)?]);
        }
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..chains)
                .map(|k| s.spawn(move || self.run_chain(k as u64)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("chain thread panicked"))
                .collect()
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub command: &'static str,
    pub target: &'static str,
    pub dim: usize,
    pub coordinates: &'static str,
    pub scheme: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adaptive: Option<AdaptiveReport>,
    pub seed: u64,
    pub stream: u64,
    pub t_star: f64,
    pub t_star_jitter: f64,
    #[serde(flatten)]
    pub stats: ChainSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdaptiveReport {
    pub b_init: f64,
    pub red: f64,
    pub reset_factor_each_iter: bool,
    pub b_min: f64,
    pub b_max: f64,
    pub final_b: f64,
    pub final_h: f64,
    pub saturated: bool,
    pub b_changes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MergedSummary {
    pub chains: usize,
    pub acceptance_rate_mean: f64,
    pub mean_abs_delta_h_mean: f64,
    pub ess_mean_mean: f64,
    pub per_chain: Vec<RunSummary>,
}

impl Experiment {
    pub fn summarize_run(&self, run: &ChainRun) -> Result<RunSummary> {
        let stats = summarize(&run.output, self.hmc.burn_in)?;
        let (scheme, b, h) = match &self.mode {
            Mode::Fixed(spec) => (spec.scheme.name(), spec.scheme.b(), Some(spec.h)),
            Mode::Adaptive(_) => ("adaptive_split_family", None, None),
        };
        let adaptive = run.adaptive.as_ref().map(|a| AdaptiveReport {
            b_init: a.b_init(),
            red: a.red(),
            reset_factor_each_iter: a.reset_factor_each_iter(),
            b_min: B_MIN,
            b_max: B_MAX,
            final_b: a.current_b(),
            final_h: a.current_h(),
            saturated: a.saturated(),
            b_changes: run.output.adaptation_trace.len().saturating_sub(1),
        });
        Ok(RunSummary {
            command: if adaptive.is_some() {
                "adaptive"
            } else {
                "sample"
            },
            target: self.target.kind(),
            dim: run.output.dim,
            coordinates: self.target.coordinates(),
            scheme,
            b,
            h,
            adaptive,
            seed: run.output.seed,
            stream: run.output.stream,
            t_star: self.hmc.t_star_base,
            t_star_jitter: self.hmc.t_star_jitter,
            stats,
        })
    }

    /// Writes `chain.csv`, `summary.json`, `coords.csv`, `adaptation.csv`
    /// (adaptive runs) and `intensity.csv` (Cox targets) into `dir`.
    pub fn write_run(&self, dir: &Path, run: &ChainRun, summary: &RunSummary) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        output::write_text(&dir.join("chain.csv"), &output::chain_csv(&run.output))?;
        output::write_json(&dir.join("summary.json"), summary)?;
        let reference = self.target.reference_sd();
        output::write_text(
            &dir.join("coords.csv"),
            &output::coords_csv(&summary.stats, reference.as_deref()),
        )?;
        if run.adaptive.is_some() {
            output::write_text(
                &dir.join("adaptation.csv"),
                &output::adaptation_csv(&run.output),
            )?;
        }
        if let Some(model) = self.target.cox() {
            let map = cox_intensity_map(run.output.post_burn_in(), model)?;
            output::write_text(
                &dir.join("intensity.csv"),
                &output::grid_csv(&map, model.grid_side()),
            )?;
        }
        output::write_text(
            &dir.join("run.log"),
            &format!("wall_time_seconds = {:.6}\n", run.seconds),
        )
    }
}

fn cmd_run(cli: &Cli, config_path: &Path, adaptive: bool) -> std::result::Result<(), Failure> {
    let exp = load_experiment(config_path, adaptive, cli.seed).map_err(config_failure)?;
    let out_dir = cli
        .out
        .clone()
        .or_else(|| exp.config.output.clone())
        .ok_or_else(|| {
            Failure::Config(Error::Config {
                path: "/output".into(),
                message: "no output directory: set `output` or pass --out".into(),
            })
        })?;
    let runs = exp.run_chains(cli.chains).map_err(runtime_failure)?;
    let summaries = runs
        .iter()
        .map(|r| exp.summarize_run(r))
        .collect::<Result<Vec<_>>>()
        .map_err(runtime_failure)?;
    if runs.len() == 1 {
        exp.write_run(&out_dir, &runs[0], &summaries[0])
            .map_err(runtime_failure)?;
    } else {
        for (k, (run, summary)) in runs.iter().zip(&summaries).enumerate() {
            exp.write_run(&out_dir.join(format!("chain_{k}")), run, summary)
                .map_err(runtime_failure)?;
        }
        let n = summaries.len() as f64;
        let merged = MergedSummary {
            chains: summaries.len(),
            acceptance_rate_mean: summaries
                .iter()
                .map(|s| s.stats.acceptance_rate)
                .sum::<f64>()
                / n,
            mean_abs_delta_h_mean: summaries
                .iter()
                .map(|s| s.stats.mean_abs_delta_h)
                .sum::<f64>()
                / n,
            ess_mean_mean: summaries.iter().map(|s| s.stats.ess_mean).sum::<f64>() / n,
            per_chain: summaries.clone(),
        };
        output::write_json(&out_dir.join("summary.json"), &merged).map_err(runtime_failure)?;
    }
    if !cli.quiet {
        for s in &summaries {
            println!(
                "stream {}: AR = {:.4}, mean dH = {:.3e}, mean |dH| = {:.3e}, ESS mean = {:.1} ({:.1}%), eval errors = {}",
                s.stream,
                s.stats.acceptance_rate,
                s.stats.mean_delta_h,
                s.stats.mean_abs_delta_h,
                s.stats.ess_mean,
                100.0 * s.stats.ess_fraction,
                s.stats.eval_errors
            );
        }
        println!("wrote {}", out_dir.display());
    }
    Ok(())
}
