//! `randcs`: benchmark runner and fixture-driven recovery.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use randcs_core::harness::{
    emit_csv, emit_summary, render_summary_table, run_grid, summary_twin_path, ExperimentGrid,
    Method,
};
use randcs_core::recovery::{determine_support, recover_basic, recover_suppressed};
use randcs_core::sensing::{
    build_ensemble, generate_binary_signal, load_ensemble, load_measurements, measure, save_ensemble,
    save_measurements, save_vector, FixtureHeader, NoiseMode, RecoveryConfig,
};
use randcs_core::Execution;

const EXIT_USAGE: u8 = 1;
const EXIT_EXCESS_FAILURES: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "randcs", version, about = "Sparse support recovery from random Gaussian measurement ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the accuracy/runtime comparison over a grid of (n, sparsity) cells.
    Bench(BenchArgs),
    /// Recover from an ensemble and measurement fixture.
    Recover(RecoverArgs),
    /// Write a seeded ensemble/measurement fixture pair.
    Fixture(FixtureArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Theory,
    Experiment,
}

impl From<Mode> for NoiseMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Theory => NoiseMode::Theory,
            Mode::Experiment => NoiseMode::Experiment,
        }
    }
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long = "n", value_delimiter = ',', default_value = "2000,4000,8000")]
    n: Vec<usize>,
    /// Sparsity as a percentage of n.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    sparsity_pct: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, value_delimiter = ',', default_value = "rand,omp,biht,nbiht")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 0.1)]
    sigma_w: f64,
    #[arg(long, value_enum, default_value = "experiment")]
    noise_mode: Mode,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
    #[arg(long, default_value = "summary.txt")]
    summary: PathBuf,
    /// Measurements per matrix; default ⌈2 s ln n⌉.
    #[arg(long)]
    k: Option<usize>,
    /// Rounds per half of the ensemble; default ⌈ln n⌉.
    #[arg(long)]
    r0: Option<usize>,
    #[arg(long, default_value_t = 100)]
    biht_iters: usize,
    #[arg(long, default_value_t = 1.0)]
    biht_step: f64,
    /// Worker threads across trials; default all cores.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Algorithm {
    Basic,
    Suppressed,
    Support,
}

#[derive(Args, Debug)]
struct RecoverArgs {
    #[arg(long)]
    ensemble: PathBuf,
    #[arg(long)]
    measurements: PathBuf,
    #[arg(long, value_enum)]
    algorithm: Algorithm,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FixtureArgs {
    #[arg(long = "n")]
    n: usize,
    #[arg(long)]
    s: usize,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    r0: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    sigma_w: f64,
    #[arg(long, value_enum, default_value = "experiment")]
    noise_mode: Mode,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    ensemble: PathBuf,
    #[arg(long)]
    measurements: PathBuf,
    /// Also write the ground-truth signal.
    #[arg(long)]
    signal: Option<PathBuf>,
}

fn bench(args: BenchArgs) -> Result<ExitCode> {
    let methods = args
        .methods
        .iter()
        .map(|m| m.parse::<Method>())
        .collect::<randcs_core::Result<Vec<_>>>()?;
    let grid = ExperimentGrid {
        n_values: args.n,
        sparsity_fractions: args.sparsity_pct.iter().map(|p| p / 100.0).collect(),
        trials: args.trials,
        methods,
        sigma_w: args.sigma_w,
        master_seed: args.seed,
        noise_mode: args.noise_mode.into(),
        k: args.k,
        r0: args.r0,
        biht_iters: args.biht_iters,
        biht_step: args.biht_step,
        workers: args.workers,
        ..ExperimentGrid::default()
    };
    grid.validate()?;
    if args.out == args.summary || args.out == summary_twin_path(&args.summary) {
        anyhow::bail!("--out and --summary must name different files");
    }
    let outcome = run_grid(&grid)?;
    emit_csv(&outcome.results, &args.out)?;
    let twin = emit_summary(&outcome.summary, &args.summary)?;
    print!("{}", render_summary_table(&outcome.summary));
    eprintln!(
        "wrote {} trial rows to {}, summary to {} and {}",
        outcome.results.len(),
        args.out.display(),
        args.summary.display(),
        twin.display()
    );
    for f in &outcome.failures {
        eprintln!("trial failed: {f}");
    }
    let excess = outcome.excess_failures();
    if !excess.is_empty() {
        for row in excess {
            eprintln!(
                "error: {} n={} s={} failed {} of {} trials",
                row.method,
                row.n,
                row.s,
                row.failures,
                row.failures + row.trials
            );
        }
        return Ok(ExitCode::from(EXIT_EXCESS_FAILURES));
    }
    Ok(ExitCode::SUCCESS)
}

fn recover(args: RecoverArgs) -> Result<ExitCode> {
    let ensemble = load_ensemble(&args.ensemble)?;
    let (header, measurements) = load_measurements(&args.measurements)?;
    if header.n as usize != ensemble.n() || header.k as usize != ensemble.k() || header.r0 as usize != ensemble.r0() {
        bail!(
            "measurement header (n={}, k={}, r0={}) does not match ensemble (n={}, k={}, r0={})",
            header.n,
            header.k,
            header.r0,
            ensemble.n(),
            ensemble.k(),
            ensemble.r0()
        );
    }
    let exec = Execution::default();
    let mut text = String::new();
    match args.algorithm {
        Algorithm::Basic | Algorithm::Suppressed => {
            let recovered = match args.algorithm {
                Algorithm::Basic => recover_basic(&ensemble, &measurements, ensemble.r0(), exec)?,
                _ => recover_suppressed(&ensemble, &measurements, exec)?,
            };
            text.push_str("index,value\n");
            for (i, v) in recovered.values.iter().enumerate() {
                text.push_str(&format!("{i},{v:.16e}\n"));
            }
        }
        Algorithm::Support => {
            for i in determine_support(&ensemble, &measurements, exec)? {
                text.push_str(&format!("{i}\n"));
            }
        }
    }
    match args.out {
        Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn fixture(args: FixtureArgs) -> Result<ExitCode> {
    let mut cfg = RecoveryConfig::new(args.n, args.s)
        .with_noise(args.sigma_w, args.noise_mode.into())
        .with_seed(args.seed);
    if let Some(k) = args.k {
        cfg = cfg.with_k(k);
    }
    if let Some(r0) = args.r0 {
        cfg = cfg.with_r0(r0);
    }
    cfg.validate()?;
    let z = generate_binary_signal(args.seed, args.n, args.s)?;
    let exec = Execution::default();
    let ensemble = build_ensemble(&cfg, exec)?;
    let m = measure(&ensemble, &z, cfg.sigma_w, cfg.noise_mode, cfg.master_seed, exec)?;
    save_ensemble(&ensemble, &args.ensemble)?;
    save_measurements(&m, cfg.n, cfg.master_seed, &args.measurements)?;
    if let Some(path) = &args.signal {
        let header = FixtureHeader {
            n: cfg.n as u64,
            k: cfg.k as u64,
            r0: cfg.r0 as u64,
            seed: cfg.master_seed,
        };
        save_vector(z.values(), header, path)?;
    }
    let support: Vec<String> = z.support().iter().map(usize::to_string).collect();
    println!("{}", support.join(","));
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Bench(args) => bench(args),
        Command::Recover(args) => recover(args),
        Command::Fixture(args) => fixture(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
