//! Experiment runner: paired trials, accuracy and timing metrics, summaries.
//!
//! Every trial derives one seed from `(master_seed, n, s, trial)`. The signal,
//! the sensing matrices and the noise all come from that seed, so each
//! method in a cell sees the same signal, and the single-matrix baselines use
//! the same first matrix and first measurement vector as the ensemble method.

mod report;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

pub use report::{
    emit_csv, emit_summary, parse_csv, render_summary_table, summary_twin_path, write_csv,
    write_summary_csv, CSV_HEADER,
};

use crate::baselines::{biht, nbiht, omp, sign_quantize};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::recovery::determine_support;
use crate::sensing::{
    build_ensemble, default_measurements, default_rounds, generate_binary_signal, measure,
    measure_round, NoiseMode, RecoveryConfig, SensingEnsemble, Signal,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Rand,
    Omp,
    Biht,
    Nbiht,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Rand, Method::Omp, Method::Biht, Method::Nbiht];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Rand => "rand",
            Method::Omp => "omp",
            Method::Biht => "biht",
            Method::Nbiht => "nbiht",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method {s:?}")))
    }
}

/// Intersection over union; two empty sets score 1.
pub fn jaccard(predicted: &BTreeSet<usize>, truth: &BTreeSet<usize>) -> f64 {
    let inter = predicted.intersection(truth).count();
    let union = predicted.len() + truth.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentGrid {
    pub n_values: Vec<usize>,
    /// Sparsity as a fraction of `n`, in `(0, 1]`.
    pub sparsity_fractions: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub sigma_w: f64,
    pub master_seed: u64,
    pub noise_mode: NoiseMode,
    pub k: Option<usize>,
    pub r0: Option<usize>,
    pub biht_iters: usize,
    pub biht_step: f64,
    /// Worker threads across trials; `None` uses all cores.
    pub workers: Option<usize>,
    /// Largest ensemble (in bytes) held in memory per trial. Bigger
    /// ensembles are regenerated on demand, and regeneration time is
    /// subtracted from the solve time.
    pub max_ensemble_bytes: usize,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        Self {
            n_values: vec![2000, 4000, 8000],
            sparsity_fractions: vec![0.01, 0.02, 0.04, 0.08],
            trials: 50,
            methods: Method::ALL.to_vec(),
            sigma_w: 0.1,
            master_seed: 42,
            noise_mode: NoiseMode::Experiment,
            k: None,
            r0: None,
            biht_iters: 100,
            biht_step: 1.0,
            workers: None,
            max_ensemble_bytes: 512 << 20,
        }
    }
}

/// One `(n, s)` combination of the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub n: usize,
    pub s: usize,
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("no methods selected".into()));
        }
        if self.n_values.is_empty() || self.sparsity_fractions.is_empty() {
            return Err(Error::InvalidParameter("empty n or sparsity grid".into()));
        }
        for &f in &self.sparsity_fractions {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "sparsity fraction {f} outside (0, 1]"
                )));
            }
        }
        if self.biht_iters == 0 || self.biht_step.is_nan() || self.biht_step <= 0.0 {
            return Err(Error::InvalidParameter(
                "BIHT needs at least one iteration and a positive step".into(),
            ));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidParameter("workers must be at least 1".into()));
        }
        for cell in self.cells_unchecked() {
            if cell.n == 0 || cell.s == 0 {
                return Err(Error::InvalidParameter(format!(
                    "cell n = {} rounds to sparsity {}; need s >= 1",
                    cell.n, cell.s
                )));
            }
            self.config(cell, 0).validate()?;
        }
        Ok(())
    }

    fn cells_unchecked(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &n in &self.n_values {
            for &f in &self.sparsity_fractions {
                cells.push(Cell {
                    n,
                    s: (f * n as f64).round() as usize,
                });
            }
        }
        cells
    }

    /// Cells in grid order: `n` outer, sparsity inner.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        self.validate()?;
        Ok(self.cells_unchecked())
    }

    /// Recovery parameters for one trial of `cell`.
    pub fn config(&self, cell: Cell, trial: usize) -> RecoveryConfig {
        RecoveryConfig {
            n: cell.n,
            s: cell.s,
            k: self.k.unwrap_or_else(|| default_measurements(cell.n, cell.s)),
            r0: self.r0.unwrap_or_else(|| default_rounds(cell.n)),
            sigma_w: self.sigma_w,
            noise_mode: self.noise_mode,
            master_seed: trial_seed(self.master_seed, cell, trial),
        }
    }

    /// The ground truth every method sees in `(cell, trial)`.
    pub fn trial_signal(&self, cell: Cell, trial: usize) -> Result<Signal> {
        generate_binary_signal(trial_seed(self.master_seed, cell, trial), cell.n, cell.s)
    }
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Method-independent seed of one trial.
pub fn trial_seed(master_seed: u64, cell: Cell, trial: usize) -> u64 {
    let mut h = mix64(master_seed ^ 0x9E37_79B9_7F4A_7C15);
    for v in [cell.n as u64, cell.s as u64, trial as u64] {
        h = mix64(h.wrapping_add(v).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    }
    h
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    pub method: Method,
    pub n: usize,
    pub s: usize,
    pub k: usize,
    pub r0: usize,
    pub trial: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub wall_time_s: f64,
    /// Signal, matrix and measurement generation time, excluded from
    /// `wall_time_s`.
    pub gen_time_s: f64,
    pub pred_size: usize,
    pub true_size: usize,
    pub inter_size: usize,
}

impl TrialResult {
    pub fn cell(&self) -> Cell {
        Cell { n: self.n, s: self.s }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialFailure {
    pub method: Method,
    pub cell: Cell,
    pub trial: usize,
    pub seed: u64,
    pub message: String,
}

impl fmt::Display for TrialFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} n={} s={} trial={} seed={}: {}",
            self.method, self.cell.n, self.cell.s, self.trial, self.seed, self.message
        )
    }
}

struct Timed {
    support: BTreeSet<usize>,
    solve: Duration,
    generation: Duration,
}

fn run_rand(grid: &ExperimentGrid, cfg: &RecoveryConfig, z: &Signal) -> Result<Timed> {
    let bytes = 2 * cfg.r0 * cfg.k * cfg.n * std::mem::size_of::<f64>();
    let gen_start = Instant::now();
    if bytes <= grid.max_ensemble_bytes {
        let ensemble = build_ensemble(cfg, Execution::Sequential)?;
        let m = measure(&ensemble, z, cfg.sigma_w, cfg.noise_mode, cfg.master_seed, Execution::Sequential)?;
        let generation = gen_start.elapsed();
        let start = Instant::now();
        let support = determine_support(&ensemble, &m, Execution::Sequential)?;
        return Ok(Timed {
            support,
            solve: start.elapsed(),
            generation,
        });
    }
    let ensemble = SensingEnsemble::on_demand(cfg)?;
    let m = measure(&ensemble, z, cfg.sigma_w, cfg.noise_mode, cfg.master_seed, Execution::Sequential)?;
    let generation = gen_start.elapsed();
    let regen_before = ensemble.generation_time();
    let start = Instant::now();
    let support = determine_support(&ensemble, &m, Execution::Sequential)?;
    let total = start.elapsed();
    let regen = ensemble.generation_time() - regen_before;
    Ok(Timed {
        support,
        solve: total.saturating_sub(regen),
        generation: generation + regen,
    })
}

fn run_single_matrix(grid: &ExperimentGrid, method: Method, cfg: &RecoveryConfig, z: &Signal) -> Result<Timed> {
    let gen_start = Instant::now();
    let ensemble = SensingEnsemble::on_demand(cfg)?;
    let a = ensemble.matrix(0)?.into_owned();
    let generation;
    let start;
    let recovered = match method {
        Method::Omp => {
            let b = measure_round(&ensemble, 0, z, cfg.sigma_w, cfg.noise_mode, cfg.master_seed)?;
            generation = gen_start.elapsed();
            start = Instant::now();
            omp(&a, &b, cfg.s, 0.0)?
        }
        Method::Biht | Method::Nbiht => {
            let signs = sign_quantize(&a, z)?;
            generation = gen_start.elapsed();
            start = Instant::now();
            if method == Method::Biht {
                biht(&a, &signs, cfg.s, grid.biht_iters, grid.biht_step)?
            } else {
                nbiht(&a, &signs, cfg.s, grid.biht_iters, grid.biht_step)?
            }
        }
        Method::Rand => unreachable!("rand uses the full ensemble"),
    };
    Ok(Timed {
        support: recovered.support,
        solve: start.elapsed(),
        generation,
    })
}

/// Runs one method on one trial of one cell.
pub fn run_trial(
    grid: &ExperimentGrid,
    method: Method,
    cell: Cell,
    trial: usize,
) -> std::result::Result<TrialResult, TrialFailure> {
    let cfg = grid.config(cell, trial);
    let fail = |e: Error| TrialFailure {
        method,
        cell,
        trial,
        seed: cfg.master_seed,
        message: e.to_string(),
    };
    let sig_start = Instant::now();
    let z = grid.trial_signal(cell, trial).map_err(fail)?;
    let signal_time = sig_start.elapsed();
    let timed = match method {
        Method::Rand => run_rand(grid, &cfg, &z),
        _ => run_single_matrix(grid, method, &cfg, &z),
    }
    .map_err(fail)?;

    let truth = z.support();
    let inter = timed.support.intersection(truth).count();
    Ok(TrialResult {
        method,
        n: cell.n,
        s: cell.s,
        k: cfg.k,
        r0: cfg.r0,
        trial,
        seed: cfg.master_seed,
        accuracy: jaccard(&timed.support, truth),
        wall_time_s: timed.solve.as_secs_f64(),
        gen_time_s: (signal_time + timed.generation).as_secs_f64(),
        pred_size: timed.support.len(),
        true_size: truth.len(),
        inter_size: inter,
    })
}

/// Aggregate of one `(method, n, s)` group.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub n: usize,
    pub s: usize,
    pub trials: usize,
    pub failures: usize,
    pub mean_accuracy: f64,
    /// Unbiased sample variance; zero for a single trial.
    pub var_accuracy: f64,
    pub mean_wall_time_s: f64,
    /// `mean_time(method) / mean_time(rand)` in the same cell; `None` when
    /// rand was not run there.
    pub speedup: Option<f64>,
}

/// Builds summary rows in `(cell, method)` order. `failures` may be empty.
pub fn summarize(results: &[TrialResult], failures: &[TrialFailure]) -> Vec<SummaryRow> {
    let mut keys: Vec<(Cell, Method)> = results
        .iter()
        .map(|r| (r.cell(), r.method))
        .chain(failures.iter().map(|f| (f.cell, f.method)))
        .collect();
    keys.sort();
    keys.dedup();

    let mean_time = |cell: Cell, method: Method| -> Option<f64> {
        let times: Vec<f64> = results
            .iter()
            .filter(|r| r.cell() == cell && r.method == method)
            .map(|r| r.wall_time_s)
            .collect();
        (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64)
    };

    keys.into_iter()
        .map(|(cell, method)| {
            let acc: Vec<f64> = results
                .iter()
                .filter(|r| r.cell() == cell && r.method == method)
                .map(|r| r.accuracy)
                .collect();
            let count = acc.len();
            let mean = if count == 0 { f64::NAN } else { acc.iter().sum::<f64>() / count as f64 };
            let var = if count < 2 {
                0.0
            } else {
                acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (count - 1) as f64
            };
            let time = mean_time(cell, method).unwrap_or(f64::NAN);
            let speedup = match (method, mean_time(cell, Method::Rand)) {
                (Method::Rand, Some(_)) => Some(1.0),
                (_, Some(base)) if base > 0.0 && time.is_finite() => Some(time / base),
                _ => None,
            };
            SummaryRow {
                method,
                n: cell.n,
                s: cell.s,
                trials: count,
                failures: failures.iter().filter(|f| f.cell == cell && f.method == method).count(),
                mean_accuracy: mean,
                var_accuracy: var,
                mean_wall_time_s: time,
                speedup,
            }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct GridOutcome {
    pub results: Vec<TrialResult>,
    pub failures: Vec<TrialFailure>,
    pub summary: Vec<SummaryRow>,
}

impl GridOutcome {
    /// Summary rows where more than 10% of trials failed.
    pub fn excess_failures(&self) -> Vec<&SummaryRow> {
        self.summary
            .iter()
            .filter(|row| 10 * row.failures > row.trials + row.failures)
            .collect()
    }
}

/// Runs every cell × method × trial. Results come back ordered by
/// `(cell, method, trial)` whatever the worker schedule.
pub fn run_grid(grid: &ExperimentGrid) -> Result<GridOutcome> {
    let cells = grid.cells()?;
    let mut methods = grid.methods.clone();
    methods.sort();
    methods.dedup();
    let tasks: Vec<(Cell, Method, usize)> = cells
        .iter()
        .flat_map(|&c| methods.iter().flat_map(move |&m| (0..grid.trials).map(move |t| (c, m, t))))
        .collect();

    let run_all = || {
        Execution::Parallel.map_range(0..tasks.len(), |i| {
            let (cell, method, trial) = tasks[i];
            run_trial(grid, method, cell, trial)
        })
    };
    let outcomes = with_workers(grid.workers, run_all)?;

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(r) => results.push(r),
            Err(f) => failures.push(f),
        }
    }
    let summary = summarize(&results, &failures);
    Ok(GridOutcome {
        results,
        failures,
        summary,
    })
}

#[cfg(feature = "parallel")]
fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
fn with_workers<T: Send>(_workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    Ok(f())
}
