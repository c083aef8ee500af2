//! Seeded replication harness: simulate, fit and select many times, then
//! summarize the penalized estimates.

pub mod kde;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alasso::{select, Penalty, SelectionResult, SolverOptions};
use crate::error::{Error, Result};
use crate::models::{builtin, DiffusionModel, ParamVector};
use crate::qmle::{default_init, fit, FitOptions, FitResult};
use crate::simulate::{simulate, SimConfig};

pub use kde::{kde, Density, Kde};

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub model: String,
    pub truth: Vec<f64>,
    /// Template for every replication; `seed` is replaced per replication.
    pub sim: SimConfig,
    pub reps: usize,
    pub penalty: Penalty,
    pub master_seed: u64,
    /// Worker threads; 0 lets the pool decide.
    pub workers: usize,
    pub fit: FitOptions,
    pub solver: SolverOptions,
}

impl McConfig {
    pub fn new(model: &str, truth: &[f64], sim: SimConfig, reps: usize, master_seed: u64) -> Self {
        Self {
            model: model.to_string(),
            truth: truth.to_vec(),
            sim,
            reps,
            penalty: Penalty::default(),
            master_seed,
            workers: 0,
            fit: FitOptions::default(),
            solver: SolverOptions::default(),
        }
    }

    pub fn validate(&self, model: &dyn DiffusionModel) -> Result<ParamVector> {
        if self.reps < 1 {
            return Err(Error::Argument("reps must be at least 1".into()));
        }
        self.sim.validate()?;
        ParamVector::for_model(model, &self.truth)
    }
}

/// Seed of replication `rep`. The map `rep -> seed` is a bijection for a
/// fixed master seed.
pub fn replication_seed(master: u64, rep: usize) -> u64 {
    const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut z = master.wrapping_add((rep as u64).wrapping_add(1).wrapping_mul(GOLDEN));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub rep: usize,
    pub seed: u64,
    pub fit: FitResult,
    pub selection: SelectionResult,
}

/// One simulate → fit → select pass with the derived seed.
pub fn run_replication(
    model: &dyn DiffusionModel,
    truth: &ParamVector,
    cfg: &McConfig,
    rep: usize,
) -> Result<Replication> {
    let seed = replication_seed(cfg.master_seed, rep);
    let sim = SimConfig {
        seed,
        ..cfg.sim.clone()
    };
    let data = simulate(model, truth, &sim)?;
    let init = default_init(model, &data)?;
    let opts = FitOptions {
        seed,
        ..cfg.fit.clone()
    };
    let fitted = fit(model, &data, &init, &opts)?;
    let selection = select(model, &fitted, &cfg.penalty, &cfg.solver)?;
    Ok(Replication {
        rep,
        seed,
        fit: fitted,
        selection,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub fraction_zero: f64,
    /// Density of the nonzero estimates.
    pub density: Density,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub rep: usize,
    pub theta_hat: Vec<f64>,
    /// Whether the penalized solver met its tolerance.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McSummary {
    pub reps: usize,
    pub params: Vec<ParamSummary>,
    /// Replications that failed, with the reason.
    pub failures: Vec<(usize, String)>,
    /// Successful replications in replication order.
    pub rows: Vec<EstimateRow>,
    pub records: Vec<Replication>,
}

impl McSummary {
    pub fn failure_count(&self) -> usize {
        self.failures.len()
    }

    /// Estimates of coordinate `j` across successful replications.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.theta_hat[j]).collect()
    }
}

fn summarize(column: &[f64]) -> ParamSummary {
    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (mean, std) = kde::mean_std(column);
    let zeros = column.iter().filter(|x| x.to_bits() == 0.0f64.to_bits()).count();
    ParamSummary {
        mean,
        median: kde::quantile(&sorted, 0.5),
        std,
        fraction_zero: zeros as f64 / column.len() as f64,
        density: kde::nonzero_density(column),
    }
}

/// Runs `cfg.reps` replications on a pool of `cfg.workers` threads.
///
/// Results are keyed by replication index, so the output does not depend on
/// the worker count. Failed replications are dropped from the summaries and
/// listed in `failures`.
pub fn run_mc(cfg: &McConfig) -> Result<McSummary> {
    let model = builtin(&cfg.model)?;
    let truth = cfg.validate(model.as_ref())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Argument(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Result<Replication>> = pool.install(|| {
        (0..cfg.reps)
            .into_par_iter()
            .map(|rep| run_replication(model.as_ref(), &truth, cfg, rep))
            .collect()
    });

    let mut failures = Vec::new();
    let mut records = Vec::new();
    for (rep, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => failures.push((rep, e.to_string())),
        }
    }
    if records.is_empty() {
        return Err(Error::AllFailed { reps: cfg.reps });
    }
    let rows: Vec<EstimateRow> = records
        .iter()
        .map(|r| EstimateRow {
            rep: r.rep,
            theta_hat: r.selection.theta_hat.as_slice().to_vec(),
            converged: r.selection.converged,
        })
        .collect();
    let params = (0..truth.len())
        .map(|j| summarize(&rows.iter().map(|r| r.theta_hat[j]).collect::<Vec<_>>()))
        .collect();
    Ok(McSummary {
        reps: cfg.reps,
        params,
        failures,
        rows,
        records,
    })
}
