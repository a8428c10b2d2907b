//! Repeated seeded runs and their per-iteration aggregates.

use gpcr_core::acquisition::AcquisitionConfig;
use gpcr_core::benchmarks::{
    inference_regret, random_search_baseline, true_feasible_min, BenchmarkOracle, SyntheticProblem,
};
use gpcr_core::bo::{run, BoState, CaseConfig, Outcome};
use rayon::prelude::*;

use crate::config::Method;
use crate::error::CliResult;

/// Grid density used for the brute-force reference minimum.
pub const REFERENCE_GRID: usize = 1001;

/// The quantities of one run that the aggregates are built from.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    /// Oracle value at the best guess after each iteration.
    pub best_values: Vec<Option<f64>>,
    pub regret: Vec<Option<f64>>,
    /// Objective threshold per iteration (empty for random search).
    pub thresholds: Vec<f64>,
    pub constraint_thresholds: Vec<Vec<f64>>,
    pub final_best_guess: Option<Vec<f64>>,
    /// Whether each evaluation of the objective was stable, in order.
    pub objective_stable: Vec<bool>,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn from_state(seed: u64, state: &BoState, true_min: f64) -> Self {
        Self {
            seed,
            best_values: state.best_value_trace.clone(),
            regret: inference_regret(&state.best_value_trace, true_min),
            thresholds: state.threshold_trace.clone(),
            constraint_thresholds: state.constraint_threshold_trace.clone(),
            final_best_guess: state.best_guess_trace.last().cloned(),
            objective_stable: state
                .evaluations
                .iter()
                .map(|e| !matches!(e.observation.objective, Outcome::Fail))
                .collect(),
            error: state.error.clone(),
        }
    }

    pub fn final_best_value(&self) -> Option<f64> {
        self.best_values.last().copied().flatten()
    }

    pub fn final_regret(&self) -> Option<f64> {
        self.regret.last().copied().flatten()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsReport {
    pub method: Method,
    pub iterations: usize,
    pub true_min: f64,
    /// Runs that completed; failed runs are only counted.
    pub runs: Vec<RunRecord>,
    pub failures: Vec<(u64, String)>,
}

/// Mean and sample standard deviation; `None` for no values.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Some((mean, var.sqrt()))
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

impl StatsReport {
    /// Defined regret values at 0-based iteration `i` across runs.
    pub fn regret_at(&self, i: usize) -> Vec<f64> {
        self.runs
            .iter()
            .filter_map(|r| r.regret.get(i).copied().flatten())
            .collect()
    }

    pub fn threshold_at(&self, i: usize) -> Vec<f64> {
        self.runs.iter().filter_map(|r| r.thresholds.get(i).copied()).collect()
    }

    pub fn constraint_threshold_at(&self, i: usize, j: usize) -> Vec<f64> {
        self.runs
            .iter()
            .filter_map(|r| r.constraint_thresholds.get(i).and_then(|c| c.get(j)).copied())
            .collect()
    }

    pub fn n_constraint_thresholds(&self) -> usize {
        self.runs
            .iter()
            .filter_map(|r| r.constraint_thresholds.first().map(Vec::len))
            .max()
            .unwrap_or(0)
    }

    pub fn final_values(&self) -> Vec<Option<f64>> {
        self.runs.iter().map(RunRecord::final_best_value).collect()
    }

    pub fn final_regrets(&self) -> Vec<Option<f64>> {
        self.runs.iter().map(RunRecord::final_regret).collect()
    }
}

/// One optimization run on a benchmark.
pub fn bench_run(
    problem: &SyntheticProblem,
    cfg: &CaseConfig,
    acq: AcquisitionConfig,
    iterations: usize,
    seed: u64,
) -> CliResult<BoState> {
    let mut oracle = BenchmarkOracle::new(problem.clone(), seed);
    Ok(run(cfg.clone(), &mut oracle, iterations, acq, seed)?)
}

/// Random search aligned with the optimizer: entry `i` follows `i + 2` evaluations.
pub fn random_run(problem: &SyntheticProblem, iterations: usize, seed: u64, true_min: f64) -> CliResult<RunRecord> {
    let trace = random_search_baseline(problem, iterations + 1, seed)?;
    let best_values = trace.best_values[1..].to_vec();
    Ok(RunRecord {
        seed,
        regret: inference_regret(&best_values, true_min),
        best_values,
        thresholds: Vec::new(),
        constraint_thresholds: Vec::new(),
        final_best_guess: trace.best_guess.last().cloned().flatten(),
        objective_stable: trace
            .evaluations
            .iter()
            .map(|x| problem.instability_threshold.is_none_or(|c| (problem.objective)(x) <= c))
            .collect(),
        error: None,
    })
}

/// Runs `repeats` independent runs with seeds `seed, seed + 1, …`, in parallel.
pub fn stats_runner(
    problem: &SyntheticProblem,
    cfg: &CaseConfig,
    acq: AcquisitionConfig,
    method: Method,
    iterations: usize,
    repeats: usize,
    seed: u64,
) -> CliResult<StatsReport> {
    let (true_min, _) = true_feasible_min(problem, REFERENCE_GRID)?;
    let results: Vec<(u64, CliResult<RunRecord>)> = (0..repeats as u64)
        .into_par_iter()
        .map(|i| {
            let s = seed.wrapping_add(i);
            let r = match method {
                Method::Mesco => bench_run(problem, cfg, acq, iterations, s)
                    .map(|st| RunRecord::from_state(s, &st, true_min)),
                Method::Random => random_run(problem, iterations, s, true_min),
            };
            (s, r)
        })
        .collect();
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (s, r) in results {
        match r {
            Ok(rec) => match &rec.error {
                Some(e) => failures.push((s, e.clone())),
                None => runs.push(rec),
            },
            Err(e) => failures.push((s, e.to_string())),
        }
    }
    Ok(StatsReport {
        method,
        iterations,
        true_min,
        runs,
        failures,
    })
}
