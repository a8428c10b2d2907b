//! CSV and JSON artifacts of single runs and statistics.

use std::io::Write;
use std::path::Path;

use gpcr_core::acquisition::AcquisitionMode;
use gpcr_core::bo::{BoState, CaseConfig, Outcome};
use serde::{Deserialize, Serialize};

use crate::error::CliResult;
use crate::stats::{mean_std, median, StatsReport};

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

fn outcome(o: &Outcome, fail: &str) -> String {
    match o {
        Outcome::Value(v) => fmt(*v),
        Outcome::Pass => "satisfied".into(),
        Outcome::Fail => fail.into(),
    }
}

/// Column names of `run.csv` for a configuration.
pub fn run_header(cfg: &CaseConfig) -> Vec<String> {
    let d = cfg.dim();
    let mut h = vec!["iter".to_string()];
    h.extend((1..=d).map(|i| format!("x{i}")));
    h.push("y".into());
    h.extend((1..=cfg.n_constraints()).map(|j| format!("g{j}")));
    h.push("c_hat".into());
    h.extend((1..=cfg.level_set.len()).map(|j| format!("c_hat_{j}")));
    h.extend((1..=d).map(|i| format!("x_bg{i}")));
    h.push("y_bg".into());
    h.push("regret".into());
    h.push("mode".into());
    h
}

/// One row per completed acquisition iteration.
pub fn write_run_csv<W: Write>(w: W, cfg: &CaseConfig, state: &BoState, true_min: Option<f64>) -> CliResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(run_header(cfg))?;
    for (i, c) in state.threshold_trace.iter().enumerate() {
        let e = &state.evaluations[i + 1];
        let mut row = vec![(i + 1).to_string()];
        row.extend(e.x.iter().map(|&v| fmt(v)));
        row.push(outcome(&e.observation.objective, "unstable"));
        row.extend(e.observation.constraints.iter().map(|o| outcome(o, "violated")));
        row.push(fmt(*c));
        row.extend(state.constraint_threshold_trace[i].iter().map(|&v| fmt(v)));
        row.extend(state.best_guess_trace[i].iter().map(|&v| fmt(v)));
        let y_bg = state.best_value_trace[i];
        row.push(fmt_opt(y_bg));
        row.push(fmt_opt(y_bg.zip(true_min).map(|(y, m)| y - m)));
        row.push(
            match state.mode_trace[i] {
                AcquisitionMode::Weighted => "weighted",
                AcquisitionMode::FeasibilitySearch => "feasibility",
            }
            .into(),
        );
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetCounts {
    pub stable: usize,
    pub unstable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub problem: String,
    pub case: u8,
    pub seed: u64,
    pub iterations: usize,
    pub initial_x: Option<Vec<f64>>,
    pub best_guess: Option<Vec<f64>>,
    pub best_value: Option<f64>,
    pub true_min: Option<f64>,
    pub regret: Option<f64>,
    /// Objective threshold; absent for a plain GP objective.
    pub c_hat: Option<f64>,
    pub c_hat_constraints: Vec<f64>,
    pub objective: DatasetCounts,
    pub constraints: Vec<DatasetCounts>,
    pub notes: Vec<String>,
    pub error: Option<String>,
}

impl RunSummary {
    pub fn new(problem: &str, cfg: &CaseConfig, seed: u64, state: &BoState, true_min: Option<f64>) -> Self {
        let best_value = state.best_value_trace.last().copied().flatten();
        Self {
            problem: problem.to_string(),
            case: cfg.case.index(),
            seed,
            iterations: state.iteration,
            initial_x: state.evaluations.first().map(|e| e.x.clone()),
            best_guess: state.best_guess_trace.last().cloned(),
            best_value,
            true_min,
            regret: best_value.zip(true_min).map(|(y, m)| y - m),
            c_hat: state.threshold_trace.last().copied().filter(|c| c.is_finite()),
            c_hat_constraints: state.constraint_threshold_trace.last().cloned().unwrap_or_default(),
            objective: DatasetCounts {
                stable: state.objective.n_stable(),
                unstable: state.objective.n_unstable(),
            },
            constraints: state
                .constraints
                .iter()
                .map(|d| DatasetCounts {
                    stable: d.n_stable(),
                    unstable: d.n_unstable(),
                })
                .collect(),
            notes: state.notes.clone(),
            error: state.error.clone(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    fn of(values: &[f64]) -> Option<Self> {
        mean_std(values).map(|(mean, std)| Self { mean, std })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub method: String,
    pub iterations: usize,
    pub runs: usize,
    pub failures: Vec<String>,
    pub true_min: f64,
    pub final_regret_mean: Option<f64>,
    pub final_regret_median: Option<f64>,
    pub final_best_value: Option<MeanStd>,
    /// Runs whose final best guess could not be evaluated (infeasible).
    pub undefined_final_values: usize,
    pub final_c_hat: Option<MeanStd>,
    pub final_c_hat_constraints: Vec<Option<MeanStd>>,
}

impl StatsSummary {
    pub fn new(r: &StatsReport) -> Self {
        let last = r.iterations.saturating_sub(1);
        let finals: Vec<f64> = r.final_values().into_iter().flatten().collect();
        let regrets = r.regret_at(last);
        let thresholds: Vec<f64> = r.threshold_at(last).into_iter().filter(|c| c.is_finite()).collect();
        Self {
            method: match r.method {
                crate::config::Method::Mesco => "mesco".into(),
                crate::config::Method::Random => "random".into(),
            },
            iterations: r.iterations,
            runs: r.runs.len(),
            failures: r.failures.iter().map(|(s, e)| format!("seed {s}: {e}")).collect(),
            true_min: r.true_min,
            final_regret_mean: mean_std(&regrets).map(|m| m.0),
            final_regret_median: median(&regrets),
            final_best_value: MeanStd::of(&finals),
            undefined_final_values: r.runs.len() - finals.len(),
            final_c_hat: MeanStd::of(&thresholds),
            final_c_hat_constraints: (0..r.n_constraint_thresholds())
                .map(|j| MeanStd::of(&r.constraint_threshold_at(last, j)))
                .collect(),
        }
    }
}

/// Writes `regret_mean.csv`, `regret_median.csv`, `thresholds.csv` and `summary.json`.
pub fn write_stats(dir: &Path, r: &StatsReport) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    let mut mean = csv::Writer::from_path(dir.join("regret_mean.csv"))?;
    let mut med = csv::Writer::from_path(dir.join("regret_median.csv"))?;
    mean.write_record(["iter", "mean", "std", "n"])?;
    med.write_record(["iter", "median", "n"])?;
    for i in 0..r.iterations {
        let v = r.regret_at(i);
        let ms = mean_std(&v);
        let n = v.len().to_string();
        let it = (i + 1).to_string();
        mean.write_record([
            it.clone(),
            fmt_opt(ms.map(|m| m.0)),
            fmt_opt(ms.map(|m| m.1)),
            n.clone(),
        ])?;
        med.write_record([it, fmt_opt(median(&v)), n])?;
    }
    mean.flush()?;
    med.flush()?;

    let m = r.n_constraint_thresholds();
    let mut th = csv::Writer::from_path(dir.join("thresholds.csv"))?;
    let mut header = vec!["iter".to_string(), "c_hat_mean".into(), "c_hat_std".into()];
    for j in 1..=m {
        header.push(format!("c_hat_{j}_mean"));
        header.push(format!("c_hat_{j}_std"));
    }
    th.write_record(&header)?;
    for i in 0..r.iterations {
        let mut row = vec![(i + 1).to_string()];
        let c: Vec<f64> = r.threshold_at(i).into_iter().filter(|c| c.is_finite()).collect();
        let ms = mean_std(&c);
        row.push(fmt_opt(ms.map(|m| m.0)));
        row.push(fmt_opt(ms.map(|m| m.1)));
        for j in 0..m {
            let ms = mean_std(&r.constraint_threshold_at(i, j));
            row.push(fmt_opt(ms.map(|m| m.0)));
            row.push(fmt_opt(ms.map(|m| m.1)));
        }
        th.write_record(&row)?;
    }
    th.flush()?;
    write_json(&dir.join("summary.json"), &StatsSummary::new(r))
}
