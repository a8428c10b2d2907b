//! Synthetic problems on the unit square, their ground truth, and a
//! random-search baseline.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::acquisition::uniform_point;
use crate::bo::{
    rng_stream, streams, Case, CaseConfig, CoupledObservation, FunctionSpec, ObjectiveModel,
    Oracle, Outcome,
};
use crate::ep::EpConfig;
use crate::error::{check_dim, Error, Result};
use crate::gpcr::{HybridDataset, ThresholdPrior};
use crate::kernels::{KernelSpec, NoiseSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    /// Reports its value when satisfied, only a label when violated.
    LevelSet,
    /// Reports satisfied/violated only.
    Binary,
}

#[derive(Debug, Clone, Copy)]
pub struct SyntheticConstraint {
    /// `None` where the constraint is undefined, which counts as violated.
    pub g: fn(&[f64]) -> Option<f64>,
    pub threshold: f64,
    pub kind: ConstraintKind,
    /// Kernel settings used when the constraint is modeled.
    pub variance: f64,
    pub lengthscale: f64,
    pub prior_std: f64,
}

impl SyntheticConstraint {
    pub fn satisfied(&self, x: &[f64]) -> bool {
        (self.g)(x).is_some_and(|g| g <= self.threshold)
    }
}

/// A benchmark on `[0, 1]^dim` with known ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticProblem {
    pub name: &'static str,
    pub dim: usize,
    pub objective: fn(&[f64]) -> f64,
    /// Objective values above this are reported as unstable.
    pub instability_threshold: Option<f64>,
    pub constraints: Vec<SyntheticConstraint>,
    pub noise_std: f64,
    /// Objective kernel settings.
    pub variance: f64,
    pub lengthscale: f64,
    pub prior_std: f64,
}

pub fn gardner(x: &[f64]) -> f64 {
    (10.0 * x[0]).cos() * (5.0 * x[1]).cos() + (10.0 * x[0]).sin() + 2.0
}

pub fn branin(x: &[f64]) -> f64 {
    let a = 15.0 * x[0] - 5.0;
    let b = 15.0 * x[1];
    let t = b - 5.1 / (4.0 * PI * PI) * a * a + 5.0 / PI * a - 6.0;
    t * t + 10.0 * (1.0 - 1.0 / (8.0 * PI)) * a.cos() + 10.0
}

/// `−√(2/9 − |x − ½|²)`, undefined outside the circle.
pub fn circle(x: &[f64]) -> Option<f64> {
    let r = 2.0 / 9.0 - (x[0] - 0.5) * (x[0] - 0.5) - (x[1] - 0.5) * (x[1] - 0.5);
    if r >= 0.0 {
        Some(-r.sqrt())
    } else {
        None
    }
}

const CIRCLE: SyntheticConstraint = SyntheticConstraint {
    g: circle,
    threshold: 0.0,
    kind: ConstraintKind::LevelSet,
    variance: 0.005,
    lengthscale: 0.4,
    prior_std: 2.0,
};

/// Self-constrained Gardner function, unstable above 1.5.
pub fn gardner2d() -> SyntheticProblem {
    SyntheticProblem {
        name: "gardner",
        dim: 2,
        objective: gardner,
        instability_threshold: Some(1.5),
        constraints: Vec::new(),
        noise_std: 0.01,
        variance: 2.0,
        lengthscale: 0.3,
        prior_std: 5.0,
    }
}

/// Branin restricted to a centered circle (level-set constraint).
pub fn branin_circle() -> SyntheticProblem {
    SyntheticProblem {
        name: "branin-circle",
        dim: 2,
        objective: branin,
        instability_threshold: None,
        constraints: vec![CIRCLE],
        noise_std: 0.01,
        variance: 2500.0,
        lengthscale: 0.25,
        prior_std: 100.0,
    }
}

/// Branin with the circle reported as a binary label.
pub fn branin_circle_binary() -> SyntheticProblem {
    let mut p = branin_circle();
    p.name = "branin-binary";
    p.constraints[0].kind = ConstraintKind::Binary;
    p.prior_std = 20.0;
    p
}

/// Branin self-constrained at 20 plus the circle level-set constraint.
pub fn branin_mixed() -> SyntheticProblem {
    let mut p = branin_circle();
    p.name = "branin-mixed";
    p.instability_threshold = Some(20.0);
    p.prior_std = 20.0;
    p
}

pub fn problem_by_name(name: &str) -> Option<SyntheticProblem> {
    match name {
        "gardner" => Some(gardner2d()),
        "branin-circle" => Some(branin_circle()),
        "branin-binary" => Some(branin_circle_binary()),
        "branin-mixed" => Some(branin_mixed()),
        _ => None,
    }
}

/// The fixed one-dimensional hybrid dataset with its kernel and noise.
pub fn example_1d() -> (HybridDataset, KernelSpec, NoiseSpec) {
    let d = HybridDataset::from_parts(
        1,
        vec![vec![0.1], vec![0.3], vec![0.5]],
        vec![0.5, 2.0, 1.0],
        vec![vec![0.7], vec![0.9]],
    )
    .expect("valid example data");
    (
        d,
        KernelSpec::isometric(0.5, 0.2, 1).expect("valid kernel"),
        NoiseSpec::new(0.02).expect("valid noise"),
    )
}

impl SyntheticProblem {
    /// Stable and every constraint satisfied, before noise.
    pub fn feasible(&self, x: &[f64]) -> bool {
        let stable = self
            .instability_threshold
            .is_none_or(|c| (self.objective)(x) <= c);
        stable && self.constraints.iter().all(|c| c.satisfied(x))
    }

    /// The modeling case this problem's structure corresponds to.
    pub fn natural_case(&self) -> Case {
        let has_level = self.constraints.iter().any(|c| c.kind == ConstraintKind::LevelSet);
        let has_binary = self.constraints.iter().any(|c| c.kind == ConstraintKind::Binary);
        match (self.instability_threshold.is_some(), has_level, has_binary) {
            (_, false, true) => Case::BinaryOnly,
            (false, true, false) => Case::LevelSetOnly,
            (true, true, _) | (false, true, true) => Case::Mixed,
            _ => Case::SelfConstrained,
        }
    }

    /// Model configuration with this problem's fixed hyperparameters.
    pub fn case_config(&self) -> Result<CaseConfig> {
        let case = self.natural_case();
        let noise = NoiseSpec::new(self.noise_std)?;
        let objective = FunctionSpec {
            kernel: KernelSpec::isometric(self.variance, self.lengthscale, self.dim)?,
            noise,
            prior: ThresholdPrior::new(0.0, self.prior_std)?,
        };
        let mut level_set = Vec::new();
        let mut n_binary = 0;
        for c in &self.constraints {
            match c.kind {
                ConstraintKind::LevelSet => level_set.push(FunctionSpec {
                    kernel: KernelSpec::isometric(c.variance, c.lengthscale, self.dim)?,
                    noise,
                    prior: ThresholdPrior::new(0.0, c.prior_std)?,
                }),
                ConstraintKind::Binary => n_binary += 1,
            }
        }
        let cfg = CaseConfig {
            case,
            objective_model: if case == Case::LevelSetOnly {
                ObjectiveModel::StandardGp
            } else {
                ObjectiveModel::Gpcr
            },
            objective,
            level_set,
            n_binary,
            evaluate_best_guess: true,
            ep: EpConfig::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Noisy coupled observation. Level-set constraints come before binary ones.
    pub fn observe<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<CoupledObservation> {
        check_dim(self.dim, x.len())?;
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument("query outside the unit cube"));
        }
        let f = (self.objective)(x);
        let objective = match self.instability_threshold {
            Some(c) if f > c => Outcome::Fail,
            _ => Outcome::Value(f + self.noise_std * rng.sample::<f64, _>(StandardNormal)),
        };
        let mut constraints = Vec::with_capacity(self.constraints.len());
        let ordered = self
            .constraints
            .iter()
            .filter(|c| c.kind == ConstraintKind::LevelSet)
            .chain(self.constraints.iter().filter(|c| c.kind == ConstraintKind::Binary));
        for c in ordered {
            let sat = c.satisfied(x);
            constraints.push(match (c.kind, sat) {
                (_, false) => Outcome::Fail,
                (ConstraintKind::Binary, true) => Outcome::Pass,
                (ConstraintKind::LevelSet, true) => {
                    let g = (c.g)(x).unwrap_or(f64::NAN);
                    Outcome::Value(g + self.noise_std * rng.sample::<f64, _>(StandardNormal))
                }
            });
        }
        Ok(CoupledObservation {
            objective,
            constraints,
        })
    }

    /// One noisy objective value at `x`, or `None` if `x` is infeasible.
    pub fn evaluate_feasible<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Option<f64> {
        if !self.feasible(x) {
            return None;
        }
        Some((self.objective)(x) + self.noise_std * rng.sample::<f64, _>(StandardNormal))
    }
}

/// In-process oracle that adds noise from its own stream.
#[derive(Debug, Clone)]
pub struct BenchmarkOracle {
    pub problem: SyntheticProblem,
    rng: ChaCha8Rng,
}

impl BenchmarkOracle {
    pub fn new(problem: SyntheticProblem, seed: u64) -> Self {
        Self {
            problem,
            rng: rng_stream(seed, streams::NOISE),
        }
    }
}

impl Oracle for BenchmarkOracle {
    fn conduct_experiment(&mut self, x: &[f64]) -> Result<CoupledObservation> {
        self.problem.observe(x, &mut self.rng)
    }

    fn evaluate_best_guess(&mut self, x: &[f64]) -> Option<f64> {
        self.problem.evaluate_feasible(x, &mut self.rng)
    }
}

/// Brute-force feasible minimum over a `grid_density^dim` grid, refined by compass search.
pub fn true_feasible_min(problem: &SyntheticProblem, grid_density: usize) -> Result<(f64, Vec<f64>)> {
    let dim = problem.dim;
    if dim == 0 || dim > 3 {
        return Err(Error::Unsupported("brute-force minimum needs dimension 1 to 3"));
    }
    if grid_density < 2 {
        return Err(Error::InvalidArgument("grid density must be at least 2"));
    }
    let total = grid_density.checked_pow(dim as u32).unwrap_or(usize::MAX);
    if total > 1_000_000_000 {
        return Err(Error::Unsupported("grid too large"));
    }
    let step = 1.0 / (grid_density - 1) as f64;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut x = vec![0.0; dim];
    for idx in 0..total {
        let mut r = idx;
        for v in x.iter_mut() {
            *v = (r % grid_density) as f64 * step;
            r /= grid_density;
        }
        if !problem.feasible(&x) {
            continue;
        }
        let f = (problem.objective)(&x);
        if best.as_ref().is_none_or(|(b, _)| f < *b) {
            best = Some((f, x.clone()));
        }
    }
    let (mut fx, mut x) = best.ok_or(Error::InvalidArgument("no feasible grid point"))?;
    let mut h = step;
    while h > 1e-12 {
        let mut moved = false;
        for d in 0..dim {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                y[d] = (y[d] + sign * h).clamp(0.0, 1.0);
                if problem.feasible(&y) {
                    let fy = (problem.objective)(&y);
                    if fy < fx {
                        fx = fy;
                        x = y;
                        moved = true;
                    }
                }
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    Ok((fx, x))
}

/// `R_i = y(x_bg,i) − f_min`; undefined entries stay undefined.
pub fn inference_regret(best_values: &[Option<f64>], true_min: f64) -> Vec<Option<f64>> {
    best_values.iter().map(|v| v.map(|y| y - true_min)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomSearchTrace {
    pub evaluations: Vec<Vec<f64>>,
    /// Best feasible observed point after each evaluation, `None` until one exists.
    pub best_guess: Vec<Option<Vec<f64>>>,
    /// A fresh noisy value at each best guess.
    pub best_values: Vec<Option<f64>>,
}

/// Uniform random search; the best guess is the best feasible observation so far.
pub fn random_search_baseline(problem: &SyntheticProblem, iterations: usize, seed: u64) -> Result<RandomSearchTrace> {
    let mut design = rng_stream(seed, streams::INITIAL);
    let mut noise = rng_stream(seed, streams::NOISE);
    let mut out = RandomSearchTrace {
        evaluations: Vec::with_capacity(iterations),
        best_guess: Vec::with_capacity(iterations),
        best_values: Vec::with_capacity(iterations),
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..iterations {
        let x = uniform_point(problem.dim, &mut design);
        let obs = problem.observe(&x, &mut noise)?;
        let feasible = obs
            .constraints
            .iter()
            .all(|c| !matches!(c, Outcome::Fail));
        if let (Outcome::Value(y), true) = (obs.objective, feasible) {
            if best.as_ref().is_none_or(|(b, _)| y < *b) {
                best = Some((y, x.clone()));
            }
        }
        out.evaluations.push(x);
        let bg = best.as_ref().map(|(_, x)| x.clone());
        let v = bg.as_ref().and_then(|x| problem.evaluate_feasible(x, &mut noise));
        out.best_guess.push(bg);
        out.best_values.push(v);
    }
    Ok(out)
}
