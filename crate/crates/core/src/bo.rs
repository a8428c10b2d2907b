//! The optimization loop: threshold updates, model refits, acquisition,
//! coupled experiments and best-guess reporting.
//!
//! [`BoEngine`] is a suggest/observe state machine so the same loop can be
//! driven in-process by [`run`] or turn by turn by an external oracle.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::acquisition::{
    alpha_mesco, constraint_probability, determine_mode, halton_candidates, maximize_acquisition,
    sample_constrained_min, uniform_point, AcquisitionConfig, AcquisitionMode, MinValueSamples,
};
use crate::ep::EpConfig;
use crate::error::{check_dim, Error, Result};
use crate::gpcr::{estimate_threshold_map_with, GpcrModel, HybridDataset, ThresholdPrior, NO_TRUNCATION};
use crate::kernels::{KernelSpec, NoiseSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    /// The objective is its own constraint through its instability threshold.
    SelfConstrained,
    /// Binary constraints only, absorbed into the objective model.
    BinaryOnly,
    /// A plain GP objective with level-set constraints.
    LevelSetOnly,
    /// A self-constrained objective plus level-set (and optionally binary) constraints.
    Mixed,
}

impl Case {
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Case::SelfConstrained),
            2 => Ok(Case::BinaryOnly),
            3 => Ok(Case::LevelSetOnly),
            4 => Ok(Case::Mixed),
            _ => Err(Error::InvalidArgument("case must be 1, 2, 3 or 4")),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Case::SelfConstrained => 1,
            Case::BinaryOnly => 2,
            Case::LevelSetOnly => 3,
            Case::Mixed => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveModel {
    Gpcr,
    StandardGp,
}

/// Model settings for one function.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSpec {
    pub kernel: KernelSpec,
    pub noise: NoiseSpec,
    pub prior: ThresholdPrior,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseConfig {
    pub case: Case,
    pub objective_model: ObjectiveModel,
    pub objective: FunctionSpec,
    /// One entry per level-set constraint; observations list these first.
    pub level_set: Vec<FunctionSpec>,
    /// Binary constraints, listed after the level-set ones in each observation.
    pub n_binary: usize,
    /// Ask the oracle for a noisy value at each best guess.
    pub evaluate_best_guess: bool,
    pub ep: EpConfig,
}

impl CaseConfig {
    pub fn validate(&self) -> Result<()> {
        let ml = self.level_set.len();
        let ok = match self.case {
            Case::SelfConstrained => {
                self.objective_model == ObjectiveModel::Gpcr && ml == 0 && self.n_binary == 0
            }
            Case::BinaryOnly => {
                self.objective_model == ObjectiveModel::Gpcr && ml == 0 && self.n_binary >= 1
            }
            Case::LevelSetOnly => {
                self.objective_model == ObjectiveModel::StandardGp && ml >= 1 && self.n_binary == 0
            }
            Case::Mixed => self.objective_model == ObjectiveModel::Gpcr && ml >= 1,
        };
        if !ok {
            return Err(Error::InvalidArgument(
                "case, objective model and constraint counts are inconsistent",
            ));
        }
        let dim = self.dim();
        for f in &self.level_set {
            check_dim(dim, f.kernel.dim())?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.objective.kernel.dim()
    }

    pub fn n_constraints(&self) -> usize {
        self.level_set.len() + self.n_binary
    }
}

/// One reading from an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Value(f64),
    /// Binary constraint satisfied.
    Pass,
    /// Unstable objective, or violated constraint.
    Fail,
}

/// Everything one experiment at one input reports.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledObservation {
    pub objective: Outcome,
    pub constraints: Vec<Outcome>,
}

/// Per-model dataset updates derived from one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Absorbed {
    /// `None` records an unstable objective point.
    pub objective: Option<f64>,
    pub level_set: Vec<Option<f64>>,
}

/// Folds binary labels into the objective and checks the observation against the config.
pub fn absorb_binary(obs: &CoupledObservation, cfg: &CaseConfig) -> Result<Absorbed> {
    check_dim(cfg.n_constraints(), obs.constraints.len())?;
    let mut objective = match (obs.objective, cfg.objective_model) {
        (Outcome::Value(y), _) if y.is_finite() => Some(y),
        (Outcome::Fail, ObjectiveModel::Gpcr) => None,
        _ => return Err(Error::InvalidArgument("objective must be a finite value or unstable")),
    };
    let ml = cfg.level_set.len();
    let mut level_set = Vec::with_capacity(ml);
    for o in &obs.constraints[..ml] {
        level_set.push(match *o {
            Outcome::Value(g) if g.is_finite() => Some(g),
            Outcome::Fail => None,
            _ => return Err(Error::InvalidArgument("level-set constraints report a value or violated")),
        });
    }
    for o in &obs.constraints[ml..] {
        match o {
            Outcome::Pass => {}
            Outcome::Fail => objective = None,
            _ => return Err(Error::InvalidArgument("binary constraints report satisfied or violated")),
        }
    }
    Ok(Absorbed { objective, level_set })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub x: Vec<f64>,
    pub observation: CoupledObservation,
}

/// Datasets and per-iteration traces of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct BoState {
    /// Completed acquisition iterations (the initial random point is not counted).
    pub iteration: usize,
    pub objective: HybridDataset,
    pub constraints: Vec<HybridDataset>,
    /// Objective threshold per iteration; `+inf` for a plain GP objective.
    pub threshold_trace: Vec<f64>,
    /// Constraint thresholds per iteration.
    pub constraint_threshold_trace: Vec<Vec<f64>>,
    pub best_guess_trace: Vec<Vec<f64>>,
    /// Oracle value at each best guess, when requested and available.
    pub best_value_trace: Vec<Option<f64>>,
    pub mode_trace: Vec<AcquisitionMode>,
    pub evaluations: Vec<Evaluation>,
    pub notes: Vec<String>,
    pub error: Option<String>,
}

impl BoState {
    fn new(cfg: &CaseConfig) -> Self {
        let dim = cfg.dim();
        Self {
            iteration: 0,
            objective: HybridDataset::new(dim),
            constraints: (0..cfg.level_set.len()).map(|_| HybridDataset::new(dim)).collect(),
            threshold_trace: Vec::new(),
            constraint_threshold_trace: Vec::new(),
            best_guess_trace: Vec::new(),
            best_value_trace: Vec::new(),
            mode_trace: Vec::new(),
            evaluations: Vec::new(),
            notes: Vec::new(),
            error: None,
        }
    }
}

/// Fitted objective and level-set constraint models.
#[derive(Debug, Clone)]
pub struct Models {
    pub objective: GpcrModel,
    pub constraints: Vec<GpcrModel>,
}

/// Named random streams derived from one seed.
pub mod streams {
    pub const INITIAL: u64 = 1;
    pub const ACQUISITION: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const RESTARTS: u64 = 4;
}

pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct Suggestion {
    /// 0 for the initial random point, then the acquisition iteration number.
    pub iter: usize,
    pub x: Vec<f64>,
    pub mode: Option<AcquisitionMode>,
    pub samples: Option<MinValueSamples>,
}

/// Suggest/observe driver of the optimization loop.
#[derive(Debug, Clone)]
pub struct BoEngine {
    cfg: CaseConfig,
    acq: AcquisitionConfig,
    state: BoState,
    models: Option<Models>,
    candidates: Vec<Vec<f64>>,
    pending: Option<Suggestion>,
    initial_rng: ChaCha8Rng,
    acq_rng: ChaCha8Rng,
}

impl BoEngine {
    pub fn new(cfg: CaseConfig, acq: AcquisitionConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        acq.validate()?;
        let state = BoState::new(&cfg);
        Ok(Self {
            cfg,
            acq,
            state,
            models: None,
            candidates: Vec::new(),
            pending: None,
            initial_rng: rng_stream(seed, streams::INITIAL),
            acq_rng: rng_stream(seed, streams::ACQUISITION),
        })
    }

    pub fn config(&self) -> &CaseConfig {
        &self.cfg
    }

    pub fn acquisition_config(&self) -> &AcquisitionConfig {
        &self.acq
    }

    pub fn state(&self) -> &BoState {
        &self.state
    }

    pub fn into_state(self) -> BoState {
        self.state
    }

    pub fn models(&self) -> Option<&Models> {
        self.models.as_ref()
    }

    pub fn pending(&self) -> Option<&Suggestion> {
        self.pending.as_ref()
    }

    /// Next input to evaluate. Repeated calls return the same outstanding suggestion.
    pub fn suggest(&mut self) -> Result<Suggestion> {
        if let Some(p) = &self.pending {
            return Ok(p.clone());
        }
        let dim = self.cfg.dim();
        let s = match &self.models {
            None => Suggestion {
                iter: 0,
                x: uniform_point(dim, &mut self.initial_rng),
                mode: None,
                samples: None,
            },
            Some(models) => {
                self.candidates = halton_candidates(self.acq.candidate_grid, dim, &mut self.acq_rng)?;
                let mode = determine_mode(&models.constraints, &self.candidates, self.acq.delta)?;
                let samples = match mode {
                    AcquisitionMode::Weighted => sample_constrained_min(
                        &models.objective,
                        &models.constraints,
                        &self.acq,
                        &mut self.acq_rng,
                    )?,
                    AcquisitionMode::FeasibilitySearch => MinValueSamples {
                        values: Vec::new(),
                        fallbacks: 0,
                    },
                };
                let x = maximize_acquisition(
                    |x| alpha_mesco(x, &models.objective, &models.constraints, &samples, mode),
                    &self.candidates,
                    &self.acq,
                )?;
                Suggestion {
                    iter: self.state.iteration + 1,
                    x,
                    mode: Some(mode),
                    samples: Some(samples),
                }
            }
        };
        self.pending = Some(s.clone());
        Ok(s)
    }

    /// Records the outcome of the outstanding suggestion.
    ///
    /// An observation that does not match the configuration is rejected and
    /// leaves the state unchanged.
    pub fn observe(&mut self, obs: CoupledObservation) -> Result<()> {
        let Some(pending) = self.pending.clone() else {
            return Err(Error::InvalidArgument("no outstanding suggestion"));
        };
        let absorbed = absorb_binary(&obs, &self.cfg)?;
        let x = pending.x.clone();
        let mut objective = self.state.objective.clone();
        let mut constraints = self.state.constraints.clone();
        match absorbed.objective {
            Some(y) => objective.push_stable(x.clone(), y)?,
            None => objective.push_unstable(x.clone())?,
        }
        for (d, v) in constraints.iter_mut().zip(&absorbed.level_set) {
            match v {
                Some(g) => d.push_stable(x.clone(), *g)?,
                None => d.push_unstable(x.clone())?,
            }
        }
        let models = self.fit_models(&objective, &constraints)?;
        self.state.objective = objective;
        self.state.constraints = constraints;
        self.state.evaluations.push(Evaluation { x, observation: obs });
        self.pending = None;
        if let Some(mode) = pending.mode {
            if !models.objective.converged() || models.constraints.iter().any(|m| !m.converged()) {
                self.state
                    .notes
                    .push(format!("iteration {}: EP did not converge", pending.iter));
            }
            let bg = best_guess(
                &models.objective,
                &models.constraints,
                self.acq.delta,
                &self.candidates,
            )?;
            self.state.iteration = pending.iter;
            self.state.threshold_trace.push(models.objective.threshold());
            self.state
                .constraint_threshold_trace
                .push(models.constraints.iter().map(|m| m.threshold()).collect());
            self.state.best_guess_trace.push(bg);
            self.state.best_value_trace.push(None);
            self.state.mode_trace.push(mode);
        }
        self.models = Some(models);
        Ok(())
    }

    /// Attaches an oracle value to the latest best guess.
    pub fn record_best_value(&mut self, value: Option<f64>) {
        if let Some(last) = self.state.best_value_trace.last_mut() {
            *last = value;
        }
    }

    /// Current best guess; before the first acquisition iteration, the best stable point if any.
    pub fn best_guess(&self) -> Option<Vec<f64>> {
        if let Some(bg) = self.state.best_guess_trace.last() {
            return Some(bg.clone());
        }
        let d = &self.state.objective;
        d.stable_y()
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| d.stable_x()[i].clone())
    }

    fn fit_models(&self, objective: &HybridDataset, constraints: &[HybridDataset]) -> Result<Models> {
        let obj = match self.cfg.objective_model {
            ObjectiveModel::StandardGp => GpcrModel::fit_with(
                objective.clone(),
                self.cfg.objective.kernel.clone(),
                self.cfg.objective.noise,
                NO_TRUNCATION,
                &self.cfg.ep,
            )?,
            ObjectiveModel::Gpcr => fit_gpcr(objective, &self.cfg.objective, &self.cfg.ep)?,
        };
        let cons = constraints
            .iter()
            .zip(&self.cfg.level_set)
            .map(|(d, spec)| fit_gpcr(d, spec, &self.cfg.ep))
            .collect::<Result<Vec<_>>>()?;
        Ok(Models {
            objective: obj,
            constraints: cons,
        })
    }
}

/// MAP threshold (0 without stable data), then a fit at that threshold.
fn fit_gpcr(data: &HybridDataset, spec: &FunctionSpec, ep: &EpConfig) -> Result<GpcrModel> {
    let c = if data.is_empty() {
        0.0
    } else {
        estimate_threshold_map_with(data, &spec.kernel, &spec.noise, &spec.prior, ep)?
    };
    GpcrModel::fit_with(data.clone(), spec.kernel.clone(), spec.noise, c, ep)
}

/// Posterior-mean minimizer among candidates (plus stable objective points) whose
/// joint constraint probability reaches `1 − δ`; if none does, the most probably
/// feasible candidate.
pub fn best_guess(
    objective: &GpcrModel,
    constraints: &[GpcrModel],
    delta: f64,
    candidates: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let pool = candidates.iter().chain(objective.data().stable_x());
    let mut best: Option<(&Vec<f64>, f64)> = None;
    let mut fallback: Option<(&Vec<f64>, f64)> = None;
    for x in pool {
        let p = constraint_probability(constraints, x)?;
        if p >= 1.0 - delta {
            let (m, _) = objective.predict_point(x)?;
            if best.is_none_or(|(_, b)| m < b) {
                best = Some((x, m));
            }
        } else if fallback.is_none_or(|(_, b)| p > b) {
            fallback = Some((x, p));
        }
    }
    best.or(fallback)
        .map(|(x, _)| x.clone())
        .ok_or(Error::InvalidArgument("no candidates for the best guess"))
}

/// An experiment: one evaluation of the objective and every constraint at `x`.
pub trait Oracle {
    fn conduct_experiment(&mut self, x: &[f64]) -> Result<CoupledObservation>;

    /// A value of the objective at a best guess, `None` if unavailable or infeasible.
    fn evaluate_best_guess(&mut self, _x: &[f64]) -> Option<f64> {
        None
    }
}

/// Runs the initial random evaluation plus `iterations` acquisition iterations.
///
/// Oracle failures stop the loop and are recorded in [`BoState::error`].
pub fn run<O: Oracle + ?Sized>(
    cfg: CaseConfig,
    oracle: &mut O,
    iterations: usize,
    acq: AcquisitionConfig,
    seed: u64,
) -> Result<BoState> {
    if iterations == 0 {
        return Err(Error::InvalidArgument("at least one iteration is required"));
    }
    let evaluate_bg = cfg.evaluate_best_guess;
    let mut engine = BoEngine::new(cfg, acq, seed)?;
    for _ in 0..=iterations {
        let s = engine.suggest()?;
        let obs = match oracle.conduct_experiment(&s.x) {
            Ok(o) => o,
            Err(e) => {
                engine.state.error = Some(format!("iteration {}: {e}", s.iter));
                break;
            }
        };
        if let Err(e) = engine.observe(obs) {
            engine.state.error = Some(format!("iteration {}: {e}", s.iter));
            break;
        }
        if s.iter > 0 && evaluate_bg {
            if let Some(bg) = engine.state.best_guess_trace.last().cloned() {
                let v = oracle.evaluate_best_guess(&bg);
                engine.record_best_value(v);
            }
        }
    }
    Ok(engine.into_state())
}
