//! Flat `key = value` run configuration with dotted sections.
//!
//! ```text
//! problem = branin-circle
//! case = 3
//! iters = 50
//! seed = 7
//! objective.lengthscale = 0.25
//! constraint.1.prior_std = 2.0
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gpcr_core::acquisition::AcquisitionConfig;
use gpcr_core::benchmarks::{problem_by_name, SyntheticProblem};
use gpcr_core::bo::{Case, CaseConfig, FunctionSpec, ObjectiveModel};
use gpcr_core::ep::EpConfig;
use gpcr_core::gpcr::ThresholdPrior;
use gpcr_core::kernels::{KernelSpec, NoiseSpec};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Mesco,
    Random,
}

/// Optional per-function overrides of kernel, noise and threshold prior.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FunctionOverrides {
    pub variance: Option<f64>,
    pub lengthscale: Option<f64>,
    pub noise: Option<f64>,
    pub prior_mean: Option<f64>,
    pub prior_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Benchmark name, or `external` for ask-tell sessions.
    pub problem: String,
    pub case: Option<Case>,
    pub iters: usize,
    pub repeats: usize,
    pub method: Method,
    pub seed: u64,
    pub output: PathBuf,
    pub dim: Option<usize>,
    pub level_set: Option<usize>,
    pub binary: Option<usize>,
    pub objective_model: Option<ObjectiveModel>,
    pub acquisition: AcquisitionConfig,
    pub objective: FunctionOverrides,
    /// Level-set constraint overrides, keyed from 1.
    pub constraints: BTreeMap<usize, FunctionOverrides>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: "gardner".into(),
            case: None,
            iters: 30,
            repeats: 20,
            method: Method::Mesco,
            seed: 0,
            output: PathBuf::from("out"),
            dim: None,
            level_set: None,
            binary: None,
            objective_model: None,
            acquisition: AcquisitionConfig::default(),
            objective: FunctionOverrides::default(),
            constraints: BTreeMap::new(),
        }
    }
}

/// Parses `key = value` lines; `#` starts a comment. Later keys win.
pub fn parse_pairs(text: &str) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("line {}: expected key = value", n + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(CliError::config(format!("line {}: empty key", n + 1)));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// Parses one `key=value` override from the command line.
pub fn parse_override(s: &str) -> CliResult<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("override '{s}' is not key=value")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn num<T: FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.parse()
        .map_err(|_| CliError::config(format!("{key}: cannot parse '{v}'")))
}

fn set_function(f: &mut FunctionOverrides, key: &str, field: &str, v: &str) -> CliResult<()> {
    let slot = match field {
        "variance" => &mut f.variance,
        "lengthscale" => &mut f.lengthscale,
        "noise" => &mut f.noise,
        "prior_mean" => &mut f.prior_mean,
        "prior_std" => &mut f.prior_std,
        _ => return Err(CliError::config(format!("unknown key '{key}'"))),
    };
    *slot = Some(num(key, v)?);
    Ok(())
}

impl RunConfig {
    pub fn from_pairs(pairs: &[(String, String)]) -> CliResult<Self> {
        let mut c = Self::default();
        for (k, v) in pairs {
            let (k, v) = (k.as_str(), v.as_str());
            match k {
                "problem" => c.problem = v.to_string(),
                "case" => {
                    let i: u8 = num(k, v)?;
                    c.case = Some(Case::from_index(i).map_err(|_| CliError::config("case must be 1 to 4"))?);
                }
                "iters" => c.iters = num(k, v)?,
                "repeats" => c.repeats = num(k, v)?,
                "method" => {
                    c.method = match v {
                        "mesco" | "mes" => Method::Mesco,
                        "random" => Method::Random,
                        _ => return Err(CliError::config(format!("unknown method '{v}'"))),
                    }
                }
                "seed" => c.seed = num(k, v)?,
                "output" => c.output = PathBuf::from(v),
                "dim" => c.dim = Some(num(k, v)?),
                "level_set" => c.level_set = Some(num(k, v)?),
                "binary" => c.binary = Some(num(k, v)?),
                "samples" => c.acquisition.n_samples = num(k, v)?,
                "delta" => c.acquisition.delta = num(k, v)?,
                "virtual_evals" => c.acquisition.max_virtual_evals = num(k, v)?,
                "restart_tolerance" => c.acquisition.restart_tolerance = num(k, v)?,
                "restarts" => c.acquisition.n_restarts = num(k, v)?,
                "candidates" => c.acquisition.candidate_grid = num(k, v)?,
                "objective.model" => {
                    c.objective_model = Some(match v {
                        "gpcr" => ObjectiveModel::Gpcr,
                        "gp" => ObjectiveModel::StandardGp,
                        _ => return Err(CliError::config(format!("unknown objective model '{v}'"))),
                    })
                }
                _ => {
                    if let Some(field) = k.strip_prefix("objective.") {
                        set_function(&mut c.objective, k, field, v)?;
                    } else if let Some(rest) = k.strip_prefix("constraint.") {
                        let (idx, field) = rest
                            .split_once('.')
                            .ok_or_else(|| CliError::config(format!("unknown key '{k}'")))?;
                        let idx: usize = num(k, idx)?;
                        if idx == 0 {
                            return Err(CliError::config("constraint indices start at 1"));
                        }
                        set_function(c.constraints.entry(idx).or_default(), k, field, v)?;
                    } else {
                        return Err(CliError::config(format!("unknown key '{k}'")));
                    }
                }
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn from_text(text: &str) -> CliResult<Self> {
        Self::from_pairs(&parse_pairs(text)?)
    }

    /// Reads a config file and applies `overrides` on top.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> CliResult<Self> {
        let mut pairs = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::config(format!("cannot read config file {}: {e}", p.display())))?;
                parse_pairs(&text)?
            }
            None => Vec::new(),
        };
        pairs.extend_from_slice(overrides);
        Self::from_pairs(&pairs)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.iters == 0 {
            return Err(CliError::config("iters must be at least 1"));
        }
        if self.repeats == 0 {
            return Err(CliError::config("repeats must be at least 1"));
        }
        self.acquisition.validate().map_err(CliError::config)?;
        self.case_config()?;
        Ok(())
    }

    pub fn is_external(&self) -> bool {
        self.problem == "external"
    }

    /// The benchmark this configuration runs, with overrides applied.
    pub fn problem(&self) -> CliResult<Option<SyntheticProblem>> {
        if self.is_external() {
            return Ok(None);
        }
        let name = match (self.problem.as_str(), self.case) {
            ("branin" | "branin-circle", Some(Case::BinaryOnly)) => "branin-binary",
            ("branin" | "branin-circle", Some(Case::Mixed)) => "branin-mixed",
            ("branin", _) => "branin-circle",
            (n, _) => n,
        };
        let mut p = problem_by_name(name)
            .ok_or_else(|| CliError::config(format!("unknown problem '{}'", self.problem)))?;
        if let Some(case) = self.case {
            if case != p.natural_case() {
                return Err(CliError::config(format!(
                    "problem '{}' does not support case {}",
                    self.problem,
                    case.index()
                )));
            }
        }
        let o = &self.objective;
        p.variance = o.variance.unwrap_or(p.variance);
        p.lengthscale = o.lengthscale.unwrap_or(p.lengthscale);
        p.prior_std = o.prior_std.unwrap_or(p.prior_std);
        p.noise_std = o.noise.unwrap_or(p.noise_std);
        for (&i, f) in &self.constraints {
            let Some(c) = p.constraints.get_mut(i - 1) else {
                return Err(CliError::config(format!("problem has no constraint {i}")));
            };
            c.variance = f.variance.unwrap_or(c.variance);
            c.lengthscale = f.lengthscale.unwrap_or(c.lengthscale);
            c.prior_std = f.prior_std.unwrap_or(c.prior_std);
        }
        Ok(Some(p))
    }

    /// The model configuration for this run.
    pub fn case_config(&self) -> CliResult<CaseConfig> {
        let mut cfg = match self.problem()? {
            Some(p) => p.case_config().map_err(CliError::config)?,
            None => self.external_case_config()?,
        };
        apply(&mut cfg.objective, &self.objective)?;
        for (&i, f) in &self.constraints {
            let spec = cfg
                .level_set
                .get_mut(i - 1)
                .ok_or_else(|| CliError::config(format!("no level-set constraint {i}")))?;
            apply(spec, f)?;
        }
        if let Some(m) = self.objective_model {
            cfg.objective_model = m;
        }
        cfg.validate().map_err(CliError::config)?;
        Ok(cfg)
    }

    fn external_case_config(&self) -> CliResult<CaseConfig> {
        let case = self
            .case
            .ok_or_else(|| CliError::config("external problems need a case"))?;
        let dim = self
            .dim
            .ok_or_else(|| CliError::config("external problems need dim"))?;
        let (ml, nb) = match case {
            Case::SelfConstrained => (0, 0),
            Case::BinaryOnly => (0, self.binary.unwrap_or(1)),
            Case::LevelSetOnly => (self.level_set.unwrap_or(1), 0),
            Case::Mixed => (self.level_set.unwrap_or(1), self.binary.unwrap_or(0)),
        };
        let default = || -> CliResult<FunctionSpec> {
            Ok(FunctionSpec {
                kernel: KernelSpec::isometric(1.0, 0.2, dim).map_err(CliError::config)?,
                noise: NoiseSpec::new(0.01).map_err(CliError::config)?,
                prior: ThresholdPrior::new(0.0, 10.0).map_err(CliError::config)?,
            })
        };
        Ok(CaseConfig {
            case,
            objective_model: if case == Case::LevelSetOnly {
                ObjectiveModel::StandardGp
            } else {
                ObjectiveModel::Gpcr
            },
            objective: default()?,
            level_set: (0..ml).map(|_| default()).collect::<CliResult<_>>()?,
            n_binary: nb,
            evaluate_best_guess: false,
            ep: EpConfig::default(),
        })
    }
}

fn apply(spec: &mut FunctionSpec, o: &FunctionOverrides) -> CliResult<()> {
    let dim = spec.kernel.dim();
    let variance = o.variance.unwrap_or(spec.kernel.variance());
    let lengthscale = o.lengthscale.unwrap_or(spec.kernel.lengthscales()[0]);
    spec.kernel = KernelSpec::isometric(variance, lengthscale, dim).map_err(CliError::config)?;
    if let Some(n) = o.noise {
        spec.noise = NoiseSpec::new(n).map_err(CliError::config)?;
    }
    spec.prior = ThresholdPrior::new(
        o.prior_mean.unwrap_or(spec.prior.mean()),
        o.prior_std.unwrap_or(spec.prior.std_dev()),
    )
    .map_err(CliError::config)?;
    Ok(())
}
