//! Min-value entropy search with constraint weighting, min-value sampling
//! through virtual evaluations, and a derivative-free acquisition maximizer.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::gpcr::GpcrModel;
use crate::kernels::{cholesky_with_jitter, KernelSpec, NoiseSpec};
use crate::regression::RegressionPosterior;
use crate::trunc_gauss::{inverse_mills, norm_log_cdf};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcquisitionConfig {
    /// Number of min-value samples `S`.
    pub n_samples: usize,
    /// Confidence parameter: constraints must hold with probability `1 − delta`.
    pub delta: f64,
    /// Virtual evaluations allowed per min-value sample.
    pub max_virtual_evals: usize,
    /// Step size below which a local search is considered converged.
    pub restart_tolerance: f64,
    /// Local refinements started from the best candidates.
    pub n_restarts: usize,
    /// Quasi-random candidates scored per maximization.
    pub candidate_grid: usize,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            n_samples: 10,
            delta: 0.05,
            max_virtual_evals: 200,
            restart_tolerance: 1e-3,
            n_restarts: 5,
            candidate_grid: 2000,
        }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidArgument("at least one min-value sample is required"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument("delta must lie in (0, 1)"));
        }
        if self.max_virtual_evals == 0 {
            return Err(Error::InvalidArgument("max_virtual_evals must be positive"));
        }
        if !(self.restart_tolerance > 0.0) {
            return Err(Error::InvalidArgument("restart_tolerance must be positive"));
        }
        if self.candidate_grid == 0 {
            return Err(Error::InvalidArgument("candidate_grid must be positive"));
        }
        Ok(())
    }
}

/// Samples of the constrained minimum value.
#[derive(Debug, Clone, PartialEq)]
pub struct MinValueSamples {
    pub values: Vec<f64>,
    /// Samples for which no feasible iterate was found.
    pub fallbacks: usize,
}

/// Inverse of `[[A, b], [bᵀ, d]]` from `A⁻¹`, `b` and `d` in `O(n²)`.
///
/// A non-positive Schur complement gets a jitter of `1e-8 · max(|d|, 1)`.
pub fn woodbury_extend(inv: &DMatrix<f64>, cross: &DVector<f64>, diag: f64) -> Result<DMatrix<f64>> {
    check_dim(inv.nrows(), inv.ncols())?;
    check_dim(inv.nrows(), cross.len())?;
    let v = inv * cross;
    extend_with(inv, &v, diag - cross.dot(&v), diag)
}

fn extend_with(inv: &DMatrix<f64>, v: &DVector<f64>, schur: f64, diag: f64) -> Result<DMatrix<f64>> {
    let n = inv.nrows();
    let mut s = schur;
    if !(s > 1e-14 * diag.abs()) {
        s += 1e-8 * diag.abs().max(1.0);
    }
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::NotPositiveDefinite { jitter: 1e-8 });
    }
    let mut out = DMatrix::zeros(n + 1, n + 1);
    let r = 1.0 / s;
    for j in 0..n {
        for i in 0..n {
            out[(i, j)] = inv[(i, j)] + v[i] * v[j] * r;
        }
        out[(n, j)] = -v[j] * r;
        out[(j, n)] = -v[j] * r;
    }
    out[(n, n)] = r;
    Ok(out)
}

const DRIFT_TOLERANCE: f64 = 1e-6;

/// A scratch copy of a posterior that grows with sampled observations, so that
/// successive draws behave like queries to one function sampled from it.
#[derive(Debug, Clone)]
pub struct VirtualDataset {
    kernel: KernelSpec,
    noise_var: f64,
    base_len: usize,
    base_inv: DMatrix<f64>,
    points: Vec<Vec<f64>>,
    targets: Vec<f64>,
    noise: Vec<f64>,
    inv: DMatrix<f64>,
    weights: DVector<f64>,
}

impl VirtualDataset {
    /// Starts from the effective observations of `posterior`; virtual points get `noise`.
    pub fn new(posterior: &RegressionPosterior, noise: &NoiseSpec) -> Self {
        let obs = posterior.observations();
        let inv = posterior.inverse();
        let weights = &inv * DVector::from_column_slice(&obs.targets);
        Self {
            kernel: posterior.kernel().clone(),
            noise_var: noise.variance(),
            base_len: obs.len(),
            base_inv: inv.clone(),
            points: obs.points.clone(),
            targets: obs.targets.clone(),
            noise: obs.noise_var.clone(),
            inv,
            weights,
        }
    }

    pub fn from_model(model: &GpcrModel) -> Self {
        Self::new(model.posterior(), model.noise())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn n_virtual(&self) -> usize {
        self.points.len() - self.base_len
    }

    /// Maintained inverse of the expanded covariance.
    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inv
    }

    /// Dense expanded covariance `K + D`, for checks.
    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| {
            let k = self.kernel.eval_unchecked(&self.points[i], &self.points[j]);
            if i == j {
                k + self.noise[i]
            } else {
                k
            }
        })
    }

    /// Drops every virtual point.
    pub fn reset(&mut self) {
        self.points.truncate(self.base_len);
        self.targets.truncate(self.base_len);
        self.noise.truncate(self.base_len);
        self.inv = self.base_inv.clone();
        self.weights = &self.inv * DVector::from_column_slice(&self.targets);
    }

    /// Latent predictive mean and variance given base and virtual data.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        check_dim(self.kernel.dim(), x.len())?;
        let k = self.kernel.cross_vector(x, &self.points);
        let v = &self.inv * &k;
        Ok(self.moments(&k, &v))
    }

    fn moments(&self, k: &DVector<f64>, v: &DVector<f64>) -> (f64, f64) {
        let prior = self.kernel.variance();
        let mean = k.dot(&self.weights);
        let var = (prior - k.dot(v)).clamp(0.0, prior);
        (mean, var)
    }

    /// Recomputes the inverse from a dense factorization.
    fn rebuild(&mut self) -> Result<()> {
        self.inv = cholesky_with_jitter(&self.covariance())?.inverse();
        self.weights = &self.inv * DVector::from_column_slice(&self.targets);
        Ok(())
    }

    /// Draws `y = f(x) + ε` from the current predictive and appends it.
    pub fn virtual_evaluate<R: Rng + ?Sized>(&mut self, x: &[f64], rng: &mut R) -> Result<f64> {
        self.virtual_draw(x, rng).map(|(_, y)| y)
    }

    /// As [`Self::virtual_evaluate`], also returning the latent draw: `(f, y)`.
    pub fn virtual_draw<R: Rng + ?Sized>(&mut self, x: &[f64], rng: &mut R) -> Result<(f64, f64)> {
        check_dim(self.kernel.dim(), x.len())?;
        let k = self.kernel.cross_vector(x, &self.points);
        let mut v = &self.inv * &k;
        // rank-1 updates drift on ill-conditioned data; a clearly negative
        // variance means the inverse no longer matches the covariance
        let raw = self.kernel.variance() - k.dot(&v);
        if !raw.is_finite() || raw < -DRIFT_TOLERANCE * self.kernel.variance() {
            self.rebuild()?;
            v = &self.inv * &k;
        }
        let (mean, var) = self.moments(&k, &v);
        let z: f64 = rng.sample(StandardNormal);
        let f = mean + var.sqrt() * z;
        let e: f64 = rng.sample(StandardNormal);
        let y = f + self.noise_var.sqrt() * e;
        let diag = self.kernel.variance() + self.noise_var;
        // Schur complement of the new point is its predictive variance plus noise
        let inv = match extend_with(&self.inv, &v, var + self.noise_var, diag) {
            Ok(m) => m,
            Err(_) => {
                let inflated = 100.0 * self.noise_var;
                let diag = self.kernel.variance() + inflated;
                let m = extend_with(&self.inv, &v, var + inflated, diag)?;
                self.noise.push(inflated);
                self.push(x, y, m);
                return Ok((f, y));
            }
        };
        self.noise.push(self.noise_var);
        self.push(x, y, inv);
        Ok((f, y))
    }

    fn push(&mut self, x: &[f64], y: f64, inv: DMatrix<f64>) {
        self.points.push(x.to_vec());
        self.targets.push(y);
        self.inv = inv;
        self.weights = &self.inv * DVector::from_column_slice(&self.targets);
    }
}

/// One summand of the min-value entropy acquisition, `z = (f_min − μ)/σ`.
fn mes_term(z: f64) -> f64 {
    let t = -z;
    let term = 0.5 * t * inverse_mills(t) - norm_log_cdf(t);
    term.max(0.0)
}

/// Min-value entropy search acquisition at predictive `N(mu, sigma²)`.
pub fn alpha_mes(mu: f64, sigma: f64, samples: &MinValueSamples) -> f64 {
    if !(sigma > 0.0) || samples.values.is_empty() {
        return 0.0;
    }
    let s: f64 = samples.values.iter().map(|&f| mes_term((f - mu) / sigma)).sum();
    s / samples.values.len() as f64
}

/// `Π_j P(g_j(x) ≤ ĉ_j)` over the constraint models.
pub fn constraint_probability(constraints: &[GpcrModel], x: &[f64]) -> Result<f64> {
    let mut p = 1.0;
    for m in constraints {
        p *= m.prob_stable(x)?;
    }
    Ok(p)
}

/// Whether the entropy term is used (some candidate is feasible with
/// probability `1 − δ`) or only the feasibility probability is maximized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcquisitionMode {
    Weighted,
    FeasibilitySearch,
}

pub fn determine_mode<P: AsRef<[f64]>>(
    constraints: &[GpcrModel],
    candidates: &[P],
    delta: f64,
) -> Result<AcquisitionMode> {
    if constraints.is_empty() {
        return Ok(AcquisitionMode::Weighted);
    }
    for x in candidates {
        if constraint_probability(constraints, x.as_ref())? >= 1.0 - delta {
            return Ok(AcquisitionMode::Weighted);
        }
    }
    Ok(AcquisitionMode::FeasibilitySearch)
}

/// Constrained min-value entropy search acquisition.
pub fn alpha_mesco(
    x: &[f64],
    objective: &GpcrModel,
    constraints: &[GpcrModel],
    samples: &MinValueSamples,
    mode: AcquisitionMode,
) -> Result<f64> {
    let p = constraint_probability(constraints, x)?;
    match mode {
        AcquisitionMode::FeasibilitySearch => Ok(p),
        AcquisitionMode::Weighted => {
            let (m, v) = objective.predict_point(x)?;
            Ok(alpha_mes(m, v.sqrt(), samples) * p)
        }
    }
}

/// Stable objective point with the lowest posterior mean among those whose
/// constraint probability reaches `1 − delta`.
fn incumbent(objective: &GpcrModel, constraints: &[GpcrModel], delta: f64) -> Result<Option<Vec<f64>>> {
    let mut best: Option<(&Vec<f64>, f64)> = None;
    for x in objective.data().stable_x() {
        if constraint_probability(constraints, x)? < 1.0 - delta {
            continue;
        }
        let (m, _) = objective.predict_point(x)?;
        if best.is_none_or(|(_, b)| m < b) {
            best = Some((x, m));
        }
    }
    Ok(best.map(|(x, _)| x.clone()))
}

/// Draws `config.n_samples` constrained-minimum values by local search on virtual evaluations.
///
/// Each sample is the lowest latent value among the feasible probes of one
/// search, which also probes the incumbent. Without a feasible probe the
/// lowest latent value seen is used and counted as a fallback.
pub fn sample_constrained_min<R: RngCore + ?Sized>(
    objective: &GpcrModel,
    constraints: &[GpcrModel],
    config: &AcquisitionConfig,
    rng: &mut R,
) -> Result<MinValueSamples> {
    config.validate()?;
    let dim = objective.kernel().dim();
    for c in constraints {
        check_dim(dim, c.kernel().dim())?;
    }
    let start = incumbent(objective, constraints, config.delta)?;
    let mut obj_vd = VirtualDataset::from_model(objective);
    let mut con_vd: Vec<VirtualDataset> = constraints.iter().map(VirtualDataset::from_model).collect();
    let thresholds: Vec<f64> = constraints.iter().map(|m| m.threshold()).collect();
    let mut values = Vec::with_capacity(config.n_samples);
    let mut fallbacks = 0;
    for _ in 0..config.n_samples {
        let mut sub = ChaCha8Rng::seed_from_u64(rng.next_u64());
        obj_vd.reset();
        for vd in &mut con_vd {
            vd.reset();
        }
        let mut search = VirtualSearch {
            objective: &mut obj_vd,
            constraints: &mut con_vd,
            thresholds: &thresholds,
            rng: &mut sub,
            evals: 0,
            best_seen: f64::INFINITY,
            best_feasible: f64::INFINITY,
        };
        let x0: Vec<f64> = (0..dim).map(|_| search.rng.random::<f64>()).collect();
        if let Some(x) = &start {
            search.probe(x.clone())?;
        }
        search.run(x0, config)?;
        if search.best_feasible.is_finite() {
            values.push(search.best_feasible);
        } else {
            fallbacks += 1;
            values.push(search.best_seen);
        }
    }
    Ok(MinValueSamples { values, fallbacks })
}

struct Probe {
    x: Vec<f64>,
    value: f64,
    violation: f64,
}

impl Probe {
    fn better_than(&self, other: &Probe) -> bool {
        if self.violation == 0.0 && other.violation == 0.0 {
            self.value < other.value
        } else {
            self.violation < other.violation
        }
    }
}

struct VirtualSearch<'a> {
    objective: &'a mut VirtualDataset,
    constraints: &'a mut [VirtualDataset],
    thresholds: &'a [f64],
    rng: &'a mut ChaCha8Rng,
    evals: usize,
    best_seen: f64,
    best_feasible: f64,
}

impl VirtualSearch<'_> {
    fn probe(&mut self, x: Vec<f64>) -> Result<Probe> {
        self.evals += 1;
        let mut violation = 0.0;
        for (vd, c) in self.constraints.iter_mut().zip(self.thresholds) {
            let g = vd.virtual_evaluate(&x, self.rng)?;
            violation += (g - c).max(0.0);
        }
        let (f, value) = self.objective.virtual_draw(&x, self.rng)?;
        self.best_seen = self.best_seen.min(f);
        if violation == 0.0 {
            self.best_feasible = self.best_feasible.min(f);
        }
        Ok(Probe { x, value, violation })
    }

    /// Projected compass search on the unit cube.
    fn run(&mut self, x0: Vec<f64>, config: &AcquisitionConfig) -> Result<Probe> {
        let dim = x0.len();
        let mut current = self.probe(x0)?;
        let mut step = 0.1;
        'outer: while step >= config.restart_tolerance {
            for d in 0..dim {
                for sign in [1.0, -1.0] {
                    if self.evals >= config.max_virtual_evals {
                        break 'outer;
                    }
                    let mut x = current.x.clone();
                    x[d] = (x[d] + sign * step).clamp(0.0, 1.0);
                    if x[d] == current.x[d] {
                        continue;
                    }
                    let p = self.probe(x)?;
                    if p.better_than(&current) {
                        current = p;
                        continue 'outer;
                    }
                }
            }
            step *= 0.5;
        }
        Ok(current)
    }
}

/// Radical inverse of `index` in `base`.
fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += (index % base) as f64 * f;
        index /= base;
        f *= inv;
    }
    r
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// `n` Halton points in `[0, 1)^dim` with a random Cranley–Patterson shift.
pub fn halton_candidates<R: Rng + ?Sized>(n: usize, dim: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if dim == 0 || dim > PRIMES.len() {
        return Err(Error::Unsupported("candidate generation supports 1 to 16 dimensions"));
    }
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    Ok((1..=n as u64)
        .map(|i| {
            (0..dim)
                .map(|d| {
                    let v = radical_inverse(i, PRIMES[d]) + shift[d];
                    v - v.floor()
                })
                .collect()
        })
        .collect())
}

/// Refinement steps per local search during acquisition maximization.
pub const REFINE_STEPS: usize = 50;

/// Scores every candidate, then refines the best `n_restarts` with compass search.
///
/// Ties keep the lowest candidate index.
pub fn maximize_acquisition<F>(
    mut surface: F,
    candidates: &[Vec<f64>],
    config: &AcquisitionConfig,
) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidates to score"));
    }
    let dim = candidates[0].len();
    let mut scored = Vec::with_capacity(candidates.len());
    for (i, x) in candidates.iter().enumerate() {
        let v = surface(x)?;
        scored.push((if v.is_nan() { f64::NEG_INFINITY } else { v }, i));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let (mut best_v, best_i) = scored[0];
    let mut best_x = candidates[best_i].clone();
    let spacing = (1.0 / candidates.len() as f64).powf(1.0 / dim as f64);
    for &(v0, i) in scored.iter().take(config.n_restarts.max(1)) {
        let mut x = candidates[i].clone();
        let mut v = v0;
        let mut step = spacing;
        let mut steps = 0;
        while steps < REFINE_STEPS {
            let mut moved = false;
            'poll: for d in 0..dim {
                for sign in [1.0, -1.0] {
                    let mut y = x.clone();
                    y[d] = (y[d] + sign * step).clamp(0.0, 1.0);
                    if y[d] == x[d] {
                        continue;
                    }
                    let w = surface(&y)?;
                    if w > v {
                        x = y;
                        v = w;
                        moved = true;
                        break 'poll;
                    }
                }
            }
            if !moved {
                step *= 0.5;
            }
            steps += 1;
        }
        if v > best_v {
            best_v = v;
            best_x = x;
        }
    }
    Ok(best_x)
}

/// Uniform point in the unit cube.
pub fn uniform_point<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    for v in &mut x {
        *v = rng.random::<f64>();
    }
    x
}
