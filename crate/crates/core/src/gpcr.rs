//! Classified-regression Gaussian process: stable inputs carry noisy values
//! below an unknown threshold `c`, unstable inputs only carry the label
//! "above `c`".

use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::ep::{
    directions_for, ep_box_posterior, log_mass_at, tilted_base_heteroscedastic, EpConfig,
    EpResult, TiltedBase,
};
use crate::error::{check_dim, Error, Result};
use crate::kernels::{kernel_matrix, KernelSpec, NoiseSpec};
use crate::regression::{GaussianObservations, RegressionPosterior};
use crate::trunc_gauss::{norm_cdf, norm_log_pdf};

/// Threshold value meaning "no truncation": with no unstable points the model is a plain GP.
pub const NO_TRUNCATION: f64 = f64::INFINITY;

/// Stable and unstable points closer than this (in lengthscale units) trigger noise relaxation.
pub const COINCIDENCE_RADIUS: f64 = 1e-3;
/// Factor applied to the noise standard deviation of a relaxed stable point.
pub const COINCIDENCE_NOISE_FACTOR: f64 = 10.0;

/// Evaluations with a value (stable) and evaluations with only a failure label (unstable).
#[derive(Debug, Clone, PartialEq)]
pub struct HybridDataset {
    dim: usize,
    stable_x: Vec<Vec<f64>>,
    stable_y: Vec<f64>,
    unstable_x: Vec<Vec<f64>>,
}

impl HybridDataset {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            stable_x: Vec::new(),
            stable_y: Vec::new(),
            unstable_x: Vec::new(),
        }
    }

    pub fn from_parts(
        dim: usize,
        stable_x: Vec<Vec<f64>>,
        stable_y: Vec<f64>,
        unstable_x: Vec<Vec<f64>>,
    ) -> Result<Self> {
        check_dim(stable_x.len(), stable_y.len())?;
        let mut d = Self::new(dim);
        for (x, y) in stable_x.into_iter().zip(stable_y) {
            d.push_stable(x, y)?;
        }
        for x in unstable_x {
            d.push_unstable(x)?;
        }
        Ok(d)
    }

    pub fn push_stable(&mut self, x: Vec<f64>, y: f64) -> Result<()> {
        check_dim(self.dim, x.len())?;
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("observations must be finite"));
        }
        self.stable_x.push(x);
        self.stable_y.push(y);
        Ok(())
    }

    pub fn push_unstable(&mut self, x: Vec<f64>) -> Result<()> {
        check_dim(self.dim, x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("observations must be finite"));
        }
        self.unstable_x.push(x);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stable_x(&self) -> &[Vec<f64>] {
        &self.stable_x
    }

    pub fn stable_y(&self) -> &[f64] {
        &self.stable_y
    }

    pub fn unstable_x(&self) -> &[Vec<f64>] {
        &self.unstable_x
    }

    pub fn n_stable(&self) -> usize {
        self.stable_x.len()
    }

    pub fn n_unstable(&self) -> usize {
        self.unstable_x.len()
    }

    pub fn len(&self) -> usize {
        self.n_stable() + self.n_unstable()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_stable_y(&self) -> Option<f64> {
        self.stable_y.iter().copied().reduce(f64::max)
    }

    /// Stable points first, then unstable ones.
    pub fn points(&self) -> Vec<&[f64]> {
        self.stable_x
            .iter()
            .chain(&self.unstable_x)
            .map(|x| x.as_slice())
            .collect()
    }

    /// Per-stable-point noise variance after the coincidence relaxation.
    pub fn relaxed_noise_var(&self, kernel: &KernelSpec, noise: &NoiseSpec) -> Vec<f64> {
        let relaxed = noise.variance() * COINCIDENCE_NOISE_FACTOR * COINCIDENCE_NOISE_FACTOR;
        self.stable_x
            .iter()
            .map(|xs| {
                let near = self
                    .unstable_x
                    .iter()
                    .any(|xu| kernel.scaled_distance(xs, xu) < COINCIDENCE_RADIUS);
                if near {
                    relaxed
                } else {
                    noise.variance()
                }
            })
            .collect()
    }
}

/// Gaussian hyperprior `N(mean, std_dev²)` on the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPrior {
    mean: f64,
    std_dev: f64,
}

impl ThresholdPrior {
    pub fn new(mean: f64, std_dev: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::InvalidArgument("threshold prior mean must be finite"));
        }
        if !(std_dev > 0.0) || !std_dev.is_finite() {
            return Err(Error::InvalidArgument("threshold prior std_dev must be positive"));
        }
        Ok(Self { mean, std_dev })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn std_dev(&self) -> f64 {
        self.std_dev
    }

    pub fn log_density(&self, c: f64) -> f64 {
        let z = (c - self.mean) / self.std_dev;
        -0.5 * z * z
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PredictiveMoments {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

/// A fitted GPCR model. Immutable once built.
#[derive(Debug, Clone)]
pub struct GpcrModel {
    kernel: KernelSpec,
    noise: NoiseSpec,
    data: HybridDataset,
    threshold: f64,
    base: TiltedBase,
    ep: EpResult,
    posterior: RegressionPosterior,
}

/// Sites with effective noise above this multiple of the signal variance carry no information.
const MAX_PSEUDO_NOISE_RATIO: f64 = 1e10;

impl GpcrModel {
    pub fn fit(
        data: HybridDataset,
        kernel: KernelSpec,
        noise: NoiseSpec,
        threshold: f64,
    ) -> Result<Self> {
        Self::fit_with(data, kernel, noise, threshold, &EpConfig::default())
    }

    pub fn fit_with(
        data: HybridDataset,
        kernel: KernelSpec,
        noise: NoiseSpec,
        threshold: f64,
        config: &EpConfig,
    ) -> Result<Self> {
        check_dim(kernel.dim(), data.dim())?;
        if threshold.is_nan() || threshold == f64::NEG_INFINITY {
            return Err(Error::InvalidArgument("threshold must be finite or +inf"));
        }
        if threshold == NO_TRUNCATION && data.n_unstable() > 0 {
            return Err(Error::InvalidArgument(
                "the no-truncation sentinel requires an all-stable dataset",
            ));
        }
        let noise_var = data.relaxed_noise_var(&kernel, &noise);
        let k = kernel_matrix(&kernel, &data.points())?;
        let base = tilted_base_heteroscedastic(&k, data.stable_y(), &noise_var, data.n_stable())?;
        let directions = directions_for(data.n_stable(), data.n_unstable());
        let ep = if threshold == NO_TRUNCATION {
            config.validate()?;
            EpResult::from_base(&base)
        } else {
            ep_box_posterior(&base, &directions, threshold, config)?
        };
        let posterior = pseudo_posterior(&kernel, &data, &noise_var, &ep)?;
        Ok(Self {
            kernel,
            noise,
            data,
            threshold,
            base,
            ep,
            posterior,
        })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    pub fn data(&self) -> &HybridDataset {
        &self.data
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn base(&self) -> &TiltedBase {
        &self.base
    }

    pub fn ep(&self) -> &EpResult {
        &self.ep
    }

    pub fn converged(&self) -> bool {
        self.ep.converged
    }

    /// The EP posterior expressed as Gaussian observations under the prior.
    pub fn posterior(&self) -> &RegressionPosterior {
        &self.posterior
    }

    pub fn predict(&self, xs: &[Vec<f64>]) -> Result<PredictiveMoments> {
        let (mean, variance) = self.posterior.predict_many(xs)?;
        Ok(PredictiveMoments { mean, variance })
    }

    pub fn predict_point(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.posterior.predict(x)
    }

    /// `P(f(x) ≤ ĉ | D)` under the Gaussian predictive.
    pub fn prob_stable(&self, x: &[f64]) -> Result<f64> {
        let (m, v) = self.predict_point(x)?;
        Ok(prob_below(self.threshold, m, v))
    }

    /// Unnormalized exact predictive density `p(f_* | D)` on a grid, scaled to unit maximum.
    ///
    /// One EP solve per grid value.
    pub fn exact_predictive_density(&self, x_star: &[f64], f_grid: &[f64]) -> Result<Vec<f64>> {
        self.exact_predictive_density_with(x_star, f_grid, &EpConfig::default())
    }

    pub fn exact_predictive_density_with(
        &self,
        x_star: &[f64],
        f_grid: &[f64],
        config: &EpConfig,
    ) -> Result<Vec<f64>> {
        check_dim(self.kernel.dim(), x_star.len())?;
        if f_grid.is_empty() {
            return Ok(Vec::new());
        }
        let n = self.data.len();
        let mut points = self.data.points();
        points.push(x_star);
        let k = kernel_matrix(&self.kernel, &points)?;
        let noise_var = self.data.relaxed_noise_var(&self.kernel, &self.noise);
        let ext = tilted_base_heteroscedastic(&k, self.data.stable_y(), &noise_var, self.data.n_stable())?;
        let m_star = ext.mean[n];
        let v_star = ext.covariance[(n, n)];
        if !(v_star > 0.0) {
            return Err(Error::InvalidArgument("test point has no predictive variance"));
        }
        let cross = ext.covariance.view((0, n), (n, 1)).into_owned();
        let gain = &cross / v_star;
        let mut cond_cov = ext.covariance.view((0, 0), (n, n)) - &gain * cross.transpose();
        crate::ep::symmetrize(&mut cond_cov);
        let m_f = ext.mean.rows(0, n).into_owned();
        let directions = directions_for(self.data.n_stable(), self.data.n_unstable());
        let sd = v_star.sqrt();
        let mut log_dens = Vec::with_capacity(f_grid.len());
        for &f in f_grid {
            let log_f = if n == 0 || self.threshold == NO_TRUNCATION {
                0.0
            } else {
                let base = TiltedBase {
                    mean: &m_f + gain.column(0) * (f - m_star),
                    covariance: cond_cov.clone(),
                    log_norm: 0.0,
                };
                log_mass_at(self.threshold, &base, &directions, config)?
            };
            log_dens.push(norm_log_pdf((f - m_star) / sd) + log_f);
        }
        let top = log_dens.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return Err(Error::InvalidArgument("exact predictive density vanishes on the grid"));
        }
        Ok(log_dens.into_iter().map(|l| (l - top).exp()).collect())
    }
}

/// `Φ((c − m)/√v)`, with the zero-variance limit decided by the sign of `c − m`.
pub fn prob_below(threshold: f64, mean: f64, var: f64) -> f64 {
    if threshold == f64::INFINITY {
        return 1.0;
    }
    let sd = var.max(0.0).sqrt();
    if !(sd > 1e-300) {
        return if threshold >= mean { 1.0 } else { 0.0 };
    }
    norm_cdf((threshold - mean) / sd)
}

/// Turns tilted-base data plus EP sites into effective Gaussian observations.
fn pseudo_posterior(
    kernel: &KernelSpec,
    data: &HybridDataset,
    noise_var: &[f64],
    ep: &EpResult,
) -> Result<RegressionPosterior> {
    let ns = data.n_stable();
    let floor = 1.0 / (MAX_PSEUDO_NOISE_RATIO * kernel.variance());
    let mut obs = GaussianObservations::default();
    for (i, x) in data.points().into_iter().enumerate() {
        let tau = ep.site_precision[i];
        let nu = ep.site_shift[i];
        if i < ns {
            let y = data.stable_y()[i];
            let s2 = noise_var[i];
            if s2 == 0.0 {
                obs.push(x.to_vec(), y, 0.0);
            } else {
                let prec = 1.0 / s2 + tau;
                obs.push(x.to_vec(), (y / s2 + nu) / prec, 1.0 / prec);
            }
        } else if tau > floor {
            obs.push(x.to_vec(), nu / tau, 1.0 / tau);
        }
    }
    RegressionPosterior::new(kernel.clone(), obs)
}

/// Log-mass objective shared by the ML and MAP estimators.
struct ThresholdProblem {
    base: TiltedBase,
    directions: Vec<crate::ep::SiteDirection>,
    config: EpConfig,
}

impl ThresholdProblem {
    fn new(data: &HybridDataset, kernel: &KernelSpec, noise: &NoiseSpec, config: EpConfig) -> Result<Self> {
        check_dim(kernel.dim(), data.dim())?;
        let k = kernel_matrix(kernel, &data.points())?;
        let noise_var = data.relaxed_noise_var(kernel, noise);
        let base = tilted_base_heteroscedastic(&k, data.stable_y(), &noise_var, data.n_stable())?;
        Ok(Self {
            base,
            directions: directions_for(data.n_stable(), data.n_unstable()),
            config,
        })
    }

    fn log_mass(&self, c: f64) -> Result<f64> {
        log_mass_at(c, &self.base, &self.directions, &self.config)
    }
}

/// Number of grid points scanned before golden-section refinement.
pub const THRESHOLD_GRID: usize = 50;

/// Maximum-likelihood threshold: `argmax_c log F(c)` over `search_bounds`.
///
/// No stable data gives 0; all-stable data gives the upper bound, where the
/// likelihood keeps increasing. With stable data the search starts at the
/// largest observed stable value.
pub fn estimate_threshold_ml(
    data: &HybridDataset,
    kernel: &KernelSpec,
    noise: &NoiseSpec,
    search_bounds: (f64, f64),
) -> Result<f64> {
    estimate_threshold_ml_with(data, kernel, noise, search_bounds, &EpConfig::default())
}

pub fn estimate_threshold_ml_with(
    data: &HybridDataset,
    kernel: &KernelSpec,
    noise: &NoiseSpec,
    search_bounds: (f64, f64),
    config: &EpConfig,
) -> Result<f64> {
    let (lo, hi) = search_bounds;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidArgument("search bounds must be finite with lo < hi"));
    }
    if data.is_empty() {
        return Err(Error::InvalidArgument("threshold estimation needs at least one point"));
    }
    let Some(max_y) = data.max_stable_y() else {
        return Ok(0.0);
    };
    if data.n_unstable() == 0 {
        return Ok(hi);
    }
    let lo = lo.max(max_y);
    if lo >= hi {
        return Ok(lo);
    }
    let problem = ThresholdProblem::new(data, kernel, noise, *config)?;
    grid_golden_max(|c| problem.log_mass(c), lo, hi)
}

/// Maximum-a-posteriori threshold: `argmax_c log F(c) − ½((c − μ_c)/σ_c)²`.
///
/// The search covers `μ_c ± 3σ_c`, clipped below at the largest stable value.
/// If that value already lies above `μ_c + 3σ_c` the interval becomes
/// `[max y, max y + 3σ_c]`.
pub fn estimate_threshold_map(
    data: &HybridDataset,
    kernel: &KernelSpec,
    noise: &NoiseSpec,
    prior: &ThresholdPrior,
) -> Result<f64> {
    estimate_threshold_map_with(data, kernel, noise, prior, &EpConfig::default())
}

pub fn estimate_threshold_map_with(
    data: &HybridDataset,
    kernel: &KernelSpec,
    noise: &NoiseSpec,
    prior: &ThresholdPrior,
    config: &EpConfig,
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("threshold estimation needs at least one point"));
    }
    let Some(max_y) = data.max_stable_y() else {
        return Ok(0.0);
    };
    let mut lo = prior.mean() - 3.0 * prior.std_dev();
    let mut hi = prior.mean() + 3.0 * prior.std_dev();
    if max_y > lo {
        lo = max_y;
    }
    if lo >= hi {
        hi = lo + 3.0 * prior.std_dev();
    }
    let problem = ThresholdProblem::new(data, kernel, noise, *config)?;
    grid_golden_max(|c| Ok(problem.log_mass(c)? + prior.log_density(c)), lo, hi)
}

/// Grid scan followed by golden-section refinement around the best grid point.
fn grid_golden_max<F>(mut f: F, lo: f64, hi: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let n = THRESHOLD_GRID;
    let step = (hi - lo) / (n - 1) as f64;
    let mut best = (lo, f64::NEG_INFINITY);
    let mut best_i = 0;
    for i in 0..n {
        let c = lo + step * i as f64;
        let v = f(c)?;
        if v > best.1 {
            best = (c, v);
            best_i = i;
        }
    }
    let mut a = lo + step * best_i.saturating_sub(1) as f64;
    let mut b = (lo + step * (best_i + 1) as f64).min(hi);
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let tol = 1e-4 * (hi - lo);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
    }
    let (c, v) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    Ok(if v >= best.1 { c } else { best.0 })
}

/// Dense reference formulas, kept for tests.
#[doc(hidden)]
pub fn predict_dense(model: &GpcrModel, x: &[f64]) -> Result<(f64, f64)> {
    let pts = model.data.points();
    if pts.is_empty() {
        return Ok((0.0, model.kernel.variance()));
    }
    let k = kernel_matrix(&model.kernel, &pts)?;
    let kinv = k
        .clone()
        .try_inverse()
        .ok_or(Error::NotPositiveDefinite { jitter: 0.0 })?;
    let ks = model.kernel.cross_vector(x, &pts);
    let a = &kinv * &ks;
    let mean = a.dot(&model.ep.mean);
    let cov: &DMatrix<f64> = &model.ep.covariance;
    let var = model.kernel.variance() - ks.dot(&a) + a.dot(&(cov * &a));
    Ok((mean, var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use nalgebra::DVector;

    fn example2() -> (HybridDataset, KernelSpec, NoiseSpec) {
        let d = HybridDataset::from_parts(
            1,
            vec![vec![0.1], vec![0.3], vec![0.5]],
            vec![0.5, 2.0, 1.0],
            vec![vec![0.7], vec![0.9]],
        )
        .unwrap();
        (
            d,
            KernelSpec::isometric(0.5, 0.2, 1).unwrap(),
            NoiseSpec::new(0.02).unwrap(),
        )
    }

    #[test]
    fn empty_model_predicts_prior() {
        let k = KernelSpec::isometric(0.5, 0.2, 2).unwrap();
        let m = GpcrModel::fit(HybridDataset::new(2), k, NoiseSpec::new(0.1).unwrap(), 0.0).unwrap();
        let p = m.predict(&[vec![0.3, 0.3]]).unwrap();
        assert_eq!(p.mean, vec![0.0]);
        assert_eq!(p.variance, vec![0.5]);
        assert_eq!(m.prob_stable(&[0.1, 0.9]).unwrap(), 0.5);
    }

    #[test]
    fn sentinel_fit_matches_gp_regression() {
        let k = KernelSpec::isometric(1.3, 0.3, 1).unwrap();
        let d = HybridDataset::from_parts(
            1,
            vec![vec![0.0], vec![0.4], vec![0.45]],
            vec![0.2, -0.5, 0.1],
            vec![],
        )
        .unwrap();
        let s = 0.1;
        let m = GpcrModel::fit(d, k.clone(), NoiseSpec::new(s).unwrap(), NO_TRUNCATION).unwrap();
        assert_eq!(m.ep().mean, m.base().mean);
        let mut a = kernel_matrix(&k, &[[0.0], [0.4], [0.45]]).unwrap();
        for i in 0..3 {
            a[(i, i)] += s * s;
        }
        let ainv = a.try_inverse().unwrap();
        let y = DVector::from_vec(vec![0.2, -0.5, 0.1]);
        for x in [0.1, 0.42, 0.9] {
            let ks = k.cross_vector(&[x], &[[0.0], [0.4], [0.45]]);
            let mean = ks.dot(&(&ainv * &y));
            let var = 1.3 - ks.dot(&(&ainv * &ks));
            let (pm, pv) = m.predict_point(&[x]).unwrap();
            assert!((pm - mean).abs() < 1e-9 && (pv - var).abs() < 1e-9);
        }
    }

    #[test]
    fn pseudo_data_route_matches_dense_formula() {
        let (d, k, n) = example2();
        let m = GpcrModel::fit(d, k, n, 2.03).unwrap();
        for x in [0.0, 0.2, 0.45, 0.8, 1.0] {
            let (pm, pv) = m.predict_point(&[x]).unwrap();
            let (dm, dv) = predict_dense(&m, &[x]).unwrap();
            assert!((pm - dm).abs() < 1e-6, "{x}: {pm} {dm}");
            assert!((pv - dv).abs() < 1e-6, "{x}: {pv} {dv}");
        }
    }

    #[test]
    fn example_two_ml_threshold() {
        let (d, k, n) = example2();
        let c = estimate_threshold_ml(&d, &k, &n, (0.0, 10.0)).unwrap();
        assert!((c - 2.03).abs() < 0.15, "{c}");
    }

    #[test]
    fn example_two_stability_probabilities() {
        let (d, k, n) = example2();
        let m = GpcrModel::fit(d, k, n, 2.03).unwrap();
        assert!(m.prob_stable(&[0.3]).unwrap() > 0.5);
        assert!(m.prob_stable(&[0.8]).unwrap() < 0.5);
        let far = m.predict_point(&[30.0]).unwrap();
        assert!(far.0.abs() < 1e-3 && (far.1 - 0.5).abs() < 1e-3);
        assert!(m.predict_point(&[0.8]).unwrap().0 > m.predict_point(&[0.3]).unwrap().0);
    }

    #[test]
    fn ml_conventions() {
        let (_, k, n) = example2();
        let unstable = HybridDataset::from_parts(1, vec![], vec![], vec![vec![0.5]]).unwrap();
        assert_eq!(estimate_threshold_ml(&unstable, &k, &n, (-5.0, 5.0)).unwrap(), 0.0);
        let stable = HybridDataset::from_parts(1, vec![vec![0.5]], vec![0.3], vec![]).unwrap();
        assert_eq!(estimate_threshold_ml(&stable, &k, &n, (-5.0, 5.0)).unwrap(), 5.0);
        assert!(estimate_threshold_ml(&HybridDataset::new(1), &k, &n, (-5.0, 5.0)).is_err());
    }

    #[test]
    fn map_limits() {
        let (d, k, n) = example2();
        let ml = estimate_threshold_ml(&d, &k, &n, (2.0, 6.0)).unwrap();
        let wide = ThresholdPrior::new(4.0, 1e6).unwrap();
        let map = estimate_threshold_map(&d, &k, &n, &wide).unwrap();
        assert!((map - ml).abs() < 0.05, "{map} {ml}");
        let tight = ThresholdPrior::new(2.5, 1e-4).unwrap();
        let map = estimate_threshold_map(&d, &k, &n, &tight).unwrap();
        assert!((map - 2.5).abs() < 1e-4, "{map}");
    }

    #[test]
    fn coincident_points_relax_noise() {
        let k = KernelSpec::isometric(1.0, 0.2, 1).unwrap();
        let n = NoiseSpec::new(0.01).unwrap();
        let d = HybridDataset::from_parts(
            1,
            vec![vec![0.5], vec![0.1]],
            vec![1.0, 0.0],
            vec![vec![0.5 + 1e-5]],
        )
        .unwrap();
        let v = d.relaxed_noise_var(&k, &n);
        assert!((v[0] - 1e-2).abs() < 1e-15);
        assert!((v[1] - 1e-4).abs() < 1e-15);
        assert!(GpcrModel::fit(d, k, n, 1.2).is_ok());
    }

    #[test]
    fn sentinel_rejected_with_unstable_points() {
        let (d, k, n) = example2();
        assert!(GpcrModel::fit(d, k, n, NO_TRUNCATION).is_err());
    }
}
