//! Expectation propagation for a multivariate Gaussian restricted to an
//! orthant-like box: each coordinate is truncated on one side of a shared
//! threshold `c`.
//!
//! The Gaussian likelihood of the stable observations is folded into the
//! prior analytically (the [`TiltedBase`]); EP then only handles the
//! Heaviside factors, one scalar Gaussian site per coordinate.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::kernels::{cholesky_exact_or_jittered, NoiseSpec};
use crate::trunc_gauss::{truncated_moments, Side, LN_SQRT_2PI};

/// Unnormalized Gaussian `exp(log_norm) · N(f; mean, covariance)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedBase {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub log_norm: f64,
}

impl TiltedBase {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Which side of the threshold a latent value is constrained to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteDirection {
    /// `f_i ≤ c`
    Stable,
    /// `f_i ≥ c`
    Unstable,
}

impl SiteDirection {
    fn side(self) -> Side {
        match self {
            SiteDirection::Stable => Side::Upper,
            SiteDirection::Unstable => Side::Lower,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpConfig {
    /// Convergence threshold on the largest relative site-parameter change in a sweep.
    pub tolerance: f64,
    pub max_sweeps: usize,
    /// Fraction of the moment-matched update applied each time (1 = undamped).
    pub damping: f64,
    pub min_cavity_variance: f64,
}

impl Default for EpConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_sweeps: 50,
            damping: 0.8,
            min_cavity_variance: 1e-10,
        }
    }
}

impl EpConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("EP tolerance must be positive"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidArgument("EP damping must lie in (0, 1]"));
        }
        if !(self.min_cavity_variance > 0.0) {
            return Err(Error::InvalidArgument("minimum cavity variance must be positive"));
        }
        Ok(())
    }
}

/// Gaussian approximation `exp(log_mass) · N(mean, covariance)` of the truncated base.
#[derive(Debug, Clone, PartialEq)]
pub struct EpResult {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub log_mass: f64,
    pub converged: bool,
    pub sweeps_used: usize,
    /// Site updates skipped because the cavity variance was too small.
    pub skipped_updates: usize,
    /// Natural parameters of the Gaussian sites: precision `τ_i` ...
    pub site_precision: DVector<f64>,
    /// ... and precision-times-mean `ν_i`.
    pub site_shift: DVector<f64>,
}

impl EpResult {
    pub(crate) fn from_base(base: &TiltedBase) -> Self {
        let n = base.dim();
        Self {
            mean: base.mean.clone(),
            covariance: base.covariance.clone(),
            log_mass: base.log_norm,
            converged: true,
            sweeps_used: 0,
            skipped_updates: 0,
            site_precision: DVector::zeros(n),
            site_shift: DVector::zeros(n),
        }
    }
}

/// Folds `N(y_s | f_s, σ_n² I)` into the prior `N(f | 0, K)`.
///
/// The first `n_stable` coordinates of `k` belong to the observed values `y_s`.
pub fn tilted_base(
    k: &DMatrix<f64>,
    y_stable: &[f64],
    noise: &NoiseSpec,
    n_stable: usize,
) -> Result<TiltedBase> {
    let noise_var = alloc::vec![noise.variance(); n_stable];
    tilted_base_heteroscedastic(k, y_stable, &noise_var, n_stable)
}

/// As [`tilted_base`] but with one noise variance per stable observation.
pub fn tilted_base_heteroscedastic(
    k: &DMatrix<f64>,
    y_stable: &[f64],
    noise_var: &[f64],
    n_stable: usize,
) -> Result<TiltedBase> {
    check_dim(k.nrows(), k.ncols())?;
    check_dim(n_stable, y_stable.len())?;
    check_dim(n_stable, noise_var.len())?;
    if n_stable > k.nrows() {
        return Err(Error::DimensionMismatch {
            expected: k.nrows(),
            got: n_stable,
        });
    }
    let n = k.nrows();
    if n_stable == 0 {
        return Ok(TiltedBase {
            mean: DVector::zeros(n),
            covariance: k.clone(),
            log_norm: 0.0,
        });
    }
    // marginal of the observations: y_s ~ N(0, K_ss + D)
    let mut a = k.view((0, 0), (n_stable, n_stable)).into_owned();
    for (i, v) in noise_var.iter().enumerate() {
        a[(i, i)] += v;
    }
    let chol = cholesky_exact_or_jittered(&a)?;
    let y = DVector::from_column_slice(y_stable);
    let k_cols = k.columns(0, n_stable).into_owned(); // n × n_s
    let alpha = chol.solve_vec(&y);
    let mean = &k_cols * &alpha;
    let w = chol.solve_lower(&k_cols.transpose()); // L⁻¹ K_sf
    let mut covariance = k - w.transpose() * &w;
    symmetrize(&mut covariance);
    let half_quad = 0.5 * y.dot(&alpha);
    let log_norm = -half_quad - 0.5 * chol.ln_determinant() - n_stable as f64 * LN_SQRT_2PI;
    Ok(TiltedBase {
        mean,
        covariance,
        log_norm,
    })
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Cavity of site `i`: the current marginal with the site divided out.
fn cavity(sigma_ii: f64, mu_i: f64, tau: f64, nu: f64) -> Option<(f64, f64)> {
    let prec = 1.0 / sigma_ii - tau;
    if !(prec > 0.0) || !prec.is_finite() {
        return None;
    }
    let var = 1.0 / prec;
    Some((var * (mu_i / sigma_ii - nu), var))
}

/// Recomputes the approximate posterior from the base and the site parameters.
///
/// With `S = diag(τ)` and `B = I + S^½ Σ̃ S^½`:
/// `Σ = Σ̃ − Σ̃ S^½ B⁻¹ S^½ Σ̃` and `μ = m̃ + Σ̃ S^½ B⁻¹ w`, `w = S^½ (μ̃ − m̃)`.
struct Refreshed {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    ln_det_b: f64,
    quad: f64,
}

fn refresh(base: &TiltedBase, tau: &DVector<f64>, nu: &DVector<f64>) -> Result<Refreshed> {
    let n = base.dim();
    let sqrt_tau = tau.map(|t| t.max(0.0).sqrt());
    let w = DVector::from_fn(n, |i, _| {
        let s = sqrt_tau[i];
        if s > 0.0 {
            nu[i] / s - s * base.mean[i]
        } else {
            0.0
        }
    });
    let mut b = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] += sqrt_tau[i] * base.covariance[(i, j)] * sqrt_tau[j];
        }
    }
    let chol = cholesky_exact_or_jittered(&b)?;
    // V = L⁻¹ S^½ Σ̃
    let mut s_sigma = base.covariance.clone();
    for i in 0..n {
        let s = sqrt_tau[i];
        s_sigma.row_mut(i).scale_mut(s);
    }
    let v = chol.solve_lower(&s_sigma);
    let mut covariance = &base.covariance - v.transpose() * &v;
    symmetrize(&mut covariance);
    let lw = chol.solve_lower_vec(&w);
    let mean = &base.mean + v.transpose() * &lw;
    Ok(Refreshed {
        mean,
        covariance,
        ln_det_b: chol.ln_determinant(),
        quad: lw.dot(&lw),
    })
}

/// Sequential, damped EP over the per-coordinate Heaviside factors.
pub fn ep_box_posterior(
    base: &TiltedBase,
    directions: &[SiteDirection],
    threshold: f64,
    config: &EpConfig,
) -> Result<EpResult> {
    config.validate()?;
    check_dim(base.dim(), directions.len())?;
    let n = base.dim();
    if n == 0 {
        return Ok(EpResult::from_base(base));
    }
    if threshold.is_nan() {
        return Err(Error::InvalidArgument("threshold must not be NaN"));
    }

    let mut tau = DVector::<f64>::zeros(n);
    let mut nu = DVector::<f64>::zeros(n);
    let mut mu = base.mean.clone();
    let mut sigma = base.covariance.clone();
    let mut converged = false;
    let mut sweeps_used = 0;
    let mut skipped = 0;
    let mut col = DVector::<f64>::zeros(n);

    for sweep in 1..=config.max_sweeps {
        sweeps_used = sweep;
        let mut max_change: f64 = 0.0;
        for i in 0..n {
            let Some((cav_mean, cav_var)) = cavity(sigma[(i, i)], mu[i], tau[i], nu[i]) else {
                skipped += 1;
                continue;
            };
            if cav_var < config.min_cavity_variance {
                skipped += 1;
                continue;
            }
            let m = truncated_moments(cav_mean, cav_var, threshold, directions[i].side())?;
            let post_var = m.variance.max(cav_var * 1e-14).max(1e-300);
            let tau_match = (1.0 / post_var - 1.0 / cav_var).max(0.0);
            let nu_match = m.mean / post_var - cav_mean / cav_var;
            let new_tau = tau[i] + config.damping * (tau_match - tau[i]);
            let new_nu = nu[i] + config.damping * (nu_match - nu[i]);
            let d_tau = new_tau - tau[i];
            let d_nu = new_nu - nu[i];
            max_change = max_change
                .max(d_tau.abs() / tau[i].abs().max(new_tau.abs()).max(1.0))
                .max(d_nu.abs() / nu[i].abs().max(new_nu.abs()).max(1.0));
            if d_tau == 0.0 && d_nu == 0.0 {
                continue;
            }
            // rank-one update of the joint approximation
            let denom = 1.0 + d_tau * sigma[(i, i)];
            col.copy_from(&sigma.column(i));
            let shift = (d_nu - d_tau * mu[i]) / denom;
            mu.axpy(shift, &col, 1.0);
            let a = d_tau / denom;
            sigma.ger(-a, &col, &col, 1.0);
            tau[i] = new_tau;
            nu[i] = new_nu;
        }
        // drop accumulated round-off from the rank-one updates
        let r = refresh(base, &tau, &nu)?;
        mu = r.mean;
        sigma = r.covariance;
        if max_change < config.tolerance {
            converged = true;
            break;
        }
    }

    let r = refresh(base, &tau, &nu)?;
    let log_mass = assemble_log_mass(base, directions, threshold, &tau, &nu, &r)?;
    Ok(EpResult {
        mean: r.mean,
        covariance: r.covariance,
        log_mass,
        converged,
        sweeps_used,
        skipped_updates: skipped,
        site_precision: tau,
        site_shift: nu,
    })
}

/// EP estimate of `log ∫ base(f) Π_i H(±(c − f_i)) df`.
fn assemble_log_mass(
    base: &TiltedBase,
    directions: &[SiteDirection],
    threshold: f64,
    tau: &DVector<f64>,
    nu: &DVector<f64>,
    r: &Refreshed,
) -> Result<f64> {
    let mut total = base.log_norm - 0.5 * r.quad - 0.5 * r.ln_det_b;
    for i in 0..base.dim() {
        let Some((cav_mean, cav_var)) = cavity(r.covariance[(i, i)], r.mean[i], tau[i], nu[i])
        else {
            continue;
        };
        let m = truncated_moments(cav_mean, cav_var, threshold, directions[i].side())?;
        let t = tau[i].max(0.0);
        let s = t.sqrt();
        let resid = if s > 0.0 { s * cav_mean - nu[i] / s } else { 0.0 };
        let scale = 1.0 + t * cav_var;
        total += m.log_mass + 0.5 * scale.ln() + 0.5 * resid * resid / scale;
    }
    Ok(total)
}

/// `log F(c)`: the EP log-mass of the truncated base at threshold `c`.
pub fn log_mass_at(
    threshold: f64,
    base: &TiltedBase,
    directions: &[SiteDirection],
    config: &EpConfig,
) -> Result<f64> {
    Ok(ep_box_posterior(base, directions, threshold, config)?.log_mass)
}

/// Direction pattern for `n_stable` stable points followed by `n_unstable` unstable ones.
pub fn directions_for(n_stable: usize, n_unstable: usize) -> Vec<SiteDirection> {
    let mut d = Vec::with_capacity(n_stable + n_unstable);
    d.resize(n_stable, SiteDirection::Stable);
    d.resize(n_stable + n_unstable, SiteDirection::Unstable);
    d
}
