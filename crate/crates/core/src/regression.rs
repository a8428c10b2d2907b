//! Gaussian-process regression on heteroscedastic Gaussian observations.
//!
//! Every Gaussian posterior in the crate, including the EP approximation of
//! a GPCR model, is expressed as a set of effective observations
//! `(x_i, target_i, noise_var_i)` under the zero-mean kernel prior. This is
//! the representation that virtual evaluations extend one point at a time.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{check_dim, Result};
use crate::kernels::{cholesky_exact_or_jittered, kernel_matrix, JitteredCholesky, KernelSpec};

/// Effective Gaussian observations `target_i ~ N(f(x_i), noise_var_i)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GaussianObservations {
    pub points: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub noise_var: Vec<f64>,
}

impl GaussianObservations {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push(&mut self, x: Vec<f64>, target: f64, noise_var: f64) {
        self.points.push(x);
        self.targets.push(target);
        self.noise_var.push(noise_var);
    }

    /// `K + diag(noise_var)` over the stored points.
    pub fn covariance(&self, kernel: &KernelSpec) -> Result<DMatrix<f64>> {
        let mut a = kernel_matrix(kernel, &self.points)?;
        for (i, v) in self.noise_var.iter().enumerate() {
            a[(i, i)] += v;
        }
        Ok(a)
    }
}

/// Factorized regression posterior.
#[derive(Debug, Clone)]
pub struct RegressionPosterior {
    kernel: KernelSpec,
    obs: GaussianObservations,
    chol: Option<JitteredCholesky>,
    alpha: DVector<f64>,
}

impl RegressionPosterior {
    pub fn new(kernel: KernelSpec, obs: GaussianObservations) -> Result<Self> {
        kernel.check_points(&obs.points)?;
        check_dim(obs.len(), obs.targets.len())?;
        check_dim(obs.len(), obs.noise_var.len())?;
        if obs.is_empty() {
            return Ok(Self {
                kernel,
                obs,
                chol: None,
                alpha: DVector::zeros(0),
            });
        }
        let a = obs.covariance(&kernel)?;
        let chol = cholesky_exact_or_jittered(&a)?;
        let alpha = chol.solve_vec(&DVector::from_column_slice(&obs.targets));
        Ok(Self {
            kernel,
            obs,
            chol: Some(chol),
            alpha,
        })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn observations(&self) -> &GaussianObservations {
        &self.obs
    }

    /// `(K + D)⁻¹` over the stored observations, for incremental extension.
    pub fn inverse(&self) -> DMatrix<f64> {
        match &self.chol {
            Some(c) => c.inverse(),
            None => DMatrix::zeros(0, 0),
        }
    }

    /// Predictive latent mean and variance at one point (no dimension check).
    pub fn predict_unchecked(&self, x: &[f64]) -> (f64, f64) {
        let prior = self.kernel.variance();
        let Some(chol) = &self.chol else {
            return (0.0, prior);
        };
        let k = self.kernel.cross_vector(x, &self.obs.points);
        let mean = k.dot(&self.alpha);
        let v = chol.solve_lower_vec(&k);
        let var = (prior - v.dot(&v)).clamp(0.0, prior);
        (mean, var)
    }

    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        check_dim(self.kernel.dim(), x.len())?;
        Ok(self.predict_unchecked(x))
    }

    /// Predictive means and variances for a batch of points.
    pub fn predict_many<P: AsRef<[f64]>>(&self, xs: &[P]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.kernel.check_points(xs)?;
        let prior = self.kernel.variance();
        let Some(chol) = &self.chol else {
            return Ok((alloc::vec![0.0; xs.len()], alloc::vec![prior; xs.len()]));
        };
        let kfs = DMatrix::from_fn(self.obs.len(), xs.len(), |i, j| {
            self.kernel.eval_unchecked(&self.obs.points[i], xs[j].as_ref())
        });
        let means = kfs.transpose() * &self.alpha;
        let v = chol.solve_lower(&kfs);
        let vars = (0..xs.len())
            .map(|j| {
                let c = v.column(j);
                (prior - c.dot(&c)).clamp(0.0, prior)
            })
            .collect();
        Ok((means.iter().copied().collect(), vars))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn empty_posterior_is_prior() {
        let k = KernelSpec::isometric(0.7, 0.3, 2).unwrap();
        let p = RegressionPosterior::new(k, GaussianObservations::default()).unwrap();
        assert_eq!(p.predict(&[0.1, 0.2]).unwrap(), (0.0, 0.7));
    }

    #[test]
    fn single_observation_matches_scalar_formula() {
        let k = KernelSpec::isometric(2.0, 0.3, 1).unwrap();
        let mut obs = GaussianObservations::default();
        obs.push(vec![0.5], 1.0, 0.5);
        let p = RegressionPosterior::new(k, obs).unwrap();
        let (m, v) = p.predict(&[0.5]).unwrap();
        assert!((m - 2.0 / 2.5).abs() < 1e-12);
        assert!((v - (2.0 - 4.0 / 2.5)).abs() < 1e-12);
        let (mb, vb) = p.predict_many(&[[0.5]]).unwrap();
        assert!((mb[0] - m).abs() < 1e-14 && (vb[0] - v).abs() < 1e-14);
    }
}
