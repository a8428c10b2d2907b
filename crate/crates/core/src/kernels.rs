//! Stationary covariance functions and the jittered Cholesky used by every
//! Gaussian-process computation in the crate.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{check_dim, Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Covariance family. Only Matérn 3/2 is implemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    Matern32,
}

/// Signal variance, per-dimension lengthscales and family of a stationary kernel.
///
/// An isometric kernel is one whose lengthscales are all equal.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    variance: f64,
    lengthscales: Vec<f64>,
    family: KernelFamily,
}

impl KernelSpec {
    pub fn matern32(variance: f64, lengthscales: Vec<f64>) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::InvalidArgument("kernel variance must be positive"));
        }
        if lengthscales.is_empty() {
            return Err(Error::InvalidArgument("at least one lengthscale is required"));
        }
        if lengthscales.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidArgument("lengthscales must be positive"));
        }
        Ok(Self {
            variance,
            lengthscales,
            family: KernelFamily::Matern32,
        })
    }

    /// Same lengthscale in every one of `dim` dimensions.
    pub fn isometric(variance: f64, lengthscale: f64, dim: usize) -> Result<Self> {
        Self::matern32(variance, vec![lengthscale; dim])
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn lengthscales(&self) -> &[f64] {
        &self.lengthscales
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// Euclidean distance between `x` and `x2` after dividing each axis by its lengthscale.
    pub fn scaled_distance(&self, x: &[f64], x2: &[f64]) -> f64 {
        let mut acc = 0.0;
        for ((a, b), l) in x.iter().zip(x2).zip(&self.lengthscales) {
            let d = (a - b) / l;
            acc += d * d;
        }
        acc.sqrt()
    }

    /// Covariance without dimension checks; callers validate once per point set.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], x2: &[f64]) -> f64 {
        match self.family {
            KernelFamily::Matern32 => {
                let r = SQRT3 * self.scaled_distance(x, x2);
                self.variance * (1.0 + r) * (-r).exp()
            }
        }
    }

    pub(crate) fn check_points<P: AsRef<[f64]>>(&self, xs: &[P]) -> Result<()> {
        for x in xs {
            check_dim(self.dim(), x.as_ref().len())?;
        }
        Ok(())
    }

    /// Covariances between one point and a set of points.
    pub fn cross_vector<P: AsRef<[f64]>>(&self, x: &[f64], xs: &[P]) -> DVector<f64> {
        DVector::from_iterator(xs.len(), xs.iter().map(|p| self.eval_unchecked(x, p.as_ref())))
    }
}

/// Observation noise standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    std_dev: f64,
}

impl NoiseSpec {
    pub fn new(std_dev: f64) -> Result<Self> {
        if !(std_dev >= 0.0) || !std_dev.is_finite() {
            return Err(Error::InvalidArgument("noise standard deviation must be non-negative"));
        }
        Ok(Self { std_dev })
    }

    pub fn std_dev(&self) -> f64 {
        self.std_dev
    }

    pub fn variance(&self) -> f64 {
        self.std_dev * self.std_dev
    }
}

/// Matérn 3/2 covariance `ν (1 + √3 r) exp(−√3 r)` with `r` the lengthscale-scaled distance.
pub fn matern32(spec: &KernelSpec, x: &[f64], x2: &[f64]) -> Result<f64> {
    check_dim(spec.dim(), x.len())?;
    check_dim(spec.dim(), x2.len())?;
    Ok(spec.eval_unchecked(x, x2))
}

/// Symmetric prior covariance matrix over a point set.
pub fn kernel_matrix<P: AsRef<[f64]>>(spec: &KernelSpec, xs: &[P]) -> Result<DMatrix<f64>> {
    spec.check_points(xs)?;
    let n = xs.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = spec.variance;
        for j in 0..i {
            let v = spec.eval_unchecked(xs[i].as_ref(), xs[j].as_ref());
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// Rectangular covariance block `K[i][j] = k(a_i, b_j)`.
pub fn cross_matrix<P: AsRef<[f64]>, Q: AsRef<[f64]>>(
    spec: &KernelSpec,
    a: &[P],
    b: &[Q],
) -> Result<DMatrix<f64>> {
    spec.check_points(a)?;
    spec.check_points(b)?;
    Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| {
        spec.eval_unchecked(a[i].as_ref(), b[j].as_ref())
    }))
}

/// Relative jitter of the first factorization attempt.
pub const JITTER_START: f64 = 1e-10;
/// Largest relative jitter tried before giving up.
pub const JITTER_CAP: f64 = 1e-4;

/// A Cholesky factor of `M + jitter·I`.
#[derive(Debug, Clone)]
pub struct JitteredCholesky {
    chol: Cholesky<f64, Dyn>,
    jitter: f64,
}

impl JitteredCholesky {
    pub fn l(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    /// Solves `L x = b` only.
    pub fn solve_lower_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut out = b.clone();
        self.chol.l_dirty().solve_lower_triangular_mut(&mut out);
        out
    }

    pub fn solve_lower(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = b.clone();
        self.chol.l_dirty().solve_lower_triangular_mut(&mut out);
        out
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }

    pub fn ln_determinant(&self) -> f64 {
        self.chol.ln_determinant()
    }
}

/// Plain Cholesky when `m` is numerically positive definite, otherwise the
/// jittered schedule of [`cholesky_with_jitter`].
pub fn cholesky_exact_or_jittered(m: &DMatrix<f64>) -> Result<JitteredCholesky> {
    if m.is_square() {
        if let Some(chol) = Cholesky::new(m.clone()) {
            return Ok(JitteredCholesky { chol, jitter: 0.0 });
        }
    }
    cholesky_with_jitter(m)
}

/// Cholesky factorization with geometrically escalating diagonal jitter.
///
/// The jitter starts at `1e-10` and grows by ×10 up to `1e-4`, each value
/// scaled by the mean diagonal magnitude of `m` (so an identity input gets
/// exactly `1e-10`). The applied absolute jitter is reported.
pub fn cholesky_with_jitter(m: &DMatrix<f64>) -> Result<JitteredCholesky> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let n = m.nrows();
    let scale = if n == 0 {
        1.0
    } else {
        let s = m.diagonal().iter().map(|d| d.abs()).sum::<f64>() / n as f64;
        if s > 0.0 && s.is_finite() {
            s
        } else {
            1.0
        }
    };
    let mut rel = JITTER_START;
    loop {
        let jitter = rel * scale;
        let mut a = m.clone();
        for i in 0..n {
            a[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(a) {
            return Ok(JitteredCholesky { chol, jitter });
        }
        if rel >= JITTER_CAP * (1.0 - 1e-9) {
            return Err(Error::NotPositiveDefinite { jitter });
        }
        rel = (rel * 10.0).min(JITTER_CAP);
    }
}
