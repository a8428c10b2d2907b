//! Scalar Gaussian utilities: density, distribution function, a tail-safe
//! log-CDF, and the moments of one-sided truncated normals.
//!
//! Deep in the lower tail (`z < -6`) everything is routed through the Laplace
//! continued fraction of the Mills ratio, so neither `Φ(z)` nor the ratio
//! `φ(z)/Φ(z)` is ever formed from underflowing pieces.


#[allow(unused_imports)]
use num_traits::Float;
use crate::error::{Error, Result};

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const FRAC_1_SQRT_2: f64 = core::f64::consts::FRAC_1_SQRT_2;

/// Below `-TAIL_SWITCH` the continued-fraction branch is used.
const TAIL_SWITCH: f64 = 6.0;
const CF_DEPTH: usize = 160;

/// `log_mass` below which the truncated distribution is treated as a point mass at the bound.
pub const DEGENERATE_LOG_MASS: f64 = -300.0;

pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z - LN_SQRT_2PI).exp()
}

pub fn norm_log_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Continued-fraction levels `t1 = 1/(x + t2)`, `t2 = 2/(x + t3)`, ... for `x > 0`.
///
/// `x + t1` is the inverse Mills ratio `φ(x)/Q(x)`.
fn mills_levels(x: f64) -> (f64, f64) {
    let mut t = 0.0;
    let mut t2 = 0.0;
    for k in (1..=CF_DEPTH).rev() {
        if k == 1 {
            t2 = t;
        }
        t = k as f64 / (x + t);
    }
    (t, t2)
}

/// `log Φ(z)`, accurate across the whole real line and finite for any finite `z`.
pub fn norm_log_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z < -TAIL_SWITCH {
        if z == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let x = -z;
        let (t1, _) = mills_levels(x);
        norm_log_pdf(x) - (x + t1).ln()
    } else if z > 0.0 {
        (-0.5 * libm::erfc(z * FRAC_1_SQRT_2)).ln_1p()
    } else {
        norm_cdf(z).ln()
    }
}

/// `φ(z)/Φ(z)` without underflow.
pub fn inverse_mills(z: f64) -> f64 {
    if z < -TAIL_SWITCH {
        let x = -z;
        let (t1, _) = mills_levels(x);
        x + t1
    } else {
        (norm_log_pdf(z) - norm_log_cdf(z)).exp()
    }
}

/// Which side of the bound the mass is kept on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Keep `f ≤ bound`.
    Upper,
    /// Keep `f ≥ bound`.
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedMoments {
    pub log_mass: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Mass, mean and variance of `N(mu, var)` restricted to one side of `bound`.
pub fn truncated_moments(mu: f64, var: f64, bound: f64, side: Side) -> Result<TruncatedMoments> {
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::InvalidArgument("truncated_moments requires a positive variance"));
    }
    Ok(match side {
        Side::Upper => upper_moments(mu, var, bound),
        Side::Lower => {
            let m = upper_moments(-mu, var, -bound);
            TruncatedMoments {
                log_mass: m.log_mass,
                mean: -m.mean,
                variance: m.variance,
            }
        }
    })
}

fn upper_moments(mu: f64, var: f64, bound: f64) -> TruncatedMoments {
    let sd = var.sqrt();
    let beta = (bound - mu) / sd;
    if beta == f64::INFINITY {
        return TruncatedMoments {
            log_mass: 0.0,
            mean: mu,
            variance: var,
        };
    }
    let log_mass = norm_log_cdf(beta);
    if !(log_mass >= DEGENERATE_LOG_MASS) {
        return TruncatedMoments {
            log_mass,
            mean: bound,
            variance: 0.0,
        };
    }
    let (lambda, factor) = if beta < -TAIL_SWITCH {
        // 1 − βλ − λ² rewritten as (t2 − t1)/(x + t2) to avoid cancellation
        let x = -beta;
        let (t1, t2) = mills_levels(x);
        (x + t1, (t2 - t1) / (x + t2))
    } else {
        let lambda = (norm_log_pdf(beta) - log_mass).exp();
        (lambda, 1.0 - beta * lambda - lambda * lambda)
    };
    TruncatedMoments {
        log_mass,
        mean: mu - sd * lambda,
        variance: var * factor.clamp(0.0, 1.0),
    }
}
