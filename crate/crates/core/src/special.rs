//! Thin wrappers over the special functions used across the crate.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::beta;

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal parameters are valid")
}

pub fn normal_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

/// Upper tail `1 - Φ(x)`, accurate for large `x`.
pub fn normal_sf(x: f64) -> f64 {
    std_normal().sf(x)
}

pub fn normal_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

/// Two-sided p-value of a z statistic under the standard normal reference.
pub fn two_sided_p(t: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    (2.0 * normal_sf(t.abs())).min(1.0)
}

/// Regularized incomplete beta `I_x(a, b)`, clamping `x` into `[0, 1]`.
pub fn beta_cdf(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        beta::beta_reg(a, b, x)
    }
}

pub fn beta_quantile(a: f64, b: f64, p: f64) -> f64 {
    beta::inv_beta_reg(a, b, p.clamp(0.0, 1.0))
}
