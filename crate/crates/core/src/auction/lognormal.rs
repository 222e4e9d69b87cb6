use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{normal_cdf, normal_quantile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormal {
    pub log_mu: f64,
    pub log_sigma: f64,
}

impl LogNormal {
    pub fn quantile(&self, p: f64) -> f64 {
        (self.log_mu + self.log_sigma * normal_quantile(p)).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        normal_cdf((x.ln() - self.log_mu) / self.log_sigma)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        (self.log_mu + self.log_sigma * z).exp()
    }
}

/// Recover `(log_mu, log_sigma)` from two `(value, percentile)` quantiles by
/// solving `ln v = μ + z_p σ` at both points.
pub fn calibrate_lognormal(q1: (f64, f64), q2: (f64, f64)) -> Result<(f64, f64)> {
    let ((v1, p1), (v2, p2)) = (q1, q2);
    for (v, p) in [q1, q2] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("quantile value must be positive, got {v}")));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid(format!("percentile must lie in (0, 1), got {p}")));
        }
    }
    if p1 == p2 {
        return Err(Error::Degenerate(format!("both quantiles sit at percentile {p1}")));
    }
    let (z1, z2) = (normal_quantile(p1), normal_quantile(p2));
    let sigma = (v2.ln() - v1.ln()) / (z2 - z1);
    if !(sigma > 0.0) {
        return Err(Error::Degenerate(format!(
            "quantiles ({v1}, {p1}) and ({v2}, {p2}) imply non-positive log scale {sigma}"
        )));
    }
    let mu = v1.ln() - z1 * sigma;
    Ok((mu, sigma))
}
