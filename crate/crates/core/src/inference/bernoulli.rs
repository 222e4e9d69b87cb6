use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{decompose, Decomposition, Method};

/// Successes `k` out of `n` trials in one arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub k: u64,
    pub n: u64,
}

impl Counts {
    pub fn new(k: u64, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("trial count must be positive"));
        }
        if k > n {
            return Err(Error::invalid(format!("{k} successes exceed {n} trials")));
        }
        Ok(Counts { k, n })
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// Binomial variance of the rate, `p(1-p)/n`.
    pub fn rate_variance(&self) -> f64 {
        let p = self.rate();
        p * (1.0 - p) / self.n as f64
    }
}

/// Difference of rates `k2/n2 - k1/n1` with unpooled binomial standard error.
pub fn bernoulli_se(k1: u64, n1: u64, k2: u64, n2: u64) -> Result<(f64, f64)> {
    let (a, b) = (Counts::new(k1, n1)?, Counts::new(k2, n2)?);
    Ok((b.rate() - a.rate(), (a.rate_variance() + b.rate_variance()).sqrt()))
}

/// Decomposition of three arm rates with Bernoulli standard errors.
pub fn bernoulli_decomposition(arms: [Counts; 3], ci_level: f64) -> Result<Decomposition> {
    let [a, b, c] = arms;
    let v = [a.rate_variance(), b.rate_variance(), c.rate_variance()];
    decompose(a.rate(), b.rate(), c.rate())?.with_se(
        [(v[0] + v[1]).sqrt(), (v[1] + v[2]).sqrt(), (v[0] + v[2]).sqrt()],
        ci_level,
        Method::Bernoulli,
    )
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn zero_successes_have_zero_se() {
        assert_eq!(bernoulli_se(0, 10, 0, 20).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn equal_counts_give_zero_difference() {
        assert_eq!(bernoulli_se(30, 100, 30, 100).unwrap().0, 0.0);
    }

    #[test]
    fn hand_arithmetic() {
        let (d, se) = bernoulli_se(1, 4, 1, 2).unwrap();
        assert_abs_diff_eq!(d, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(se, (0.1875f64 / 4.0 + 0.125).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn rejects_empty_or_inconsistent() {
        assert!(bernoulli_se(0, 0, 1, 2).is_err());
        assert!(bernoulli_se(3, 2, 1, 2).is_err());
    }
}
