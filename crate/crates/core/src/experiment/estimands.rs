use serde::{Deserialize, Serialize};

use crate::arm::Arm;
use crate::error::{Error, Result};
use crate::special::normal_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Estimand {
    Nie,
    Nde,
    Te,
}

impl Estimand {
    pub const ALL: [Estimand; 3] = [Estimand::Nie, Estimand::Nde, Estimand::Te];

    pub fn label(self) -> &'static str {
        match self {
            Estimand::Nie => "NIE",
            Estimand::Nde => "NDE",
            Estimand::Te => "TE",
        }
    }
}

impl std::fmt::Display for Estimand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// How the standard errors of a [`Decomposition`] were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Point estimates only.
    Point,
    MonteCarloPaired,
    Neyman,
    Hc3,
    Bernoulli,
}

/// Natural indirect, natural direct and total effect of moving from arm 1 to
/// arm 3 through arm 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub nie: f64,
    pub nde: f64,
    pub te: f64,
    pub se_nie: Option<f64>,
    pub se_nde: Option<f64>,
    pub se_te: Option<f64>,
    pub ci_level: f64,
    pub method: Method,
}

impl Decomposition {
    pub fn estimate(&self, e: Estimand) -> f64 {
        match e {
            Estimand::Nie => self.nie,
            Estimand::Nde => self.nde,
            Estimand::Te => self.te,
        }
    }

    pub fn se(&self, e: Estimand) -> Option<f64> {
        match e {
            Estimand::Nie => self.se_nie,
            Estimand::Nde => self.se_nde,
            Estimand::Te => self.se_te,
        }
    }

    /// Normal-approximation confidence interval at `ci_level`.
    pub fn ci(&self, e: Estimand) -> Option<(f64, f64)> {
        let z = normal_quantile(0.5 + self.ci_level / 2.0);
        self.se(e).map(|se| (self.estimate(e) - z * se, self.estimate(e) + z * se))
    }

    pub fn t_stat(&self, e: Estimand) -> Option<f64> {
        self.se(e).map(|se| self.estimate(e) / se)
    }

    /// Attach standard errors computed elsewhere.
    pub fn with_se(mut self, se: [f64; 3], ci_level: f64, method: Method) -> Result<Self> {
        if let Some(bad) = se.iter().find(|s| !(**s >= 0.0)) {
            return Err(Error::Numerical(format!("standard error {bad} is not a nonnegative number")));
        }
        if !(ci_level > 0.0 && ci_level < 1.0) {
            return Err(Error::invalid(format!("ci_level must lie in (0, 1), got {ci_level}")));
        }
        self.se_nie = Some(se[0]);
        self.se_nde = Some(se[1]);
        self.se_te = Some(se[2]);
        self.ci_level = ci_level;
        self.method = method;
        Ok(self)
    }

    /// Multiply estimates and standard errors by `factor`, e.g. 100 for
    /// percentage points.
    pub fn scaled(&self, factor: f64) -> Self {
        let s = |x: Option<f64>| x.map(|v| v * factor.abs());
        Decomposition {
            nie: self.nie * factor,
            nde: self.nde * factor,
            te: self.te * factor,
            se_nie: s(self.se_nie),
            se_nde: s(self.se_nde),
            se_te: s(self.se_te),
            ..*self
        }
    }

    /// `|TE - (NIE + NDE)|` relative to `max(1, |TE|)`.
    pub fn identity_error(&self) -> f64 {
        (self.te - (self.nie + self.nde)).abs() / self.te.abs().max(1.0)
    }
}

/// Point decomposition of three arm means.
pub fn decompose(y1: f64, y2: f64, y3: f64) -> Result<Decomposition> {
    if !(y1.is_finite() && y2.is_finite() && y3.is_finite()) {
        return Err(Error::invalid(format!("arm means must be finite, got ({y1}, {y2}, {y3})")));
    }
    let nie = y2 - y1;
    let nde = y3 - y2;
    Ok(Decomposition {
        nie,
        nde,
        te: nie + nde,
        se_nie: None,
        se_nde: None,
        se_te: None,
        ci_level: 0.95,
        method: Method::Point,
    })
}

/// Variance of a difference of two independent arm means.
pub fn neyman_var(var_a: f64, n_a: usize, var_b: f64, n_b: usize) -> Result<f64> {
    if n_a == 0 || n_b == 0 {
        return Err(Error::invalid("arm sizes must be positive"));
    }
    if !(var_a >= 0.0 && var_b >= 0.0) {
        return Err(Error::invalid(format!("variances must be nonnegative, got {var_a} and {var_b}")));
    }
    Ok(var_a / n_a as f64 + var_b / n_b as f64)
}

/// Per-arm outcome summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub arm: Arm,
    pub mean: f64,
    pub variance: f64,
    pub n: usize,
}

impl ArmSummary {
    pub fn from_values(arm: Arm, values: &[f64]) -> Result<Self> {
        let (mean, variance) = mean_var(values)?;
        Ok(ArmSummary { arm, mean, variance, n: values.len() })
    }
}

/// Sample mean and unbiased sample variance (zero for a single value).
pub fn mean_var(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::invalid("cannot summarize an empty sample"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() < 2 {
        0.0
    } else {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    };
    Ok((mean, var))
}

/// Neyman decomposition from three independent arm summaries. The NDE and TE
/// variances are the two-arm variances of their defining differences.
pub fn neyman_decomposition(arms: &[ArmSummary; 3], ci_level: f64) -> Result<Decomposition> {
    let [a1, a2, a3] = arms;
    let d = decompose(a1.mean, a2.mean, a3.mean)?;
    let se = [
        neyman_var(a2.variance, a2.n, a1.variance, a1.n)?.sqrt(),
        neyman_var(a3.variance, a3.n, a2.variance, a2.n)?.sqrt(),
        neyman_var(a3.variance, a3.n, a1.variance, a1.n)?.sqrt(),
    ];
    d.with_se(se, ci_level, Method::Neyman)
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn constant_arms_have_no_effect() {
        let d = decompose(0.3, 0.3, 0.3).unwrap();
        assert_eq!((d.nie, d.nde, d.te), (0.0, 0.0, 0.0));
    }

    #[test]
    fn simulated_arm_summary() {
        let d = decompose(43.1, 61.5, 61.5).unwrap();
        assert_abs_diff_eq!(d.nie, 18.4, epsilon = 1e-9);
        assert_abs_diff_eq!(d.nde, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(d.te, 18.4, epsilon = 1e-9);
    }

    #[test]
    fn count_derived_shares() {
        let d = decompose(34.487, 36.559, 35.857).unwrap();
        assert_abs_diff_eq!(d.nie, 2.072, epsilon = 1e-9);
        assert_abs_diff_eq!(d.nde, -0.702, epsilon = 1e-9);
        assert_abs_diff_eq!(d.te, 1.370, epsilon = 1e-9);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(decompose(f64::NAN, 0.0, 0.0).is_err());
        assert!(decompose(0.0, f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn neyman_variance_arithmetic() {
        assert_abs_diff_eq!(neyman_var(1.0, 100, 1.0, 100).unwrap(), 0.02, epsilon = 1e-15);
        assert_eq!(neyman_var(0.0, 5, 0.0, 9).unwrap(), 0.0);
        assert_abs_diff_eq!(neyman_var(2.5, 50, 0.4, 200).unwrap(), 2.5 / 50.0 + 0.4 / 200.0, epsilon = 1e-15);
        assert_abs_diff_eq!(neyman_var(2.5, 50, 0.4, 200).unwrap(), 0.052, epsilon = 1e-12);
        assert!(neyman_var(1.0, 0, 1.0, 3).is_err());
    }

    #[test]
    fn confidence_interval_is_symmetric() {
        let d = decompose(0.0, 1.0, 1.0).unwrap().with_se([0.5, 0.1, 0.5], 0.95, Method::Neyman).unwrap();
        let (lo, hi) = d.ci(Estimand::Nie).unwrap();
        assert_abs_diff_eq!(lo, 1.0 - 1.959_963_984_540_054 * 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(hi - 1.0, 1.0 - lo, epsilon = 1e-12);
        assert!(decompose(0.0, 1.0, 1.0).unwrap().ci(Estimand::Nie).is_none());
    }
}
