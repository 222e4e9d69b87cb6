use serde::{Deserialize, Serialize};

use super::wls::FitResult;
use crate::arm::Arm;
use crate::experiment::{Decomposition, Estimand, Method};
use crate::error::Result;
use crate::special::two_sided_p;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContrastResult {
    pub label: Estimand,
    pub estimate: f64,
    pub se: f64,
    pub t: f64,
    /// Two-sided p-value against the standard normal.
    pub p: f64,
}

/// `(minuend, subtrahend)` arms of each estimand.
pub fn estimand_arms(e: Estimand) -> (Arm, Arm) {
    match e {
        Estimand::Nie => (Arm::Two, Arm::One),
        Estimand::Nde => (Arm::Three, Arm::Two),
        Estimand::Te => (Arm::Three, Arm::One),
    }
}

/// Coefficient vector of an estimand in `fit`'s parameterization.
pub fn contrast_vector(fit: &FitResult, e: Estimand) -> [f64; 3] {
    let (plus, minus) = estimand_arms(e);
    let (a, b) = (fit.arm_selector(plus), fit.arm_selector(minus));
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// A contrast estimate with HC3 standard error. A zero standard error gives
/// `t = 0` for a zero estimate and an infinite `t` otherwise.
pub fn contrast(fit: &FitResult, e: Estimand) -> ContrastResult {
    let (estimate, var) = fit.linear(&contrast_vector(fit, e));
    let se = var.max(0.0).sqrt();
    let t = if se > 0.0 {
        estimate / se
    } else if estimate == 0.0 {
        0.0
    } else {
        estimate.signum() * f64::INFINITY
    };
    ContrastResult { label: e, estimate, se, t, p: two_sided_p(t) }
}

/// NIE, NDE and TE of a fit. The NDE variance is
/// `Var(β₂) + Var(β₁) - 2 Cov(β₁, β₂)` under the arm-1 reference.
pub fn contrasts(fit: &FitResult) -> [ContrastResult; 3] {
    Estimand::ALL.map(|e| contrast(fit, e))
}

/// The three contrasts as a [`Decomposition`]. `TE` is set to `NIE + NDE`,
/// which differs from the direct contrast by rounding only.
pub fn fit_decomposition(fit: &FitResult, ci_level: f64) -> Result<Decomposition> {
    let [nie, nde, te] = contrasts(fit);
    let d = crate::experiment::decompose(fit.arm_mean(Arm::One), fit.arm_mean(Arm::Two), fit.arm_mean(Arm::Three))?;
    let d = Decomposition { nie: nie.estimate, nde: nde.estimate, te: nie.estimate + nde.estimate, ..d };
    debug_assert!((d.te - te.estimate).abs() <= 1e-9 * te.estimate.abs().max(1.0));
    d.with_se([nie.se, nde.se, te.se], ci_level, Method::Hc3)
}
