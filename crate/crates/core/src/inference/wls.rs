use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::arm::Arm;
use crate::error::{Error, Result};
use crate::panel::AnalysisRow;

/// One weighted observation of an arm-level outcome. Observations sharing a
/// `key` across fits receive the same bootstrap sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub y: f64,
    pub weight: f64,
    pub arm: Arm,
    pub key: u64,
}

impl From<&AnalysisRow> for Observation {
    fn from(r: &AnalysisRow) -> Self {
        Observation { y: r.y, weight: r.weight, arm: r.arm, key: r.key() }
    }
}

/// Weighted saturated regression `y = α + Σ β_z 1{arm = z} + ε` with HC3
/// covariance.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub reference: Arm,
    /// Arms of the slope columns, in arm order.
    pub slope_arms: [Arm; 2],
    /// `(α, β for slope_arms[0], β for slope_arms[1])`.
    pub coefficients: [f64; 3],
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub leverages: Vec<f64>,
    /// HC3 covariance of the coefficients.
    pub hc3: [[f64; 3]; 3],
    pub observations: Vec<Observation>,
    /// `(X'WX)^{-1} X'W`, column `i` belongs to observation `i`.
    pub(crate) projector: DMatrix<f64>,
}

impl FitResult {
    pub fn n_obs(&self) -> usize {
        self.observations.len()
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().map(|o| o.weight)
    }

    /// Coefficient vector `L` with `L'β` equal to the fitted mean of `arm`.
    pub fn arm_selector(&self, arm: Arm) -> [f64; 3] {
        let mut l = [1.0, 0.0, 0.0];
        if let Some(j) = self.slope_arms.iter().position(|a| *a == arm) {
            l[j + 1] = 1.0;
        }
        l
    }

    pub fn arm_mean(&self, arm: Arm) -> f64 {
        dot(&self.arm_selector(arm), &self.coefficients)
    }

    /// `L'β` and its HC3 variance `L'VL`.
    pub fn linear(&self, l: &[f64; 3]) -> (f64, f64) {
        let mut var = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                var += l[i] * self.hc3[i][j] * l[j];
            }
        }
        (dot(l, &self.coefficients), var)
    }

    pub(crate) fn design_row(&self, arm: Arm) -> [f64; 3] {
        design_row(arm, &self.slope_arms)
    }
}

pub(crate) fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn design_row(arm: Arm, slope_arms: &[Arm; 2]) -> [f64; 3] {
    [1.0, f64::from(u8::from(arm == slope_arms[0])), f64::from(u8::from(arm == slope_arms[1]))]
}

/// Fit the weighted saturated regression of `y` on arm indicators, taking
/// `reference` as the intercept arm. Every arm needs at least two
/// observations so that no leverage equals one.
pub fn wls_fit(observations: &[Observation], reference: Arm) -> Result<FitResult> {
    for o in observations {
        if !(o.weight > 0.0 && o.weight.is_finite()) {
            return Err(Error::invalid(format!("weights must be positive and finite, got {}", o.weight)));
        }
        if !o.y.is_finite() {
            return Err(Error::invalid(format!("outcome {} is not finite", o.y)));
        }
    }
    for arm in Arm::ALL {
        match observations.iter().filter(|o| o.arm == arm).count() {
            0 => return Err(Error::MissingArm { arm }),
            1 => return Err(Error::UnitLeverage { arm }),
            _ => {}
        }
    }
    let slope: Vec<Arm> = Arm::ALL.into_iter().filter(|a| *a != reference).collect();
    let slope_arms = [slope[0], slope[1]];
    let n = observations.len();
    let x = DMatrix::from_fn(n, 3, |i, j| design_row(observations[i].arm, &slope_arms)[j]);
    let w = DVector::from_iterator(n, observations.iter().map(|o| o.weight));
    let y = DVector::from_iterator(n, observations.iter().map(|o| o.y));

    let xtw = DMatrix::from_fn(3, n, |j, i| x[(i, j)] * w[i]);
    let a = &xtw * &x;
    let a_inv = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("weighted normal matrix is not positive definite".into()))?
        .inverse();
    let projector = &a_inv * &xtw;
    let beta = &projector * &y;
    let fitted = &x * &beta;
    let residuals = &y - &fitted;

    let mut leverages = Vec::with_capacity(n);
    for i in 0..n {
        let xi = x.row(i).transpose();
        let h = w[i] * (xi.transpose() * &a_inv * &xi)[(0, 0)];
        if h >= 1.0 - 1e-10 {
            return Err(Error::UnitLeverage { arm: observations[i].arm });
        }
        leverages.push(h);
    }
    let mut meat = DMatrix::<f64>::zeros(3, 3);
    for i in 0..n {
        let u = w[i] * residuals[i] / (1.0 - leverages[i]);
        let xi = x.row(i).transpose();
        meat += (&xi * xi.transpose()) * (u * u);
    }
    let v = &a_inv * meat * &a_inv;
    let hc3 = std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (v[(i, j)] + v[(j, i)])));

    Ok(FitResult {
        reference,
        slope_arms,
        coefficients: [beta[0], beta[1], beta[2]],
        fitted: fitted.iter().copied().collect(),
        residuals: residuals.iter().copied().collect(),
        leverages,
        hc3,
        observations: observations.to_vec(),
        projector,
    })
}
