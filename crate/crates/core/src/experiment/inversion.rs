use serde::{Deserialize, Serialize};

use super::monte_carlo::{monte_carlo, ExperimentConfig};
use crate::error::{Error, Result};

pub const MAX_BISECTIONS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionStep {
    pub sigma: f64,
    pub nie: f64,
    pub se_nie: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inversion {
    pub target: f64,
    pub sigma: f64,
    pub nie: f64,
    pub se_nie: f64,
    pub steps: Vec<InversionStep>,
}

fn nie_at(cfg: &ExperimentConfig, sigma: f64, seed: u64) -> Result<InversionStep> {
    let mut c = cfg.clone();
    c.regime_b.focal_female = sigma;
    let report = monte_carlo(&c, seed)?;
    Ok(InversionStep { sigma, nie: report.impressions.nie, se_nie: report.impressions.se_nie.unwrap_or(0.0) })
}

/// Find the focal female noise `σ` whose impression-level NIE equals
/// `target` by bisection on `[0, sigma_max]`. Every evaluation reuses `seed`,
/// so the objective is a deterministic function of `σ`. The search stops once
/// `|NIE(σ) - target| <= tolerance`, or after 40 halvings.
pub fn invert_sigma(
    target: f64,
    cfg: &ExperimentConfig,
    sigma_max: f64,
    tolerance: f64,
    seed: u64,
) -> Result<Inversion> {
    cfg.validate()?;
    if !(target >= 0.0 && target.is_finite()) {
        return Err(Error::invalid(format!("target NIE must be finite and nonnegative, got {target}")));
    }
    if !(sigma_max > 0.0 && sigma_max.is_finite()) {
        return Err(Error::invalid(format!("sigma_max must be positive, got {sigma_max}")));
    }
    if !(tolerance > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tolerance}")));
    }
    if target == 0.0 {
        return Ok(Inversion { target, sigma: 0.0, nie: 0.0, se_nie: 0.0, steps: Vec::new() });
    }
    let top = nie_at(cfg, sigma_max, seed)?;
    let mut steps = vec![top];
    if target > top.nie + tolerance {
        return Err(Error::Bracket { target, lo: 0.0, hi: top.nie });
    }
    let (mut lo, mut hi) = (0.0, sigma_max);
    let mut best = top;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let step = nie_at(cfg, mid, seed)?;
        steps.push(step);
        if (step.nie - target).abs() < (best.nie - target).abs() {
            best = step;
        }
        if (step.nie - target).abs() <= tolerance {
            break;
        }
        if step.nie < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (best.nie - target).abs() > tolerance.max(2.0 * best.se_nie) {
        return Err(Error::Numerical(format!(
            "bisection ended at sigma {} with NIE {} for target {target}",
            best.sigma, best.nie
        )));
    }
    Ok(Inversion { target, sigma: best.sigma, nie: best.nie, se_nie: best.se_nie, steps })
}
