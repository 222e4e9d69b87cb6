use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::contrasts::contrast_vector;
use super::wls::{dot, FitResult};
use crate::error::{Error, Result};
use crate::experiment::Estimand;
use crate::rng::{stage, Substreams};

/// A linear hypothesis `L'β = L'β̂` on one of the fits of a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub label: String,
    pub fit: usize,
    pub l: [f64; 3],
}

impl Hypothesis {
    /// The three contrasts of fit `fit`, labelled `"{prefix}NIE"` and so on.
    pub fn contrasts(fit_index: usize, fit: &FitResult, prefix: &str) -> Vec<Hypothesis> {
        Estimand::ALL
            .into_iter()
            .map(|e| Hypothesis { label: format!("{prefix}{}", e.label()), fit: fit_index, l: contrast_vector(fit, e) })
            .collect()
    }
}

/// Centered bootstrap t-statistics, one row per draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapDraws {
    pub draws: usize,
    pub labels: Vec<String>,
    pub seed: u64,
    t: Vec<f64>,
}

impl BootstrapDraws {
    pub fn new(labels: Vec<String>, t: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        if t.is_empty() {
            return Err(Error::invalid("at least one bootstrap draw is required"));
        }
        if let Some(row) = t.iter().find(|r| r.len() != labels.len()) {
            return Err(Error::Dimension(format!("draw has {} statistics for {} hypotheses", row.len(), labels.len())));
        }
        if t.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("bootstrap statistics must be finite".into()));
        }
        Ok(BootstrapDraws { draws: t.len(), labels, seed, t: t.concat() })
    }

    pub fn n_hypotheses(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, draw: usize, hypothesis: usize) -> f64 {
        self.t[draw * self.labels.len() + hypothesis]
    }

    pub fn row(&self, draw: usize) -> &[f64] {
        let h = self.labels.len();
        &self.t[draw * h..(draw + 1) * h]
    }

    pub fn column(&self, hypothesis: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.draws).map(move |b| self.get(b, hypothesis))
    }
}

/// Residual sign scheme.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Signs {
    #[default]
    Rademacher,
    /// Every `ω = +1`, reproducing the original sample.
    AllPositive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapOptions {
    pub draws: usize,
    pub seed: u64,
    pub signs: Signs,
}

impl BootstrapOptions {
    pub fn new(draws: usize, seed: u64) -> Self {
        BootstrapOptions { draws, seed, signs: Signs::Rademacher }
    }
}

/// Wild bootstrap of the NIE, NDE and TE contrasts of one fit, with an
/// independent Rademacher sign per observation and draw.
pub fn wild_bootstrap(fit: &FitResult, draws: usize, seed: u64) -> Result<BootstrapDraws> {
    wild_bootstrap_with(fit, BootstrapOptions::new(draws, seed))
}

pub fn wild_bootstrap_with(fit: &FitResult, options: BootstrapOptions) -> Result<BootstrapDraws> {
    let hypotheses = Hypothesis::contrasts(0, fit, "");
    let units = vec![(0..fit.n_obs()).collect()];
    run(std::slice::from_ref(fit), &hypotheses, units, fit.n_obs(), options)
}

/// Joint wild bootstrap over several fits built from the same panel.
/// Observations with equal `key` share one sign in every draw, so the
/// cross-fit dependence of the statistics is preserved.
pub fn wild_bootstrap_joint(fits: &[FitResult], hypotheses: &[Hypothesis], options: BootstrapOptions) -> Result<BootstrapDraws> {
    if let Some(h) = hypotheses.iter().find(|h| h.fit >= fits.len()) {
        return Err(Error::Dimension(format!("hypothesis {} refers to fit {} of {}", h.label, h.fit, fits.len())));
    }
    let mut ids = BTreeMap::new();
    for fit in fits {
        for o in &fit.observations {
            let next = ids.len();
            ids.entry(o.key).or_insert(next);
        }
    }
    // Rank keys so that the sign of a unit does not depend on fit order.
    for (rank, v) in ids.values_mut().enumerate() {
        *v = rank;
    }
    let mut units = Vec::with_capacity(fits.len());
    for (f, fit) in fits.iter().enumerate() {
        let u: Vec<usize> = fit.observations.iter().map(|o| ids[&o.key]).collect();
        let mut sorted = u.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("fit {f} has repeated observation keys")));
        }
        units.push(u);
    }
    run(fits, hypotheses, units, ids.len(), options)
}

/// Per-fit quantities reused by every draw. `projector[i]` is column `i` of
/// `(X'WX)^{-1} X'W`.
struct Prepared {
    design: Vec<[f64; 3]>,
    residuals: Vec<f64>,
    inflation: Vec<f64>,
    projector: Vec<[f64; 3]>,
}

fn prepare(fit: &FitResult) -> Prepared {
    let n = fit.n_obs();
    Prepared {
        design: fit.observations.iter().map(|o| fit.design_row(o.arm)).collect(),
        residuals: fit.residuals.clone(),
        inflation: fit.leverages.iter().map(|h| 1.0 / (1.0 - h)).collect(),
        projector: (0..n).map(|i| [fit.projector[(0, i)], fit.projector[(1, i)], fit.projector[(2, i)]]).collect(),
    }
}

fn run(
    fits: &[FitResult],
    hypotheses: &[Hypothesis],
    units: Vec<Vec<usize>>,
    n_units: usize,
    options: BootstrapOptions,
) -> Result<BootstrapDraws> {
    if options.draws == 0 {
        return Err(Error::invalid("at least one bootstrap draw is required"));
    }
    let prepared: Vec<Prepared> = fits.iter().map(prepare).collect();
    let streams = Substreams::new(options.seed).stage(stage::BOOTSTRAP);
    let rows: Vec<Vec<f64>> = (0..options.draws)
        .into_par_iter()
        .map(|b| {
            let signs: Vec<f64> = match options.signs {
                Signs::Rademacher => {
                    let mut rng = streams.at(b as u64);
                    (0..n_units).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
                }
                Signs::AllPositive => vec![1.0; n_units],
            };
            draw_statistics(&prepared, hypotheses, &units, &signs).map_err(|e| Error::BootstrapDraw { draw: b, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    BootstrapDraws::new(hypotheses.iter().map(|h| h.label.clone()).collect(), rows, options.seed)
}

fn draw_statistics(prepared: &[Prepared], hypotheses: &[Hypothesis], units: &[Vec<usize>], signs: &[f64]) -> Result<Vec<f64>> {
    let mut shifts = Vec::with_capacity(prepared.len());
    let mut inflated = Vec::with_capacity(prepared.len());
    for (p, u) in prepared.iter().zip(units) {
        let star: Vec<f64> = p.residuals.iter().zip(u).map(|(e, &k)| signs[k] * e).collect();
        let mut delta = [0.0; 3];
        for (s, col) in star.iter().zip(&p.projector) {
            for j in 0..3 {
                delta[j] += col[j] * s;
            }
        }
        let e: Vec<f64> = star.iter().zip(&p.design).zip(&p.inflation).map(|((s, x), k)| (s - dot(x, &delta)) * k).collect();
        shifts.push(delta);
        inflated.push(e);
    }
    hypotheses
        .iter()
        .map(|h| {
            let p = &prepared[h.fit];
            let num = dot(&h.l, &shifts[h.fit]);
            let var: f64 = inflated[h.fit].iter().zip(&p.projector).map(|(e, col)| (e * dot(&h.l, col)).powi(2)).sum();
            let se = var.sqrt();
            let scale: f64 = p.residuals.iter().map(|e| e.abs()).fold(0.0, f64::max);
            if se > 0.0 {
                Ok(num / se)
            } else if num.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
                Ok(0.0)
            } else {
                Err(Error::Numerical(format!("hypothesis {} has zero standard error", h.label)))
            }
        })
        .collect()
}
