use serde::{Deserialize, Serialize};

use super::bernoulli::{bernoulli_decomposition, Counts};
use super::bootstrap::{wild_bootstrap_joint, BootstrapOptions, Hypothesis};
use super::contrasts::{contrasts, fit_decomposition};
use super::stepdown::romano_wolf;
use super::wls::{wls_fit, FitResult, Observation};
use crate::arm::Arm;
use crate::error::{Error, Result};
use crate::experiment::{Decomposition, Estimand};
use crate::panel::{to_analysis_panel, AgeBand, CellFilter, Outcome, Panel, PanelGender};
use crate::special::{normal_quantile, two_sided_p};

/// Standard-error source for a family.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeMode {
    /// HC3 on the (day, slot, arm) regression with Romano-Wolf adjustment.
    #[default]
    Hc3,
    /// Unpooled binomial standard errors on impression-level counts.
    Bernoulli,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Aggregate,
    PerCell,
}

/// Outcome measured within each (age × gender) cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellMeasure {
    /// The cell's share of all impressions.
    Share,
    /// Click-through rate within the cell.
    Ctr,
}

impl CellMeasure {
    pub fn outcome(self, cell: CellFilter) -> Outcome {
        match self {
            CellMeasure::Share => Outcome::Share(cell),
            CellMeasure::Ctr => Outcome::Ctr(cell),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferenceOptions {
    pub draws: usize,
    pub seed: u64,
    pub se: SeMode,
    pub ci_level: f64,
    pub alpha: f64,
}

impl Default for InferenceOptions {
    fn default() -> Self {
        InferenceOptions { draws: 5000, seed: 0, se: SeMode::Hc3, ci_level: 0.95, alpha: 0.05 }
    }
}

impl InferenceOptions {
    pub fn validate(&self) -> Result<()> {
        let mut v = crate::error::Violations::default();
        v.check(self.se == SeMode::Bernoulli || self.draws >= 1, || "bootstrap draws must be at least 1".into());
        v.check(self.ci_level > 0.0 && self.ci_level < 1.0, || format!("ci_level must lie in (0, 1), got {}", self.ci_level));
        v.check(self.alpha > 0.0 && self.alpha < 1.0, || format!("alpha must lie in (0, 1), got {}", self.alpha));
        v.finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyRow {
    pub cell: String,
    pub estimand: Estimand,
    pub estimate: f64,
    pub se: f64,
    pub t: f64,
    pub p_raw: f64,
    pub p_adj: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmLevel {
    pub arm: Arm,
    pub mean: f64,
    pub weight: f64,
    pub observations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDecomposition {
    pub cell: String,
    pub arms: [ArmLevel; 3],
    pub decomposition: Decomposition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub kind: FamilyKind,
    pub se: SeMode,
    pub draws: Option<usize>,
    pub seed: Option<u64>,
    pub alpha: f64,
    pub hypotheses: usize,
    /// Two-sided normal Bonferroni cutoff for the family at `alpha`.
    pub bonferroni_threshold: f64,
    pub cells: Vec<CellDecomposition>,
    pub rows: Vec<FamilyRow>,
    pub warnings: Vec<String>,
}

/// `Φ⁻¹(1 - α/(2m))`.
pub fn bonferroni_threshold(m: usize, alpha: f64) -> f64 {
    normal_quantile(1.0 - alpha / (2.0 * m as f64))
}

/// Decomposition of one outcome with the family of its three contrasts.
pub fn aggregate_family(panel: &Panel, outcome: Outcome, label: &str, options: &InferenceOptions) -> Result<FamilyReport> {
    options.validate()?;
    let cell = analyse(panel, outcome, label, options.se, options.ci_level)?;
    finish(FamilyKind::Aggregate, vec![cell], Vec::new(), options)
}

/// The (age × gender) cells used for per-cell decompositions.
pub fn known_cells() -> Vec<CellFilter> {
    AgeBand::ALL
        .into_iter()
        .flat_map(|a| [PanelGender::Female, PanelGender::Male].map(|g| CellFilter::cell(a, g)))
        .collect()
}

/// Per-cell decomposition over every known (age × gender) cell, adjusted
/// jointly across all cells and estimands. Cells that cannot be fitted are
/// dropped with a warning.
pub fn per_cell_family(panel: &Panel, measure: CellMeasure, options: &InferenceOptions) -> Result<FamilyReport> {
    options.validate()?;
    let mut cells = Vec::new();
    let mut warnings = Vec::new();
    for c in known_cells() {
        match analyse(panel, measure.outcome(c), &c.label(), options.se, options.ci_level) {
            Ok(a) => cells.push(a),
            Err(e @ (Error::MissingArm { .. } | Error::UnitLeverage { .. } | Error::InvalidArgument(_))) => {
                let msg = format!("cell {} dropped: {e}", c.label());
                log::warn!("{msg}");
                warnings.push(msg);
            }
            Err(e) => return Err(e),
        }
    }
    if cells.is_empty() {
        return Err(Error::invalid("no cell has data in all three arms"));
    }
    finish(FamilyKind::PerCell, cells, warnings, options)
}

struct Analysed {
    label: String,
    fit: Option<FitResult>,
    decomposition: CellDecomposition,
    stats: [(f64, f64); 3],
}

fn analyse(panel: &Panel, outcome: Outcome, label: &str, se: SeMode, ci_level: f64) -> Result<Analysed> {
    let rows = to_analysis_panel(panel, outcome);
    let obs: Vec<Observation> = rows.iter().map(Observation::from).collect();
    let level = |arm: Arm, mean: f64| ArmLevel {
        arm,
        mean,
        weight: obs.iter().filter(|o| o.arm == arm).map(|o| o.weight).sum(),
        observations: obs.iter().filter(|o| o.arm == arm).count(),
    };
    match se {
        SeMode::Hc3 => {
            let fit = wls_fit(&obs, Arm::One)?;
            let d = fit_decomposition(&fit, ci_level)?;
            let stats = contrasts(&fit).map(|c| (c.se, c.t));
            let arms = Arm::ALL.map(|a| level(a, fit.arm_mean(a)));
            Ok(Analysed { label: label.into(), fit: Some(fit), decomposition: CellDecomposition { cell: label.into(), arms, decomposition: d }, stats })
        }
        SeMode::Bernoulli => {
            let mut counts = [(0u64, 0u64); 3];
            for r in &rows {
                let c = &mut counts[r.arm.index()];
                c.0 += r.numerator;
                c.1 += r.weight as u64;
            }
            let counts = Arm::ALL.map(|a| {
                let (k, n) = counts[a.index()];
                if n == 0 {
                    Err(Error::MissingArm { arm: a })
                } else {
                    Counts::new(k, n)
                }
            });
            let [c1, c2, c3] = counts;
            let counts = [c1?, c2?, c3?];
            let d = bernoulli_decomposition(counts, ci_level)?;
            let stats = Estimand::ALL.map(|e| {
                let se = d.se(e).unwrap_or(0.0);
                (se, if se > 0.0 { d.estimate(e) / se } else { 0.0 })
            });
            let arms = Arm::ALL.map(|a| level(a, counts[a.index()].rate()));
            Ok(Analysed { label: label.into(), fit: None, decomposition: CellDecomposition { cell: label.into(), arms, decomposition: d }, stats })
        }
    }
}

fn finish(kind: FamilyKind, cells: Vec<Analysed>, warnings: Vec<String>, options: &InferenceOptions) -> Result<FamilyReport> {
    let mut rows: Vec<FamilyRow> = cells
        .iter()
        .flat_map(|c| {
            Estimand::ALL.into_iter().zip(c.stats).map(|(e, (se, t))| FamilyRow {
                cell: c.label.clone(),
                estimand: e,
                estimate: c.decomposition.decomposition.estimate(e),
                se,
                t,
                p_raw: two_sided_p(t),
                p_adj: None,
            })
        })
        .collect();
    let hc3 = options.se == SeMode::Hc3;
    if hc3 {
        let fits: Vec<FitResult> = cells.iter().map(|c| c.fit.clone().expect("HC3 cells carry fits")).collect();
        let prefix = |c: &Analysed| if kind == FamilyKind::PerCell { format!("{}:", c.label) } else { String::new() };
        let hypotheses: Vec<Hypothesis> =
            cells.iter().enumerate().flat_map(|(i, c)| Hypothesis::contrasts(i, &fits[i], &prefix(c))).collect();
        let draws = wild_bootstrap_joint(&fits, &hypotheses, BootstrapOptions::new(options.draws, options.seed))?;
        let t_obs: Vec<f64> = rows.iter().map(|r| r.t).collect();
        for (row, p) in rows.iter_mut().zip(romano_wolf(&t_obs, &draws)?) {
            row.p_adj = Some(p);
        }
    }
    Ok(FamilyReport {
        kind,
        se: options.se,
        draws: hc3.then_some(options.draws),
        seed: hc3.then_some(options.seed),
        alpha: options.alpha,
        hypotheses: rows.len(),
        bonferroni_threshold: bonferroni_threshold(rows.len(), options.alpha),
        cells: cells.into_iter().map(|c| c.decomposition).collect(),
        rows,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn bonferroni_for_thirty_six_tests() {
        assert_abs_diff_eq!(bonferroni_threshold(36, 0.05), 3.19695, epsilon = 1e-4);
        assert_abs_diff_eq!(bonferroni_threshold(1, 0.05), 1.95996, epsilon = 1e-5);
    }

    #[test]
    fn twelve_known_cells() {
        let cells = known_cells();
        assert_eq!(cells.len(), 12);
        assert!(cells.iter().all(|c| c.gender != Some(PanelGender::Unknown)));
    }
}
