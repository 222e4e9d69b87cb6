use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::arm::Arm;
use crate::error::{Error, Result};
use crate::panel::{BidLevel, Panel, PanelGender};

/// Ratio of the observed variance of cell rates to the Bernoulli variance
/// `p̂(1-p̂)/n̄`. `cells` holds `(rate, n)`; the pooled rate defaults to
/// `Σ rate·n / Σ n`.
pub fn dispersion_ratio(cells: &[(f64, f64)], pooled: Option<f64>) -> Result<f64> {
    if cells.len() < 2 {
        return Err(Error::invalid(format!("dispersion needs at least two cells, got {}", cells.len())));
    }
    if let Some((r, n)) = cells.iter().find(|(r, n)| !((0.0..=1.0).contains(r) && *n > 0.0 && n.is_finite())) {
        return Err(Error::invalid(format!("cell rate {r} with size {n} is invalid")));
    }
    let total: f64 = cells.iter().map(|c| c.1).sum();
    let p = pooled.unwrap_or_else(|| cells.iter().map(|(r, n)| r * n).sum::<f64>() / total);
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Degenerate(format!("pooled rate {p} leaves no Bernoulli variance")));
    }
    let k = cells.len() as f64;
    let mean = cells.iter().map(|c| c.0).sum::<f64>() / k;
    let var = cells.iter().map(|c| (c.0 - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Ok(var / (p * (1.0 - p) / (total / k)))
}

/// Unit at which cell rates are formed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Collapse {
    Day,
    #[default]
    DaySlot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DispersionOutcome {
    FemaleShare,
    Ctr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionRow {
    pub outcome: DispersionOutcome,
    pub bid_level: BidLevel,
    pub arm: Arm,
    pub ratio: f64,
    pub pooled_rate: f64,
    pub mean_cell_size: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionReport {
    pub collapse: Collapse,
    pub rows: Vec<DispersionRow>,
    /// Combinations skipped because the ratio is undefined.
    pub skipped: Vec<String>,
}

/// Dispersion ratios of female impression share and click-through rate for
/// every (bid level, arm) in the panel.
pub fn dispersion_report(panel: &Panel, collapse: Collapse) -> DispersionReport {
    type Unit = (NaiveDate, u32);
    let mut groups: BTreeMap<(BidLevel, Arm), BTreeMap<Unit, [u64; 3]>> = BTreeMap::new();
    for r in panel.rows() {
        let slot = match collapse {
            Collapse::Day => 0,
            Collapse::DaySlot => r.time_slot,
        };
        let c = groups.entry((r.bid_level, r.arm)).or_default().entry((r.day, slot)).or_default();
        c[0] += r.impressions;
        c[1] += r.clicks;
        if r.gender == PanelGender::Female {
            c[2] += r.impressions;
        }
    }
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for outcome in [DispersionOutcome::FemaleShare, DispersionOutcome::Ctr] {
        for (&(bid_level, arm), units) in &groups {
            let cells: Vec<(f64, f64)> = units
                .values()
                .filter(|c| c[0] > 0)
                .map(|c| {
                    let num = if outcome == DispersionOutcome::Ctr { c[1] } else { c[2] };
                    (num as f64 / c[0] as f64, c[0] as f64)
                })
                .collect();
            match dispersion_ratio(&cells, None) {
                Ok(ratio) => {
                    let total: f64 = cells.iter().map(|c| c.1).sum();
                    rows.push(DispersionRow {
                        outcome,
                        bid_level,
                        arm,
                        ratio,
                        pooled_rate: cells.iter().map(|(r, n)| r * n).sum::<f64>() / total,
                        mean_cell_size: total / cells.len() as f64,
                        cells: cells.len(),
                    })
                }
                Err(e) => skipped.push(format!("{outcome:?} {bid_level} arm {arm}: {e}")),
            }
        }
    }
    DispersionReport { collapse, rows, skipped }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn identical_rates_have_zero_ratio() {
        assert_eq!(dispersion_ratio(&[(0.3, 100.0), (0.3, 200.0), (0.3, 50.0)], None).unwrap(), 0.0);
    }

    #[test]
    fn hand_arithmetic() {
        // Rates 0.2 and 0.4, n = 100 each: var 0.02, pooled 0.3, Bernoulli 0.0021.
        let phi = dispersion_ratio(&[(0.2, 100.0), (0.4, 100.0)], None).unwrap();
        assert_abs_diff_eq!(phi, 0.02 / 0.0021, epsilon = 1e-9);
    }

    #[test]
    fn errors() {
        assert!(dispersion_ratio(&[(0.3, 10.0)], None).is_err());
        assert!(matches!(dispersion_ratio(&[(0.0, 10.0), (0.0, 20.0)], None), Err(Error::Degenerate(_))));
    }
}
