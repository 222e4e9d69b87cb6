use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimands::Decomposition;
use super::monte_carlo::{summarize, three_arm_grid, ArmReport, ExperimentConfig, RoundRecord};
use crate::auction::FocalBid;
use crate::error::{Error, Result};
use crate::rng::Substreams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub percentile: f64,
    pub focal_bid: f64,
    pub arms: [ArmReport; 3],
    pub rounds_dropped: usize,
    pub impressions: Decomposition,
    pub matches: Decomposition,
}

/// Run the experiment at several focal-bid percentiles on common seeds. The
/// matching stage ignores bids, so match-level results coincide across rows.
pub fn bid_sweep(percentiles: &[f64], cfg: &ExperimentConfig, seed: u64) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    if percentiles.is_empty() {
        return Err(Error::invalid("bid sweep needs at least one percentile"));
    }
    if let Some(p) = percentiles.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(Error::invalid(format!("bid percentile must lie in (0, 1), got {p}")));
    }
    let dist = cfg.setup.bids.distribution();
    let bids: Vec<f64> = percentiles.iter().map(|&p| dist.quantile(p)).collect();
    let base = Substreams::new(seed);
    let arms = cfg.arms();
    let grids = (0..cfg.rounds as u64)
        .into_par_iter()
        .map(|r| three_arm_grid(&cfg.setup, &arms, &bids, &base.round(r), cfg.pairing))
        .collect::<Result<Vec<_>>>()?;
    percentiles
        .iter()
        .zip(&bids)
        .enumerate()
        .map(|(b, (&percentile, &focal_bid))| {
            let records: Vec<RoundRecord> =
                grids.iter().enumerate().map(|(r, g)| RoundRecord { round: r as u64, arms: g[b] }).collect();
            let report = summarize(&records, cfg.ci_level)?;
            debug_assert_eq!(cfg.setup.bids.with_focal(FocalBid::Percentile(percentile)).focal_amount(), focal_bid);
            Ok(SweepRow {
                percentile,
                focal_bid,
                arms: report.arms,
                rounds_dropped: report.rounds_dropped,
                impressions: report.impressions,
                matches: report.matches,
            })
        })
        .collect()
}
