use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::design::{three_arm_design, validate_design, ArmSpec};
use super::estimands::{decompose, mean_var, ArmSummary, Decomposition, Method};
use crate::arm::Arm;
use crate::auction::{mediator_draws, simulate_grid, DeliveryOutcome, MediatorRegime, RoundSetup};
use crate::error::{Error, Result, Violations};
use crate::inference::{ks_two_sample, KsTest};
use crate::rng::{stage, Substreams};

/// How random numbers are shared between arms within a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    /// All arms reuse the round's draws (common random numbers).
    #[default]
    Shared,
    /// Every arm draws from its own streams.
    Independent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub setup: RoundSetup,
    /// Regime `S(B)` of arms 2 and 3.
    pub regime_b: MediatorRegime,
    pub rounds: usize,
    pub pairing: Pairing,
    pub ci_level: f64,
}

impl ExperimentConfig {
    pub fn new(setup: RoundSetup, regime_b: MediatorRegime, rounds: usize) -> Self {
        ExperimentConfig { setup, regime_b, rounds, pairing: Pairing::Shared, ci_level: 0.95 }
    }

    pub fn arms(&self) -> [ArmSpec; 3] {
        three_arm_design(self.regime_b)
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = Violations::default();
        v.extend(self.setup.validate());
        v.extend(validate_design(&self.arms()));
        v.check(self.rounds >= 2, || format!("rounds must be at least 2, got {}", self.rounds));
        v.check(self.ci_level > 0.0 && self.ci_level < 1.0, || {
            format!("ci_level must lie in (0, 1), got {}", self.ci_level)
        });
        v.finish()
    }
}

fn arm_streams(round: &Substreams, arm: Arm, pairing: Pairing) -> Substreams {
    match pairing {
        Pairing::Shared => *round,
        Pairing::Independent => round.child(stage::ARM).child(arm.number() as u64),
    }
}

/// Outcomes of the three arms at each focal bid, `[bid][arm]`.
pub(crate) fn three_arm_grid(
    setup: &RoundSetup,
    arms: &[ArmSpec; 3],
    focal_bids: &[f64],
    streams: &Substreams,
    pairing: Pairing,
) -> Result<Vec<[DeliveryOutcome; 3]>> {
    match pairing {
        Pairing::Shared => {
            let regimes: Vec<MediatorRegime> = arms.iter().map(|a| a.regime).collect();
            let grid = simulate_grid(setup, &regimes, focal_bids, streams)?;
            Ok(grid.into_iter().map(|row| [row[0], row[1], row[2]]).collect())
        }
        Pairing::Independent => {
            let per_arm = arms
                .iter()
                .map(|a| simulate_grid(setup, &[a.regime], focal_bids, &arm_streams(streams, a.arm, pairing)))
                .collect::<Result<Vec<_>>>()?;
            Ok((0..focal_bids.len()).map(|b| [per_arm[0][b][0], per_arm[1][b][0], per_arm[2][b][0]]).collect())
        }
    }
}

/// One paired round of the three-arm experiment. Under shared pairing the
/// arms differ only in their regime, so arms with equal regimes produce
/// identical outcomes.
pub fn run_three_arm_round(
    setup: &RoundSetup,
    arms: &[ArmSpec; 3],
    streams: &Substreams,
    pairing: Pairing,
) -> Result<[DeliveryOutcome; 3]> {
    validate_design(arms)?;
    Ok(three_arm_grid(setup, arms, &[setup.bids.focal_amount()], streams, pairing)?[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u64,
    pub arms: [DeliveryOutcome; 3],
}

/// Per-arm averages over the rounds that entered the impression-level
/// decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    pub arm: Arm,
    /// Female share of focal impressions across rounds.
    pub female_share: ArmSummary,
    /// Female share of focal matches across rounds.
    pub match_female_share: ArmSummary,
    pub wins: f64,
    pub matches: f64,
    pub ctr: f64,
    pub mean_true_rate_won: f64,
    pub mean_signal_won: f64,
    pub spend: f64,
}

/// Decompositions of the mean true click rate `μ_r` and the mean perceived
/// signal `μ_s` of won impressions. `selection_gap[z]` is arm `z`'s average
/// `μ_s - μ_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngagementReport {
    pub true_rate: Decomposition,
    pub signal: Decomposition,
    pub selection_gap: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub rounds: usize,
    pub rounds_used: usize,
    /// Rounds in which some arm won no impressions.
    pub rounds_dropped: usize,
    pub arms: [ArmReport; 3],
    /// Decomposition of the female share of impressions.
    pub impressions: Decomposition,
    /// Decomposition of the female share of matches.
    pub matches: Decomposition,
    pub engagement: EngagementReport,
    /// Two-sample KS comparison of arm 2 and arm 3 realized focal noise on
    /// female users in the first round.
    pub mediator_check: Option<KsTest>,
    #[serde(skip)]
    pub per_round: Vec<RoundRecord>,
}

/// Paired decomposition over rounds: point estimates from the arm means,
/// standard errors from the spread of per-round differences.
pub fn paired_decomposition(values: &[[f64; 3]], ci_level: f64) -> Result<Decomposition> {
    if values.len() < 2 {
        return Err(Error::Degenerate(format!("paired decomposition needs 2 rounds, got {}", values.len())));
    }
    let col = |z: usize| values.iter().map(|v| v[z]).collect::<Vec<_>>();
    let means: Vec<f64> = (0..3).map(|z| mean_var(&col(z)).map(|m| m.0)).collect::<Result<_>>()?;
    let d = decompose(means[0], means[1], means[2])?;
    let root_r = (values.len() as f64).sqrt();
    let se = |f: &dyn Fn(&[f64; 3]) -> f64| -> Result<f64> {
        let diffs: Vec<f64> = values.iter().map(f).collect();
        Ok(mean_var(&diffs)?.1.sqrt() / root_r)
    };
    let se = [se(&|v| v[1] - v[0])?, se(&|v| v[2] - v[1])?, se(&|v| v[2] - v[0])?];
    d.with_se(se, ci_level, Method::MonteCarloPaired)
}

fn triple(arms: &[DeliveryOutcome; 3], f: impl Fn(&DeliveryOutcome) -> Option<f64>) -> Option<[f64; 3]> {
    Some([f(&arms[0])?, f(&arms[1])?, f(&arms[2])?])
}

/// Aggregate per-round outcomes into arm summaries and decompositions.
pub fn summarize(records: &[RoundRecord], ci_level: f64) -> Result<MonteCarloReport> {
    let used: Vec<&RoundRecord> = records.iter().filter(|r| r.arms.iter().all(|a| a.wins > 0)).collect();
    let shares: Vec<[f64; 3]> = used.iter().filter_map(|r| triple(&r.arms, DeliveryOutcome::female_share)).collect();
    let match_shares: Vec<[f64; 3]> =
        records.iter().filter_map(|r| triple(&r.arms, DeliveryOutcome::match_female_share)).collect();
    let rates: Vec<[f64; 3]> = used.iter().filter_map(|r| triple(&r.arms, |a| Some(a.mean_true_rate_won))).collect();
    let signals: Vec<[f64; 3]> = used.iter().filter_map(|r| triple(&r.arms, |a| Some(a.mean_signal_won))).collect();

    let impressions = paired_decomposition(&shares, ci_level)?;
    let matches = paired_decomposition(&match_shares, ci_level)?;
    let engagement = EngagementReport {
        true_rate: paired_decomposition(&rates, ci_level)?,
        signal: paired_decomposition(&signals, ci_level)?,
        selection_gap: std::array::from_fn(|z| {
            rates.iter().zip(&signals).map(|(r, s)| s[z] - r[z]).sum::<f64>() / rates.len() as f64
        }),
    };
    let avg = |z: usize, f: &dyn Fn(&DeliveryOutcome) -> f64| {
        used.iter().map(|r| f(&r.arms[z])).sum::<f64>() / used.len() as f64
    };
    let arms = [0, 1, 2].map(|z| -> Result<ArmReport> {
        let arm = Arm::ALL[z];
        Ok(ArmReport {
            arm,
            female_share: ArmSummary::from_values(arm, &shares.iter().map(|v| v[z]).collect::<Vec<_>>())?,
            match_female_share: ArmSummary::from_values(arm, &match_shares.iter().map(|v| v[z]).collect::<Vec<_>>())?,
            wins: avg(z, &|a| a.wins as f64),
            matches: avg(z, &|a| a.matches as f64),
            ctr: avg(z, &|a| a.clicks as f64 / a.wins as f64),
            mean_true_rate_won: avg(z, &|a| a.mean_true_rate_won),
            mean_signal_won: avg(z, &|a| a.mean_signal_won),
            spend: avg(z, &|a| a.spend),
        })
    });
    let [a1, a2, a3] = arms;
    Ok(MonteCarloReport {
        rounds: records.len(),
        rounds_used: used.len(),
        rounds_dropped: records.len() - used.len(),
        arms: [a1?, a2?, a3?],
        impressions,
        matches,
        engagement,
        mediator_check: None,
        per_round: records.to_vec(),
    })
}

/// Run `cfg.rounds` paired rounds from `seed` and summarize them.
pub fn monte_carlo(cfg: &ExperimentConfig, seed: u64) -> Result<MonteCarloReport> {
    cfg.validate()?;
    let base = Substreams::new(seed);
    let arms = cfg.arms();
    let records = (0..cfg.rounds as u64)
        .into_par_iter()
        .map(|r| {
            let outcomes = run_three_arm_round(&cfg.setup, &arms, &base.round(r), cfg.pairing)?;
            Ok(RoundRecord { round: r, arms: outcomes })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = summarize(&records, cfg.ci_level)?;
    report.mediator_check = mediator_check(cfg, &base.round(0))?;
    Ok(report)
}

fn mediator_check(cfg: &ExperimentConfig, round: &Substreams) -> Result<Option<KsTest>> {
    let draws = |arm: Arm| {
        mediator_draws(&cfg.setup.population, &cfg.regime_b, &arm_streams(round, arm, cfg.pairing))
    };
    let (two, three) = (draws(Arm::Two)?, draws(Arm::Three)?);
    if two.is_empty() || three.is_empty() {
        return Ok(None);
    }
    ks_two_sample(&two, &three).map(Some)
}
