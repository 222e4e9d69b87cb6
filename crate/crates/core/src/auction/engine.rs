//! Round simulation.
//!
//! Two engines produce the same distribution of [`DeliveryOutcome`]s.
//! [`Engine::Exact`] materializes every click rate and signal and runs the
//! matching and auction stages literally. [`Engine::OrderStatistic`] never
//! draws competitor click rates: when competitors observe their true rates,
//! whether the focal advertiser makes a user's top `K` depends only on the
//! `K`-th largest of `N-1` i.i.d. Beta rates, whose probability-integral
//! transform is `Beta(N-K+1, K)`. Because bids are independent of rates, the
//! `K-1` competitors in the matched set are a uniform random subset of the
//! round's competitor bids, so the highest matched competitor bid is the
//! order statistic at the subset's minimum rank. Per user this costs two
//! Beta evaluations instead of `N` Beta draws and a selection.
//!
//! Both engines read the gender, focal click rate, focal noise and click
//! draws from the same per-user streams, so arms and engines share those
//! realizations under common seeds.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::delivery::DeliveryTally;
use super::population::{beta, draw_bids, draw_gender};
use super::signals::perturb;
use super::{
    build_population, match_top_q, perceived_signals, run_auction, AdvertiserClass, BidConfig, DeliveryOutcome,
    Gender, MediatorRegime, PopulationConfig,
};
use crate::error::{Error, Result};
use crate::rng::{stage, StageStreams, Substreams};
use crate::special::beta_cdf;

const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    /// Order-statistic engine when every regime leaves competitors
    /// noise-free, otherwise exact.
    #[default]
    Auto,
    Exact,
    OrderStatistic,
}

/// Everything a round needs besides the regimes and the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSetup {
    pub population: PopulationConfig,
    pub bids: BidConfig,
    pub engine: Engine,
}

impl RoundSetup {
    pub fn new(population: PopulationConfig, bids: BidConfig) -> Self {
        RoundSetup { population, bids, engine: Engine::Auto }
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = crate::error::Violations::default();
        v.extend(self.population.validate());
        v.extend(self.bids.validate());
        v.finish()
    }

    fn resolve(&self, regimes: &[MediatorRegime]) -> Result<Engine> {
        let fast_ok = regimes.iter().all(MediatorRegime::competitors_noise_free);
        match self.engine {
            Engine::Auto => Ok(if fast_ok { Engine::OrderStatistic } else { Engine::Exact }),
            Engine::OrderStatistic if !fast_ok => Err(Error::invalid(
                "the order-statistic engine requires noise-free competitors; use the exact engine",
            )),
            e => Ok(e),
        }
    }
}

/// Simulate one round under each regime with common random numbers.
/// Outcomes are returned in regime order.
pub fn simulate_round(
    setup: &RoundSetup,
    regimes: &[MediatorRegime],
    streams: &Substreams,
) -> Result<Vec<DeliveryOutcome>> {
    let focal = [setup.bids.focal_amount()];
    Ok(simulate_grid(setup, regimes, &focal, streams)?.remove(0))
}

/// Simulate one round for every `(focal bid, regime)` pair on the same draws.
/// Entry `[b][r]` is the outcome at `focal_bids[b]` under `regimes[r]`.
pub fn simulate_grid(
    setup: &RoundSetup,
    regimes: &[MediatorRegime],
    focal_bids: &[f64],
    streams: &Substreams,
) -> Result<Vec<Vec<DeliveryOutcome>>> {
    setup.validate()?;
    for r in regimes {
        r.validate()?;
    }
    if let Some(b) = focal_bids.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
        return Err(Error::invalid(format!("focal bid must be positive, got {b}")));
    }
    let mut unique: Vec<MediatorRegime> = Vec::new();
    let slot: Vec<usize> = regimes
        .iter()
        .map(|r| {
            unique.iter().position(|u| u == r).unwrap_or_else(|| {
                unique.push(*r);
                unique.len() - 1
            })
        })
        .collect();
    let tallies = match setup.resolve(&unique)? {
        Engine::Exact => exact_grid(setup, &unique, focal_bids, streams)?,
        _ => order_statistic_grid(setup, &unique, focal_bids, streams)?,
    };
    Ok(tallies.iter().map(|per_regime| slot.iter().map(|&s| per_regime[s]).collect()).collect())
}

fn exact_grid(
    setup: &RoundSetup,
    regimes: &[MediatorRegime],
    focal_bids: &[f64],
    streams: &Substreams,
) -> Result<Vec<Vec<DeliveryOutcome>>> {
    let pop = build_population(&setup.population, &setup.bids, *streams)?;
    let mut out = vec![Vec::with_capacity(regimes.len()); focal_bids.len()];
    for regime in regimes {
        let signals = perceived_signals(&pop, regime, *streams)?;
        let matched = match_top_q(&signals, setup.population.match_quantile)?;
        for (b, &bid) in focal_bids.iter().enumerate() {
            let mut bids = pop.bids().to_vec();
            bids[0] = bid;
            let priced = super::Population::new(
                pop.genders().to_vec(),
                (0..pop.n_users()).map(|u| pop.click_rates(u).to_vec()).collect(),
                bids,
            )?;
            out[b].push(run_auction(&matched, &priced, &signals, *streams)?);
        }
    }
    Ok(out)
}

struct Stages {
    gender: StageStreams,
    focal_rate: StageStreams,
    noise: StageStreams,
    threshold: StageStreams,
    competitor: StageStreams,
    click: StageStreams,
}

impl Stages {
    fn new(s: &Substreams) -> Self {
        Stages {
            gender: s.stage(stage::GENDER),
            focal_rate: s.stage(stage::FOCAL_RATE),
            noise: s.stage(stage::NOISE),
            threshold: s.stage(stage::THRESHOLD),
            competitor: s.stage(stage::COMPETITOR),
            click: s.stage(stage::CLICK),
        }
    }
}

struct FocalDraws {
    female: rand_distr::Beta<f64>,
    male: rand_distr::Beta<f64>,
    male_share: f64,
}

impl FocalDraws {
    fn new(cfg: &PopulationConfig) -> Result<Self> {
        Ok(FocalDraws {
            female: beta(cfg.focal_shapes(Gender::Female))?,
            male: beta(cfg.focal_shapes(Gender::Male))?,
            male_share: cfg.male_share,
        })
    }

    /// Gender, true focal click rate and standard-normal focal noise of user `u`.
    fn draw(&self, st: &Stages, u: u64) -> (Gender, f64, f64) {
        let g = draw_gender(&mut st.gender.at(u), self.male_share);
        let dist = match g {
            Gender::Female => &self.female,
            Gender::Male => &self.male,
        };
        let r = dist.sample(&mut st.focal_rate.at(u));
        let z: f64 = StandardNormal.sample(&mut st.noise.at(u));
        (g, r, z)
    }
}

/// Survival function of the minimum rank among a uniform `m`-subset of `n`
/// ranks: `S[t] = P(J >= t) = C(n-t, m) / C(n, m)`.
fn min_rank_survival(n: usize, m: usize) -> Vec<f64> {
    let mut s = Vec::with_capacity(n - m + 1);
    let mut cur = 1.0;
    s.push(cur);
    for t in 0..n - m {
        cur *= (n - t - m) as f64 / (n - t) as f64;
        s.push(cur);
    }
    s
}

fn order_statistic_grid(
    setup: &RoundSetup,
    regimes: &[MediatorRegime],
    focal_bids: &[f64],
    streams: &Substreams,
) -> Result<Vec<Vec<DeliveryOutcome>>> {
    let cfg = &setup.population;
    let n_adv = cfg.n_advertisers;
    let k = cfg.matched_set_size()?;
    let n = n_adv - 1;
    let m = k - 1;
    let (ca, cb) = cfg.competitor_shapes();
    let threshold = if k < n_adv { Some(beta(((n - k + 1) as f64, k as f64))?) } else { None };
    let survival = min_rank_survival(n, m);
    let mut sorted: Vec<f64> = draw_bids(n_adv, &setup.bids, streams).split_off(1);
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));

    let st = Stages::new(streams);
    let focal = FocalDraws::new(cfg)?;
    let sigmas: Vec<(f64, f64)> = regimes
        .iter()
        .map(|r| (r.sigma(AdvertiserClass::Focal, Gender::Female), r.sigma(AdvertiserClass::Focal, Gender::Male)))
        .collect();
    let n_cells = focal_bids.len() * regimes.len();
    let n_chunks = cfg.n_users.div_ceil(CHUNK);

    let chunks: Vec<Vec<DeliveryTally>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut tallies = vec![DeliveryTally::default(); n_cells];
            let mut signals = vec![0.0; regimes.len()];
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(cfg.n_users);
            for u in lo as u64..hi as u64 {
                let (g, r, z) = focal.draw(&st, u);
                let v = threshold.as_ref().map(|t| t.sample(&mut st.threshold.at(u)));
                let cmax = (m > 0).then(|| {
                    let x: f64 = st.competitor.at(u).random();
                    let j = survival.partition_point(|s| *s > x) - 1;
                    sorted[j]
                });
                let clicked = st.click.at(u).random::<f64>() < r;
                for (ri, &(sf, sm)) in sigmas.iter().enumerate() {
                    let sigma = if g == Gender::Female { sf } else { sm };
                    signals[ri] = perturb(r, sigma, z);
                }
                for (ri, &s) in signals.iter().enumerate() {
                    let matched = match v {
                        None => true,
                        Some(v) => s >= 1.0 || beta_cdf(ca, cb, s) >= v,
                    };
                    for (b, &bid) in focal_bids.iter().enumerate() {
                        let t = &mut tallies[b * regimes.len() + ri];
                        t.users += 1;
                        if !matched {
                            continue;
                        }
                        t.record_match(g);
                        match cmax {
                            None => t.record_win(g, r, s, 0.0, clicked),
                            Some(cm) if bid >= cm => t.record_win(g, r, s, cm, clicked),
                            Some(_) => {}
                        }
                    }
                }
            }
            tallies
        })
        .collect();

    let mut total = vec![DeliveryTally::default(); n_cells];
    for chunk in &chunks {
        for (t, c) in total.iter_mut().zip(chunk) {
            t.merge(c);
        }
    }
    Ok((0..focal_bids.len())
        .map(|b| (0..regimes.len()).map(|ri| total[b * regimes.len() + ri].outcome()).collect())
        .collect())
}

/// Realized focal noise `s - r` on female users under `regime`, the draws an
/// A3 distributional check compares across arms.
pub fn mediator_draws(cfg: &PopulationConfig, regime: &MediatorRegime, streams: &Substreams) -> Result<Vec<f64>> {
    cfg.validate()?;
    regime.validate()?;
    let st = Stages::new(streams);
    let focal = FocalDraws::new(cfg)?;
    Ok((0..cfg.n_users as u64)
        .filter_map(|u| {
            let (g, r, z) = focal.draw(&st, u);
            (g == Gender::Female).then(|| perturb(r, regime.sigma(AdvertiserClass::Focal, g), z) - r)
        })
        .collect())
}
