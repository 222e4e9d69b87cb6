use serde::Serialize;
use triarm_core::auction::{
    calibrate_lognormal, BidConfig, Engine, FocalBid, MediatorRegime, PopulationConfig, RoundSetup,
    DEFAULT_BID_QUANTILES,
};
use triarm_core::experiment::{ExperimentConfig, Pairing};

use crate::args::{EngineArg, ExperimentArgs, ModelArgs, PairingArg};
use crate::error::CliError;

pub const DEFAULT_ROUNDS: usize = 1000;
pub const DEFAULT_SIGMA: f64 = 0.03;

fn parse_quantile(s: &str) -> Result<(f64, f64), String> {
    let (amount, pct) = s.split_once('@').ok_or_else(|| format!("bid quantile `{s}` is not AMOUNT@PERCENTILE"))?;
    let amount: f64 = amount.trim().parse().map_err(|_| format!("bad bid amount `{amount}`"))?;
    let pct: f64 = pct.trim().parse().map_err(|_| format!("bad bid percentile `{pct}`"))?;
    Ok((amount, pct))
}

fn parse_quantiles(s: &str) -> Result<[(f64, f64); 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [a, b] => Ok([parse_quantile(a)?, parse_quantile(b)?]),
        _ => Err(format!("bid_quantiles needs exactly two entries, got `{s}`")),
    }
}

/// Population, bids, engine and the competitor part of the treated regime.
#[derive(Debug, Clone, Serialize)]
pub struct Model {
    pub setup: RoundSetup,
    pub bid_quantiles: [(f64, f64); 2],
    pub sigma_male: f64,
    pub competitor_sigma_female: f64,
    pub competitor_sigma_male: f64,
    pub noisy_competitor_share: f64,
}

impl Model {
    pub fn regime(&self, sigma: f64) -> MediatorRegime {
        MediatorRegime {
            focal_female: sigma,
            focal_male: self.sigma_male,
            other_female: self.competitor_sigma_female,
            other_male: self.competitor_sigma_male,
            noisy_competitor_share: self.noisy_competitor_share,
        }
    }
}

pub fn resolve_model(m: &ModelArgs) -> Result<Model, CliError> {
    let mut errors = Vec::new();
    let d = PopulationConfig::default();
    let population = PopulationConfig {
        n_users: m.n_users.unwrap_or(d.n_users),
        n_advertisers: m.n_advertisers.unwrap_or(d.n_advertisers),
        male_share: m.male_share.unwrap_or(d.male_share),
        match_quantile: m.match_quantile.unwrap_or(d.match_quantile),
        click_mean: m.click_mean.unwrap_or(d.click_mean),
        click_concentration: m.click_concentration.unwrap_or(d.click_concentration),
        female_click_mean: m.female_click_mean,
    };
    if let Err(e) = population.validate() {
        errors.extend(config_messages(e));
    }
    let quantiles = match m.bid_quantiles.as_deref().map(parse_quantiles) {
        None => DEFAULT_BID_QUANTILES,
        Some(Ok(q)) => q,
        Some(Err(e)) => {
            errors.push(e);
            DEFAULT_BID_QUANTILES
        }
    };
    let focal = match (m.bid_amount, m.bid_percentile) {
        (Some(_), Some(_)) => {
            errors.push("bid_amount and bid_percentile are mutually exclusive".into());
            FocalBid::Percentile(0.995)
        }
        (Some(a), None) => FocalBid::Amount(a),
        (None, p) => FocalBid::Percentile(p.unwrap_or(0.995)),
    };
    let bids = match calibrate_lognormal(quantiles[0], quantiles[1]) {
        Ok((log_mu, log_sigma)) => {
            let b = BidConfig { log_mu, log_sigma, focal };
            if let Err(e) = b.validate() {
                errors.extend(config_messages(e));
            }
            b
        }
        Err(e) => {
            errors.extend(config_messages(e));
            BidConfig::default()
        }
    };
    let engine = match m.engine.unwrap_or(EngineArg::Auto) {
        EngineArg::Auto => Engine::Auto,
        EngineArg::Exact => Engine::Exact,
        EngineArg::OrderStatistic => Engine::OrderStatistic,
    };
    let model = Model {
        setup: RoundSetup { population, bids, engine },
        bid_quantiles: quantiles,
        sigma_male: m.sigma_male.unwrap_or(0.0),
        competitor_sigma_female: m.competitor_sigma_female.unwrap_or(0.0),
        competitor_sigma_male: m.competitor_sigma_male.unwrap_or(0.0),
        noisy_competitor_share: m.noisy_competitor_share.unwrap_or(0.0),
    };
    if errors.is_empty() {
        Ok(model)
    } else {
        Err(CliError::Config(errors))
    }
}

pub fn config_messages(e: triarm_core::Error) -> Vec<String> {
    match e {
        triarm_core::Error::Config(v) => v,
        other => vec![other.to_string()],
    }
}

/// Resolved experiment settings plus the seed.
#[derive(Debug, Clone, Serialize)]
pub struct Experiment {
    pub model: Model,
    pub experiment: ExperimentConfig,
    pub sigma: f64,
}

pub fn resolve_experiment(a: &ExperimentArgs) -> Result<(Experiment, u64), CliError> {
    let mut errors = Vec::new();
    let model = match resolve_model(&a.model) {
        Ok(m) => Some(m),
        Err(CliError::Config(v)) => {
            errors.extend(v);
            None
        }
        Err(e) => return Err(e),
    };
    if a.seed.is_none() {
        errors.push("seed is required (--seed)".into());
    }
    let sigma = a.sigma.unwrap_or(DEFAULT_SIGMA);
    let rounds = a.rounds.unwrap_or(DEFAULT_ROUNDS);
    let ci_level = a.ci_level.unwrap_or(0.95);
    if rounds < 2 {
        errors.push(format!("rounds must be at least 2, got {rounds}"));
    }
    if !(ci_level > 0.0 && ci_level < 1.0) {
        errors.push(format!("ci_level must lie in (0, 1), got {ci_level}"));
    }
    let (Some(model), Some(seed), true) = (model, a.seed, errors.is_empty()) else {
        return Err(CliError::Config(errors));
    };
    let mut experiment = ExperimentConfig::new(model.setup.clone(), model.regime(sigma), rounds);
    experiment.pairing = match a.pairing.unwrap_or(PairingArg::Shared) {
        PairingArg::Shared => Pairing::Shared,
        PairingArg::Independent => Pairing::Independent,
    };
    experiment.ci_level = ci_level;
    experiment.validate()?;
    Ok((Experiment { model, experiment, sigma }, seed))
}
