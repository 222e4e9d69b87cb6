use rand::Rng;
use rand_distr::{Beta, Distribution};

use super::{BidConfig, Gender, PopulationConfig, FOCAL};
use crate::error::{Error, Result};
use crate::rng::{stage, Substreams};

/// One round's users, click rates and bids.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    genders: Vec<Gender>,
    /// Row-major `[user × advertiser]`.
    click_rates: Vec<f64>,
    bids: Vec<f64>,
}

impl Population {
    /// Assemble a population from explicit parts; `click_rates` holds one row
    /// per user.
    pub fn new(genders: Vec<Gender>, click_rates: Vec<Vec<f64>>, bids: Vec<f64>) -> Result<Self> {
        if genders.len() != click_rates.len() {
            return Err(Error::Dimension(format!(
                "{} genders but {} click-rate rows",
                genders.len(),
                click_rates.len()
            )));
        }
        let n_adv = bids.len();
        if n_adv == 0 {
            return Err(Error::invalid("population needs at least one advertiser"));
        }
        let mut flat = Vec::with_capacity(genders.len() * n_adv);
        for (u, row) in click_rates.into_iter().enumerate() {
            if row.len() != n_adv {
                return Err(Error::Dimension(format!("user {u} has {} click rates, expected {n_adv}", row.len())));
            }
            if let Some(r) = row.iter().find(|r| !(0.0..=1.0).contains(*r)) {
                return Err(Error::invalid(format!("user {u} has click rate {r} outside [0, 1]")));
            }
            flat.extend(row);
        }
        if let Some(b) = bids.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
            return Err(Error::invalid(format!("bid {b} is not a finite nonnegative amount")));
        }
        Ok(Population { genders, click_rates: flat, bids })
    }

    pub fn n_users(&self) -> usize {
        self.genders.len()
    }

    pub fn n_advertisers(&self) -> usize {
        self.bids.len()
    }

    pub fn gender(&self, user: usize) -> Gender {
        self.genders[user]
    }

    pub fn genders(&self) -> &[Gender] {
        &self.genders
    }

    pub fn click_rate(&self, user: usize, advertiser: usize) -> f64 {
        self.click_rates[user * self.bids.len() + advertiser]
    }

    pub fn click_rates(&self, user: usize) -> &[f64] {
        let n = self.bids.len();
        &self.click_rates[user * n..(user + 1) * n]
    }

    pub fn bids(&self) -> &[f64] {
        &self.bids
    }
}

pub(crate) fn draw_gender<R: Rng>(rng: &mut R, male_share: f64) -> Gender {
    if rng.random::<f64>() < male_share {
        Gender::Male
    } else {
        Gender::Female
    }
}

pub(crate) fn beta(shapes: (f64, f64)) -> Result<Beta<f64>> {
    Beta::new(shapes.0, shapes.1)
        .map_err(|e| Error::invalid(format!("Beta({}, {}) is not a valid distribution: {e}", shapes.0, shapes.1)))
}

/// Draw the competitors' bids (advertisers `1..N`) and pin the focal bid.
pub(crate) fn draw_bids(n_advertisers: usize, bids: &BidConfig, streams: &Substreams) -> Vec<f64> {
    let dist = bids.distribution();
    let mut rng = streams.rng(stage::BIDS, 0);
    let mut out = Vec::with_capacity(n_advertisers);
    out.push(bids.focal_amount());
    out.extend((1..n_advertisers).map(|_| dist.sample(&mut rng)));
    out
}

/// Draw a population for one round. Genders, the focal advertiser's rates and
/// the competitors' rates come from separate per-user streams; competitor
/// bids are redrawn every round and the focal bid is the requested quantile
/// of the bid distribution.
pub fn build_population(
    config: &PopulationConfig,
    bid_config: &BidConfig,
    streams: impl Into<Substreams>,
) -> Result<Population> {
    config.validate()?;
    bid_config.validate()?;
    let streams = streams.into();
    let n = config.n_advertisers;
    let competitor = beta(config.competitor_shapes())?;
    let focal_female = beta(config.focal_shapes(Gender::Female))?;
    let focal_male = beta(config.focal_shapes(Gender::Male))?;
    let genders_s = streams.stage(stage::GENDER);
    let focal_s = streams.stage(stage::FOCAL_RATE);
    let rates_s = streams.stage(stage::RATES);

    let mut genders = Vec::with_capacity(config.n_users);
    let mut click_rates = Vec::with_capacity(config.n_users * n);
    for u in 0..config.n_users as u64 {
        let g = draw_gender(&mut genders_s.at(u), config.male_share);
        genders.push(g);
        let focal = match g {
            Gender::Female => &focal_female,
            Gender::Male => &focal_male,
        };
        click_rates.push(focal.sample(&mut focal_s.at(u)));
        let mut rng = rates_s.at(u);
        click_rates.extend((1..n).map(|_| competitor.sample(&mut rng)));
    }
    let bids = draw_bids(n, bid_config, &streams);
    debug_assert_eq!(bids.len(), n);
    debug_assert_eq!(FOCAL, 0);
    Ok(Population { genders, click_rates, bids })
}
