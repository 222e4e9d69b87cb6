//! Synthetic population and the two-stage matching-then-auction delivery model.
//!
//! Each user is matched to the `⌈qN⌉` advertisers with the highest perceived
//! click rate `s = r + ε`; the highest bidder among the matched set wins a
//! single second-price auction. The mediator is the standard deviation of
//! `ε`, set per advertiser class and user gender by a [`MediatorRegime`].
//! Advertiser 0 is the focal advertiser throughout.

mod delivery;
mod engine;
mod lognormal;
mod matching;
mod population;
mod signals;

use serde::{Deserialize, Serialize};

use crate::error::{Result, Violations};

pub use delivery::{run_auction, DeliveryOutcome, DeliveryTally};
pub use engine::{mediator_draws, simulate_grid, simulate_round, Engine, RoundSetup};
pub use lognormal::{calibrate_lognormal, LogNormal};
pub use matching::{match_top_q, matched_set_size, MatchedSets};
pub use population::{build_population, Population};
pub use signals::{perceived_signals, SignalMatrix};

/// Index of the focal advertiser.
pub const FOCAL: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gender {
    Female,
    Male,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AdvertiserClass {
    Focal,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationConfig {
    pub n_users: usize,
    pub n_advertisers: usize,
    /// Probability that a user is male.
    pub male_share: f64,
    /// Fraction `q` of advertisers matched to each user.
    pub match_quantile: f64,
    /// Mean of the Beta click-rate distribution.
    pub click_mean: f64,
    /// Beta concentration `κ`; shapes are `(μκ, (1-μ)κ)`.
    pub click_concentration: f64,
    /// Mean click rate of the focal advertiser on female users. `None` means
    /// `click_mean`.
    pub female_click_mean: Option<f64>,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        PopulationConfig {
            n_users: 10_000,
            n_advertisers: 500,
            male_share: 0.462,
            match_quantile: 0.1,
            click_mean: 0.02,
            click_concentration: 50.0,
            female_click_mean: None,
        }
    }
}

impl PopulationConfig {
    pub fn validate(&self) -> Result<()> {
        let mut v = Violations::default();
        v.check(self.n_users >= 1, || "n_users must be at least 1".into());
        v.check(self.n_advertisers >= 1, || "n_advertisers must be at least 1".into());
        v.check(self.male_share > 0.0 && self.male_share < 1.0, || {
            format!("male_share must lie in (0, 1), got {}", self.male_share)
        });
        v.check(self.click_mean > 0.0 && self.click_mean < 1.0, || {
            format!("click_mean must lie in (0, 1), got {}", self.click_mean)
        });
        v.check(self.click_concentration > 0.0 && self.click_concentration.is_finite(), || {
            format!("click_concentration must be positive, got {}", self.click_concentration)
        });
        if let Some(m) = self.female_click_mean {
            v.check(m > 0.0 && m < 1.0, || format!("female_click_mean must lie in (0, 1), got {m}"));
        }
        if self.n_advertisers >= 1 {
            v.extend(matched_set_size(self.match_quantile, self.n_advertisers).map(|_| ()));
        }
        v.finish()
    }

    pub fn matched_set_size(&self) -> Result<usize> {
        matched_set_size(self.match_quantile, self.n_advertisers)
    }

    /// Beta shapes of competitor click rates (and of the focal rate on males).
    pub fn competitor_shapes(&self) -> (f64, f64) {
        beta_shapes(self.click_mean, self.click_concentration)
    }

    /// Beta shapes of the focal advertiser's click rate on a user of `gender`.
    pub fn focal_shapes(&self, gender: Gender) -> (f64, f64) {
        match gender {
            Gender::Female => beta_shapes(self.female_click_mean.unwrap_or(self.click_mean), self.click_concentration),
            Gender::Male => self.competitor_shapes(),
        }
    }
}

fn beta_shapes(mean: f64, concentration: f64) -> (f64, f64) {
    (mean * concentration, (1.0 - mean) * concentration)
}

/// How the focal bid is pinned. The other representation is derived from the
/// bid distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FocalBid {
    Amount(f64),
    Percentile(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidConfig {
    pub log_mu: f64,
    pub log_sigma: f64,
    pub focal: FocalBid,
}

/// Published bid quantiles the default LogNormal is fitted to.
pub const DEFAULT_BID_QUANTILES: [(f64, f64); 2] = [(2.28, 0.95), (3.63, 0.995)];

impl Default for BidConfig {
    fn default() -> Self {
        let (log_mu, log_sigma) = calibrate_lognormal(DEFAULT_BID_QUANTILES[0], DEFAULT_BID_QUANTILES[1])
            .expect("default bid quantiles are well posed");
        BidConfig { log_mu, log_sigma, focal: FocalBid::Percentile(0.995) }
    }
}

impl BidConfig {
    pub fn distribution(&self) -> LogNormal {
        LogNormal { log_mu: self.log_mu, log_sigma: self.log_sigma }
    }

    pub fn with_focal(&self, focal: FocalBid) -> BidConfig {
        BidConfig { focal, ..self.clone() }
    }

    pub fn focal_amount(&self) -> f64 {
        match self.focal {
            FocalBid::Amount(b) => b,
            FocalBid::Percentile(p) => self.distribution().quantile(p),
        }
    }

    pub fn focal_percentile(&self) -> f64 {
        match self.focal {
            FocalBid::Amount(b) => self.distribution().cdf(b),
            FocalBid::Percentile(p) => p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = Violations::default();
        v.check(self.log_mu.is_finite(), || format!("log_mu must be finite, got {}", self.log_mu));
        v.check(self.log_sigma > 0.0 && self.log_sigma.is_finite(), || {
            format!("log_sigma must be positive, got {}", self.log_sigma)
        });
        match self.focal {
            FocalBid::Amount(b) => v.check(b > 0.0 && b.is_finite(), || format!("focal bid must be positive, got {b}")),
            FocalBid::Percentile(p) => {
                v.check(p > 0.0 && p < 1.0, || format!("focal percentile must lie in (0, 1), got {p}"))
            }
        }
        v.finish()
    }
}

/// Standard deviations of the matching-signal noise by advertiser class and
/// user gender.
///
/// The `other_*` entries apply to the first `⌈noisy_competitor_share·(N-1)⌉`
/// competitors (advertisers `1..`); the remaining competitors are noise-free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediatorRegime {
    pub focal_female: f64,
    pub focal_male: f64,
    pub other_female: f64,
    pub other_male: f64,
    pub noisy_competitor_share: f64,
}

impl MediatorRegime {
    /// `S(A)`: every advertiser observes the true click rate.
    pub const fn noise_free() -> Self {
        MediatorRegime { focal_female: 0.0, focal_male: 0.0, other_female: 0.0, other_male: 0.0, noisy_competitor_share: 0.0 }
    }

    /// `S(B)`: the focal advertiser's signal on female users carries noise `sigma`.
    pub const fn focal_female(sigma: f64) -> Self {
        MediatorRegime { focal_female: sigma, ..Self::noise_free() }
    }

    /// `S(B)` where a share of competitors also runs the noisy creative.
    pub const fn with_noisy_competitors(sigma: f64, noisy_competitor_share: f64) -> Self {
        MediatorRegime { focal_female: sigma, other_female: sigma, noisy_competitor_share, ..Self::noise_free() }
    }

    pub fn sigma(&self, class: AdvertiserClass, gender: Gender) -> f64 {
        match (class, gender) {
            (AdvertiserClass::Focal, Gender::Female) => self.focal_female,
            (AdvertiserClass::Focal, Gender::Male) => self.focal_male,
            (AdvertiserClass::Other, Gender::Female) => self.other_female,
            (AdvertiserClass::Other, Gender::Male) => self.other_male,
        }
    }

    /// Number of competitors subject to the `other_*` noise entries.
    pub fn noisy_competitors(&self, n_advertisers: usize) -> usize {
        if self.other_female == 0.0 && self.other_male == 0.0 {
            return 0;
        }
        let n = n_advertisers.saturating_sub(1);
        ((self.noisy_competitor_share * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n)
    }

    pub fn is_noise_free(&self) -> bool {
        self.focal_female == 0.0 && self.focal_male == 0.0 && self.competitors_noise_free()
    }

    pub fn competitors_noise_free(&self) -> bool {
        self.noisy_competitor_share == 0.0 || (self.other_female == 0.0 && self.other_male == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = Violations::default();
        for (name, s) in [
            ("focal_female", self.focal_female),
            ("focal_male", self.focal_male),
            ("other_female", self.other_female),
            ("other_male", self.other_male),
        ] {
            v.check(s >= 0.0 && s.is_finite(), || format!("regime sigma {name} must be finite and >= 0, got {s}"));
        }
        v.check((0.0..=1.0).contains(&self.noisy_competitor_share), || {
            format!("noisy_competitor_share must lie in [0, 1], got {}", self.noisy_competitor_share)
        });
        v.finish()
    }
}

impl Default for MediatorRegime {
    fn default() -> Self {
        Self::noise_free()
    }
}
