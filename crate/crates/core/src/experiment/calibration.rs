//! Expected delivery outcomes by quadrature, and the knob calibration built
//! on them.
//!
//! With noise-free competitors the focal advertiser is matched to a user
//! with perceived signal `s` with probability `H(s) = G(F(s))`, where `F` is
//! the competitor click-rate CDF and `G` the `Beta(N-K+1, K)` CDF. Given a
//! match it wins with probability `F_bid(b0)^(K-1)` regardless of gender, so
//! the expected female share of impressions equals that of matches:
//! `p_F(1-π_M) / (p_F(1-π_M) + p_M π_M)` with `p_g = E[H(s) | g]`.

use serde::{Deserialize, Serialize};

use super::estimands::{decompose, Decomposition};
use crate::auction::{AdvertiserClass, BidConfig, Gender, MediatorRegime, PopulationConfig};
use crate::error::{Error, Result};
use crate::special::{beta_cdf, beta_quantile, normal_quantile};

const H_GRID: usize = 20_000;
const RATE_NODES: usize = 1_000;
const NOISE_NODES: usize = 128;
const BISECTIONS: usize = 60;

/// Match probability as a function of the focal signal, tabulated for one
/// population configuration.
pub struct MatchModel {
    config: PopulationConfig,
    /// `H` at `i / H_GRID`; `None` when every advertiser is matched.
    table: Option<Vec<f64>>,
    noise_z: Vec<f64>,
}

impl MatchModel {
    pub fn new(config: &PopulationConfig) -> Result<Self> {
        config.validate()?;
        let n_adv = config.n_advertisers;
        let k = config.matched_set_size()?;
        let (a, b) = config.competitor_shapes();
        let table = (k < n_adv).then(|| {
            let (ga, gb) = ((n_adv - k) as f64, k as f64);
            (0..=H_GRID).map(|i| beta_cdf(ga, gb, beta_cdf(a, b, i as f64 / H_GRID as f64))).collect()
        });
        let noise_z = (0..NOISE_NODES).map(|j| normal_quantile((j as f64 + 0.5) / NOISE_NODES as f64)).collect();
        Ok(MatchModel { config: config.clone(), table, noise_z })
    }

    fn h(&self, s: f64) -> f64 {
        let Some(t) = &self.table else { return 1.0 };
        let x = s.clamp(0.0, 1.0) * H_GRID as f64;
        let i = (x.floor() as usize).min(H_GRID - 1);
        let f = x - i as f64;
        t[i] + f * (t[i + 1] - t[i])
    }

    /// `P(matched | gender)` for focal signal noise `sigma`.
    pub fn match_probability(&self, gender: Gender, sigma: f64) -> f64 {
        let (a, b) = self.config.focal_shapes(gender);
        let mut total = 0.0;
        for i in 0..RATE_NODES {
            let r = beta_quantile(a, b, (i as f64 + 0.5) / RATE_NODES as f64);
            if sigma == 0.0 {
                total += self.h(r);
            } else {
                total += self.noise_z.iter().map(|z| self.h(r + sigma * z)).sum::<f64>() / NOISE_NODES as f64;
            }
        }
        total / RATE_NODES as f64
    }

    /// Expected female share of focal matches (and impressions) under `regime`.
    pub fn female_share(&self, regime: &MediatorRegime) -> Result<f64> {
        if !regime.competitors_noise_free() {
            return Err(Error::invalid("expected shares assume noise-free competitors"));
        }
        let pf = self.match_probability(Gender::Female, regime.sigma(AdvertiserClass::Focal, Gender::Female));
        let pm = self.match_probability(Gender::Male, regime.sigma(AdvertiserClass::Focal, Gender::Male));
        let f = pf * (1.0 - self.config.male_share);
        let m = pm * self.config.male_share;
        if f + m <= 0.0 {
            return Err(Error::Degenerate("focal advertiser is never matched".into()));
        }
        Ok(f / (f + m))
    }

    /// Expected focal matches per round under `regime`.
    pub fn expected_matches(&self, regime: &MediatorRegime) -> f64 {
        let pf = self.match_probability(Gender::Female, regime.sigma(AdvertiserClass::Focal, Gender::Female));
        let pm = self.match_probability(Gender::Male, regime.sigma(AdvertiserClass::Focal, Gender::Male));
        self.config.n_users as f64 * (pf * (1.0 - self.config.male_share) + pm * self.config.male_share)
    }
}

/// `P(focal wins | matched) = F_bid(b0)^(K-1)`.
pub fn win_probability_given_match(config: &PopulationConfig, bids: &BidConfig) -> Result<f64> {
    let k = config.matched_set_size()?;
    Ok(bids.focal_percentile().powi(k as i32 - 1))
}

/// Expected impression-level decomposition under `regime_b`.
pub fn expected_decomposition(config: &PopulationConfig, regime_b: &MediatorRegime) -> Result<Decomposition> {
    let model = MatchModel::new(config)?;
    let base = model.female_share(&MediatorRegime::noise_free())?;
    let treated = model.female_share(regime_b)?;
    decompose(base, treated, treated)
}

/// Targets for [`calibrate_knobs`]: the NIE at focal female noise `sigma`
/// and, optionally, the noise-free female share of impressions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTarget {
    pub baseline_share: Option<f64>,
    pub nie: f64,
    pub sigma: f64,
}

impl Default for CalibrationTarget {
    fn default() -> Self {
        CalibrationTarget { baseline_share: None, nie: 0.1845, sigma: 0.03 }
    }
}

/// Search interval for `κ`. Below about 10 the Beta mass piles up at zero and
/// the NIE stops being monotone in `κ`.
pub const CONCENTRATION_BRACKET: (f64, f64) = (10.0, 1e4);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub click_concentration: f64,
    pub female_click_mean: f64,
    pub baseline_share: f64,
    pub treated_share: f64,
    pub nie: f64,
    pub expected_wins: [f64; 2],
}

fn bisect(mut lo: f64, mut hi: f64, target: f64, f: &mut dyn FnMut(f64) -> Result<f64>) -> Result<f64> {
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if !((flo - target) * (fhi - target) <= 0.0) {
        return Err(Error::Bracket { target, lo: flo.min(fhi), hi: flo.max(fhi) });
    }
    let increasing = fhi >= flo;
    for _ in 0..BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if (f(mid)? < target) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-10 * hi.abs().max(1e-12) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn solve_female_mean(config: &PopulationConfig, baseline_share: f64) -> Result<f64> {
    let model = MatchModel::new(config)?;
    let mut share = |mean: f64| {
        let c = PopulationConfig { female_click_mean: Some(mean), ..config.clone() };
        MatchModel { config: c, table: model.table.clone(), noise_z: Vec::new() }
            .female_share(&MediatorRegime::noise_free())
    };
    bisect(1e-4, 0.5, baseline_share, &mut share)
}

/// Tune the Beta concentration `κ`, and optionally `female_click_mean`, so
/// the expected NIE (and noise-free female share) hit `target`. When a
/// baseline share is requested the female mean is solved for it at each
/// trial `κ`; otherwise it stays at `click_mean`. `κ` is bisected in log
/// space over [`CONCENTRATION_BRACKET`] to match the NIE.
pub fn calibrate_knobs(config: &PopulationConfig, bids: &BidConfig, target: CalibrationTarget) -> Result<Calibration> {
    config.validate()?;
    bids.validate()?;
    if let Some(b) = target.baseline_share {
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::invalid(format!("baseline share must lie in (0, 1), got {b}")));
        }
    }
    if !(target.sigma > 0.0 && target.nie > 0.0) {
        return Err(Error::invalid("calibration needs a positive sigma and a positive NIE target"));
    }
    let at = |log_kappa: f64| -> Result<PopulationConfig> {
        let c = PopulationConfig { click_concentration: log_kappa.exp(), female_click_mean: None, ..config.clone() };
        let mean = match target.baseline_share {
            Some(b) => solve_female_mean(&c, b)?,
            None => c.click_mean,
        };
        Ok(PopulationConfig { female_click_mean: Some(mean), ..c })
    };
    let regime = MediatorRegime::focal_female(target.sigma);
    let mut nie = |log_kappa: f64| expected_decomposition(&at(log_kappa)?, &regime).map(|d| d.nie);
    let (lo, hi) = CONCENTRATION_BRACKET;
    let log_kappa = bisect(lo.ln(), hi.ln(), target.nie, &mut nie)?;
    let tuned = at(log_kappa)?;
    let model = MatchModel::new(&tuned)?;
    let baseline = model.female_share(&MediatorRegime::noise_free())?;
    let treated = model.female_share(&regime)?;
    let win = win_probability_given_match(&tuned, bids)?;
    Ok(Calibration {
        click_concentration: tuned.click_concentration,
        female_click_mean: tuned.female_click_mean.expect("set above"),
        baseline_share: baseline,
        treated_share: treated,
        nie: treated - baseline,
        expected_wins: [
            model.expected_matches(&MediatorRegime::noise_free()) * win,
            model.expected_matches(&regime) * win,
        ],
    })
}
