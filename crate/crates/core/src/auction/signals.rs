use rand_distr::{Distribution, StandardNormal};

use super::{AdvertiserClass, Gender, MediatorRegime, Population, FOCAL};
use crate::error::Result;
use crate::rng::{stage, Substreams};

/// Perceived click rates `s_{u,i}`, row-major `[user × advertiser]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalMatrix {
    n_advertisers: usize,
    values: Vec<f64>,
}

impl SignalMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n_advertisers = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_advertisers), "ragged signal rows");
        SignalMatrix { n_advertisers, values: rows.into_iter().flatten().collect() }
    }

    pub fn n_users(&self) -> usize {
        if self.n_advertisers == 0 {
            0
        } else {
            self.values.len() / self.n_advertisers
        }
    }

    pub fn n_advertisers(&self) -> usize {
        self.n_advertisers
    }

    pub fn get(&self, user: usize, advertiser: usize) -> f64 {
        self.values[user * self.n_advertisers + advertiser]
    }

    pub fn row(&self, user: usize) -> &[f64] {
        &self.values[user * self.n_advertisers..(user + 1) * self.n_advertisers]
    }
}

pub(crate) fn clamp_signal(s: f64) -> f64 {
    s.clamp(0.0, 1.0)
}

/// Add Gaussian noise with the regime's standard deviation to every click
/// rate and clamp into `[0, 1]`. Zero-noise entries reproduce `r` exactly.
///
/// Each user's noise is drawn from its own stream in advertiser order,
/// starting with the focal advertiser and covering only the competitors the
/// regime marks as noisy.
pub fn perceived_signals(
    pop: &Population,
    regime: &MediatorRegime,
    streams: impl Into<Substreams>,
) -> Result<SignalMatrix> {
    regime.validate()?;
    let streams = streams.into();
    let noise = streams.stage(stage::NOISE);
    let n = pop.n_advertisers();
    let noisy = regime.noisy_competitors(n);
    let mut values = Vec::with_capacity(pop.n_users() * n);
    for u in 0..pop.n_users() {
        let g: Gender = pop.gender(u);
        let rates = pop.click_rates(u);
        let mut rng = noise.at(u as u64);
        let focal_sigma = regime.sigma(AdvertiserClass::Focal, g);
        let other_sigma = regime.sigma(AdvertiserClass::Other, g);
        let z: f64 = StandardNormal.sample(&mut rng);
        values.push(perturb(rates[FOCAL], focal_sigma, z));
        for (i, &r) in rates.iter().enumerate().skip(1) {
            if i <= noisy {
                let z: f64 = StandardNormal.sample(&mut rng);
                values.push(perturb(r, other_sigma, z));
            } else {
                values.push(r);
            }
        }
    }
    Ok(SignalMatrix { n_advertisers: n, values })
}

pub(crate) fn perturb(r: f64, sigma: f64, z: f64) -> f64 {
    if sigma == 0.0 {
        r
    } else {
        clamp_signal(r + sigma * z)
    }
}
