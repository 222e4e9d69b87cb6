#![allow(dead_code)]

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use triarm_core::panel::{AgeBand, BidLevel, Panel, PanelGender, PanelRow};
use triarm_core::Arm;

pub fn day(offset: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(2025, 3, 1).unwrap() + chrono::Days::new(offset as u64)
}

pub fn binomial(rng: &mut ChaCha8Rng, n: u64, p: f64) -> u64 {
    Binomial::new(n, p.clamp(0.0, 1.0)).unwrap().sample(rng)
}

/// Arm-level truth of a synthetic panel.
#[derive(Debug, Clone, Copy)]
pub struct Truth {
    pub female_share: [f64; 3],
    pub ctr: [f64; 3],
    /// Standard deviation of a per-(day, slot, arm) shift of the female share.
    pub share_shock: f64,
}

impl Truth {
    pub fn null(share: f64, ctr: f64) -> Self {
        Truth { female_share: [share; 3], ctr: [ctr; 3], share_shock: 0.0 }
    }
}

/// Cell-level panel with `days × slots` keys per arm and about `size`
/// impressions per key. Impressions spread evenly over age bands and 1%
/// unknown gender.
pub fn synthetic_panel(seed: u64, days: u32, slots: u32, size: u64, truth: Truth) -> Panel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
    let mut rows = Vec::new();
    for arm in Arm::ALL {
        let z = arm.index();
        for d in 0..days {
            for s in 0..slots {
                let n = size / 2 + rng.random_range(0..=size);
                let p = (truth.female_share[z] + truth.share_shock * normal.sample(&mut rng)).clamp(0.01, 0.99);
                let unknown = binomial(&mut rng, n, 0.01);
                let female = binomial(&mut rng, n - unknown, p);
                let male = n - unknown - female;
                for (gender, mut left) in [(PanelGender::Female, female), (PanelGender::Male, male), (PanelGender::Unknown, unknown)] {
                    for (i, age) in AgeBand::ALL.into_iter().enumerate() {
                        let imp = if i == 5 { left } else { binomial(&mut rng, left, 1.0 / (6 - i) as f64) };
                        left -= imp;
                        let clicks = binomial(&mut rng, imp, truth.ctr[z]);
                        rows.push(PanelRow {
                            arm,
                            bid_level: BidLevel::High,
                            age_band: age,
                            gender,
                            day: day(d),
                            time_slot: s,
                            impressions: imp,
                            clicks,
                            reach: imp,
                            spend: imp as f64 * 0.01,
                        });
                    }
                }
            }
        }
    }
    Panel::from_rows(rows).unwrap()
}
