use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Gender, MatchedSets, Population, SignalMatrix, FOCAL};
use crate::error::{Error, Result};
use crate::rng::{stage, Substreams};

/// Running totals from which a [`DeliveryOutcome`] is formed. Merging is
/// exact for counts; float sums are merged in a caller-fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DeliveryTally {
    pub users: u64,
    pub wins: u64,
    pub female_wins: u64,
    pub matches: u64,
    pub female_matches: u64,
    pub clicks: u64,
    pub true_rate_sum: f64,
    pub signal_sum: f64,
    pub spend: f64,
}

impl DeliveryTally {
    pub fn merge(&mut self, other: &DeliveryTally) {
        self.users += other.users;
        self.wins += other.wins;
        self.female_wins += other.female_wins;
        self.matches += other.matches;
        self.female_matches += other.female_matches;
        self.clicks += other.clicks;
        self.true_rate_sum += other.true_rate_sum;
        self.signal_sum += other.signal_sum;
        self.spend += other.spend;
    }

    pub(crate) fn record_match(&mut self, gender: Gender) {
        self.matches += 1;
        if gender == Gender::Female {
            self.female_matches += 1;
        }
    }

    pub(crate) fn record_win(&mut self, gender: Gender, rate: f64, signal: f64, price: f64, clicked: bool) {
        self.wins += 1;
        if gender == Gender::Female {
            self.female_wins += 1;
        }
        self.clicks += u64::from(clicked);
        self.true_rate_sum += rate;
        self.signal_sum += signal;
        self.spend += price;
    }

    pub fn outcome(&self) -> DeliveryOutcome {
        let per_win = |x: f64| if self.wins == 0 { f64::NAN } else { x / self.wins as f64 };
        DeliveryOutcome {
            n_users: self.users,
            wins: self.wins,
            female_wins: self.female_wins,
            matches: self.matches,
            female_matches: self.female_matches,
            clicks: self.clicks,
            mean_true_rate_won: per_win(self.true_rate_sum),
            mean_signal_won: per_win(self.signal_sum),
            spend: self.spend,
        }
    }
}

/// What the focal advertiser sees from one round of delivery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeliveryOutcome {
    pub n_users: u64,
    pub wins: u64,
    pub female_wins: u64,
    pub matches: u64,
    pub female_matches: u64,
    pub clicks: u64,
    /// Mean true click rate over won impressions (`NaN` without wins).
    pub mean_true_rate_won: f64,
    /// Mean perceived signal over won impressions (`NaN` without wins).
    pub mean_signal_won: f64,
    pub spend: f64,
}

impl DeliveryOutcome {
    /// Female share of focal impressions, `None` without wins.
    pub fn female_share(&self) -> Option<f64> {
        (self.wins > 0).then(|| self.female_wins as f64 / self.wins as f64)
    }

    /// Female share of users whose matched set contains the focal advertiser.
    pub fn match_female_share(&self) -> Option<f64> {
        (self.matches > 0).then(|| self.female_matches as f64 / self.matches as f64)
    }

    pub fn ctr(&self) -> Option<f64> {
        (self.wins > 0).then(|| self.clicks as f64 / self.wins as f64)
    }
}

/// Winner and price of a second-price auction over `set`. Ties go to the
/// lowest advertiser index; a lone bidder pays nothing.
pub(crate) fn second_price(set: &[usize], bids: &[f64]) -> (usize, f64) {
    let mut winner = set[0];
    for &i in &set[1..] {
        if bids[i] > bids[winner] || (bids[i] == bids[winner] && i < winner) {
            winner = i;
        }
    }
    let price = set.iter().filter(|&&i| i != winner).map(|&i| bids[i]).fold(0.0, f64::max);
    (winner, price)
}

/// Run one second-price auction per user over their matched set and tally
/// the focal advertiser's deliveries. Clicks on won impressions are
/// Bernoulli draws at the true click rate.
pub fn run_auction(
    matched: &MatchedSets,
    pop: &Population,
    signals: &SignalMatrix,
    streams: impl Into<Substreams>,
) -> Result<DeliveryOutcome> {
    if matched.n_users() != pop.n_users() || signals.n_users() != pop.n_users() {
        return Err(Error::Dimension(format!(
            "{} matched sets and {} signal rows for {} users",
            matched.n_users(),
            signals.n_users(),
            pop.n_users()
        )));
    }
    let click = streams.into().stage(stage::CLICK);
    let mut tally = DeliveryTally::default();
    for u in 0..pop.n_users() {
        let set = matched.set(u);
        if set.is_empty() {
            return Err(Error::EmptyMatchedSet { user: u });
        }
        tally.users += 1;
        let gender = pop.gender(u);
        if set.contains(&FOCAL) {
            tally.record_match(gender);
        }
        let (winner, price) = second_price(set, pop.bids());
        if winner == FOCAL {
            let rate = pop.click_rate(u, FOCAL);
            let clicked = click.at(u as u64).random::<f64>() < rate;
            tally.record_win(gender, rate, signals.get(u, FOCAL), price, clicked);
        }
    }
    Ok(tally.outcome())
}
