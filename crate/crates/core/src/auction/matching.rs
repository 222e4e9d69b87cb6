use std::cmp::Ordering;

use super::SignalMatrix;
use crate::error::{Error, Result};

/// Size `⌈qN⌉` of every user's matched set.
pub fn matched_set_size(q: f64, n_advertisers: usize) -> Result<usize> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::Config(vec![format!("match_quantile must be positive, got {q}")]));
    }
    // Absorb representation error so that e.g. q = 0.1, N = 500 gives 50.
    let k = (q * n_advertisers as f64 - 1e-9).ceil();
    if k < 1.0 || k > n_advertisers as f64 {
        return Err(Error::Config(vec![format!(
            "match_quantile {q} gives a matched set of {k} out of {n_advertisers} advertisers"
        )]));
    }
    Ok(k as usize)
}

/// Per-user matched advertiser sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchedSets {
    sets: Vec<Vec<usize>>,
}

impl MatchedSets {
    pub fn from_sets(sets: Vec<Vec<usize>>) -> Self {
        MatchedSets { sets }
    }

    pub fn n_users(&self) -> usize {
        self.sets.len()
    }

    pub fn set(&self, user: usize) -> &[usize] {
        &self.sets[user]
    }

    pub fn contains(&self, user: usize, advertiser: usize) -> bool {
        self.sets[user].contains(&advertiser)
    }
}

/// Keep the `⌈qN⌉` highest signals per user; equal signals go to the lower
/// advertiser index. Sets are returned in that rank order.
pub fn match_top_q(signals: &SignalMatrix, q: f64) -> Result<MatchedSets> {
    let n = signals.n_advertisers();
    let k = matched_set_size(q, n)?;
    let sets = (0..signals.n_users())
        .map(|u| {
            let row = signals.row(u);
            let mut idx: Vec<usize> = (0..n).collect();
            let by_rank = |a: &usize, b: &usize| -> Ordering {
                row[*b].partial_cmp(&row[*a]).unwrap_or(Ordering::Equal).then(a.cmp(b))
            };
            if k < n {
                idx.select_nth_unstable_by(k - 1, by_rank);
                idx.truncate(k);
            }
            idx.sort_unstable_by(by_rank);
            idx
        })
        .collect();
    Ok(MatchedSets { sets })
}
