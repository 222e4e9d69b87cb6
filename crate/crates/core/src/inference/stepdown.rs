use super::bootstrap::BootstrapDraws;
use crate::error::{Error, Result};

/// Share of draws with `|t*| ≥ |t_obs|`, floored at `1/(B+1)`.
pub fn bootstrap_p(t_obs: f64, draws: &BootstrapDraws, hypothesis: usize) -> f64 {
    let hits = draws.column(hypothesis).filter(|t| t.abs() >= t_obs.abs()).count();
    floor(hits as f64 / draws.draws as f64, draws.draws)
}

fn floor(p: f64, b: usize) -> f64 {
    p.max(1.0 / (b as f64 + 1.0))
}

/// Romano-Wolf step-down adjusted p-values, returned in input order.
///
/// Hypotheses are visited in descending `|t_obs|` (ties in input order).
/// At rank `r` the raw value is the share of draws whose maximum `|t*|` over
/// the hypotheses not yet visited reaches `|t_obs,r|`; adjusted values are
/// the running maximum down the ordering.
pub fn romano_wolf(t_obs: &[f64], draws: &BootstrapDraws) -> Result<Vec<f64>> {
    let k = t_obs.len();
    if k != draws.n_hypotheses() {
        return Err(Error::Dimension(format!("{k} observed statistics for {} bootstrap columns", draws.n_hypotheses())));
    }
    if let Some(t) = t_obs.iter().find(|t| t.is_nan()) {
        return Err(Error::invalid(format!("observed statistic {t} is not a number")));
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| t_obs[b].abs().total_cmp(&t_obs[a].abs()));

    // tail_max[b][r] = max over ranks ≥ r of |t*_{b, order[r]}|.
    let mut counts = vec![0usize; k];
    for b in 0..draws.draws {
        let row = draws.row(b);
        let mut running = f64::NEG_INFINITY;
        for r in (0..k).rev() {
            running = running.max(row[order[r]].abs());
            if running >= t_obs[order[r]].abs() {
                counts[r] += 1;
            }
        }
    }
    let mut adjusted = vec![0.0; k];
    let mut prev = 0.0f64;
    for r in 0..k {
        prev = prev.max(counts[r] as f64 / draws.draws as f64);
        adjusted[order[r]] = floor(prev, draws.draws);
    }
    Ok(adjusted)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draws(rows: Vec<Vec<f64>>) -> BootstrapDraws {
        let k = rows[0].len();
        BootstrapDraws::new((0..k).map(|i| format!("h{i}")).collect(), rows, 0).unwrap()
    }

    #[test]
    fn single_hypothesis_equals_bootstrap_p() {
        let d = draws(vec![vec![0.5], vec![-2.5], vec![1.9], vec![3.0]]);
        assert_eq!(romano_wolf(&[2.0], &d).unwrap()[0], bootstrap_p(2.0, &d, 0));
        assert_eq!(bootstrap_p(2.0, &d, 0), 0.5);
    }

    #[test]
    fn floor_applies() {
        let d = draws(vec![vec![0.1]; 9]);
        assert_eq!(romano_wolf(&[5.0], &d).unwrap()[0], 0.1);
    }

    #[test]
    fn duplicated_columns_share_p() {
        let d = draws(vec![vec![0.3, 0.3, 1.2], vec![-2.2, -2.2, 0.1], vec![1.1, 1.1, -0.4], vec![0.0, 0.0, 2.6]]);
        let p = romano_wolf(&[1.5, 1.5, 0.7], &d).unwrap();
        assert_eq!(p[0], p[1]);
    }

    #[test]
    fn hand_enumerated_fixture() {
        // |t_obs| order: h1 (3.0), h0 (2.0), h2 (1.0).
        let d = draws(vec![
            vec![0.5, 0.2, 0.1],
            vec![2.5, 0.4, 0.3],
            vec![-1.0, 3.5, 0.2],
            vec![0.1, -0.2, 1.5],
            vec![1.2, 0.9, -0.8],
            vec![-2.1, 1.0, 0.0],
            vec![0.3, 0.1, -1.1],
            vec![0.0, 2.9, 0.6],
        ]);
        // Rank 0 (h1, 3.0): row max over all ≥ 3.0 in draw 2 only -> 1/8.
        // Rank 1 (h0, 2.0): max(|h0|,|h2|) ≥ 2.0 in draws 1, 5 -> 2/8.
        // Rank 2 (h2, 1.0): |h2| ≥ 1.0 in draws 3, 6 -> 2/8.
        let p = romano_wolf(&[2.0, -3.0, 1.0], &d).unwrap();
        assert_eq!(p, vec![0.25, 0.125, 0.25]);
    }

    #[test]
    fn dimension_mismatch() {
        let d = draws(vec![vec![0.0, 1.0]]);
        assert!(romano_wolf(&[1.0], &d).is_err());
    }
}
