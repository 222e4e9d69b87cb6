use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsTest {
    /// Largest absolute gap between the empirical distribution functions.
    pub statistic: f64,
    /// Asymptotic p-value.
    pub p_value: f64,
    pub n_x: usize,
    pub n_y: usize,
}

fn sorted(values: &[f64], name: &str) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::invalid(format!("KS test needs a nonempty {name} sample")));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid(format!("{name} sample contains NaN")));
    }
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    Ok(v)
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<KsTest> {
    let x = sorted(x, "first")?;
    let y = sorted(y, "second")?;
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let en = (n * m / (n + m)).sqrt();
    Ok(KsTest { statistic: d, p_value: kolmogorov_sf(en, d), n_x: x.len(), n_y: y.len() })
}

/// One-sample Kolmogorov-Smirnov test against the continuous CDF `cdf`.
pub fn ks_one_sample(x: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsTest> {
    let x = sorted(x, "")?;
    let n = x.len() as f64;
    let d = x
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    Ok(KsTest { statistic: d, p_value: kolmogorov_sf(n.sqrt(), d), n_x: x.len(), n_y: 0 })
}

/// `P(D > d)` from the Kolmogorov limit law with Stephens' small-sample
/// correction for effective size `en`.
fn kolmogorov_sf(en: f64, d: f64) -> f64 {
    if d <= 0.0 {
        return 1.0;
    }
    let lambda = (en + 0.12 + 0.11 / en) * d;
    let a2 = -2.0 * lambda * lambda;
    let mut sum = 0.0;
    let mut sign = 2.0;
    let mut prev = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = sign * (a2 * kf * kf).exp();
        sum += term;
        if term.abs() <= 1e-3 * prev || term.abs() <= 1e-10 * sum.abs() {
            return sum.clamp(0.0, 1.0);
        }
        sign = -sign;
        prev = term.abs();
    }
    1.0
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    use super::*;

    #[test]
    fn identical_samples() {
        let x = [0.3, 0.1, 0.2, 0.2];
        let r = ks_two_sample(&x, &x).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn disjoint_supports() {
        let r = ks_two_sample(&[1.0, 2.0, 3.0], &[4.0, 5.0]).unwrap();
        assert_eq!(r.statistic, 1.0);
        let r = ks_two_sample(&[4.0, 5.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.statistic, 1.0);
    }

    #[test]
    fn empty_sample_is_an_error() {
        assert!(ks_two_sample(&[], &[1.0]).is_err());
    }

    #[test]
    fn reference_tail_value() {
        // Q_KS(1.36) ≈ 0.0494 without the small-sample correction.
        let p = kolmogorov_sf(1e12, 1.36 / 1e12);
        assert!((p - 0.0494).abs() < 5e-4, "{p}");
    }

    #[test]
    fn null_p_values_are_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let ps: Vec<f64> = (0..400)
            .map(|_| {
                let x: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
                let y: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
                ks_two_sample(&x, &y).unwrap().p_value
            })
            .collect();
        let u = ks_one_sample(&ps, |p| p.clamp(0.0, 1.0)).unwrap();
        assert!(u.p_value > 0.001, "{u:?}");
    }
}
