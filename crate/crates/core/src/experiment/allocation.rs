use crate::error::{Error, Result};

/// `Var(NIE) + Var(NDE)` for arm sizes `n` and outcome standard deviations `s`.
pub fn allocation_objective(s: [f64; 3], n: [usize; 3]) -> f64 {
    s[0].powi(2) / n[0] as f64 + 2.0 * s[1].powi(2) / n[1] as f64 + s[2].powi(2) / n[2] as f64
}

/// Integer arm sizes minimizing `Var(NIE) + Var(NDE)` for a fixed total.
///
/// Arm 2 enters both contrasts, so the continuous optimum is
/// `n_z ∝ (s1, √2·s2, s3)`. Sizes are rounded by largest remainder (ties to
/// the lower arm) and every arm keeps at least one unit.
pub fn optimal_allocation(s: [f64; 3], n_total: usize) -> Result<[usize; 3]> {
    if n_total < 3 {
        return Err(Error::invalid(format!("need at least 3 units to fill three arms, got {n_total}")));
    }
    if let Some(bad) = s.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::invalid(format!("standard deviations must be finite and nonnegative, got {bad}")));
    }
    let w = [s[0], std::f64::consts::SQRT_2 * s[1], s[2]];
    let total_w: f64 = w.iter().sum();
    let ideal: [f64; 3] = if total_w > 0.0 {
        w.map(|x| x / total_w * n_total as f64)
    } else {
        [n_total as f64 / 3.0; 3]
    };
    let mut n = ideal.map(|x| x.floor() as usize);
    let mut order = [0, 1, 2];
    order.sort_by(|&a, &b| (ideal[b] - ideal[b].floor()).total_cmp(&(ideal[a] - ideal[a].floor())).then(a.cmp(&b)));
    let short = n_total - n.iter().sum::<usize>();
    for &z in order.iter().take(short) {
        n[z] += 1;
    }
    for z in 0..3 {
        if n[z] == 0 {
            let donor = (0..3).max_by(|&a, &b| n[a].cmp(&n[b]).then(b.cmp(&a))).expect("three arms");
            n[donor] -= 1;
            n[z] = 1;
        }
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(s: [f64; 3], total: usize) -> [usize; 3] {
        let mut best = ([1, 1, total - 2], f64::INFINITY);
        for a in 1..total - 1 {
            for b in 1..total - a {
                let n = [a, b, total - a - b];
                let v = allocation_objective(s, n);
                if v < best.1 - 1e-15 {
                    best = (n, v);
                }
            }
        }
        best.0
    }

    #[test]
    fn equal_sds_favor_arm_two() {
        assert_eq!(optimal_allocation([1.0; 3], 400).unwrap(), [117, 166, 117]);
        assert_eq!(optimal_allocation([1.0; 3], 30).unwrap(), [9, 12, 9]);
        for n in [30, 400, 441] {
            assert_eq!(optimal_allocation([1.0; 3], n).unwrap(), brute_force([1.0; 3], n));
        }
    }

    #[test]
    fn unequal_sds() {
        assert_eq!(optimal_allocation([2.0, 1.0, 1.0], 441).unwrap(), [200, 141, 100]);
        assert_eq!(brute_force([2.0, 1.0, 1.0], 441), [200, 141, 100]);
    }

    #[test]
    fn vanishing_arm_two_keeps_one_unit() {
        let n = optimal_allocation([1.0, 1e-9, 1.0], 100).unwrap();
        assert_eq!(n, [49, 1, 50]);
        assert_eq!(n.iter().sum::<usize>(), 100);
    }

    #[test]
    fn rejects_tiny_totals() {
        assert!(optimal_allocation([1.0; 3], 2).is_err());
    }
}
