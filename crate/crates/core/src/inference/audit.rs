use serde::{Deserialize, Serialize};

use super::ks::{ks_one_sample, KsTest};
use crate::arm::Arm;
use crate::panel::{Cell, CellTable, Grouping, Panel};
use crate::special::two_sided_p;

/// Balance statistics of one demographic cell's impression share.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditCell {
    pub cell: Cell,
    pub share_a: f64,
    pub share_b: f64,
    /// `share_b - share_a`.
    pub diff: f64,
    pub t: f64,
    pub p: f64,
    /// `diff / √[(p_a(1-p_a) + p_b(1-p_b))/2]`.
    pub smd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub from: Arm,
    pub to: Arm,
    pub cells: Vec<AuditCell>,
    /// `(p, F̂(p))` at each sorted p-value.
    pub p_ecdf: Vec<(f64, f64)>,
    /// KS test of the p-values against the uniform distribution.
    pub uniformity: Option<KsTest>,
}

/// Unpooled binomial t-test and standardized mean difference of every
/// (age × gender) cell share between arms `a` and `b`.
pub fn pairwise_audit(panel: &Panel, a: Arm, b: Arm, include_unknown: bool) -> AuditReport {
    let table = CellTable::from_panel(panel, Grouping::AgeGender, include_unknown);
    let (na, nb) = (table.arm_impressions(a), table.arm_impressions(b));
    let cells: Vec<AuditCell> = (0..table.cells.len())
        .filter(|&g| table.get(g, a).is_some() || table.get(g, b).is_some())
        .map(|g| audit_cell(table.cells[g], table.weight(g, a), na, table.weight(g, b), nb))
        .collect();
    let mut ps: Vec<f64> = cells.iter().map(|c| c.p).collect();
    ps.sort_unstable_by(f64::total_cmp);
    let k = ps.len() as f64;
    let p_ecdf = ps.iter().enumerate().map(|(i, &p)| (p, (i + 1) as f64 / k)).collect();
    let uniformity = ks_one_sample(&ps, |p| p.clamp(0.0, 1.0)).ok();
    AuditReport { from: a, to: b, cells, p_ecdf, uniformity }
}

/// Statistics for shares `pa` of `na` and `pb` of `nb` trials.
pub fn audit_cell(cell: Cell, pa: f64, na: f64, pb: f64, nb: f64) -> AuditCell {
    let diff = pb - pa;
    let (va, vb) = (pa * (1.0 - pa), pb * (1.0 - pb));
    let se = (va / na + vb / nb).sqrt();
    let pooled_sd = ((va + vb) / 2.0).sqrt();
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
    let t = ratio(diff, se);
    AuditCell { cell, share_a: pa, share_b: pb, diff, t, p: two_sided_p(t), smd: ratio(diff, pooled_sd) }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::panel::CellFilter;

    #[test]
    fn binomial_arithmetic() {
        let c = audit_cell(CellFilter::ALL, 0.10, 1e4, 0.12, 1e4);
        assert_abs_diff_eq!(c.t, 0.02 / (0.09f64 / 1e4 + 0.1056 / 1e4).sqrt(), epsilon = 1e-12);
        assert!((c.t - 4.5).abs() < 0.05);
        assert_abs_diff_eq!(c.smd, 0.02 / ((0.09f64 + 0.1056) / 2.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn identical_shares() {
        let c = audit_cell(CellFilter::ALL, 0.3, 500.0, 0.3, 800.0);
        assert_eq!((c.diff, c.t, c.smd, c.p), (0.0, 0.0, 0.0, 1.0));
    }
}
