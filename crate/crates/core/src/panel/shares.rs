use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::{AgeBand, Panel, PanelGender, PanelRow};
use crate::arm::Arm;
use crate::error::{Error, Result};

/// Numerator, denominator and their ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Share {
    pub numerator: u64,
    pub denominator: u64,
    pub share: f64,
}

/// Impressions of `arm` matching `predicate` over all impressions of `arm`.
pub fn arm_share(panel: &Panel, arm: Arm, predicate: impl Fn(&PanelRow) -> bool) -> Result<Share> {
    let (mut num, mut den) = (0u64, 0u64);
    for r in panel.rows().iter().filter(|r| r.arm == arm) {
        den += r.impressions;
        if predicate(r) {
            num += r.impressions;
        }
    }
    if den == 0 {
        return Err(Error::MissingArm { arm });
    }
    Ok(Share { numerator: num, denominator: den, share: num as f64 / den as f64 })
}

/// Demographic cell selector; `None` fields match everything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct CellFilter {
    pub age_band: Option<AgeBand>,
    pub gender: Option<PanelGender>,
}

impl CellFilter {
    pub const ALL: CellFilter = CellFilter { age_band: None, gender: None };

    pub fn gender(g: PanelGender) -> Self {
        CellFilter { age_band: None, gender: Some(g) }
    }

    pub fn cell(age_band: AgeBand, gender: PanelGender) -> Self {
        CellFilter { age_band: Some(age_band), gender: Some(gender) }
    }

    pub fn matches(&self, row: &PanelRow) -> bool {
        self.age_band.is_none_or(|a| a == row.age_band) && self.gender.is_none_or(|g| g == row.gender)
    }

    pub fn label(&self) -> String {
        match (self.age_band, self.gender) {
            (Some(a), Some(g)) => format!("{a} {g}"),
            (Some(a), None) => a.to_string(),
            (None, Some(g)) => g.to_string(),
            (None, None) => "all".into(),
        }
    }
}

/// Outcome computed per (day, slot, arm) cell of the analysis panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    /// Impressions matching the filter over all impressions of the cell.
    Share(CellFilter),
    /// Clicks over impressions among rows matching the filter.
    Ctr(CellFilter),
}

impl Outcome {
    pub fn female_share() -> Self {
        Outcome::Share(CellFilter::gender(PanelGender::Female))
    }

    pub fn ctr() -> Self {
        Outcome::Ctr(CellFilter::ALL)
    }
}

/// One observation of the saturated regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRow {
    pub day: NaiveDate,
    pub time_slot: u32,
    pub arm: Arm,
    pub y: f64,
    pub weight: f64,
    pub numerator: u64,
}

impl AnalysisRow {
    /// Stable identifier of the (day, slot, arm) cell, shared by every
    /// outcome built from the same panel.
    pub fn key(&self) -> u64 {
        ((self.day.num_days_from_ce() as u64) << 32) | ((self.time_slot as u64) << 4) | self.arm.number() as u64
    }
}

/// Collapse a panel to one row per (day, slot, arm) with impression weights.
/// Keys with zero weight for the outcome are omitted.
pub fn to_analysis_panel(panel: &Panel, outcome: Outcome) -> Vec<AnalysisRow> {
    let mut groups: BTreeMap<(NaiveDate, u32, Arm), (u64, u64)> = BTreeMap::new();
    for r in panel.rows() {
        let g = groups.entry((r.day, r.time_slot, r.arm)).or_default();
        match outcome {
            Outcome::Share(f) => {
                g.1 += r.impressions;
                if f.matches(r) {
                    g.0 += r.impressions;
                }
            }
            Outcome::Ctr(f) => {
                if f.matches(r) {
                    g.0 += r.clicks;
                    g.1 += r.impressions;
                }
            }
        }
    }
    groups
        .into_iter()
        .filter(|(_, (_, den))| *den > 0)
        .map(|((day, time_slot, arm), (num, den))| AnalysisRow {
            day,
            time_slot,
            arm,
            y: num as f64 / den as f64,
            weight: den as f64,
            numerator: num,
        })
        .collect()
}

/// How panel rows are grouped into demographic cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grouping {
    AgeGender,
    Gender,
    Age,
}

pub type Cell = CellFilter;

impl Grouping {
    fn cell(self, r: &PanelRow) -> Cell {
        match self {
            Grouping::AgeGender => CellFilter::cell(r.age_band, r.gender),
            Grouping::Gender => CellFilter::gender(r.gender),
            Grouping::Age => CellFilter { age_band: Some(r.age_band), gender: None },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub impressions: f64,
    pub clicks: f64,
    /// Share `w_{g,z}` of the arm's impressions falling in the cell.
    pub weight: f64,
    /// Click-through rate `c_{g,z}`.
    pub ctr: f64,
}

/// Per-cell impression shares and click-through rates by arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTable {
    pub grouping: Grouping,
    pub cells: Vec<Cell>,
    /// `stats[g][z]`, `None` where arm `z` has no impressions in cell `g`.
    pub stats: Vec<[Option<CellStats>; 3]>,
}

impl CellTable {
    /// Tabulate `panel`. Unknown-gender rows are left out unless
    /// `include_unknown` is set; weights are relative to the included rows.
    pub fn from_panel(panel: &Panel, grouping: Grouping, include_unknown: bool) -> Self {
        let mut counts: BTreeMap<Cell, [(u64, u64); 3]> = BTreeMap::new();
        let mut totals = [0u64; 3];
        for r in panel.rows() {
            if r.gender == PanelGender::Unknown && !include_unknown {
                continue;
            }
            let c = &mut counts.entry(grouping.cell(r)).or_default()[r.arm.index()];
            c.0 += r.impressions;
            c.1 += r.clicks;
            totals[r.arm.index()] += r.impressions;
        }
        let cells: Vec<Cell> = counts.keys().copied().collect();
        let stats = counts
            .values()
            .map(|per_arm| {
                std::array::from_fn(|z| {
                    let (imp, clk) = per_arm[z];
                    (imp > 0).then(|| CellStats {
                        impressions: imp as f64,
                        clicks: clk as f64,
                        weight: imp as f64 / totals[z] as f64,
                        ctr: clk as f64 / imp as f64,
                    })
                })
            })
            .collect();
        CellTable { grouping, cells, stats }
    }

    /// Build a table directly from weights and click-through rates,
    /// `cells[g].1[z] = (w_{g,z}, c_{g,z})`.
    pub fn from_shares(grouping: Grouping, cells: Vec<(Cell, [(f64, f64); 3])>) -> Result<Self> {
        for (cell, per_arm) in &cells {
            for &(w, c) in per_arm {
                if !((0.0..=1.0).contains(&w) && (0.0..=1.0).contains(&c)) {
                    return Err(Error::invalid(format!("cell {} has weight {w} or ctr {c} outside [0, 1]", cell.label())));
                }
            }
        }
        let stats = cells
            .iter()
            .map(|(_, per_arm)| {
                per_arm.map(|(w, c)| (w > 0.0).then_some(CellStats { impressions: w, clicks: w * c, weight: w, ctr: c }))
            })
            .collect();
        Ok(CellTable { grouping, cells: cells.into_iter().map(|c| c.0).collect(), stats })
    }

    pub fn get(&self, cell: usize, arm: Arm) -> Option<&CellStats> {
        self.stats[cell][arm.index()].as_ref()
    }

    pub fn weight(&self, cell: usize, arm: Arm) -> f64 {
        self.get(cell, arm).map_or(0.0, |s| s.weight)
    }

    pub fn ctr(&self, cell: usize, arm: Arm) -> f64 {
        self.get(cell, arm).map_or(0.0, |s| s.ctr)
    }

    /// `Σ_g w_{g,z} c_{g,z}`.
    pub fn overall_ctr(&self, arm: Arm) -> f64 {
        (0..self.cells.len()).map(|g| self.weight(g, arm) * self.ctr(g, arm)).sum()
    }

    pub fn arm_impressions(&self, arm: Arm) -> f64 {
        (0..self.cells.len()).filter_map(|g| self.get(g, arm)).map(|s| s.impressions).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::BidLevel;

    fn row(arm: Arm, age: AgeBand, gender: PanelGender, day: u32, slot: u32, imp: u64, clk: u64) -> PanelRow {
        PanelRow {
            arm,
            bid_level: BidLevel::High,
            age_band: age,
            gender,
            day: NaiveDate::from_ymd_opt(2024, 3, day).unwrap(),
            time_slot: slot,
            impressions: imp,
            clicks: clk,
            reach: imp,
            spend: 0.0,
        }
    }

    #[test]
    fn shares_follow_counts() {
        let p = Panel::from_rows([
            row(Arm::One, AgeBand::A18To24, PanelGender::Female, 1, 0, 30, 0),
            row(Arm::One, AgeBand::A18To24, PanelGender::Male, 1, 0, 60, 0),
            row(Arm::One, AgeBand::A18To24, PanelGender::Unknown, 1, 0, 10, 0),
        ])
        .unwrap();
        let s = arm_share(&p, Arm::One, |r| r.gender == PanelGender::Female).unwrap();
        assert_eq!((s.numerator, s.denominator), (30, 100));
        assert_eq!(arm_share(&p, Arm::One, |_| true).unwrap().share, 1.0);
        assert!(matches!(arm_share(&p, Arm::Two, |_| true), Err(Error::MissingArm { arm: Arm::Two })));
    }

    #[test]
    fn analysis_panel_groups_day_slot_arm() {
        let p = Panel::from_rows([
            row(Arm::One, AgeBand::A18To24, PanelGender::Female, 1, 0, 30, 3),
            row(Arm::One, AgeBand::A25To34, PanelGender::Male, 1, 0, 70, 1),
            row(Arm::Two, AgeBand::A18To24, PanelGender::Female, 1, 0, 50, 2),
            row(Arm::Three, AgeBand::A18To24, PanelGender::Male, 1, 0, 40, 0),
        ])
        .unwrap();
        let rows = to_analysis_panel(&p, Outcome::female_share());
        assert_eq!(rows.len(), 3);
        assert_eq!((rows[0].y, rows[0].weight), (0.3, 100.0));
        let ctr = to_analysis_panel(&p, Outcome::ctr());
        assert_eq!(ctr[0].y, 4.0 / 100.0);
        assert_ne!(rows[0].key(), rows[1].key());
    }

    #[test]
    fn cell_weights_sum_to_one_without_unknowns() {
        let p = Panel::from_rows([
            row(Arm::One, AgeBand::A18To24, PanelGender::Female, 1, 0, 30, 3),
            row(Arm::One, AgeBand::A25To34, PanelGender::Male, 1, 0, 70, 1),
            row(Arm::One, AgeBand::A25To34, PanelGender::Unknown, 1, 0, 10, 1),
        ])
        .unwrap();
        let t = CellTable::from_panel(&p, Grouping::AgeGender, false);
        assert_eq!(t.cells.len(), 2);
        let total: f64 = (0..t.cells.len()).map(|g| t.weight(g, Arm::One)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let with_u = CellTable::from_panel(&p, Grouping::AgeGender, true);
        assert_eq!(with_u.cells.len(), 3);
    }
}
