//! Cell-level campaign panels: CSV ingestion, validation and aggregation.
//!
//! The canonical format is UTF-8 CSV with the header
//! `arm,bid_level,age_band,gender,day,time_slot,impressions,clicks,reach,spend`,
//! ISO dates and one row per (arm, bid level, age band, gender, day, slot)
//! cell.

mod shares;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::arm::Arm;
use crate::error::{Error, Result};

pub use shares::{
    arm_share, to_analysis_panel, AnalysisRow, Cell, CellFilter, CellStats, CellTable, Grouping, Outcome, Share,
};

pub const COLUMNS: [&str; 10] =
    ["arm", "bid_level", "age_band", "gender", "day", "time_slot", "impressions", "clicks", "reach", "spend"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BidLevel {
    High,
    Low,
}

impl FromStr for BidLevel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "high" => Ok(BidLevel::High),
            "low" => Ok(BidLevel::Low),
            other => Err(format!("unknown bid level `{other}` (expected high or low)")),
        }
    }
}

impl fmt::Display for BidLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BidLevel::High => "high",
            BidLevel::Low => "low",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgeBand {
    #[serde(rename = "18-24")]
    A18To24,
    #[serde(rename = "25-34")]
    A25To34,
    #[serde(rename = "35-44")]
    A35To44,
    #[serde(rename = "45-54")]
    A45To54,
    #[serde(rename = "55-64")]
    A55To64,
    #[serde(rename = "65+")]
    A65Plus,
}

impl AgeBand {
    pub const ALL: [AgeBand; 6] =
        [AgeBand::A18To24, AgeBand::A25To34, AgeBand::A35To44, AgeBand::A45To54, AgeBand::A55To64, AgeBand::A65Plus];

    pub fn label(self) -> &'static str {
        match self {
            AgeBand::A18To24 => "18-24",
            AgeBand::A25To34 => "25-34",
            AgeBand::A35To44 => "35-44",
            AgeBand::A45To54 => "45-54",
            AgeBand::A55To64 => "55-64",
            AgeBand::A65Plus => "65+",
        }
    }
}

impl FromStr for AgeBand {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let t = s.trim();
        AgeBand::ALL
            .into_iter()
            .find(|a| a.label() == t)
            .ok_or_else(|| format!("unknown age band `{t}` (expected one of 18-24, 25-34, 35-44, 45-54, 55-64, 65+)"))
    }
}

impl fmt::Display for AgeBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PanelGender {
    #[serde(rename = "F")]
    Female,
    #[serde(rename = "M")]
    Male,
    #[serde(rename = "U")]
    Unknown,
}

impl PanelGender {
    pub fn code(self) -> &'static str {
        match self {
            PanelGender::Female => "F",
            PanelGender::Male => "M",
            PanelGender::Unknown => "U",
        }
    }
}

impl FromStr for PanelGender {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f" | "female" => Ok(PanelGender::Female),
            "m" | "male" => Ok(PanelGender::Male),
            "u" | "unknown" => Ok(PanelGender::Unknown),
            other => Err(format!("unknown gender `{other}` (expected F, M or U)")),
        }
    }
}

impl fmt::Display for PanelGender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub arm: Arm,
    pub bid_level: BidLevel,
    pub age_band: AgeBand,
    pub gender: PanelGender,
    pub day: NaiveDate,
    pub time_slot: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelRow {
    pub arm: Arm,
    pub bid_level: BidLevel,
    pub age_band: AgeBand,
    pub gender: PanelGender,
    pub day: NaiveDate,
    pub time_slot: u32,
    pub impressions: u64,
    pub clicks: u64,
    pub reach: u64,
    pub spend: f64,
}

impl PanelRow {
    pub fn key(&self) -> CellKey {
        CellKey {
            arm: self.arm,
            bid_level: self.bid_level,
            age_band: self.age_band,
            gender: self.gender,
            day: self.day,
            time_slot: self.time_slot,
        }
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.clicks > self.impressions {
            return Err(format!("clicks ({}) exceed impressions ({})", self.clicks, self.impressions));
        }
        if self.reach > self.impressions {
            return Err(format!("reach ({}) exceeds impressions ({})", self.reach, self.impressions));
        }
        if !(self.spend >= 0.0 && self.spend.is_finite()) {
            return Err(format!("spend {} is not a finite nonnegative amount", self.spend));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Drop rows whose gender is unknown.
    pub exclude_unknown_gender: bool,
}

/// Validated panel rows with unique cell keys, in key order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Panel {
    rows: Vec<PanelRow>,
    warnings: Vec<String>,
}

impl Panel {
    /// Build a panel from rows, summing duplicate cells (with a warning).
    pub fn from_rows(rows: impl IntoIterator<Item = PanelRow>) -> Result<Self> {
        let mut merged: BTreeMap<CellKey, PanelRow> = BTreeMap::new();
        let mut duplicates: BTreeMap<CellKey, usize> = BTreeMap::new();
        for (i, row) in rows.into_iter().enumerate() {
            row.check().map_err(|message| Error::Row { row: i as u64 + 1, message })?;
            match merged.get_mut(&row.key()) {
                Some(acc) => {
                    acc.impressions += row.impressions;
                    acc.clicks += row.clicks;
                    acc.reach += row.reach;
                    acc.spend += row.spend;
                    *duplicates.entry(row.key()).or_insert(1) += 1;
                }
                None => {
                    merged.insert(row.key(), row);
                }
            }
        }
        let warnings = duplicates
            .iter()
            .map(|(k, n)| {
                format!(
                    "aggregated {n} rows for arm {} {} {} {} {} slot {}",
                    k.arm, k.bid_level, k.age_band, k.gender, k.day, k.time_slot
                )
            })
            .collect::<Vec<_>>();
        for w in &warnings {
            log::warn!("{w}");
        }
        Ok(Panel { rows: merged.into_values().collect(), warnings })
    }

    pub fn rows(&self) -> &[PanelRow] {
        &self.rows
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows satisfying `keep`.
    pub fn filter(&self, keep: impl Fn(&PanelRow) -> bool) -> Panel {
        Panel { rows: self.rows.iter().copied().filter(|r| keep(r)).collect(), warnings: self.warnings.clone() }
    }

    pub fn bid_level(&self, level: BidLevel) -> Panel {
        self.filter(|r| r.bid_level == level)
    }

    pub fn arm_impressions(&self, arm: Arm) -> u64 {
        self.rows.iter().filter(|r| r.arm == arm).map(|r| r.impressions).sum()
    }
}

fn column_index(headers: &csv::StringRecord) -> Result<[usize; 10]> {
    let mut idx = [0; 10];
    for (slot, name) in idx.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }
    Ok(idx)
}

fn parse_count(field: &str, name: &str) -> std::result::Result<u64, String> {
    let v: i64 = field.trim().parse().map_err(|_| format!("{name} `{field}` is not an integer"))?;
    u64::try_from(v).map_err(|_| format!("{name} is negative ({v})"))
}

fn parse_row(rec: &csv::StringRecord, idx: &[usize; 10]) -> std::result::Result<PanelRow, String> {
    let get = |i: usize| rec.get(idx[i]).ok_or_else(|| format!("missing value for `{}`", COLUMNS[i]));
    let arm: Arm = get(0)?.trim().parse().map_err(|e| format!("{e}"))?;
    let day = NaiveDate::parse_from_str(get(4)?.trim(), "%Y-%m-%d")
        .map_err(|e| format!("day `{}` is not an ISO date: {e}", get(4).unwrap_or_default()))?;
    let time_slot = get(5)?.trim().parse().map_err(|_| format!("time_slot `{}` is not an ordinal", get(5).unwrap_or_default()))?;
    let spend: f64 = get(9)?.trim().parse().map_err(|_| format!("spend `{}` is not a number", get(9).unwrap_or_default()))?;
    let row = PanelRow {
        arm,
        bid_level: get(1)?.parse()?,
        age_band: get(2)?.parse()?,
        gender: get(3)?.parse()?,
        day,
        time_slot,
        impressions: parse_count(get(6)?, "impressions")?,
        clicks: parse_count(get(7)?, "clicks")?,
        reach: parse_count(get(8)?, "reach")?,
        spend,
    };
    row.check()?;
    Ok(row)
}

/// Read a panel from CSV. Row numbers in errors count data rows from 1.
pub fn read_panel<R: Read>(reader: R, options: LoadOptions) -> Result<Panel> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let idx = column_index(rdr.headers()?)?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row_no = i as u64 + 1;
        let rec = rec.map_err(|e| Error::Row { row: row_no, message: e.to_string() })?;
        let row = parse_row(&rec, &idx).map_err(|message| Error::Row { row: row_no, message })?;
        if !(options.exclude_unknown_gender && row.gender == PanelGender::Unknown) {
            rows.push(row);
        }
    }
    Panel::from_rows(rows)
}

pub fn load_panel(path: impl AsRef<Path>, options: LoadOptions) -> Result<Panel> {
    let file = std::fs::File::open(path.as_ref())?;
    read_panel(std::io::BufReader::new(file), options)
}

pub fn write_panel<W: Write>(panel: &Panel, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(COLUMNS)?;
    for r in panel.rows() {
        w.write_record([
            r.arm.number().to_string(),
            r.bid_level.to_string(),
            r.age_band.to_string(),
            r.gender.to_string(),
            r.day.format("%Y-%m-%d").to_string(),
            r.time_slot.to_string(),
            r.impressions.to_string(),
            r.clicks.to_string(),
            r.reach.to_string(),
            r.spend.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "arm,bid_level,age_band,gender,day,time_slot,impressions,clicks,reach,spend\n";

    fn parse(body: &str) -> Result<Panel> {
        read_panel(format!("{HEADER}{body}").as_bytes(), LoadOptions::default())
    }

    const SIX: &str = "1,high,18-24,F,2024-03-01,0,100,1,90,1.5
1,high,18-24,M,2024-03-01,0,120,2,100,1.7
2,high,18-24,F,2024-03-01,0,130,1,110,1.9
2,high,18-24,M,2024-03-01,0,90,0,80,1.1
3,high,18-24,F,2024-03-01,0,110,3,95,1.4
3,high,18-24,U,2024-03-01,0,10,0,10,0.1
";

    #[test]
    fn well_formed_fixture() {
        let p = parse(SIX).unwrap();
        assert_eq!(p.rows().len(), 6);
        assert!(p.warnings().is_empty());
        assert_eq!(p.rows()[5].gender, PanelGender::Unknown);
        let no_u = read_panel(format!("{HEADER}{SIX}").as_bytes(), LoadOptions { exclude_unknown_gender: true }).unwrap();
        assert_eq!(no_u.rows().len(), 5);
    }

    #[test]
    fn clicks_above_impressions_name_the_row() {
        let err = parse("1,high,18-24,F,2024-03-01,0,10,1,9,1\n1,high,18-24,M,2024-03-01,0,10,11,9,1\n").unwrap_err();
        match err {
            Error::Row { row, message } => {
                assert_eq!(row, 2);
                assert!(message.contains("clicks"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_counts_and_missing_columns() {
        assert!(matches!(parse("1,high,18-24,F,2024-03-01,0,-3,0,0,1\n"), Err(Error::Row { row: 1, .. })));
        let err = read_panel("arm,bid_level\n1,high\n".as_bytes(), LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "age_band"));
    }

    #[test]
    fn duplicate_keys_are_summed() {
        let p = parse("1,high,18-24,F,2024-03-01,0,10,1,9,1\n1,high,18-24,F,2024-03-01,0,5,2,4,0.5\n").unwrap();
        assert_eq!(p.rows().len(), 1);
        assert_eq!((p.rows()[0].impressions, p.rows()[0].clicks, p.rows()[0].reach), (15, 3, 13));
        assert_eq!(p.rows()[0].spend, 1.5);
        assert_eq!(p.warnings().len(), 1);
    }

    #[test]
    fn round_trip() {
        let p = parse(SIX).unwrap();
        let mut buf = Vec::new();
        write_panel(&p, &mut buf).unwrap();
        assert_eq!(read_panel(buf.as_slice(), LoadOptions::default()).unwrap(), p);
    }
}
