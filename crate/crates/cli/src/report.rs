use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use triarm_core::experiment::{Decomposition, Estimand};

use crate::args::OutputArgs;
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Percentage points per unit share.
pub const PP: f64 = 100.0;

#[derive(Debug, Serialize)]
pub struct Provenance<'a, C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'a str,
    pub seed: Option<u64>,
    pub config: &'a C,
}

#[derive(Debug, Serialize)]
pub struct Envelope<'a, C: Serialize, R: Serialize> {
    pub schema_version: u32,
    pub provenance: Provenance<'a, C>,
    pub result: &'a R,
}

pub fn envelope<'a, C: Serialize, R: Serialize>(
    subcommand: &'a str,
    seed: Option<u64>,
    config: &'a C,
    result: &'a R,
) -> Envelope<'a, C, R> {
    Envelope {
        schema_version: SCHEMA_VERSION,
        provenance: Provenance { tool: "triarm", version: env!("CARGO_PKG_VERSION"), subcommand, seed, config },
        result,
    }
}

/// One estimand of a decomposition, scaled to the report unit.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateRow {
    pub estimand: Estimand,
    pub estimate: f64,
    pub se: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub t: Option<f64>,
}

pub fn estimate_rows(d: &Decomposition, scale: f64) -> Vec<EstimateRow> {
    Estimand::ALL
        .iter()
        .map(|&e| {
            let ci = d.ci(e);
            EstimateRow {
                estimand: e,
                estimate: d.estimate(e) * scale,
                se: d.se(e).map(|s| s * scale),
                ci_low: ci.map(|c| c.0 * scale),
                ci_high: ci.map(|c| c.1 * scale),
                t: d.t_stat(e),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionView {
    pub method: triarm_core::experiment::Method,
    pub ci_level: f64,
    pub unit: &'static str,
    pub rows: Vec<EstimateRow>,
}

pub fn decomposition_view(d: &Decomposition, unit: &'static str) -> DecompositionView {
    let scale = if unit == "pp" { PP } else { 1.0 };
    DecompositionView { method: d.method, ci_level: d.ci_level, unit, rows: estimate_rows(d, scale) }
}

pub fn fmt2(x: f64) -> String {
    if x.is_nan() {
        "-".into()
    } else {
        format!("{x:.2}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), fmt2)
}

/// Fixed-width text table with right-aligned columns.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(title: impl Into<String>, header: &[&str]) -> Self {
        Table { title: title.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut width: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for r in &self.rows {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: &[String]| {
            cells.iter().zip(&width).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ")
        };
        let mut out = String::new();
        if !self.title.is_empty() {
            out.push_str(&self.title);
            out.push('\n');
        }
        out.push_str(&line(&self.header));
        out.push('\n');
        out.push_str(&width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

pub fn decomposition_table(title: &str, d: &Decomposition, scale: f64) -> Table {
    let mut t = Table::new(title, &["estimand", "estimate", "se", "ci_low", "ci_high", "t"]);
    for r in estimate_rows(d, scale) {
        t.push(vec![
            r.estimand.label().into(),
            fmt2(r.estimate),
            fmt_opt(r.se),
            fmt_opt(r.ci_low),
            fmt_opt(r.ci_high),
            fmt_opt(r.t),
        ]);
    }
    t
}

/// Plot-ready rows written with `--csv`.
#[derive(Debug, Clone, Default)]
pub struct CsvRows {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvRows {
    pub fn new(header: &[&str]) -> Self {
        CsvRows { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn num(x: f64) -> String {
    x.to_string()
}

/// Everything a subcommand produces.
pub struct Output {
    pub json: String,
    pub tables: Vec<Table>,
    pub csv: Option<CsvRows>,
}

impl Output {
    pub fn new<C: Serialize, R: Serialize>(
        subcommand: &str,
        seed: Option<u64>,
        config: &C,
        result: &R,
        tables: Vec<Table>,
        csv: Option<CsvRows>,
    ) -> Result<Self, CliError> {
        let json = serde_json::to_string_pretty(&envelope(subcommand, seed, config, result))?;
        Ok(Output { json, tables, csv })
    }

    pub fn emit(&self, out: &OutputArgs) -> Result<(), CliError> {
        if out.csv.is_some() && self.csv.is_none() {
            return Err(CliError::config("this subcommand has no CSV output"));
        }
        if let Some(path) = &out.report {
            let mut f = BufWriter::new(File::create(path)?);
            f.write_all(self.json.as_bytes())?;
            f.write_all(b"\n")?;
            f.flush()?;
        }
        if let Some(path) = &out.csv {
            if let Some(rows) = &self.csv {
                rows.write(path)?;
            }
        }
        let text = if out.json {
            format!("{}\n", self.json)
        } else {
            self.tables.iter().map(Table::render).collect::<Vec<_>>().join("\n")
        };
        match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        }
    }
}
