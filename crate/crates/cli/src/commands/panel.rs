use std::path::Path;

use serde::Serialize;
use triarm_core::experiment::Estimand;
use triarm_core::inference::{
    aggregate_family, bernoulli_decomposition, composition_decompose, dispersion_report, pairwise_audit,
    per_cell_family, CellMeasure, Collapse, Composition, Counts, FamilyKind, FamilyReport, InferenceOptions, KsTest,
    SeMode,
};
use triarm_core::panel::{
    load_panel, BidLevel, CellTable, Grouping, LoadOptions, Outcome, Panel, PanelGender,
};
use triarm_core::Arm;

use crate::args::{
    AuditArgs, BidArg, CollapseArg, DecomposeArgs, DispersionArgs, FamilyArg, InferArgs, OutcomeArg, PanelArgs, SeArg,
};
use crate::error::CliError;
use crate::report::{decomposition_table, decomposition_view, fmt2, num, CsvRows, DecompositionView, Output, Table, PP};

#[derive(Debug, Clone, Serialize)]
struct PanelSource {
    input: String,
    bid: BidLevel,
    exclude_unknown: bool,
}

fn read(path: &Path, exclude_unknown: bool) -> Result<Panel, CliError> {
    load_panel(path, LoadOptions { exclude_unknown_gender: exclude_unknown }).map_err(|e| match CliError::from(e) {
        CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn load(args: &PanelArgs) -> Result<(Panel, PanelSource), CliError> {
    let path = args.input.as_ref().ok_or_else(|| CliError::config("input is required (--input)"))?;
    let bid = match args.bid.unwrap_or(BidArg::High) {
        BidArg::High => BidLevel::High,
        BidArg::Low => BidLevel::Low,
    };
    let panel = read(path, args.exclude_unknown)?.bid_level(bid);
    if panel.is_empty() {
        return Err(CliError::Data(format!("{} has no {bid} bid rows", path.display())));
    }
    let source = PanelSource { input: path.display().to_string(), bid, exclude_unknown: args.exclude_unknown };
    Ok((panel, source))
}

fn outcome_name(o: OutcomeArg) -> &'static str {
    match o {
        OutcomeArg::FemaleShare => "female-share",
        OutcomeArg::Ctr => "ctr",
    }
}

#[derive(Debug, Serialize)]
struct DecomposeConfig {
    panel: PanelSource,
    outcome: &'static str,
    ci_level: f64,
}

#[derive(Debug, Serialize)]
struct ArmCounts {
    arm: Arm,
    numerator: u64,
    denominator: u64,
    rate_pp: f64,
}

#[derive(Debug, Serialize)]
struct CompositionView {
    from: Arm,
    to: Arm,
    total_pp: f64,
    composition_pp: f64,
    within_pp: f64,
}

impl From<Composition> for CompositionView {
    fn from(c: Composition) -> Self {
        CompositionView {
            from: c.from,
            to: c.to,
            total_pp: c.total * PP,
            composition_pp: c.composition * PP,
            within_pp: c.within * PP,
        }
    }
}

#[derive(Debug, Serialize)]
struct DecomposeResult {
    arms: Vec<ArmCounts>,
    decomposition: DecompositionView,
    composition: Option<Vec<CompositionView>>,
    warnings: Vec<String>,
}

pub fn decompose(args: &DecomposeArgs) -> Result<Output, CliError> {
    let (panel, source) = load(&args.panel)?;
    let outcome = args.outcome.unwrap_or(OutcomeArg::FemaleShare);
    let ci_level = args.ci_level.unwrap_or(0.95);
    let mut counts = Vec::new();
    for arm in Arm::ALL {
        let rows = panel.rows().iter().filter(|r| r.arm == arm);
        let (k, n) = rows.fold((0u64, 0u64), |(k, n), r| {
            let hit = match outcome {
                OutcomeArg::FemaleShare => u64::from(r.gender == PanelGender::Female) * r.impressions,
                OutcomeArg::Ctr => r.clicks,
            };
            (k + hit, n + r.impressions)
        });
        counts.push(Counts::new(k, n)?);
    }
    let counts: [Counts; 3] = counts.try_into().expect("three arms");
    let d = bernoulli_decomposition(counts, ci_level)?;
    let arms: Vec<ArmCounts> = Arm::ALL
        .iter()
        .zip(&counts)
        .map(|(&arm, c)| ArmCounts { arm, numerator: c.k, denominator: c.n, rate_pp: c.rate() * PP })
        .collect();
    let composition = (outcome == OutcomeArg::Ctr).then(|| {
        let table = CellTable::from_panel(&panel, Grouping::AgeGender, !args.panel.exclude_unknown);
        [(Arm::One, Arm::Two), (Arm::Two, Arm::Three), (Arm::One, Arm::Three)]
            .map(|(a, b)| CompositionView::from(composition_decompose(&table, a, b)))
            .into_iter()
            .collect::<Vec<_>>()
    });
    let mut arm_table = Table::new("Arms", &["arm", "numerator", "denominator", "rate (%)"]);
    for a in &arms {
        arm_table.push(vec![a.arm.to_string(), a.numerator.to_string(), a.denominator.to_string(), fmt2(a.rate_pp)]);
    }
    let mut tables = vec![arm_table, decomposition_table("Decomposition (pp)", &d, PP)];
    if let Some(comp) = &composition {
        let mut t = Table::new("CTR difference split (pp)", &["from", "to", "total", "composition", "within"]);
        for c in comp {
            t.push(vec![
                c.from.to_string(),
                c.to.to_string(),
                format!("{:.4}", c.total_pp),
                format!("{:.4}", c.composition_pp),
                format!("{:.4}", c.within_pp),
            ]);
        }
        tables.push(t);
    }
    let result = DecomposeResult {
        arms,
        decomposition: decomposition_view(&d, "pp"),
        composition,
        warnings: panel.warnings().to_vec(),
    };
    let mut csv = CsvRows::new(&["estimand", "estimate_pp", "se_pp"]);
    for r in &result.decomposition.rows {
        csv.push(vec![r.estimand.label().into(), num(r.estimate), r.se.map_or_else(String::new, num)]);
    }
    let config = DecomposeConfig { panel: source, outcome: outcome_name(outcome), ci_level };
    Output::new("decompose", None, &config, &result, tables, Some(csv))
}

#[derive(Debug, Serialize)]
struct InferConfig {
    panel: PanelSource,
    outcome: &'static str,
    family: FamilyKind,
    options: InferenceOptions,
}

#[derive(Debug, Serialize)]
struct RowView {
    cell: String,
    estimand: Estimand,
    estimate_pp: f64,
    se_pp: f64,
    t: f64,
    p_raw: f64,
    p_adj: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ArmView {
    arm: Arm,
    mean_pp: f64,
    weight: f64,
    observations: usize,
}

#[derive(Debug, Serialize)]
struct CellView {
    cell: String,
    arms: Vec<ArmView>,
    decomposition: DecompositionView,
}

#[derive(Debug, Serialize)]
struct InferResult {
    family: FamilyKind,
    se: SeMode,
    draws: Option<usize>,
    alpha: f64,
    hypotheses: usize,
    bonferroni_threshold: f64,
    cells: Vec<CellView>,
    rows: Vec<RowView>,
    warnings: Vec<String>,
}

fn infer_view(r: &FamilyReport, panel_warnings: &[String]) -> InferResult {
    InferResult {
        family: r.kind,
        se: r.se,
        draws: r.draws,
        alpha: r.alpha,
        hypotheses: r.hypotheses,
        bonferroni_threshold: r.bonferroni_threshold,
        cells: r
            .cells
            .iter()
            .map(|c| CellView {
                cell: c.cell.clone(),
                arms: c
                    .arms
                    .iter()
                    .map(|a| ArmView { arm: a.arm, mean_pp: a.mean * PP, weight: a.weight, observations: a.observations })
                    .collect(),
                decomposition: decomposition_view(&c.decomposition, "pp"),
            })
            .collect(),
        rows: r
            .rows
            .iter()
            .map(|x| RowView {
                cell: x.cell.clone(),
                estimand: x.estimand,
                estimate_pp: x.estimate * PP,
                se_pp: x.se * PP,
                t: x.t,
                p_raw: x.p_raw,
                p_adj: x.p_adj,
            })
            .collect(),
        warnings: panel_warnings.iter().chain(&r.warnings).cloned().collect(),
    }
}

pub fn infer(args: &InferArgs) -> Result<Output, CliError> {
    let se = match args.se.unwrap_or(SeArg::Hc3) {
        SeArg::Hc3 => SeMode::Hc3,
        SeArg::Bernoulli => SeMode::Bernoulli,
    };
    let mut errors = Vec::new();
    if args.panel.input.is_none() {
        errors.push("input is required (--input)".to_string());
    }
    if se == SeMode::Hc3 && args.seed.is_none() {
        errors.push("seed is required for hc3 inference (--seed)".to_string());
    }
    let defaults = InferenceOptions::default();
    let options = InferenceOptions {
        draws: args.draws.unwrap_or(defaults.draws),
        seed: args.seed.unwrap_or(0),
        se,
        ci_level: args.ci_level.unwrap_or(defaults.ci_level),
        alpha: args.alpha.unwrap_or(defaults.alpha),
    };
    if let Err(e) = options.validate() {
        errors.extend(super::model::config_messages(e));
    }
    if !errors.is_empty() {
        return Err(CliError::Config(errors));
    }
    let (panel, source) = load(&args.panel)?;
    let outcome = args.outcome.unwrap_or(OutcomeArg::FemaleShare);
    let family = match args.family.unwrap_or(FamilyArg::Aggregate) {
        FamilyArg::Aggregate => FamilyKind::Aggregate,
        FamilyArg::PerCell => FamilyKind::PerCell,
    };
    let report = match (family, outcome) {
        (FamilyKind::Aggregate, OutcomeArg::FemaleShare) => {
            aggregate_family(&panel, Outcome::female_share(), "female-share", &options)?
        }
        (FamilyKind::Aggregate, OutcomeArg::Ctr) => aggregate_family(&panel, Outcome::ctr(), "ctr", &options)?,
        (FamilyKind::PerCell, OutcomeArg::FemaleShare) => per_cell_family(&panel, CellMeasure::Share, &options)?,
        (FamilyKind::PerCell, OutcomeArg::Ctr) => per_cell_family(&panel, CellMeasure::Ctr, &options)?,
    };
    let result = infer_view(&report, panel.warnings());
    let mut table = Table::new(
        format!(
            "{} contrasts (pp), {} hypotheses, Bonferroni |t| > {:.3}",
            outcome_name(outcome),
            result.hypotheses,
            result.bonferroni_threshold
        ),
        &["cell", "estimand", "estimate", "se", "t", "p", "p adj"],
    );
    let mut csv = CsvRows::new(&["cell", "estimand", "estimate_pp", "se_pp", "t", "p_raw", "p_adj"]);
    for r in &result.rows {
        table.push(vec![
            r.cell.clone(),
            r.estimand.label().into(),
            fmt2(r.estimate_pp),
            fmt2(r.se_pp),
            fmt2(r.t),
            format!("{:.4}", r.p_raw),
            r.p_adj.map_or_else(|| "-".into(), |p| format!("{p:.4}")),
        ]);
        csv.push(vec![
            r.cell.clone(),
            r.estimand.label().into(),
            num(r.estimate_pp),
            num(r.se_pp),
            num(r.t),
            num(r.p_raw),
            r.p_adj.map_or_else(String::new, num),
        ]);
    }
    let seed = (se == SeMode::Hc3).then_some(options.seed);
    let config = InferConfig { panel: source, outcome: outcome_name(outcome), family, options };
    Output::new("infer", seed, &config, &result, vec![table], Some(csv))
}

#[derive(Debug, Serialize)]
struct DispersionConfig {
    input: String,
    exclude_unknown: bool,
    collapse: Collapse,
}

pub fn dispersion(args: &DispersionArgs) -> Result<Output, CliError> {
    let path = args.input.as_ref().ok_or_else(|| CliError::config("input is required (--input)"))?;
    let panel = read(path, args.exclude_unknown)?;
    let collapse = match args.collapse.unwrap_or(CollapseArg::DaySlot) {
        CollapseArg::Day => Collapse::Day,
        CollapseArg::DaySlot => Collapse::DaySlot,
    };
    let report = dispersion_report(&panel, collapse);
    let mut table =
        Table::new("Observed / Bernoulli variance", &["outcome", "bid", "arm", "ratio", "pooled rate", "mean n", "cells"]);
    let mut csv =
        CsvRows::new(&["outcome", "bid_level", "arm", "ratio", "pooled_rate", "mean_cell_size", "cells"]);
    for r in &report.rows {
        let outcome = serde_json::to_value(r.outcome)?.as_str().unwrap_or_default().to_string();
        table.push(vec![
            outcome.clone(),
            r.bid_level.to_string(),
            r.arm.to_string(),
            fmt2(r.ratio),
            format!("{:.5}", r.pooled_rate),
            format!("{:.1}", r.mean_cell_size),
            r.cells.to_string(),
        ]);
        csv.push(vec![
            outcome,
            r.bid_level.to_string(),
            r.arm.to_string(),
            num(r.ratio),
            num(r.pooled_rate),
            num(r.mean_cell_size),
            r.cells.to_string(),
        ]);
    }
    let config = DispersionConfig { input: path.display().to_string(), exclude_unknown: args.exclude_unknown, collapse };
    Output::new("dispersion", None, &config, &report, vec![table], Some(csv))
}

#[derive(Debug, Serialize)]
struct AuditConfig {
    panel: PanelSource,
    arm_a: Arm,
    arm_b: Arm,
    include_unknown: bool,
}

#[derive(Debug, Serialize)]
struct AuditCellView {
    cell: String,
    share_a_pp: f64,
    share_b_pp: f64,
    diff_pp: f64,
    t: f64,
    p: f64,
    smd: f64,
}

#[derive(Debug, Serialize)]
struct AuditResult {
    from: Arm,
    to: Arm,
    cells: Vec<AuditCellView>,
    uniformity: Option<KsTest>,
}

fn parse_arm(n: Option<u8>, default: Arm, errors: &mut Vec<String>) -> Arm {
    match n.map(Arm::try_from) {
        None => default,
        Some(Ok(a)) => a,
        Some(Err(e)) => {
            errors.push(e);
            default
        }
    }
}

pub fn audit(args: &AuditArgs) -> Result<Output, CliError> {
    let mut errors = Vec::new();
    let a = parse_arm(args.arm_a, Arm::One, &mut errors);
    let b = parse_arm(args.arm_b, Arm::Two, &mut errors);
    if !errors.is_empty() {
        return Err(CliError::Config(errors));
    }
    let (panel, source) = load(&args.panel)?;
    let report = pairwise_audit(&panel, a, b, args.include_unknown);
    let result = AuditResult {
        from: report.from,
        to: report.to,
        cells: report
            .cells
            .iter()
            .map(|c| AuditCellView {
                cell: c.cell.label(),
                share_a_pp: c.share_a * PP,
                share_b_pp: c.share_b * PP,
                diff_pp: c.diff * PP,
                t: c.t,
                p: c.p,
                smd: c.smd,
            })
            .collect(),
        uniformity: report.uniformity,
    };
    let mut table = Table::new(
        format!("Impression shares, arm {a} vs arm {b} (percent)"),
        &["cell", "arm a", "arm b", "diff", "t", "p", "smd"],
    );
    for c in &result.cells {
        table.push(vec![
            c.cell.clone(),
            fmt2(c.share_a_pp),
            fmt2(c.share_b_pp),
            fmt2(c.diff_pp),
            fmt2(c.t),
            format!("{:.4}", c.p),
            format!("{:.4}", c.smd),
        ]);
    }
    let mut csv = CsvRows::new(&["p", "ecdf"]);
    for (p, f) in &report.p_ecdf {
        csv.push(vec![num(*p), num(*f)]);
    }
    let config = AuditConfig { panel: source, arm_a: a, arm_b: b, include_unknown: args.include_unknown };
    Output::new("audit", None, &config, &result, vec![table], Some(csv))
}
