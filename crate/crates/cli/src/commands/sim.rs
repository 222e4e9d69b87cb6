use serde::Serialize;
use triarm_core::auction::{Engine, MediatorRegime};
use triarm_core::experiment::{
    bid_sweep, calibrate_knobs, decompose, invert_sigma, monte_carlo, CalibrationTarget, Estimand,
    MonteCarloReport,
};
use triarm_core::inference::KsTest;
use triarm_core::Arm;

use super::model::{resolve_experiment, resolve_model, Experiment, Model, DEFAULT_SIGMA};
use crate::args::{CalibrateArgs, InvertArgs, SimArgs, SweepArgs};
use crate::error::CliError;
use crate::report::{
    decomposition_table, decomposition_view, fmt2, num, CsvRows, DecompositionView, Output, Table, PP,
};

#[derive(Debug, Serialize)]
struct ArmView {
    arm: Arm,
    regime: MediatorRegime,
    female_share_pp: f64,
    female_share_sd_pp: f64,
    match_female_share_pp: f64,
    wins: f64,
    matches: f64,
    ctr_pp: f64,
    mean_true_rate_won: f64,
    mean_signal_won: f64,
    spend: f64,
}

#[derive(Debug, Serialize)]
struct SimResult {
    engine: Engine,
    focal_bid: f64,
    focal_percentile: f64,
    rounds: usize,
    rounds_used: usize,
    rounds_dropped: usize,
    arms: Vec<ArmView>,
    impressions: DecompositionView,
    matches: DecompositionView,
    engagement_true_rate: DecompositionView,
    engagement_signal: DecompositionView,
    selection_gap_pp: [f64; 3],
    mediator_check: Option<KsTest>,
}

fn arm_views(report: &MonteCarloReport, e: &Experiment) -> Vec<ArmView> {
    e.experiment
        .arms()
        .iter()
        .zip(&report.arms)
        .map(|(spec, a)| ArmView {
            arm: a.arm,
            regime: spec.regime,
            female_share_pp: a.female_share.mean * PP,
            female_share_sd_pp: a.female_share.variance.sqrt() * PP,
            match_female_share_pp: a.match_female_share.mean * PP,
            wins: a.wins,
            matches: a.matches,
            ctr_pp: a.ctr * PP,
            mean_true_rate_won: a.mean_true_rate_won,
            mean_signal_won: a.mean_signal_won,
            spend: a.spend,
        })
        .collect()
}

fn arm_table(arms: &[ArmView]) -> Table {
    let mut t = Table::new("Arms (percent)", &["arm", "female share", "sd", "match female share", "wins", "matches", "ctr"]);
    for a in arms {
        t.push(vec![
            a.arm.to_string(),
            fmt2(a.female_share_pp),
            fmt2(a.female_share_sd_pp),
            fmt2(a.match_female_share_pp),
            fmt2(a.wins),
            fmt2(a.matches),
            fmt2(a.ctr_pp),
        ]);
    }
    t
}

pub fn sim(args: &SimArgs) -> Result<Output, CliError> {
    let (e, seed) = resolve_experiment(&args.experiment)?;
    let report = monte_carlo(&e.experiment, seed)?;
    let arms = arm_views(&report, &e);
    let result = SimResult {
        engine: e.experiment.setup.engine,
        focal_bid: e.experiment.setup.bids.focal_amount(),
        focal_percentile: e.experiment.setup.bids.focal_percentile(),
        rounds: report.rounds,
        rounds_used: report.rounds_used,
        rounds_dropped: report.rounds_dropped,
        impressions: decomposition_view(&report.impressions, "pp"),
        matches: decomposition_view(&report.matches, "pp"),
        engagement_true_rate: decomposition_view(&report.engagement.true_rate, "pp"),
        engagement_signal: decomposition_view(&report.engagement.signal, "pp"),
        selection_gap_pp: report.engagement.selection_gap.map(|g| g * PP),
        mediator_check: report.mediator_check,
        arms,
    };
    let tables = vec![
        arm_table(&result.arms),
        decomposition_table("Female share of impressions (pp)", &report.impressions, PP),
        decomposition_table("Female share of matches (pp)", &report.matches, PP),
        decomposition_table("Mean true click rate of won impressions (pp)", &report.engagement.true_rate, PP),
    ];
    let mut csv = CsvRows::new(&[
        "round",
        "arm",
        "wins",
        "female_wins",
        "matches",
        "female_matches",
        "clicks",
        "female_share",
        "mean_true_rate_won",
        "mean_signal_won",
        "spend",
    ]);
    for r in &report.per_round {
        for (arm, o) in Arm::ALL.iter().zip(&r.arms) {
            csv.push(vec![
                r.round.to_string(),
                arm.to_string(),
                o.wins.to_string(),
                o.female_wins.to_string(),
                o.matches.to_string(),
                o.female_matches.to_string(),
                o.clicks.to_string(),
                o.female_share().map_or_else(String::new, num),
                num(o.mean_true_rate_won),
                num(o.mean_signal_won),
                num(o.spend),
            ]);
        }
    }
    Output::new("sim", Some(seed), &e, &result, tables, Some(csv))
}

#[derive(Debug, Serialize)]
struct SweepView {
    percentile: f64,
    focal_bid: f64,
    rounds_dropped: usize,
    wins: [f64; 3],
    female_share_pp: [f64; 3],
    impressions: DecompositionView,
    matches: DecompositionView,
}

#[derive(Debug, Serialize)]
struct SweepConfig<'a> {
    #[serde(flatten)]
    experiment: &'a Experiment,
    percentiles: &'a [f64],
}

pub const DEFAULT_PERCENTILES: [f64; 3] = [0.95, 0.98, 0.995];

pub fn sweep(args: &SweepArgs) -> Result<Output, CliError> {
    let (e, seed) = resolve_experiment(&args.experiment)?;
    let percentiles = args.percentiles.clone().unwrap_or_else(|| DEFAULT_PERCENTILES.to_vec());
    let rows = bid_sweep(&percentiles, &e.experiment, seed)?;
    let views: Vec<SweepView> = rows
        .iter()
        .map(|r| SweepView {
            percentile: r.percentile,
            focal_bid: r.focal_bid,
            rounds_dropped: r.rounds_dropped,
            wins: r.arms.map(|a| a.wins),
            female_share_pp: r.arms.map(|a| a.female_share.mean * PP),
            impressions: decomposition_view(&r.impressions, "pp"),
            matches: decomposition_view(&r.matches, "pp"),
        })
        .collect();
    let mut table = Table::new(
        "Bid sweep (pp)",
        &["percentile", "bid", "impr NIE", "se", "impr NDE", "impr TE", "match NIE", "wins arm 1"],
    );
    let mut csv = CsvRows::new(&["percentile", "focal_bid", "level", "estimand", "estimate_pp", "se_pp"]);
    for r in &rows {
        let imp = r.impressions.scaled(PP);
        let mat = r.matches.scaled(PP);
        table.push(vec![
            format!("{}", r.percentile),
            fmt2(r.focal_bid),
            fmt2(imp.nie),
            fmt2(imp.se_nie.unwrap_or(f64::NAN)),
            fmt2(imp.nde),
            fmt2(imp.te),
            fmt2(mat.nie),
            fmt2(r.arms[0].wins),
        ]);
        for (level, d) in [("impressions", &imp), ("matches", &mat)] {
            for est in Estimand::ALL {
                csv.push(vec![
                    num(r.percentile),
                    num(r.focal_bid),
                    level.into(),
                    est.label().into(),
                    num(d.estimate(est)),
                    d.se(est).map_or_else(String::new, num),
                ]);
            }
        }
    }
    let config = SweepConfig { experiment: &e, percentiles: &percentiles };
    Output::new("sweep", Some(seed), &config, &views, vec![table], Some(csv))
}

#[derive(Debug, Serialize)]
struct InvertConfig<'a> {
    #[serde(flatten)]
    experiment: &'a Experiment,
    target_pp: Option<f64>,
    target_sigma: Option<f64>,
    sigma_max: f64,
    tolerance_pp: f64,
}

#[derive(Debug, Serialize)]
struct StepView {
    sigma: f64,
    nie_pp: f64,
    se_nie_pp: f64,
}

#[derive(Debug, Serialize)]
struct InvertResult {
    target_pp: f64,
    sigma: f64,
    nie_pp: f64,
    se_nie_pp: f64,
    steps: Vec<StepView>,
}

pub fn invert(args: &InvertArgs) -> Result<Output, CliError> {
    let (e, seed) = resolve_experiment(&args.experiment)?;
    let sigma_max = args.sigma_max.unwrap_or(0.2);
    let tolerance_pp = args.tolerance.unwrap_or(0.01);
    let target = match (args.target, args.target_sigma) {
        (Some(_), Some(_)) => return Err(CliError::config("target and target_sigma are mutually exclusive")),
        (None, None) => return Err(CliError::config("one of target or target_sigma is required")),
        (Some(t), None) => t / PP,
        (None, Some(s)) => {
            let mut c = e.experiment.clone();
            c.regime_b.focal_female = s;
            monte_carlo(&c, seed)?.impressions.nie
        }
    };
    let inv = invert_sigma(target, &e.experiment, sigma_max, tolerance_pp / PP, seed)?;
    let result = InvertResult {
        target_pp: inv.target * PP,
        sigma: inv.sigma,
        nie_pp: inv.nie * PP,
        se_nie_pp: inv.se_nie * PP,
        steps: inv.steps.iter().map(|s| StepView { sigma: s.sigma, nie_pp: s.nie * PP, se_nie_pp: s.se_nie * PP }).collect(),
    };
    let mut table = Table::new("Sigma inversion", &["target (pp)", "sigma", "NIE (pp)", "se (pp)", "steps"]);
    table.push(vec![
        fmt2(result.target_pp),
        format!("{:.5}", result.sigma),
        fmt2(result.nie_pp),
        fmt2(result.se_nie_pp),
        result.steps.len().to_string(),
    ]);
    let mut csv = CsvRows::new(&["step", "sigma", "nie_pp", "se_nie_pp"]);
    for (i, s) in result.steps.iter().enumerate() {
        csv.push(vec![i.to_string(), num(s.sigma), num(s.nie_pp), num(s.se_nie_pp)]);
    }
    let config =
        InvertConfig { experiment: &e, target_pp: args.target, target_sigma: args.target_sigma, sigma_max, tolerance_pp };
    Output::new("invert-sigma", Some(seed), &config, &result, vec![table], Some(csv))
}

#[derive(Debug, Serialize)]
struct CalibrateConfig<'a> {
    model: &'a Model,
    target: CalibrationTarget,
}

#[derive(Debug, Serialize)]
struct CalibrateResult {
    click_concentration: f64,
    female_click_mean: f64,
    baseline_share_pp: f64,
    treated_share_pp: f64,
    nie_pp: f64,
    expected: DecompositionView,
    expected_wins: [f64; 2],
}

pub fn calibrate(args: &CalibrateArgs) -> Result<Output, CliError> {
    let model = resolve_model(&args.model)?;
    let target = CalibrationTarget {
        baseline_share: args.baseline_share.map(|b| b / PP),
        nie: args.target_nie.map_or(CalibrationTarget::default().nie, |t| t / PP),
        sigma: args.sigma.unwrap_or(DEFAULT_SIGMA),
    };
    let c = calibrate_knobs(&model.setup.population, &model.setup.bids, target)?;
    let expected = decompose(c.baseline_share, c.treated_share, c.treated_share)?;
    let result = CalibrateResult {
        click_concentration: c.click_concentration,
        female_click_mean: c.female_click_mean,
        baseline_share_pp: c.baseline_share * PP,
        treated_share_pp: c.treated_share * PP,
        nie_pp: c.nie * PP,
        expected: decomposition_view(&expected, "pp"),
        expected_wins: c.expected_wins,
    };
    let mut table = Table::new(
        "Calibration",
        &["kappa", "female click mean", "baseline (pp)", "treated (pp)", "NIE (pp)", "wins S(A)", "wins S(B)"],
    );
    table.push(vec![
        format!("{:.4}", c.click_concentration),
        format!("{:.6}", c.female_click_mean),
        fmt2(result.baseline_share_pp),
        fmt2(result.treated_share_pp),
        fmt2(result.nie_pp),
        fmt2(c.expected_wins[0]),
        fmt2(c.expected_wins[1]),
    ]);
    Output::new("calibrate", None, &CalibrateConfig { model: &model, target }, &result, vec![table], None)
}
