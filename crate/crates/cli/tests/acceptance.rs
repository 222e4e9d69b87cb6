use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use triarm_core::auction::{BidConfig, MediatorRegime, PopulationConfig, RoundSetup};
use triarm_core::experiment::{
    allocation_objective, bid_sweep, calibrate_knobs, decompose, invert_sigma, mean_var, monte_carlo, neyman_var,
    optimal_allocation, CalibrationTarget, Estimand, ExperimentConfig, Pairing,
};
use triarm_core::inference::{
    bernoulli_decomposition, bernoulli_se, bootstrap_p, composition_decompose, contrasts, dispersion_ratio,
    known_cells, per_cell_family, romano_wolf, wild_bootstrap, wls_fit, BootstrapDraws, CellMeasure, Counts,
    InferenceOptions, Observation,
};
use triarm_core::panel::{load_panel, AgeBand, CellFilter, CellTable, Grouping, LoadOptions, PanelGender};
use triarm_core::Arm;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

const CAMPAIGN: [(u64, u64); 3] = [(11595, 33621), (12267, 33554), (12141, 33860)];
const CAMPAIGN_CLICKS: [u64; 3] = [24, 33, 29];

fn counts(k: [(u64, u64); 3]) -> [Counts; 3] {
    k.map(|(k, n)| Counts::new(k, n).unwrap())
}

fn default_experiment(rounds: usize) -> ExperimentConfig {
    ExperimentConfig::new(
        RoundSetup::new(PopulationConfig::default(), BidConfig::default()),
        MediatorRegime::focal_female(0.03),
        rounds,
    )
}

fn identity_ok(d: &triarm_core::experiment::Decomposition) -> bool {
    d.identity_error() <= 1e-12 * d.te.abs().max(1.0)
}

fn c1_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100_000 {
        let y: [f64; 3] = [rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3)];
        let d = decompose(y[0], y[1], y[2]).map_err(|e| e.to_string())?;
        ensure(identity_ok(&d), || format!("triple {y:?}: error {}", d.identity_error()))?;
    }
    let mut cfg = default_experiment(50);
    cfg.setup.population.n_users = 3000;
    cfg.setup.population.n_advertisers = 150;
    let report = monte_carlo(&cfg, 3).map_err(|e| e.to_string())?;
    for r in &report.per_round {
        if let [Some(a), Some(b), Some(c)] = r.arms.map(|o| o.female_share()) {
            let d = decompose(a, b, c).map_err(|e| e.to_string())?;
            ensure(identity_ok(&d), || format!("round {}", r.round))?;
        }
    }
    for d in [&report.impressions, &report.matches, &report.engagement.true_rate, &report.engagement.signal] {
        ensure(identity_ok(d), || "report decomposition".into())?;
    }
    let panel = load_panel(root().join("fixtures/campaign_counts.csv"), LoadOptions::default()).map_err(|e| e.to_string())?;
    let options = InferenceOptions { draws: 99, seed: 1, ..InferenceOptions::default() };
    let mut fits = 0;
    for measure in [CellMeasure::Share, CellMeasure::Ctr] {
        let fam = per_cell_family(&panel, measure, &options).map_err(|e| e.to_string())?;
        for c in &fam.cells {
            ensure(identity_ok(&c.decomposition), || format!("panel cell {}", c.cell))?;
            fits += 1;
        }
    }
    Ok(format!("1e5 triples, {} rounds, {fits} panel fits", report.per_round.len()))
}

fn c2_count_arithmetic() -> Check {
    let d = bernoulli_decomposition(counts(CAMPAIGN), 0.95).map_err(|e| e.to_string())?;
    let shares = CAMPAIGN.map(|(k, n)| 100.0 * k as f64 / n as f64);
    for (s, t) in shares.iter().zip([34.49, 36.56, 35.86]) {
        ensure((s - t).abs() <= 0.01, || format!("share {s:.4} vs {t}"))?;
    }
    let (nie, nde, te) = (d.nie * 100.0, d.nde * 100.0, d.te * 100.0);
    ensure((nie - 2.07).abs() <= 0.01, || format!("NIE {nie:.4}"))?;
    ensure((nde + 0.70).abs() <= 0.01, || format!("NDE {nde:.4}"))?;
    ensure((te - 1.37).abs() <= 0.01, || format!("TE {te:.4}"))?;
    let readme = std::fs::read_to_string(root().join("README.md")).unwrap_or_default();
    ensure(readme.contains("-0.68") && readme.contains("+1.39"), || "README lacks the printed NDE/TE note".into())?;
    Ok(format!("shares {:.2}/{:.2}/{:.2}, NIE {nie:.2}, NDE {nde:.2}, TE {te:.2}", shares[0], shares[1], shares[2]))
}

fn c3_bernoulli_se() -> Check {
    let (_, se) = bernoulli_se(CAMPAIGN[0].0, CAMPAIGN[0].1, CAMPAIGN[1].0, CAMPAIGN[1].1).map_err(|e| e.to_string())?;
    let se = se * 100.0;
    ensure((se - 0.37).abs() <= 0.01, || format!("SE(NIE) {se:.4}"))?;
    let clicks: [(u64, u64); 3] = [0, 1, 2].map(|z| (CAMPAIGN_CLICKS[z], CAMPAIGN[z].1));
    let rates = clicks.map(|(k, n)| 100.0 * k as f64 / n as f64);
    for (r, t) in rates.iter().zip([0.071, 0.098, 0.086]) {
        ensure((r - t).abs() < 0.0005, || format!("ctr {r:.4} vs {t}"))?;
    }
    let d = bernoulli_decomposition(counts(clicks), 0.95).map_err(|e| e.to_string())?;
    let se_ctr = d.se_nie.unwrap() * 100.0;
    ensure((se_ctr - 0.022).abs() <= 0.002, || format!("SE(NIE_CTR) {se_ctr:.4}"))?;
    Ok(format!("SE(NIE) {se:.3} pp, SE(NIE_CTR) {se_ctr:.4} pp"))
}

fn c4_placebo() -> Check {
    let mut cfg = default_experiment(1000);
    let shared = monte_carlo(&cfg, 7).map_err(|e| e.to_string())?;
    for r in &shared.per_round {
        ensure(r.arms[1] == r.arms[2], || format!("round {} arms 2 and 3 differ", r.round))?;
        if let [Some(a), Some(b), Some(c)] = r.arms.map(|o| o.female_share()) {
            let d = decompose(a, b, c).map_err(|e| e.to_string())?;
            ensure(d.nde == 0.0, || format!("round {} NDE {}", r.round, d.nde))?;
        }
    }
    ensure(shared.impressions.nde == 0.0, || "mean NDE not zero".into())?;
    let t = shared.impressions.t_stat(Estimand::Nie).unwrap_or(0.0);
    ensure(shared.impressions.nie > 0.0 && t.abs() > 10.0, || format!("NIE t {t}"))?;
    cfg.pairing = Pairing::Independent;
    let independent = monte_carlo(&cfg, 7).map_err(|e| e.to_string())?;
    let (lo, hi) = independent.impressions.ci(Estimand::Nde).ok_or("no CI")?;
    ensure(lo <= 0.0 && 0.0 <= hi, || format!("independent NDE CI ({lo}, {hi})"))?;
    Ok(format!(
        "R=1000: NIE {:.2} pp (t {:.0}), shared NDE 0, independent NDE CI [{:.3}, {:.3}] pp",
        shared.impressions.nie * 100.0,
        t,
        lo * 100.0,
        hi * 100.0
    ))
}

fn calibrated_sweep() -> Result<Vec<triarm_core::experiment::SweepRow>, String> {
    let bids = BidConfig::default();
    let target = CalibrationTarget { baseline_share: Some(0.431), nie: 0.1845, sigma: 0.03 };
    let cal = calibrate_knobs(&PopulationConfig::default(), &bids, target).map_err(|e| e.to_string())?;
    let population = PopulationConfig {
        click_concentration: cal.click_concentration,
        female_click_mean: Some(cal.female_click_mean),
        ..PopulationConfig::default()
    };
    let cfg = ExperimentConfig::new(RoundSetup::new(population, bids), MediatorRegime::focal_female(0.03), 1000);
    bid_sweep(&[0.95, 0.98, 0.995], &cfg, 7).map_err(|e| e.to_string())
}

fn c5_magnitude(rows: &[triarm_core::experiment::SweepRow]) -> Check {
    let nie: Vec<f64> = rows.iter().map(|r| r.impressions.nie * 100.0).collect();
    let se: Vec<f64> = rows.iter().map(|r| r.impressions.se_nie.unwrap_or(0.0) * 100.0).collect();
    ensure((nie[2] - 18.45).abs() <= 2.0, || format!("NIE(0.995) {:.2}", nie[2]))?;
    for i in 0..2 {
        let slack = 3.0 * (se[i].powi(2) + se[i + 1].powi(2)).sqrt();
        ensure(nie[i] <= nie[i + 1] + slack, || format!("NIE {:.3} > {:.3} + {slack:.3}", nie[i], nie[i + 1]))?;
    }
    Ok(format!("calibrated NIE {:.2}/{:.2}/{:.2} pp at 0.95/0.98/0.995", nie[0], nie[1], nie[2]))
}

fn c6_match_invariance(rows: &[triarm_core::experiment::SweepRow]) -> Check {
    for r in &rows[1..] {
        ensure(r.matches == rows[0].matches, || format!("match decomposition differs at {}", r.percentile))?;
    }
    Ok(format!("match NIE {:.4} pp at all percentiles", rows[0].matches.nie * 100.0))
}

fn c7_inversion() -> Check {
    let cfg = default_experiment(200);
    let forward = monte_carlo(&cfg, 11).map_err(|e| e.to_string())?.impressions.nie;
    let inv = invert_sigma(forward, &cfg, 0.2, 1e-4, 11).map_err(|e| e.to_string())?;
    ensure((0.027..=0.033).contains(&inv.sigma), || format!("sigma {}", inv.sigma))?;
    let zero = invert_sigma(0.0, &cfg, 0.2, 1e-4, 11).map_err(|e| e.to_string())?;
    ensure(zero.sigma == 0.0, || format!("target 0 gave {}", zero.sigma))?;
    Ok(format!("sigma {:.5} after {} steps, target 0 -> 0", inv.sigma, inv.steps.len()))
}

fn random_table(rng: &mut ChaCha8Rng) -> CellTable {
    let cells = known_cells();
    let g = rng.random_range(1..=cells.len());
    let mut w = vec![[0.0; 3]; g];
    for z in 0..3 {
        let raw: Vec<f64> = (0..g).map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        for (i, r) in raw.iter().enumerate() {
            w[i][z] = r / total;
        }
    }
    let rows = (0..g)
        .map(|i| (cells[i], [0, 1, 2].map(|z| (w[i][z], rng.random_range(0.0..0.05)))))
        .collect();
    CellTable::from_shares(Grouping::AgeGender, rows).unwrap()
}

fn c8_composition() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..1000 {
        let t = random_table(&mut rng);
        for (a, b) in [(Arm::One, Arm::Two), (Arm::Two, Arm::Three), (Arm::One, Arm::Three)] {
            let c = composition_decompose(&t, a, b);
            let total = t.overall_ctr(b) - t.overall_ctr(a);
            ensure((c.composition + c.within - total).abs() <= 1e-12, || "identity".into())?;
            ensure((c.total - total).abs() <= 1e-12, || "total".into())?;
        }
    }
    let fixture = CellTable::from_shares(
        Grouping::AgeGender,
        vec![
            (CellFilter::cell(AgeBand::A18To24, PanelGender::Female), [(0.5, 0.01), (0.25, 0.01), (0.0, 0.0)]),
            (CellFilter::cell(AgeBand::A25To34, PanelGender::Female), [(0.5, 0.02), (0.75, 0.02), (0.0, 0.0)]),
        ],
    )
    .map_err(|e| e.to_string())?;
    let c = composition_decompose(&fixture, Arm::One, Arm::Two);
    ensure(
        (c.total - 0.0025).abs() < 1e-15 && (c.composition - 0.0025).abs() < 1e-15 && c.within.abs() < 1e-15,
        || format!("{c:?}"),
    )?;
    Ok("1e3 random tables, hand fixture (.0025, .0025, 0)".into())
}

fn c9_dispersion() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let (p, n, cells, reps) = (0.35, 1700u64, 19, 500);
    let tau = (4.0 * p * (1.0 - p) / n as f64).sqrt();
    let (mut null, mut over) = (0.0, 0.0);
    for _ in 0..reps {
        let a: Vec<(f64, f64)> = (0..cells)
            .map(|_| (Binomial::new(n, p).unwrap().sample(&mut rng) as f64 / n as f64, n as f64))
            .collect();
        let b: Vec<(f64, f64)> = (0..cells)
            .map(|_| {
                let pi = (p + tau * normal.sample(&mut rng)).clamp(0.0, 1.0);
                (Binomial::new(n, pi).unwrap().sample(&mut rng) as f64 / n as f64, n as f64)
            })
            .collect();
        null += dispersion_ratio(&a, None).map_err(|e| e.to_string())? / reps as f64;
        over += dispersion_ratio(&b, None).map_err(|e| e.to_string())? / reps as f64;
    }
    ensure((0.85..=1.15).contains(&null), || format!("null {null:.3}"))?;
    ensure((over / 5.0 - 1.0).abs() <= 0.15, || format!("overdispersed {over:.3}"))?;
    Ok(format!("null {null:.3}, factor 5 recovered as {over:.3}"))
}

fn romano_wolf_by_enumeration(t: &[f64], rows: &[Vec<f64>]) -> Vec<f64> {
    let k = t.len();
    let b = rows.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| t[j].abs().total_cmp(&t[i].abs()));
    let mut p = vec![0.0; k];
    let mut running: f64 = 0.0;
    for (s, &h) in order.iter().enumerate() {
        let hits = rows
            .iter()
            .filter(|row| order[s..].iter().map(|&j| row[j].abs()).fold(f64::NEG_INFINITY, f64::max) >= t[h].abs())
            .count();
        running = running.max(hits as f64 / b as f64);
        p[h] = running.max(1.0 / (b as f64 + 1.0));
    }
    p
}

fn c10_romano_wolf() -> Check {
    let hand = vec![
        vec![0.5, 0.2, 0.1],
        vec![2.5, 0.4, 0.3],
        vec![-1.0, 3.5, 0.2],
        vec![0.1, -0.2, 1.5],
        vec![1.2, 0.9, -0.8],
        vec![-2.1, 1.0, 0.0],
        vec![0.3, 0.1, -1.1],
        vec![0.0, 2.9, 0.6],
    ];
    let labels = || vec!["a".to_string(), "b".into(), "c".into()];
    let d = BootstrapDraws::new(labels(), hand.clone(), 0).map_err(|e| e.to_string())?;
    let p = romano_wolf(&[2.0, -3.0, 1.0], &d).map_err(|e| e.to_string())?;
    ensure(p == vec![0.25, 0.125, 0.25], || format!("hand fixture {p:?}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..2000 {
        let rows: Vec<Vec<f64>> = (0..8).map(|_| (0..3).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        let t: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
        let d = BootstrapDraws::new(labels(), rows.clone(), 0).map_err(|e| e.to_string())?;
        let got = romano_wolf(&t, &d).map_err(|e| e.to_string())?;
        ensure(got == romano_wolf_by_enumeration(&t, &rows), || format!("enumeration mismatch for {t:?}"))?;
    }

    let normal = Normal::new(0.0, 1.0).unwrap();
    let (reps, draws) = (300, 999);
    let mut rejections = 0;
    for rep in 0..reps {
        let obs: Vec<Observation> = (0..150)
            .map(|i| Observation { y: normal.sample(&mut rng), weight: 1.0, arm: Arm::ALL[i % 3], key: i as u64 })
            .collect();
        let fit = wls_fit(&obs, Arm::One).map_err(|e| e.to_string())?;
        let t: Vec<f64> = contrasts(&fit).iter().map(|c| c.t).collect();
        let boot = wild_bootstrap(&fit, draws, 1000 + rep).map_err(|e| e.to_string())?;
        let adj = romano_wolf(&t, &boot).map_err(|e| e.to_string())?;
        for (h, &pa) in adj.iter().enumerate() {
            let raw = bootstrap_p(t[h], &boot, h);
            ensure(pa >= raw, || format!("adjusted {pa} < raw {raw}"))?;
        }
        if adj.iter().any(|&p| p <= 0.05) {
            rejections += 1;
        }
    }
    let fwer = rejections as f64 / reps as f64;
    ensure(fwer <= 0.07, || format!("FWER {fwer:.3}"))?;
    Ok(format!("hand fixture and 2000 enumerated 8-draw cases match, FWER {fwer:.3}"))
}

fn c11_hc3_neyman() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let obs: Vec<Observation> = (0..600)
            .map(|i| Observation { y: normal.sample(&mut rng), weight: 1.0, arm: Arm::ALL[i % 3], key: i as u64 })
            .collect();
        let fit = wls_fit(&obs, Arm::One).map_err(|e| e.to_string())?;
        let var = |a: Arm| -> f64 {
            let v: Vec<f64> = obs.iter().filter(|o| o.arm == a).map(|o| o.y).collect();
            mean_var(&v).unwrap().1
        };
        let v = [var(Arm::One), var(Arm::Two), var(Arm::Three)];
        let neyman = [(0, 1), (1, 2), (0, 2)].map(|(a, b)| neyman_var(v[a], 200, v[b], 200).unwrap().sqrt());
        for (c, s) in contrasts(&fit).iter().zip(neyman) {
            worst = worst.max((c.se / s - 1.0).abs());
        }
    }
    ensure(worst <= 0.05, || format!("largest relative gap {worst:.4}"))?;
    Ok(format!("largest relative SE gap {:.2}% over 100 panels", worst * 100.0))
}

fn c12_unbiased() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let truth_p = [0.30, 0.36, 0.33];
    let truth = decompose(truth_p[0], truth_p[1], truth_p[2]).unwrap();
    let reps = 10_000;
    let mut est: [Vec<f64>; 9] = Default::default();
    for _ in 0..reps {
        let mut obs = Vec::new();
        let mut pooled = [(0u64, 0u64); 3];
        let mut cell_means = [0.0; 3];
        for (z, &arm) in Arm::ALL.iter().enumerate() {
            for c in 0..8 {
                let n: u64 = rng.random_range(20..200);
                let k = Binomial::new(n, truth_p[z]).unwrap().sample(&mut rng);
                obs.push(Observation { y: k as f64 / n as f64, weight: n as f64, arm, key: (z * 8 + c) as u64 });
                pooled[z].0 += k;
                pooled[z].1 += n;
                cell_means[z] += k as f64 / n as f64 / 8.0;
            }
        }
        let fit = wls_fit(&obs, Arm::One).map_err(|e| e.to_string())?;
        let wls = contrasts(&fit).map(|c| c.estimate);
        let counts = bernoulli_decomposition(counts(pooled), 0.95).map_err(|e| e.to_string())?;
        let means = decompose(cell_means[0], cell_means[1], cell_means[2]).map_err(|e| e.to_string())?;
        for (i, e) in Estimand::ALL.iter().enumerate() {
            est[i].push(wls[i]);
            est[3 + i].push(counts.estimate(*e));
            est[6 + i].push(means.estimate(*e));
        }
    }
    let names = ["WLS", "counts", "cell means"];
    let mut worst: f64 = 0.0;
    for (j, values) in est.iter().enumerate() {
        let e = Estimand::ALL[j % 3];
        let (m, v) = mean_var(values).unwrap();
        let z = (m - truth.estimate(e)) / (v / reps as f64).sqrt();
        worst = worst.max(z.abs());
        ensure(z.abs() <= 3.0, || format!("{} {} bias z {z:.2}", names[j / 3], e.label()))?;
    }
    Ok(format!("9 estimators, largest |bias|/MC SE {worst:.2}"))
}

fn c13_allocation() -> Check {
    let s = [1.0; 3];
    for n in [30usize, 400, 441] {
        let got = optimal_allocation(s, n).map_err(|e| e.to_string())?;
        let mut best = (f64::INFINITY, Vec::new());
        for n1 in 1..n {
            for n2 in 1..n - n1 {
                let cand = [n1, n2, n - n1 - n2];
                let f = allocation_objective(s, cand);
                if f < best.0 - 1e-15 {
                    best = (f, vec![cand]);
                } else if (f - best.0).abs() <= 1e-15 {
                    best.1.push(cand);
                }
            }
        }
        ensure(best.1.contains(&got), || format!("n={n}: {got:?} not in grid optimum {:?}", best.1))?;
        let ratio = got[1] as f64 / got[0] as f64;
        ensure((ratio - 2f64.sqrt()).abs() < 0.1, || format!("n={n}: ratio {ratio}"))?;
    }
    Ok(format!(
        "30 -> {:?}, 400 -> {:?}, 441 -> {:?}",
        optimal_allocation(s, 30).unwrap(),
        optimal_allocation(s, 400).unwrap(),
        optimal_allocation(s, 441).unwrap()
    ))
}

fn c14_determinism() -> Check {
    let dir = std::env::temp_dir().join(format!("triarm-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let fixture = root().join("fixtures/campaign_counts.csv").display().to_string();
    let run = |threads: &str, name: &str, args: &[&str]| -> Result<Vec<u8>, String> {
        let path = dir.join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_triarm"))
            .args(["--threads", threads])
            .args(args)
            .args(["--report", &path.display().to_string()])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
        std::fs::read(&path).map_err(|e| e.to_string())
    };
    let sim = ["sim", "--rounds", "200", "--sigma", "0.03", "--bid-percentile", "0.995", "--seed", "7"];
    let infer = ["infer", "--input", &fixture, "--family", "per-cell", "--B", "999", "--seed", "7"];
    for (name, args) in [("sim", &sim[..]), ("infer", &infer[..])] {
        let a = run("1", &format!("{name}-a.json"), args)?;
        ensure(a == run("1", &format!("{name}-b.json"), args)?, || format!("{name}: repeated run differs"))?;
        ensure(a == run("8", &format!("{name}-c.json"), args)?, || format!("{name}: --threads 8 differs"))?;
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok("sim and infer reports byte-identical across runs and --threads 1/8".into())
}

fn main() {
    let started = Instant::now();
    let mut failures = 0;
    let mut report = |n: usize, name: &str, f: &dyn Fn() -> Check| {
        let t = Instant::now();
        let outcome = f();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS {n:>2} {name} ({secs:.1}s): {msg}"),
            Err(msg) => {
                failures += 1;
                println!("FAIL {n:>2} {name} ({secs:.1}s): {msg}");
            }
        }
    };
    report(1, "decomposition identity", &c1_identity);
    report(2, "count arithmetic", &c2_count_arithmetic);
    report(3, "Bernoulli standard errors", &c3_bernoulli_se);
    report(4, "simulation placebo", &c4_placebo);
    let t = Instant::now();
    let sweep = calibrated_sweep();
    let sweep_secs = t.elapsed().as_secs_f64();
    report(5, "calibrated magnitude and bid monotonicity", &|| {
        c5_magnitude(sweep.as_ref().map_err(Clone::clone)?).map(|m| format!("{m}, calibration and sweep {sweep_secs:.1}s"))
    });
    report(6, "match-level bid invariance", &|| c6_match_invariance(sweep.as_ref().map_err(Clone::clone)?));
    report(7, "sigma inversion round trip", &c7_inversion);
    report(8, "composition identity", &c8_composition);
    report(9, "dispersion diagnostic", &c9_dispersion);
    report(10, "Romano-Wolf", &c10_romano_wolf);
    report(11, "HC3 and Neyman agreement", &c11_hc3_neyman);
    report(12, "unbiasedness", &c12_unbiased);
    report(13, "allocation optimizer", &c13_allocation);
    report(14, "determinism", &c14_determinism);
    println!("{} failed, {:.1}s total", failures, started.elapsed().as_secs_f64());
    if failures > 0 {
        std::process::exit(1);
    }
}
