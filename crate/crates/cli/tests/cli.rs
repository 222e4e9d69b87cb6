use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SUBCOMMANDS: [&str; 9] =
    ["sim", "sweep", "invert-sigma", "calibrate", "decompose", "infer", "dispersion", "audit", "allocate"];

fn triarm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_triarm")).args(args).env_remove("TRIARM_THREADS").output().unwrap()
}

fn fixture() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/campaign_counts.csv").display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let o = triarm(&[args, &["--json"]].concat());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(&o)).unwrap()
}

fn error(o: &Output) -> Value {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    let line = text.lines().last().unwrap();
    serde_json::from_str(line).unwrap()
}

fn snapshot_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/snapshots").join(format!("{name}.txt"))
}

#[test]
fn help_matches_snapshots() {
    let update = std::env::var_os("UPDATE_SNAPSHOTS").is_some();
    let mut pages = vec![("triarm".to_string(), triarm(&["--help"]))];
    pages.extend(SUBCOMMANDS.iter().map(|s| (format!("triarm-{s}"), triarm(&[s, "--help"]))));
    for (name, out) in pages {
        assert!(out.status.success());
        let text = stdout(&out);
        let path = snapshot_path(&name);
        if update {
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            std::fs::write(&path, &text).unwrap();
        } else {
            let expected = std::fs::read_to_string(&path).unwrap_or_default();
            assert_eq!(text, expected, "{name} help changed; rerun with UPDATE_SNAPSHOTS=1");
        }
    }
}

#[test]
fn every_option_documents_a_default_or_requirement() {
    for s in SUBCOMMANDS {
        let text = stdout(&triarm(&[s, "--help"]));
        let mut options = Vec::new();
        let mut current = String::new();
        for line in text.lines().skip_while(|l| !l.starts_with("Options:")).skip(1) {
            if line.trim_start().starts_with('-') {
                if !current.is_empty() {
                    options.push(std::mem::take(&mut current));
                }
            }
            current.push_str(line);
            current.push(' ');
        }
        options.push(current);
        for o in options {
            let flag = o.split_whitespace().next().unwrap_or_default().to_string();
            if ["-h,", "-V,"].contains(&flag.as_str()) {
                continue;
            }
            let documented = o.contains("[default:") || o.contains("required");
            assert!(documented, "{s}: {o}");
        }
    }
}

#[test]
fn allocate_reports_the_square_root_two_split() {
    let v = json(&["allocate", "--sd", "1,1,1", "--n", "400"]);
    assert_eq!(v["result"]["allocation"], serde_json::json!([117, 166, 117]));
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["provenance"]["tool"], "triarm");
    assert_eq!(v["provenance"]["subcommand"], "allocate");
}

#[test]
fn infer_on_the_campaign_fixture() {
    let v = json(&["infer", "--input", &fixture(), "--outcome", "female-share", "--seed", "1", "--B", "199"]);
    let rows = v["result"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let est = |i: usize| rows[i]["estimate_pp"].as_f64().unwrap();
    assert!((est(0) - 2.07).abs() < 0.01, "{}", est(0));
    assert!((est(1) + 0.70).abs() < 0.01);
    assert!((est(2) - 1.37).abs() < 0.01);
    for r in rows {
        let p = r["p_adj"].as_f64().unwrap();
        assert!((1.0 / 200.0..=1.0).contains(&p));
    }
}

#[test]
fn decompose_matches_campaign_counts() {
    let v = json(&["decompose", "--input", &fixture()]);
    let arms = v["result"]["arms"].as_array().unwrap();
    let rates: Vec<f64> = arms.iter().map(|a| a["rate_pp"].as_f64().unwrap()).collect();
    for (r, t) in rates.iter().zip([34.49, 36.56, 35.86]) {
        assert!((r - t).abs() < 0.01, "{r} vs {t}");
    }
    let rows = v["result"]["decomposition"]["rows"].as_array().unwrap();
    assert!((rows[0]["se"].as_f64().unwrap() - 0.37).abs() < 0.01);
}

#[test]
fn reports_are_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str, args: &[&str]| {
        let path = dir.path().join(name);
        let p = path.display().to_string();
        let o = triarm(&[&["--threads", threads], args, &["--report", &p]].concat());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(path).unwrap()
    };
    let sim = ["sim", "--rounds", "40", "--n-users", "3000", "--n-advertisers", "120", "--seed", "5"];
    let a = run("1", "a.json", &sim);
    assert_eq!(a, run("1", "b.json", &sim));
    assert_eq!(a, run("8", "c.json", &sim));
    let fx = fixture();
    let infer = ["infer", "--input", &fx, "--family", "per-cell", "--B", "200", "--seed", "3"];
    let a = run("1", "d.json", &infer);
    assert_eq!(a, run("8", "e.json", &infer));
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("triarm.toml");
    std::fs::write(&cfg, "[allocate]\nn = 30\nsd = [1.0, 1.0, 1.0]\n").unwrap();
    let c = cfg.display().to_string();
    let v = json(&["--config", &c, "allocate"]);
    assert_eq!(v["provenance"]["config"]["n"], 30);
    let v = json(&["--config", &c, "allocate", "--n", "441"]);
    assert_eq!(v["provenance"]["config"]["n"], 441);
    std::fs::write(&cfg, "[allocate]\nwidth = 3\n").unwrap();
    let o = triarm(&["--config", &c, "allocate", "--n", "30"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn csv_output_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    let p = path.display().to_string();
    let o = triarm(&["sim", "--rounds", "3", "--n-users", "500", "--n-advertisers", "50", "--seed", "1", "--csv", &p]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.starts_with("round,arm,wins"));
    assert_eq!(text.lines().count(), 1 + 3 * 3);
}

#[test]
fn exit_codes_and_error_lines() {
    let o = triarm(&["sim", "--rounds", "1", "--male-share", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let e = error(&o);
    assert_eq!(e["error"]["kind"], "config");
    assert_eq!(e["error"]["messages"].as_array().unwrap().len(), 3);

    let o = triarm(&["sim", "--bid-percentile", "0.9", "--bid-amount", "2", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));

    let o = triarm(&["infer", "--input", "/does/not/exist.csv", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error(&o)["error"]["kind"], "data");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "arm,bid_level\n1,high\n").unwrap();
    let o = triarm(&["decompose", "--input", &bad.display().to_string()]);
    assert_eq!(o.status.code(), Some(3));

    let o = triarm(&["invert-sigma", "--target", "90", "--rounds", "4", "--n-users", "500", "--n-advertisers", "50", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));

    let o = triarm(&["infer", "--input", &fixture()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(triarm(&["infer", "--input", &fixture(), "--se", "bernoulli"]).status.success());

    assert_eq!(triarm(&["--version"]).status.code(), Some(0));
}
