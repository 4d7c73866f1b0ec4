//! End-to-end runs of the `qamp` binary.

use std::f64::consts::PI;
use std::process::{Command, Output};
use std::time::Instant;

fn qamp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qamp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = qamp(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Header plus rows, each cell as a string.
fn csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn num(s: &str) -> f64 {
    match s {
        "inf" => f64::INFINITY,
        "-inf" => f64::NEG_INFINITY,
        _ => s.parse().unwrap_or_else(|_| panic!("not a number: {s}")),
    }
}

#[test]
fn metrics_examples() {
    let (h, rows) = csv(&stdout(&["metrics", "--chi", "0.1667", "--r", "0.7071", "--theta", "0.5", "--beta2", "0.5", "--ff"]));
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    assert!((num(&row[column(&h, "p_succ")]) - 0.3125).abs() < 1e-4);
    assert!((num(&row[column(&h, "fidelity")]) - 0.93301).abs() < 1e-4);
    assert!((num(&row[column(&h, "gain")]) - 0.25).abs() < 1e-4);

    let (h, rows) = csv(&stdout(&["metrics", "--r", "0", "--chi", "0.25", "--theta", "0.25", "--beta2", "0.5", "--ff"]));
    assert_eq!(num(&rows[0][column(&h, "p_succ")]), 0.25);
    assert!((num(&rows[0][column(&h, "fidelity")]) - 1.0).abs() < 1e-12);
    assert_eq!(rows[0][column(&h, "gain")], "inf");

    let (h, rows) = csv(&stdout(&["metrics", "--beta2", "0", "--r", "0.3"]));
    assert_eq!(rows.len(), 2, "both feed-forward settings by default");
    for row in rows {
        assert!((num(&row[column(&h, "p_succ")]) - 0.09).abs() < 1e-12);
        assert_eq!(row[column(&h, "fidelity")], "n/a");
    }
}

#[test]
fn table_vmf_matches_printed_quantiles() {
    let (h, rows) = csv(&stdout(&["table-vmf", "--kappas", "0,1,3,10"]));
    assert_eq!(h, ["kappa", "median", "first_decile", "mean_cos"]);
    let medians: Vec<f64> = rows.iter().map(|r| num(&r[1])).collect();
    for (got, want) in medians.iter().zip([0.5, 0.357, 0.220, 0.119]) {
        assert!((got - want).abs() <= 5e-4, "{got} vs {want}");
    }
    let deciles: Vec<f64> = rows.iter().map(|r| num(&r[2])).collect();
    for (got, want) in deciles.iter().zip([0.205, 0.136, 0.0845, 0.046]) {
        assert!((got - want).abs() <= 5e-4, "{got} vs {want}");
    }
}

#[test]
fn uniform_prior_curve_is_flat() {
    let (h, rows) = csv(&stdout(&[
        "curve", "--kappa", "0", "--gain", "inf", "--points", "25", "--chi-steps", "41", "--r-steps", "41", "--nodes", "32",
    ]));
    assert_eq!(rows.len(), 25);
    let p = column(&h, "p_succ");
    for row in &rows {
        assert_eq!(row[column(&h, "reachable")], "true");
        assert!((num(&row[p]) - 0.25).abs() < 1e-12);
    }
}

#[test]
fn fixed_state_curve_endpoints() {
    let (h, rows) = csv(&stdout(&["curve", "--theta", "0.25", "--gain", "inf"]));
    assert_eq!(rows.len(), 401);
    let (f, p) = (column(&h, "f"), column(&h, "p_succ"));
    let first = (num(&rows[0][f]), num(&rows[0][p]));
    let last = (num(&rows[400][f]), num(&rows[400][p]));
    assert!((first.0 - 0.85355).abs() < 1e-5 && (first.1 - 0.42678).abs() < 1e-5, "{first:?}");
    assert!((last.0 - 1.0).abs() < 1e-12 && (last.1 - 0.25).abs() < 1e-12, "{last:?}");
}

#[test]
fn unreachable_targets_are_kept() {
    // Below the threshold of cos²(π/8) nothing is reachable at infinite gain.
    let (h, rows) = csv(&stdout(&[
        "curve", "--kappa", "1000", "--gain", "20", "--points", "5", "--f-min", "0.2", "--chi-steps", "41", "--r-steps", "41", "--nodes", "32",
    ]));
    assert_eq!(rows.len(), 5);
    let reachable = column(&h, "reachable");
    assert!(rows.iter().any(|r| r[reachable] == "false"));
    for row in rows.iter().filter(|r| r[reachable] == "false") {
        assert_eq!(row[column(&h, "p_succ")], "n/a");
    }
}

#[test]
fn sweep_rows_round_trip_through_metrics() {
    let text = stdout(&["sweep", "--theta", "0.3", "--beta2", "0.6", "--chi-steps", "7", "--r-steps", "5"]);
    let (h, rows) = csv(&text);
    assert_eq!(rows.len(), 35);
    for row in rows.iter().step_by(3) {
        let (chi, r) = (&row[column(&h, "chi")], &row[column(&h, "r")]);
        let (mh, m) = csv(&stdout(&["metrics", "--chi", chi, "--r", r, "--theta", "0.3", "--beta2", "0.6", "--ff"]));
        let m = &m[0];
        assert!((num(&m[column(&mh, "p_succ")]) - num(&row[column(&h, "p_succ")])).abs() <= 1e-9);
        let (a, b) = (&m[column(&mh, "fidelity")], &row[column(&h, "fidelity")]);
        if a == "n/a" || b == "n/a" {
            assert_eq!(a, b);
        } else {
            assert!((num(a) - num(b)).abs() <= 1e-9);
        }
        let (ga, gb) = (num(&m[column(&mh, "gain")]), num(&row[column(&h, "gain")]));
        assert!(ga == gb || (ga - gb).abs() <= 1e-9 * ga.abs().max(1.0));
    }
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = (0..2).map(|i| dir.path().join(format!("s{i}.csv"))).collect();
    for p in &paths {
        stdout(&["sweep", "--chi-steps", "21", "--r-steps", "21", "-o", p.to_str().unwrap()]);
    }
    assert_eq!(std::fs::read(&paths[0]).unwrap(), std::fs::read(&paths[1]).unwrap());
    assert_eq!(stdout(&["verify", "--n", "50", "--seed", "7"]), stdout(&["verify", "--n", "50", "--seed", "7"]));
}

#[test]
fn json_has_columns_and_rows() {
    let text = stdout(&["table-vmf", "--kappas", "0,3", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["columns"].as_array().unwrap().len(), 4);
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn threshold_at_infinite_gain() {
    let (h, rows) = csv(&stdout(&["threshold", "--theta", "0.25", "--gains", "inf", "--chi-steps", "101", "--r-steps", "11"]));
    assert_eq!(rows.len(), 1);
    let f = num(&rows[0][column(&h, "f_min")]);
    assert!((f - (PI / 8.0).cos().powi(2)).abs() < 1e-6);
}

#[test]
fn exit_codes() {
    assert_eq!(qamp(&["verify"]).status.code(), Some(0));
    let fail = qamp(&["verify", "--n", "20", "--tolerance", "0"]);
    assert_eq!(fail.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&fail.stderr).contains("chi ="));
    assert_eq!(qamp(&["metrics", "--r", "1.5"]).status.code(), Some(2));
    assert_eq!(qamp(&["metrics", "--beta2", "2"]).status.code(), Some(2));
    assert_eq!(qamp(&["curve", "--gain", "inf"]).status.code(), Some(2));
    assert_eq!(qamp(&["curve", "--theta", "0.2", "--gain", "loud"]).status.code(), Some(2));
    assert_eq!(qamp(&["sweep", "--chi-steps", "1"]).status.code(), Some(2));
    assert_eq!(qamp(&["table-vmf", "--kappas", "-1"]).status.code(), Some(2));
}

#[test]
fn figure_suite_within_two_minutes() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let out = qamp(&["figures", "--out-dir", dir.path().to_str().unwrap()]);
    let elapsed = start.elapsed().as_secs_f64();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(elapsed < 120.0, "figure suite took {elapsed:.1} s");
    for name in ["fig3_infinite_gain", "fig4_threshold", "fig5_averaged_curves", "fig6_merit", "table1_vmf"] {
        let text = std::fs::read_to_string(dir.path().join(format!("{name}.csv"))).unwrap();
        assert!(text.lines().count() > 1, "{name} is empty");
    }
    let (h, rows) = csv(&std::fs::read_to_string(dir.path().join("fig6_merit.csv")).unwrap());
    assert_eq!(rows.len(), 16);
    for row in rows {
        assert!(num(&row[column(&h, "merit")]) >= 1.0 - 1e-12, "{row:?}");
    }
}
