#[path = "../../core/tests/support/mod.rs"]
#[allow(dead_code)]
mod support;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use aalen_fic::{FicReport, IndexSet, StepEstimate};
use tempfile::TempDir;

const NELSON_AALEN: &str = "time,status,x1\n1,1,1\n2,1,1\n3,1,1\n";
const FOUR: &str = "time,status,x1,x2\n1,1,1,1\n2,1,1,3\n3,1,1,2\n4,0,1,1\n";
// One subject left at risk at the last event: G_n(3) has rank one.
const THIN: &str = "time,status,x1,x2\n1,1,1,1\n2,1,1,3\n3,1,1,2\n";

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aalen-fic")).args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn report(o: &Output) -> FicReport {
    serde_json::from_str(&stdout(o)).unwrap()
}

#[test]
fn fit_reproduces_nelson_aalen_jumps() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "na.csv", NELSON_AALEN);
    let out = dir.path().join("fit.json");
    let o = bin(&["fit", s(&data), "--format", "json", "--out", s(&out)]);
    let est: StepEstimate = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(est.grid.times, vec![1.0, 2.0, 3.0]);
    assert_eq!(est.increments, vec![vec![1.0 / 3.0], vec![0.5], vec![1.0]]);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), stdout(&o));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fit.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "fit");
}

#[test]
fn fit_table_lists_cumulative_hazard() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "na.csv", NELSON_AALEN);
    let text = stdout(&bin(&["fit", s(&data)]));
    let last = text.lines().last().unwrap();
    let cum: f64 = last.split_whitespace().last().unwrap().parse().unwrap();
    assert!((cum - 11.0 / 6.0).abs() < 1e-6, "{text}");
}

#[test]
fn fit_subset_keeps_requested_columns() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "four.csv", FOUR);
    let o = bin(&["fit", s(&data), "--subset", "1", "--format", "json"]);
    let est: StepEstimate = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(est.index_set, IndexSet::new(&[1], 2).unwrap());
    // x1 == 1 for everyone, so the submodel is Nelson-Aalen.
    let na: Vec<f64> = est.increments.iter().map(|v| v[0]).collect();
    assert_eq!(na, vec![0.25, 1.0 / 3.0, 0.5]);
}

#[test]
fn missing_file_is_a_usage_error() {
    let o = bin(&["fit", "/nonexistent/data.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn malformed_csv_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "bad.csv", "time,status,x1\n1,2,1\n");
    assert_eq!(bin(&["fit", s(&data)]).status.code(), Some(2));
}

#[test]
fn singular_design_exits_3() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "thin.csv", THIN);
    let o = bin(&["fit", s(&data), "--tau", "3"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn all_infeasible_exits_4() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "thin.csv", THIN);
    let o = bin(&["fic", s(&data), "--x", "1,1", "--t", "3", "--candidates", "1,2"]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn fic_enumerates_all_candidates() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "four.csv", FOUR);
    let rep = report(&bin(&["fic", s(&data), "--x", "1,2", "--t", "3", "--format", "json"]));
    assert_eq!(rep.candidates.len(), 3);
    let scores: Vec<f64> = rep.feasible().map(|c| c.score.unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(rep.winner.as_ref(), Some(&rep.feasible().next().unwrap().index_set));
}

#[test]
fn fic_winner_matches_brute_force() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "four.csv", FOUR);
    let recs = vec![
        (1.0, true, vec![1.0, 1.0]),
        (2.0, true, vec![1.0, 3.0]),
        (3.0, true, vec![1.0, 2.0]),
        (4.0, false, vec![1.0, 1.0]),
    ];
    for (xs, x) in [("1,0", [1.0, 0.0]), ("1,2.5", [1.0, 2.5]), ("1,1", [1.0, 1.0])] {
        let rep = report(&bin(&["fic", s(&data), "--x", xs, "--t", "3", "--candidates", "1;1,2", "--format", "json"]));
        let sub = support::brute::brute(&recs, &[0], &x, 3.0).unwrap();
        let full = support::brute::brute(&recs, &[0, 1], &x, 3.0).unwrap();
        let expected = if sub.fic < full.fic { IndexSet::new(&[1], 2) } else { Ok(IndexSet::full(2)) }.unwrap();
        assert_eq!(rep.winner, Some(expected), "x = {xs}");
        for c in &rep.candidates {
            let b = if c.index_set.is_full() { &full } else { &sub };
            assert!(support::random::close(c.score.unwrap(), b.fic, 1e-12));
        }
    }
}

#[test]
fn protected_covariates_are_always_included() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "four.csv", FOUR);
    let rep = report(&bin(&["fic", s(&data), "--x", "1,2", "--t", "3", "--protected", "1", "--format", "json"]));
    assert_eq!(rep.candidates.len(), 2);
    assert!(rep.candidates.iter().all(|c| c.index_set.indices().contains(&0)));
    let o = bin(&["fic", s(&data), "--x", "1,2", "--t", "3", "--candidates", "2", "--protected", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn interval_from_zero_equals_point() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "four.csv", FOUR);
    let point = report(&bin(&["fic", s(&data), "--x", "1,2", "--t", "3", "--format", "json"]));
    let window = report(&bin(&["fic", s(&data), "--x", "1,2", "--t1", "0", "--t2", "3", "--format", "json"]));
    let scores = |r: &FicReport| r.candidates.iter().map(|c| (c.index_set.clone(), c.score)).collect::<Vec<_>>();
    assert_eq!(scores(&point), scores(&window));
}

#[test]
fn weights_file_drives_wfic() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "four.csv", FOUR);
    let weights = write(
        &dir,
        "w.json",
        r#"{"points": [{"x": [1, 0], "t": 1, "w": 0.5}, {"x": [1, 0], "t": 2, "w": 0.5}]}"#,
    );
    let rep = report(&bin(&["fic", s(&data), "--weights", s(&weights), "--candidates", "1", "--format", "json"]));
    let c = &rep.candidates[0];
    assert!(c.sqb_hat.unwrap() < 0.0);
    assert_eq!(c.score, c.var_hat);
    let empirical = write(&dir, "e.json", r#"{"empirical_covariates": {"t": 3}}"#);
    let rep = report(&bin(&["fic", s(&data), "--weights", s(&empirical), "--format", "json"]));
    assert_eq!(rep.candidates.len(), 3);
}

#[test]
fn negative_x_is_accepted() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "four.csv", FOUR);
    let o = bin(&["fic", s(&data), "--x", "-1,2", "--t", "3"]);
    assert!(stdout(&o).contains("winner:"));
}

#[test]
fn simulate_is_reproducible_and_loadable() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "sim.json",
        r#"{"n": 200, "covariates": {"gamma": {"shape": [2, 2], "rate": [2, 2]}}, "alphas": [1, 0.5],
            "censoring": {"kind": "administrative", "time": 2}, "seed": 4}"#,
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    stdout(&bin(&["simulate", s(&cfg), "--out", s(&a)]));
    stdout(&bin(&["--threads", "2", "simulate", s(&cfg), "--out", s(&b)]));
    let (ta, tb) = (std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
    assert_eq!(ta.lines().filter(|l| !l.starts_with("# output")).collect::<Vec<_>>(), tb.lines().filter(|l| !l.starts_with("# output")).collect::<Vec<_>>());
    assert!(ta.contains("# seed: 4"));
    let d = aalen_fic::load_dataset(ta.as_bytes()).unwrap();
    assert_eq!((d.n(), d.r()), (200, 2));
    assert!(d.records().iter().all(|r| r.time <= 2.0));
    let c = dir.path().join("c.csv");
    stdout(&bin(&["simulate", s(&cfg), "--out", s(&c), "--seed", "5"]));
    assert_ne!(aalen_fic::load_dataset(std::fs::File::open(&c).unwrap()).unwrap(), d);
    // The simulated file feeds straight back into fit.
    stdout(&bin(&["fit", s(&a), "--tau", "1"]));
}

#[test]
fn oracle_full_model_has_no_bias() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "oracle.json",
        r#"{"covariates": {"shape": [2, 2], "rate": [2, 2]}, "alphas": [1, 0.1], "x": [1, 1], "t": 1}"#,
    );
    let text = stdout(&bin(&["oracle", s(&cfg), "--n", "100,1000"]));
    assert!(text.starts_with("# aalen-fic"));
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 6);
    let h = rdr.headers().unwrap().clone();
    let col = |name: &str| h.iter().position(|c| c == name).unwrap();
    for row in &rows {
        let sqb: f64 = row[col("sqb")].parse().unwrap();
        if &row[col("I")] == "{1,2}" {
            assert_eq!(sqb, 0.0);
        } else {
            assert!(sqb > 0.0);
        }
    }
}

#[test]
fn oracle_replication_reports_monte_carlo_columns() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "oracle.json",
        r#"[{"covariates": {"shape": [1], "rate": [1]}, "alphas": [1], "x": [1], "t": 0.5}]"#,
    );
    let out = dir.path().join("o.csv");
    stdout(&bin(&["oracle", s(&cfg), "--n", "200", "--replicate", "50", "--seed", "3", "--out", s(&out)]));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("# seed: 3"));
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let h = rdr.headers().unwrap().clone();
    let row = rdr.records().next().unwrap().unwrap();
    let used: usize = row[h.iter().position(|c| c == "mc_used").unwrap()].parse().unwrap();
    assert_eq!(used, 50);
    assert!(dir.path().join("o.csv.manifest.json").exists());
}
