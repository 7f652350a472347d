use hrtri_core::limits::hr_cdf;
use std::path::Path;
use std::process::{Command, Output};

fn hrtri(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hrtri"))
        .args(args)
        .env_remove("HRTRI_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Data rows of a provenance-prefixed CSV, as strings split on commas.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn simulate_pairs(dir: &Path, profile: &str, n: &str, seed: &str) -> String {
    let path = dir.join(format!("pairs-{seed}.csv"));
    let o = hrtri(&["simulate", "--output", "pairs", "--profile", profile, "--n", n, "--seed", seed, "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    path.to_str().unwrap().to_string()
}

#[test]
fn limits_at_infinite_lambda_is_gumbel_product() {
    let o = hrtri(&["limits", "--lambda", "inf", "--points", "0,0"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&stdout(&o));
    let h: f64 = r[0][2].parse().unwrap();
    assert!((h - (-2.0f64).exp()).abs() < 1e-12);
    assert!((h - 0.1353353).abs() < 1e-7);
}

#[test]
fn limits_with_constant_profile_matches_hr_cdf() {
    let o = hrtri(&["limits", "--profile", "constant:1", "--points", "0,0;1,-0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&stdout(&o));
    for (row, (x, y)) in r.iter().zip([(0.0, 0.0), (1.0, -0.5)]) {
        let h: f64 = row[2].parse().unwrap();
        assert!((h - hr_cdf(1.0, x, y).unwrap()).abs() < 1e-9, "{row:?}");
    }
}

#[test]
fn provenance_header_precedes_every_csv() {
    let o = hrtri(&["limits", "--lambda", "0.5", "--points", "0,0"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# hrtri "));
    assert!(lines[1].starts_with("# config: {"));
    assert!(lines[2].starts_with("# input_sha256: "));
    let config: serde_json::Value = serde_json::from_str(lines[1].trim_start_matches("# config: ")).unwrap();
    assert_eq!(config["command"], "limits");
}

#[test]
fn nonpositive_profile_is_a_domain_error() {
    let o = hrtri(&["limits", "--profile", "constant:-1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("alpha > 0"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(hrtri(&["verify", "--theorem", "7"]).status.code(), Some(2));
    assert_eq!(hrtri(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(hrtri(&["--threads", "0", "limits"]).status.code(), Some(2));
    assert_eq!(hrtri(&["--help"]).status.code(), Some(0));
}

#[test]
fn failing_check_exits_with_one() {
    let o = hrtri(&["verify", "--theorem", "1", "--n", "200", "--reps", "2000", "--tolerance", "1e-9", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("[FAIL]"));
}

#[test]
fn passing_check_exits_with_zero() {
    let o = hrtri(&["verify", "--theorem", "1", "--n", "200", "--reps", "2000", "--tolerance", "1", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("[PASS]"));
}

#[test]
fn seed_environment_variable_is_honoured() {
    let args = ["simulate", "--n", "100", "--reps", "500"];
    let with_env = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_hrtri")).args(args).env("HRTRI_SEED", seed).output().unwrap()
    };
    let flagged = hrtri(&["simulate", "--n", "100", "--reps", "500", "--seed", "77"]);
    assert_eq!(stdout(&with_env("77")), stdout(&flagged));
    assert_ne!(stdout(&with_env("78")), stdout(&flagged));
    assert_eq!(with_env("seventy").status.code(), Some(2));
}

#[test]
fn estimate_recovers_constant_profile() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulate_pairs(dir.path(), "constant:1", "4000", "3");
    let o = hrtri(&["estimate", "--input", &input, "--x-col", "x", "--y-col", "y", "--family", "constant"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let alpha = doc["result"]["theta"]["alpha"].as_f64().unwrap();
    assert!((alpha - 1.0).abs() < 0.2, "{alpha}");
    assert_eq!(doc["result"]["converged"], true);
    let sha = doc["provenance"]["input_sha256"].as_str().unwrap();
    assert_eq!(sha.len(), 64);
}

#[test]
fn constancy_test_reports_p_value() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulate_pairs(dir.path(), "linear:1,2", "4000", "4");
    let o = hrtri(&["test-constancy", "--input", &input, "--x-col", "2", "--y-col", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let p = doc["result"]["p_value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    assert!(doc["result"]["beta_hat"].as_f64().unwrap() > 0.0);
}

#[test]
fn analyze_writes_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulate_pairs(dir.path(), "constant:2", "200", "5");
    let plot = dir.path().join("plot.csv");
    let o = hrtri(&["analyze", "--input", &input, "--x-col", "x", "--y-col", "y", "--plot", plot.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["result"]["n"], 200);
    let plot_rows = rows(&std::fs::read_to_string(&plot).unwrap());
    assert_eq!(plot_rows.len(), 198);
    assert_eq!(plot_rows[0][0], "3");
}

#[test]
fn analyze_rejects_short_series() {
    let dir = tempfile::tempdir().unwrap();
    let input = simulate_pairs(dir.path(), "constant:2", "10", "6");
    let o = hrtri(&["analyze", "--input", &input, "--x-col", "x", "--y-col", "y"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_input_file_is_reported() {
    let o = hrtri(&["estimate", "--input", "/nonexistent/data.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent/data.csv"), "{}", stderr(&o));
}
