use std::process::{Command, Output};

use ctstat::special::{ml_survival, MlOrder};
use serde_json::Value;

fn ctstat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctstat"))
        .args(args)
        .env_remove("CTSTAT_THREADS")
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Header config and data rows of a CSV document.
fn csv(text: &str) -> (Value, Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let config = serde_json::from_str(lines.next().unwrap().strip_prefix("# ").unwrap()).unwrap();
    let columns = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    (config, columns, rows)
}

#[test]
fn ml_at_order_one_is_the_exponential() {
    let text = stdout(&ctstat(&["ml", "--alpha", "1", "--z", "-1"]));
    assert_eq!(text.lines().nth(1), Some("z,value"));
    assert_eq!(text.lines().nth(2), Some("-1,0.367879441171"));
}

#[test]
fn header_replays_the_run() {
    let first = stdout(&ctstat(&[
        "pmf", "--alpha", "0.7", "--t", "2", "--nmax", "5",
    ]));
    let (config, columns, rows) = csv(&first);
    assert_eq!(columns, ["n", "probability"]);
    assert_eq!(rows.len(), 6);
    let argv: Vec<String> = config["argv"]
        .as_array()
        .unwrap()
        .iter()
        .skip(1)
        .map(|a| a.as_str().unwrap().to_string())
        .collect();
    let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
    assert_eq!(stdout(&ctstat(&argv)), first);
    assert_eq!(config["common"]["seed"], 42);
}

#[test]
fn relaxation_solution_tracks_ml_survival() {
    let text = stdout(&ctstat(&[
        "solve", "--kernel", "powerlaw", "--alpha", "0.6", "--c", "1", "--tmax", "5", "--h",
        "0.001",
    ]));
    let (_, columns, rows) = csv(&text);
    assert_eq!(columns, ["t", "Q", "est_error"]);
    assert_eq!(rows.len(), 5001);
    let order = MlOrder::new(0.6).unwrap();
    for r in rows {
        assert!(
            (r[1] - ml_survival(order, r[0]).unwrap()).abs() < 1e-3,
            "t {}",
            r[0]
        );
    }
}

#[test]
fn compare_passes_for_matching_laws() {
    let out = stdout(&ctstat(&[
        "compare", "--stat", "max", "--alpha", "0.7", "--t", "1.5", "--jumps", "exp:1", "--paths",
        "100000", "--seed", "42",
    ]));
    let doc: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["report"]["pass"], true, "{doc}");
    assert_eq!(doc["report"]["n"], 100000);
}

#[test]
fn compare_with_heavy_tailed_sums_reports_lattice_error() {
    let out = stdout(&ctstat(&[
        "compare",
        "--stat",
        "sum",
        "--jumps",
        "pareto:1:2.5",
        "--alpha",
        "0.6",
        "--t",
        "2",
        "--paths",
        "20000",
    ]));
    let doc: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["report"]["pass"], true, "{doc}");
    assert!(doc["report"]["cdf_error"].as_f64().unwrap() < 1e-3);
}

#[test]
fn analytic_grid_matches_pointwise() {
    let base = [
        "analytic",
        "--stat",
        "sum",
        "--jumps",
        "uniform:1",
        "--alpha",
        "0.8",
        "--t",
        "1.5",
    ];
    let grid = stdout(&ctstat(&[&base[..], &["--grid", "0:2:5"]].concat()));
    let points = stdout(&ctstat(&[&base[..], &["--u", "0,0.5,1,1.5,2"]].concat()));
    let (_, _, a) = csv(&grid);
    let (_, _, b) = csv(&points);
    assert_eq!(a.len(), 5);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x[0], y[0]);
        assert!((x[1] - y[1]).abs() < 1e-6, "{x:?} vs {y:?}");
    }
}

#[test]
fn json_format() {
    let out = stdout(&ctstat(&[
        "--format", "json", "ml", "--alpha", "0.5", "--z", "0,-1",
    ]));
    let doc: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["columns"], serde_json::json!(["z", "value"]));
    assert_eq!(doc["rows"][0][1], 1.0);
    assert_eq!(doc["config"]["run"]["alpha"], 0.5);
}

#[test]
fn simulation_ignores_thread_count() {
    let args = [
        "simulate", "--stat", "sum", "--jumps", "exp:1", "--alpha", "0.6", "--t", "1", "--paths",
        "2000",
    ];
    let one = stdout(&ctstat(&[&["--threads", "1"][..], &args].concat()));
    let four = stdout(&ctstat(&[&["--threads", "4"][..], &args].concat()));
    assert_eq!(csv(&one).2, csv(&four).2);
}

#[test]
fn thread_count_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_ctstat"))
        .args(["ml", "--alpha", "1", "--z", "0"])
        .env("CTSTAT_THREADS", "3")
        .output()
        .unwrap();
    let (config, _, _) = csv(&stdout(&out));
    assert_eq!(config["common"]["threads"], 3);
}

#[test]
fn output_file() {
    let path = std::env::temp_dir().join(format!("ctstat-cli-{}.csv", std::process::id()));
    let out = ctstat(&[
        "-o",
        path.to_str().unwrap(),
        "ml",
        "--alpha",
        "1",
        "--z",
        "-1",
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert!(text.ends_with("-1,0.367879441171\n"));
}

#[test]
fn domain_errors_exit_2() {
    assert_eq!(
        ctstat(&["ml", "--alpha", "1.5", "--z", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        ctstat(&["pmf", "--alpha", "0.5", "--t", "-1", "--nmax", "3"])
            .status
            .code(),
        Some(2)
    );
    let bad_row = [
        "chain", "--states", "A,B", "--row", "0.5,0.4", "--row", "1,0", "--start", "A", "--t", "1",
    ];
    assert_eq!(ctstat(&bad_row).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(
        ctstat(&["ml", "--alpha", "0.5", "--z", "0", "--bogus"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(ctstat(&["nonsense"]).status.code(), Some(2));
    assert_eq!(ctstat(&["ml", "--z", "0"]).status.code(), Some(2));
}

#[test]
fn unmet_accuracy_exits_3() {
    let out = ctstat(&[
        "analytic",
        "--stat",
        "sum",
        "--jumps",
        "uniform:1",
        "--alpha",
        "0.8",
        "--t",
        "1.5",
        "--u",
        "2",
        "--grid-cells",
        "8",
        "--max-grid-cells",
        "16",
        "--conv-budget",
        "1e-12",
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn unwritable_output_exits_4() {
    let out = ctstat(&[
        "-o",
        "/nonexistent-dir/x.csv",
        "ml",
        "--alpha",
        "1",
        "--z",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(4));
}
