//! End-to-end checks of the command-line binary: exit codes, report
//! formats, and environment-file input.

use std::path::PathBuf;
use std::process::{Command, Output};

use narrative_media::scenarios::{self, ScenarioSpec};
use narrative_media::serialize::environment_to_json;

fn solver(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_media-solver"))
        .args(args)
        .output()
        .expect("solver runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn temp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("media-solver-test-{}-{name}", std::process::id()))
}

#[test]
fn solve_reports_scenario_optimum() {
    let json = stdout_json(&solver(&["solve", "--scenario", "american_dream", "--c", "0.3"]));
    assert_eq!(json["narrative"], "empowering");
    let utility = json["utility"].as_f64().unwrap();
    assert!((utility - (0.5 - 0.15f64.sqrt())).abs() < 1e-4);
    assert_eq!(json["benchmark"].as_f64().unwrap(), 0.1);
}

#[test]
fn benchmark_accepts_environment_file() {
    let env = scenarios::build(&ScenarioSpec::AmericanDream { c: 0.2 }).unwrap();
    let path = temp_path("env.json");
    std::fs::write(&path, environment_to_json(&env)).unwrap();
    let json = stdout_json(&solver(&["benchmark", "--env", path.to_str().unwrap()]));
    assert!((json["value"].as_f64().unwrap() - 0.15).abs() < 1e-12);
    std::fs::remove_file(&path).ok();
}

#[test]
fn equilibrium_lists_certified_strategies() {
    let json = stdout_json(&solver(&[
        "equilibrium",
        "--scenario",
        "american_dream",
        "--c",
        "0.2",
        "--narrative",
        "empowering",
        "--q0",
        "0.5",
        "--q1",
        "1.0",
    ]));
    assert!(!json["equilibria"].as_array().unwrap().is_empty());
}

#[test]
fn sweep_emits_csv_with_contracted_columns() {
    let out = solver(&[
        "sweep", "--scenario", "american_dream", "--param", "c", "--from", "0.1", "--to", "0.3",
        "--step", "0.1",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "c,narrative,q0,utility,benchmark");
    assert_eq!(lines.len(), 4);
    assert!(text.ends_with('\n'));
    assert!(!text.contains(';'), "CSV must use '.' decimals and ',' separators");
}

#[test]
fn mix_sweep_emits_population_columns() {
    let out = solver(&[
        "sweep", "--mix-c", "0.2", "--param", "lambda", "--from", "0", "--to", "1", "--step",
        "0.5",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "lambda,q,narrative,u_r,u_nr,aggregate");
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn output_flag_writes_file() {
    let path = temp_path("report.json");
    let out = solver(&[
        "benchmark", "--scenario", "degenerate_inaction", "--output", path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(json["value"].as_f64().unwrap(), 0.0);
    std::fs::remove_file(&path).ok();
}

#[test]
fn oracle_check_passes_for_scenarios() {
    for args in [
        vec!["oracle-check", "--scenario", "american_dream", "--c", "0.1"],
        vec!["oracle-check", "--scenario", "whac_a_mole", "--beta", "0.6"],
        vec!["oracle-check", "--scenario", "degenerate_inaction"],
    ] {
        let json = stdout_json(&solver(&args));
        assert_eq!(json["pass"], true, "args {args:?}");
    }
}

#[test]
fn input_errors_exit_with_code_one() {
    for args in [
        vec!["solve"],
        vec!["solve", "--scenario", "unknown"],
        vec!["solve", "--scenario", "american_dream"],
        vec!["menu", "--F", "power:0"],
        vec!["menu", "--F", "/nonexistent/table.csv"],
        vec!["mix", "--c", "0.7", "--lambda", "0.5"],
        vec!["sweep", "--param", "c", "--from", "0.1", "--to", "0.3", "--step", "0"],
        vec!["equilibrium", "--scenario", "american_dream", "--c", "0.2", "--narrative", "bogus", "--q0", "0", "--q1", "1"],
    ] {
        let out = solver(&args);
        assert_eq!(out.status.code(), Some(1), "args {args:?}");
    }
}

#[test]
fn malformed_environment_file_is_an_input_error() {
    let path = temp_path("bad-env.json");
    std::fs::write(&path, "{\"states\": [\"a\"]}").unwrap();
    let out = solver(&["solve", "--env", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    std::fs::remove_file(&path).ok();
}

#[test]
fn help_exits_successfully() {
    let out = solver(&["--help"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("media-solver"));
}

#[test]
fn table_cdf_file_is_accepted() {
    let path = temp_path("cdf.csv");
    std::fs::write(&path, "c,F\n0,0\n0.5,0.25\n1,1\n").unwrap();
    let json = stdout_json(&solver(&[
        "compete", "--F", path.to_str().unwrap(), "--nodes", "401",
    ]));
    assert!(json["cutoff"].as_f64().unwrap() > 0.0);
    assert_eq!(json["deviation_violations"].as_f64().unwrap(), 0.0);
    std::fs::remove_file(&path).ok();
}

#[test]
fn json_numbers_are_rounded_to_twelve_significant_digits() {
    let out = solver(&["solve", "--scenario", "american_dream", "--c", "0.3"]);
    let json = stdout_json(&out);
    // The interior optimum 0.5 - sqrt(0.15) has a long expansion; the report
    // must carry it with 12 significant digits, no more.
    let utility = serde_json::to_string(&json["utility"]).unwrap();
    let digits = utility
        .trim_start_matches("0.")
        .trim_start_matches('0')
        .len();
    assert!((10..=12).contains(&digits), "utility printed as {utility}");
    assert!((json["utility"].as_f64().unwrap() - (0.5 - 0.15f64.sqrt())).abs() < 1e-9);
}
