//! End-to-end tests of the `disperse` binary: the exit-code contract,
//! byte-level determinism of every artifact, and the documented flag
//! combinations of each subcommand.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_disperse"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "expected success for {args:?}, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process exited normally")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

#[test]
fn gen_is_deterministic_and_newline_terminated() {
    let a = run_ok(&["gen", "--family", "sequential", "--n", "5"]);
    let text = stdout_str(&a);
    assert_eq!(text, "1 6\n2 6\n3 6\n4 6\n5 6\n");

    let path = tmp("gen_seq5.txt");
    run_ok(&["gen", "--family", "sequential", "--n", "5", "-o", path.to_str().unwrap()]);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);

    let r1 = run_ok(&["gen", "--family", "random", "--n", "20", "--seed", "1"]);
    let r2 = run_ok(&["gen", "--family", "random", "--n", "20", "--seed", "1"]);
    let r3 = run_ok(&["gen", "--family", "random", "--n", "20", "--seed", "2"]);
    assert_eq!(r1.stdout, r2.stdout, "same seed, same bytes");
    assert_ne!(r1.stdout, r3.stdout, "different seed, different instance");
    assert!(stdout_str(&r1).ends_with('\n'));
}

#[test]
fn gen_usage_errors_exit_one() {
    let missing = bin().args(["gen", "--family", "three-stage"]).output().unwrap();
    assert_eq!(exit_code(&missing), 1, "three-stage without --r is a usage error");

    let adaptive = bin().args(["gen", "--family", "adaptive-cd", "--n", "4"]).output().unwrap();
    assert_eq!(exit_code(&adaptive), 1);
    let msg = String::from_utf8_lossy(&adaptive.stderr).into_owned();
    assert!(msg.contains("run --adversary"), "points at the run path: {msg}");

    let unknown = bin().args(["nosuch"]).output().unwrap();
    assert_eq!(exit_code(&unknown), 1, "clap errors map onto exit 1, not clap's 2");

    let help = bin().args(["--help"]).output().unwrap();
    assert_eq!(exit_code(&help), 0);
}

#[test]
fn run_line_staircase_meets_its_ceiling_deterministically() {
    let inst = tmp("run_seq100.txt");
    run_ok(&["gen", "--family", "sequential", "--n", "100", "-o", inst.to_str().unwrap()]);

    let args = ["run", "--instance", inst.to_str().unwrap(), "--algo", "line", "--l", "3"];
    let a = run_ok(&args);
    let b = run_ok(&args);
    assert_eq!(a.stdout, b.stdout, "same run, byte-identical report");

    let report: serde_json::Value = serde_json::from_str(&stdout_str(&a)).unwrap();
    assert_eq!(report["schema"], 1);
    assert_eq!(report["algorithm"]["name"], "line");
    assert_eq!(report["instance"]["n"], 100);
    assert_eq!(report["instance"]["m"], 100);
    let ratio = report["ratio_atwc"]["value"].as_f64().unwrap();
    assert!((1.0..=1.45075 + 1e-9).contains(&ratio), "ratio {ratio} within the level-3 ceiling");
    assert_eq!(report["atwc_reference"]["exact"], true, "segment reference is exact");
    assert_eq!(report["passed"], true);
}

#[test]
fn run_square_staircase_stays_under_the_ceiling() {
    let inst = tmp("run_seq1000.txt");
    run_ok(&["gen", "--family", "sequential", "--n", "1000", "-o", inst.to_str().unwrap()]);
    let out = run_ok(&["run", "--instance", inst.to_str().unwrap(), "--algo", "square"]);
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let ratio = report["ratio_atwc"]["value"].as_f64().unwrap();
    assert!(ratio <= 1.5901 + 1e-9, "reported bound {ratio} within the square ceiling");
    assert_eq!(report["ratio_atwc"]["is_upper_bound"], true, "reference beyond 36 is a bound");
}

#[test]
fn run_exits_two_on_a_guarantee_miss_and_still_writes_the_report() {
    // At peak occupancy 97 the inexact dispersion reference exceeds the
    // square algorithm's ceiling, so the conservative check must trip.
    let inst = tmp("run_seq97.txt");
    let rep = tmp("run_seq97.json");
    run_ok(&["gen", "--family", "sequential", "--n", "97", "-o", inst.to_str().unwrap()]);
    let out = bin()
        .args([
            "run", "--instance", inst.to_str().unwrap(), "--algo", "square",
            "-o", rep.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 2);
    let msg = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(msg.contains("guarantee violation"), "diagnostic names the failure: {msg}");
    assert!(msg.contains("upper bound"), "diagnostic flags the conservative reference: {msg}");

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
    assert_eq!(report["guarantee"]["conservative"], true);
}

#[test]
fn run_greedy_meets_the_covering_floor_on_a_seeded_instance() {
    let inst = tmp("run_rand50.txt");
    run_ok(&["gen", "--family", "random", "--n", "50", "--seed", "3", "-o", inst.to_str().unwrap()]);
    let out = run_ok(&["run", "--instance", inst.to_str().unwrap(), "--algo", "greedy", "--epsilon", "0.1"]);
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    let g = &report["guarantee"];
    assert_eq!(g["passed"], true, "every arrival met the covering floor");
    assert!(g["measured"].as_f64().unwrap() <= 1.0, "worst floor/achieved margin within 1");
}

#[test]
fn run_offline_reduction_checks_the_doubled_ceiling() {
    let inst = tmp("run_off30.txt");
    run_ok(&["gen", "--family", "random", "--n", "30", "--seed", "7", "-o", inst.to_str().unwrap()]);
    let out = run_ok(&[
        "run", "--instance", inst.to_str().unwrap(), "--objective", "cd", "--offline",
        "--algo-atwc", "line", "--l", "3",
    ]);
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(report["offline"], true);
    assert_eq!(report["passed"], true);
    let ceil = report["guarantee"]["ceiling"].as_f64().unwrap();
    let single = report["competitive_ceiling"].as_f64().unwrap();
    assert!((ceil - 2.0 * single).abs() < 1e-12, "integral runs answer to twice the ceiling");

    // Flag combinations outside the contract are usage errors.
    let with_algo = bin()
        .args([
            "run", "--instance", inst.to_str().unwrap(), "--objective", "cd", "--offline",
            "--algo", "line", "--l", "3",
        ])
        .output()
        .unwrap();
    assert_eq!(exit_code(&with_algo), 1);
    let wrong_objective = bin()
        .args([
            "run", "--instance", inst.to_str().unwrap(), "--offline",
            "--algo-atwc", "line", "--l", "3",
        ])
        .output()
        .unwrap();
    assert_eq!(exit_code(&wrong_objective), 1, "offline needs --objective cd");
}

#[test]
fn run_adaptive_adversary_reports_the_online_integral() {
    let args = [
        "run", "--adversary", "adaptive-cd", "--n", "8", "--algo", "greedy-segment",
        "--objective", "cd",
    ];
    let a = run_ok(&args);
    let b = run_ok(&args);
    assert_eq!(a.stdout, b.stdout, "the adversary is deterministic");
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&a)).unwrap();
    assert_eq!(report["instance"]["n"], 8);
    assert_eq!(report["instance"]["t_end"], 1000.0);
    assert!(report["guarantee"].is_null(), "no fixed ceiling for online integral runs");
    assert!(report["ratio_cd"]["value"].as_f64().unwrap() > 1.0);

    let atwc_objective = bin()
        .args(["run", "--adversary", "adaptive-cd", "--n", "8", "--algo", "greedy-segment"])
        .output()
        .unwrap();
    assert_eq!(exit_code(&atwc_objective), 1, "the adversary targets the integral objective");
}

#[test]
fn run_usage_errors_exit_one() {
    let inst = tmp("run_usage.txt");
    run_ok(&["gen", "--family", "sequential", "--n", "10", "-o", inst.to_str().unwrap()]);
    for args in [
        vec!["run", "--instance", inst.to_str().unwrap(), "--algo", "nosuch"],
        vec!["run", "--instance", inst.to_str().unwrap(), "--algo", "line"],
        vec!["run", "--instance", inst.to_str().unwrap(), "--algo", "line", "--l", "3", "--epsilon", "0.1"],
        vec!["run", "--instance", inst.to_str().unwrap(), "--algo", "line", "--l", "3", "--builtin", "square"],
        vec!["run", "--instance", inst.to_str().unwrap(), "--algo", "greedy"],
        vec!["run", "--algo", "line", "--l", "3"],
        vec!["run", "--instance", "/nonexistent/instance.txt", "--algo", "line", "--l", "3"],
    ] {
        let out = bin().args(&args).output().unwrap();
        assert_eq!(exit_code(&out), 1, "expected usage error for {args:?}");
    }
}

#[test]
fn verify_suite_summary_and_budget_resolution() {
    let out = run_ok(&["verify", "--suite", "oracle"]);
    let summary: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(summary["schema"], 1);
    assert_eq!(summary["suite"], "oracle");
    assert_eq!(summary["passed"], true);

    // The environment variable supplies the budget; an absurdly small one
    // must starve the oracle, and the flag must win over the environment.
    let starved = bin()
        .args(["verify", "--suite", "oracle"])
        .env("DISPERSE_ORACLE_BUDGET", "10")
        .output()
        .unwrap();
    assert_eq!(exit_code(&starved), 1);
    assert!(String::from_utf8_lossy(&starved.stderr).contains("budget"));

    let overridden = bin()
        .args(["verify", "--suite", "oracle", "--oracle-budget", "100000000"])
        .env("DISPERSE_ORACLE_BUDGET", "10")
        .output()
        .unwrap();
    assert_eq!(exit_code(&overridden), 0);

    let unknown = bin().args(["verify", "--suite", "nosuch"]).output().unwrap();
    assert_eq!(exit_code(&unknown), 1);
}

#[test]
fn verify_square_rows_prints_the_identity_table() {
    let out = run_ok(&["verify", "--suite", "square", "--rows", "40"]);
    let text = stdout_str(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,dmin,predicted,case,round");
    assert_eq!(lines.len(), 41, "header plus one row per position");
    let row1: Vec<&str> = lines[1].split(',').collect();
    assert_eq!((row1[0], row1[3], row1[4]), ("1", "1", "-1"), "first position opens group 1");
    assert_eq!(row1[1], row1[2], "simulated distance equals the closed form");
    let row37: Vec<&str> = lines[37].split(',').collect();
    assert_eq!(row37[0], "37");
    assert_eq!(row37[3], "1", "position 37 opens case 1");
    assert_eq!(row37[4], "0", "of round 0");

    let wrong_suite = bin().args(["verify", "--suite", "line", "--rows", "10"]).output().unwrap();
    assert_eq!(exit_code(&wrong_suite), 1);
}

#[test]
fn report_emits_csv_ratio_table_and_svg() {
    let inst = tmp("report_seq20.txt");
    let t1 = tmp("report_line.jsonl");
    let t2 = tmp("report_gs.jsonl");
    run_ok(&["gen", "--family", "sequential", "--n", "20", "-o", inst.to_str().unwrap()]);
    run_ok(&[
        "run", "--instance", inst.to_str().unwrap(), "--algo", "line", "--l", "2",
        "--trace", t1.to_str().unwrap(), "-o", tmp("report_line.json").to_str().unwrap(),
    ]);
    run_ok(&[
        "run", "--instance", inst.to_str().unwrap(), "--algo", "greedy-segment",
        "--trace", t2.to_str().unwrap(), "-o", tmp("report_gs.json").to_str().unwrap(),
    ]);

    let single = run_ok(&["report", "--trace", t1.to_str().unwrap(), "--builtin", "segment"]);
    let csv = stdout_str(&single);
    assert!(csv.starts_with("t,n_present,dmin\n"));
    assert!(csv.ends_with('\n'));

    let merged = run_ok(&[
        "report", "--trace", t1.to_str().unwrap(), "--trace", t2.to_str().unwrap(),
        "--builtin", "segment",
    ]);
    let table = stdout_str(&merged);
    assert!(table.starts_with("source,left,right,count,dmin,reference,reference_exact,ratio\n"));
    assert!(table.contains("report_line,"), "rows keyed by trace file stem");
    assert!(table.contains("report_gs,"));

    let svg = run_ok(&[
        "report", "--trace", t1.to_str().unwrap(), "--builtin", "segment", "--svg-at", "5",
    ]);
    let body = stdout_str(&svg);
    assert!(body.starts_with("<svg"));
    assert_eq!(body.matches("<circle").count(), 5, "five points are present at t = 5");

    let svg_multi = bin()
        .args([
            "report", "--trace", t1.to_str().unwrap(), "--trace", t2.to_str().unwrap(),
            "--builtin", "segment", "--svg-at", "5",
        ])
        .output()
        .unwrap();
    assert_eq!(exit_code(&svg_multi), 1, "the snapshot renders a single trace");

    let malformed = tmp("report_bad.jsonl");
    std::fs::write(&malformed, "not json\n").unwrap();
    let bad = bin()
        .args(["report", "--trace", malformed.to_str().unwrap(), "--builtin", "segment"])
        .output()
        .unwrap();
    assert_eq!(exit_code(&bad), 1);
}
