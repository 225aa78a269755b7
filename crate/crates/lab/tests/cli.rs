use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_w2s-lab")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn body(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

fn column<'a>(csv: &'a str, name: &str) -> Vec<&'a str> {
    let lines = body(csv);
    let idx = lines[0].split(',').position(|c| c == name).expect("column present");
    lines[1..].iter().map(|l| l.split(',').nth(idx).unwrap()).collect()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn config_errors_exit_one() {
    assert_eq!(code(&lab(&["no-such-experiment"])), 1);
    assert_eq!(code(&lab(&["mask-count", "--p", "ten"])), 1);
    assert_eq!(code(&lab(&["mask-count", "--trials", "0"])), 1);
    assert_eq!(code(&lab(&["mask-count", "--bogus"])), 1);
    assert_eq!(code(&lab(&["mask-count", "--config", "/nonexistent/w2s.conf"])), 1);
    assert_eq!(code(&lab(&["--help"])), 0);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "# mask sweep\np = 300\nn = 10,20\nalpha = 3\n").unwrap();
    let out = dir.path().join("deep/nested/mask.csv");
    let o = lab(&["mask-count", "--config", path_str(&conf), "--n", "30", "--out", path_str(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.contains("# config.p: 300\n"));
    assert!(csv.contains("# config.n: 30\n"));
    assert!(csv.contains("# config.seed: 20240601 (default)\n"));
    assert_eq!(column(&csv, "n"), ["30"]);
    assert_eq!(column(&csv, "p"), ["300"]);
}

#[test]
fn unknown_key_in_config_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "p = 100\nlearning_rate = 0.1\n").unwrap();
    assert_eq!(code(&lab(&["mask-count", "--config", path_str(&conf)])), 1);
}

#[test]
fn existing_output_needs_force() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    let args = ["gain-profile", "--p", "100", "--n", "40", "--json", "--out", path_str(&out)];
    assert_eq!(code(&lab(&args)), 0);
    let first = fs::read_to_string(&out).unwrap();
    assert_eq!(code(&lab(&args)), 1);
    assert_eq!(fs::read_to_string(&out).unwrap(), first);
    let mut forced = args.to_vec();
    forced.push("--force");
    assert_eq!(code(&lab(&forced)), 0);

    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("g.json")).unwrap()).unwrap();
    assert_eq!(json["metadata"]["schema_version"], "1");
    assert_eq!(json["rows"].as_array().unwrap().len(), body(&first).len() - 1);
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let base = ["risk-vs-n", "--p", "60", "--n", "20,30", "--trials", "12", "--seed", "7"];
    for (path, threads) in [(&a, "1"), (&b, "3")] {
        let mut args = base.to_vec();
        args.extend(["--threads", threads, "--out", path_str(path)]);
        assert_eq!(code(&lab(&args)), 0);
    }
    let strip = |p: &Path| {
        fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("# config.out") && !l.starts_with("# config.threads"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn single_trial_has_no_standard_error() {
    let o = lab(&["risk-vs-n", "--p", "40", "--n", "10", "--trials", "1", "--kinds", "optimal"]);
    assert_eq!(code(&o), 0);
    let csv = String::from_utf8(o.stdout).unwrap();
    let sources = column(&csv, "source");
    let se = column(&csv, "mc_se");
    let mean = column(&csv, "mc_mean");
    assert_eq!(sources, ["theory", "monte-carlo"]);
    assert_eq!(se[1], "");
    assert!(mean[1].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn two_stage_grid_skips_infeasible_pairs_with_a_warning() {
    let o = lab(&["two-stage-grid", "--p", "30", "--alpha", "2", "--n", "10,30", "--trials", "4"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("skipping"));
    let csv = String::from_utf8(o.stdout).unwrap();
    assert_eq!(column(&csv, "n"), ["10"]);
}

#[test]
fn gain_profile_counts_are_echoed() {
    let o = lab(&["gain-profile", "--p", "400", "--n", "100", "--alpha", "2"]);
    assert_eq!(code(&o), 0);
    let csv = String::from_utf8(o.stdout).unwrap();
    let get = |k: &str| -> f64 {
        let prefix = format!("# n100.{k}: ");
        let line = csv.lines().find(|l| l.starts_with(&prefix)).expect("metadata line");
        line[prefix.len()..].parse().unwrap()
    };
    assert!((get("mask_count") - get("predicted_mask")).abs() <= 0.05 * 100.0 + 5.0);
    assert!(get("amplified_count") <= get("mask_count"));
    assert_eq!(get("sign_changes"), 1.0);
}

#[test]
fn verify_passes_and_fault_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("verify.json");
    let o = lab(&["verify", "--out", path_str(&report)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["report"]["passed"], true);

    let o = lab(&["verify", "--inject-fault"]);
    assert_eq!(code(&o), 2);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("FAIL fixed-point-residual")));
}
