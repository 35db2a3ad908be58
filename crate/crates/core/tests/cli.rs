use std::process::{Command, Output};

use serde_json::Value;

fn levylab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levylab")).args(args).env("LEVYLAB_THREADS", "2").output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let out = levylab(&full);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

#[test]
fn term_is_exact_for_c9() {
    let v = json(&["term", "--series", "C9", "--n", "3"]);
    assert_eq!(v["term"]["x"], "1/8");
    assert_eq!(v["term"]["y"], "-1/3");
    assert_eq!(v["term"]["exact"], true);
}

#[test]
fn stdout_is_empty_without_json() {
    let out = levylab(&["term", "--series", "C1", "--n", "2"]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn catalog_lists_every_series() {
    let v = json(&["catalog"]);
    let ids: Vec<&str> = v.as_array().unwrap().iter().map(|s| s["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8", "C9", "C10", "C11"]);
}

#[test]
fn bad_input_exits_nonzero() {
    for args in [
        &["term", "--series", "C99", "--n", "1"][..],
        &["raster", "--series", "C3", "--region", "1,0,0,1"],
        &["oracle", "--series", "C8", "--terms", "30", "--target", "0,0"],
        &["verify-all", "--only", "nothing"],
    ] {
        let out = levylab(args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"), "{args:?}");
    }
}

#[test]
fn oracle_finds_exact_examples() {
    let v = json(&["oracle", "--series", "C9", "--terms", "3", "--target", "7/8,-5/6"]);
    let hits = v.as_array().unwrap();
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0]["pattern"], "111");
    assert_eq!(hits[0]["exact_sum"]["y"], "-5/6");

    let v = json(&["oracle", "--series", "C1", "--terms", "2", "--target", "-1/2,0"]);
    assert_eq!(v.as_array().unwrap()[0]["pattern"], "11");
}

#[test]
fn raster_golden_counts() {
    let dir = tempfile::tempdir().unwrap();
    let pgm = dir.path().join("c3.pgm");
    let out = levylab(&["raster", "--series", "C3", "--out", pgm.to_str().unwrap()]);
    assert!(out.status.success());
    let bytes = std::fs::read(&pgm).unwrap();
    assert!(bytes.starts_with(b"P5\n100 100\n255\n"));
    assert_eq!(bytes.len(), 15 + 10_000);

    let csv = std::fs::read_to_string(pgm.with_extension("csv")).unwrap();
    let counts: Vec<u64> = csv.lines().flat_map(|l| l.split(',').map(|c| c.parse::<u64>().unwrap())).collect();
    assert_eq!(csv.lines().count(), 100);
    assert_eq!(counts.iter().filter(|&&c| c > 0).count(), 6854);
    assert_eq!(counts.iter().sum::<u64>(), 1_000_000 - 362_991);
    assert_eq!(counts.iter().max(), Some(&315));
}

#[test]
fn raster_ignores_thread_count() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_levylab"))
            .args(["--json", "raster", "--series", "C5", "--samples", "300000", "--seed", "11"])
            .env("LEVYLAB_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn achieve_reports_certificate() {
    let v = json(&["achieve", "--series", "C8", "--target", "0.3,-0.7", "--depth", "6"]);
    assert_eq!(v["holds"], true);
    assert_eq!(v["stages"].as_array().unwrap().len(), 13);
    assert!(v["final_error_inf"].as_f64().unwrap() < 1.0 / 64.0);
}

#[test]
fn extreme_toy_verifies() {
    let out = levylab(&["extreme", "verify", "--kind", "toy", "--delta", "1/4", "--blocks", "4:9"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn verify_only_selects_criteria() {
    let v = json(&["verify-all", "--only", "7"]);
    let crit = v["criteria"].as_array().unwrap();
    assert_eq!(crit.len(), 1);
    assert_eq!(crit[0]["id"], 7);
    assert_eq!(v["pass"], true);

    let v = json(&["verify-all", "--only", "achieve"]);
    let ids: Vec<u64> = v["criteria"].as_array().unwrap().iter().map(|c| c["id"].as_u64().unwrap()).collect();
    assert_eq!(ids, [3, 4, 5, 7, 8]);
}

#[test]
fn injected_fault_is_caught() {
    assert!(levylab(&["verify-all", "--only", "extreme"]).status.success());
    let out = levylab(&["--json", "verify-all", "--only", "extreme", "--inject-delta-fault"]);
    assert!(!out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["pass"], false);
}

#[test]
fn levy_criterion_fails_at_default_threshold() {
    // the 3n-1 family does not reach τ = 2; see the README
    let out = levylab(&["verify-all", "--only", "levy"]);
    assert!(!out.status.success());
}
