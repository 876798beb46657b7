use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fountain_swarm::experiment::{read_csv, summarize};
use fountain_swarm::{RunSummary, SimConfig};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fountain-swarm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn summaries(dir: &Path) -> Vec<RunSummary> {
    fs::read_to_string(dir.join("summary.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.conf");
    let out = tmp.path().join("out");
    fs::write(
        &cfg,
        format!(
            "# small run\npolicy = proposed\nlambda = 1.5\nk = 4\nslots = 300\nseed = 9\nreplicates = 2\nout = {}\n",
            out.display()
        ),
    )
    .unwrap();
    let o = bin(&["--config", cfg.to_str().unwrap(), "--k", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let s = summaries(&out);
    assert_eq!(s.len(), 2);
    for (r, summary) in s.iter().enumerate() {
        assert_eq!(summary.k, 3);
        assert_eq!(summary.lambda, 1.5);
        assert_eq!(summary.seed, 9);
        assert_eq!(summary.replicate, r as u64);
        assert_eq!(summary.scenario, "custom");
    }
    let csv = fs::read_to_string(out.join("custom_proposed_l1.5_k3_s9_r0.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "slot,population,arrivals_cum,departures_cum,M,one_club,server_served_new,alpha_0,alpha_1,alpha_2"
    );
    assert_eq!(lines.count(), 300);
}

#[test]
fn summary_is_recomputable_from_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fig3");
    let o = bin(&[
        "--scenario",
        "fig3",
        "--replicates",
        "3",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let base = SimConfig {
        policy: fountain_swarm::PolicyConfig::BASELINE,
        seed: 5,
        ..SimConfig::default()
    };
    for s in summaries(&out) {
        let cfg = SimConfig {
            replicate: s.replicate,
            ..base.clone()
        };
        let path = out.join(format!("fig3_baseline_l2_k5_s5_r{}.csv", s.replicate));
        let records = read_csv(&fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(summarize("fig3", &cfg, &records), s);
    }
}

#[test]
fn same_seed_gives_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let o = bin(&[
            "--scenario",
            "adaptive-ramp",
            "--slots",
            "6000",
            "--replicates",
            "2",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    let mut names: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names
        .iter()
        .any(|n| n.to_string_lossy().ends_with(".events.csv")));
    for n in names {
        assert_eq!(
            fs::read(a.join(&n)).unwrap(),
            fs::read(b.join(&n)).unwrap(),
            "{n:?}"
        );
    }
}

#[test]
fn errors_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let bad_cfg = tmp.path().join("bad.conf");
    fs::write(&bad_cfg, "lambda 2\n").unwrap();
    assert!(!bin(&["--config", bad_cfg.to_str().unwrap()])
        .status
        .success());
    assert!(!bin(&["--config", "/nonexistent/file.conf"])
        .status
        .success());
    assert!(!bin(&["--scenario", "fig99"]).status.success());
    assert!(
        !bin(&["--lambda", "0.5", "--out", tmp.path().to_str().unwrap()])
            .status
            .success()
    );
    assert!(!bin(&["--policy", "rarest-first"]).status.success());

    // output directory under a regular file cannot be created
    let file = tmp.path().join("plain");
    fs::write(&file, "x").unwrap();
    let o = bin(&["--slots", "10", "--out", file.join("sub").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("io error"));
}

#[test]
fn sweep_prints_table() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin(&[
        "sweep",
        "--k-values",
        "3",
        "--lambdas",
        "1.5,4",
        "--replicates",
        "2",
        "--slots",
        "3000",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "k,lambda,runs,stable_runs,stable_fraction");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("3,1.5,2,"));
    assert_eq!(
        fs::read_to_string(tmp.path().join("boundary.csv")).unwrap(),
        table
    );
}
