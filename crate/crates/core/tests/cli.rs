//! End-to-end runs of the installed binary: exit codes, artifact shapes,
//! and the determinism guarantees (resume, worker count) that the file
//! formats promise.

use ionrate::config::RunConfig;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = "\
pulse.omega = 0.08
pulse.peak_field = 0.05
grid.r_max = 60
propagation.l_max = 8
projector.l_b = 4
kick.alpha = -0.002
scan.e0 = 0.03,0.05
scan.tau_count = 3
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ionrate"))
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ionrate-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn small_cfg(dir: &Path) -> PathBuf {
    let path = dir.join("small.cfg");
    fs::write(&path, SMALL).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should launch")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn config_problems_exit_2_with_diagnostics() {
    let dir = workdir("badcfg");
    let cfg = dir.join("bad.cfg");
    fs::write(&cfg, "pulse.omega = fast\n").unwrap();
    let out = run(&["propagate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 1") && err.contains("pulse.omega"), "{err}");

    let out = run(&["propagate", "--config", dir.join("missing.cfg").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eigen_writes_the_bound_spectrum_and_metadata() {
    let dir = workdir("eigen");
    let cfg = small_cfg(&dir);
    let out_dir = dir.join("out");
    assert_ok(&run(&[
        "eigen",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]));

    let csv = fs::read_to_string(out_dir.join("eigen.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("l,n,energy_au"));
    let ground: f64 = lines
        .clone()
        .filter(|l| l.starts_with("0,"))
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!((ground + 0.5).abs() < 1e-3, "ground state at {ground}");
    let channels: std::collections::BTreeSet<&str> =
        lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(channels.len(), 5, "one block per channel up to the cutoff");

    let meta = fs::read_to_string(out_dir.join("eigen.meta")).unwrap();
    let cfg_fp = RunConfig::parse(SMALL).unwrap();
    assert!(meta.contains(cfg_fp.fingerprint()), "metadata must carry the fingerprint");
}

#[test]
fn propagate_records_probability_and_health_numbers() {
    let dir = workdir("prop");
    let cfg = small_cfg(&dir);
    let out_dir = dir.join("out");
    assert_ok(&run(&[
        "propagate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]));

    let record: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("propagate.json")).unwrap()).unwrap();
    let p = record["probability"].as_f64().unwrap();
    assert!(p > 0.0 && p < 1.0, "P = {p}");
    assert!((record["final_norm"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert!(record["run_drift"].as_f64().unwrap().abs() < 1e-8);
    let expected = RunConfig::parse(SMALL).unwrap();
    assert_eq!(record["fingerprint"].as_str().unwrap(), expected.fingerprint());
}

fn cell_lines(journal: &str) -> Vec<String> {
    journal.lines().skip(1).filter(|l| l.starts_with("cell ")).map(String::from).collect()
}

#[test]
fn interrupted_scans_resume_to_the_identical_table() {
    let dir = workdir("resume");
    let cfg = small_cfg(&dir);
    let full = dir.join("full");
    assert_ok(&run(&[
        "scan",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        full.to_str().unwrap(),
    ]));
    let full_csv = fs::read(full.join("scan.csv")).unwrap();
    let journal = fs::read_to_string(full.join("scan.journal")).unwrap();
    let cells = cell_lines(&journal);
    assert_eq!(cells.len(), 8, "2 baselines + 6 kicked cells");

    // keep the header and the first three finished cells, as if the
    // process had been killed there
    let partial = dir.join("partial");
    fs::create_dir_all(&partial).unwrap();
    let header = journal.lines().next().unwrap();
    let seed: Vec<&str> = cells.iter().take(3).map(String::as_str).collect();
    fs::write(
        partial.join("scan.journal"),
        format!("{header}\n{}\n", seed.join("\n")),
    )
    .unwrap();

    assert_ok(&run(&[
        "scan",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        partial.to_str().unwrap(),
        "--resume",
    ]));
    assert_eq!(
        fs::read(partial.join("scan.csv")).unwrap(),
        full_csv,
        "resumed table must match the uninterrupted one byte for byte"
    );
    let resumed = fs::read_to_string(partial.join("scan.journal")).unwrap();
    assert_eq!(cell_lines(&resumed).len(), 8, "resume only appends the missing cells");
}

#[test]
fn worker_count_does_not_move_a_single_bit() {
    let dir = workdir("workers");
    let cfg = small_cfg(&dir);
    let one = dir.join("w1");
    let two = dir.join("w2");
    for (out, workers) in [(&one, "1"), (&two, "2")] {
        assert_ok(&run(&[
            "scan",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--workers",
            workers,
        ]));
    }
    assert_eq!(
        fs::read(one.join("scan.csv")).unwrap(),
        fs::read(two.join("scan.csv")).unwrap()
    );
    assert_eq!(
        fs::read(one.join("scan.meta")).unwrap(),
        fs::read(two.join("scan.meta")).unwrap()
    );
}

#[test]
fn adk_surface_feeds_the_delay_analysis_with_zero_delay() {
    let dir = workdir("adkdelay");
    let cfg = small_cfg(&dir);
    let a = dir.join("adk");
    assert_ok(&run(&[
        "adk",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        a.to_str().unwrap(),
    ]));
    let surface = fs::read_to_string(a.join("adk.csv")).unwrap();
    assert!(surface.starts_with("E0_au,tau_au,deltaP,baselineP\n"), "shared scan schema");

    let d = dir.join("delay");
    assert_ok(&run(&[
        "delay",
        a.join("adk.csv").to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        d.to_str().unwrap(),
    ]));
    let report = fs::read_to_string(d.join("delay.csv")).unwrap();
    let mut lines = report.lines();
    assert_eq!(lines.next(), Some("E0_au,level,tau_mid_au,delay_au,delay_as,tau_step_au"));
    let mut rows = 0;
    for line in lines {
        let delay: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(delay.abs() < 1e-9, "quasistatic delay must vanish, got {delay}");
        rows += 1;
    }
    assert_eq!(rows, 6, "two field strengths, peak plus two levels each");
}

#[test]
fn delay_rejects_malformed_surfaces() {
    let dir = workdir("baddelay");
    let cfg = small_cfg(&dir);
    let surface = dir.join("broken.csv");
    fs::write(&surface, "E0_au,tau_au,deltaP\n1,2,3\n").unwrap();
    let out = run(&[
        "delay",
        surface.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("header"));
}

#[test]
fn converge_tabulates_the_kick_linearity() {
    let dir = workdir("converge");
    let cfg = small_cfg(&dir);
    let out_dir = dir.join("out");
    assert_ok(&run(&[
        "converge",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "alpha",
        "-0.002,-0.001",
    ]));
    let csv = fs::read_to_string(out_dir.join("converge.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("value,observable,rel_change"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    let second: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(first[2].is_empty(), "no reference for the first row");
    let (a, b): (f64, f64) = (first[1].parse().unwrap(), second[1].parse().unwrap());
    let ratio = a / b;
    assert!((ratio - 2.0).abs() < 0.15, "halving alpha should halve the response, ratio {ratio}");
    let rel: f64 = second[2].parse().unwrap();
    assert!((rel - 0.5).abs() < 0.1, "rel change {rel}");

    let out = run(&[
        "converge",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "dt",
        "0.02,0.02",
    ]);
    assert_eq!(out.status.code(), Some(2), "non-monotone values must be refused");
}
