//! End-to-end tests of the command-line front end: workflows, exit codes,
//! resume, and byte-level reproducibility across runs and worker counts.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pfdtd"))
}

/// A reduced scenario that keeps CLI runs quick.
const SMALL_CONFIG: &str = r#"
[grid]
n_steps = 384

[hybrid]
n_inner = 2
n_edge_schedule = [0, 2]
p_tf = 1
threshold = 0.05
sf_buffer_cells = 3
"#;

fn write_config(dir: &Path) -> PathBuf {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, SMALL_CONFIG).unwrap();
    path
}

fn run_ok(args: &[&str]) -> String {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "pfdtd {args:?} failed: {}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn exit_code(args: &[&str]) -> i32 {
    bin().args(args).output().unwrap().status.code().unwrap()
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                files.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn workflow_sweep_edge_merge_converge_full() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let cfg = cfg.to_str().unwrap();
    let out = tmp.path().join("out");
    let out_s = out.to_str().unwrap();

    // prerequisite missing: edge before sweep exits 4
    assert_eq!(exit_code(&["edge", "--side", "high", "--config", cfg, "--out", out_s]), 4);

    let stdout = run_ok(&["sweep", "--config", cfg, "--out", out_s]);
    assert!(stdout.contains("sweep: ran"));
    assert!(out.join("sweep/manifest.csv").exists());

    // resume: delete one member record, only that member is re-run and the
    // other artifacts stay byte-identical
    let before = dir_bytes(&out.join("sweep"));
    let victim = out.join("sweep/member_0003_hi.prec");
    std::fs::remove_file(&victim).unwrap();
    let stdout = run_ok(&["sweep", "--config", cfg, "--out", out_s]);
    assert!(stdout.contains("ran 1 of"), "resume output: {stdout}");
    let after = dir_bytes(&out.join("sweep"));
    assert_eq!(before, after, "resume changed artifacts");

    // merge needs both edge runs present
    assert_eq!(exit_code(&["merge", "--config", cfg, "--out", out_s]), 4);

    run_ok(&["edge", "--side", "high", "--n-edge", "2", "--config", cfg, "--out", out_s]);
    run_ok(&["edge", "--side", "low", "--n-edge", "2", "--config", cfg, "--out", out_s]);
    assert!(out.join("edge/high_ne0002/probe_lambda_1.000.csv").exists());
    assert!(out.join("edge/high_ne0002/sf_diag.csv").exists());

    run_ok(&["merge", "--config", cfg, "--out", out_s]);
    assert!(out.join("merge/merged_lambda_1.000.csv").exists());
    assert!(out.join("merge/asm_lambda_0.050.csv").exists());
    let seam = std::fs::read_to_string(out.join("merge/seam.csv")).unwrap();
    assert!(seam.lines().count() >= 3);

    let stdout = run_ok(&["converge", "--config", cfg, "--out", out_s]);
    assert!(stdout.contains("converge:"));
    let report = std::fs::read_to_string(out.join("converge/report.csv")).unwrap();
    assert!(report.starts_with("n_edge,raw_metric,normalized_metric,converged"));
    assert!(report.contains("# threshold="));
    assert!(out.join("converge/report_ptf1.csv").exists());

    run_ok(&["full", "--config", cfg, "--out", out_s]);
    assert!(out.join("full/probe_lambda_1.000.csv").exists());
    let snap = pfdtd::io::read_snapshot(&out.join("full/ez_final.pfdt")).unwrap();
    assert!(snap.nx > 0 && snap.ny > 0);

    // standalone record analysis
    run_ok(&[
        "dft",
        "--input",
        out.join("sweep/member_0000_hi.prec").to_str().unwrap(),
        "--config",
        cfg,
    ]);
    assert!(out.join("sweep/member_0000_hi.csv").exists());
}

#[test]
fn exit_codes_for_bad_configs() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "[grid]\ncourant = 2.0\n").unwrap();
    assert_eq!(exit_code(&["sweep", "--config", bad.to_str().unwrap()]), 2);

    let periodic_full = tmp.path().join("pf.toml");
    std::fs::write(&periodic_full, "[full]\ny_boundary = \"periodic\"\n").unwrap();
    assert_eq!(exit_code(&["full", "--config", periodic_full.to_str().unwrap()]), 2);

    let unknown_key = tmp.path().join("uk.toml");
    std::fs::write(&unknown_key, "[grid]\nbogus = 1\n").unwrap();
    assert_eq!(exit_code(&["sweep", "--config", unknown_key.to_str().unwrap()]), 2);

    assert_eq!(exit_code(&["sweep", "--profile", "galaxy"]), 2);

    // missing record for dft analysis
    assert_eq!(exit_code(&["dft", "--input", "/nonexistent.prec"]), 4);
}

#[test]
fn outputs_reproducible_across_runs_and_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let cfg = cfg.to_str().unwrap();
    let out1 = tmp.path().join("a");
    let out2 = tmp.path().join("b");

    for (out, workers) in [(&out1, "1"), (&out2, "4")] {
        let out_s = out.to_str().unwrap();
        run_ok(&["sweep", "--config", cfg, "--out", out_s, "--workers", workers]);
        run_ok(&["converge", "--config", cfg, "--out", out_s, "--workers", workers]);
        run_ok(&["edge", "--side", "low", "--config", cfg, "--out", out_s, "--workers", workers]);
        run_ok(&["edge", "--side", "high", "--config", cfg, "--out", out_s, "--workers", workers]);
        run_ok(&["merge", "--config", cfg, "--out", out_s, "--workers", workers]);
        run_ok(&["full", "--config", cfg, "--out", out_s, "--workers", workers]);
    }
    let a = dir_bytes(&out1);
    let b = dir_bytes(&out2);
    assert_eq!(a.len(), b.len());
    for ((name_a, bytes_a), (name_b, bytes_b)) in a.iter().zip(&b) {
        assert_eq!(name_a, name_b);
        assert_eq!(bytes_a, bytes_b, "artifact {name_a} differs across runs/workers");
    }
}
