//! The five workflows behind the CLI subcommands, reusable from other front
//! ends. Each command validates its scenario, runs the simulations it needs,
//! and writes a deterministic artifact tree under the output directory.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::analysis::{dft_at, ProbeSeries};
use crate::error::{Error, Result};
use crate::hybrid::{
    self, converge_loop, convergence_metric, load_sweep, merge_fields, run_edge, run_full,
    run_inner, ConvergenceReport,
};
use crate::io;
use crate::scenario::{EdgeSide, ScenarioConfig};

/// Base profile with config-file keys merged over it, validated.
pub fn load_scenario(profile: &str, config: Option<&Path>) -> Result<ScenarioConfig> {
    let base = ScenarioConfig::from_profile(profile)?;
    let Some(path) = config else {
        base.validate()?;
        return Ok(base);
    };
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    let overlay: toml::Value =
        toml::from_str(&text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
    let mut merged: toml::Value = toml::Value::try_from(&base)
        .map_err(|e| Error::Config(format!("profile serialize: {e}")))?;
    merge_toml(&mut merged, overlay);
    let cfg: ScenarioConfig =
        merged.try_into().map_err(|e| Error::Config(format!("config parse: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

fn merge_toml(base: &mut toml::Value, overlay: toml::Value) {
    match (base, overlay) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge_toml(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn write_cost(path: &Path, rows: &[(String, u64)]) -> Result<()> {
    let mut w = fs::File::create(path)?;
    writeln!(w, "sim,updates")?;
    for (name, updates) in rows {
        writeln!(w, "{name},{updates}")?;
    }
    Ok(())
}

fn largest_scheduled(scn: &ScenarioConfig) -> usize {
    *scn.hybrid.n_edge_schedule.last().expect("validated nonempty schedule")
}

/// Full finite-structure run: probe phasor CSVs, a final Ez snapshot and the
/// update count.
pub fn full(scn: &ScenarioConfig, out_root: &Path) -> Result<String> {
    let dir = out_root.join("full");
    fs::create_dir_all(&dir)?;
    let n_edge = largest_scheduled(scn);
    let run = run_full(scn, n_edge)?;
    for (tag, line) in &run.lines {
        io::write_phasor_csv(&dir.join(format!("probe_{tag}.csv")), line)?;
    }
    io::write_snapshot(&dir.join("ez_final.pfdt"), &run.final_ez)?;
    write_cost(&dir.join("cost.csv"), &[("full".into(), run.updates)])?;
    Ok(format!(
        "full: {} unit cells, {} probe lines, {} Yee updates -> {}",
        2 * (scn.hybrid.n_inner + n_edge) + 1,
        run.lines.len(),
        run.updates,
        dir.display()
    ))
}

/// Phased unit-cell sweep with resume: per-member records, probe phasor
/// CSVs, and the manifest.
pub fn sweep(scn: &ScenarioConfig, out_root: &Path, workers: usize) -> Result<String> {
    let dir = out_root.join("sweep");
    let summary = hybrid::run_sweep_command(scn, &dir, workers)?;
    write_cost(
        &dir.join("cost.csv"),
        &[
            ("member_each".into(), summary.member_updates),
            ("members_total".into(), summary.member_updates * summary.members_total as u64),
        ],
    )?;
    Ok(format!(
        "sweep: ran {} of {} members -> {}",
        summary.members_run,
        summary.members_total,
        dir.display()
    ))
}

/// One TF/SF-driven edge simulation; emits probe CSVs and SF diagnostics.
pub fn edge(
    scn: &ScenarioConfig,
    out_root: &Path,
    side: EdgeSide,
    n_edge: Option<usize>,
) -> Result<String> {
    let n_edge = n_edge.unwrap_or_else(|| largest_scheduled(scn));
    let sweep = load_sweep(scn, &out_root.join("sweep"))?;
    let inner = run_inner(&sweep, scn)?;
    let record = match side {
        EdgeSide::High => &inner.record_high,
        EdgeSide::Low => &inner.record_low,
    };
    let run = run_edge(scn, record, side, n_edge)?;
    let dir = out_root.join("edge").join(format!("{side}_ne{n_edge:04}"));
    fs::create_dir_all(&dir)?;
    for (tag, line) in &run.lines {
        io::write_phasor_csv(&dir.join(format!("probe_{tag}.csv")), line)?;
    }
    let ratio = run.sf_peak / run.tf_peak.max(1e-300);
    let mut w = fs::File::create(dir.join("sf_diag.csv"))?;
    writeln!(w, "sf_peak,tf_peak,ratio")?;
    writeln!(w, "{:e},{:e},{:e}", run.sf_peak, run.tf_peak, ratio)?;
    write_cost(&dir.join("cost.csv"), &[(format!("edge_{side}"), run.updates)])?;
    Ok(format!("edge {side} N^E={n_edge}: sf/tf peak ratio {ratio:.3e} -> {}", dir.display()))
}

/// Merge the inner estimate with previously produced edge artifacts into
/// continuous lines with seam diagnostics. Requires the sweep and both edge
/// runs' probe CSVs to exist.
pub fn merge(scn: &ScenarioConfig, out_root: &Path, n_edge: Option<usize>) -> Result<String> {
    let n_edge = n_edge.unwrap_or_else(|| largest_scheduled(scn));
    let sweep = load_sweep(scn, &out_root.join("sweep"))?;
    let inner = run_inner(&sweep, scn)?;

    let read_edge_lines = |side: EdgeSide| -> Result<Vec<(String, crate::analysis::PhasorLine)>> {
        let dir = out_root.join("edge").join(format!("{side}_ne{n_edge:04}"));
        scn.probe_columns()
            .into_iter()
            .map(|(tag, _)| {
                let path = dir.join(format!("probe_{tag}.csv"));
                if !path.exists() {
                    return Err(Error::MissingArtifact(format!(
                        "edge probe line {} (run `pfdtd edge --side {side} --n-edge {n_edge}` first)",
                        path.display()
                    )));
                }
                Ok((tag, io::read_phasor_csv(&path, scn.source.f_op_hz)?))
            })
            .collect()
    };
    let low_lines = read_edge_lines(EdgeSide::Low)?;
    let high_lines = read_edge_lines(EdgeSide::High)?;
    let merged = merge_fields(&inner, &low_lines, &high_lines, scn)?;

    let dir = out_root.join("merge");
    fs::create_dir_all(&dir)?;
    for m in &merged {
        io::write_phasor_csv(&dir.join(format!("merged_{}.csv", m.tag)), &m.line)?;
    }
    for (tag, line) in &inner.asm_lines {
        io::write_phasor_csv(&dir.join(format!("asm_{tag}.csv")), line)?;
    }
    let mut w = fs::File::create(dir.join("seam.csv"))?;
    writeln!(w, "tag,seam_low,seam_high")?;
    for m in &merged {
        writeln!(w, "{},{:e},{:e}", m.tag, m.seam_low, m.seam_high)?;
    }
    write_cost(
        &dir.join("cost.csv"),
        &[("sweep_member_each".into(), sweep.member_updates)],
    )?;
    Ok(format!(
        "merge N^E={n_edge}: seam |Δ| low={:.3e} high={:.3e} -> {}",
        merged[0].seam_low,
        merged[0].seam_high,
        dir.display()
    ))
}

/// Edge-growth convergence search; emits the report, its P_TF=1 companion
/// view over the same edge runs, and per-step probe CSVs.
pub fn converge(scn: &ScenarioConfig, out_root: &Path) -> Result<(ConvergenceReport, String)> {
    let sweep = load_sweep(scn, &out_root.join("sweep"))?;
    let inner = run_inner(&sweep, scn)?;
    let (report, edge_runs) =
        converge_loop(scn, &inner, &scn.hybrid.n_edge_schedule, scn.hybrid.threshold)?;
    let dir = out_root.join("converge");
    fs::create_dir_all(&dir)?;
    io::write_report_csv(&dir.join("report.csv"), &report)?;

    let d = scn.period();
    let dy = scn.delta();
    let raws_p1: Vec<(usize, f64)> = edge_runs
        .iter()
        .map(|run| {
            let raw = convergence_metric(
                &inner.asm_lines[0].1,
                &run.lines[0].1,
                scn.hybrid.n_inner,
                1,
                d,
                dy,
            )?;
            Ok((run.n_edge, raw))
        })
        .collect::<Result<_>>()?;
    let report_p1 =
        ConvergenceReport::from_raw(&raws_p1, 1, scn.hybrid.threshold, "companion view");
    io::write_report_csv(&dir.join("report_ptf1.csv"), &report_p1)?;

    let mut cost_rows: Vec<(String, u64)> =
        vec![("sweep_member_each".into(), sweep.member_updates)];
    for run in &edge_runs {
        io::write_phasor_csv(
            &dir.join(format!("ne{:04}_probe_{}.csv", run.n_edge, run.lines[0].0)),
            &run.lines[0].1,
        )?;
        cost_rows.push((format!("edge_ne{:04}", run.n_edge), run.updates));
    }
    write_cost(&dir.join("cost.csv"), &cost_rows)?;

    let msg = format!("converge: {} -> {}", report.stop_reason, dir.display());
    Ok((report, msg))
}

/// Single-frequency DFT of a stored record's Ez samples.
pub fn dft(
    scn: &ScenarioConfig,
    input: &Path,
    f_hz: Option<f64>,
    output: Option<PathBuf>,
) -> Result<String> {
    let record = io::read_record(input).map_err(|e| match e {
        Error::Io(ref io_err) if io_err.kind() == std::io::ErrorKind::NotFound => {
            Error::MissingArtifact(format!("record {}", input.display()))
        }
        other => other,
    })?;
    let f = f_hz.unwrap_or(scn.source.f_op_hz);
    let mut series = ProbeSeries::new(record.x_positions.clone(), record.dt)?;
    for row in &record.e_samples {
        series.push(row.clone())?;
    }
    let line = dft_at(&series, f)?;
    let out = output.unwrap_or_else(|| input.with_extension("csv"));
    io::write_phasor_csv(&out, &line)?;
    Ok(format!("dft: {} samples at {:.4e} Hz -> {}", record.e_samples.len(), f, out.display()))
}
