//! The two-step hybrid pipeline: a phased unit-cell sweep de-imaged into
//! inner-region fields and TF/SF boundary records, independent edge
//! simulations replaying those records, field merging across the region
//! seams, the windowed L2 convergence metric, and the iterative edge-growth
//! convergence search.

use num_complex::Complex64;

use crate::analysis::PhasorLine;
use crate::asm::{
    reconstruct, reconstruct_phasors, reconstruct_symmetric, reconstruct_symmetric_phasors,
    run_sweep, Parity, SweepPlan, SweepResult,
};
use crate::boundary::{BlochPhase, PmlSpec};
use crate::error::{Error, Result};
use crate::grid::make_grid;
use crate::scenario::{EdgeSide, ScenarioConfig};
use crate::sim::{BoundaryConfig, BoundaryKind, SimOutputs, Simulation};
use crate::source::{BoundaryRecord, SourceSpec, TfSide, TfsfSpec};

/// Hybrid-run parameters in one place (mirrors the scenario's hybrid keys).
#[derive(Debug, Clone, PartialEq)]
pub struct HybridConfig {
    /// N^I: inner half-width in unit cells.
    pub n_inner: usize,
    /// N^E: edge cells per side for the run at hand.
    pub n_edge: usize,
    /// Structure periods in the scattered-field region.
    pub sf_buffer_cells: usize,
    /// P_TF: metric window span in unit cells.
    pub p_tf: usize,
    /// Probe-line x offsets from the grating (m).
    pub sampling_offsets: Vec<f64>,
}

impl HybridConfig {
    pub fn from_scenario(scn: &ScenarioConfig, n_edge: usize) -> Self {
        Self {
            n_inner: scn.hybrid.n_inner,
            n_edge,
            sf_buffer_cells: scn.hybrid.sf_buffer_cells,
            p_tf: scn.hybrid.p_tf,
            sampling_offsets: scn
                .sampling
                .offsets_lambda
                .iter()
                .map(|off| off * scn.wavelength())
                .collect(),
        }
    }
}

fn parse_kind(name: &str) -> Result<BoundaryKind> {
    Ok(match name {
        "pml" => BoundaryKind::Pml,
        "mur" => BoundaryKind::Mur,
        "pec" => BoundaryKind::Wall,
        "periodic" => BoundaryKind::Periodic,
        "pmc" => BoundaryKind::Pmc,
        other => return Err(Error::Config(format!("unknown boundary kind {other:?}"))),
    })
}

fn pml_spec(scn: &ScenarioConfig) -> Result<PmlSpec> {
    PmlSpec::new(
        scn.layout.pml_cells,
        scn.boundaries.pml_grading_order,
        scn.boundaries.pml_target_reflection,
    )
}

fn source_spec(scn: &ScenarioConfig, j: usize) -> SourceSpec {
    SourceSpec::for_operating_frequency(
        scn.x_source(),
        j,
        Complex64::new(scn.source.amplitude_re, scn.source.amplitude_im),
        scn.source.f_op_hz,
    )
}

/// Everything one phased unit-cell run leaves behind.
#[derive(Debug, Clone)]
pub struct UnitCellRun {
    /// Ez on the high period boundary, [step][i].
    pub e_hi: Vec<Vec<Complex64>>,
    /// Hx half a cell below the high boundary, [step][i].
    pub h_hi: Vec<Vec<Complex64>>,
    /// Ez on the low period boundary, [step][i].
    pub e_lo: Vec<Vec<Complex64>>,
    /// Hx half a cell above the low boundary, [step][i].
    pub h_lo: Vec<Vec<Complex64>>,
    /// Streaming DFT at f_op of each probe column, [offset][j].
    pub probe_phasors: Vec<Vec<Complex64>>,
    /// Raw Ez probe time series, [offset][step][j]; kept only on request.
    pub probe_series: Option<Vec<Vec<Vec<Complex64>>>>,
    pub line_fingerprint: u64,
    pub updates: u64,
}

/// Run one sweep member: the unit cell with Bloch-phased y edges at the
/// given wavenumber.
pub fn run_unit_cell_member(scn: &ScenarioConfig, k: f64, keep_series: bool) -> Result<UnitCellRun> {
    let grid = scn.unit_cell_grid()?;
    let materials = scn.unit_cell_materials();
    let cpp = scn.grid.cells_per_period;
    let boundaries = BoundaryConfig {
        x_low: parse_kind(&scn.boundaries.x_low)?,
        x_high: parse_kind(&scn.boundaries.x_high)?,
        y_low: parse_kind(&scn.boundaries.y_low)?,
        y_high: parse_kind(&scn.boundaries.y_high)?,
        pml: pml_spec(scn)?,
    };
    if boundaries.y_low != BoundaryKind::Periodic {
        return Err(Error::Config("sweep mode needs periodic y edges".into()));
    }
    let bloch = BlochPhase::new(k, scn.period())?;
    let mut sim = Simulation::new(grid, materials, boundaries, Some(bloch))?;
    sim.add_source(source_spec(scn, scn.unit_cell_source_row()))?;
    sim.add_line_recorder(cpp, cpp - 1, 0.0)?;
    sim.add_line_recorder(0, 0, 0.0)?;
    for (_, col) in scn.probe_columns() {
        sim.add_column_dft(col, scn.source.f_op_hz)?;
        if keep_series {
            sim.add_column_probe(col)?;
        }
    }
    sim.run()?;
    let updates = sim.updates();
    let SimOutputs { records, probes, dft_lines, .. } = sim.into_outputs();
    let mut records = records.into_iter();
    let rec_hi = records.next().expect("high-line record");
    let rec_lo = records.next().expect("low-line record");
    let probe_series = if keep_series {
        Some(probes.into_iter().map(|p| p.values).collect())
    } else {
        None
    };
    Ok(UnitCellRun {
        line_fingerprint: rec_hi.grid_fingerprint,
        e_hi: rec_hi.e_samples,
        h_hi: rec_hi.h_samples,
        e_lo: rec_lo.e_samples,
        h_lo: rec_lo.h_samples,
        probe_phasors: dft_lines.into_iter().map(|l| l.amplitude).collect(),
        probe_series,
        updates,
    })
}

/// Build the sweep plan the scenario calls for.
pub fn scenario_sweep_plan(scn: &ScenarioConfig) -> Result<SweepPlan> {
    let d = scn.period();
    let t0 = scn.asm.t0_s.unwrap_or(scn.grid.n_steps as f64 * scn.dt());
    let a = scn
        .asm
        .region_half_width_m
        .unwrap_or((scn.hybrid.n_inner + scn.hybrid.p_tf + 2) as f64 * d);
    match (scn.asm.order, scn.asm.symmetry) {
        (Some(m), false) => SweepPlan::full_with_order(m, d),
        (Some(m), true) => SweepPlan::symmetric_with_order(m, d),
        (None, false) => SweepPlan::full(t0, a, d),
        (None, true) => SweepPlan::symmetric(t0, a, d),
    }
}

/// Sweep outputs in plan order.
#[derive(Debug, Clone)]
pub struct SweepData {
    pub plan: SweepPlan,
    pub runs: Vec<SweepResult<UnitCellRun>>,
    pub probe_tags: Vec<String>,
    /// Yee updates of one member run (all members are identical domains).
    pub member_updates: u64,
}

/// Execute the scenario's unit-cell sweep on a bounded worker pool.
pub fn run_scenario_sweep(scn: &ScenarioConfig, workers: usize, keep_series: bool) -> Result<SweepData> {
    let plan = scenario_sweep_plan(scn)?;
    let runs = run_sweep(&plan, workers, |_idx, k| run_unit_cell_member(scn, k, keep_series))?;
    let member_updates = runs.first().map(|r| r.output.updates).unwrap_or(0);
    Ok(SweepData {
        plan,
        runs,
        probe_tags: scn.probe_columns().into_iter().map(|(t, _)| t).collect(),
        member_updates,
    })
}

/// De-imaged inner-region products: the two TF/SF records at
/// ±(N^I+1/2)·d_y and the tiled probe phasor lines.
#[derive(Debug, Clone)]
pub struct InnerEstimate {
    pub record_high: BoundaryRecord,
    pub record_low: BoundaryRecord,
    /// Pairs of (probe tag, phasor line on the global y grid, source at 0).
    pub asm_lines: Vec<(String, PhasorLine)>,
    /// Tile offsets the lines span: |y| ≤ (tile_span + 1/2)·d.
    pub tile_span: usize,
}

fn require_plan_covers(plan: &SweepPlan, scn: &ScenarioConfig, span_cells: usize) -> Result<()> {
    let d = plan.period;
    let t0 = scn.asm.t0_s.unwrap_or(scn.grid.n_steps as f64 * scn.dt());
    let needed = crate::asm::plan_order(t0, (span_cells as f64 + 0.5) * d, d)?;
    if plan.order < needed {
        return Err(Error::Config(format!(
            "offset {span_cells} periods exceeds the image-free guarantee: plan order {} < required {}",
            plan.order, needed
        )));
    }
    Ok(())
}

/// Reconstruct the de-imaged TF/SF records and probe lines from a sweep.
///
/// The high record holds fields at +(N^I+1/2)·d_y (Hx half a cell below,
/// on the interior side); the low record mirrors it. Probe lines are tiled
/// over offsets |n| ≤ n_inner + p_tf + 1 so the merge region and the metric
/// window are covered.
pub fn run_inner(sweep: &SweepData, scn: &ScenarioConfig) -> Result<InnerEstimate> {
    let n_inner = scn.hybrid.n_inner as i64;
    let d = sweep.plan.period;
    let cpp = scn.grid.cells_per_period;
    let dy = scn.delta();
    let tile_span = scn.hybrid.n_inner + scn.hybrid.p_tf + 1;
    require_plan_covers(&sweep.plan, scn, tile_span)?;

    let fingerprint = sweep
        .runs
        .first()
        .ok_or_else(|| Error::Config("empty sweep".into()))?
        .output
        .line_fingerprint;
    let dt = scn.dt();

    let e_hi: Vec<(f64, &Vec<Vec<Complex64>>)> =
        sweep.runs.iter().map(|r| (r.k, &r.output.e_hi)).collect();
    let h_hi: Vec<(f64, &Vec<Vec<Complex64>>)> =
        sweep.runs.iter().map(|r| (r.k, &r.output.h_hi)).collect();
    let e_lo: Vec<(f64, &Vec<Vec<Complex64>>)> =
        sweep.runs.iter().map(|r| (r.k, &r.output.e_lo)).collect();
    let h_lo: Vec<(f64, &Vec<Vec<Complex64>>)> =
        sweep.runs.iter().map(|r| (r.k, &r.output.h_lo)).collect();

    // Field at the line shifted n periods: the de-imaged series at offset
    // n = −N^I gives +(N^I+1/2)d, n = +N^I gives −(N^I+1/2)d. Under the
    // mirror the Ez component is even but Hx flips sign, so the half-zone
    // combination uses the odd form for the H records.
    let (eh, hh, el, hl) = if sweep.plan.half_zone {
        (
            reconstruct_symmetric(&e_hi, &e_lo, -n_inner, d, Parity::Even)?,
            reconstruct_symmetric(&h_hi, &h_lo, -n_inner, d, Parity::Odd)?,
            reconstruct_symmetric(&e_lo, &e_hi, n_inner, d, Parity::Even)?,
            reconstruct_symmetric(&h_lo, &h_hi, n_inner, d, Parity::Odd)?,
        )
    } else {
        (
            reconstruct(&e_hi, -n_inner, d)?,
            reconstruct(&h_hi, -n_inner, d)?,
            reconstruct(&e_lo, n_inner, d)?,
            reconstruct(&h_lo, n_inner, d)?,
        )
    };

    let xs: Vec<f64> = (0..scn.nx()).map(|i| i as f64 * dy).collect();
    let mut record_high = BoundaryRecord::new(xs.clone(), dt, 0.0, fingerprint);
    record_high.e_samples = eh;
    record_high.h_samples = hh;
    let mut record_low = BoundaryRecord::new(xs, dt, 0.0, fingerprint);
    record_low.e_samples = el;
    record_low.h_samples = hl;

    // Tiled probe lines: tile p covers y ∈ [p·d − d/2, p·d + d/2).
    let mut asm_lines = Vec::new();
    for (oi, tag) in sweep.probe_tags.iter().enumerate() {
        let cols: Vec<(f64, &Vec<Complex64>)> =
            sweep.runs.iter().map(|r| (r.k, &r.output.probe_phasors[oi])).collect();
        // mirrored columns: node j at local y maps to node cpp−j at −y
        let mirrored: Vec<Vec<Complex64>> = sweep
            .runs
            .iter()
            .map(|r| (0..=cpp).map(|j| r.output.probe_phasors[oi][cpp - j]).collect())
            .collect();
        let cols_neg: Vec<(f64, &Vec<Complex64>)> = sweep
            .runs
            .iter()
            .zip(&mirrored)
            .map(|(r, m)| (r.k, m))
            .collect();

        let mut positions = Vec::new();
        let mut amplitude = Vec::new();
        let span = tile_span as i64;
        for p in -span..=span {
            let vals = if sweep.plan.half_zone {
                reconstruct_symmetric_phasors(&cols, &cols_neg, -p, d, Parity::Even)?
            } else {
                reconstruct_phasors(&cols, -p, d)?
            };
            let j_end = if p == span { cpp + 1 } else { cpp };
            for j in 0..j_end {
                positions.push(p as f64 * d + (j as f64 - cpp as f64 / 2.0) * dy);
                amplitude.push(vals[j]);
            }
        }
        asm_lines.push((
            tag.clone(),
            PhasorLine { positions, amplitude, frequency: scn.source.f_op_hz },
        ));
    }

    Ok(InnerEstimate { record_high, record_low, asm_lines, tile_span })
}

/// One finished edge simulation: probe phasor lines on the global y grid
/// plus SF/TF peak diagnostics.
#[derive(Debug, Clone)]
pub struct EdgeRun {
    pub side: EdgeSide,
    pub n_edge: usize,
    pub lines: Vec<(String, PhasorLine)>,
    /// Peak |Ez| observed in the scattered-field region over the run.
    pub sf_peak: f64,
    /// Peak |Ez| observed in the total-field region over the run.
    pub tf_peak: f64,
    pub updates: u64,
}

/// Simulate one structure edge driven solely by TF/SF replay of a record.
pub fn run_edge(
    scn: &ScenarioConfig,
    record: &BoundaryRecord,
    side: EdgeSide,
    n_edge: usize,
) -> Result<EdgeRun> {
    let layout = scn.edge_layout(side, n_edge);
    let grid = make_grid(
        scn.nx(),
        layout.ny,
        scn.delta(),
        scn.delta(),
        scn.grid.courant,
        scn.grid.n_steps,
    )?;
    let materials = scn.finite_materials(layout.ny, &layout.strip_centers);
    let boundaries = BoundaryConfig {
        x_low: parse_kind(&scn.boundaries.x_low)?,
        x_high: parse_kind(&scn.boundaries.x_high)?,
        y_low: BoundaryKind::Pml,
        y_high: BoundaryKind::Pml,
        pml: pml_spec(scn)?,
    };
    let mut sim = Simulation::new(grid, materials, boundaries, None)?;
    let tf_side = match side {
        EdgeSide::High => TfSide::HighY,
        EdgeSide::Low => TfSide::LowY,
    };
    sim.add_tfsf(TfsfSpec { boundary_row: layout.line_row, tf_side, record: record.clone() })?;

    let pml = scn.layout.pml_cells;
    let (sf_rows, tf_rows) = match side {
        EdgeSide::High => (
            (pml + 1, layout.line_row - 1),
            (layout.line_row, layout.ny - 2 - pml),
        ),
        EdgeSide::Low => (
            (layout.line_row + 1, layout.ny - 2 - pml),
            (pml + 1, layout.line_row),
        ),
    };
    sim.add_region_max(sf_rows.0, sf_rows.1)?;
    sim.add_region_max(tf_rows.0, tf_rows.1)?;
    for (_, col) in scn.probe_columns() {
        sim.add_column_dft(col, scn.source.f_op_hz)?;
    }
    sim.run()?;
    let updates = sim.updates();
    let out = sim.into_outputs();

    // map local rows onto the global y axis (source at y = 0)
    let d = scn.period();
    let dy = scn.delta();
    let line_global = match side {
        EdgeSide::High => (scn.hybrid.n_inner as f64 + 0.5) * d,
        EdgeSide::Low => -(scn.hybrid.n_inner as f64 + 0.5) * d,
    };
    let j_lo = pml + 1;
    let j_hi = layout.ny - 2 - pml;
    let lines = scn
        .probe_columns()
        .into_iter()
        .zip(out.dft_lines)
        .map(|((tag, _), line)| {
            let positions: Vec<f64> = (j_lo..=j_hi)
                .map(|j| (j as f64 - layout.line_row as f64) * dy + line_global)
                .collect();
            let amplitude = line.amplitude[j_lo..=j_hi].to_vec();
            (tag, PhasorLine { positions, amplitude, frequency: line.frequency })
        })
        .collect();

    Ok(EdgeRun {
        side,
        n_edge,
        lines,
        sf_peak: out.region_maxima[0],
        tf_peak: out.region_maxima[1],
        updates,
    })
}

/// One full finite-structure simulation (the oracle path).
#[derive(Debug, Clone)]
pub struct FullRun {
    pub lines: Vec<(String, PhasorLine)>,
    pub updates: u64,
    pub final_ez: crate::grid::Grid2,
}

/// Run the full finite structure of 2·(N^I+n_edge)+1 unit cells, optionally
/// as a PMC half domain.
pub fn run_full(scn: &ScenarioConfig, n_edge: usize) -> Result<FullRun> {
    let layout = scn.full_layout(n_edge);
    let y_kind = parse_kind(&scn.full.y_boundary)?;
    if y_kind == BoundaryKind::Periodic {
        return Err(Error::Config("full mode cannot use periodic y boundaries".into()));
    }
    let half = scn.full.half_domain_pmc;

    let (ny, center, strip_centers) = if half {
        let ny = layout.ny - layout.center_row;
        let centers: Vec<i64> = layout
            .strip_centers
            .iter()
            .map(|c| c - layout.center_row as i64)
            .filter(|&c| c >= 0)
            .collect();
        (ny, 0usize, centers)
    } else {
        (layout.ny, layout.center_row, layout.strip_centers.clone())
    };

    let grid = make_grid(scn.nx(), ny, scn.delta(), scn.delta(), scn.grid.courant, scn.grid.n_steps)?;
    let materials = scn.finite_materials(ny, &strip_centers);
    let boundaries = BoundaryConfig {
        x_low: parse_kind(&scn.boundaries.x_low)?,
        x_high: parse_kind(&scn.boundaries.x_high)?,
        y_low: if half { BoundaryKind::Pmc } else { y_kind },
        y_high: y_kind,
        pml: pml_spec(scn)?,
    };
    let mut sim = Simulation::new(grid, materials, boundaries, None)?;
    sim.add_source(source_spec(scn, center))?;
    for (_, col) in scn.probe_columns() {
        sim.add_column_dft(col, scn.source.f_op_hz)?;
    }
    sim.run()?;
    let updates = sim.updates();
    let out = sim.into_outputs();

    let dy = scn.delta();
    let pml = scn.layout.pml_cells;
    let j_lo = if half { 0 } else { pml + 1 };
    let j_hi = ny - 2 - pml;
    let lines = scn
        .probe_columns()
        .into_iter()
        .zip(out.dft_lines)
        .map(|((tag, _), line)| {
            let positions: Vec<f64> =
                (j_lo..=j_hi).map(|j| (j as f64 - center as f64) * dy).collect();
            let amplitude = line.amplitude[j_lo..=j_hi].to_vec();
            (tag, PhasorLine { positions, amplitude, frequency: line.frequency })
        })
        .collect();

    Ok(FullRun { lines, updates, final_ez: out.state.ez })
}

/// Look up the sample of `line` at position y (grid-aligned within 1e-6·dy).
fn value_at(line: &PhasorLine, y: f64, dy: f64) -> Result<Complex64> {
    if line.positions.is_empty() {
        return Err(Error::ShapeMismatch("empty line".into()));
    }
    let idx = ((y - line.positions[0]) / dy).round();
    if idx < 0.0 || idx as usize >= line.positions.len() {
        return Err(Error::ShapeMismatch(format!("position {y} outside line coverage")));
    }
    let idx = idx as usize;
    if (line.positions[idx] - y).abs() > 1e-6 * dy {
        return Err(Error::ShapeMismatch(format!(
            "misaligned probe grids: wanted {y}, nearest sample at {}",
            line.positions[idx]
        )));
    }
    Ok(line.amplitude[idx])
}

/// Merged line over the full finite structure plus the per-seam
/// discontinuity magnitudes.
#[derive(Debug, Clone)]
pub struct MergedLine {
    pub tag: String,
    pub line: PhasorLine,
    pub seam_low: f64,
    pub seam_high: f64,
}

/// Fuse the inner estimate with the two edge-run line sets: inner values
/// inside |y| ≤ (N^I+1/2)·d (seam samples included, the tie rule), edge
/// values outside.
pub fn merge_fields(
    inner: &InnerEstimate,
    edge_low: &[(String, PhasorLine)],
    edge_high: &[(String, PhasorLine)],
    scn: &ScenarioConfig,
) -> Result<Vec<MergedLine>> {
    if edge_low.len() != inner.asm_lines.len() || edge_high.len() != inner.asm_lines.len() {
        return Err(Error::ShapeMismatch(format!(
            "merge needs one edge line per probe: {} asm vs {} low / {} high",
            inner.asm_lines.len(),
            edge_low.len(),
            edge_high.len()
        )));
    }
    let d = scn.period();
    let dy = scn.delta();
    let seam = (scn.hybrid.n_inner as f64 + 0.5) * d;
    let mut merged = Vec::new();
    for (oi, (tag, asm_line)) in inner.asm_lines.iter().enumerate() {
        let lo_line = &edge_low[oi].1;
        let hi_line = &edge_high[oi].1;
        let y_min = lo_line.positions[0];
        let y_max = *hi_line.positions.last().unwrap();
        let n = ((y_max - y_min) / dy).round() as usize + 1;
        let mut positions = Vec::with_capacity(n);
        let mut amplitude = Vec::with_capacity(n);
        for s in 0..n {
            let y = y_min + s as f64 * dy;
            let v = if y < -seam - 0.5 * dy {
                value_at(lo_line, y, dy)?
            } else if y > seam + 0.5 * dy {
                value_at(hi_line, y, dy)?
            } else {
                value_at(asm_line, y, dy)?
            };
            positions.push(y);
            amplitude.push(v);
        }
        let seam_low = (value_at(asm_line, -seam, dy)? - value_at(lo_line, -seam, dy)?).norm();
        let seam_high = (value_at(asm_line, seam, dy)? - value_at(hi_line, seam, dy)?).norm();
        merged.push(MergedLine {
            tag: tag.clone(),
            line: PhasorLine { positions, amplitude, frequency: asm_line.frequency },
            seam_low,
            seam_high,
        });
    }
    Ok(merged)
}

/// Discretized ‖E_ASM − E_edge‖₂ over the P_TF-cell total-field window past
/// the TF/SF line at (N^I+1/2)·d: rectangle rule at spacing dy.
pub fn convergence_metric(
    e_asm: &PhasorLine,
    e_edge: &PhasorLine,
    n_inner: usize,
    p_tf: usize,
    d: f64,
    dy: f64,
) -> Result<f64> {
    if p_tf < 1 {
        return Err(Error::Config("p_tf must be at least 1".into()));
    }
    let y_lo = (0.5 + n_inner as f64) * d;
    let n_samples = (p_tf as f64 * d / dy).round() as usize;
    let mut acc = 0.0;
    for s in 0..n_samples {
        let y = y_lo + s as f64 * dy;
        let a = value_at(e_asm, y, dy)
            .map_err(|_| Error::ShapeMismatch(format!("metric window sample {y} not covered by the ASM line")))?;
        let b = value_at(e_edge, y, dy)
            .map_err(|_| Error::ShapeMismatch(format!("metric window sample {y} not covered by the edge line")))?;
        acc += (a - b).norm_sqr() * dy;
    }
    Ok(acc.sqrt())
}

/// One evaluated schedule entry of the convergence search.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportEntry {
    pub n_edge: usize,
    pub raw: f64,
    pub normalized: f64,
    pub converged: bool,
}

/// Metric values per edge count with the decision trace of the loop.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub entries: Vec<ReportEntry>,
    pub p_tf: usize,
    pub threshold: f64,
    /// Largest raw value seen (the normalization reference).
    pub normalization_reference: f64,
    pub stop_reason: String,
}

impl ConvergenceReport {
    /// Build a report from raw metric values, normalizing each entry against
    /// the running maximum and stopping at the first normalized value at or
    /// below the threshold.
    pub fn from_raw(
        raws: &[(usize, f64)],
        p_tf: usize,
        threshold: f64,
        schedule_exhausted_msg: &str,
    ) -> Self {
        let mut entries = Vec::new();
        let mut reference: f64 = 0.0;
        let mut stop_reason = schedule_exhausted_msg.to_string();
        for &(n_edge, raw) in raws {
            reference = reference.max(raw);
            let normalized = if reference > 0.0 { raw / reference } else { 0.0 };
            let converged = normalized <= threshold;
            entries.push(ReportEntry { n_edge, raw, normalized, converged });
            if converged {
                stop_reason = format!("converged at n_edge={n_edge}");
                break;
            }
        }
        Self { entries, p_tf, threshold, normalization_reference: reference, stop_reason }
    }
}

/// Iterative edge-growth search: one completed sweep, then one high-side
/// edge run per scheduled N^E until the normalized metric crosses the
/// threshold. Returns the report and the edge runs it evaluated.
pub fn converge_loop(
    scn: &ScenarioConfig,
    inner: &InnerEstimate,
    schedule: &[usize],
    threshold: f64,
) -> Result<(ConvergenceReport, Vec<EdgeRun>)> {
    if schedule.is_empty() {
        return Err(Error::Config("empty n_edge schedule".into()));
    }
    let d = scn.period();
    let dy = scn.delta();
    let asm_line = &inner.asm_lines[0].1;
    let mut raws = Vec::new();
    let mut edge_runs = Vec::new();
    let mut reference: f64 = 0.0;
    for &n_edge in schedule {
        let run = run_edge(scn, &inner.record_high, EdgeSide::High, n_edge)?;
        let raw = convergence_metric(
            asm_line,
            &run.lines[0].1,
            scn.hybrid.n_inner,
            scn.hybrid.p_tf,
            d,
            dy,
        )?;
        raws.push((n_edge, raw));
        edge_runs.push(run);
        reference = reference.max(raw);
        if reference > 0.0 && raw / reference <= threshold {
            break;
        }
    }
    let report = ConvergenceReport::from_raw(
        &raws,
        scn.hybrid.p_tf,
        threshold,
        "schedule exhausted without convergence",
    );
    Ok((report, edge_runs))
}

// ---- sweep artifacts on disk ----

/// File names of one sweep member inside the sweep directory.
pub fn member_file_names(index: usize, probe_tags: &[String]) -> (String, String, Vec<String>) {
    let hi = format!("member_{index:04}_hi.prec");
    let lo = format!("member_{index:04}_lo.prec");
    let probes = probe_tags
        .iter()
        .map(|t| format!("member_{index:04}_probe_{t}.csv"))
        .collect();
    (hi, lo, probes)
}

/// Summary of one `sweep` command invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCommandSummary {
    pub members_total: usize,
    pub members_run: usize,
    pub member_updates: u64,
}

/// Run (or resume) the scenario sweep, persisting per-member records, probe
/// phasor CSVs and the manifest under `dir`. Members whose files already
/// exist are not re-run.
pub fn run_sweep_command(scn: &ScenarioConfig, dir: &std::path::Path, workers: usize) -> Result<SweepCommandSummary> {
    use crate::io;
    std::fs::create_dir_all(dir)?;
    let plan = scenario_sweep_plan(scn)?;
    let tags: Vec<String> = scn.probe_columns().into_iter().map(|(t, _)| t).collect();

    let missing: Vec<(usize, f64)> = plan
        .k_samples
        .iter()
        .enumerate()
        .filter(|(idx, _)| {
            let (hi, lo, probes) = member_file_names(*idx, &tags);
            let mut paths = vec![dir.join(hi), dir.join(lo)];
            paths.extend(probes.iter().map(|p| dir.join(p)));
            !paths.iter().all(|p| p.exists())
        })
        .map(|(idx, &k)| (idx, k))
        .collect();

    let member_updates = if !missing.is_empty() {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Simulation(format!("worker pool: {e}")))?;
        let runs: Vec<(usize, f64, UnitCellRun)> = pool.install(|| {
            use rayon::prelude::*;
            missing
                .par_iter()
                .map(|&(idx, k)| Ok((idx, k, run_unit_cell_member(scn, k, false)?)))
                .collect::<Result<_>>()
        })?;
        let updates = runs.first().map(|(_, _, r)| r.updates).unwrap_or(0);
        for (idx, _k, run) in &runs {
            write_sweep_member(scn, dir, *idx, run, &tags)?;
        }
        updates
    } else {
        0
    };

    let entries: Vec<io::ManifestEntry> = plan
        .k_samples
        .iter()
        .enumerate()
        .map(|(idx, &k)| {
            let (hi, _, _) = member_file_names(idx, &tags);
            io::ManifestEntry { index: idx, k, record_path: hi }
        })
        .collect();
    io::write_manifest(&dir.join("manifest.csv"), &entries)?;

    Ok(SweepCommandSummary {
        members_total: plan.member_count(),
        members_run: missing.len(),
        member_updates,
    })
}

fn write_sweep_member(
    scn: &ScenarioConfig,
    dir: &std::path::Path,
    index: usize,
    run: &UnitCellRun,
    tags: &[String],
) -> Result<()> {
    use crate::io;
    let (hi, lo, probes) = member_file_names(index, tags);
    let dt = scn.dt();
    let dy = scn.delta();
    let xs: Vec<f64> = (0..scn.nx()).map(|i| i as f64 * dy).collect();
    let mut rec_hi = BoundaryRecord::new(xs.clone(), dt, 0.0, run.line_fingerprint);
    rec_hi.e_samples = run.e_hi.clone();
    rec_hi.h_samples = run.h_hi.clone();
    io::write_record(&dir.join(hi), &rec_hi)?;
    let lo_fp = crate::source::line_fingerprint(&scn.unit_cell_grid()?, &scn.unit_cell_materials(), 0);
    let mut rec_lo = BoundaryRecord::new(xs, dt, 0.0, lo_fp);
    rec_lo.e_samples = run.e_lo.clone();
    rec_lo.h_samples = run.h_lo.clone();
    io::write_record(&dir.join(lo), &rec_lo)?;
    for (tag_file, phasor) in probes.iter().zip(&run.probe_phasors) {
        let positions: Vec<f64> = (0..=scn.grid.cells_per_period).map(|j| j as f64 * dy).collect();
        let line = PhasorLine { positions, amplitude: phasor.clone(), frequency: scn.source.f_op_hz };
        io::write_phasor_csv(&dir.join(tag_file), &line)?;
    }
    Ok(())
}

/// Load a persisted sweep back into memory, verifying it matches the
/// scenario's plan.
pub fn load_sweep(scn: &ScenarioConfig, dir: &std::path::Path) -> Result<SweepData> {
    use crate::io;
    let plan = scenario_sweep_plan(scn)?;
    let tags: Vec<String> = scn.probe_columns().into_iter().map(|(t, _)| t).collect();
    let entries = io::read_manifest(&dir.join("manifest.csv"))?;
    if entries.len() != plan.member_count() {
        return Err(Error::Config(format!(
            "manifest has {} members but the scenario plan needs {} — re-run sweep",
            entries.len(),
            plan.member_count()
        )));
    }
    let mut runs = Vec::with_capacity(entries.len());
    for (idx, entry) in entries.iter().enumerate() {
        if entry.index != idx {
            return Err(Error::Format(format!("manifest indices out of order at row {idx}")));
        }
        let k_plan = plan.k_samples[idx];
        if (entry.k - k_plan).abs() > 1e-9 * k_plan.abs().max(1.0) {
            return Err(Error::Config(format!(
                "manifest k={} does not match plan k={k_plan} at index {idx} — re-run sweep",
                entry.k
            )));
        }
        let (hi_name, lo_name, probe_names) = member_file_names(idx, &tags);
        if entry.record_path != hi_name {
            return Err(Error::Format(format!(
                "manifest record path {:?} does not follow the member naming scheme",
                entry.record_path
            )));
        }
        let hi = io::read_record(&dir.join(&hi_name))
            .map_err(|e| missing_or(e, dir, &hi_name))?;
        let lo = io::read_record(&dir.join(&lo_name))
            .map_err(|e| missing_or(e, dir, &lo_name))?;
        let mut probe_phasors = Vec::new();
        for name in &probe_names {
            let line = io::read_phasor_csv(&dir.join(name), scn.source.f_op_hz)
                .map_err(|e| missing_or(e, dir, name))?;
            probe_phasors.push(line.amplitude);
        }
        runs.push(SweepResult {
            index: idx,
            k: entry.k,
            output: UnitCellRun {
                line_fingerprint: hi.grid_fingerprint,
                e_hi: hi.e_samples,
                h_hi: hi.h_samples,
                e_lo: lo.e_samples,
                h_lo: lo.h_samples,
                probe_phasors,
                probe_series: None,
                updates: 0,
            },
        });
    }
    Ok(SweepData { plan, runs, probe_tags: tags, member_updates: 0 })
}

fn missing_or(e: Error, dir: &std::path::Path, name: &str) -> Error {
    match e {
        Error::Io(ref io_err) if io_err.kind() == std::io::ErrorKind::NotFound => {
            Error::MissingArtifact(format!("sweep member file {}", dir.join(name).display()))
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(y0: f64, dy: f64, vals: Vec<Complex64>) -> PhasorLine {
        PhasorLine {
            positions: (0..vals.len()).map(|s| y0 + s as f64 * dy).collect(),
            amplitude: vals,
            frequency: 1.0,
        }
    }

    #[test]
    fn metric_trivial_cases() {
        let d = 0.8;
        let dy = 0.1;
        let n_inner = 1usize;
        // window [1.2, 2.0): 8 samples
        let vals: Vec<Complex64> = (0..40).map(|s| Complex64::new(s as f64, -0.5)).collect();
        let a = line(0.0, dy, vals.clone());
        let b = line(0.0, dy, vals.clone());
        assert_eq!(convergence_metric(&a, &b, n_inner, 1, d, dy).unwrap(), 0.0);

        // constant offset c: metric = |c|·sqrt(P_TF·d)
        let c = Complex64::new(0.3, -0.4);
        let shifted = line(0.0, dy, vals.iter().map(|v| v + c).collect());
        for p_tf in [1usize, 3] {
            let m = convergence_metric(&a, &shifted, n_inner, p_tf, d, dy).unwrap();
            let expected = c.norm() * (p_tf as f64 * d).sqrt();
            assert!((m - expected).abs() < 1e-12 * expected);
        }

        // window not covered
        assert!(convergence_metric(&a, &b, 4, 2, d, dy).is_err());
    }

    #[test]
    fn metric_is_a_norm() {
        let d = 0.4;
        let dy = 0.1;
        let mk = |seed: f64| {
            line(
                0.0,
                dy,
                (0..40)
                    .map(|s| Complex64::new((s as f64 * seed).sin(), (s as f64 * 0.3 + seed).cos()))
                    .collect(),
            )
        };
        let a = mk(0.7);
        let b = mk(1.3);
        let c = mk(2.1);
        let m = |x: &PhasorLine, y: &PhasorLine, p| convergence_metric(x, y, 0, p, d, dy).unwrap();
        // nonnegativity and symmetry
        assert!(m(&a, &b, 4) >= 0.0);
        assert!((m(&a, &b, 4) - m(&b, &a, 4)).abs() < 1e-15);
        // triangle inequality on the same window
        assert!(m(&a, &c, 4) <= m(&a, &b, 4) + m(&b, &c, 4) + 1e-12);
        // window nesting: smaller window gives a smaller metric
        assert!(m(&a, &b, 2) <= m(&a, &b, 6) + 1e-15);
    }

    #[test]
    fn report_normalization_and_stopping() {
        let raws = vec![(0usize, 10.0), (10, 4.8), (30, 0.402), (50, 0.292)];
        let rep = ConvergenceReport::from_raw(&raws, 10, 0.05, "exhausted");
        // stops at n_edge=30 (0.0402 normalized)
        assert_eq!(rep.entries.len(), 3);
        assert!((rep.entries[0].normalized - 1.0).abs() < 1e-15);
        assert!((rep.entries[2].normalized - 0.0402).abs() < 1e-12);
        assert!(rep.entries[2].converged);
        assert_eq!(rep.stop_reason, "converged at n_edge=30");
        assert!(rep.entries.iter().all(|e| e.normalized > 0.0 && e.normalized <= 1.0));

        // threshold = 1 stops immediately
        let rep = ConvergenceReport::from_raw(&raws, 10, 1.0, "exhausted");
        assert_eq!(rep.entries.len(), 1);

        // impossible threshold exhausts the schedule
        let rep = ConvergenceReport::from_raw(&[(0, 5.0)], 10, 1e-12, "exhausted");
        assert_eq!(rep.stop_reason, "exhausted");
        assert!(!rep.entries[0].converged);
    }
}
