//! Single-simulation driver: wires the curl kernels, boundary treatments,
//! sources, TF/SF replay, line recorders and probes into one time loop.
//!
//! Step order (step index s on entry):
//!   1. H curl update, CPML H correction, PBC H wrap, TF/SF H correction
//!   2. mid-step hooks: line recorders and probes observe Ez(t=s·dt)
//!      together with Hx(t=(s+1/2)·dt)
//!   3. E curl update, PMC planes, CPML E correction, TF/SF E correction,
//!      soft sources at t=(s+1/2)·dt, Mur edges, PBC E wrap, PEC forcing

use num_complex::Complex64;

use crate::analysis::{DftAccumulator, PhasorLine, ProbeSeries};
use crate::boundary::{
    apply_pbc_e, apply_pbc_h, apply_pmc, BlochPhase, Cpml, Edge, EdgeRowSpan, MurSet, PmlSpec,
};
use crate::error::{Error, Result};
use crate::fdtd::{e_updates_per_step, h_updates_per_step, step_e, step_h};
use crate::grid::{FieldState, GridSpec, MaterialMap};
use crate::source::{
    inject_soft_source, line_fingerprint, record_step, BoundaryRecord, SourceSpec, TfsfSpec,
};

/// Boundary treatment for one domain edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// Hard wall (Ez pinned at zero; the default of the bare kernels).
    Wall,
    Pml,
    Mur,
    Pmc,
    Periodic,
}

/// Exactly one boundary kind per domain edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryConfig {
    pub x_low: BoundaryKind,
    pub x_high: BoundaryKind,
    pub y_low: BoundaryKind,
    pub y_high: BoundaryKind,
    pub pml: PmlSpec,
}

impl BoundaryConfig {
    fn validate(&self) -> Result<()> {
        use BoundaryKind::*;
        if matches!(self.x_low, Periodic) || matches!(self.x_high, Periodic) {
            return Err(Error::Config("the engine fixes y as the periodic axis".into()));
        }
        if (self.y_low == Periodic) != (self.y_high == Periodic) {
            return Err(Error::Config("periodic y requires both y edges periodic".into()));
        }
        if matches!(self.x_low, Pmc) || matches!(self.x_high, Pmc) {
            return Err(Error::Config("pmc symmetry planes are supported on y edges only".into()));
        }
        Ok(())
    }

    fn periodic_y(&self) -> bool {
        self.y_low == BoundaryKind::Periodic
    }
}

struct LineRecorder {
    j_line: usize,
    h_row: usize,
    record: BoundaryRecord,
}

struct ColumnProbe {
    i: usize,
    series: ProbeSeries,
}

struct ColumnDft {
    i: usize,
    acc: DftAccumulator,
}

struct RegionMax {
    j_lo: usize,
    j_hi: usize,
    max: f64,
}

/// Outputs collected from one completed run.
pub struct SimOutputs {
    pub records: Vec<BoundaryRecord>,
    pub probes: Vec<ProbeSeries>,
    pub dft_lines: Vec<PhasorLine>,
    /// Peak |Ez| seen per registered region over the whole run.
    pub region_maxima: Vec<f64>,
    /// Total Yee node updates executed (E plus H).
    pub updates: u64,
    pub state: FieldState,
}

/// One owned simulation instance. Distinct instances are fully independent.
pub struct Simulation {
    pub grid: GridSpec,
    pub materials: MaterialMap,
    pub state: FieldState,
    boundaries: BoundaryConfig,
    bloch: Option<BlochPhase>,
    cpml: Option<Cpml>,
    mur: Option<MurSet>,
    sources: Vec<SourceSpec>,
    tfsf: Vec<TfsfSpec>,
    recorders: Vec<LineRecorder>,
    probes: Vec<ColumnProbe>,
    dfts: Vec<ColumnDft>,
    region_max: Vec<RegionMax>,
    updates: u64,
}

impl Simulation {
    pub fn new(
        grid: GridSpec,
        materials: MaterialMap,
        boundaries: BoundaryConfig,
        bloch: Option<BlochPhase>,
    ) -> Result<Self> {
        boundaries.validate()?;
        materials.check(&grid)?;
        if boundaries.periodic_y() != bloch.is_some() {
            return Err(Error::Config("periodic y edges need a Bloch phase, and vice versa".into()));
        }
        if let Some(b) = &bloch {
            let period = (grid.ny - 1) as f64 * grid.dy;
            if (b.d - period).abs() > 1e-9 * period {
                return Err(Error::Config(format!(
                    "unit cell must span exactly one period: domain {} vs period {}",
                    period, b.d
                )));
            }
        }

        let mut pml_edges = Vec::new();
        for (edge, kind) in [
            (Edge::XLow, boundaries.x_low),
            (Edge::XHigh, boundaries.x_high),
            (Edge::YLow, boundaries.y_low),
            (Edge::YHigh, boundaries.y_high),
        ] {
            if kind == BoundaryKind::Pml {
                pml_edges.push(edge);
            }
        }
        let span = EdgeRowSpan {
            include_y_low: boundaries.y_low == BoundaryKind::Pmc,
            include_y_high: boundaries.y_high == BoundaryKind::Pmc || boundaries.periodic_y(),
        };
        let cpml = if pml_edges.is_empty() {
            None
        } else {
            Some(Cpml::new(&grid, boundaries.pml, &pml_edges, span)?)
        };

        let mur_edges: Vec<Edge> = [
            (Edge::XLow, boundaries.x_low),
            (Edge::XHigh, boundaries.x_high),
            (Edge::YLow, boundaries.y_low),
            (Edge::YHigh, boundaries.y_high),
        ]
        .into_iter()
        .filter(|(_, k)| *k == BoundaryKind::Mur)
        .map(|(e, _)| e)
        .collect();
        let mur = if mur_edges.is_empty() { None } else { Some(MurSet::new(&grid, mur_edges)) };

        let mut state = FieldState::new(&grid);
        if boundaries.periodic_y() {
            state = state.with_periodic_y();
        }

        Ok(Self {
            grid,
            materials,
            state,
            boundaries,
            bloch,
            cpml,
            mur,
            sources: Vec::new(),
            tfsf: Vec::new(),
            recorders: Vec::new(),
            probes: Vec::new(),
            dfts: Vec::new(),
            region_max: Vec::new(),
            updates: 0,
        })
    }

    pub fn add_source(&mut self, src: SourceSpec) -> Result<()> {
        if src.i >= self.grid.nx || src.j >= self.grid.ny {
            return Err(Error::Config("source outside the domain".into()));
        }
        if self.materials.pec[src.i * self.grid.ny + src.j] {
            return Err(Error::Config("source sits on a PEC node".into()));
        }
        self.sources.push(src);
        Ok(())
    }

    /// Record Ez on row `j_line` and Hx on adjacent half-cell row `h_row`
    /// (`j_line−1` for an interior below the line, `j_line` for above).
    pub fn add_line_recorder(&mut self, j_line: usize, h_row: usize, t_start: f64) -> Result<usize> {
        if j_line >= self.grid.ny || h_row >= self.grid.ny - 1 {
            return Err(Error::Config("recorder rows outside the domain".into()));
        }
        let fp = line_fingerprint(&self.grid, &self.materials, j_line);
        let xs: Vec<f64> = (0..self.grid.nx).map(|i| i as f64 * self.grid.dx).collect();
        self.recorders.push(LineRecorder {
            j_line,
            h_row,
            record: BoundaryRecord::new(xs, self.grid.dt, t_start, fp),
        });
        Ok(self.recorders.len() - 1)
    }

    pub fn add_tfsf(&mut self, spec: TfsfSpec) -> Result<()> {
        spec.validate(&self.grid, &self.materials, self.grid.n_steps)?;
        self.tfsf.push(spec);
        Ok(())
    }

    /// Store the Ez time series of column i (one value per y node per step).
    pub fn add_column_probe(&mut self, i: usize) -> Result<usize> {
        if i >= self.grid.nx {
            return Err(Error::Config("probe column outside the domain".into()));
        }
        let ys: Vec<f64> = (0..self.grid.ny).map(|j| j as f64 * self.grid.dy).collect();
        self.probes.push(ColumnProbe { i, series: ProbeSeries::new(ys, self.grid.dt)? });
        Ok(self.probes.len() - 1)
    }

    /// Streaming single-bin DFT of the Ez column at i.
    pub fn add_column_dft(&mut self, i: usize, frequency: f64) -> Result<usize> {
        if i >= self.grid.nx {
            return Err(Error::Config("dft column outside the domain".into()));
        }
        let ys: Vec<f64> = (0..self.grid.ny).map(|j| j as f64 * self.grid.dy).collect();
        self.dfts.push(ColumnDft { i, acc: DftAccumulator::new(ys, self.grid.dt, frequency)? });
        Ok(self.dfts.len() - 1)
    }

    /// Track the peak |Ez| over rows j_lo..=j_hi (all columns) per step.
    pub fn add_region_max(&mut self, j_lo: usize, j_hi: usize) -> Result<usize> {
        if j_hi < j_lo || j_hi >= self.grid.ny {
            return Err(Error::Config("region rows outside the domain".into()));
        }
        self.region_max.push(RegionMax { j_lo, j_hi, max: 0.0 });
        Ok(self.region_max.len() - 1)
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn step(&mut self) -> Result<()> {
        let s = self.state.step_index;
        let t_e = s as f64 * self.grid.dt;

        step_h(&mut self.state, &self.grid)?;
        if let Some(cpml) = &mut self.cpml {
            cpml.correct_h(&mut self.state, &self.grid);
        }
        if let Some(bloch) = &self.bloch {
            apply_pbc_h(&mut self.state, bloch)?;
        }
        for tfsf in &self.tfsf {
            tfsf.correct_h(&mut self.state, &self.grid, s);
        }

        for rec in &mut self.recorders {
            record_step(
                &self.state,
                &self.grid,
                &self.materials,
                rec.j_line,
                rec.h_row,
                &mut rec.record,
                t_e,
            )?;
        }
        for probe in &mut self.probes {
            probe.series.push(self.state.ez.col(probe.i).to_vec())?;
        }
        for dft in &mut self.dfts {
            dft.acc.push(self.state.ez.col(dft.i))?;
        }
        for region in &mut self.region_max {
            for i in 0..self.grid.nx {
                for v in &self.state.ez.col(i)[region.j_lo..=region.j_hi] {
                    let n = v.norm();
                    if n > region.max {
                        region.max = n;
                    }
                }
            }
        }

        step_e(&mut self.state, &self.grid, &self.materials)?;
        if self.boundaries.y_low == BoundaryKind::Pmc {
            apply_pmc(&mut self.state, &self.grid, &self.materials, Edge::YLow)?;
        }
        if self.boundaries.y_high == BoundaryKind::Pmc {
            apply_pmc(&mut self.state, &self.grid, &self.materials, Edge::YHigh)?;
        }
        if let Some(cpml) = &mut self.cpml {
            cpml.correct_e(&mut self.state, &self.grid, &self.materials);
        }
        for tfsf in &self.tfsf {
            tfsf.correct_e(&mut self.state, &self.grid, &self.materials, s);
        }
        let t_src = (s as f64 + 0.5) * self.grid.dt;
        for src in &self.sources.clone() {
            inject_soft_source(&mut self.state, &self.grid, &self.materials, src, t_src)?;
        }
        if let Some(mur) = &mut self.mur {
            mur.apply(&mut self.state, &self.grid);
        }
        if let Some(bloch) = &self.bloch {
            apply_pbc_e(&mut self.state, bloch)?;
        }
        self.materials.enforce_pec(&mut self.state.ez);

        let mut e_count = e_updates_per_step(&self.grid, self.boundaries.periodic_y());
        if self.boundaries.y_low == BoundaryKind::Pmc {
            e_count += (self.grid.nx - 2) as u64;
        }
        if self.boundaries.y_high == BoundaryKind::Pmc {
            e_count += (self.grid.nx - 2) as u64;
        }
        self.updates += e_count + h_updates_per_step(&self.grid);
        Ok(())
    }

    /// Run the configured number of steps.
    pub fn run(&mut self) -> Result<()> {
        for _ in 0..self.grid.n_steps {
            self.step()?;
        }
        Ok(())
    }

    pub fn into_outputs(self) -> SimOutputs {
        SimOutputs {
            records: self.recorders.into_iter().map(|r| r.record).collect(),
            probes: self.probes.into_iter().map(|p| p.series).collect(),
            dft_lines: self.dfts.into_iter().map(|d| d.acc.finish()).collect(),
            region_maxima: self.region_max.into_iter().map(|r| r.max).collect(),
            updates: self.updates,
            state: self.state,
        }
    }

    /// Ez value at a node (diagnostics).
    pub fn ez_at(&self, i: usize, j: usize) -> Complex64 {
        self.state.ez.at(i, j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::C0;
    use crate::fdtd::field_energy_synchronized;
    use crate::grid::make_grid;

    fn walls() -> BoundaryConfig {
        BoundaryConfig {
            x_low: BoundaryKind::Wall,
            x_high: BoundaryKind::Wall,
            y_low: BoundaryKind::Wall,
            y_high: BoundaryKind::Wall,
            pml: PmlSpec::default(),
        }
    }

    #[test]
    fn boundary_validation() {
        let grid = make_grid(12, 12, 1e-3, 1e-3, 0.9, 4).unwrap();
        let m = MaterialMap::vacuum(12, 12);
        let mut bad = walls();
        bad.x_low = BoundaryKind::Periodic;
        assert!(Simulation::new(grid, m.clone(), bad, None).is_err());
        let mut half = walls();
        half.y_low = BoundaryKind::Periodic;
        assert!(Simulation::new(grid, m.clone(), half, None).is_err());
        // periodic needs a bloch phase
        let mut per = walls();
        per.y_low = BoundaryKind::Periodic;
        per.y_high = BoundaryKind::Periodic;
        assert!(Simulation::new(grid, m.clone(), per, None).is_err());
        let bloch = BlochPhase::new(0.0, 11.0 * 1e-3).unwrap();
        assert!(Simulation::new(grid, m, per, Some(bloch)).is_ok());
    }

    #[test]
    fn energy_conserved_with_reflecting_walls() {
        // vacuum box, hard walls, kick with a short pulse, then watch the
        // synchronized discrete energy stay flat over 1000 steps
        let grid = make_grid(40, 40, 1e-3, 1e-3, 0.9, 1200).unwrap();
        let m = MaterialMap::vacuum(40, 40);
        let mut sim = Simulation::new(grid, m, walls(), None).unwrap();
        let width = 6.0 * grid.dt;
        sim.add_source(SourceSpec::new(20, 20, Complex64::new(1.0, 0.0), 4.0 * width, width).unwrap())
            .unwrap();

        // drive until the pulse is over
        for _ in 0..200 {
            sim.step().unwrap();
        }
        // the H product pairs (s−1/2, s+1/2) around Ez at integer time s
        let energy_at_next_step = |sim: &mut Simulation| {
            let e_mid = sim.state.ez.clone();
            let h_prev = (sim.state.hx.clone(), sim.state.hy.clone());
            sim.step().unwrap();
            field_energy_synchronized(
                &e_mid,
                (&h_prev.0, &h_prev.1),
                (&sim.state.hx, &sim.state.hy),
                &sim.grid,
                &sim.materials,
            )
        };
        let e0 = energy_at_next_step(&mut sim);
        assert!(e0 > 0.0);

        let mut max_dev: f64 = 0.0;
        for _ in 0..1000 {
            let e = energy_at_next_step(&mut sim);
            max_dev = max_dev.max(((e - e0) / e0).abs());
        }
        assert!(max_dev < 1e-3, "energy drift {max_dev}");
    }

    #[test]
    fn stepping_is_linear_in_the_state() {
        let grid = make_grid(24, 20, 1e-3, 1e-3, 0.9, 40).unwrap();
        let m = MaterialMap::vacuum(24, 20);

        let mk = |amp: Complex64, pos: (usize, usize)| {
            let mut sim = Simulation::new(grid, m.clone(), walls(), None).unwrap();
            let width = 5.0 * grid.dt;
            sim.add_source(SourceSpec::new(pos.0, pos.1, amp, 3.0 * width, width).unwrap()).unwrap();
            sim.run().unwrap();
            sim.state
        };
        let a = mk(Complex64::new(1.0, 0.0), (8, 10));
        let b = mk(Complex64::new(0.0, 2.0), (15, 6));

        // both sources in one run
        let mut sum = Simulation::new(grid, m, walls(), None).unwrap();
        let width = 5.0 * grid.dt;
        sum.add_source(SourceSpec::new(8, 10, Complex64::new(1.0, 0.0), 3.0 * width, width).unwrap())
            .unwrap();
        sum.add_source(SourceSpec::new(15, 6, Complex64::new(0.0, 2.0), 3.0 * width, width).unwrap())
            .unwrap();
        sum.run().unwrap();

        let scale: f64 = a.ez.as_slice().iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (k, v) in sum.state.ez.as_slice().iter().enumerate() {
            let expect = a.ez.as_slice()[k] + b.ez.as_slice()[k];
            assert!((v - expect).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn real_source_keeps_imaginary_parts_zero() {
        let grid = make_grid(20, 20, 1e-3, 1e-3, 0.9, 60).unwrap();
        let m = MaterialMap::vacuum(20, 20);
        let mut sim = Simulation::new(grid, m, walls(), None).unwrap();
        let width = 5.0 * grid.dt;
        sim.add_source(SourceSpec::new(10, 10, Complex64::new(1.0, 0.0), 3.0 * width, width).unwrap())
            .unwrap();
        sim.run().unwrap();
        assert!(sim.state.ez.as_slice().iter().all(|v| v.im == 0.0));
        assert!(sim.state.hx.as_slice().iter().all(|v| v.im == 0.0));
        assert!(sim.state.hy.as_slice().iter().all(|v| v.im == 0.0));
    }

    #[test]
    fn pulse_respects_causal_cone() {
        // exact-zero variant: within the first few steps c0·t + 2 cells
        // bounds the one-cell-per-step stencil support
        let grid = make_grid(41, 41, 1e-3, 1e-3, 0.9, 8).unwrap();
        let m = MaterialMap::vacuum(41, 41);
        let mut sim = Simulation::new(grid, m.clone(), walls(), None).unwrap();
        let width = 2.0 * grid.dt;
        sim.add_source(SourceSpec::new(20, 20, Complex64::new(1.0, 0.0), 3.0 * width, width).unwrap())
            .unwrap();
        for s in 1..=5usize {
            sim.step().unwrap();
            let radius_cells = C0 * (s as f64 * grid.dt) / grid.dx + 2.0;
            for i in 0..41 {
                for j in 0..41 {
                    let r = (((i as f64) - 20.0).powi(2) + ((j as f64) - 20.0).powi(2)).sqrt();
                    if r > radius_cells {
                        assert_eq!(sim.state.ez.at(i, j), Complex64::new(0.0, 0.0));
                    }
                }
            }
        }

        // longer run: the discrete influence cone (one cell per step in L1)
        // bounds the support bitwise, and beyond c0·t plus a dispersion
        // cushion the precursor is negligible
        let steps = 60usize;
        let grid = make_grid(161, 161, 1e-3, 1e-3, 0.9, steps).unwrap();
        let m = MaterialMap::vacuum(161, 161);
        let mut sim = Simulation::new(grid, m, walls(), None).unwrap();
        let width = 4.0 * grid.dt;
        sim.add_source(SourceSpec::new(80, 80, Complex64::new(1.0, 0.0), 3.0 * width, width).unwrap())
            .unwrap();
        sim.run().unwrap();
        let peak: f64 = sim.state.ez.as_slice().iter().map(|v| v.norm()).fold(0.0, f64::max);
        let physical = C0 * (steps as f64 * sim.grid.dt) / sim.grid.dx;
        let mut worst_outside_cushion: f64 = 0.0;
        for i in 0..161i64 {
            for j in 0..161i64 {
                let v = sim.state.ez.at(i as usize, j as usize).norm();
                let l1 = (i - 80).abs() + (j - 80).abs();
                if l1 > steps as i64 {
                    assert_eq!(v, 0.0, "node ({i},{j}) outside the stencil cone");
                }
                let r = (((i - 80) as f64).powi(2) + ((j - 80) as f64).powi(2)).sqrt();
                if r > physical + 10.0 {
                    worst_outside_cushion = worst_outside_cushion.max(v);
                }
            }
        }
        assert!(
            worst_outside_cushion <= 1e-9 * peak,
            "superluminal leakage {worst_outside_cushion} vs peak {peak}"
        );
    }

    #[test]
    fn update_counter_matches_closed_form() {
        let grid = make_grid(14, 11, 1e-3, 1e-3, 0.9, 7).unwrap();
        let m = MaterialMap::vacuum(14, 11);
        let mut sim = Simulation::new(grid, m, walls(), None).unwrap();
        sim.run().unwrap();
        let per_step = (12 * 9) as u64 + (14 * 10 + 13 * 11) as u64;
        assert_eq!(sim.updates(), 7 * per_step);
    }
}
