//! Scenario configuration: one structured TOML file with documented keys,
//! two built-in profiles (desk and paper scale), validation, and the derived
//! grid/material layouts every command builds its simulations from.
//!
//! Geometry convention: x is the aperiodic axis (PML-lined), y the periodic
//! axis. The grating is a column of PEC strips one cell thick in x whose
//! strips span half of each period in y, centered on the period boundaries.
//! The source sits a quarter wavelength west of the grating on the center
//! row; probe columns sit east of the grating at the sampling offsets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constants::C0;
use crate::error::{Error, Result};
use crate::grid::{make_grid, GridSpec, MaterialMap};

/// Structure placed in the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureKind {
    Grating,
    Vacuum,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// Cells per free-space wavelength at f_op (λ/Δ).
    pub cells_per_wavelength: usize,
    /// Cells per structure period (d_y/Δ); must be a multiple of 4.
    pub cells_per_period: usize,
    pub courant: f64,
    pub n_steps: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { cells_per_wavelength: 40, cells_per_period: 8, courant: 0.9, n_steps: 1024 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct StructureSection {
    pub kind: StructureKind,
}

impl Default for StructureSection {
    fn default() -> Self {
        Self { kind: StructureKind::Grating }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSection {
    pub f_op_hz: f64,
    pub amplitude_re: f64,
    pub amplitude_im: f64,
}

impl Default for SourceSection {
    fn default() -> Self {
        Self { f_op_hz: 12.0e9, amplitude_re: 1.0, amplitude_im: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutSection {
    pub pml_cells: usize,
    /// Vacuum cells between the west PML and the source column.
    pub gap_west_cells: usize,
    /// Vacuum cells between the farthest probe column and the east PML.
    pub gap_east_cells: usize,
    /// Vacuum cells between the SF-side structure end and the PML in edge runs.
    pub sf_gap_cells: usize,
    /// Vacuum cells between the structure end and the PML along y
    /// (the paper's 5 cm buffer, scaled with the profile).
    pub empty_space_cells: usize,
}

impl Default for LayoutSection {
    fn default() -> Self {
        Self { pml_cells: 16, gap_west_cells: 8, gap_east_cells: 12, sf_gap_cells: 4, empty_space_cells: 80 }
    }
}

/// Boundary kind name per unit-cell domain edge.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct BoundariesSection {
    pub x_low: String,
    pub x_high: String,
    pub y_low: String,
    pub y_high: String,
    pub pml_grading_order: f64,
    pub pml_target_reflection: f64,
}

impl Default for BoundariesSection {
    fn default() -> Self {
        Self {
            x_low: "pml".into(),
            x_high: "pml".into(),
            y_low: "periodic".into(),
            y_high: "periodic".into(),
            pml_grading_order: 3.0,
            pml_target_reflection: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct AsmSection {
    /// Exploit mirror symmetry (half-zone sweep).
    pub symmetry: bool,
    /// Explicit integration order; derived from (t0, a) when absent.
    pub order: Option<usize>,
    /// Horizon t0 (s); defaults to the full run duration.
    pub t0_s: Option<f64>,
    /// Region of interest half-width a (m); defaults to
    /// (n_inner + p_tf + 2) periods.
    pub region_half_width_m: Option<f64>,
}

impl Default for AsmSection {
    fn default() -> Self {
        Self { symmetry: true, order: None, t0_s: None, region_half_width_m: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct HybridSection {
    /// N^I: inner half-width in unit cells.
    pub n_inner: usize,
    /// Increasing N^E schedule for the convergence loop.
    pub n_edge_schedule: Vec<usize>,
    /// P_TF: metric window length in unit cells.
    pub p_tf: usize,
    /// Normalized-metric stop threshold.
    pub threshold: f64,
    /// Structure periods on the scattered-field side of the TF/SF line.
    pub sf_buffer_cells: usize,
}

impl Default for HybridSection {
    fn default() -> Self {
        Self {
            n_inner: 10,
            n_edge_schedule: vec![0, 2, 4, 6, 8, 10],
            p_tf: 10,
            threshold: 0.05,
            sf_buffer_cells: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSection {
    /// Probe-line offsets east of the grating, in wavelengths.
    pub offsets_lambda: Vec<f64>,
}

impl Default for SamplingSection {
    fn default() -> Self {
        Self { offsets_lambda: vec![1.0, 0.05] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct FullSection {
    /// Simulate only the upper half with a PMC symmetry plane.
    pub half_domain_pmc: bool,
    /// y boundary of the full run; "periodic" is rejected in full mode.
    pub y_boundary: String,
}

impl Default for FullSection {
    fn default() -> Self {
        Self { half_domain_pmc: false, y_boundary: "pml".into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

/// The whole scenario. Every key has a desk-profile default, so a config
/// file only needs the keys it overrides.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid: GridSection,
    pub structure: StructureSection,
    pub source: SourceSection,
    pub layout: LayoutSection,
    pub boundaries: BoundariesSection,
    pub asm: AsmSection,
    pub hybrid: HybridSection,
    pub sampling: SamplingSection,
    pub full: FullSection,
    pub output: OutputSection,
    /// Worker count for sweeps; 0 means available parallelism. Never
    /// affects numerical results.
    pub workers: usize,
}

impl ScenarioConfig {
    /// Desk-scale profile: λ/40 resolution, ~41 total unit cells, 2^10 steps.
    pub fn desk() -> Self {
        Self::default()
    }

    /// Paper-scale profile: λ/160 resolution, N^I = 29, 2^12 steps, the
    /// 40-cell PML and the 5 cm y buffer of the grating study.
    pub fn paper() -> Self {
        let mut c = Self::default();
        c.grid = GridSection { cells_per_wavelength: 160, cells_per_period: 8, courant: 0.9, n_steps: 4096 };
        c.layout = LayoutSection {
            pml_cells: 40,
            gap_west_cells: 31,
            gap_east_cells: 48,
            sf_gap_cells: 9,
            empty_space_cells: 320,
        };
        c.hybrid = HybridSection {
            n_inner: 29,
            n_edge_schedule: vec![0, 10, 30, 50, 70, 90],
            p_tf: 10,
            threshold: 0.05,
            sf_buffer_cells: 10,
        };
        c
    }

    pub fn from_profile(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(Self::desk()),
            "paper" => Ok(Self::paper()),
            other => Err(Error::Config(format!("unknown profile {other:?} (desk|paper)"))),
        }
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: ScenarioConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    // ---- derived quantities ----

    pub fn wavelength(&self) -> f64 {
        C0 / self.source.f_op_hz
    }

    /// Cell size Δ = λ/cells_per_wavelength (dx = dy).
    pub fn delta(&self) -> f64 {
        self.wavelength() / self.grid.cells_per_wavelength as f64
    }

    /// Structure period d_y in meters.
    pub fn period(&self) -> f64 {
        self.grid.cells_per_period as f64 * self.delta()
    }

    pub fn dt(&self) -> f64 {
        // bit-identical to the make_grid stability bound for dx = dy = Δ
        let delta = self.delta();
        self.grid.courant / (C0 * (1.0 / (delta * delta) + 1.0 / (delta * delta)).sqrt())
    }

    /// Strip half-height in cells (strips span half a period).
    pub fn strip_half_height(&self) -> usize {
        self.grid.cells_per_period / 4
    }

    /// Source column index.
    pub fn x_source(&self) -> usize {
        self.layout.pml_cells + self.layout.gap_west_cells
    }

    /// West strip column (strips occupy this column and the next).
    pub fn x_strip(&self) -> usize {
        self.x_source() + self.grid.cells_per_wavelength / 4
    }

    /// Probe columns east of the grating, one per sampling offset.
    pub fn probe_columns(&self) -> Vec<(String, usize)> {
        let east_face = self.x_strip() + 1;
        self.sampling
            .offsets_lambda
            .iter()
            .map(|off| {
                let cells = (off * self.grid.cells_per_wavelength as f64).round() as usize;
                (format!("lambda_{off:.3}"), east_face + cells)
            })
            .collect()
    }

    /// Domain width in Ez nodes, identical for every simulation of a scenario.
    pub fn nx(&self) -> usize {
        let max_off = self
            .sampling
            .offsets_lambda
            .iter()
            .map(|off| (off * self.grid.cells_per_wavelength as f64).round() as usize)
            .max()
            .unwrap_or(0);
        self.x_strip() + 1 + max_off + self.layout.gap_east_cells + self.layout.pml_cells + 1
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.cells_per_period < 4 || g.cells_per_period % 4 != 0 {
            return Err(Error::Config("cells_per_period must be a positive multiple of 4".into()));
        }
        if g.cells_per_wavelength < 8 {
            return Err(Error::Config("cells_per_wavelength must be at least 8".into()));
        }
        if !(g.courant > 0.0 && g.courant <= 1.0) {
            return Err(Error::Config("courant must lie in (0,1]".into()));
        }
        if g.n_steps == 0 {
            return Err(Error::Config("n_steps must be positive".into()));
        }
        if !(self.source.f_op_hz > 0.0) {
            return Err(Error::Config("operating frequency must be positive".into()));
        }
        for (edge, kind) in [
            ("x_low", &self.boundaries.x_low),
            ("x_high", &self.boundaries.x_high),
            ("y_low", &self.boundaries.y_low),
            ("y_high", &self.boundaries.y_high),
        ] {
            match kind.as_str() {
                "pml" | "mur" | "pec" | "periodic" | "pmc" => {}
                other => {
                    return Err(Error::Config(format!(
                        "boundary {edge} has unknown kind {other:?} (pml|mur|pec|periodic|pmc)"
                    )))
                }
            }
        }
        if self.boundaries.x_low == "periodic" || self.boundaries.x_high == "periodic" {
            return Err(Error::Config("only the y axis may be periodic".into()));
        }
        if (self.boundaries.y_low == "periodic") != (self.boundaries.y_high == "periodic") {
            return Err(Error::Config("periodic y requires both y edges periodic".into()));
        }
        if self.hybrid.p_tf < 1 {
            return Err(Error::Config("p_tf must be at least 1".into()));
        }
        if self.hybrid.n_edge_schedule.is_empty() {
            return Err(Error::Config("n_edge_schedule must not be empty".into()));
        }
        if self.hybrid.n_edge_schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("n_edge_schedule must be strictly increasing".into()));
        }
        if !(self.hybrid.threshold > 0.0 && self.hybrid.threshold <= 1.0) {
            return Err(Error::Config("threshold must lie in (0,1]".into()));
        }
        if self.sampling.offsets_lambda.is_empty() {
            return Err(Error::Config("at least one sampling offset is required".into()));
        }
        if self.full.y_boundary == "periodic" {
            return Err(Error::Config("full mode cannot use periodic y boundaries".into()));
        }
        // probe columns must stay out of the east PML
        let nx = self.nx();
        for (tag, col) in self.probe_columns() {
            if col + self.layout.pml_cells + 1 >= nx {
                return Err(Error::Config(format!("probe {tag} at column {col} reaches the PML")));
            }
        }
        // metric window must stay inside the edge-run probe extent for the
        // smallest scheduled edge count
        let cpp = self.grid.cells_per_period;
        let n_e_min = self.hybrid.n_edge_schedule[0];
        let covered = (n_e_min * cpp + cpp / 4) + self.layout.empty_space_cells;
        if self.hybrid.p_tf * cpp > covered {
            return Err(Error::Config(format!(
                "metric window of {} cells exceeds the {} cells the smallest edge run covers past the TF/SF line",
                self.hybrid.p_tf * cpp,
                covered
            )));
        }
        Ok(())
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(&self.output.dir)
    }

    // ---- y layouts ----

    /// Unit-cell grid: one period plus the duplicated boundary node.
    pub fn unit_cell_grid(&self) -> Result<GridSpec> {
        make_grid(
            self.nx(),
            self.grid.cells_per_period + 1,
            self.delta(),
            self.delta(),
            self.grid.courant,
            self.grid.n_steps,
        )
    }

    /// Unit-cell materials: strips centered on the period boundary (rows 0
    /// and cpp), which the periodic wrap identifies.
    pub fn unit_cell_materials(&self) -> MaterialMap {
        let cpp = self.grid.cells_per_period;
        let mut m = MaterialMap::vacuum(self.nx(), cpp + 1);
        if self.structure.kind == StructureKind::Grating {
            let hh = self.strip_half_height();
            let (i0, i1) = (self.x_strip(), self.x_strip() + 1);
            m.set_pec_rect(i0, i1, 0, hh);
            m.set_pec_rect(i0, i1, cpp - hh, cpp);
        }
        m
    }

    /// Source row inside the unit cell (period center).
    pub fn unit_cell_source_row(&self) -> usize {
        self.grid.cells_per_period / 2
    }

    /// Full finite-structure layout for 2·(n_inner+n_edge)+1 unit cells.
    pub fn full_layout(&self, n_edge: usize) -> FullLayout {
        let cpp = self.grid.cells_per_period;
        let hh = self.strip_half_height();
        let h = self.hybrid.n_inner + n_edge;
        let half_extent = h * cpp + cpp / 2 + hh + self.layout.empty_space_cells + self.layout.pml_cells;
        let ny = 2 * half_extent + 1;
        let center = half_extent;
        let strip_centers: Vec<i64> = (0..=h as i64)
            .flat_map(|m| {
                let off = m * cpp as i64 + cpp as i64 / 2;
                [center as i64 - off, center as i64 + off]
            })
            .collect();
        FullLayout { ny, center_row: center, strip_centers, n_structure_half: h }
    }

    /// Edge-simulation layout for one side.
    ///
    /// For the high side the TF region extends upward from the line (the
    /// structure's upper edge lies inside it) and the SF buffer periods sit
    /// below; the low side is the mirror image.
    pub fn edge_layout(&self, side: EdgeSide, n_edge: usize) -> EdgeLayout {
        let cpp = self.grid.cells_per_period;
        let hh = self.strip_half_height();
        let b = self.hybrid.sf_buffer_cells;
        let sf_extent = self.layout.pml_cells + self.layout.sf_gap_cells + b * cpp + hh;
        let tf_extent = n_edge * cpp + hh + self.layout.empty_space_cells + self.layout.pml_cells;
        let ny = sf_extent + tf_extent + 1;
        let (line_row, sign) = match side {
            EdgeSide::High => (sf_extent, 1i64),
            EdgeSide::Low => (tf_extent, -1i64),
        };
        let strip_centers: Vec<i64> = (-(b as i64)..=n_edge as i64)
            .map(|m| line_row as i64 + sign * m * cpp as i64)
            .collect();
        EdgeLayout { ny, line_row, strip_centers, side, n_edge }
    }

    /// Materials for a finite layout given its strip centers.
    pub fn finite_materials(&self, ny: usize, strip_centers: &[i64]) -> MaterialMap {
        let mut m = MaterialMap::vacuum(self.nx(), ny);
        if self.structure.kind == StructureKind::Grating {
            let hh = self.strip_half_height() as i64;
            let (i0, i1) = (self.x_strip(), self.x_strip() + 1);
            for &c in strip_centers {
                let j0 = (c - hh).max(0) as usize;
                let j1 = (c + hh).min(ny as i64 - 1) as usize;
                m.set_pec_rect(i0, i1, j0, j1);
            }
        }
        m
    }
}

/// Which structure edge an edge simulation models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeSide {
    Low,
    High,
}

impl std::fmt::Display for EdgeSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EdgeSide::Low => write!(f, "low"),
            EdgeSide::High => write!(f, "high"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FullLayout {
    pub ny: usize,
    pub center_row: usize,
    pub strip_centers: Vec<i64>,
    pub n_structure_half: usize,
}

#[derive(Debug, Clone)]
pub struct EdgeLayout {
    pub ny: usize,
    /// TF/SF boundary row (Ez row index).
    pub line_row: usize,
    pub strip_centers: Vec<i64>,
    pub side: EdgeSide,
    pub n_edge: usize,
}
