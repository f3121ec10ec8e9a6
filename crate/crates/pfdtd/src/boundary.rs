//! Boundary treatments applied around the core update: Bloch-phased periodic
//! wrap in y, convolutional PML, first-order Mur, and PMC symmetry planes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{C0, EPS0, ETA0, MU0};
use crate::error::{Error, Result};
use crate::grid::{FieldState, Grid2, GridSpec, MaterialMap};

/// Domain edge selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Edge {
    XLow,
    XHigh,
    YLow,
    YHigh,
}

/// Bloch phase for the periodic y axis: fields one period up carry the
/// factor e^{−j·k·d}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochPhase {
    /// Wavenumber, wrapped into the first Brillouin zone [−π/d, π/d).
    pub k: f64,
    /// Period (m).
    pub d: f64,
    /// e^{−j·k·d}.
    pub phase: Complex64,
}

impl BlochPhase {
    /// Wraps k by multiples of 2π/d into [−π/d, π/d).
    pub fn new(k: f64, d: f64) -> Result<Self> {
        if !(d > 0.0) {
            return Err(Error::Config(format!("period must be positive, got {d}")));
        }
        let zone = 2.0 * std::f64::consts::PI / d;
        let mut kw = k - zone * ((k + zone / 2.0) / zone).floor();
        if kw >= zone / 2.0 {
            kw -= zone;
        }
        let phase = Complex64::from_polar(1.0, -kw * d);
        Ok(Self { k: kw, d, phase })
    }
}

/// Set low-edge Ez from the high edge times e^{+j·k·d}. Plain assignment, so
/// the Floquet relation holds bitwise on the assigned nodes.
pub fn apply_pbc_e(state: &mut FieldState, bloch: &BlochPhase) -> Result<()> {
    if state.hx_aux.is_none() {
        return Err(Error::Config("apply_pbc_e on a state without a periodic y axis".into()));
    }
    let ny = state.ez.ny;
    let fwd = bloch.phase.conj(); // e^{+jkd}
    for i in 0..state.ez.nx {
        let col = state.ez.col_mut(i);
        col[0] = col[ny - 1] * fwd;
    }
    Ok(())
}

/// Set the auxiliary Hx row half a cell outside the high edge from the first
/// interior Hx row times e^{−j·k·d}.
pub fn apply_pbc_h(state: &mut FieldState, bloch: &BlochPhase) -> Result<()> {
    let nx = state.ez.nx;
    let phase = bloch.phase;
    let first_row: Vec<Complex64> = (0..nx).map(|i| state.hx.at(i, 0)).collect();
    let aux = state
        .hx_aux
        .as_mut()
        .ok_or_else(|| Error::Config("apply_pbc_h on a state without a periodic y axis".into()))?;
    for (a, h) in aux.iter_mut().zip(first_row) {
        *a = h * phase;
    }
    Ok(())
}

/// CPML layer parameters: polynomial grading with a target reflection at
/// normal incidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmlSpec {
    /// Layer thickness in cells.
    pub thickness: usize,
    /// Polynomial grading order.
    pub grading_order: f64,
    /// Design reflection coefficient (amplitude), e.g. 1e-8.
    pub target_reflection: f64,
}

impl PmlSpec {
    pub fn new(thickness: usize, grading_order: f64, target_reflection: f64) -> Result<Self> {
        if thickness < 1 {
            return Err(Error::Config("pml thickness must be >= 1".into()));
        }
        if grading_order < 1.0 {
            return Err(Error::Config("pml grading order must be >= 1".into()));
        }
        if !(target_reflection > 0.0 && target_reflection < 1.0) {
            return Err(Error::Config("pml target reflection must lie in (0,1)".into()));
        }
        Ok(Self { thickness, grading_order, target_reflection })
    }

    fn sigma_max(&self, delta: f64) -> f64 {
        -(self.grading_order + 1.0) * self.target_reflection.ln()
            / (2.0 * ETA0 * self.thickness as f64 * delta)
    }
}

impl Default for PmlSpec {
    fn default() -> Self {
        Self { thickness: 40, grading_order: 3.0, target_reflection: 1e-8 }
    }
}

/// Recursive-convolution coefficients for one band, indexed by global node
/// index within the band.
#[derive(Debug, Clone)]
struct BandCoeffs {
    start: usize,
    b: Vec<f64>,
    a: Vec<f64>,
}

impl BandCoeffs {
    /// depth(idx) in [0,1]: 1 at the outer wall, 0 at the interface.
    fn build(start: usize, count: usize, spec: &PmlSpec, delta: f64, dt: f64, depth: impl Fn(usize) -> f64) -> Self {
        let sigma_max = spec.sigma_max(delta);
        let mut b = Vec::with_capacity(count);
        let mut a = Vec::with_capacity(count);
        for n in 0..count {
            let rho = depth(n).clamp(0.0, 1.0);
            let sigma = sigma_max * rho.powf(spec.grading_order);
            let bb = (-sigma * dt / EPS0).exp();
            b.push(bb);
            a.push(if sigma > 0.0 { bb - 1.0 } else { 0.0 });
        }
        Self { start, b, a }
    }
}

/// Convolutional PML state for up to four domain edges. Corrections are
/// applied after the respective curl update of each half step; a zero-field
/// state stays exactly zero because all psi accumulators start at zero.
#[derive(Debug, Clone)]
pub struct Cpml {
    spec: PmlSpec,
    x_low: Option<CpmlBandX>,
    x_high: Option<CpmlBandX>,
    y_low: Option<CpmlBandY>,
    y_high: Option<CpmlBandY>,
    /// Ez rows the x-band corrections span: the edge rows join in when a
    /// periodic wrap or a PMC plane updates them.
    e_row_lo: usize,
    e_row_hi: usize,
}

/// Which y-edge Ez rows receive E updates beyond the plain interior
/// (periodic high edge, PMC planes), so PML bands cover them too.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EdgeRowSpan {
    pub include_y_low: bool,
    pub include_y_high: bool,
}

#[derive(Debug, Clone)]
struct CpmlBandX {
    e: BandCoeffs,
    h: BandCoeffs,
    psi_e: Grid2, // psi for d(hy)/dx per E column in the band
    psi_h: Grid2, // psi for d(ez)/dx per hy column in the band
}

#[derive(Debug, Clone)]
struct CpmlBandY {
    e: BandCoeffs,
    h: BandCoeffs,
    psi_e: Grid2, // psi for d(hx)/dy per E row in the band
    psi_h: Grid2, // psi for d(ez)/dy per hx row in the band
}

impl Cpml {
    pub fn new(grid: &GridSpec, spec: PmlSpec, edges: &[Edge], span: EdgeRowSpan) -> Result<Self> {
        let t = spec.thickness;
        if 2 * t >= grid.nx.min(grid.ny) && !edges.is_empty() {
            // allow tall-thin unit cells: only the axes actually lined matter
            let needs_x = edges.iter().any(|e| matches!(e, Edge::XLow | Edge::XHigh));
            let needs_y = edges.iter().any(|e| matches!(e, Edge::YLow | Edge::YHigh));
            if (needs_x && 2 * t >= grid.nx) || (needs_y && 2 * t >= grid.ny) {
                return Err(Error::Config(format!(
                    "pml thickness {t} too large for grid {}x{}",
                    grid.nx, grid.ny
                )));
            }
        }
        if (span.include_y_low && edges.contains(&Edge::YLow))
            || (span.include_y_high && edges.contains(&Edge::YHigh))
        {
            return Err(Error::Config("pml may not overlap a periodic or PMC y edge".into()));
        }
        let mut cpml = Self {
            spec,
            x_low: None,
            x_high: None,
            y_low: None,
            y_high: None,
            e_row_lo: if span.include_y_low { 0 } else { 1 },
            e_row_hi: if span.include_y_high { grid.ny } else { grid.ny - 1 },
        };
        for edge in edges {
            match edge {
                Edge::XLow => {
                    let e = BandCoeffs::build(1, t.saturating_sub(1), &spec, grid.dx, grid.dt, |n| {
                        (t - (n + 1)) as f64 / t as f64
                    });
                    let h = BandCoeffs::build(0, t, &spec, grid.dx, grid.dt, |n| {
                        (t as f64 - n as f64 - 0.5) / t as f64
                    });
                    cpml.x_low = Some(CpmlBandX {
                        psi_e: Grid2::zeros(e.b.len(), grid.ny),
                        psi_h: Grid2::zeros(h.b.len(), grid.ny),
                        e,
                        h,
                    });
                }
                Edge::XHigh => {
                    let wall = grid.nx - 1;
                    let e = BandCoeffs::build(wall - t + 1, t.saturating_sub(1), &spec, grid.dx, grid.dt, move |n| {
                        (n + 1) as f64 / t as f64
                    });
                    let h = BandCoeffs::build(wall - t, t, &spec, grid.dx, grid.dt, move |n| {
                        (n as f64 + 0.5) / t as f64
                    });
                    cpml.x_high = Some(CpmlBandX {
                        psi_e: Grid2::zeros(e.b.len(), grid.ny),
                        psi_h: Grid2::zeros(h.b.len(), grid.ny),
                        e,
                        h,
                    });
                }
                Edge::YLow => {
                    let e = BandCoeffs::build(1, t.saturating_sub(1), &spec, grid.dy, grid.dt, |n| {
                        (t - (n + 1)) as f64 / t as f64
                    });
                    let h = BandCoeffs::build(0, t, &spec, grid.dy, grid.dt, |n| {
                        (t as f64 - n as f64 - 0.5) / t as f64
                    });
                    cpml.y_low = Some(CpmlBandY {
                        psi_e: Grid2::zeros(grid.nx, e.b.len()),
                        psi_h: Grid2::zeros(grid.nx, h.b.len()),
                        e,
                        h,
                    });
                }
                Edge::YHigh => {
                    let wall = grid.ny - 1;
                    let e = BandCoeffs::build(wall - t + 1, t.saturating_sub(1), &spec, grid.dy, grid.dt, move |n| {
                        (n + 1) as f64 / t as f64
                    });
                    let h = BandCoeffs::build(wall - t, t, &spec, grid.dy, grid.dt, move |n| {
                        (n as f64 + 0.5) / t as f64
                    });
                    cpml.y_high = Some(CpmlBandY {
                        psi_e: Grid2::zeros(grid.nx, e.b.len()),
                        psi_h: Grid2::zeros(grid.nx, h.b.len()),
                        e,
                        h,
                    });
                }
            }
        }
        Ok(cpml)
    }

    pub fn spec(&self) -> PmlSpec {
        self.spec
    }

    /// psi update + field correction after the H curl update.
    pub fn correct_h(&mut self, state: &mut FieldState, grid: &GridSpec) {
        let ch = grid.dt / MU0;
        let inv_dx = 1.0 / grid.dx;
        let inv_dy = 1.0 / grid.dy;

        for band in [&mut self.x_low, &mut self.x_high].into_iter().flatten() {
            // hy columns in the band accumulate d(ez)/dx
            for (n, (&b, &a)) in band.h.b.iter().zip(&band.h.a).enumerate() {
                let i = band.h.start + n;
                for j in 0..grid.ny {
                    let de = (state.ez.at(i + 1, j) - state.ez.at(i, j)) * inv_dx;
                    let psi = *band.psi_h.at_mut(n, j) * b + de * a;
                    *band.psi_h.at_mut(n, j) = psi;
                    *state.hy.at_mut(i, j) += ch * psi;
                }
            }
        }
        for band in [&mut self.y_low, &mut self.y_high].into_iter().flatten() {
            // hx rows in the band accumulate d(ez)/dy
            for (n, (&b, &a)) in band.h.b.iter().zip(&band.h.a).enumerate() {
                let j = band.h.start + n;
                for i in 0..grid.nx {
                    let de = (state.ez.at(i, j + 1) - state.ez.at(i, j)) * inv_dy;
                    let psi = *band.psi_h.at_mut(i, n) * b + de * a;
                    *band.psi_h.at_mut(i, n) = psi;
                    *state.hx.at_mut(i, j) -= ch * psi;
                }
            }
        }
    }

    /// psi update + field correction after the E curl update.
    pub fn correct_e(&mut self, state: &mut FieldState, grid: &GridSpec, materials: &MaterialMap) {
        let inv_dx = 1.0 / grid.dx;
        let inv_dy = 1.0 / grid.dy;
        let (j_bot, j_top) = (self.e_row_lo, self.e_row_hi);

        for band in [&mut self.x_low, &mut self.x_high].into_iter().flatten() {
            for (n, (&b, &a)) in band.e.b.iter().zip(&band.e.a).enumerate() {
                let i = band.e.start + n;
                for j in j_bot..j_top {
                    let dh = (state.hy.at(i, j) - state.hy.at(i - 1, j)) * inv_dx;
                    let psi = *band.psi_e.at_mut(n, j) * b + dh * a;
                    *band.psi_e.at_mut(n, j) = psi;
                    let ce = grid.dt / (EPS0 * materials.eps_r[i * grid.ny + j]);
                    *state.ez.at_mut(i, j) += ce * psi;
                }
            }
        }
        for band in [&mut self.y_low, &mut self.y_high].into_iter().flatten() {
            for (n, (&b, &a)) in band.e.b.iter().zip(&band.e.a).enumerate() {
                let j = band.e.start + n;
                for i in 1..grid.nx - 1 {
                    let dh = (state.hx.at(i, j) - state.hx.at(i, j - 1)) * inv_dy;
                    let psi = *band.psi_e.at_mut(i, n) * b + dh * a;
                    *band.psi_e.at_mut(i, n) = psi;
                    let ce = grid.dt / (EPS0 * materials.eps_r[i * grid.ny + j]);
                    *state.ez.at_mut(i, j) -= ce * psi;
                }
            }
        }
        // PEC inclusions keep priority over PML corrections
        materials.enforce_pec(&mut state.ez);
    }
}

/// First-order Mur absorbing update for selected edges. Corner nodes shared
/// by two Mur faces take the average of the two one-way updates.
#[derive(Debug, Clone)]
pub struct MurSet {
    edges: Vec<Edge>,
    prev_ez: Grid2,
    coef_x: f64,
    coef_y: f64,
}

impl MurSet {
    pub fn new(grid: &GridSpec, edges: Vec<Edge>) -> Self {
        let cx = (C0 * grid.dt - grid.dx) / (C0 * grid.dt + grid.dx);
        let cy = (C0 * grid.dt - grid.dy) / (C0 * grid.dt + grid.dy);
        Self { edges, prev_ez: Grid2::zeros(grid.nx, grid.ny), coef_x: cx, coef_y: cy }
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Advance boundary Ez by the one-way wave equation, then retain the
    /// current field for the next step. Call after the E update.
    pub fn apply(&mut self, state: &mut FieldState, grid: &GridSpec) {
        let (nx, ny) = (grid.nx, grid.ny);
        let mut updates: Vec<(usize, usize, Complex64)> = Vec::new();

        for edge in &self.edges {
            match edge {
                Edge::XLow => {
                    for j in 0..ny {
                        let v = self.prev_ez.at(1, j)
                            + self.coef_x * (state.ez.at(1, j) - self.prev_ez.at(0, j));
                        updates.push((0, j, v));
                    }
                }
                Edge::XHigh => {
                    for j in 0..ny {
                        let v = self.prev_ez.at(nx - 2, j)
                            + self.coef_x * (state.ez.at(nx - 2, j) - self.prev_ez.at(nx - 1, j));
                        updates.push((nx - 1, j, v));
                    }
                }
                Edge::YLow => {
                    for i in 0..nx {
                        let v = self.prev_ez.at(i, 1)
                            + self.coef_y * (state.ez.at(i, 1) - self.prev_ez.at(i, 0));
                        updates.push((i, 0, v));
                    }
                }
                Edge::YHigh => {
                    for i in 0..nx {
                        let v = self.prev_ez.at(i, ny - 2)
                            + self.coef_y * (state.ez.at(i, ny - 2) - self.prev_ez.at(i, ny - 1));
                        updates.push((i, ny - 1, v));
                    }
                }
            }
        }

        // First pass writes, corner nodes hit twice get the average.
        let mut seen: Vec<(usize, usize)> = Vec::new();
        for (i, j, v) in updates {
            if let Some(_) = seen.iter().find(|&&(a, b)| a == i && b == j) {
                let cur = state.ez.at(i, j);
                *state.ez.at_mut(i, j) = (cur + v) * 0.5;
            } else {
                *state.ez.at_mut(i, j) = v;
                seen.push((i, j));
            }
        }

        self.prev_ez = state.ez.clone();
    }
}

/// PMC symmetry plane on a y edge: the edge Ez row is updated with the
/// mirror image of the adjacent Hx row (tangential H vanishes on the plane,
/// Ez is mirror even).
pub fn apply_pmc(
    state: &mut FieldState,
    grid: &GridSpec,
    materials: &MaterialMap,
    edge: Edge,
) -> Result<()> {
    let (nx, ny) = (grid.nx, grid.ny);
    let inv_dx = 1.0 / grid.dx;
    let inv_dy = 1.0 / grid.dy;
    match edge {
        Edge::YLow => {
            for i in 1..nx - 1 {
                let curl = (state.hy.at(i, 0) - state.hy.at(i - 1, 0)) * inv_dx
                    - (2.0 * state.hx.at(i, 0)) * inv_dy;
                let cb = grid.dt / (EPS0 * materials.eps_r[i * ny]);
                *state.ez.at_mut(i, 0) += cb * curl;
            }
        }
        Edge::YHigh => {
            let j = ny - 1;
            for i in 1..nx - 1 {
                let curl = (state.hy.at(i, j) - state.hy.at(i - 1, j)) * inv_dx
                    + (2.0 * state.hx.at(i, j - 1)) * inv_dy;
                let cb = grid.dt / (EPS0 * materials.eps_r[i * ny + j]);
                *state.ez.at_mut(i, j) += cb * curl;
            }
        }
        _ => {
            return Err(Error::Config("pmc symmetry plane supported on y edges only".into()));
        }
    }
    materials.enforce_pec(&mut state.ez);
    Ok(())
}
