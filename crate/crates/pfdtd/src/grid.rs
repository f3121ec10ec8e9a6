//! Grid geometry, staggered field storage and material maps for the 2D
//! transverse-electric (Ez, Hx, Hy) Yee scheme.
//!
//! Staggering: Ez lives on integer nodes (i, j), Hx half a cell up in y at
//! (i, j+1/2), Hy half a cell right in x at (i+1/2, j). Time staggering:
//! H leads E by half a step after the H update of a step.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::C0;
use crate::error::{Error, Result};

/// Geometry, discretization and time-step metadata for one rectangular domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Ez node count along x.
    pub nx: usize,
    /// Ez node count along y.
    pub ny: usize,
    /// Cell size along x (m).
    pub dx: f64,
    /// Cell size along y (m).
    pub dy: f64,
    /// Time step (s), always `courant / (c0·sqrt(1/dx² + 1/dy²))`.
    pub dt: f64,
    /// Courant number in (0, 1].
    pub courant: f64,
    /// Total number of time steps a run is configured for.
    pub n_steps: usize,
}

/// Build a grid with the time step set by the 2D stability bound.
pub fn make_grid(
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    courant: f64,
    n_steps: usize,
) -> Result<GridSpec> {
    if nx < 1 || ny < 1 {
        return Err(Error::Config(format!("grid needs nx,ny >= 1, got {nx}x{ny}")));
    }
    if !(dx > 0.0) || !(dy > 0.0) {
        return Err(Error::Config(format!("cell sizes must be positive, got dx={dx}, dy={dy}")));
    }
    if !(courant > 0.0 && courant <= 1.0) {
        return Err(Error::Config(format!("courant must lie in (0,1], got {courant}")));
    }
    let dt = courant / (C0 * (1.0 / (dx * dx) + 1.0 / (dy * dy)).sqrt());
    Ok(GridSpec { nx, ny, dx, dy, dt, courant, n_steps })
}

/// Dense complex 2D array with (i, j) indexing, j fastest in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2 {
    pub nx: usize,
    pub ny: usize,
    data: Vec<Complex64>,
}

impl Grid2 {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self { nx, ny, data: vec![Complex64::new(0.0, 0.0); nx * ny] }
    }

    #[inline(always)]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        debug_assert!(i < self.nx && j < self.ny);
        self.data[i * self.ny + j]
    }

    #[inline(always)]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Complex64 {
        debug_assert!(i < self.nx && j < self.ny);
        &mut self.data[i * self.ny + j]
    }

    /// Contiguous column j = 0..ny at fixed i.
    #[inline(always)]
    pub fn col(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.ny..(i + 1) * self.ny]
    }

    #[inline(always)]
    pub fn col_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.data[i * self.ny..(i + 1) * self.ny]
    }

    pub fn fill_zero(&mut self) {
        self.data.fill(Complex64::new(0.0, 0.0));
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }
}

/// Staggered complex field arrays at one time level.
///
/// `hx_aux`, when allocated, is the extra Hx row half a cell outside the high
/// y edge used by periodic runs (see [`crate::boundary::BlochPhase`]).
#[derive(Debug, Clone)]
pub struct FieldState {
    /// Ez on nx × ny nodes.
    pub ez: Grid2,
    /// Hx on nx × (ny−1) nodes, offset +dy/2.
    pub hx: Grid2,
    /// Hy on (nx−1) × ny nodes, offset +dx/2.
    pub hy: Grid2,
    /// Auxiliary Hx row at j = ny−1/2 for periodic y runs (length nx).
    pub hx_aux: Option<Vec<Complex64>>,
    /// Time index: ez is at `step_index·dt`, hx/hy at `(step_index−1/2)·dt`.
    pub step_index: usize,
}

impl FieldState {
    pub fn new(grid: &GridSpec) -> Self {
        Self {
            ez: Grid2::zeros(grid.nx, grid.ny),
            hx: Grid2::zeros(grid.nx, grid.ny.saturating_sub(1)),
            hy: Grid2::zeros(grid.nx.saturating_sub(1), grid.ny),
            hx_aux: None,
            step_index: 0,
        }
    }

    /// Allocate the auxiliary Hx row used by periodic-y runs.
    pub fn with_periodic_y(mut self) -> Self {
        self.hx_aux = Some(vec![Complex64::new(0.0, 0.0); self.ez.nx]);
        self
    }

    pub fn check_shapes(&self, grid: &GridSpec) -> Result<()> {
        let ok = self.ez.nx == grid.nx
            && self.ez.ny == grid.ny
            && self.hx.nx == grid.nx
            && self.hx.ny == grid.ny - 1
            && self.hy.nx == grid.nx - 1
            && self.hy.ny == grid.ny;
        if !ok {
            return Err(Error::ShapeMismatch(format!(
                "state shapes ez={}x{} hx={}x{} hy={}x{} vs grid {}x{}",
                self.ez.nx, self.ez.ny, self.hx.nx, self.hx.ny, self.hy.nx, self.hy.ny,
                grid.nx, grid.ny
            )));
        }
        Ok(())
    }
}

/// Relative permittivity and PEC mask per Ez node.
#[derive(Debug, Clone)]
pub struct MaterialMap {
    pub nx: usize,
    pub ny: usize,
    /// eps_r ≥ 1 per node.
    pub eps_r: Vec<f64>,
    /// Ez forced to exactly zero where true.
    pub pec: Vec<bool>,
}

impl MaterialMap {
    pub fn vacuum(nx: usize, ny: usize) -> Self {
        Self { nx, ny, eps_r: vec![1.0; nx * ny], pec: vec![false; nx * ny] }
    }

    #[inline(always)]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    pub fn set_pec(&mut self, i: usize, j: usize) {
        let k = self.idx(i, j);
        self.pec[k] = true;
    }

    /// Mark a node rectangle (inclusive bounds) as PEC.
    pub fn set_pec_rect(&mut self, i0: usize, i1: usize, j0: usize, j1: usize) {
        for i in i0..=i1.min(self.nx - 1) {
            for j in j0..=j1.min(self.ny - 1) {
                self.set_pec(i, j);
            }
        }
    }

    pub fn set_eps_rect(&mut self, i0: usize, i1: usize, j0: usize, j1: usize, eps_r: f64) {
        for i in i0..=i1.min(self.nx - 1) {
            for j in j0..=j1.min(self.ny - 1) {
                let k = self.idx(i, j);
                self.eps_r[k] = eps_r;
            }
        }
    }

    pub fn check(&self, grid: &GridSpec) -> Result<()> {
        if self.nx != grid.nx || self.ny != grid.ny {
            return Err(Error::ShapeMismatch(format!(
                "material map {}x{} vs grid {}x{}",
                self.nx, self.ny, grid.nx, grid.ny
            )));
        }
        if self.eps_r.iter().any(|&e| e < 1.0 || !e.is_finite()) {
            return Err(Error::Config("eps_r must be >= 1 everywhere".into()));
        }
        Ok(())
    }

    /// Force Ez to exactly zero on masked nodes.
    pub fn enforce_pec(&self, ez: &mut Grid2) {
        for i in 0..self.nx {
            let col = ez.col_mut(i);
            let base = i * self.ny;
            for (j, v) in col.iter_mut().enumerate() {
                if self.pec[base + j] {
                    *v = Complex64::new(0.0, 0.0);
                }
            }
        }
    }
}
