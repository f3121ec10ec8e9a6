//! Yee curl-update kernels for the complex-valued 2D TE field set.
//!
//! Both the real and imaginary parts of every array are stepped by the same
//! leapfrog kernels, so phased (Bloch) runs and plain real runs share one
//! code path. Update order within a step is H then E; the driver in
//! [`crate::sim`] interleaves boundary and source hooks between the two.

use crate::constants::{EPS0, MU0};
use crate::error::Result;
use crate::grid::{FieldState, Grid2, GridSpec, MaterialMap};

/// Advance hx, hy one half step from the curl of ez. Ez and the step index
/// are untouched.
pub fn step_h(state: &mut FieldState, grid: &GridSpec) -> Result<()> {
    state.check_shapes(grid)?;
    let ch_y = grid.dt / (MU0 * grid.dy);
    let ch_x = grid.dt / (MU0 * grid.dx);
    let (nx, ny) = (grid.nx, grid.ny);

    // hx[i, j+1/2] -= dt/(mu0*dy) * (ez[i,j+1] - ez[i,j])
    for i in 0..nx {
        let ez_col = state.ez.col(i);
        let hx_col = state.hx.col_mut(i);
        for j in 0..ny - 1 {
            hx_col[j] -= ch_y * (ez_col[j + 1] - ez_col[j]);
        }
    }
    // hy[i+1/2, j] += dt/(mu0*dx) * (ez[i+1,j] - ez[i,j])
    for i in 0..nx - 1 {
        let (left, right) = state.ez.as_slice().split_at((i + 1) * ny);
        let ez_i = &left[i * ny..];
        let ez_ip = &right[..ny];
        let hy_col = state.hy.col_mut(i);
        for j in 0..ny {
            hy_col[j] += ch_x * (ez_ip[j] - ez_i[j]);
        }
    }
    Ok(())
}

/// Advance interior ez one step from the curl of H, scaled by 1/(ε₀·eps_r),
/// force PEC nodes to exactly zero, and increment the step index.
///
/// The high-edge row j = ny−1 is updated only when the auxiliary Hx row of a
/// periodic-y run is allocated; otherwise domain edges stay at zero (hard
/// walls unless a boundary treatment overwrites them).
pub fn step_e(state: &mut FieldState, grid: &GridSpec, materials: &MaterialMap) -> Result<()> {
    state.check_shapes(grid)?;
    materials.check(grid)?;
    let (nx, ny) = (grid.nx, grid.ny);
    let inv_dx = 1.0 / grid.dx;
    let inv_dy = 1.0 / grid.dy;

    for i in 1..nx - 1 {
        let (hy_left, hy_right) = state.hy.as_slice().split_at(i * ny);
        let hy_im = &hy_left[(i - 1) * ny..];
        let hy_i = &hy_right[..ny];
        let hx_col = state.hx.col(i);
        let ez_col = state.ez.col_mut(i);
        let eps_base = i * ny;
        for j in 1..ny - 1 {
            let curl = (hy_i[j] - hy_im[j]) * inv_dx - (hx_col[j] - hx_col[j - 1]) * inv_dy;
            ez_col[j] += grid.dt / (EPS0 * materials.eps_r[eps_base + j]) * curl;
        }
    }

    // High edge with PBC auxiliary Hx row half a cell outside the domain.
    if let Some(aux) = &state.hx_aux {
        let j = ny - 1;
        for i in 1..nx - 1 {
            let curl = (state.hy.at(i, j) - state.hy.at(i - 1, j)) * inv_dx
                - (aux[i] - state.hx.at(i, j - 1)) * inv_dy;
            let cb = grid.dt / (EPS0 * materials.eps_r[i * ny + j]);
            *state.ez.at_mut(i, j) += cb * curl;
        }
    }

    materials.enforce_pec(&mut state.ez);
    state.step_index += 1;
    Ok(())
}

/// Number of E-node updates `step_e` performs per step on this grid.
pub fn e_updates_per_step(grid: &GridSpec, periodic_y: bool) -> u64 {
    let interior = (grid.nx - 2) as u64 * (grid.ny - 2) as u64;
    if periodic_y { interior + (grid.nx - 2) as u64 } else { interior }
}

/// Number of H-node updates `step_h` performs per step on this grid.
pub fn h_updates_per_step(grid: &GridSpec) -> u64 {
    grid.nx as u64 * (grid.ny - 1) as u64 + (grid.nx - 1) as u64 * grid.ny as u64
}

/// Discrete field energy with the H contribution synchronized to the E time
/// level via the product of the two adjacent half-step values. Exactly
/// conserved by the lossless leapfrog scheme up to roundoff.
pub fn field_energy_synchronized(
    ez: &Grid2,
    h_prev: (&Grid2, &Grid2),
    h_next: (&Grid2, &Grid2),
    grid: &GridSpec,
    materials: &MaterialMap,
) -> f64 {
    let cell = grid.dx * grid.dy;
    let mut e_sum = 0.0;
    for i in 0..ez.nx {
        let col = ez.col(i);
        for (j, v) in col.iter().enumerate() {
            e_sum += EPS0 * materials.eps_r[i * ez.ny + j] * v.norm_sqr();
        }
    }
    let mut h_sum = 0.0;
    for (prev, next) in [(h_prev.0, h_next.0), (h_prev.1, h_next.1)] {
        for (a, b) in prev.as_slice().iter().zip(next.as_slice()) {
            h_sum += MU0 * (a.re * b.re + a.im * b.im);
        }
    }
    0.5 * cell * (e_sum + h_sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use num_complex::Complex64;

    fn setup(nx: usize, ny: usize) -> (GridSpec, FieldState, MaterialMap) {
        let grid = make_grid(nx, ny, 1e-3, 1e-3, 0.9, 16).unwrap();
        let state = FieldState::new(&grid);
        let materials = MaterialMap::vacuum(nx, ny);
        (grid, state, materials)
    }

    #[test]
    fn zero_ez_leaves_h_unchanged() {
        let (grid, mut state, _) = setup(6, 5);
        let before = state.clone();
        step_h(&mut state, &grid).unwrap();
        assert_eq!(state.hx, before.hx);
        assert_eq!(state.hy, before.hy);
        assert_eq!(state.ez, before.ez);
    }

    #[test]
    fn uniform_ez_has_zero_curl() {
        let (grid, mut state, _) = setup(6, 5);
        for v in state.ez.as_mut_slice() {
            *v = Complex64::new(3.0, -1.0);
        }
        step_h(&mut state, &grid).unwrap();
        assert!(state.hx.as_slice().iter().all(|v| v.norm() == 0.0));
        assert!(state.hy.as_slice().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn single_impulse_feeds_four_neighbors() {
        // hand-evaluated curl stencil around one excited node
        let (grid, mut state, _) = setup(7, 7);
        let amp = Complex64::new(1.0, 0.5);
        *state.ez.at_mut(3, 3) = amp;
        step_h(&mut state, &grid).unwrap();

        let cy = grid.dt / (MU0 * grid.dy);
        let cx = grid.dt / (MU0 * grid.dx);
        assert_eq!(state.hx.at(3, 3), cy * amp); // -(ez[3,4]-ez[3,3]) with ez[3,4]=0
        assert_eq!(state.hx.at(3, 2), -cy * amp);
        assert_eq!(state.hy.at(3, 3), -cx * amp);
        assert_eq!(state.hy.at(2, 3), cx * amp);
        // all other H nodes untouched
        let touched = 4;
        let nonzero: usize = state
            .hx
            .as_slice()
            .iter()
            .chain(state.hy.as_slice())
            .filter(|v| v.norm() != 0.0)
            .count();
        assert_eq!(nonzero, touched);
    }

    #[test]
    fn zero_h_leaves_ez_unchanged_except_pec() {
        let (grid, mut state, mut materials) = setup(5, 5);
        *state.ez.at_mut(2, 2) = Complex64::new(1.0, 0.0);
        *state.ez.at_mut(1, 1) = Complex64::new(4.0, 0.0);
        materials.set_pec(1, 1);
        step_e(&mut state, &grid, &materials).unwrap();
        assert_eq!(state.ez.at(2, 2), Complex64::new(1.0, 0.0));
        assert_eq!(state.ez.at(1, 1), Complex64::new(0.0, 0.0));
        assert_eq!(state.step_index, 1);
    }

    #[test]
    fn eps_doubling_halves_increment() {
        let (grid, mut state, materials) = setup(5, 5);
        *state.hx.at_mut(2, 2) = Complex64::new(1.0, 0.0);
        let mut doubled = MaterialMap::vacuum(5, 5);
        doubled.eps_r[2 * 5 + 2] = 2.0;

        let mut s1 = state.clone();
        step_e(&mut s1, &grid, &materials).unwrap();
        let mut s2 = state.clone();
        step_e(&mut s2, &grid, &doubled).unwrap();
        let inc1 = s1.ez.at(2, 2);
        let inc2 = s2.ez.at(2, 2);
        assert!((inc2 - inc1 * 0.5).norm() < 1e-30);
    }

    #[test]
    fn ez_increment_is_1d_difference_of_hy() {
        // hy varying in x only, hx zero: hand-evaluate on a 3x3 interior
        let (grid, mut state, materials) = setup(4, 3);
        let profile = [1.0, 3.0, -2.0]; // hy[i+1/2, j] = profile[i]
        for i in 0..3 {
            for j in 0..3 {
                *state.hy.at_mut(i, j) = Complex64::new(profile[i], 0.0);
            }
        }
        step_e(&mut state, &grid, &materials).unwrap();
        for i in 1..3 {
            for j in 1..2 {
                let expected = grid.dt / EPS0 * (profile[i] - profile[i - 1]) / grid.dx;
                assert!((state.ez.at(i, j) - Complex64::new(expected, 0.0)).norm() < 1e-25);
            }
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let (grid, _, _) = setup(5, 5);
        let other = make_grid(6, 5, 1e-3, 1e-3, 0.9, 16).unwrap();
        let mut state = FieldState::new(&other);
        assert!(step_h(&mut state, &grid).is_err());
        let materials = MaterialMap::vacuum(5, 5);
        assert!(step_e(&mut state, &grid, &materials).is_err());
    }
}
