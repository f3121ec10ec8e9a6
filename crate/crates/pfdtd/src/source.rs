//! Gaussian current sources, tangential-field line recording, and TF/SF
//! replay of recorded fields.
//!
//! Record/replay convention: sample s of a [`BoundaryRecord`] holds Ez on the
//! line at t = s·dt together with Hx on the adjacent half-cell row on the
//! scattered-field (interior) side at t = (s+1/2)·dt, i.e. exactly the pair
//! the TF/SF consistency corrections of step s consume.

use num_complex::Complex64;

use crate::constants::{C0, EPS0, MU0};
use crate::error::{Error, Result};
use crate::grid::{FieldState, GridSpec, MaterialMap};

/// Soft (additive) Gaussian electric current J_z at one Ez node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    pub i: usize,
    pub j: usize,
    pub amplitude: Complex64,
    /// Pulse center (s).
    pub pulse_delay: f64,
    /// Gaussian 1/e half width (s).
    pub pulse_width: f64,
}

impl SourceSpec {
    pub fn new(
        i: usize,
        j: usize,
        amplitude: Complex64,
        pulse_delay: f64,
        pulse_width: f64,
    ) -> Result<Self> {
        if !(pulse_width > 0.0) {
            return Err(Error::Config("pulse width must be positive".into()));
        }
        if pulse_delay < 3.0 * pulse_width {
            return Err(Error::Config(
                "pulse delay must be >= 3 pulse widths for a smooth turn-on".into(),
            ));
        }
        Ok(Self { i, j, amplitude, pulse_delay, pulse_width })
    }

    /// Baseband Gaussian whose amplitude spectrum is at −20 dB at 2·f_op,
    /// delayed by four widths. The spectrum at f_op itself stays above half
    /// of the dc peak.
    pub fn for_operating_frequency(i: usize, j: usize, amplitude: Complex64, f_op: f64) -> Self {
        let width = (10.0f64).ln().sqrt() / (2.0 * std::f64::consts::PI * f_op);
        Self { i, j, amplitude, pulse_delay: 4.0 * width, pulse_width: width }
    }

    pub fn waveform(&self, t: f64) -> Complex64 {
        let arg = (t - self.pulse_delay) / self.pulse_width;
        self.amplitude * (-arg * arg).exp()
    }
}

/// Add the source contribution for time t into ez.
pub fn inject_soft_source(
    state: &mut FieldState,
    grid: &GridSpec,
    materials: &MaterialMap,
    src: &SourceSpec,
    t: f64,
) -> Result<()> {
    if src.i >= grid.nx || src.j >= grid.ny {
        return Err(Error::Config(format!("source at ({}, {}) outside domain", src.i, src.j)));
    }
    let k = src.i * grid.ny + src.j;
    if materials.pec[k] {
        return Err(Error::Config(format!("source at ({}, {}) sits on a PEC node", src.i, src.j)));
    }
    *state.ez.at_mut(src.i, src.j) += src.waveform(t) * grid.dt / (EPS0 * materials.eps_r[k]);
    Ok(())
}

/// Start-time offset for recording/replay: waves need t_s = l/c0 to reach a
/// line l meters from the source, so earlier steps hold nothing of interest.
pub fn replay_start_offset(l: f64) -> Result<f64> {
    if l < 0.0 {
        return Err(Error::Config(format!("distance must be nonnegative, got {l}")));
    }
    Ok(l / C0)
}

/// Per-time-step tangential Ez/Hx samples along a constant-y line.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRecord {
    /// Node x positions along the line (m).
    pub x_positions: Vec<f64>,
    /// Ez on the line, indexed [sample][node].
    pub e_samples: Vec<Vec<Complex64>>,
    /// Hx on the adjacent SF-side half-cell row, indexed [sample][node].
    pub h_samples: Vec<Vec<Complex64>>,
    /// Samples before this time are implicitly zero (s).
    pub t_start: f64,
    pub dt: f64,
    /// Hash of the discretization and material layout along the line.
    pub grid_fingerprint: u64,
}

impl BoundaryRecord {
    pub fn new(x_positions: Vec<f64>, dt: f64, t_start: f64, grid_fingerprint: u64) -> Self {
        Self { x_positions, e_samples: Vec::new(), h_samples: Vec::new(), t_start, dt, grid_fingerprint }
    }

    pub fn len_steps(&self) -> usize {
        self.e_samples.len()
    }

    /// First step index the record covers: the smallest s with s·dt >= t_start.
    pub fn start_step(&self) -> usize {
        if self.t_start <= 0.0 {
            return 0;
        }
        let ratio = self.t_start / self.dt;
        (ratio - 1e-9).ceil().max(0.0) as usize
    }

    /// Samples consumed by step `s` of a replaying run, None outside coverage.
    pub fn sample_at_step(&self, s: usize) -> Option<(&[Complex64], &[Complex64])> {
        let idx = s.checked_sub(self.start_step())?;
        if idx >= self.e_samples.len() {
            return None;
        }
        Some((&self.e_samples[idx], &self.h_samples[idx]))
    }
}

/// FNV-1a over the discretization and the material layout along a line.
pub fn line_fingerprint(grid: &GridSpec, materials: &MaterialMap, j_line: usize) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(&grid.dx.to_le_bytes());
    eat(&grid.dy.to_le_bytes());
    eat(&grid.dt.to_le_bytes());
    eat(&(grid.nx as u64).to_le_bytes());
    for i in 0..grid.nx {
        let k = i * grid.ny + j_line;
        eat(&materials.eps_r[k].to_le_bytes());
        eat(&[materials.pec[k] as u8]);
    }
    h
}

/// Append the line's Ez and adjacent Hx values for the current step. A call
/// with t < t_start is a no-op (those samples are implicitly zero).
pub fn record_step(
    state: &FieldState,
    grid: &GridSpec,
    materials: &MaterialMap,
    j_line: usize,
    h_row: usize,
    record: &mut BoundaryRecord,
    t: f64,
) -> Result<()> {
    let expected = line_fingerprint(grid, materials, j_line);
    if record.grid_fingerprint != expected {
        return Err(Error::Format(format!(
            "record fingerprint {:#x} does not match line fingerprint {:#x}",
            record.grid_fingerprint, expected
        )));
    }
    if t + 1e-9 * grid.dt < record.t_start {
        return Ok(());
    }
    let e_row: Vec<Complex64> = (0..grid.nx).map(|i| state.ez.at(i, j_line)).collect();
    let h_row: Vec<Complex64> = (0..grid.nx).map(|i| state.hx.at(i, h_row)).collect();
    record.e_samples.push(e_row);
    record.h_samples.push(h_row);
    Ok(())
}

/// Which side of the boundary row carries the total field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfSide {
    /// Total field at j >= boundary_row (edge region extends upward).
    HighY,
    /// Total field at j <= boundary_row.
    LowY,
}

/// TF/SF replay line: recorded fields enter the total-field side of
/// `boundary_row` and cancel on the scattered-field side.
#[derive(Debug, Clone)]
pub struct TfsfSpec {
    pub boundary_row: usize,
    pub tf_side: TfSide,
    pub record: BoundaryRecord,
}

impl TfsfSpec {
    /// Validates staggering agreement against the replaying grid.
    pub fn validate(&self, grid: &GridSpec, materials: &MaterialMap, n_steps: usize) -> Result<()> {
        if self.record.dt != grid.dt {
            return Err(Error::Config(format!(
                "record dt {} must equal grid dt {} exactly",
                self.record.dt, grid.dt
            )));
        }
        if self.record.x_positions.len() != grid.nx {
            return Err(Error::ShapeMismatch(format!(
                "record line length {} vs grid nx {}",
                self.record.x_positions.len(),
                grid.nx
            )));
        }
        if self.boundary_row == 0 || self.boundary_row >= grid.ny - 1 {
            return Err(Error::Config("tfsf boundary row must be strictly inside the domain".into()));
        }
        let expected = line_fingerprint(grid, materials, self.boundary_row);
        if self.record.grid_fingerprint != expected {
            return Err(Error::Format(format!(
                "record fingerprint {:#x} does not match boundary row fingerprint {:#x}",
                self.record.grid_fingerprint, expected
            )));
        }
        let covered = self.record.start_step() + self.record.len_steps();
        if covered < n_steps {
            return Err(Error::Config(format!(
                "record covers {covered} steps but the run needs {n_steps}"
            )));
        }
        Ok(())
    }

    /// Consistency correction to the H update of step s: the SF-side Hx row
    /// referenced the total Ez on the line, so the incident part is removed.
    pub fn correct_h(&self, state: &mut FieldState, grid: &GridSpec, s: usize) {
        let Some((e_inc, _)) = self.record.sample_at_step(s) else { return };
        let c = grid.dt / (MU0 * grid.dy);
        match self.tf_side {
            TfSide::HighY => {
                let row = self.boundary_row - 1;
                for i in 0..grid.nx {
                    *state.hx.at_mut(i, row) += c * e_inc[i];
                }
            }
            TfSide::LowY => {
                let row = self.boundary_row;
                for i in 0..grid.nx {
                    *state.hx.at_mut(i, row) -= c * e_inc[i];
                }
            }
        }
    }

    /// Consistency correction to the E update of step s: the line Ez
    /// referenced the SF-side Hx row, so the incident part is added.
    pub fn correct_e(&self, state: &mut FieldState, grid: &GridSpec, materials: &MaterialMap, s: usize) {
        let Some((_, h_inc)) = self.record.sample_at_step(s) else { return };
        let j = self.boundary_row;
        match self.tf_side {
            TfSide::HighY => {
                for i in 0..grid.nx {
                    let cb = grid.dt / (EPS0 * materials.eps_r[i * grid.ny + j] * grid.dy);
                    *state.ez.at_mut(i, j) += cb * h_inc[i];
                }
            }
            TfSide::LowY => {
                for i in 0..grid.nx {
                    let cb = grid.dt / (EPS0 * materials.eps_r[i * grid.ny + j] * grid.dy);
                    *state.ez.at_mut(i, j) -= cb * h_inc[i];
                }
            }
        }
        materials.enforce_pec(&mut state.ez);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn gaussian_waveform_shape() {
        let src = SourceSpec::for_operating_frequency(1, 1, Complex64::new(1.0, 0.0), 12.0e9);
        assert!(src.pulse_delay >= 3.0 * src.pulse_width);
        // peak at the delay
        let peak = src.waveform(src.pulse_delay).norm();
        assert!((peak - 1.0).abs() < 1e-15);
        // tail far after the pulse
        let tail = src.waveform(src.pulse_delay + 7.0 * src.pulse_width).norm();
        assert!(tail < 1e-15);
        // analytic spectrum of exp(-(t/w)^2) is ∝ exp(-(π f w)^2):
        // at f_op it must be at least half of the dc peak
        let f_op = 12.0e9;
        let at_fop = (-(std::f64::consts::PI * f_op * src.pulse_width).powi(2)).exp();
        assert!(at_fop >= 0.5, "spectrum at f_op = {at_fop}");
        // and -20 dB at 2 f_op by construction
        let at_2fop = (-(std::f64::consts::PI * 2.0 * f_op * src.pulse_width).powi(2)).exp();
        assert!((at_2fop - 0.1).abs() < 1e-12);
    }

    #[test]
    fn source_validation() {
        assert!(SourceSpec::new(0, 0, Complex64::new(1.0, 0.0), 1.0, -1.0).is_err());
        assert!(SourceSpec::new(0, 0, Complex64::new(1.0, 0.0), 1.0, 0.5).is_err());
        assert!(SourceSpec::new(0, 0, Complex64::new(1.0, 0.0), 3.0, 1.0).is_ok());
    }

    #[test]
    fn soft_source_injects_into_ez() {
        let grid = make_grid(5, 5, 1e-3, 1e-3, 0.9, 4).unwrap();
        let mut materials = MaterialMap::vacuum(5, 5);
        let mut state = FieldState::new(&grid);
        let src = SourceSpec::new(2, 2, Complex64::new(1.0, 0.0), 3e-12, 1e-12).unwrap();
        inject_soft_source(&mut state, &grid, &materials, &src, src.pulse_delay).unwrap();
        let expected = grid.dt / EPS0;
        assert!((state.ez.at(2, 2).re - expected).abs() < 1e-25);

        materials.set_pec(2, 2);
        assert!(inject_soft_source(&mut state, &grid, &materials, &src, 0.0).is_err());
    }

    #[test]
    fn replay_offset() {
        assert_eq!(replay_start_offset(0.0).unwrap(), 0.0);
        let l = C0 * 1e-9;
        assert!((replay_start_offset(l).unwrap() - 1e-9).abs() < 1e-24);
        assert!(replay_start_offset(-1.0).is_err());
    }

    #[test]
    fn record_counts_and_skip() {
        let grid = make_grid(4, 6, 1e-3, 1e-3, 0.9, 8).unwrap();
        let materials = MaterialMap::vacuum(4, 6);
        let state = FieldState::new(&grid);
        let fp = line_fingerprint(&grid, &materials, 3);
        let mut rec = BoundaryRecord::new(vec![0.0; 4], grid.dt, 2.0 * grid.dt, fp);
        for s in 0..5usize {
            record_step(&state, &grid, &materials, 3, 2, &mut rec, s as f64 * grid.dt).unwrap();
        }
        // steps 0 and 1 fall before t_start
        assert_eq!(rec.len_steps(), 3);
        assert_eq!(rec.start_step(), 2);
        assert!(rec.sample_at_step(1).is_none());
        assert!(rec.sample_at_step(2).is_some());
        assert!(rec.sample_at_step(5).is_none());
        assert!(rec.e_samples.iter().flatten().all(|v| v.norm() == 0.0));

        // fingerprint mismatch detected
        let mut bad = BoundaryRecord::new(vec![0.0; 4], grid.dt, 0.0, fp ^ 1);
        assert!(record_step(&state, &grid, &materials, 3, 2, &mut bad, 0.0).is_err());
    }

    #[test]
    fn tfsf_validation_and_zero_record() {
        let grid = make_grid(5, 8, 1e-3, 1e-3, 0.9, 4).unwrap();
        let materials = MaterialMap::vacuum(5, 8);
        let fp = line_fingerprint(&grid, &materials, 4);
        let mut rec = BoundaryRecord::new(vec![0.0; 5], grid.dt, 0.0, fp);
        for _ in 0..4 {
            rec.e_samples.push(vec![Complex64::new(0.0, 0.0); 5]);
            rec.h_samples.push(vec![Complex64::new(0.0, 0.0); 5]);
        }
        let spec = TfsfSpec { boundary_row: 4, tf_side: TfSide::HighY, record: rec.clone() };
        spec.validate(&grid, &materials, 4).unwrap();
        // exhausted record rejected
        assert!(spec.validate(&grid, &materials, 5).is_err());
        // dt mismatch rejected
        let mut wrong = spec.clone();
        wrong.record.dt *= 2.0;
        assert!(wrong.validate(&grid, &materials, 4).is_err());

        // all-zero record leaves the state untouched
        let mut state = FieldState::new(&grid);
        *state.ez.at_mut(2, 4) = Complex64::new(1.0, 2.0);
        let before = state.clone();
        spec.correct_h(&mut state, &grid, 0);
        spec.correct_e(&mut state, &grid, &materials, 0);
        assert_eq!(state.ez, before.ez);
        assert_eq!(state.hx, before.hx);
    }
}
