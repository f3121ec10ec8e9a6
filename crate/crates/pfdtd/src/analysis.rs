//! Single-frequency discrete Fourier analysis of probe series.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex time series sampled along a probe line.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSeries {
    /// Positions along the line (m), strictly increasing.
    pub positions: Vec<f64>,
    /// values[step][position].
    pub values: Vec<Vec<Complex64>>,
    pub dt: f64,
}

impl ProbeSeries {
    pub fn new(positions: Vec<f64>, dt: f64) -> Result<Self> {
        if positions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("probe positions must be strictly increasing".into()));
        }
        Ok(Self { positions, values: Vec::new(), dt })
    }

    pub fn push(&mut self, row: Vec<Complex64>) -> Result<()> {
        if row.len() != self.positions.len() {
            return Err(Error::ShapeMismatch(format!(
                "probe row length {} vs {} positions",
                row.len(),
                self.positions.len()
            )));
        }
        self.values.push(row);
        Ok(())
    }
}

/// One complex amplitude per position at a single frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasorLine {
    pub positions: Vec<f64>,
    pub amplitude: Vec<Complex64>,
    pub frequency: f64,
}

impl PhasorLine {
    pub fn max_magnitude(&self) -> f64 {
        self.amplitude.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

fn check_below_nyquist(f: f64, dt: f64) -> Result<()> {
    let nyquist = 0.5 / dt;
    if !(f > 0.0) || f >= nyquist {
        return Err(Error::Config(format!(
            "analysis frequency {f} Hz must lie in (0, {nyquist}) Hz"
        )));
    }
    Ok(())
}

/// Single-bin DFT: per position, Σ_n values[n]·e^{−j2πf·n·dt}·dt.
pub fn dft_at(series: &ProbeSeries, f: f64) -> Result<PhasorLine> {
    check_below_nyquist(f, series.dt)?;
    let mut acc = vec![Complex64::new(0.0, 0.0); series.positions.len()];
    for (n, row) in series.values.iter().enumerate() {
        let tw = Complex64::from_polar(
            series.dt,
            -2.0 * std::f64::consts::PI * f * n as f64 * series.dt,
        );
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v * tw;
        }
    }
    Ok(PhasorLine { positions: series.positions.clone(), amplitude: acc, frequency: f })
}

/// Streaming single-bin DFT accumulated during a run. Produces the same sum
/// as [`dft_at`] over the stored series, term for term.
#[derive(Debug, Clone)]
pub struct DftAccumulator {
    positions: Vec<f64>,
    frequency: f64,
    dt: f64,
    acc: Vec<Complex64>,
    n: usize,
}

impl DftAccumulator {
    pub fn new(positions: Vec<f64>, dt: f64, frequency: f64) -> Result<Self> {
        check_below_nyquist(frequency, dt)?;
        let len = positions.len();
        Ok(Self { positions, frequency, dt, acc: vec![Complex64::new(0.0, 0.0); len], n: 0 })
    }

    pub fn push(&mut self, row: &[Complex64]) -> Result<()> {
        if row.len() != self.acc.len() {
            return Err(Error::ShapeMismatch(format!(
                "dft row length {} vs {} accumulators",
                row.len(),
                self.acc.len()
            )));
        }
        let tw = Complex64::from_polar(
            self.dt,
            -2.0 * std::f64::consts::PI * self.frequency * self.n as f64 * self.dt,
        );
        for (a, v) in self.acc.iter_mut().zip(row) {
            *a += v * tw;
        }
        self.n += 1;
        Ok(())
    }

    pub fn finish(self) -> PhasorLine {
        PhasorLine { positions: self.positions, amplitude: self.acc, frequency: self.frequency }
    }
}

/// Divide magnitudes by the maximum magnitude, preserving phases.
pub fn normalize_line(line: &PhasorLine) -> Result<PhasorLine> {
    let max = line.max_magnitude();
    if max == 0.0 {
        return Err(Error::Config("cannot normalize an all-zero line".into()));
    }
    Ok(PhasorLine {
        positions: line.positions.clone(),
        amplitude: line.amplitude.iter().map(|v| v / max).collect(),
        frequency: line.frequency,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(positions: usize, n_steps: usize, dt: f64, f: f64, phase: f64) -> ProbeSeries {
        let mut s = ProbeSeries::new((0..positions).map(|i| i as f64).collect(), dt).unwrap();
        for n in 0..n_steps {
            let t = n as f64 * dt;
            let v = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * f * t + phase);
            s.push(vec![v; positions]).unwrap();
        }
        s
    }

    #[test]
    fn zero_series_gives_zero_phasor() {
        let mut s = ProbeSeries::new(vec![0.0, 1.0], 1e-12).unwrap();
        for _ in 0..16 {
            s.push(vec![Complex64::new(0.0, 0.0); 2]).unwrap();
        }
        let line = dft_at(&s, 1e9).unwrap();
        assert!(line.amplitude.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn pure_exponential_integer_periods() {
        // closed-form geometric sum: amplitude = total duration
        let dt = 1e-12;
        let f = 1.0 / (100.0 * dt); // 100 samples per period
        let n_steps = 800; // 8 whole periods
        let s = tone(3, n_steps, dt, f, 0.0);
        let line = dft_at(&s, f).unwrap();
        let expected = n_steps as f64 * dt;
        for v in &line.amplitude {
            assert!((v.norm() - expected).abs() / expected < 1e-9);
            assert!(v.im.abs() / expected < 1e-9);
        }
    }

    #[test]
    fn two_tone_leakage_matches_dirichlet_kernel() {
        let dt = 1e-12;
        let f1 = 2.0e9;
        let f2 = 3.1e9;
        let n_steps = 1000;
        let s = tone(1, n_steps, dt, f2, 0.4);
        let line = dft_at(&s, f1).unwrap();
        // analytic geometric sum of e^{j2π(f2-f1)n dt}·dt
        let dw = 2.0 * std::f64::consts::PI * (f2 - f1) * dt;
        let expected = dt
            * ((dw * n_steps as f64 / 2.0).sin() / (dw / 2.0).sin()).abs();
        assert!((line.amplitude[0].norm() - expected).abs() / expected < 1e-9);
    }

    #[test]
    fn linearity_and_time_shift() {
        let dt = 2e-12;
        let f = 1.3e9;
        let a = tone(2, 400, dt, 0.9e9, 0.1);
        let b = tone(2, 400, dt, 2.2e9, -0.7);
        let mut sum = ProbeSeries::new(a.positions.clone(), dt).unwrap();
        for (ra, rb) in a.values.iter().zip(&b.values) {
            sum.push(ra.iter().zip(rb).map(|(x, y)| x + y).collect()).unwrap();
        }
        let la = dft_at(&a, f).unwrap();
        let lb = dft_at(&b, f).unwrap();
        let ls = dft_at(&sum, f).unwrap();
        for k in 0..2 {
            assert!((ls.amplitude[k] - la.amplitude[k] - lb.amplitude[k]).norm() < 1e-20);
        }

        // shifting the series by m samples multiplies the phasor by e^{−j2πf·mΔt}
        let m = 7usize;
        let mut shifted = ProbeSeries::new(a.positions.clone(), dt).unwrap();
        for _ in 0..m {
            shifted.push(vec![Complex64::new(0.0, 0.0); 2]).unwrap();
        }
        for row in &a.values {
            shifted.push(row.clone()).unwrap();
        }
        let lsh = dft_at(&shifted, f).unwrap();
        let factor = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * m as f64 * dt);
        for k in 0..2 {
            let err = (lsh.amplitude[k] - la.amplitude[k] * factor).norm()
                / la.amplitude[k].norm();
            assert!(err < 1e-9);
        }
    }

    #[test]
    fn streaming_matches_post_hoc_within_1e12() {
        let dt = 1e-12;
        let s = tone(4, 600, dt, 2.7e9, 1.1);
        let mut acc = DftAccumulator::new(s.positions.clone(), dt, 1.9e9).unwrap();
        for row in &s.values {
            acc.push(row).unwrap();
        }
        let streamed = acc.finish();
        let post = dft_at(&s, 1.9e9).unwrap();
        for (a, b) in streamed.amplitude.iter().zip(&post.amplitude) {
            assert!((a - b).norm() <= 1e-12 * b.norm().max(1e-300));
        }
    }

    #[test]
    fn nyquist_guard() {
        let s = tone(1, 8, 1e-12, 1e9, 0.0);
        assert!(dft_at(&s, 0.5e12).is_err());
        assert!(dft_at(&s, 0.49e12).is_ok());
    }

    #[test]
    fn normalize_line_properties() {
        let line = PhasorLine {
            positions: vec![0.0, 1.0, 2.0],
            amplitude: vec![
                Complex64::new(0.3, 0.4),
                Complex64::new(-2.0, 0.0),
                Complex64::new(0.0, 1.0),
            ],
            frequency: 1.0,
        };
        let n = normalize_line(&line).unwrap();
        assert!((n.max_magnitude() - 1.0).abs() < 1e-15);
        // phases preserved
        for (a, b) in line.amplitude.iter().zip(&n.amplitude) {
            assert!((a.arg() - b.arg()).abs() < 1e-15);
        }
        // scale invariance of output magnitudes
        let scaled = PhasorLine {
            positions: line.positions.clone(),
            amplitude: line.amplitude.iter().map(|v| v * Complex64::new(0.0, -5.5)).collect(),
            frequency: 1.0,
        };
        let ns = normalize_line(&scaled).unwrap();
        for (a, b) in n.amplitude.iter().zip(&ns.amplitude) {
            assert!((a.norm() - b.norm()).abs() < 1e-12);
        }
        let zero = PhasorLine { positions: vec![0.0], amplitude: vec![Complex64::new(0.0, 0.0)], frequency: 1.0 };
        assert!(normalize_line(&zero).is_err());
    }
}
