//! Array-scanning-method planning and reconstruction: midpoint Brillouin-zone
//! quadrature orders, k-sample lists (1–3 periodic axes), parallel sweep
//! execution, and the de-imaging sums that recover single-source fields from
//! phased unit-cell runs.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::constants::C0;
use crate::error::{Error, Result};

/// Midpoint quadrature order that keeps parasitic image fields out of a
/// region `a` meters to either side of the source for times up to `t0`:
/// M = ⌈(t0·c0 + a)/d⌉, at least 1.
pub fn plan_order(t0: f64, a: f64, d: f64) -> Result<usize> {
    if !(d > 0.0) {
        return Err(Error::Config(format!("period must be positive, got {d}")));
    }
    if t0 < 0.0 || a < 0.0 {
        return Err(Error::Config("horizon and region half-width must be nonnegative".into()));
    }
    let q = (t0 * C0 + a) / d;
    // tolerant ceil so exact integer quotients stay put
    let m = (q - q.abs() * 1e-12 - 1e-12).ceil() as i64;
    Ok(m.max(1) as usize)
}

/// The M midpoints of a uniform partition of [−π/d, π/d).
pub fn plan_k_samples(m: usize, d: f64) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::Config("quadrature order must be >= 1".into()));
    }
    if !(d > 0.0) {
        return Err(Error::Config(format!("period must be positive, got {d}")));
    }
    let dk = 2.0 * std::f64::consts::PI / (m as f64 * d);
    Ok((0..m)
        .map(|i| -std::f64::consts::PI / d + dk * (i as f64 + 0.5))
        .collect())
}

/// The H midpoints of a uniform partition of the half zone [0, π/d), used by
/// symmetry-exploiting sweeps. Together with their mirror images they form
/// the full-zone midpoint set of order 2H.
pub fn plan_half_zone_samples(h: usize, d: f64) -> Result<Vec<f64>> {
    if h == 0 {
        return Err(Error::Config("quadrature order must be >= 1".into()));
    }
    let dk = std::f64::consts::PI / (h as f64 * d);
    Ok((0..h).map(|i| dk * (i as f64 + 0.5)).collect())
}

/// One periodic axis of a quadrature plan.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisPlan {
    pub period: f64,
    pub order: usize,
    pub k_samples: Vec<f64>,
}

/// Product plan over 1–3 periodic axes.
#[derive(Debug, Clone, PartialEq)]
pub struct AsmPlan {
    pub axes: Vec<AxisPlan>,
    /// Region half-width a (m) the orders were derived for.
    pub region_half_width: f64,
    /// Time horizon t0 (s) the orders were derived for.
    pub horizon: f64,
}

impl AsmPlan {
    /// Total number of member simulations: the product of per-axis orders.
    pub fn simulation_count(&self) -> usize {
        self.axes.iter().map(|a| a.order).product()
    }

    /// Weight of one product-rule sample; the weights of all samples sum to
    /// one (d_x d_y d_z/(2π)³ times the product of the Δk).
    pub fn sample_weight(&self) -> f64 {
        1.0 / self.simulation_count() as f64
    }
}

/// Build a product plan from explicit per-axis orders and periods.
pub fn plan_3d(orders: &[usize], periods: &[f64]) -> Result<AsmPlan> {
    if orders.is_empty() || orders.len() > 3 || orders.len() != periods.len() {
        return Err(Error::Config(format!(
            "product plans take 1–3 axes, got {} orders and {} periods",
            orders.len(),
            periods.len()
        )));
    }
    let mut axes = Vec::new();
    for (&m, &d) in orders.iter().zip(periods) {
        axes.push(AxisPlan { period: d, order: m, k_samples: plan_k_samples(m, d)? });
    }
    Ok(AsmPlan { axes, region_half_width: 0.0, horizon: 0.0 })
}

/// Executable single-axis sweep description for the 2D engine.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub period: f64,
    /// Effective full-zone order (M, or 2H for half-zone sweeps).
    pub order: usize,
    /// Half-zone (symmetry-exploiting) sweep.
    pub half_zone: bool,
    /// The k values actually simulated, in plan order.
    pub k_samples: Vec<f64>,
    pub horizon: f64,
    pub region_half_width: f64,
}

impl SweepPlan {
    /// Full-zone sweep of the closed-form order.
    pub fn full(t0: f64, a: f64, d: f64) -> Result<Self> {
        let order = plan_order(t0, a, d)?;
        Ok(Self {
            period: d,
            order,
            half_zone: false,
            k_samples: plan_k_samples(order, d)?,
            horizon: t0,
            region_half_width: a,
        })
    }

    /// Half-zone sweep with H = ⌈M/2⌉ members, equivalent to a full-zone
    /// sweep of order 2H for mirror-symmetric sources.
    pub fn symmetric(t0: f64, a: f64, d: f64) -> Result<Self> {
        let m = plan_order(t0, a, d)?;
        let h = m.div_ceil(2);
        Ok(Self {
            period: d,
            order: 2 * h,
            half_zone: true,
            k_samples: plan_half_zone_samples(h, d)?,
            horizon: t0,
            region_half_width: a,
        })
    }

    /// Half-zone sweep with H = ⌈M/2⌉ members for an explicitly chosen
    /// full-zone order M.
    pub fn symmetric_with_order(order: usize, d: f64) -> Result<Self> {
        let h = order.div_ceil(2);
        Ok(Self {
            period: d,
            order: 2 * h,
            half_zone: true,
            k_samples: plan_half_zone_samples(h, d)?,
            horizon: 0.0,
            region_half_width: 0.0,
        })
    }

    /// Full-zone sweep of an explicitly chosen order.
    pub fn full_with_order(order: usize, d: f64) -> Result<Self> {
        Ok(Self {
            period: d,
            order,
            half_zone: false,
            k_samples: plan_k_samples(order, d)?,
            horizon: 0.0,
            region_half_width: 0.0,
        })
    }

    pub fn member_count(&self) -> usize {
        self.k_samples.len()
    }

    /// Largest cell offset |n| whose de-imaged fields the plan guarantees
    /// image-free through the horizon: images at |p−n| ≥ M stay invisible as
    /// long as |n| plus the probe span fits inside the planned region.
    pub fn max_guaranteed_offset(&self) -> usize {
        (self.region_half_width / self.period + 0.5).floor().max(0.0) as usize
    }
}

/// Output of one sweep member, tagged with its plan position.
#[derive(Debug, Clone)]
pub struct SweepResult<T> {
    pub index: usize,
    pub k: f64,
    pub output: T,
}

/// Run one member simulation per k sample on a bounded worker pool. Results
/// come back ordered by plan index regardless of completion order; any member
/// failure invalidates the sweep.
pub fn run_sweep<T, F>(plan: &SweepPlan, workers: usize, member: F) -> Result<Vec<SweepResult<T>>>
where
    T: Send,
    F: Fn(usize, f64) -> Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Simulation(format!("worker pool: {e}")))?;
    pool.install(|| {
        plan.k_samples
            .par_iter()
            .enumerate()
            .map(|(index, &k)| Ok(SweepResult { index, k, output: member(index, k)? }))
            .collect()
    })
}

/// Fixed pairwise-tree sum over ascending plan index, so reductions are
/// bitwise reproducible no matter how the sweep was scheduled.
fn tree_sum<V, F>(items: &[V], combine: &F) -> V
where
    V: Clone,
    F: Fn(&V, &V) -> V,
{
    match items.len() {
        0 => panic!("tree_sum over empty input"),
        1 => items[0].clone(),
        n => {
            let mid = n / 2;
            let left = tree_sum(&items[..mid], combine);
            let right = tree_sum(&items[mid..], combine);
            combine(&left, &right)
        }
    }
}

fn add_rows(a: &Vec<Complex64>, b: &Vec<Complex64>) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn add_mats(a: &Vec<Vec<Complex64>>, b: &Vec<Vec<Complex64>>) -> Vec<Vec<Complex64>> {
    a.iter().zip(b).map(|(x, y)| add_rows(x, y)).collect()
}

/// De-imaged time series at cell offset n from full-zone per-k series:
/// U_n ≈ (1/M)·Σ_m U_∞(·, k_m)·e^{+j·k_m·n·d}.
pub fn reconstruct(
    items: &[(f64, &Vec<Vec<Complex64>>)],
    n: i64,
    d: f64,
) -> Result<Vec<Vec<Complex64>>> {
    if items.is_empty() {
        return Err(Error::Config("reconstruct needs at least one sweep member".into()));
    }
    let len0 = items[0].1.len();
    if items.iter().any(|(_, m)| m.len() != len0) {
        return Err(Error::ShapeMismatch("sweep members have mismatched record lengths".into()));
    }
    let m_total = items.len() as f64;
    let weighted: Vec<Vec<Vec<Complex64>>> = items
        .iter()
        .map(|(k, mat)| {
            let w = Complex64::from_polar(1.0 / m_total, k * n as f64 * d);
            mat.iter().map(|row| row.iter().map(|v| v * w).collect()).collect()
        })
        .collect();
    Ok(tree_sum(&weighted, &add_mats))
}

/// Same weighting applied to per-k phasors (the single-bin DFT is linear, so
/// reconstructing phasors equals reconstructing series and then transforming).
pub fn reconstruct_phasors(
    items: &[(f64, &Vec<Complex64>)],
    n: i64,
    d: f64,
) -> Result<Vec<Complex64>> {
    if items.is_empty() {
        return Err(Error::Config("reconstruct needs at least one sweep member".into()));
    }
    let len0 = items[0].1.len();
    if items.iter().any(|(_, m)| m.len() != len0) {
        return Err(Error::ShapeMismatch("sweep members have mismatched lengths".into()));
    }
    let m_total = items.len() as f64;
    let weighted: Vec<Vec<Complex64>> = items
        .iter()
        .map(|(k, row)| {
            let w = Complex64::from_polar(1.0 / m_total, k * n as f64 * d);
            row.iter().map(|v| v * w).collect()
        })
        .collect();
    Ok(tree_sum(&weighted, &add_rows))
}

/// Mirror parity of the de-imaged source/structure about the center period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Symmetric half-zone reconstruction: combines values observed at +y
/// (`items_pos`) and at the mirrored −y position (`items_neg`), sampled on
/// the half-zone midpoints, halving the simulation count:
/// U_n ≈ (1/2H)·Σ_m [S⁺ e^{+j·k_m·n·d} ± S⁻ e^{−j·k_m·n·d}].
pub fn reconstruct_symmetric(
    items_pos: &[(f64, &Vec<Vec<Complex64>>)],
    items_neg: &[(f64, &Vec<Vec<Complex64>>)],
    n: i64,
    d: f64,
    parity: Parity,
) -> Result<Vec<Vec<Complex64>>> {
    if items_pos.len() != items_neg.len() || items_pos.is_empty() {
        return Err(Error::Config("symmetric reconstruction needs matching +y/−y sweeps".into()));
    }
    let m_total = 2.0 * items_pos.len() as f64;
    let sign = match parity {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
    };
    let weighted: Vec<Vec<Vec<Complex64>>> = items_pos
        .iter()
        .zip(items_neg)
        .map(|((k, pos), (k2, neg))| {
            debug_assert!((k - k2).abs() <= 1e-12 * k.abs().max(1.0));
            if pos.len() != neg.len() {
                return Err(Error::ShapeMismatch("mismatched +y/−y record lengths".into()));
            }
            let wp = Complex64::from_polar(1.0 / m_total, k * n as f64 * d);
            let wn = Complex64::from_polar(sign / m_total, -k * n as f64 * d);
            Ok(pos
                .iter()
                .zip(neg.iter())
                .map(|(rp, rn)| rp.iter().zip(rn).map(|(p, q)| p * wp + q * wn).collect())
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(tree_sum(&weighted, &add_mats))
}

/// Phasor-domain variant of [`reconstruct_symmetric`].
pub fn reconstruct_symmetric_phasors(
    items_pos: &[(f64, &Vec<Complex64>)],
    items_neg: &[(f64, &Vec<Complex64>)],
    n: i64,
    d: f64,
    parity: Parity,
) -> Result<Vec<Complex64>> {
    if items_pos.len() != items_neg.len() || items_pos.is_empty() {
        return Err(Error::Config("symmetric reconstruction needs matching +y/−y sweeps".into()));
    }
    let m_total = 2.0 * items_pos.len() as f64;
    let sign = match parity {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
    };
    let weighted: Vec<Vec<Complex64>> = items_pos
        .iter()
        .zip(items_neg)
        .map(|((k, pos), (_, neg))| {
            let wp = Complex64::from_polar(1.0 / m_total, k * n as f64 * d);
            let wn = Complex64::from_polar(sign / m_total, -k * n as f64 * d);
            pos.iter().zip(neg.iter()).map(|(p, q)| p * wp + q * wn).collect()
        })
        .collect();
    Ok(tree_sum(&weighted, &add_rows))
}
