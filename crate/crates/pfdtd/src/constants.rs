//! Physical constants, defined mutually consistently so that
//! `C0 == 1/sqrt(MU0*EPS0)` holds exactly in the update coefficients.

/// Speed of light in vacuum (m/s).
pub const C0: f64 = 299_792_458.0;

/// Permeability of free space (H/m), classical 4π×10⁻⁷ value.
pub const MU0: f64 = 4.0e-7 * std::f64::consts::PI;

/// Permittivity of free space (F/m), derived as 1/(μ₀c₀²).
pub const EPS0: f64 = 1.0 / (MU0 * C0 * C0);

/// Impedance of free space (Ω).
pub const ETA0: f64 = MU0 * C0;
