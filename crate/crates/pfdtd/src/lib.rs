//! 2D complex-field FDTD engine for finite periodic structures.
//!
//! The engine combines Bloch-phased periodic unit-cell simulations, the
//! array scanning method that removes the image sources those boundaries
//! imply, TF/SF replay of the de-imaged fields into independent edge
//! simulations, field merging, and an L2 convergence metric with an
//! iterative edge-growth search.

pub mod analysis;
pub mod asm;
pub mod boundary;
pub mod commands;
pub mod constants;
pub mod error;
pub mod fdtd;
pub mod grid;
pub mod hybrid;
pub mod io;
pub mod scenario;
pub mod sim;
pub mod source;

pub use error::{Error, Result};

// re-exported so downstream crates name the same complex type
pub use num_complex;
