//! Coherent scalar optics on a square sampling grid.
//!
//! All lengths are in units of the illumination wavelength. Fields are
//! stored row-major; pixel `(row, col)` sits at `(x, y) = (coord(col),
//! coord(row))` with the optical axis on pixel `(side/2, side/2)`.

mod detector;
mod elements;
mod fft;
mod field;
mod grid;
pub mod oracle;
mod propagation;

pub use detector::{Detector, DetectorLayout, Polarity};
pub use elements::{lens, AmplitudeMask, PhaseLayer};
pub use fft::Fft2;
pub use field::ComplexField;
pub use grid::GridSpec;
pub use num_complex::Complex64;
pub use propagation::{adjoint_propagate, propagate, transfer_function, Propagator};
