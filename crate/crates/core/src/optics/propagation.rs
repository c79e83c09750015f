use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use super::{ComplexField, Fft2, GridSpec};
use crate::{Error, Result};

/// Free-space transfer function in unshifted DFT order.
///
/// `H(fx, fy) = exp(i·2π·d·sqrt(1 − fx² − fy²))` for propagating frequencies
/// and `0` for evanescent ones (`fx² + fy² ≥ 1`, wavelength units).
pub fn transfer_function(grid: &GridSpec, distance: f64) -> Result<Vec<Complex64>> {
    if !distance.is_finite() {
        return Err(Error::invalid(format!("propagation distance {distance}")));
    }
    if distance < 0.0 {
        return Err(Error::invalid(format!(
            "propagation distance must be >= 0, got {distance}"
        )));
    }
    let n = grid.side();
    let mut h = Vec::with_capacity(grid.len());
    for row in 0..n {
        let fy = grid.frequency(row);
        for col in 0..n {
            let fx = grid.frequency(col);
            let arg = 1.0 - fx * fx - fy * fy;
            h.push(if arg > 0.0 {
                Complex64::from_polar(1.0, 2.0 * PI * distance * arg.sqrt())
            } else {
                Complex64::new(0.0, 0.0)
            });
        }
    }
    Ok(h)
}

/// Angular-spectrum propagator with a precomputed kernel.
///
/// Immutable after construction and cheap to clone; share freely across
/// threads.
#[derive(Clone, Debug)]
pub struct Propagator {
    grid: GridSpec,
    distance: f64,
    // kernel grid; twice the field grid when padding is on
    work: GridSpec,
    kernel: Arc<Vec<Complex64>>,
    fft: Fft2,
}

impl Propagator {
    pub fn new(grid: GridSpec, distance: f64) -> Result<Self> {
        Self::build(grid, grid, distance)
    }

    /// Propagates on a 2× zero-padded grid and crops back, suppressing the
    /// periodic wrap of the plain DFT operator.
    pub fn padded(grid: GridSpec, distance: f64) -> Result<Self> {
        Self::build(grid, grid.resized(grid.side() * 2)?, distance)
    }

    fn build(grid: GridSpec, work: GridSpec, distance: f64) -> Result<Self> {
        let kernel = transfer_function(&work, distance)?;
        Ok(Self {
            grid,
            distance,
            work,
            kernel: Arc::new(kernel),
            fft: Fft2::new(work.side()),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn is_padded(&self) -> bool {
        self.work != self.grid
    }

    pub fn propagate(&self, field: &ComplexField) -> Result<ComplexField> {
        self.apply(field, false)
    }

    /// Adjoint operator: propagation with the conjugated transfer function.
    pub fn adjoint(&self, field: &ComplexField) -> Result<ComplexField> {
        self.apply(field, true)
    }

    fn apply(&self, field: &ComplexField, conjugate: bool) -> Result<ComplexField> {
        self.grid.ensure_same(field.grid())?;
        let mut work = if self.is_padded() {
            field.embed_center(self.work)?
        } else {
            field.clone()
        };
        let data = work.values_mut();
        // the kernel depends on fx² + fy² only, so it is transpose-symmetric
        self.fft.forward_transposed(data);
        if conjugate {
            for (v, h) in data.iter_mut().zip(self.kernel.iter()) {
                *v *= h.conj();
            }
        } else {
            for (v, h) in data.iter_mut().zip(self.kernel.iter()) {
                *v *= h;
            }
        }
        self.fft.inverse_transposed(data);
        if self.is_padded() {
            work.crop_center(self.grid)
        } else {
            Ok(work)
        }
    }
}

/// One-shot propagation; builds the kernel on every call.
pub fn propagate(field: &ComplexField, distance: f64) -> Result<ComplexField> {
    Propagator::new(*field.grid(), distance)?.propagate(field)
}

pub fn adjoint_propagate(cotangent: &ComplexField, distance: f64) -> Result<ComplexField> {
    Propagator::new(*cotangent.grid(), distance)?.adjoint(cotangent)
}
