use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Square 2-D FFT built from row transforms and in-place transposes.
///
/// The forward transform is unnormalised; the inverse divides by `side²`.
#[derive(Clone)]
pub struct Fft2 {
    side: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fft2").field("side", &self.side).finish()
    }
}

impl Fft2 {
    pub fn new(side: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            side,
            forward: planner.plan_fft_forward(side),
            inverse: planner.plan_fft_inverse(side),
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.pass(self.forward.as_ref(), data, true);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.pass(self.inverse.as_ref(), data, true);
        self.normalise(data);
    }

    /// Forward transform left in transposed order. Pointwise products with
    /// a transpose-symmetric spectrum can be taken directly on the result.
    pub(crate) fn forward_transposed(&self, data: &mut [Complex64]) {
        self.pass(self.forward.as_ref(), data, false);
    }

    /// Inverse of a spectrum held in transposed order.
    pub(crate) fn inverse_transposed(&self, data: &mut [Complex64]) {
        self.pass(self.inverse.as_ref(), data, false);
        self.normalise(data);
    }

    fn normalise(&self, data: &mut [Complex64]) {
        let norm = 1.0 / (self.side * self.side) as f64;
        for v in data.iter_mut() {
            *v *= norm;
        }
    }

    fn pass(&self, fft: &dyn Fft<f64>, data: &mut [Complex64], restore: bool) {
        assert_eq!(data.len(), self.side * self.side, "fft buffer size");
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        // rustfft transforms each consecutive `side`-long chunk
        fft.process_with_scratch(data, &mut scratch);
        transpose(data, self.side);
        fft.process_with_scratch(data, &mut scratch);
        if restore {
            transpose(data, self.side);
        }
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in r + 1..n {
            data.swap(r * n + c, c * n + r);
        }
    }
}
