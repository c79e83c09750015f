use num_complex::Complex64;

use super::GridSpec;
use crate::{Error, Result};

/// Complex scalar amplitude sampled on a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "field has {} samples, grid {grid} needs {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite("field samples".into()));
        }
        Ok(Self { grid, values })
    }

    /// Skips the finiteness scan; callers guarantee the length.
    pub(crate) fn from_raw(grid: GridSpec, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::from_raw(grid, vec![Complex64::new(0.0, 0.0); grid.len()])
    }

    pub fn uniform(grid: GridSpec, value: Complex64) -> Self {
        Self::from_raw(grid, vec![value; grid.len()])
    }

    /// Builds a field from `f(x, y)` evaluated at pixel centres.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> Complex64) -> Result<Self> {
        let n = grid.side();
        let mut values = Vec::with_capacity(grid.len());
        for row in 0..n {
            let y = grid.coord(row);
            for col in 0..n {
                values.push(f(grid.coord(col), y));
            }
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.values[row * self.grid.side() + col]
    }

    /// Optical power `Σ|u|²·pitch²`.
    pub fn power(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.pixel_area()
    }

    /// Unweighted `Σ|u|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Standard inner product `⟨self, other⟩ = Σ conj(self)·other`.
    pub fn inner(&self, other: &ComplexField) -> Result<Complex64> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|v| v * factor).collect())
    }

    pub fn add(&self, other: &ComplexField) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self::from_raw(
            self.grid,
            self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        ))
    }

    /// `‖self − other‖ / ‖other‖`, or the absolute norm when `other` is zero.
    pub fn relative_l2_error(&self, reference: &ComplexField) -> Result<f64> {
        self.grid.ensure_same(&reference.grid)?;
        let diff: f64 = self
            .values
            .iter()
            .zip(&reference.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let scale = reference.norm_sqr();
        Ok(if scale > 0.0 {
            (diff / scale).sqrt()
        } else {
            diff.sqrt()
        })
    }

    /// Copies the centred `side × side` window of this field onto `grid`.
    pub fn crop_center(&self, grid: GridSpec) -> Result<Self> {
        let big = self.grid.side();
        let small = grid.side();
        if small > big || grid.pitch() != self.grid.pitch() {
            return Err(Error::GridMismatch {
                expected: format!("a window of {}", self.grid),
                found: grid.to_string(),
            });
        }
        let off = (big - small) / 2;
        let mut out = Vec::with_capacity(grid.len());
        for row in 0..small {
            let start = (row + off) * big + off;
            out.extend_from_slice(&self.values[start..start + small]);
        }
        Ok(Self::from_raw(grid, out))
    }

    /// Zero-pads this field, centred, onto the larger `grid`. Adjoint of
    /// [`crop_center`](Self::crop_center).
    pub fn embed_center(&self, grid: GridSpec) -> Result<Self> {
        let big = grid.side();
        let small = self.grid.side();
        if small > big || grid.pitch() != self.grid.pitch() {
            return Err(Error::GridMismatch {
                expected: format!("a grid enclosing {}", self.grid),
                found: grid.to_string(),
            });
        }
        let off = (big - small) / 2;
        let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
        for row in 0..small {
            let start = (row + off) * big + off;
            out[start..start + small].copy_from_slice(&self.values[row * small..(row + 1) * small]);
        }
        Ok(Self::from_raw(grid, out))
    }
}
