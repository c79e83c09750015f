use std::f64::consts::PI;

use num_complex::Complex64;

use super::{ComplexField, GridSpec};
use crate::{Error, Result};

/// Phase-only transmission `exp(i·phase)`; phase in radians, unwrapped.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseLayer {
    grid: GridSpec,
    phase: Vec<f64>,
}

impl PhaseLayer {
    pub fn new(grid: GridSpec, phase: Vec<f64>) -> Result<Self> {
        if phase.len() != grid.len() {
            return Err(Error::invalid(format!(
                "phase layer has {} samples, grid {grid} needs {}",
                phase.len(),
                grid.len()
            )));
        }
        if phase.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("phase layer".into()));
        }
        Ok(Self { grid, phase })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            phase: vec![0.0; grid.len()],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn phase(&self) -> &[f64] {
        &self.phase
    }

    pub fn phase_mut(&mut self) -> &mut [f64] {
        &mut self.phase
    }

    pub fn transmission(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.phase.iter().map(|&p| Complex64::from_polar(1.0, p))
    }

    pub fn apply(&self, field: &ComplexField) -> Result<ComplexField> {
        self.grid.ensure_same(field.grid())?;
        let mut out = field.clone();
        for (v, t) in out.values_mut().iter_mut().zip(self.transmission()) {
            *v *= t;
        }
        Ok(out)
    }
}

/// Real transmission in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeMask {
    grid: GridSpec,
    amplitude: Vec<f64>,
}

impl AmplitudeMask {
    pub fn new(grid: GridSpec, amplitude: Vec<f64>) -> Result<Self> {
        if amplitude.len() != grid.len() {
            return Err(Error::invalid(format!(
                "mask has {} samples, grid {grid} needs {}",
                amplitude.len(),
                grid.len()
            )));
        }
        if let Some(bad) = amplitude.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::invalid(format!("mask amplitude {bad} outside [0, 1]")));
        }
        Ok(Self { grid, amplitude })
    }

    pub fn ones(grid: GridSpec) -> Self {
        Self {
            grid,
            amplitude: vec![1.0; grid.len()],
        }
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> f64) -> Result<Self> {
        let n = grid.side();
        let mut amplitude = Vec::with_capacity(grid.len());
        for row in 0..n {
            let y = grid.coord(row);
            for col in 0..n {
                amplitude.push(f(grid.coord(col), y));
            }
        }
        Self::new(grid, amplitude)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn amplitude(&self) -> &[f64] {
        &self.amplitude
    }

    /// `1 − a` elementwise.
    pub fn complement(&self) -> Self {
        Self {
            grid: self.grid,
            amplitude: self.amplitude.iter().map(|a| 1.0 - a).collect(),
        }
    }

    pub fn apply(&self, field: &ComplexField) -> Result<ComplexField> {
        self.grid.ensure_same(field.grid())?;
        let mut out = field.clone();
        for (v, a) in out.values_mut().iter_mut().zip(&self.amplitude) {
            *v *= *a;
        }
        Ok(out)
    }

    /// Fraction of a uniform field's power that passes, restricted to
    /// pixels where `support` is nonzero.
    pub fn transmitted_fraction(&self, support: &AmplitudeMask) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (a, s) in self.amplitude.iter().zip(&support.amplitude) {
            if *s > 0.0 {
                num += a * a;
                den += 1.0;
            }
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }
}

/// Thin lens `exp(−iπ(x²+y²)/f)` behind a circular aperture.
pub fn lens(
    focal_length: f64,
    aperture_diameter: f64,
    grid: GridSpec,
) -> Result<(PhaseLayer, AmplitudeMask)> {
    if !(focal_length.is_finite() && focal_length > 0.0) {
        return Err(Error::invalid(format!("focal length {focal_length}")));
    }
    if !(aperture_diameter.is_finite() && aperture_diameter > 0.0) {
        return Err(Error::invalid(format!("lens diameter {aperture_diameter}")));
    }
    if aperture_diameter > grid.extent() {
        return Err(Error::Geometry(format!(
            "lens diameter {aperture_diameter}λ exceeds grid extent {}λ",
            grid.extent()
        )));
    }
    let n = grid.side();
    let radius = aperture_diameter / 2.0;
    let mut phase = Vec::with_capacity(grid.len());
    let mut amp = Vec::with_capacity(grid.len());
    for row in 0..n {
        let y = grid.coord(row);
        for col in 0..n {
            let x = grid.coord(col);
            let r2 = x * x + y * y;
            phase.push(-PI * r2 / focal_length);
            amp.push(if r2.sqrt() <= radius { 1.0 } else { 0.0 });
        }
    }
    Ok((PhaseLayer::new(grid, phase)?, AmplitudeMask::new(grid, amp)?))
}
