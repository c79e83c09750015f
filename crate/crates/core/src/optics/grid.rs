use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Square sampling grid. Lengths are in wavelengths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct GridSpec {
    side: usize,
    pitch: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    side: usize,
    pitch: f64,
}

impl TryFrom<RawGrid> for GridSpec {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        GridSpec::new(raw.side, raw.pitch)
    }
}

impl From<GridSpec> for RawGrid {
    fn from(g: GridSpec) -> Self {
        RawGrid {
            side: g.side,
            pitch: g.pitch,
        }
    }
}

impl GridSpec {
    /// Neuron pitch used throughout: half a wavelength.
    pub const DEFAULT_PITCH: f64 = 0.5;

    pub fn new(side: usize, pitch: f64) -> Result<Self> {
        if side < 4 || side % 2 != 0 {
            return Err(Error::invalid(format!(
                "grid side must be even and >= 4, got {side}"
            )));
        }
        if !(pitch.is_finite() && pitch > 0.0) {
            return Err(Error::invalid(format!("grid pitch must be > 0, got {pitch}")));
        }
        Ok(Self { side, pitch })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    /// Number of samples, `side²`.
    pub fn len(&self) -> usize {
        self.side * self.side
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Physical width of the grid.
    pub fn extent(&self) -> f64 {
        self.side as f64 * self.pitch
    }

    pub fn pixel_area(&self) -> f64 {
        self.pitch * self.pitch
    }

    /// Position of sample `index` along either axis, zero at `side/2`.
    pub fn coord(&self, index: usize) -> f64 {
        (index as f64 - (self.side / 2) as f64) * self.pitch
    }

    /// Spatial frequency of DFT bin `index` (unshifted order), cycles per
    /// wavelength. Bins cover `k/(side·pitch)` for `k ∈ [−side/2, side/2)`.
    pub fn frequency(&self, index: usize) -> f64 {
        let k = if index < self.side / 2 {
            index as f64
        } else {
            index as f64 - self.side as f64
        };
        k / self.extent()
    }

    /// Same pitch, a different number of samples.
    pub fn resized(&self, side: usize) -> Result<Self> {
        Self::new(side, self.pitch)
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                expected: self.to_string(),
                found: other.to_string(),
            })
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{0}x{0} @ {1}λ", self.side, self.pitch)
    }
}
