use crate::optics::{AmplitudeMask, GridSpec};
use crate::{Error, Result};

/// How an image maps onto a simulation grid: each image pixel is replicated
/// into a `replication × replication` block of neurons, centred on the
/// optical axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geometry {
    grid: GridSpec,
    image_side: usize,
    replication: usize,
}

impl Geometry {
    pub fn new(grid: GridSpec, image_side: usize, replication: usize) -> Result<Self> {
        if image_side == 0 || replication == 0 {
            return Err(Error::invalid("image side and replication must be positive"));
        }
        let object = image_side * replication;
        if object > grid.side() || object % 2 != 0 {
            return Err(Error::Geometry(format!(
                "object of {object} neurons does not centre on the {grid} grid"
            )));
        }
        Ok(Self {
            grid,
            image_side,
            replication,
        })
    }

    /// Object fills the central half of the grid.
    pub fn standard(grid: GridSpec, image_side: usize) -> Result<Self> {
        let replication = (grid.side() / 2) / image_side.max(1);
        Self::new(grid, image_side, replication.max(1))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn image_side(&self) -> usize {
        self.image_side
    }

    pub fn replication(&self) -> usize {
        self.replication
    }

    /// Object side in neurons.
    pub fn object_side(&self) -> usize {
        self.image_side * self.replication
    }

    pub fn object_extent(&self) -> f64 {
        self.object_side() as f64 * self.grid.pitch()
    }

    /// Output-aperture side in neurons for a given scale, rounded up to even.
    pub fn aperture_side(&self, scale: f64) -> usize {
        let raw = (scale * self.object_side() as f64).round() as usize;
        raw + raw % 2
    }

    /// Centred square indicator of `side` neurons on `grid`.
    pub fn centred_square(grid: GridSpec, side: usize) -> Result<AmplitudeMask> {
        let n = grid.side();
        if side > n {
            return Err(Error::Geometry(format!(
                "square of {side} neurons exceeds the {grid} grid"
            )));
        }
        let lo = (n - side) / 2;
        let hi = lo + side;
        let mut amp = vec![0.0; grid.len()];
        for row in lo..hi {
            amp[row * n + lo..row * n + hi].fill(1.0);
        }
        AmplitudeMask::new(grid, amp)
    }

    /// Indicator of the object region on this geometry's grid.
    pub fn object_support(&self) -> AmplitudeMask {
        Self::centred_square(self.grid, self.object_side()).expect("validated at construction")
    }

    /// Grid for a 4-f relay with the given lens: same pitch, wide enough
    /// for the lens aperture, power-of-two side.
    pub fn relay_grid(&self, lens_diameter: f64) -> Result<GridSpec> {
        let need = (lens_diameter / self.grid.pitch()).ceil() as usize;
        let side = need.max(self.grid.side()).next_power_of_two().max(4);
        GridSpec::new(side, self.grid.pitch())
    }

    /// The same object placement on another grid.
    pub fn on_grid(&self, grid: GridSpec) -> Result<Self> {
        Self::new(grid, self.image_side, self.replication)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_profiles() {
        let paper = Geometry::standard(GridSpec::new(128, 0.5).unwrap(), 32).unwrap();
        assert_eq!(paper.replication(), 2);
        assert_eq!(paper.object_side(), 64);
        assert_eq!(paper.object_extent(), 32.0);
        assert_eq!(paper.aperture_side(1.5), 96);
        assert_eq!(paper.relay_grid(104.0).unwrap().side(), 256);

        let desk = Geometry::standard(GridSpec::new(64, 0.5).unwrap(), 32).unwrap();
        assert_eq!(desk.replication(), 1);
        assert_eq!(desk.aperture_side(1.5), 48);
        assert_eq!(desk.object_support().amplitude().iter().sum::<f64>(), 1024.0);
    }

    #[test]
    fn oversized_object_is_rejected() {
        assert!(Geometry::new(GridSpec::new(16, 0.5).unwrap(), 32, 1).is_err());
    }
}
