use num_complex::Complex64;

use super::{EncodingSpec, Geometry};
use crate::data::Image;
use crate::optics::{ComplexField, GridSpec};
use crate::{Error, Result};

/// Writes `image` onto the centred object region of `grid`, replicating each
/// pixel into a block of `geometry.replication()` neurons per side.
///
/// Amplitude encoding gives `u = g`; phase encoding gives `u = exp(i·g·R)`
/// inside the object and `0` outside.
pub fn encode_input(
    image: &Image,
    encoding: &EncodingSpec,
    geometry: &Geometry,
    grid: GridSpec,
) -> Result<ComplexField> {
    if image.side() != geometry.image_side() {
        return Err(Error::invalid(format!(
            "image side {} does not match geometry ({})",
            image.side(),
            geometry.image_side()
        )));
    }
    let rep = geometry.replication();
    let obj = geometry.object_side();
    let n = grid.side();
    if obj > n {
        return Err(Error::Geometry(format!(
            "object of {obj} neurons exceeds the {grid} grid"
        )));
    }
    let off = (n - obj) / 2;
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    for r in 0..obj {
        for c in 0..obj {
            let g = image.get(r / rep, c / rep);
            values[(r + off) * n + c + off] = match encoding {
                EncodingSpec::Amplitude => Complex64::new(g, 0.0),
                EncodingSpec::Phase { range } => Complex64::from_polar(1.0, g * range.radians()),
            };
        }
    }
    ComplexField::new(grid, values)
}
