use crate::{Error, Result};

/// ITU-R 601 luma coefficients for R, G, B.
pub const LUMA_WEIGHTS: [f64; 3] = [0.2989, 0.5870, 0.1140];

/// Square grayscale image, row-major, values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    side: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(side: usize, pixels: Vec<f64>) -> Result<Self> {
        if side == 0 || pixels.len() != side * side {
            return Err(Error::invalid(format!(
                "image of side {side} needs {} pixels, got {}",
                side * side,
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::invalid(format!("pixel value {bad} outside [0, 1]")));
        }
        Ok(Self { side, pixels })
    }

    pub fn filled(side: usize, value: f64) -> Result<Self> {
        Self::new(side, vec![value; side * side])
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.side + col]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledImage {
    pub image: Image,
    pub label: u8,
    /// Position in the source files, for disjointness audits.
    pub origin: usize,
}

/// Weighted RGB → gray, clamped to `[0, 1]`.
pub fn to_grayscale(r: f64, g: f64, b: f64) -> f64 {
    let [wr, wg, wb] = LUMA_WEIGHTS;
    (wr * r + wg * g + wb * b).clamp(0.0, 1.0)
}

/// Mirrors the columns: pixel `(row, col)` moves to `(row, side−1−col)`.
pub fn flip_left_right(image: &Image) -> Image {
    let n = image.side;
    let mut pixels = Vec::with_capacity(n * n);
    for row in image.pixels.chunks_exact(n) {
        pixels.extend(row.iter().rev());
    }
    Image { side: n, pixels }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grayscale_examples() {
        assert_eq!(to_grayscale(1.0, 0.0, 0.0), 0.2989);
        assert_eq!(to_grayscale(0.0, 1.0, 0.0), 0.5870);
        assert_eq!(to_grayscale(0.0, 0.0, 1.0), 0.1140);
        // the coefficients sum to 0.9999
        for v in [0.0, 0.25, 0.5, 1.0] {
            assert!((to_grayscale(v, v, v) - v).abs() <= 1e-4 + 1e-12);
        }
    }

    #[test]
    fn flip_moves_columns() {
        let img = Image::new(32, (0..1024).map(|i| i as f64 / 1023.0).collect()).unwrap();
        let f = flip_left_right(&img);
        for row in 0..32 {
            for col in 0..32 {
                assert_eq!(f.get(row, 31 - col), img.get(row, col));
            }
        }
        let sym = Image::filled(32, 0.3).unwrap();
        assert_eq!(flip_left_right(&sym), sym);
    }

    #[test]
    fn rejects_out_of_range_pixels() {
        assert!(Image::new(2, vec![0.0, 0.5, 1.0, 1.01]).is_err());
        assert!(Image::new(2, vec![0.0, -0.1, 1.0, 1.0]).is_err());
        assert!(Image::new(2, vec![0.0; 3]).is_err());
    }

    proptest! {
        #[test]
        fn flip_is_an_involution(px in proptest::collection::vec(0.0f64..=1.0, 64)) {
            let img = Image::new(8, px).unwrap();
            prop_assert_eq!(flip_left_right(&flip_left_right(&img)), img);
        }

        #[test]
        fn grayscale_stays_in_unit_interval(r in 0.0f64..=1.0, g in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let v = to_grayscale(r, g, b);
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
