use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ComplexField, GridSpec};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
}

/// One square detector, already resolved to a pixel block.
#[derive(Clone, Debug, PartialEq)]
pub struct Detector {
    pub center: (f64, f64),
    pub class: usize,
    pub polarity: Polarity,
    rows: Range<usize>,
    cols: Range<usize>,
}

impl Detector {
    pub fn rows(&self) -> Range<usize> {
        self.rows.clone()
    }

    pub fn cols(&self) -> Range<usize> {
        self.cols.clone()
    }

    pub fn pixel_count(&self) -> usize {
        self.rows.len() * self.cols.len()
    }
}

/// Differential detector arrangement: one positive and one negative square
/// per class.
///
/// A detector of width `w` covers the `round(w/pitch)` pixels per axis whose
/// centres lie nearest its centre; with `w = 6.4λ` at `0.5λ` pitch that is a
/// 13×13 block.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectorLayout {
    grid: GridSpec,
    width: f64,
    classes: usize,
    detectors: Vec<Detector>,
}

impl DetectorLayout {
    pub const DEFAULT_WIDTH: f64 = 6.4;

    /// `centers[d]` is `(x, y)` in wavelengths; `assignment[d]` gives its
    /// class and sign.
    pub fn new(
        grid: GridSpec,
        width: f64,
        centers: &[(f64, f64)],
        assignment: &[(usize, Polarity)],
    ) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::invalid(format!("detector width {width}")));
        }
        if centers.len() != assignment.len() || centers.len() % 2 != 0 || centers.is_empty() {
            return Err(Error::invalid(format!(
                "need 2C detectors with one assignment each, got {} centres and {} assignments",
                centers.len(),
                assignment.len()
            )));
        }
        let classes = centers.len() / 2;
        let mut seen = vec![[false; 2]; classes];
        for &(class, pol) in assignment {
            if class >= classes {
                return Err(Error::invalid(format!(
                    "detector assigned to class {class}, only {classes} classes"
                )));
            }
            let slot = &mut seen[class][pol as usize];
            if *slot {
                return Err(Error::invalid(format!(
                    "class {class} has two {pol:?} detectors"
                )));
            }
            *slot = true;
        }

        let side = grid.side();
        let span = (width / grid.pitch()).round() as usize;
        if span == 0 {
            return Err(Error::invalid(format!(
                "detector width {width}λ is below one pixel"
            )));
        }
        let block = |c: f64| -> Result<Range<usize>> {
            let centre_index = c / grid.pitch() + (side / 2) as f64;
            let start = (centre_index - (span as f64 - 1.0) / 2.0).round();
            if start < 0.0 || start as usize + span > side {
                return Err(Error::Geometry(format!(
                    "detector centred at {c}λ leaves the {grid} grid"
                )));
            }
            Ok(start as usize..start as usize + span)
        };

        let mut detectors = Vec::with_capacity(centers.len());
        for (&(x, y), &(class, polarity)) in centers.iter().zip(assignment) {
            detectors.push(Detector {
                center: (x, y),
                class,
                polarity,
                rows: block(y)?,
                cols: block(x)?,
            });
        }
        for (i, a) in detectors.iter().enumerate() {
            for b in &detectors[i + 1..] {
                if overlaps(&a.rows, &b.rows) && overlaps(&a.cols, &b.cols) {
                    return Err(Error::Geometry(format!(
                        "detectors at {:?} and {:?} overlap",
                        a.center, b.center
                    )));
                }
            }
        }
        Ok(Self {
            grid,
            width,
            classes,
            detectors,
        })
    }

    /// Centred rectangular lattice of `rows × 4` detectors, two classes per
    /// row, each class's `+` detector immediately left of its `−` detector.
    pub fn lattice(grid: GridSpec, width: f64, spacing: f64, classes: usize) -> Result<Self> {
        let cols = 4;
        let rows = classes.div_ceil(2);
        let mut centers = Vec::with_capacity(2 * classes);
        let mut assignment = Vec::with_capacity(2 * classes);
        for r in 0..rows {
            let y = (r as f64 - (rows as f64 - 1.0) / 2.0) * spacing;
            for c in 0..cols {
                let class = 2 * r + c / 2;
                if class >= classes {
                    continue;
                }
                let x = (c as f64 - (cols as f64 - 1.0) / 2.0) * spacing;
                centers.push((x, y));
                let polarity = if c % 2 == 0 {
                    Polarity::Positive
                } else {
                    Polarity::Negative
                };
                assignment.push((class, polarity));
            }
        }
        Self::new(grid, width, &centers, &assignment)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn detectors(&self) -> &[Detector] {
        &self.detectors
    }

    /// Swaps the positive and negative detector of `class`.
    pub fn swap_polarity(&self, class: usize) -> Self {
        let mut out = self.clone();
        for d in out.detectors.iter_mut().filter(|d| d.class == class) {
            d.polarity = match d.polarity {
                Polarity::Positive => Polarity::Negative,
                Polarity::Negative => Polarity::Positive,
            };
        }
        out
    }

    /// Integrated intensity `Σ|u|²·pitch²` over each detector, in detector
    /// order.
    pub fn readout(&self, field: &ComplexField) -> Result<Vec<f64>> {
        self.grid.ensure_same(field.grid())?;
        let n = self.grid.side();
        let area = self.grid.pixel_area();
        let v = field.values();
        Ok(self
            .detectors
            .iter()
            .map(|d| {
                let mut s = 0.0;
                for row in d.rows() {
                    for col in d.cols() {
                        s += v[row * n + col].norm_sqr();
                    }
                }
                s * area
            })
            .collect())
    }

    /// Per-class `(positive, negative)` signal pairs.
    pub fn class_signals(&self, signals: &[f64]) -> Vec<(f64, f64)> {
        let mut out = vec![(0.0, 0.0); self.classes];
        for (d, s) in self.detectors.iter().zip(signals) {
            match d.polarity {
                Polarity::Positive => out[d.class].0 = *s,
                Polarity::Negative => out[d.class].1 = *s,
            }
        }
        out
    }

    /// Pulls per-class signal cotangents `(∂L/∂s₊, ∂L/∂s₋)` back onto the
    /// field: `ū = 2·u·pitch²·∂L/∂s` inside each detector, zero elsewhere.
    pub fn readout_adjoint(
        &self,
        field: &ComplexField,
        class_cotangents: &[(f64, f64)],
    ) -> Result<ComplexField> {
        self.grid.ensure_same(field.grid())?;
        let n = self.grid.side();
        let area = self.grid.pixel_area();
        let mut out = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        let v = field.values();
        for d in &self.detectors {
            let (pos, neg) = class_cotangents[d.class];
            let g = match d.polarity {
                Polarity::Positive => pos,
                Polarity::Negative => neg,
            };
            let k = 2.0 * area * g;
            for row in d.rows() {
                for col in d.cols() {
                    let i = row * n + col;
                    out[i] = v[i] * k;
                }
            }
        }
        Ok(ComplexField::from_raw(self.grid, out))
    }
}

fn overlaps(a: &Range<usize>, b: &Range<usize>) -> bool {
    a.start < b.end && b.start < a.end
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_grid() -> GridSpec {
        GridSpec::new(128, 0.5).unwrap()
    }

    #[test]
    fn default_lattice_has_13_pixel_detectors() {
        let layout =
            DetectorLayout::lattice(paper_grid(), 6.4, 12.8, 10).unwrap();
        assert_eq!(layout.detectors().len(), 20);
        for d in layout.detectors() {
            assert_eq!(d.pixel_count(), 169);
            // pixel centres fall inside the detector square
            let g = paper_grid();
            for c in d.cols() {
                assert!((g.coord(c) - d.center.0).abs() <= 3.2 + 1e-9);
            }
        }
        let counts = layout.detectors().iter().fold([0usize; 10], |mut acc, d| {
            acc[d.class] += 1;
            acc
        });
        assert_eq!(counts, [2; 10]);
    }

    #[test]
    fn uniform_field_signal_is_area_integral() {
        let g = paper_grid();
        let layout = DetectorLayout::lattice(g, 6.4, 12.8, 10).unwrap();
        let one = ComplexField::uniform(g, Complex64::new(1.0, 0.0));
        let s = layout.readout(&one).unwrap();
        for v in s {
            assert!((v - 42.25).abs() < 1e-12);
        }
        let zero = layout.readout(&ComplexField::zeros(g)).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn readout_is_bounded_by_total_power() {
        let g = GridSpec::new(64, 0.5).unwrap();
        let layout = DetectorLayout::lattice(g, 3.2, 6.4, 10).unwrap();
        let f = ComplexField::from_fn(g, |x, y| Complex64::new(x.sin(), (x * y).cos())).unwrap();
        let s = layout.readout(&f).unwrap();
        assert!(s.iter().all(|&v| v >= 0.0));
        assert!(s.iter().sum::<f64>() <= f.power());
    }

    #[test]
    fn rejects_bad_layouts() {
        let g = GridSpec::new(64, 0.5).unwrap();
        // paper spacing does not fit a 32λ grid
        assert!(matches!(
            DetectorLayout::lattice(g, 6.4, 12.8, 10),
            Err(Error::Geometry(_))
        ));
        // overlapping
        let c = [(0.0, 0.0), (1.0, 0.0)];
        let a = [(0, Polarity::Positive), (0, Polarity::Negative)];
        assert!(DetectorLayout::new(g, 3.2, &c, &a).is_err());
        // class missing a negative detector
        let c = [(-8.0, 0.0), (8.0, 0.0)];
        let a = [(0, Polarity::Positive), (0, Polarity::Positive)];
        assert!(DetectorLayout::new(g, 3.2, &c, &a).is_err());
        let a = [(0, Polarity::Positive), (0, Polarity::Negative)];
        assert!(DetectorLayout::new(g, 3.2, &c, &a).is_ok());
    }
}
