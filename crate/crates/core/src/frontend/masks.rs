use std::f64::consts::PI;

use super::{FourierFilterSpec, Geometry, GaussianSpot, ObjectFilterSpec, SquareWindow};
use crate::optics::{AmplitudeMask, GridSpec};
use crate::{Error, Result};

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn gaussian(s: &GaussianSpot, x: f64, y: f64) -> f64 {
    let dx = x - s.cx;
    let dy = y - s.cy;
    (-(dx * dx / (2.0 * s.sigma_x * s.sigma_x) + dy * dy / (2.0 * s.sigma_y * s.sigma_y))).exp()
}

fn square(w: &SquareWindow, x: f64, y: f64) -> f64 {
    let h = w.side / 2.0;
    indicator((x - w.cx).abs() <= h && (y - w.cy).abs() <= h)
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Raised-cosine window `a + (1−a)·cos(2πt/W)` on `|t| ≤ W/2`.
fn raised_cosine(a: f64, t: f64, width: f64) -> f64 {
    if t.abs() <= width / 2.0 {
        a + (1.0 - a) * (2.0 * PI * t / width).cos()
    } else {
        0.0
    }
}

impl ObjectFilterSpec {
    /// Transmission at `(x, y)` before clipping to the object region.
    pub fn value(&self, x: f64, y: f64) -> f64 {
        match self {
            ObjectFilterSpec::Gaussian { spot } => gaussian(spot, x, y),
            ObjectFilterSpec::MultiGaussian { spots } => {
                spots.iter().map(|s| gaussian(s, x, y)).sum::<f64>().min(1.0)
            }
            ObjectFilterSpec::Hamming { cx, cy, width } => {
                raised_cosine(0.54, x - cx, *width) * raised_cosine(0.54, y - cy, *width)
            }
            ObjectFilterSpec::Hanning { cx, cy, width } => {
                raised_cosine(0.5, x - cx, *width) * raised_cosine(0.5, y - cy, *width)
            }
            ObjectFilterSpec::Square { window } => square(window, x, y),
            ObjectFilterSpec::MultiSquare { windows } => {
                indicator(windows.iter().any(|w| square(w, x, y) > 0.0))
            }
            ObjectFilterSpec::RotatedPatch {
                cx,
                cy,
                width,
                height,
                angle,
            } => {
                let (s, c) = angle.sin_cos();
                let (dx, dy) = (x - cx, y - cy);
                let u = dx * c + dy * s;
                let v = -dx * s + dy * c;
                indicator(u.abs() <= width / 2.0 && v.abs() <= height / 2.0)
            }
            ObjectFilterSpec::Circle { cx, cy, radius } => {
                indicator((x - cx).hypot(y - cy) <= *radius)
            }
            ObjectFilterSpec::Grating { period, angle } => {
                let (s, c) = angle.sin_cos();
                0.5 * (1.0 + (2.0 * PI * (x * c + y * s) / period).cos())
            }
            ObjectFilterSpec::ZonePlate { cx, cy, focal } => {
                let r2 = (x - cx).powi(2) + (y - cy).powi(2);
                indicator((PI * r2 / focal).cos() > 0.0)
            }
            ObjectFilterSpec::GaussianPlusSquare { spot, window } => {
                (gaussian(spot, x, y) + square(window, x, y)).min(1.0)
            }
        }
    }
}

/// Object-plane mask on the geometry's grid; zero outside the object region.
pub fn make_object_filter(spec: &ObjectFilterSpec, geometry: &Geometry) -> Result<AmplitudeMask> {
    spec.validate()?;
    let support = geometry.object_support();
    let grid = *geometry.grid();
    let n = grid.side();
    let mut amp = Vec::with_capacity(grid.len());
    for row in 0..n {
        let y = grid.coord(row);
        for col in 0..n {
            let inside = support.amplitude()[row * n + col];
            amp.push(if inside > 0.0 {
                spec.value(grid.coord(col), y).clamp(0.0, 1.0)
            } else {
                0.0
            });
        }
    }
    AmplitudeMask::new(grid, amp)
}

/// Fourier-plane mask. `latent` is required for (and only used by) the
/// trainable kind and must cover the whole grid.
pub fn make_fourier_filter(
    spec: &FourierFilterSpec,
    grid: GridSpec,
    latent: Option<&[f64]>,
) -> Result<AmplitudeMask> {
    spec.validate()?;
    match spec {
        FourierFilterSpec::Annular { edges, pass } => AmplitudeMask::from_fn(grid, |x, y| {
            let r = x.hypot(y);
            edges
                .windows(2)
                .zip(pass)
                .find(|(e, _)| r >= e[0] && r < e[1])
                .map_or(0.0, |(_, &p)| indicator(p))
        }),
        FourierFilterSpec::Trainable => {
            let latent = latent.ok_or_else(|| Error::invalid("trainable filter needs a latent"))?;
            if latent.len() != grid.len() {
                return Err(Error::invalid(format!(
                    "latent has {} entries, grid {grid} needs {}",
                    latent.len(),
                    grid.len()
                )));
            }
            // logistic can round to exactly 0 or 1 in floating point
            AmplitudeMask::new(grid, latent.iter().map(|&l| logistic(l)).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn desk() -> Geometry {
        Geometry::standard(GridSpec::new(64, 0.5).unwrap(), 32).unwrap()
    }

    fn on_support(mask: &AmplitudeMask, geo: &Geometry) -> Vec<f64> {
        mask.amplitude()
            .iter()
            .zip(geo.object_support().amplitude())
            .filter(|(_, s)| **s > 0.0)
            .map(|(a, _)| *a)
            .collect()
    }

    #[test]
    fn full_square_is_identity_on_object() {
        let geo = desk();
        let spec = ObjectFilterSpec::Square {
            window: SquareWindow {
                cx: 0.0,
                cy: 0.0,
                side: 40.0,
            },
        };
        let m = make_object_filter(&spec, &geo).unwrap();
        assert!(on_support(&m, &geo).iter().all(|&a| a == 1.0));
        assert_eq!(m.amplitude().iter().sum::<f64>(), 1024.0);
    }

    #[test]
    fn grating_and_gaussian_examples() {
        let g = ObjectFilterSpec::Grating {
            period: 6.0,
            angle: 0.0,
        };
        assert_eq!(g.value(0.0, 1.7), 1.0);
        assert!(g.value(3.0, -2.0).abs() < 1e-15);
        let spot = ObjectFilterSpec::Gaussian {
            spot: GaussianSpot {
                cx: 1.5,
                cy: -2.0,
                sigma_x: 3.0,
                sigma_y: 5.0,
            },
        };
        assert_eq!(spot.value(1.5, -2.0), 1.0);
        assert!(spot.value(4.5, -2.0) < 1.0);
    }

    #[test]
    fn windows_vanish_outside_support() {
        let h = ObjectFilterSpec::Hanning {
            cx: 0.0,
            cy: 0.0,
            width: 8.0,
        };
        assert_eq!(h.value(0.0, 0.0), 1.0);
        assert_eq!(h.value(4.5, 0.0), 0.0);
        let h = ObjectFilterSpec::Hamming {
            cx: 0.0,
            cy: 0.0,
            width: 8.0,
        };
        assert!((h.value(4.0, 0.0) - 0.08).abs() < 1e-12);
    }

    #[test]
    fn zone_plate_centre_is_open() {
        let z = ObjectFilterSpec::ZonePlate {
            cx: 2.0,
            cy: 1.0,
            focal: 40.0,
        };
        assert_eq!(z.value(2.0, 1.0), 1.0);
        // r² = f: cos(π) < 0
        assert_eq!(z.value(2.0 + 40f64.sqrt(), 1.0), 0.0);
    }

    #[test]
    fn annular_examples() {
        let grid = GridSpec::new(64, 0.5).unwrap();
        let all = FourierFilterSpec::Annular {
            edges: vec![0.0, f64::INFINITY],
            pass: vec![true],
        };
        let m = make_fourier_filter(&all, grid, None).unwrap();
        assert!(m.amplitude().iter().all(|&a| a == 1.0));

        let rho = 4.0;
        let low = FourierFilterSpec::Annular {
            edges: vec![0.0, rho],
            pass: vec![true],
        };
        let m = make_fourier_filter(&low, grid, None).unwrap();
        let at = |x: f64| m.amplitude()[32 * 64 + 32 + (x / 0.5) as usize];
        assert_eq!(at(0.5 * rho), 1.0);
        assert_eq!(at(2.0 * rho), 0.0);

        let high = FourierFilterSpec::Annular {
            edges: vec![0.0, rho, f64::INFINITY],
            pass: vec![false, true],
        };
        let h = make_fourier_filter(&high, grid, None).unwrap();
        assert_eq!(h, m.complement());
    }

    #[test]
    fn trainable_filter_starts_at_half() {
        let grid = GridSpec::new(8, 0.5).unwrap();
        let m = make_fourier_filter(&FourierFilterSpec::Trainable, grid, Some(&[0.0; 64])).unwrap();
        assert!(m.amplitude().iter().all(|&a| a == 0.5));
        assert!(make_fourier_filter(&FourierFilterSpec::Trainable, grid, None).is_err());
    }

    fn spot() -> impl Strategy<Value = GaussianSpot> {
        (-10.0..10.0f64, -10.0..10.0f64, 0.5..16.0f64, 0.5..16.0f64).prop_map(
            |(cx, cy, sigma_x, sigma_y)| GaussianSpot {
                cx,
                cy,
                sigma_x,
                sigma_y,
            },
        )
    }

    fn window() -> impl Strategy<Value = SquareWindow> {
        (-10.0..10.0f64, -10.0..10.0f64, 1.0..24.0f64)
            .prop_map(|(cx, cy, side)| SquareWindow { cx, cy, side })
    }

    fn any_filter() -> impl Strategy<Value = ObjectFilterSpec> {
        prop_oneof![
            spot().prop_map(|spot| ObjectFilterSpec::Gaussian { spot }),
            proptest::collection::vec(spot(), 1..5)
                .prop_map(|spots| ObjectFilterSpec::MultiGaussian { spots }),
            (-8.0..8.0f64, -8.0..8.0f64, 2.0..24.0f64)
                .prop_map(|(cx, cy, width)| ObjectFilterSpec::Hamming { cx, cy, width }),
            (-8.0..8.0f64, -8.0..8.0f64, 2.0..24.0f64)
                .prop_map(|(cx, cy, width)| ObjectFilterSpec::Hanning { cx, cy, width }),
            proptest::collection::vec(window(), 1..5)
                .prop_map(|windows| ObjectFilterSpec::MultiSquare { windows }),
            (2.0..16.0f64, 0.0..3.2f64)
                .prop_map(|(period, angle)| ObjectFilterSpec::Grating { period, angle }),
            (-8.0..8.0f64, -8.0..8.0f64, 20.0..200.0f64)
                .prop_map(|(cx, cy, focal)| ObjectFilterSpec::ZonePlate { cx, cy, focal }),
            (spot(), window())
                .prop_map(|(spot, window)| ObjectFilterSpec::GaussianPlusSquare { spot, window }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn masks_stay_in_unit_interval(spec in any_filter()) {
            let m = make_object_filter(&spec, &desk()).unwrap();
            prop_assert!(m.amplitude().iter().all(|a| (0.0..=1.0).contains(a)));
        }
    }
}
