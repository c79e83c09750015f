use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Geometry;
use crate::{Error, Result};

pub const DEFAULT_FOCAL_LENGTH: f64 = 145.6;
pub const DEFAULT_LENS_DIAMETER: f64 = 104.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseRange {
    #[serde(rename = "half_pi")]
    HalfPi,
    #[serde(rename = "pi")]
    Pi,
    #[serde(rename = "three_half_pi")]
    ThreeHalvesPi,
    #[serde(rename = "two_pi")]
    TwoPi,
}

impl PhaseRange {
    pub const ALL: [PhaseRange; 4] = [
        PhaseRange::HalfPi,
        PhaseRange::Pi,
        PhaseRange::ThreeHalvesPi,
        PhaseRange::TwoPi,
    ];

    pub fn radians(&self) -> f64 {
        match self {
            PhaseRange::HalfPi => 0.5 * PI,
            PhaseRange::Pi => PI,
            PhaseRange::ThreeHalvesPi => 1.5 * PI,
            PhaseRange::TwoPi => 2.0 * PI,
        }
    }
}

/// Which channel of the illumination carries the image.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "channel", rename_all = "snake_case", deny_unknown_fields)]
pub enum EncodingSpec {
    Amplitude,
    Phase { range: PhaseRange },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpot {
    pub cx: f64,
    pub cy: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SquareWindow {
    pub cx: f64,
    pub cy: f64,
    pub side: f64,
}

/// Object-plane amplitude filter. Lengths in wavelengths, measured from the
/// optical axis; angles in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectFilterSpec {
    Gaussian {
        spot: GaussianSpot,
    },
    MultiGaussian {
        spots: Vec<GaussianSpot>,
    },
    Hamming {
        cx: f64,
        cy: f64,
        width: f64,
    },
    Hanning {
        cx: f64,
        cy: f64,
        width: f64,
    },
    Square {
        window: SquareWindow,
    },
    MultiSquare {
        windows: Vec<SquareWindow>,
    },
    RotatedPatch {
        cx: f64,
        cy: f64,
        width: f64,
        height: f64,
        angle: f64,
    },
    Circle {
        cx: f64,
        cy: f64,
        radius: f64,
    },
    Grating {
        period: f64,
        angle: f64,
    },
    ZonePlate {
        cx: f64,
        cy: f64,
        focal: f64,
    },
    GaussianPlusSquare {
        spot: GaussianSpot,
        window: SquareWindow,
    },
}

impl ObjectFilterSpec {
    pub fn family(&self) -> &'static str {
        match self {
            ObjectFilterSpec::Gaussian { .. } => "gaussian",
            ObjectFilterSpec::MultiGaussian { .. } => "multi_gaussian",
            ObjectFilterSpec::Hamming { .. } => "hamming",
            ObjectFilterSpec::Hanning { .. } => "hanning",
            ObjectFilterSpec::Square { .. } => "square",
            ObjectFilterSpec::MultiSquare { .. } => "multi_square",
            ObjectFilterSpec::RotatedPatch { .. } => "rotated_patch",
            ObjectFilterSpec::Circle { .. } => "circle",
            ObjectFilterSpec::Grating { .. } => "grating",
            ObjectFilterSpec::ZonePlate { .. } => "zone_plate",
            ObjectFilterSpec::GaussianPlusSquare { .. } => "gaussian_plus_square",
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn finite(vals: &[f64]) -> Result<()> {
            if vals.iter().all(|v| v.is_finite()) {
                Ok(())
            } else {
                Err(Error::NonFinite("object filter parameters".into()))
            }
        }
        fn positive(name: &str, v: f64) -> Result<()> {
            if v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be > 0, got {v}")))
            }
        }
        let spot = |s: &GaussianSpot| {
            finite(&[s.cx, s.cy, s.sigma_x, s.sigma_y])?;
            positive("sigma_x", s.sigma_x)?;
            positive("sigma_y", s.sigma_y)
        };
        let window = |w: &SquareWindow| {
            finite(&[w.cx, w.cy, w.side])?;
            positive("side", w.side)
        };
        match self {
            ObjectFilterSpec::Gaussian { spot: s } => spot(s),
            ObjectFilterSpec::MultiGaussian { spots } => {
                if spots.is_empty() {
                    return Err(Error::invalid("multi_gaussian needs at least one spot"));
                }
                spots.iter().try_for_each(spot)
            }
            ObjectFilterSpec::Hamming { cx, cy, width } | ObjectFilterSpec::Hanning { cx, cy, width } => {
                finite(&[*cx, *cy, *width])?;
                positive("width", *width)
            }
            ObjectFilterSpec::Square { window: w } => window(w),
            ObjectFilterSpec::MultiSquare { windows } => {
                if windows.is_empty() {
                    return Err(Error::invalid("multi_square needs at least one window"));
                }
                windows.iter().try_for_each(window)
            }
            ObjectFilterSpec::RotatedPatch {
                cx,
                cy,
                width,
                height,
                angle,
            } => {
                finite(&[*cx, *cy, *width, *height, *angle])?;
                positive("width", *width)?;
                positive("height", *height)
            }
            ObjectFilterSpec::Circle { cx, cy, radius } => {
                finite(&[*cx, *cy, *radius])?;
                positive("radius", *radius)
            }
            ObjectFilterSpec::Grating { period, angle } => {
                finite(&[*period, *angle])?;
                positive("period", *period)
            }
            ObjectFilterSpec::ZonePlate { cx, cy, focal } => {
                finite(&[*cx, *cy, *focal])?;
                positive("focal", *focal)
            }
            ObjectFilterSpec::GaussianPlusSquare { spot: s, window: w } => {
                spot(s)?;
                window(w)
            }
        }
    }
}

/// Fourier-plane amplitude filter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FourierFilterSpec {
    /// Ring `i` spans radii `[edges[i], edges[i+1])` on the Fourier plane and
    /// transmits iff `pass[i]`. The last edge may be infinite.
    Annular { edges: Vec<f64>, pass: Vec<bool> },
    /// Learned amplitude `logistic(latent)`; the latent is a model parameter.
    Trainable,
}

impl FourierFilterSpec {
    /// `rings` equal-width annuli spanning `[0, radius]`.
    pub fn equal_rings(radius: f64, pass: Vec<bool>) -> Self {
        let rings = pass.len();
        let edges = (0..=rings)
            .map(|i| radius * i as f64 / rings as f64)
            .collect();
        FourierFilterSpec::Annular { edges, pass }
    }

    pub fn is_trainable(&self) -> bool {
        matches!(self, FourierFilterSpec::Trainable)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FourierFilterSpec::Trainable => Ok(()),
            FourierFilterSpec::Annular { edges, pass } => {
                if edges.len() < 2 || pass.len() + 1 != edges.len() {
                    return Err(Error::invalid(format!(
                        "annular filter needs k+1 edges for k pass flags, got {} and {}",
                        edges.len(),
                        pass.len()
                    )));
                }
                if edges[0].is_nan() || edges[0] < 0.0 {
                    return Err(Error::invalid("ring radii must be >= 0"));
                }
                if edges.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::invalid(format!(
                        "ring edges must be strictly ascending: {edges:?}"
                    )));
                }
                if edges[..edges.len() - 1].iter().any(|e| !e.is_finite()) {
                    return Err(Error::invalid("only the last ring edge may be infinite"));
                }
                Ok(())
            }
        }
    }
}

/// Where the input filter sits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "plane", rename_all = "snake_case", deny_unknown_fields)]
pub enum Placement {
    Object {
        filter: ObjectFilterSpec,
    },
    Fourier {
        filter: FourierFilterSpec,
        /// Output aperture side relative to the object side: 1.0 or 1.5.
        aperture_scale: f64,
        focal_length: f64,
        lens_diameter: f64,
    },
}

/// Complete feature-engineering identity of one base classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontEndSpec {
    pub encoding: EncodingSpec,
    pub placement: Placement,
}

impl FrontEndSpec {
    pub fn object(encoding: EncodingSpec, filter: ObjectFilterSpec) -> Self {
        Self {
            encoding,
            placement: Placement::Object { filter },
        }
    }

    pub fn fourier(encoding: EncodingSpec, filter: FourierFilterSpec, aperture_scale: f64) -> Self {
        Self {
            encoding,
            placement: Placement::Fourier {
                filter,
                aperture_scale,
                focal_length: DEFAULT_FOCAL_LENGTH,
                lens_diameter: DEFAULT_LENS_DIAMETER,
            },
        }
    }

    pub fn has_trainable_filter(&self) -> bool {
        matches!(
            &self.placement,
            Placement::Fourier {
                filter: FourierFilterSpec::Trainable,
                ..
            }
        )
    }

    pub fn validate(&self, geometry: &Geometry) -> Result<()> {
        match &self.placement {
            Placement::Object { filter } => filter.validate(),
            Placement::Fourier {
                filter,
                aperture_scale,
                focal_length,
                lens_diameter,
            } => {
                filter.validate()?;
                if *aperture_scale != 1.0 && *aperture_scale != 1.5 {
                    return Err(Error::invalid(format!(
                        "output aperture scale must be 1.0 or 1.5, got {aperture_scale}"
                    )));
                }
                if !(focal_length.is_finite() && *focal_length > 0.0) {
                    return Err(Error::invalid(format!("focal length {focal_length}")));
                }
                if !(lens_diameter.is_finite() && *lens_diameter > 0.0) {
                    return Err(Error::invalid(format!("lens diameter {lens_diameter}")));
                }
                let aperture = geometry.aperture_side(*aperture_scale);
                if aperture > geometry.grid().side() {
                    return Err(Error::Geometry(format!(
                        "output aperture of {aperture} pixels exceeds the {} grid",
                        geometry.grid()
                    )));
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_roundtrip_and_unknown_family() {
        let spec = FrontEndSpec::fourier(
            EncodingSpec::Phase {
                range: PhaseRange::ThreeHalvesPi,
            },
            FourierFilterSpec::Annular {
                edges: vec![0.0, 6.5, f64::INFINITY],
                pass: vec![true, false],
            },
            1.5,
        );
        let text = toml::to_string(&spec).unwrap();
        let back: FrontEndSpec = toml::from_str(&text).unwrap();
        assert_eq!(back, spec);

        let bad = r#"
encoding = { channel = "amplitude" }
[placement]
plane = "object"
filter = { family = "triangle", cx = 0.0 }
"#;
        assert!(toml::from_str::<FrontEndSpec>(bad).is_err());

        let typo = r#"
encoding = { channel = "amplitude" }
[placement]
plane = "object"
filter = { family = "circle", cx = 0.0, cy = 0.0, radius = 2.0, radiuss = 3.0 }
"#;
        assert!(toml::from_str::<FrontEndSpec>(typo).is_err());
    }

    #[test]
    fn annular_edges_must_ascend() {
        let f = FourierFilterSpec::Annular {
            edges: vec![0.0, 5.0, 5.0],
            pass: vec![true, false],
        };
        assert!(f.validate().is_err());
        let f = FourierFilterSpec::Annular {
            edges: vec![0.0, 5.0],
            pass: vec![true, false],
        };
        assert!(f.validate().is_err());
        assert!(FourierFilterSpec::equal_rings(52.0, vec![true; 8]).validate().is_ok());
    }
}
