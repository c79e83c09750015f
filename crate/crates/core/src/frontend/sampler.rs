use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    make_object_filter, EncodingSpec, FourierFilterSpec, FrontEndSpec, GaussianSpot, Geometry,
    ObjectFilterSpec, PhaseRange, Placement, SquareWindow, DEFAULT_LENS_DIAMETER,
};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    AmplitudeObject,
    AmplitudeFourier,
    PhaseObject,
    PhaseFourier,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::AmplitudeObject,
        Category::AmplitudeFourier,
        Category::PhaseObject,
        Category::PhaseFourier,
    ];

    pub fn of(spec: &FrontEndSpec) -> Self {
        let phase = matches!(spec.encoding, EncodingSpec::Phase { .. });
        let object = matches!(spec.placement, Placement::Object { .. });
        match (phase, object) {
            (false, true) => Category::AmplitudeObject,
            (false, false) => Category::AmplitudeFourier,
            (true, true) => Category::PhaseObject,
            (true, false) => Category::PhaseFourier,
        }
    }
}

/// Number of front ends to draw per category.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolCounts {
    pub amplitude_object: usize,
    pub amplitude_fourier: usize,
    pub phase_object: usize,
    pub phase_fourier: usize,
}

impl PoolCounts {
    /// The 1252-network split of the original pool.
    pub const PAPER: PoolCounts = PoolCounts {
        amplitude_object: 276,
        amplitude_fourier: 64,
        phase_object: 656,
        phase_fourier: 256,
    };

    pub fn total(&self) -> usize {
        self.amplitude_object + self.amplitude_fourier + self.phase_object + self.phase_fourier
    }

    pub fn get(&self, c: Category) -> usize {
        match c {
            Category::AmplitudeObject => self.amplitude_object,
            Category::AmplitudeFourier => self.amplitude_fourier,
            Category::PhaseObject => self.phase_object,
            Category::PhaseFourier => self.phase_fourier,
        }
    }

    fn slot(&mut self, c: Category) -> &mut usize {
        match c {
            Category::AmplitudeObject => &mut self.amplitude_object,
            Category::AmplitudeFourier => &mut self.amplitude_fourier,
            Category::PhaseObject => &mut self.phase_object,
            Category::PhaseFourier => &mut self.phase_fourier,
        }
    }

    /// `total` networks split in the [`PAPER`](Self::PAPER) proportions by
    /// largest remainder (ties to the earlier category).
    pub fn proportional(total: usize) -> Self {
        let base = Self::PAPER;
        let denom = base.total();
        let mut out = PoolCounts::default();
        let mut rema: Vec<(usize, Category)> = Vec::new();
        for c in Category::ALL {
            let scaled = base.get(c) * total;
            *out.slot(c) = scaled / denom;
            rema.push((scaled % denom, c));
        }
        let short = total - out.total();
        // stable sort keeps category order among equal remainders
        rema.sort_by(|a, b| b.0.cmp(&a.0));
        for (_, c) in rema.into_iter().take(short) {
            *out.slot(c) += 1;
        }
        out
    }
}

/// Parameter ranges for the sampler, in wavelengths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerRanges {
    pub sigma: (f64, f64),
    pub window_side: (f64, f64),
    pub grating_period: (f64, f64),
    pub zone_focal: (f64, f64),
    /// Minimum fraction of a uniform object's power that a drawn object
    /// filter must transmit.
    pub min_transmission: f64,
    /// Number of equal-width annuli spanning the lens radius.
    pub rings: usize,
    /// Probability that a Fourier front end gets a trainable filter.
    pub trainable_fraction: f64,
}

impl Default for SamplerRanges {
    fn default() -> Self {
        Self {
            sigma: (2.0, 16.0),
            window_side: (4.0, 24.0),
            grating_period: (2.0, 16.0),
            zone_focal: (20.0, 200.0),
            min_transmission: 0.02,
            rings: 8,
            trainable_fraction: 0.25,
        }
    }
}

const MAX_ATTEMPTS: usize = 1000;

/// Draws a pool of pairwise-distinct front-end specs. Deterministic in
/// `seed`; specs come out grouped by category in [`Category::ALL`] order.
pub fn sample_pool_specs(
    seed: u64,
    counts: &PoolCounts,
    geometry: &Geometry,
    ranges: &SamplerRanges,
) -> Result<Vec<FrontEndSpec>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<FrontEndSpec> = Vec::with_capacity(counts.total());
    for cat in Category::ALL {
        for _ in 0..counts.get(cat) {
            let mut attempts = 0;
            let spec = loop {
                attempts += 1;
                if attempts > MAX_ATTEMPTS {
                    return Err(Error::invalid(format!(
                        "could not draw a distinct {cat:?} front end in {MAX_ATTEMPTS} attempts"
                    )));
                }
                let candidate = draw(&mut rng, cat, geometry, ranges)?;
                if !out.contains(&candidate) {
                    break candidate;
                }
            };
            out.push(spec);
        }
    }
    Ok(out)
}

fn draw(
    rng: &mut ChaCha8Rng,
    cat: Category,
    geometry: &Geometry,
    ranges: &SamplerRanges,
) -> Result<FrontEndSpec> {
    let encoding = match cat {
        Category::AmplitudeObject | Category::AmplitudeFourier => EncodingSpec::Amplitude,
        _ => EncodingSpec::Phase {
            range: *PhaseRange::ALL.choose(rng).unwrap(),
        },
    };
    match cat {
        Category::AmplitudeObject | Category::PhaseObject => {
            let support = geometry.object_support();
            for _ in 0..MAX_ATTEMPTS {
                let filter = draw_object_filter(rng, geometry.object_extent(), ranges);
                let mask = make_object_filter(&filter, geometry)?;
                if mask.transmitted_fraction(&support) >= ranges.min_transmission {
                    return Ok(FrontEndSpec::object(encoding, filter));
                }
            }
            Err(Error::invalid(
                "sampler ranges never meet the minimum transmission",
            ))
        }
        Category::AmplitudeFourier | Category::PhaseFourier => {
            let filter = if rng.gen_bool(ranges.trainable_fraction) {
                FourierFilterSpec::Trainable
            } else {
                let mut pass: Vec<bool> = (0..ranges.rings).map(|_| rng.gen_bool(0.5)).collect();
                if !pass.iter().any(|&p| p) {
                    let i = rng.gen_range(0..pass.len());
                    pass[i] = true;
                }
                FourierFilterSpec::equal_rings(DEFAULT_LENS_DIAMETER / 2.0, pass)
            };
            let scale = if rng.gen_bool(0.5) { 1.0 } else { 1.5 };
            Ok(FrontEndSpec::fourier(encoding, filter, scale))
        }
    }
}

fn draw_object_filter(rng: &mut ChaCha8Rng, extent: f64, r: &SamplerRanges) -> ObjectFilterSpec {
    let half = extent / 2.0;
    let centre = |rng: &mut ChaCha8Rng| (rng.gen_range(-half..half), rng.gen_range(-half..half));
    let spot = |rng: &mut ChaCha8Rng, c: (f64, f64)| GaussianSpot {
        cx: c.0,
        cy: c.1,
        sigma_x: rng.gen_range(r.sigma.0..r.sigma.1),
        sigma_y: rng.gen_range(r.sigma.0..r.sigma.1),
    };
    let window = |rng: &mut ChaCha8Rng, c: (f64, f64)| SquareWindow {
        cx: c.0,
        cy: c.1,
        side: rng.gen_range(r.window_side.0..r.window_side.1),
    };
    match rng.gen_range(0..10) {
        0 => {
            let c = centre(rng);
            ObjectFilterSpec::Gaussian { spot: spot(rng, c) }
        }
        1 => {
            let k = rng.gen_range(2..=4);
            let spots = (0..k)
                .map(|_| {
                    let c = centre(rng);
                    spot(rng, c)
                })
                .collect();
            ObjectFilterSpec::MultiGaussian { spots }
        }
        2 => {
            let (cx, cy) = centre(rng);
            let width = rng.gen_range(r.window_side.0..r.window_side.1);
            if rng.gen_bool(0.5) {
                ObjectFilterSpec::Hamming { cx, cy, width }
            } else {
                ObjectFilterSpec::Hanning { cx, cy, width }
            }
        }
        3 => {
            let c = centre(rng);
            ObjectFilterSpec::Square {
                window: window(rng, c),
            }
        }
        4 => {
            let k = rng.gen_range(2..=4);
            let windows = (0..k)
                .map(|_| {
                    let c = centre(rng);
                    window(rng, c)
                })
                .collect();
            ObjectFilterSpec::MultiSquare { windows }
        }
        5 => {
            let (cx, cy) = centre(rng);
            ObjectFilterSpec::RotatedPatch {
                cx,
                cy,
                width: rng.gen_range(r.window_side.0..r.window_side.1),
                height: rng.gen_range(r.window_side.0..r.window_side.1),
                angle: rng.gen_range(0.0..PI),
            }
        }
        6 => {
            let (cx, cy) = centre(rng);
            ObjectFilterSpec::Circle {
                cx,
                cy,
                radius: rng.gen_range(r.window_side.0..r.window_side.1) / 2.0,
            }
        }
        7 => ObjectFilterSpec::Grating {
            period: rng.gen_range(r.grating_period.0..r.grating_period.1),
            angle: rng.gen_range(0.0..PI),
        },
        8 => {
            let (cx, cy) = centre(rng);
            ObjectFilterSpec::ZonePlate {
                cx,
                cy,
                focal: rng.gen_range(r.zone_focal.0..r.zone_focal.1),
            }
        }
        _ => {
            let c = centre(rng);
            let s = spot(rng, c);
            let c = centre(rng);
            ObjectFilterSpec::GaussianPlusSquare {
                spot: s,
                window: window(rng, c),
            }
        }
    }
}
