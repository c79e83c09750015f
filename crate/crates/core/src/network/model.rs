use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::frontend::{FrontEnd, FrontEndSpec, Geometry};
use crate::optics::{DetectorLayout, GridSpec, PhaseLayer};
use crate::{Error, Result, CLASS_COUNT};

/// Everything about a network except its front end and trained values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub grid: GridSpec,
    pub image_side: usize,
    pub layers: usize,
    pub layer_spacing: f64,
    pub detector_distance: f64,
    pub detector_width: f64,
    /// Centre-to-centre spacing of the detector lattice.
    pub detector_spacing: f64,
    pub temperature: f64,
    pub classes: usize,
}

impl Architecture {
    /// 128×128 neurons at 0.5λ with 6.4λ detectors.
    pub fn paper() -> Self {
        Self {
            grid: GridSpec::new(128, 0.5).expect("valid grid"),
            image_side: 32,
            layers: 5,
            layer_spacing: 40.0,
            detector_distance: 40.0,
            detector_width: 6.4,
            detector_spacing: 12.8,
            temperature: 0.1,
            classes: CLASS_COUNT,
        }
    }

    /// 64×64 neurons; detectors shrink to 3.2λ so the lattice fits.
    pub fn desk() -> Self {
        Self {
            grid: GridSpec::new(64, 0.5).expect("valid grid"),
            detector_width: 3.2,
            detector_spacing: 6.4,
            ..Self::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::invalid("a network needs at least one layer"));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::invalid(format!("temperature {} must be positive", self.temperature)));
        }
        for (name, d) in [
            ("layer spacing", self.layer_spacing),
            ("detector distance", self.detector_distance),
        ] {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::invalid(format!("{name} {d} must be finite and nonnegative")));
            }
        }
        if self.classes == 0 {
            return Err(Error::invalid("class count must be positive"));
        }
        self.geometry()?;
        self.layout()?;
        Ok(())
    }

    pub fn geometry(&self) -> Result<Geometry> {
        Geometry::standard(self.grid, self.image_side)
    }

    pub fn layout(&self) -> Result<DetectorLayout> {
        DetectorLayout::lattice(self.grid, self.detector_width, self.detector_spacing, self.classes)
    }
}

/// One trainable classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct D2nnModel {
    pub(crate) geometry: Geometry,
    pub(crate) front_end: FrontEndSpec,
    pub(crate) layers: Vec<PhaseLayer>,
    pub(crate) layer_spacing: f64,
    pub(crate) detector_distance: f64,
    pub(crate) layout: DetectorLayout,
    pub(crate) temperature: f64,
    pub(crate) latent: Option<Vec<f64>>,
}

impl D2nnModel {
    /// Phases uniform in `[0, 2π)`, rounded to single precision so that a
    /// checkpoint holds them exactly. A trainable filter latent starts at
    /// zero (amplitude ½).
    pub fn random(arch: &Architecture, front_end: FrontEndSpec, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = arch.grid;
        let layers = (0..arch.layers)
            .map(|_| {
                let phase = (0..grid.len())
                    .map(|_| f64::from(rng.gen_range(0.0..TAU) as f32))
                    .collect();
                PhaseLayer::new(grid, phase)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(arch, front_end, layers, None)
    }

    /// Assembles a model; `latent` is required exactly when the front end
    /// has a trainable filter and defaults to zeros when omitted.
    pub fn from_parts(
        arch: &Architecture,
        front_end: FrontEndSpec,
        layers: Vec<PhaseLayer>,
        latent: Option<Vec<f64>>,
    ) -> Result<Self> {
        arch.validate()?;
        let layout = arch.layout()?;
        Self::assemble(
            arch.geometry()?,
            front_end,
            layers,
            arch.layer_spacing,
            arch.detector_distance,
            layout,
            arch.temperature,
            latent,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        geometry: Geometry,
        front_end: FrontEndSpec,
        layers: Vec<PhaseLayer>,
        layer_spacing: f64,
        detector_distance: f64,
        layout: DetectorLayout,
        temperature: f64,
        latent: Option<Vec<f64>>,
    ) -> Result<Self> {
        let grid = *geometry.grid();
        if layers.is_empty() {
            return Err(Error::invalid("a network needs at least one layer"));
        }
        for l in &layers {
            grid.ensure_same(l.grid())?;
        }
        grid.ensure_same(layout.grid())?;
        let fe = FrontEnd::new(front_end.clone(), geometry)?;
        let latent = match (fe.latent_len(), latent) {
            (None, None) => None,
            (Some(n), None) => Some(vec![0.0; n]),
            (Some(n), Some(v)) if v.len() == n => {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite("filter latent".into()));
                }
                Some(v)
            }
            (Some(n), Some(v)) => {
                return Err(Error::invalid(format!(
                    "filter latent has {} values, expected {n}",
                    v.len()
                )))
            }
            (None, Some(_)) => {
                return Err(Error::invalid("front end has no trainable filter for the latent"))
            }
        };
        Ok(Self {
            geometry,
            front_end,
            layers,
            layer_spacing,
            detector_distance,
            layout,
            temperature,
            latent,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        self.geometry.grid()
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn front_end(&self) -> &FrontEndSpec {
        &self.front_end
    }

    pub fn layers(&self) -> &[PhaseLayer] {
        &self.layers
    }

    pub fn layer_spacing(&self) -> f64 {
        self.layer_spacing
    }

    pub fn detector_distance(&self) -> f64 {
        self.detector_distance
    }

    pub fn layout(&self) -> &DetectorLayout {
        &self.layout
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn classes(&self) -> usize {
        self.layout.classes()
    }

    pub fn latent(&self) -> Option<&[f64]> {
        self.latent.as_deref()
    }

    /// Total trainable parameter count.
    pub fn parameter_count(&self) -> usize {
        self.layers.len() * self.grid().len() + self.latent.as_ref().map_or(0, Vec::len)
    }

    /// Layer phases followed by the latent, flattened.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            out.extend_from_slice(l.phase());
        }
        if let Some(z) = &self.latent {
            out.extend_from_slice(z);
        }
        out
    }

    /// Inverse of [`parameters`](Self::parameters).
    pub fn set_parameters(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.parameter_count() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                self.parameter_count(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model parameters".into()));
        }
        let n = self.grid().len();
        let mut chunks = values.chunks(n);
        for l in &mut self.layers {
            l.phase_mut().copy_from_slice(chunks.next().expect("length checked"));
        }
        if let Some(z) = &mut self.latent {
            z.copy_from_slice(&values[self.layers.len() * n..]);
        }
        Ok(())
    }

    /// Copy with every parameter rounded to single precision, the precision
    /// of the checkpoint format.
    pub fn quantized(&self) -> Self {
        let mut out = self.clone();
        for l in &mut out.layers {
            for p in l.phase_mut() {
                *p = f64::from(*p as f32);
            }
        }
        if let Some(z) = &mut out.latent {
            for v in z {
                *v = f64::from(*v as f32);
            }
        }
        out
    }

    /// Same model with the `+` and `−` detectors of `class` exchanged.
    pub fn with_swapped_detectors(&self, class: usize) -> Self {
        let mut out = self.clone();
        out.layout = self.layout.swap_polarity(class);
        out
    }
}
