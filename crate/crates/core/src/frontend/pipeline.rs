use num_complex::Complex64;

use super::{encode_input, make_fourier_filter, make_object_filter};
use super::{FourierFilterSpec, FrontEndSpec, Geometry, Placement};
use crate::data::Image;
use crate::optics::{lens, AmplitudeMask, ComplexField, GridSpec, Propagator};
use crate::{Error, Result};

/// A front end with every fixed element precomputed.
#[derive(Clone, Debug)]
pub struct FrontEnd {
    spec: FrontEndSpec,
    geometry: Geometry,
    stage: Stage,
}

#[derive(Clone, Debug)]
enum Stage {
    Object { mask: AmplitudeMask },
    Relay(Box<Relay>),
}

/// f – lens – f – filter – f – lens – f, simulated on a grid wide enough for
/// the lens, then cropped to the network grid behind the output aperture.
#[derive(Clone, Debug)]
struct Relay {
    geometry: Geometry,
    hop: Propagator,
    lens: Vec<Complex64>,
    // `None` for the trainable kind
    filter: Option<AmplitudeMask>,
    aperture: AmplitudeMask,
}

/// Intermediate state needed for the trainable-filter gradient.
#[derive(Clone, Debug, Default)]
pub struct FrontEndTrace {
    fourier_plane: Option<ComplexField>,
}

impl FrontEnd {
    pub fn new(spec: FrontEndSpec, geometry: Geometry) -> Result<Self> {
        spec.validate(&geometry)?;
        let stage = match &spec.placement {
            Placement::Object { filter } => Stage::Object {
                mask: make_object_filter(filter, &geometry)?,
            },
            Placement::Fourier {
                filter,
                aperture_scale,
                focal_length,
                lens_diameter,
            } => {
                let relay_grid = geometry.relay_grid(*lens_diameter)?;
                let (phase, amp) = lens(*focal_length, *lens_diameter, relay_grid)?;
                let lens = phase
                    .transmission()
                    .zip(amp.amplitude())
                    .map(|(t, a)| t * *a)
                    .collect();
                let filter = match filter {
                    FourierFilterSpec::Trainable => None,
                    fixed => Some(make_fourier_filter(fixed, relay_grid, None)?),
                };
                Stage::Relay(Box::new(Relay {
                    geometry: geometry.on_grid(relay_grid)?,
                    hop: Propagator::new(relay_grid, *focal_length)?,
                    lens,
                    filter,
                    aperture: Geometry::centred_square(
                        *geometry.grid(),
                        geometry.aperture_side(*aperture_scale),
                    )?,
                }))
            }
        };
        Ok(Self {
            spec,
            geometry,
            stage,
        })
    }

    pub fn spec(&self) -> &FrontEndSpec {
        &self.spec
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    /// Length of the trainable latent, if this front end has one.
    pub fn latent_len(&self) -> Option<usize> {
        match &self.stage {
            Stage::Relay(r) if r.filter.is_none() => Some(r.geometry.grid().len()),
            _ => None,
        }
    }

    /// Grid of the 4-f relay, when there is one.
    pub fn relay_grid(&self) -> Option<GridSpec> {
        match &self.stage {
            Stage::Relay(r) => Some(*r.geometry.grid()),
            Stage::Object { .. } => None,
        }
    }

    pub fn apply(&self, image: &Image, latent: Option<&[f64]>) -> Result<ComplexField> {
        let filter = self.trained_filter(latent)?;
        self.run(image, filter.as_ref(), false).map(|(f, _)| f)
    }

    pub fn apply_traced(
        &self,
        image: &Image,
        latent: Option<&[f64]>,
    ) -> Result<(ComplexField, FrontEndTrace)> {
        let filter = self.trained_filter(latent)?;
        self.run(image, filter.as_ref(), true)
    }

    /// Fourier-plane mask for `latent` when the filter is trainable, `None`
    /// otherwise. Lets callers build it once for many images.
    pub fn trained_filter(&self, latent: Option<&[f64]>) -> Result<Option<AmplitudeMask>> {
        match &self.stage {
            Stage::Relay(relay) if relay.filter.is_none() => {
                let latent = latent.ok_or_else(|| {
                    Error::invalid("trainable Fourier filter evaluated without its latent")
                })?;
                let grid = *relay.geometry.grid();
                Ok(Some(make_fourier_filter(
                    &FourierFilterSpec::Trainable,
                    grid,
                    Some(latent),
                )?))
            }
            _ => Ok(None),
        }
    }

    /// Like [`apply_traced`](Self::apply_traced) with a mask from
    /// [`trained_filter`](Self::trained_filter).
    pub fn apply_with_filter(
        &self,
        image: &Image,
        trained: Option<&AmplitudeMask>,
        keep: bool,
    ) -> Result<(ComplexField, FrontEndTrace)> {
        self.run(image, trained, keep)
    }

    fn run(
        &self,
        image: &Image,
        trained: Option<&AmplitudeMask>,
        keep: bool,
    ) -> Result<(ComplexField, FrontEndTrace)> {
        match &self.stage {
            Stage::Object { mask } => {
                let u = encode_input(image, &self.spec.encoding, &self.geometry, *self.geometry.grid())?;
                Ok((mask.apply(&u)?, FrontEndTrace::default()))
            }
            Stage::Relay(relay) => {
                let grid = *relay.geometry.grid();
                let filter = relay.filter.as_ref().or(trained).ok_or_else(|| {
                    Error::invalid("trainable Fourier filter evaluated without its latent")
                })?;
                let u = encode_input(image, &self.spec.encoding, &relay.geometry, grid)?;
                let u = relay.hop.propagate(&u)?;
                let u = relay.through_lens(u, false);
                let fourier_plane = relay.hop.propagate(&u)?;
                let u = filter.apply(&fourier_plane)?;
                let u = relay.hop.propagate(&u)?;
                let u = relay.through_lens(u, false);
                let u = relay.hop.propagate(&u)?;
                let out = relay.aperture.apply(&u.crop_center(*self.geometry.grid())?)?;
                let trace = FrontEndTrace {
                    fourier_plane: (keep && relay.filter.is_none()).then_some(fourier_plane),
                };
                Ok((out, trace))
            }
        }
    }

    /// `∂L/∂latent` given the cotangent of the front-end output and the
    /// trained mask used in the traced forward pass.
    pub fn latent_gradient(
        &self,
        trace: &FrontEndTrace,
        filter: &AmplitudeMask,
        cotangent: &ComplexField,
    ) -> Result<Vec<f64>> {
        let Stage::Relay(relay) = &self.stage else {
            return Err(Error::invalid("object-plane front ends have no latent"));
        };
        let Some(v) = &trace.fourier_plane else {
            return Err(Error::invalid("front-end trace was not recorded"));
        };
        if relay.filter.is_some() {
            return Err(Error::invalid("fixed Fourier filters have no latent"));
        }
        let grid = *relay.geometry.grid();
        let g = relay.aperture.apply(cotangent)?.embed_center(grid)?;
        let g = relay.hop.adjoint(&g)?;
        let g = relay.through_lens(g, true);
        let g = relay.hop.adjoint(&g)?;
        Ok(g.values()
            .iter()
            .zip(v.values())
            .zip(filter.amplitude())
            .map(|((gc, vc), a)| (gc.conj() * vc).re * a * (1.0 - a))
            .collect())
    }
}

impl Relay {
    fn through_lens(&self, mut u: ComplexField, adjoint: bool) -> ComplexField {
        for (v, t) in u.values_mut().iter_mut().zip(&self.lens) {
            *v *= if adjoint { t.conj() } else { *t };
        }
        u
    }
}
