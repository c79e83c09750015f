use rayon::prelude::*;

use super::scores::{d2nn_loss, differential_scores, loss_gradient, score_gradient, Denominator};
use super::D2nnModel;
use crate::data::{Image, LabeledImage};
use crate::frontend::{FrontEnd, FrontEndTrace};
use crate::optics::{AmplitudeMask, Complex64, ComplexField, Propagator};
use crate::{Error, Result};

/// Result of one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Forward {
    /// Temperature-scaled differential scores, one per class.
    pub scores: Vec<f64>,
    /// Detector signals in layout order.
    pub signals: Vec<f64>,
}

impl Forward {
    /// Highest-scoring class, lowest index on ties.
    pub fn predicted(&self) -> usize {
        argmax(&self.scores)
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Parameter gradients, shaped like the model parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientBundle {
    pub layers: Vec<Vec<f64>>,
    pub latent: Option<Vec<f64>>,
}

impl GradientBundle {
    fn zeros_like(model: &D2nnModel) -> Self {
        Self {
            layers: vec![vec![0.0; model.grid().len()]; model.layers().len()],
            latent: model.latent().map(|z| vec![0.0; z.len()]),
        }
    }

    fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        if let (Some(a), Some(b)) = (&mut self.latent, &other.latent) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.iter_mut().for_each(|x| *x *= factor);
        }
        if let Some(z) = &mut self.latent {
            z.iter_mut().for_each(|x| *x *= factor);
        }
    }

    /// Same layout as [`D2nnModel::parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.layers.concat();
        if let Some(z) = &self.latent {
            out.extend_from_slice(z);
        }
        out
    }
}

/// One labelled input for a gradient evaluation.
#[derive(Clone, Copy, Debug)]
pub struct Sample<'a> {
    pub image: &'a Image,
    pub label: usize,
}

/// Batch-level outcome of [`Bench::batch_gradient`].
#[derive(Clone, Debug)]
pub struct BatchGradient {
    pub mean_loss: f64,
    pub correct: usize,
    pub gradient: GradientBundle,
}

/// Precomputed propagation kernels and front end for one model structure.
///
/// A bench depends only on the front end, grid and distances, so it serves
/// every parameter value of the model it was built from.
#[derive(Clone, Debug)]
pub struct Bench {
    front_end: FrontEnd,
    hop: Propagator,
    last_hop: Propagator,
}

/// Per-parameter-value quantities shared by every image.
struct Prepared {
    transmissions: Vec<Vec<Complex64>>,
    filter: Option<AmplitudeMask>,
}

struct Trace {
    front: FrontEndTrace,
    // field entering each phase layer
    inputs: Vec<ComplexField>,
    detector_field: ComplexField,
}

impl Bench {
    pub fn new(model: &D2nnModel) -> Result<Self> {
        let grid = *model.grid();
        let hop = Propagator::new(grid, model.layer_spacing())?;
        let last_hop = if model.detector_distance() == model.layer_spacing() {
            hop.clone()
        } else {
            Propagator::new(grid, model.detector_distance())?
        };
        Ok(Self {
            front_end: FrontEnd::new(model.front_end().clone(), *model.geometry())?,
            hop,
            last_hop,
        })
    }

    fn check(&self, model: &D2nnModel) -> Result<()> {
        if self.front_end.spec() != model.front_end() || self.hop.grid() != model.grid() {
            return Err(Error::invalid("bench was built for a different model"));
        }
        Ok(())
    }

    fn prepare(&self, model: &D2nnModel) -> Result<Prepared> {
        self.check(model)?;
        Ok(Prepared {
            transmissions: model.layers().iter().map(|l| l.transmission().collect()).collect(),
            filter: self.front_end.trained_filter(model.latent())?,
        })
    }

    fn run(
        &self,
        model: &D2nnModel,
        prep: &Prepared,
        image: &Image,
        keep: bool,
    ) -> Result<(Vec<f64>, Option<Trace>)> {
        let (mut u, front) = self.front_end.apply_with_filter(image, prep.filter.as_ref(), keep)?;
        let mut inputs = Vec::new();
        for t in &prep.transmissions {
            let v = self.hop.propagate(&u)?;
            u = v.clone();
            for (x, t) in u.values_mut().iter_mut().zip(t) {
                *x *= t;
            }
            if keep {
                inputs.push(v);
            }
        }
        let out = self.last_hop.propagate(&u)?;
        let signals = model.layout().readout(&out)?;
        let trace = keep.then(|| Trace {
            front,
            inputs,
            detector_field: out,
        });
        Ok((signals, trace))
    }

    /// Scores of one image; degenerate classes are an error.
    pub fn forward(&self, model: &D2nnModel, image: &Image) -> Result<Forward> {
        let prep = self.prepare(model)?;
        self.forward_prepared(model, &prep, image)
    }

    fn forward_prepared(&self, model: &D2nnModel, prep: &Prepared, image: &Image) -> Result<Forward> {
        let (signals, _) = self.run(model, prep, image, false)?;
        let pairs = model.layout().class_signals(&signals);
        let scores = differential_scores(&pairs, model.temperature(), Denominator::Strict)?;
        Ok(Forward { scores, signals })
    }

    /// Predicted class of each image, `None` where a class signal is
    /// degenerate. Parallel over images, results in input order.
    pub fn predict_all(&self, model: &D2nnModel, images: &[LabeledImage]) -> Result<Vec<Option<usize>>> {
        let prep = self.prepare(model)?;
        images
            .par_iter()
            .map(|s| match self.forward_prepared(model, &prep, &s.image) {
                Ok(f) => Ok(Some(f.predicted())),
                Err(Error::DegenerateSignal { .. }) => Ok(None),
                Err(e) => Err(e),
            })
            .collect()
    }

    /// Raw detector signals of each image, in input order.
    pub fn signals_all(&self, model: &D2nnModel, images: &[LabeledImage]) -> Result<Vec<Vec<f64>>> {
        let prep = self.prepare(model)?;
        images
            .par_iter()
            .map(|s| self.run(model, &prep, &s.image, false).map(|(sig, _)| sig))
            .collect()
    }

    /// Fraction of `images` classified correctly; degenerate inputs count as
    /// wrong.
    pub fn accuracy(&self, model: &D2nnModel, images: &[LabeledImage]) -> Result<f64> {
        if images.is_empty() {
            return Err(Error::EmptySplit("accuracy evaluation".into()));
        }
        let preds = self.predict_all(model, images)?;
        let correct = preds
            .iter()
            .zip(images)
            .filter(|(p, s)| **p == Some(usize::from(s.label)))
            .count();
        Ok(correct as f64 / images.len() as f64)
    }

    /// Loss, gradient and forward result for one labelled image.
    pub fn backward(
        &self,
        model: &D2nnModel,
        image: &Image,
        label: usize,
        mode: Denominator,
    ) -> Result<(f64, GradientBundle, Forward)> {
        let prep = self.prepare(model)?;
        self.backward_prepared(model, &prep, image, label, mode)
    }

    fn backward_prepared(
        &self,
        model: &D2nnModel,
        prep: &Prepared,
        image: &Image,
        label: usize,
        mode: Denominator,
    ) -> Result<(f64, GradientBundle, Forward)> {
        let (signals, trace) = self.run(model, prep, image, true)?;
        let trace = trace.expect("trace requested");
        let layout = model.layout();
        let k = model.temperature();
        let pairs = layout.class_signals(&signals);
        let scores = differential_scores(&pairs, k, mode)?;
        let loss = d2nn_loss(&scores, label)?;
        let dz = loss_gradient(&scores, label);
        let ds = score_gradient(&pairs, k, mode, &dz)?;

        let mut g = layout.readout_adjoint(&trace.detector_field, &ds)?;
        g = self.last_hop.adjoint(&g)?;
        let mut layer_grads = vec![Vec::new(); model.layers().len()];
        for (i, trans) in prep.transmissions.iter().enumerate().rev() {
            let v = &trace.inputs[i];
            let mut dphi = Vec::with_capacity(v.values().len());
            let mut back = Vec::with_capacity(v.values().len());
            for ((gy, vi), t) in g.values().iter().zip(v.values()).zip(trans) {
                let y = t * vi;
                dphi.push(-(gy.conj() * y).im);
                back.push(t.conj() * gy);
            }
            layer_grads[i] = dphi;
            g = self.hop.adjoint(&ComplexField::new(*v.grid(), back)?)?;
        }
        let latent = match &prep.filter {
            Some(f) => Some(self.front_end.latent_gradient(&trace.front, f, &g)?),
            None => None,
        };
        let bundle = GradientBundle {
            layers: layer_grads,
            latent,
        };
        Ok((loss, bundle, Forward { scores, signals }))
    }

    /// Mean loss and mean gradient over `samples`. Per-sample work runs in
    /// parallel; the reduction is summed in sample order so the result does
    /// not depend on the thread count.
    pub fn batch_gradient(
        &self,
        model: &D2nnModel,
        samples: &[Sample<'_>],
        mode: Denominator,
    ) -> Result<BatchGradient> {
        if samples.is_empty() {
            return Err(Error::EmptySplit("gradient batch".into()));
        }
        let prep = self.prepare(model)?;
        let parts: Vec<(f64, GradientBundle, Forward)> = samples
            .par_iter()
            .map(|s| self.backward_prepared(model, &prep, s.image, s.label, mode))
            .collect::<Result<_>>()?;
        let mut gradient = GradientBundle::zeros_like(model);
        let mut loss = 0.0;
        let mut correct = 0;
        for ((l, g, f), s) in parts.iter().zip(samples) {
            loss += l;
            gradient.add_assign(g);
            if f.predicted() == s.label {
                correct += 1;
            }
        }
        let n = samples.len() as f64;
        gradient.scale(1.0 / n);
        Ok(BatchGradient {
            mean_loss: loss / n,
            correct,
            gradient,
        })
    }
}
