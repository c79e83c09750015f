//! Model checkpoint file.
//!
//! Layout after the shared `magic ‖ version` header, all little-endian:
//!
//! ```text
//! u32 side, f64 pitch, u32 image_side, u32 replication
//! str front-end spec (TOML)
//! f64 temperature, u32 classes, f64 layer_spacing, f64 detector_distance
//! f64 detector_width, u32 detector_count,
//!     per detector: f64 x, f64 y, u32 class, u8 polarity (0 = +, 1 = −)
//! u32 layer_count, then layer_count × side² f32 phases (row-major)
//! u8 has_latent, [u32 latent_len, latent_len × f32]
//! 32-byte SHA-256 of everything before it
//! ```

use std::fs;
use std::path::Path;

use super::D2nnModel;
use crate::format::{Reader, Writer};
use crate::frontend::{FrontEndSpec, Geometry};
use crate::optics::{DetectorLayout, GridSpec, PhaseLayer, Polarity};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"D2NN";
pub const CHECKPOINT_VERSION: u32 = 1;

impl D2nnModel {
    /// Serialises the model. Parameters are written as `f32`; a
    /// [`quantized`](D2nnModel::quantized) model round-trips bit-exactly.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::new(CHECKPOINT_MAGIC, CHECKPOINT_VERSION);
        let g = self.geometry();
        w.u32(g.grid().side() as u32);
        w.f64(g.grid().pitch());
        w.u32(g.image_side() as u32);
        w.u32(g.replication() as u32);
        let spec = toml::to_string(self.front_end()).map_err(|e| Error::Serialization(e.to_string()))?;
        w.str(&spec);
        w.f64(self.temperature());
        w.u32(self.classes() as u32);
        w.f64(self.layer_spacing());
        w.f64(self.detector_distance());
        let layout = self.layout();
        w.f64(layout.width());
        w.u32(layout.detectors().len() as u32);
        for d in layout.detectors() {
            w.f64(d.center.0);
            w.f64(d.center.1);
            w.u32(d.class as u32);
            w.u8(match d.polarity {
                Polarity::Positive => 0,
                Polarity::Negative => 1,
            });
        }
        w.u32(self.layers().len() as u32);
        for l in self.layers() {
            for p in l.phase() {
                w.f32(*p as f32);
            }
        }
        match self.latent() {
            Some(z) => {
                w.u8(1);
                w.u32(z.len() as u32);
                for v in z {
                    w.f32(*v as f32);
                }
            }
            None => w.u8(0),
        }
        Ok(w.finish())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::open(bytes, CHECKPOINT_MAGIC, CHECKPOINT_VERSION)?;
        let side = r.u32()? as usize;
        let grid = GridSpec::new(side, r.f64()?)?;
        let image_side = r.u32()? as usize;
        let replication = r.u32()? as usize;
        let geometry = Geometry::new(grid, image_side, replication)?;
        let spec: FrontEndSpec =
            toml::from_str(&r.str()?).map_err(|e| Error::Format(format!("front-end spec: {e}")))?;
        let temperature = r.f64()?;
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::Format(format!("temperature {temperature}")));
        }
        let classes = r.u32()? as usize;
        let layer_spacing = r.f64()?;
        let detector_distance = r.f64()?;
        let width = r.f64()?;
        let count = r.u32()? as usize;
        if count != 2 * classes {
            return Err(Error::Format(format!("{count} detectors for {classes} classes")));
        }
        let mut centers = Vec::with_capacity(count);
        let mut assignment = Vec::with_capacity(count);
        for _ in 0..count {
            centers.push((r.f64()?, r.f64()?));
            let class = r.u32()? as usize;
            let polarity = match r.u8()? {
                0 => Polarity::Positive,
                1 => Polarity::Negative,
                b => return Err(Error::Format(format!("polarity byte {b}"))),
            };
            assignment.push((class, polarity));
        }
        let layout = DetectorLayout::new(grid, width, &centers, &assignment)?;
        let n_layers = r.u32()? as usize;
        let mut layers = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            let phase = r.f32_vec(grid.len())?.into_iter().map(f64::from).collect();
            layers.push(PhaseLayer::new(grid, phase)?);
        }
        let latent = match r.u8()? {
            0 => None,
            1 => {
                let n = r.u32()? as usize;
                Some(r.f32_vec(n)?.into_iter().map(f64::from).collect())
            }
            b => return Err(Error::Format(format!("latent flag byte {b}"))),
        };
        r.finish()?;
        Self::assemble(
            geometry,
            spec,
            layers,
            layer_spacing,
            detector_distance,
            layout,
            temperature,
            latent,
        )
    }
}

/// Writes atomically: the bytes go to a sibling temporary file that is then
/// renamed over `path`.
pub fn save_checkpoint(model: &D2nnModel, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &model.to_bytes()?)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<D2nnModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::Data {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    D2nnModel::from_bytes(&bytes)
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let named = |e: std::io::Error| std::io::Error::new(e.kind(), format!("{}: {e}", path.display()));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(named)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    fs::write(&tmp, bytes).map_err(named)?;
    fs::rename(&tmp, path).map_err(named)?;
    Ok(())
}
