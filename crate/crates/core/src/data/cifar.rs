//! CIFAR-10 binary batches: each record is one label byte followed by
//! 1024 red, 1024 green and 1024 blue bytes in row-major order.

use std::path::Path;

use super::{Image, LabeledImage, SplitAudit, SplitTag, LUMA_WEIGHTS};
use crate::{Error, Result};

pub const TRAIN_FILES: [&str; 5] = [
    "data_batch_1.bin",
    "data_batch_2.bin",
    "data_batch_3.bin",
    "data_batch_4.bin",
    "data_batch_5.bin",
];
pub const TEST_FILE: &str = "test_batch.bin";

pub const IMAGE_SIDE: usize = 32;
const CHANNEL_BYTES: usize = IMAGE_SIDE * IMAGE_SIDE;
pub const RECORD_BYTES: usize = 1 + 3 * CHANNEL_BYTES;

/// Expected file shape and the validation rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CifarLayout {
    /// Exact record count per batch file, or `None` to accept any whole
    /// number of records.
    pub records_per_file: Option<usize>,
    /// Trailing train-origin records (in file order) held out for validation.
    pub validation_size: usize,
}

impl CifarLayout {
    pub const STANDARD: CifarLayout = CifarLayout {
        records_per_file: Some(10_000),
        validation_size: 5_000,
    };
}

/// Train/validation/test partition. Every read goes through an accessor
/// that logs the consuming stage in the shared [`SplitAudit`].
#[derive(Clone, Debug)]
pub struct DataSplits {
    train: Vec<LabeledImage>,
    validation: Vec<LabeledImage>,
    test: Vec<LabeledImage>,
    audit: SplitAudit,
}

impl DataSplits {
    pub fn from_parts(
        train: Vec<LabeledImage>,
        validation: Vec<LabeledImage>,
        test: Vec<LabeledImage>,
    ) -> Self {
        Self {
            train,
            validation,
            test,
            audit: SplitAudit::default(),
        }
    }

    pub fn train(&self, stage: &str) -> &[LabeledImage] {
        self.audit.record(stage, SplitTag::Train);
        &self.train
    }

    pub fn validation(&self, stage: &str) -> &[LabeledImage] {
        self.audit.record(stage, SplitTag::Validation);
        &self.validation
    }

    pub fn test(&self, stage: &str) -> &[LabeledImage] {
        self.audit.record(stage, SplitTag::Test);
        &self.test
    }

    pub fn split(&self, tag: SplitTag, stage: &str) -> &[LabeledImage] {
        match tag {
            SplitTag::Train => self.train(stage),
            SplitTag::Validation => self.validation(stage),
            SplitTag::Test => self.test(stage),
        }
    }

    /// `(train, validation, test)` sizes; not an audited read.
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.validation.len(), self.test.len())
    }

    pub fn audit(&self) -> &SplitAudit {
        &self.audit
    }

    /// Leading `n` images of each split (all of it when shorter). Shares the
    /// audit log.
    pub fn truncated(&self, train: usize, validation: usize, test: usize) -> Self {
        let head = |v: &[LabeledImage], n: usize| v[..n.min(v.len())].to_vec();
        Self {
            train: head(&self.train, train),
            validation: head(&self.validation, validation),
            test: head(&self.test, test),
            audit: self.audit.clone(),
        }
    }
}

pub fn load_cifar10(dir: impl AsRef<Path>) -> Result<DataSplits> {
    load_cifar10_with(dir, &CifarLayout::STANDARD)
}

pub fn load_cifar10_with(dir: impl AsRef<Path>, layout: &CifarLayout) -> Result<DataSplits> {
    let dir = dir.as_ref();
    // fail on the first missing file before parsing anything
    for name in TRAIN_FILES.iter().chain(std::iter::once(&TEST_FILE)) {
        let path = dir.join(name);
        if !path.is_file() {
            return Err(Error::Data {
                path,
                message: "missing CIFAR-10 batch file".into(),
            });
        }
    }

    let mut train_origin = Vec::new();
    for name in TRAIN_FILES {
        let start = train_origin.len();
        train_origin.extend(read_batch(&dir.join(name), layout, start)?);
    }
    let test = read_batch(&dir.join(TEST_FILE), layout, 0)?;

    if layout.validation_size >= train_origin.len() {
        return Err(Error::Data {
            path: dir.to_path_buf(),
            message: format!(
                "validation size {} leaves no training images out of {}",
                layout.validation_size,
                train_origin.len()
            ),
        });
    }
    let validation = train_origin.split_off(train_origin.len() - layout.validation_size);
    Ok(DataSplits::from_parts(train_origin, validation, test))
}

fn read_batch(path: &Path, layout: &CifarLayout, origin: usize) -> Result<Vec<LabeledImage>> {
    let bytes = std::fs::read(path).map_err(|e| Error::Data {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if bytes.is_empty() || bytes.len() % RECORD_BYTES != 0 {
        return Err(Error::Data {
            path: path.to_path_buf(),
            message: format!(
                "short file: {} bytes is not a whole number of {RECORD_BYTES}-byte records",
                bytes.len()
            ),
        });
    }
    let count = bytes.len() / RECORD_BYTES;
    if let Some(expected) = layout.records_per_file {
        if count != expected {
            return Err(Error::Data {
                path: path.to_path_buf(),
                message: format!("short file: {count} records, expected {expected}"),
            });
        }
    }
    bytes
        .chunks_exact(RECORD_BYTES)
        .enumerate()
        .map(|(i, rec)| {
            let label = rec[0];
            if label > 9 {
                return Err(Error::CorruptRecord {
                    path: path.to_path_buf(),
                    record: i,
                    label,
                });
            }
            let (r, rest) = rec[1..].split_at(CHANNEL_BYTES);
            let (g, b) = rest.split_at(CHANNEL_BYTES);
            let pixels = (0..CHANNEL_BYTES)
                .map(|p| f64::from(gray_byte(r[p], g[p], b[p])) / 255.0)
                .collect();
            Ok(LabeledImage {
                image: Image::new(IMAGE_SIDE, pixels)?,
                label,
                origin: origin + i,
            })
        })
        .collect()
}

/// Grayscale of an 8-bit RGB pixel, requantised to 8 bits the way an
/// integer image pipeline does (`⌊gray·255.5⌋`, saturating).
pub(crate) fn gray_byte(r: u8, g: u8, b: u8) -> u8 {
    let [wr, wg, wb] = LUMA_WEIGHTS;
    let gray = wr * f64::from(r) / 255.0 + wg * f64::from(g) / 255.0 + wb * f64::from(b) / 255.0;
    (gray * 255.5).clamp(0.0, 255.0) as u8
}
