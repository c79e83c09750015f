//! Dataset ingestion: CIFAR-10 binary batches, grayscale conversion,
//! deterministic splits and augmentation.

mod audit;
mod cifar;
mod image;
pub mod synthetic;

pub use audit::{AuditEntry, SplitAudit};
pub use cifar::{load_cifar10, load_cifar10_with, CifarLayout, DataSplits, TEST_FILE, TRAIN_FILES};
pub use image::{flip_left_right, to_grayscale, Image, LabeledImage, LUMA_WEIGHTS};

use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitTag {
    Train,
    Validation,
    Test,
}

impl SplitTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Validation => "validation",
            SplitTag::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(SplitTag::Train),
            "validation" => Some(SplitTag::Validation),
            "test" => Some(SplitTag::Test),
            _ => None,
        }
    }
}

impl fmt::Display for SplitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
