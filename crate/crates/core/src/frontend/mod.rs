//! Input encoding and feature-engineering front ends.
//!
//! A front end turns a grayscale image into the complex field that enters
//! the diffractive stack. It either multiplies the encoded object by a fixed
//! amplitude mask (object plane) or relays it through a 4-f system with an
//! amplitude filter in the Fourier plane.

mod encode;
mod geometry;
mod masks;
mod pipeline;
mod sampler;
mod spec;

pub use encode::encode_input;
pub use geometry::Geometry;
pub use masks::{logistic, make_fourier_filter, make_object_filter};
pub use pipeline::{FrontEnd, FrontEndTrace};
pub use sampler::{sample_pool_specs, Category, PoolCounts, SamplerRanges};
pub use spec::{
    EncodingSpec, FourierFilterSpec, FrontEndSpec, GaussianSpot, ObjectFilterSpec, PhaseRange,
    Placement, SquareWindow, DEFAULT_FOCAL_LENGTH, DEFAULT_LENS_DIAMETER,
};
