//! Projective perceptually uniform colour coordinates.
//!
//! The crate builds the proLab transform from its metric parameters, converts
//! between nine colour spaces, evaluates non-uniformity and noise
//! heteroscedasticity criteria over a sampled object-colour gamut, and refits
//! the metric parameters.

// Negated comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod colorspaces;
pub mod data;
pub mod difference;
pub mod error;
pub mod gamut;
pub mod geometry;
pub mod linalg;
pub mod model;
pub mod noise;
pub mod optimizer;
pub mod par;
pub mod report;

pub use colorspaces::{ColorContext, ColorSpaceId, TaggedColor, Transform};
pub use error::{Error, Result};
pub use geometry::{Homography, Mat3, Mat4, PlaneParams, Vec3, Vec4};
pub use model::{build_p, constraint_values, MetricParams, WhitePoint};
pub use noise::NoiseModel;
