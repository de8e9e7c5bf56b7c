//! Manhattan-world camera pose from vanishing points.
//!
//! Line segments vote for vanishing directions on a polar grid over the
//! Gaussian sphere, the winning directions are refined by SVD, a rotation is
//! fitted to an anchored Manhattan frame with Levenberg-Marquardt, and the
//! translation follows linearly from point correspondences under RANSAC.
//!
//! Geometry and solvers are generic over [`scalar::Real`] (`f32` or `f64`);
//! the synthetic generator, file formats and CLI work in `f64`.

pub mod cli;
pub mod error;
pub mod geometry;
pub mod io_eval;
pub mod manhattan_rotation;
pub mod pipeline;
pub mod scalar;
pub mod synthworld;
pub mod translation;
pub mod vp_detect;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Rotation = geometry::Rotation<f64>;
pub type Rotation32 = geometry::Rotation<f32>;
pub type Pose = geometry::Pose<f64>;
pub type Pose32 = geometry::Pose<f32>;
pub type CameraIntrinsics = geometry::CameraIntrinsics<f64>;
pub type CameraIntrinsics32 = geometry::CameraIntrinsics<f32>;
pub type LineObservation = geometry::LineObservation<f64>;
pub type LineObservation32 = geometry::LineObservation<f32>;
pub type PointCorrespondence = translation::PointCorrespondence<f64>;
pub type PointCorrespondence32 = translation::PointCorrespondence<f32>;
pub type FrameObservation = pipeline::FrameObservation<f64>;
pub type FrameObservation32 = pipeline::FrameObservation<f32>;
pub type ManhattanFrame = manhattan_rotation::ManhattanFrame<f64>;
pub type ManhattanFrame32 = manhattan_rotation::ManhattanFrame<f32>;
pub type Similarity = io_eval::Similarity<f64>;
