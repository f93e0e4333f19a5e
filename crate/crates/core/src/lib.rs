// SPDX-License-Identifier: Apache-2.0

//! Deterministic kernels for radar-camera fusion in bird's-eye view and the
//! two 3D detection evaluation protocols (center-distance AP with
//! true-positive errors, rotated-IoU AP in 2D/BEV/3D).

pub mod bev;
pub mod camera;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod head;
pub mod radar;
pub mod tensor;

pub use bev::BevFeatureMap;
pub use error::{Error, Result};
pub use geometry::{Box3D, CameraModel, GridConfig, ObjectClass, Pose};
