// SPDX-License-Identifier: Apache-2.0

//! Coordinate frames, rigid transforms, pinhole projection and box corners.
//!
//! Frame conventions used throughout the crate:
//!
//! * ego frame: x forward, y left, z up (meters);
//! * camera frame: x right, y down, z along the optical axis;
//! * yaw is measured about +z, zero along +x, counterclockwise.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ORTHONORMAL_TOL: f64 = 1e-6;

/// Rigid transform `p -> rotation * p + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoseRepr", into = "PoseRepr")]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseRepr {
    /// Row-major 3x3.
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

impl TryFrom<PoseRepr> for Pose {
    type Error = Error;

    fn try_from(r: PoseRepr) -> Result<Self> {
        let rotation = Matrix3::from_fn(|i, j| r.rotation[i][j]);
        Pose::new(rotation, Vector3::from(r.translation))
    }
}

impl From<Pose> for PoseRepr {
    fn from(p: Pose) -> Self {
        let m = &p.rotation;
        PoseRepr {
            rotation: [
                [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
                [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
                [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
            ],
            translation: [p.translation.x, p.translation.y, p.translation.z],
        }
    }
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if !rotation.iter().chain(translation.iter()).all(|v| v.is_finite()) {
            return Err(Error::Config("pose contains non-finite values".into()));
        }
        let gram = rotation.transpose() * rotation;
        let off = (gram - Matrix3::identity()).abs().max();
        let det = rotation.determinant();
        if off > ORTHONORMAL_TOL || (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::Config(format!(
                "rotation is not a proper orthonormal matrix (|RᵀR - I| = {off:.3e}, det = {det})"
            )));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    /// Rotation about +z by `yaw` radians followed by translation `t`.
    pub fn from_yaw_translation(yaw: f64, t: Vector3<f64>) -> Self {
        let (s, c) = yaw.sin_cos();
        Self {
            rotation: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            translation: t,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Pose) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }
}

pub fn transform_points(pose: &Pose, points: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    points.iter().map(|p| pose.apply(p)).collect()
}

/// Pinhole camera with ego-to-camera extrinsics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CameraRepr", into = "CameraRepr")]
pub struct CameraModel {
    intrinsics: Matrix3<f64>,
    intrinsics_inv: Matrix3<f64>,
    extrinsics: Pose,
    width: u32,
    height: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraRepr {
    intrinsics: [[f64; 3]; 3],
    extrinsics: Pose,
    width: u32,
    height: u32,
}

impl TryFrom<CameraRepr> for CameraModel {
    type Error = Error;

    fn try_from(r: CameraRepr) -> Result<Self> {
        let k = Matrix3::from_fn(|i, j| r.intrinsics[i][j]);
        CameraModel::new(k, r.extrinsics, r.width, r.height)
    }
}

impl From<CameraModel> for CameraRepr {
    fn from(c: CameraModel) -> Self {
        let k = &c.intrinsics;
        CameraRepr {
            intrinsics: [
                [k[(0, 0)], k[(0, 1)], k[(0, 2)]],
                [k[(1, 0)], k[(1, 1)], k[(1, 2)]],
                [k[(2, 0)], k[(2, 1)], k[(2, 2)]],
            ],
            extrinsics: c.extrinsics,
            width: c.width,
            height: c.height,
        }
    }
}

/// Projection of one ego-frame point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
    pub valid: bool,
}

impl CameraModel {
    pub fn new(intrinsics: Matrix3<f64>, extrinsics: Pose, width: u32, height: u32) -> Result<Self> {
        let (fx, fy) = (intrinsics[(0, 0)], intrinsics[(1, 1)]);
        let (cx, cy) = (intrinsics[(0, 2)], intrinsics[(1, 2)]);
        if !(fx > 0.0 && fy > 0.0) {
            return Err(Error::Config(format!("focal lengths must be positive, got ({fx}, {fy})")));
        }
        if !(cx > 0.0 && cx < width as f64 && cy > 0.0 && cy < height as f64) {
            return Err(Error::Config(format!(
                "principal point ({cx}, {cy}) outside image {width}x{height}"
            )));
        }
        if intrinsics[(1, 0)] != 0.0
            || intrinsics[(2, 0)] != 0.0
            || intrinsics[(2, 1)] != 0.0
            || intrinsics[(2, 2)] != 1.0
        {
            return Err(Error::Config("intrinsics must be upper triangular with K[2][2] = 1".into()));
        }
        let intrinsics_inv = intrinsics
            .try_inverse()
            .ok_or_else(|| Error::Config("singular intrinsics".into()))?;
        Ok(Self {
            intrinsics,
            intrinsics_inv,
            extrinsics,
            width,
            height,
        })
    }

    /// Camera looking along ego +x, mounted at `position` (ego frame), no skew.
    pub fn front_facing(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
        position: Vector3<f64>,
    ) -> Result<Self> {
        // camera x = -ego y, camera y = -ego z, camera z = ego x
        let rotation = Matrix3::new(0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0);
        let extrinsics = Pose::new(rotation, -(rotation * position))?;
        let k = Matrix3::new(fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0);
        Self::new(k, extrinsics, width, height)
    }

    pub fn intrinsics(&self) -> &Matrix3<f64> {
        &self.intrinsics
    }

    pub fn extrinsics(&self) -> &Pose {
        &self.extrinsics
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Projects a camera-frame point. Image bounds are closed.
    pub fn project_camera_point(&self, p: &Vector3<f64>) -> Projection {
        let depth = p.z;
        if !(depth > 0.0) {
            return Projection {
                u: f64::NAN,
                v: f64::NAN,
                depth,
                valid: false,
            };
        }
        let h = self.intrinsics * p;
        let (u, v) = (h.x / depth, h.y / depth);
        let valid = (0.0..=self.width as f64).contains(&u) && (0.0..=self.height as f64).contains(&v);
        Projection { u, v, depth, valid }
    }

    pub fn project(&self, p_ego: &Vector3<f64>) -> Projection {
        self.project_camera_point(&self.extrinsics.apply(p_ego))
    }

    /// Ego-frame point at `depth` along the ray through pixel `(u, v)`.
    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> Vector3<f64> {
        let p_cam = self.intrinsics_inv * Vector3::new(u, v, 1.0) * depth;
        self.extrinsics.inverse().apply(&p_cam)
    }
}

pub fn project_to_image(camera: &CameraModel, points_ego: &[Vector3<f64>]) -> Vec<Projection> {
    points_ego.iter().map(|p| camera.project(p)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectClass {
    Pedestrian,
    Cyclist,
    Car,
}

impl ObjectClass {
    pub const ALL: [ObjectClass; 3] = [ObjectClass::Pedestrian, ObjectClass::Cyclist, ObjectClass::Car];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ObjectClass::Pedestrian => "pedestrian",
            ObjectClass::Cyclist => "cyclist",
            ObjectClass::Car => "car",
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            ObjectClass::Pedestrian => "ped",
            ObjectClass::Cyclist => "cyc",
            ObjectClass::Car => "car",
        }
    }
}

impl fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ObjectClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s || c.short_name() == s)
            .ok_or_else(|| Error::Config(format!("unknown class `{s}`")))
    }
}

/// Maps any angle to `(-π, π]`.
pub fn normalize_yaw(yaw: f64) -> f64 {
    let mut a = yaw.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    // rem_euclid can round up to exactly 2π
    if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Oriented box in the ego frame; `center` is the geometric center and
/// `size` is (length along heading, width, height).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxRepr", into = "BoxRepr")]
pub struct Box3D {
    pub center: Vector3<f64>,
    pub size: Vector3<f64>,
    pub yaw: f64,
    pub velocity: Vector2<f64>,
    pub class: ObjectClass,
    pub attribute: Option<u32>,
    pub score: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxRepr {
    center: [f64; 3],
    size: [f64; 3],
    yaw: f64,
    #[serde(default)]
    velocity: [f64; 2],
    class: ObjectClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    attribute: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
}

impl TryFrom<BoxRepr> for Box3D {
    type Error = Error;

    fn try_from(r: BoxRepr) -> Result<Self> {
        let b = Box3D {
            center: Vector3::from(r.center),
            size: Vector3::from(r.size),
            yaw: r.yaw,
            velocity: Vector2::from(r.velocity),
            class: r.class,
            attribute: r.attribute,
            score: r.score,
        };
        b.validate()?;
        Ok(b)
    }
}

impl From<Box3D> for BoxRepr {
    fn from(b: Box3D) -> Self {
        BoxRepr {
            center: b.center.into(),
            size: b.size.into(),
            yaw: b.yaw,
            velocity: b.velocity.into(),
            class: b.class,
            attribute: b.attribute,
            score: b.score,
        }
    }
}

impl Box3D {
    /// Ground-truth style box: zero velocity, no attribute, no score.
    pub fn new(center: Vector3<f64>, size: Vector3<f64>, yaw: f64, class: ObjectClass) -> Self {
        Self {
            center,
            size,
            yaw: normalize_yaw(yaw),
            velocity: Vector2::zeros(),
            class,
            attribute: None,
            score: None,
        }
    }

    pub fn with_score(mut self, score: f64) -> Self {
        self.score = Some(score);
        self
    }

    pub fn with_velocity(mut self, vx: f64, vy: f64) -> Self {
        self.velocity = Vector2::new(vx, vy);
        self
    }

    pub fn with_attribute(mut self, attribute: u32) -> Self {
        self.attribute = Some(attribute);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self
            .center
            .iter()
            .chain(self.size.iter())
            .chain(self.velocity.iter())
            .chain(std::iter::once(&self.yaw))
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("box contains non-finite values".into()));
        }
        if self.size.iter().any(|&s| s <= 0.0) {
            return Err(Error::Config(format!("box size must be positive, got {:?}", self.size.as_slice())));
        }
        if let Some(s) = self.score {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::Config(format!("score {s} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.size.x
    }

    pub fn width(&self) -> f64 {
        self.size.y
    }

    pub fn height(&self) -> f64 {
        self.size.z
    }

    pub fn bev_area(&self) -> f64 {
        self.size.x * self.size.y
    }

    pub fn volume(&self) -> f64 {
        self.size.x * self.size.y * self.size.z
    }

    pub fn z_range(&self) -> (f64, f64) {
        let half = 0.5 * self.size.z;
        (self.center.z - half, self.center.z + half)
    }
}

/// Footprint corners, counterclockwise, starting at front-left.
pub fn box_corners_bev(b: &Box3D) -> [Vector2<f64>; 4] {
    let (s, c) = b.yaw.sin_cos();
    let hl = 0.5 * b.size.x;
    let hw = 0.5 * b.size.y;
    let local = [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)];
    local.map(|(lx, ly)| Vector2::new(b.center.x + c * lx - s * ly, b.center.y + s * lx + c * ly))
}

/// Bottom face (counterclockwise) followed by the top face in the same order.
pub fn box_corners_3d(b: &Box3D) -> [Vector3<f64>; 8] {
    let bev = box_corners_bev(b);
    let (z0, z1) = b.z_range();
    std::array::from_fn(|i| {
        let p = bev[i % 4];
        Vector3::new(p.x, p.y, if i < 4 { z0 } else { z1 })
    })
}

/// Metric BEV grid. Rows run along x, columns along y; cells are half-open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct GridConfig {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    step: f64,
    rows: usize,
    cols: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridRepr {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    step: f64,
}

impl TryFrom<GridRepr> for GridConfig {
    type Error = Error;

    fn try_from(r: GridRepr) -> Result<Self> {
        GridConfig::new(r.x_min, r.x_max, r.y_min, r.y_max, r.step)
    }
}

impl From<GridConfig> for GridRepr {
    fn from(g: GridConfig) -> Self {
        GridRepr {
            x_min: g.x_min,
            x_max: g.x_max,
            y_min: g.y_min,
            y_max: g.y_max,
            step: g.step,
        }
    }
}

const GRID_MULTIPLE_TOL: f64 = 1e-9;

fn cell_count(extent: f64, step: f64, axis: &str) -> Result<usize> {
    let n = (extent / step).round();
    if n < 1.0 || (n * step - extent).abs() > GRID_MULTIPLE_TOL {
        return Err(Error::Config(format!(
            "{axis} extent {extent} is not a positive integer multiple of step {step}"
        )));
    }
    Ok(n as usize)
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig::new(0.0, 51.2, -25.6, 25.6, 0.1).expect("default grid is valid")
    }
}

impl GridConfig {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Config(format!("grid step must be positive, got {step}")));
        }
        if ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite()) {
            return Err(Error::Config("grid bounds must be finite".into()));
        }
        let rows = cell_count(x_max - x_min, step, "x")?;
        let cols = cell_count(y_max - y_min, step, "y")?;
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
            step,
            rows,
            cols,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.cell_of(x, y).is_some()
    }

    /// `(row, col)` of the cell containing `(x, y)`, if inside the grid.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        if !(x >= self.x_min && x < self.x_max && y >= self.y_min && y < self.y_max) {
            return None;
        }
        let r = ((x - self.x_min) / self.step).floor() as usize;
        let c = ((y - self.y_min) / self.step).floor() as usize;
        // floor of a value just below the upper bound can round up to rows/cols
        (r < self.rows && c < self.cols).then_some((r, c))
    }

    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.x_min + (row as f64 + 0.5) * self.step,
            self.y_min + (col as f64 + 0.5) * self.step,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: &Vector3<f64>, b: &Vector3<f64>) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn transform_examples() {
        let p = Vector3::new(1.0, 2.0, 3.0);
        assert_eq!(transform_points(&Pose::identity(), &[p]), vec![p]);

        let t = Pose::from_translation(Vector3::new(1.0, 0.0, 0.0));
        assert_eq!(t.apply(&Vector3::zeros()), Vector3::new(1.0, 0.0, 0.0));

        let r = Pose::from_yaw_translation(FRAC_PI_2, Vector3::zeros());
        assert!(close(&r.apply(&Vector3::x()), &Vector3::y()));
    }

    #[test]
    fn pose_rejects_non_rotation() {
        let m = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0);
        assert!(Pose::new(m, Vector3::zeros()).is_err());
        assert!(Pose::new(Matrix3::identity() * 2.0, Vector3::zeros()).is_err());
    }

    #[test]
    fn pose_group_laws() {
        let a = Pose::from_yaw_translation(0.3, Vector3::new(1.0, -2.0, 0.5));
        let b = Pose::from_yaw_translation(-1.1, Vector3::new(0.2, 4.0, -1.0));
        let p = Vector3::new(3.0, 1.0, -2.0);
        assert!(close(&a.compose(&b).apply(&p), &a.apply(&b.apply(&p))));
        assert!(close(&a.compose(&a.inverse()).apply(&p), &p));
    }

    fn test_camera() -> CameraModel {
        let k = Matrix3::new(1000.0, 0.0, 800.0, 0.0, 1000.0, 450.0, 0.0, 0.0, 1.0);
        CameraModel::new(k, Pose::identity(), 1600, 900).unwrap()
    }

    #[test]
    fn projection_examples() {
        let cam = test_camera();
        let p = cam.project_camera_point(&Vector3::new(0.0, 0.0, 10.0));
        assert_eq!((p.u, p.v, p.depth, p.valid), (800.0, 450.0, 10.0, true));

        // u = 1000 * 1 / 10 + 800
        let p = cam.project_camera_point(&Vector3::new(1.0, 0.0, 10.0));
        assert_abs_diff_eq!(p.u, 900.0, epsilon = 1e-12);

        assert!(!cam.project_camera_point(&Vector3::new(0.0, 0.0, -1.0)).valid);
    }

    #[test]
    fn border_pixels_are_valid() {
        let cam = test_camera();
        // u = 1000 * 8 / 10 + 800 = 1600 = width
        let p = cam.project_camera_point(&Vector3::new(8.0, 0.0, 10.0));
        assert_eq!(p.u, 1600.0);
        assert!(p.valid);
        assert!(!cam.project_camera_point(&Vector3::new(8.01, 0.0, 10.0)).valid);
    }

    #[test]
    fn front_camera_sees_forward() {
        let cam = CameraModel::front_facing(500.0, 500.0, 400.0, 300.0, 800, 600, Vector3::new(1.5, 0.0, 1.2))
            .unwrap();
        let p = cam.project(&Vector3::new(11.5, 0.0, 1.2));
        assert_abs_diff_eq!(p.u, 400.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.v, 300.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.depth, 10.0, epsilon = 1e-9);
        // left of the vehicle maps to smaller u
        assert!(cam.project(&Vector3::new(11.5, 1.0, 1.2)).u < 400.0);
        assert!(!cam.project(&Vector3::new(-5.0, 0.0, 1.0)).valid);
    }

    #[test]
    fn camera_validation() {
        let bad = Matrix3::new(-1.0, 0.0, 800.0, 0.0, 1000.0, 450.0, 0.0, 0.0, 1.0);
        assert!(CameraModel::new(bad, Pose::identity(), 1600, 900).is_err());
        let bad = Matrix3::new(1000.0, 0.0, 1800.0, 0.0, 1000.0, 450.0, 0.0, 0.0, 1.0);
        assert!(CameraModel::new(bad, Pose::identity(), 1600, 900).is_err());
    }

    #[test]
    fn unproject_round_trip() {
        let cam = CameraModel::front_facing(700.0, 710.0, 320.0, 240.0, 640, 480, Vector3::new(1.0, 0.2, 1.5))
            .unwrap();
        for &(u, v, d) in &[(0.5, 0.5, 3.0), (320.0, 240.0, 10.0), (639.5, 100.25, 47.0)] {
            let p = cam.project(&cam.unproject(u, v, d));
            assert!(p.valid);
            assert_abs_diff_eq!(p.u, u, epsilon = 1e-6);
            assert_abs_diff_eq!(p.v, v, epsilon = 1e-6);
            assert_abs_diff_eq!(p.depth, d, epsilon = 1e-9);
        }
    }

    fn corner_set_eq(a: &[Vector2<f64>], b: &[Vector2<f64>]) -> bool {
        a.iter().all(|p| b.iter().any(|q| (p - q).norm() < 1e-9))
            && b.iter().all(|p| a.iter().any(|q| (p - q).norm() < 1e-9))
    }

    fn v2(x: f64, y: f64) -> Vector2<f64> {
        Vector2::new(x, y)
    }

    #[test]
    fn bev_corner_examples() {
        let b = Box3D::new(Vector3::zeros(), Vector3::new(4.0, 2.0, 1.5), 0.0, ObjectClass::Car);
        let c = box_corners_bev(&b);
        assert_eq!(c, [v2(2.0, 1.0), v2(-2.0, 1.0), v2(-2.0, -1.0), v2(2.0, -1.0)]);

        let r = Box3D { yaw: FRAC_PI_2, ..b.clone() };
        let expected = [v2(-1.0, 2.0), v2(-1.0, -2.0), v2(1.0, -2.0), v2(1.0, 2.0)];
        assert!(corner_set_eq(&box_corners_bev(&r), &expected));

        let t = Box3D {
            center: Vector3::new(10.0, 5.0, 0.0),
            ..b
        };
        for (p, q) in box_corners_bev(&t).iter().zip(c.iter()) {
            assert_abs_diff_eq!((p - q - v2(10.0, 5.0)).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn corners_are_counterclockwise() {
        let b = Box3D::new(Vector3::new(3.0, -2.0, 0.0), Vector3::new(4.0, 2.0, 1.5), 0.7, ObjectClass::Car);
        let c = box_corners_bev(&b);
        let signed: f64 = (0..4)
            .map(|i| {
                let (p, q) = (c[i], c[(i + 1) % 4]);
                p.x * q.y - q.x * p.y
            })
            .sum::<f64>()
            * 0.5;
        assert_abs_diff_eq!(signed, 8.0, epsilon = 1e-9);
    }

    #[test]
    fn corner_3d_examples() {
        let unit = Box3D::new(Vector3::zeros(), Vector3::new(1.0, 1.0, 1.0), 0.0, ObjectClass::Car);
        for p in box_corners_3d(&unit) {
            assert!(p.iter().all(|v| (v.abs() - 0.5).abs() < 1e-12));
        }

        let tall = Box3D::new(Vector3::new(0.0, 0.0, 3.0), Vector3::new(1.0, 1.0, 2.0), 0.0, ObjectClass::Car);
        let c = box_corners_3d(&tall);
        assert!(c[..4].iter().all(|p| p.z == 2.0));
        assert!(c[4..].iter().all(|p| p.z == 4.0));

        let flipped = Box3D { yaw: PI, ..unit.clone() };
        let a: Vec<_> = box_corners_bev(&unit).to_vec();
        let b: Vec<_> = box_corners_bev(&flipped).to_vec();
        assert!(corner_set_eq(&a, &b));
    }

    #[test]
    fn yaw_normalization_range() {
        assert_eq!(normalize_yaw(PI), PI);
        assert_abs_diff_eq!(normalize_yaw(-PI), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(normalize_yaw(3.0 * PI / 2.0), -FRAC_PI_2, epsilon = 1e-12);
        for k in -5..=5 {
            let a = normalize_yaw(0.4 + 2.0 * PI * k as f64);
            assert_abs_diff_eq!(a, 0.4, epsilon = 1e-12);
        }
    }

    #[test]
    fn default_grid_is_512_square() {
        let g = GridConfig::default();
        assert_eq!((g.rows(), g.cols()), (512, 512));
        assert_eq!(g.cell_of(0.0, -25.6), Some((0, 0)));
        assert_eq!(g.cell_of(51.2, 0.0), None);
        assert_eq!(g.cell_of(51.19999, 25.59999), Some((511, 511)));
        let (x, y) = g.cell_center(0, 0);
        assert_abs_diff_eq!(x, 0.05, epsilon = 1e-12);
        assert_abs_diff_eq!(y, -25.55, epsilon = 1e-12);
    }

    #[test]
    fn grid_validation() {
        assert!(GridConfig::new(0.0, 51.2, -25.6, 25.6, 0.0).is_err());
        assert!(GridConfig::new(0.0, 51.25, -25.6, 25.6, 0.1).is_err());
        assert!(GridConfig::new(0.0, 1.0, 0.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn box_json_round_trip() {
        let b = Box3D::new(Vector3::new(1.0, 2.0, 0.5), Vector3::new(4.2, 1.9, 1.6), 0.25, ObjectClass::Car)
            .with_velocity(3.0, -0.5)
            .with_attribute(2)
            .with_score(0.75);
        let s = serde_json::to_string(&b).unwrap();
        let back: Box3D = serde_json::from_str(&s).unwrap();
        assert_eq!(b, back);
        assert!(serde_json::from_str::<Box3D>(
            r#"{"center":[0,0,0],"size":[0,1,1],"yaw":0,"class":"car"}"#
        )
        .is_err());
    }
}
