// SPDX-License-Identifier: Apache-2.0

//! Small synthetic scene with known objects, written in the canonical
//! dataset format.
//!
//! Object centers sit on a 1/64 m lattice and the grid step is 1/8 m, so
//! render and decode reproduce them without rounding.

use std::path::{Path, PathBuf};

use anyhow::Result;
use nalgebra::Vector3;
use ndarray::{Array3, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rcbev::camera::DepthBins;
use rcbev::dataset::{encode_points, write_frames, FrameRecord, SweepRef};
use rcbev::radar::{RadarDims, RadarPoint};
use rcbev::tensor::Tensor;
use rcbev::{Box3D, CameraModel, GridConfig, ObjectClass, Pose};

use crate::commands::write_atomic;
use crate::config::PipelineConfig;

pub const MANIFEST: &str = "frames.jsonl";
pub const CONFIG: &str = "pipeline.toml";

const SWEEPS_PER_FRAME: usize = 3;
const SWEEP_PERIOD_US: i64 = 50_000;
const FRAME_PERIOD_US: i64 = 500_000;
const EGO_SPEED: f64 = 10.0;
const FEATURE_STRIDE: usize = 16;
const FEATURE_CHANNELS: usize = 8;

#[derive(Debug, Clone)]
pub struct FixturePaths {
    pub root: PathBuf,
    pub manifest: PathBuf,
    pub config: PathBuf,
}

pub fn fixture_config() -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.grid = GridConfig::new(0.0, 16.0, -8.0, 8.0, 0.125).expect("valid fixture grid");
    cfg.radar.max_points_per_pillar = 3;
    cfg.radar.max_pillars = 120;
    cfg.radar.pointnet_channels = 16;
    cfg.camera.depth_bins = DepthBins {
        start: 2.0,
        step: 1.5,
        count: 10,
    };
    cfg.camera.feature_channels = FEATURE_CHANNELS;
    cfg
}

pub fn fixture_camera() -> CameraModel {
    CameraModel::front_facing(100.0, 100.0, 128.0, 64.0, 256, 128, Vector3::new(1.0, 0.0, 1.5)).expect("valid camera")
}

/// Annotations of frame `i` in its ego frame. The last car is inside the
/// grid but outside the camera view; the last pedestrian is behind the
/// vehicle.
pub fn fixture_objects(i: usize) -> Vec<Box3D> {
    let k = i as f64;
    vec![
        Box3D::new(Vector3::new(5.0 + 0.25 * k, 1.5 - 0.125 * k, 0.875), Vector3::new(0.75, 0.625, 1.75), 0.5 * k - 1.0, ObjectClass::Pedestrian)
            .with_velocity(1.0, 0.5)
            .with_attribute(1),
        Box3D::new(Vector3::new(8.5 + 0.125 * k, -2.0, 0.75), Vector3::new(1.75, 0.75, 1.5), 1.25, ObjectClass::Cyclist)
            .with_velocity(4.0, -0.5)
            .with_attribute(0),
        Box3D::new(Vector3::new(12.0 - 0.25 * k, 3.0, 0.8125), Vector3::new(4.5, 1.875, 1.625), 0.1 * k - 0.3, ObjectClass::Car)
            .with_velocity(8.0, 0.0)
            .with_attribute(2),
        Box3D::new(Vector3::new(1.5, -7.0, 0.8125), Vector3::new(4.0, 1.75, 1.5), 0.0, ObjectClass::Car),
        Box3D::new(Vector3::new(-4.0, 0.5, 0.875), Vector3::new(0.75, 0.625, 1.75), 0.0, ObjectClass::Pedestrian),
    ]
}

fn ego_pose(t_us: i64) -> Pose {
    let t = t_us as f64 * 1e-6;
    Pose::from_yaw_translation(0.02 * t, Vector3::new(EGO_SPEED * t, 0.5 * t, 0.0))
}

/// Radar returns in the key ego frame: a few per object, clutter, and a
/// dense reflector that overflows its pillar.
fn key_frame_points(objects: &[Box3D], rng: &mut ChaCha8Rng) -> Vec<Vector3<f64>> {
    let mut pts = Vec::new();
    for b in objects {
        for _ in 0..10 {
            let local = Vector3::new(
                (rng.gen::<f64>() - 0.5) * b.length(),
                (rng.gen::<f64>() - 0.5) * b.width(),
                (rng.gen::<f64>() - 0.5) * b.height(),
            );
            let (s, c) = b.yaw.sin_cos();
            pts.push(b.center + Vector3::new(c * local.x - s * local.y, s * local.x + c * local.y, local.z));
        }
    }
    for _ in 0..40 {
        pts.push(Vector3::new(rng.gen_range(-2.0..18.0), rng.gen_range(-9.0..9.0), rng.gen_range(-0.5..2.5)));
    }
    for _ in 0..15 {
        pts.push(Vector3::new(10.0625 + rng.gen_range(-0.05..0.05), 0.0625 + rng.gen_range(-0.05..0.05), 0.5));
    }
    pts
}

fn camera_tensors(rng: &mut ChaCha8Rng, depth_bins: usize) -> (Array3<f32>, Array3<f32>) {
    let cam = fixture_camera();
    let (h, w) = (cam.height() as usize / FEATURE_STRIDE, cam.width() as usize / FEATURE_STRIDE);
    let features = Array3::from_shape_fn((FEATURE_CHANNELS, h, w), |_| rng.gen_range(-1.0f32..1.0));
    let mut probs = Array3::from_shape_fn((depth_bins, h, w), |_| rng.gen_range(0.01f32..1.0));
    let sums = probs.sum_axis(Axis(0));
    for mut bin in probs.axis_iter_mut(Axis(0)) {
        bin.zip_mut_with(&sums, |p, s| *p /= s);
    }
    (features, probs)
}

/// Writes `frames` frames, blobs, camera tensors and a matching config.
pub fn write_fixture(dir: &Path, frames: usize, seed: u64) -> Result<FixturePaths> {
    let cfg = fixture_config();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(frames);
    for i in 0..frames {
        let frame_id = format!("fixture-{i:03}");
        let timestamp = 1_000_000 + i as i64 * FRAME_PERIOD_US;
        let key_pose = ego_pose(timestamp);
        let objects = fixture_objects(i);

        let mut sweeps = Vec::with_capacity(SWEEPS_PER_FRAME);
        for s in 0..SWEEPS_PER_FRAME {
            let ts = timestamp - s as i64 * SWEEP_PERIOD_US;
            let pose = ego_pose(ts);
            let to_sweep = pose.inverse().compose(&key_pose);
            let points: Vec<RadarPoint> = key_frame_points(&objects, &mut rng)
                .into_iter()
                .map(|p| {
                    let q = to_sweep.apply(&p);
                    RadarPoint {
                        x: q.x,
                        y: q.y,
                        z: Some(q.z),
                        rcs: rng.gen_range(-10.0..20.0),
                        v_r: rng.gen_range(-5.0..5.0),
                        t: 0.0,
                    }
                })
                .collect();
            let blob = format!("radar/{frame_id}_{s}.bin");
            write_atomic(&dir.join(&blob), &encode_points(&points, RadarDims::ThreePlusOne))?;
            sweeps.push(SweepRef {
                timestamp: ts,
                ego_pose: pose,
                blob,
            });
        }

        let (features, probs) = camera_tensors(&mut rng, cfg.camera.depth_bins.count);
        let features_rel = format!("camera/{frame_id}.features.bin");
        let depth_rel = format!("camera/{frame_id}.depth.bin");
        write_atomic(&dir.join(&features_rel), &Tensor::F32(features.into_dyn()).to_bytes())?;
        write_atomic(&dir.join(&depth_rel), &Tensor::F32(probs.into_dyn()).to_bytes())?;

        records.push(FrameRecord {
            frame_id,
            timestamp,
            ego_pose: key_pose,
            camera: fixture_camera(),
            radar_dims: RadarDims::ThreePlusOne,
            radar_sweeps: sweeps,
            annotations: objects,
            image_features: Some(features_rel),
            feature_stride: Some(FEATURE_STRIDE as f64),
            depth_probs: Some(depth_rel),
        });
    }

    let mut manifest = Vec::new();
    write_frames(&mut manifest, &records)?;
    let paths = FixturePaths {
        root: dir.to_path_buf(),
        manifest: dir.join(MANIFEST),
        config: dir.join(CONFIG),
    };
    write_atomic(&paths.manifest, &manifest)?;
    write_atomic(&paths.config, cfg.to_toml_string()?.as_bytes())?;
    Ok(paths)
}
