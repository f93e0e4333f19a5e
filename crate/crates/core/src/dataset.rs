// SPDX-License-Identifier: Apache-2.0

//! Canonical frame format and ingestion-side preprocessing.
//!
//! A dataset is a JSON-lines manifest, one [`FrameRecord`] per line, next to
//! raw little-endian f32 point blobs referenced by relative path. Blob
//! records are `x, y, rcs, v_r` (2+1D) or `x, y, z, rcs, v_r` (3+1D) with
//! `v_r` already ego-motion compensated.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Lines, Write};
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Box3D, CameraModel, ObjectClass, Pose};
use crate::radar::{RadarDims, RadarPoint, Sweep};

pub const MICROS_PER_SECOND: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRef {
    /// Microseconds.
    pub timestamp: i64,
    pub ego_pose: Pose,
    /// Blob path relative to the manifest directory.
    pub blob: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub frame_id: String,
    /// Microseconds.
    pub timestamp: i64,
    pub ego_pose: Pose,
    pub camera: CameraModel,
    pub radar_dims: RadarDims,
    /// Newest first.
    pub radar_sweeps: Vec<SweepRef>,
    pub annotations: Vec<Box3D>,
    /// Optional `[C × H' × W']` image feature tensor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_features: Option<String>,
    /// Stride of `image_features` in raw pixels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_stride: Option<f64>,
    /// Optional `[D × H' × W']` depth distribution tensor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_probs: Option<String>,
}

impl FrameRecord {
    pub fn validate(&self) -> Result<()> {
        let schema = |field: &str, reason: String| Error::Schema {
            frame_id: self.frame_id.clone(),
            field: field.into(),
            reason,
        };
        if self.frame_id.is_empty() {
            return Err(schema("frame_id", "must not be empty".into()));
        }
        for (i, s) in self.radar_sweeps.iter().enumerate() {
            if s.timestamp > self.timestamp {
                return Err(schema(
                    &format!("radar_sweeps[{i}].timestamp"),
                    format!("{} is later than the frame timestamp {}", s.timestamp, self.timestamp),
                ));
            }
        }
        if self.radar_sweeps.windows(2).any(|w| w[0].timestamp < w[1].timestamp) {
            return Err(schema("radar_sweeps", "must be ordered newest-first".into()));
        }
        if self.image_features.is_some() != self.depth_probs.is_some() {
            return Err(schema("depth_probs", "image_features and depth_probs must be given together".into()));
        }
        if self.image_features.is_some() && self.feature_stride.is_none() {
            return Err(schema("feature_stride", "required with image_features".into()));
        }
        Ok(())
    }

    pub fn timestamp_seconds(&self) -> f64 {
        self.timestamp as f64 / MICROS_PER_SECOND
    }
}

/// Extracts the offending field from a serde message such as
/// "missing field `camera`".
fn field_from_message(msg: &str) -> String {
    let mut parts = msg.split('`');
    parts.next();
    parts.next().unwrap_or("<record>").to_string()
}

fn parse_record(line: &str, line_no: usize) -> Result<FrameRecord> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::Schema {
        frame_id: format!("<line {line_no}>"),
        field: "<json>".into(),
        reason: e.to_string(),
    })?;
    let frame_id = value
        .get("frame_id")
        .and_then(|v| v.as_str())
        .map_or_else(|| format!("<line {line_no}>"), str::to_string);
    let record: FrameRecord = serde_json::from_value(value).map_err(|e| {
        let msg = e.to_string();
        Error::Schema {
            frame_id: frame_id.clone(),
            field: field_from_message(&msg),
            reason: msg,
        }
    })?;
    record.validate()?;
    Ok(record)
}

/// Lazily parsed and validated frames of a manifest.
pub struct FrameStream {
    root: PathBuf,
    lines: Lines<BufReader<File>>,
    line_no: usize,
}

impl FrameStream {
    /// Directory relative blob and tensor paths are resolved against.
    pub fn root(&self) -> &Path {
        &self.root
    }
}

impl Iterator for FrameStream {
    type Item = Result<FrameRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(Error::io(&self.root, e))),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let record = parse_record(&line, self.line_no).and_then(|r| {
                for s in &r.radar_sweeps {
                    check_blob(&self.root.join(&s.blob), r.radar_dims)?;
                }
                Ok(r)
            });
            return Some(record);
        }
    }
}

pub fn load_frames(manifest: impl AsRef<Path>) -> Result<FrameStream> {
    let manifest = manifest.as_ref();
    let file = File::open(manifest).map_err(|e| Error::io(manifest, e))?;
    let root = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(FrameStream {
        root,
        lines: BufReader::new(file).lines(),
        line_no: 0,
    })
}

/// Loads and collects every frame, failing on the first invalid one.
pub fn load_all_frames(manifest: impl AsRef<Path>) -> Result<(PathBuf, Vec<FrameRecord>)> {
    let stream = load_frames(manifest)?;
    let root = stream.root().to_path_buf();
    let frames = stream.collect::<Result<Vec<_>>>()?;
    Ok((root, frames))
}

pub fn write_frames<W: Write>(mut w: W, frames: &[FrameRecord]) -> Result<()> {
    for f in frames {
        serde_json::to_writer(&mut w, f)?;
        w.write_all(b"\n").map_err(|e| Error::io("<manifest>", e))?;
    }
    w.flush().map_err(|e| Error::io("<manifest>", e))
}

fn record_bytes(dims: RadarDims) -> usize {
    dims.record_len() * std::mem::size_of::<f32>()
}

fn check_blob(path: &Path, dims: RadarDims) -> Result<u64> {
    let len = std::fs::metadata(path).map_err(|e| Error::io(path, e))?.len();
    if len % record_bytes(dims) as u64 != 0 {
        return Err(Error::BlobSize {
            path: path.to_path_buf(),
            len,
            record: record_bytes(dims),
        });
    }
    Ok(len)
}

pub fn decode_points(bytes: &[u8], dims: RadarDims, path: &Path) -> Result<Vec<RadarPoint>> {
    if bytes.len() % record_bytes(dims) != 0 {
        return Err(Error::BlobSize {
            path: path.to_path_buf(),
            len: bytes.len() as u64,
            record: record_bytes(dims),
        });
    }
    let floats: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
        .collect();
    let points = floats
        .chunks_exact(dims.record_len())
        .map(|r| match dims {
            RadarDims::TwoPlusOne => RadarPoint {
                x: r[0],
                y: r[1],
                z: None,
                rcs: r[2],
                v_r: r[3],
                t: 0.0,
            },
            RadarDims::ThreePlusOne => RadarPoint {
                x: r[0],
                y: r[1],
                z: Some(r[2]),
                rcs: r[3],
                v_r: r[4],
                t: 0.0,
            },
        })
        .collect();
    Ok(points)
}

pub fn encode_points(points: &[RadarPoint], dims: RadarDims) -> Vec<u8> {
    let mut out = Vec::with_capacity(points.len() * record_bytes(dims));
    for p in points {
        let cols: Vec<f64> = match dims {
            RadarDims::TwoPlusOne => vec![p.x, p.y, p.rcs, p.v_r],
            RadarDims::ThreePlusOne => vec![p.x, p.y, p.z.unwrap_or(0.0), p.rcs, p.v_r],
        };
        for c in cols {
            out.extend_from_slice(&(c as f32).to_le_bytes());
        }
    }
    out
}

pub fn read_points(path: &Path, dims: RadarDims) -> Result<Vec<RadarPoint>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_points(&bytes, dims, path)
}

/// Reads every referenced sweep of a frame, newest first.
pub fn read_sweeps(root: &Path, frame: &FrameRecord) -> Result<Vec<Sweep>> {
    frame
        .radar_sweeps
        .iter()
        .map(|s| {
            Ok(Sweep {
                points: read_points(&root.join(&s.blob), frame.radar_dims)?,
                pose: s.ego_pose,
                timestamp: s.timestamp as f64 / MICROS_PER_SECOND,
            })
        })
        .collect()
}

/// Keeps boxes whose center projects inside the image in front of the camera.
pub fn filter_fov(boxes: &[Box3D], camera: &CameraModel) -> Vec<Box3D> {
    boxes
        .iter()
        .filter(|b| camera.project(&b.center).valid)
        .cloned()
        .collect()
}

/// Removes the ego-motion component from a raw radial velocity measured at
/// the sensor origin.
pub fn compensate_radial_velocity(raw_v_r: f64, point_position: &Vector3<f64>, ego_velocity: &Vector3<f64>) -> f64 {
    let r = point_position.norm();
    if r == 0.0 {
        return raw_v_r;
    }
    raw_v_r + ego_velocity.dot(&(point_position / r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassGroupConfig {
    pub groups: Vec<Vec<ObjectClass>>,
    /// Exponent on the balancing ratio; 1 equalizes group shares, 0 disables.
    pub temperature: f64,
    pub max_factor: f64,
}

impl Default for ClassGroupConfig {
    fn default() -> Self {
        Self {
            groups: ObjectClass::ALL.iter().map(|&c| vec![c]).collect(),
            temperature: 1.0,
            max_factor: 5.0,
        }
    }
}

impl ClassGroupConfig {
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for c in self.groups.iter().flatten() {
            if !seen.insert(*c) {
                return Err(Error::Config(format!("class {c} appears in more than one group")));
            }
        }
        if seen.len() != ObjectClass::ALL.len() || self.groups.iter().any(Vec::is_empty) {
            return Err(Error::Config("class groups must partition all classes".into()));
        }
        if !(self.max_factor >= 1.0) || !(self.temperature >= 0.0) {
            return Err(Error::Config(format!(
                "max_factor must be >= 1 and temperature >= 0 (got {}, {})",
                self.max_factor, self.temperature
            )));
        }
        Ok(())
    }
}

/// Per-group duplication factors from frame counts.
pub fn cbgs_group_factors(frame_classes: &[BTreeSet<ObjectClass>], groups: &ClassGroupConfig) -> Vec<f64> {
    let counts: Vec<usize> = groups
        .groups
        .iter()
        .map(|g| frame_classes.iter().filter(|fc| g.iter().any(|c| fc.contains(c))).count())
        .collect();
    let max = counts.iter().copied().max().unwrap_or(0) as f64;
    counts
        .iter()
        .map(|&n| {
            if n == 0 {
                1.0
            } else {
                (max / n as f64).powf(groups.temperature).min(groups.max_factor).max(1.0)
            }
        })
        .collect()
}

/// Class-balanced resampling over per-frame class sets.
///
/// Each frame gets the largest factor of the groups it contains (1 if
/// none) and appears `floor(f)` times plus once more with probability
/// `f - floor(f)`. Output is sorted by frame index.
pub fn cbgs_resample_classes(
    frame_classes: &[BTreeSet<ObjectClass>],
    groups: &ClassGroupConfig,
    seed: u64,
) -> Result<Vec<usize>> {
    groups.validate()?;
    let factors = cbgs_group_factors(frame_classes, groups);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(frame_classes.len());
    for (i, fc) in frame_classes.iter().enumerate() {
        let f = groups
            .groups
            .iter()
            .zip(&factors)
            .filter(|(g, _)| g.iter().any(|c| fc.contains(c)))
            .map(|(_, &f)| f)
            .fold(1.0, f64::max);
        let whole = f.floor();
        let u: f64 = rng.gen();
        let copies = whole as usize + usize::from(u < f - whole);
        out.extend(std::iter::repeat(i).take(copies));
    }
    Ok(out)
}

pub fn cbgs_resample(frames: &[FrameRecord], groups: &ClassGroupConfig, seed: u64) -> Result<Vec<usize>> {
    let classes: Vec<BTreeSet<ObjectClass>> = frames
        .iter()
        .map(|f| f.annotations.iter().map(|b| b.class).collect())
        .collect();
    cbgs_resample_classes(&classes, groups, seed)
}

/// Frames per class, for reporting.
pub fn class_frame_counts(frames: &[FrameRecord]) -> BTreeMap<ObjectClass, usize> {
    let mut counts = BTreeMap::new();
    for f in frames {
        let classes: BTreeSet<_> = f.annotations.iter().map(|b| b.class).collect();
        for c in classes {
            *counts.entry(c).or_default() += 1;
        }
    }
    counts
}
