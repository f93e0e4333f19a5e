// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{anyhow, bail, ensure, Context, Result};
use ndarray::{Array3, Ix3};
use rayon::prelude::*;
use rcbev::bev::BevFeatureMap;
use rcbev::camera::{lift_splat, DepthDistribution, ImageFeatureMap};
use rcbev::dataset::{cbgs_resample, class_frame_counts, filter_fov, load_all_frames, read_sweeps, FrameRecord};
use rcbev::eval::matching::EvalSample;
use rcbev::eval::{evaluate_kitti, evaluate_nuscenes, MetricsReport};
use rcbev::head::{concat_bev, decode_detections, render_targets, TargetMaps};
use rcbev::radar::{accumulate_sweeps, pillarize, pointnet_encode, scatter_to_bev, PillarStats, PointNetWeights, RadarDims};
use rcbev::tensor::Tensor;
use rcbev::{Box3D, ObjectClass};
use serde::{Deserialize, Serialize};

use crate::config::{PipelineConfig, Protocol};

pub const BEV_DIR: &str = "bev";
pub const TARGETS_DIR: &str = "targets";
pub const HEATMAP_SUFFIX: &str = ".heatmap.bin";
pub const REGRESSION_SUFFIX: &str = ".regression.bin";

/// Writes through a temporary file in the destination directory, then
/// renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_tensor(path: &Path, t: &Tensor) -> Result<()> {
    write_atomic(path, &t.to_bytes())
}

/// FNV-1a, used to derive per-frame seeds that do not depend on scheduling.
fn stable_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

pub fn frame_seed(seed: u64, frame_id: &str) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ stable_hash(frame_id)
}

fn check_frame_id(id: &str) -> Result<()> {
    ensure!(
        !id.is_empty() && !id.contains(['/', '\\']) && id != "." && id != "..",
        "frame_id {id:?} cannot be used as a file name"
    );
    Ok(())
}

/// Frames sorted by id; duplicate ids are an error.
fn load_sorted(dataset: &Path) -> Result<(PathBuf, Vec<FrameRecord>)> {
    let (root, mut frames) = load_all_frames(dataset).with_context(|| format!("loading {}", dataset.display()))?;
    frames.sort_by(|a, b| a.frame_id.cmp(&b.frame_id));
    if let Some(w) = frames.windows(2).find(|w| w[0].frame_id == w[1].frame_id) {
        bail!("duplicate frame_id {:?}", w[0].frame_id);
    }
    for f in &frames {
        check_frame_id(&f.frame_id)?;
    }
    Ok((root, frames))
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        ensure!(n > 0, "--workers must be positive");
        b = b.num_threads(n);
    }
    Ok(b.build()?)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StageTimings {
    pub load: Duration,
    pub radar: Duration,
    pub camera: Duration,
    pub targets: Duration,
    pub write: Duration,
}

impl std::ops::AddAssign for StageTimings {
    fn add_assign(&mut self, o: Self) {
        self.load += o.load;
        self.radar += o.radar;
        self.camera += o.camera;
        self.targets += o.targets;
        self.write += o.write;
    }
}

#[derive(Debug, Clone)]
pub struct FrameSummary {
    pub frame_id: String,
    pub sweeps_used: usize,
    pub pillars: usize,
    pub pillar_stats: PillarStats,
    pub camera_points_outside: usize,
    pub targets: usize,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, Default)]
pub struct PreprocessSummary {
    /// Sorted by frame id.
    pub frames: Vec<FrameSummary>,
}

impl PreprocessSummary {
    /// Deterministic one-line summary.
    pub fn line(&self) -> String {
        let sum = |f: fn(&FrameSummary) -> usize| self.frames.iter().map(f).sum::<usize>();
        format!(
            "preprocessed {} frames: {} pillars, {} radar points kept, {} dropped by point capacity, \
             {} dropped by pillar capacity, {} outside grid, {} camera pseudo points outside grid, {} targets",
            self.frames.len(),
            sum(|f| f.pillars),
            sum(|f| f.pillar_stats.kept),
            sum(|f| f.pillar_stats.dropped_point_overflow),
            sum(|f| f.pillar_stats.dropped_pillar_overflow),
            sum(|f| f.pillar_stats.outside_grid),
            sum(|f| f.camera_points_outside),
            sum(|f| f.targets),
        )
    }

    pub fn timing_line(&self) -> String {
        let mut t = StageTimings::default();
        for f in &self.frames {
            t += f.timings;
        }
        let ms = |d: Duration| d.as_secs_f64() * 1e3;
        format!(
            "stage time (ms, summed over frames): load {:.1}, radar {:.1}, camera {:.1}, targets {:.1}, write {:.1}",
            ms(t.load),
            ms(t.radar),
            ms(t.camera),
            ms(t.targets),
            ms(t.write)
        )
    }
}

fn pointnet_weights(cfg: &PipelineConfig, dims: RadarDims) -> Result<PointNetWeights> {
    match &cfg.radar.pointnet_weights {
        Some(p) => {
            let t = Tensor::load(p).with_context(|| format!("loading pointnet weights {}", p.display()))?;
            let w = PointNetWeights::from_tensor(t)?;
            ensure!(
                w.out_channels() == cfg.radar.pointnet_channels,
                "pointnet weights have {} output channels, config says {}",
                w.out_channels(),
                cfg.radar.pointnet_channels
            );
            Ok(w)
        }
        None => Ok(PointNetWeights::random(dims.feat_dim(), cfg.radar.pointnet_channels, cfg.seed)?),
    }
}

fn load3_f32(root: &Path, rel: &str) -> Result<Array3<f32>> {
    let path = root.join(rel);
    let t = Tensor::load(&path).with_context(|| format!("loading {}", path.display()))?;
    t.into_f32()
        .into_dimensionality::<Ix3>()
        .map_err(|_| anyhow!("{} is not a rank-3 tensor", path.display()))
}

fn load3_f64(path: &Path) -> Result<Array3<f64>> {
    let t = Tensor::load(path).with_context(|| format!("loading {}", path.display()))?;
    t.into_f64()
        .into_dimensionality::<Ix3>()
        .map_err(|_| anyhow!("{} is not a rank-3 tensor", path.display()))
}

/// Annotations used for training targets and evaluation: inside the
/// camera view and inside the grid.
pub fn visible_annotations(frame: &FrameRecord, cfg: &PipelineConfig) -> Vec<Box3D> {
    filter_fov(&frame.annotations, &frame.camera)
        .into_iter()
        .filter(|b| cfg.grid.contains(b.center.x, b.center.y))
        .collect()
}

fn frame_targets(frame: &FrameRecord, cfg: &PipelineConfig) -> Result<(TargetMaps, usize)> {
    let boxes = visible_annotations(frame, cfg);
    let maps = render_targets(&boxes, &cfg.grid, ObjectClass::ALL.len(), cfg.head.gaussian)?;
    Ok((maps, boxes.len()))
}

fn write_targets(out: &Path, frame_id: &str, t: &TargetMaps) -> Result<()> {
    let dir = out.join(TARGETS_DIR);
    write_tensor(&dir.join(format!("{frame_id}{HEATMAP_SUFFIX}")), &Tensor::F64(t.heatmaps.clone().into_dyn()))?;
    write_tensor(
        &dir.join(format!("{frame_id}{REGRESSION_SUFFIX}")),
        &Tensor::F64(t.decode_regressions().into_dyn()),
    )
}

fn preprocess_frame(
    frame: &FrameRecord,
    root: &Path,
    cfg: &PipelineConfig,
    weights: &BTreeMap<RadarDims, PointNetWeights>,
    out: &Path,
) -> Result<FrameSummary> {
    let ctx = || format!("frame {}", frame.frame_id);
    let mut timings = StageTimings::default();

    let t0 = Instant::now();
    let sweeps = read_sweeps(root, frame).with_context(ctx)?;
    let camera_inputs = match (&frame.image_features, &frame.depth_probs) {
        (Some(f), Some(d)) => Some((load3_f32(root, f)?, load3_f32(root, d)?)),
        _ => None,
    };
    timings.load = t0.elapsed();

    let t0 = Instant::now();
    let cloud = accumulate_sweeps(&sweeps, &frame.ego_pose, frame.timestamp_seconds(), cfg.radar.num_sweeps)
        .with_context(ctx)?;
    let pillars = pillarize(
        &cloud.points,
        &cfg.grid,
        frame.radar_dims,
        cfg.radar.pillar_config(),
        frame_seed(cfg.seed, &frame.frame_id),
    )
    .with_context(ctx)?;
    let encoded = pointnet_encode(&pillars, &weights[&frame.radar_dims]).with_context(ctx)?;
    let radar_map = scatter_to_bev(&encoded, &pillars.coords, &cfg.grid, cfg.radar.pointnet_channels).with_context(ctx)?;
    timings.radar = t0.elapsed();

    let t0 = Instant::now();
    let (camera_map, camera_points_outside) = match camera_inputs {
        Some((features, probs)) => {
            let stride = frame.feature_stride.expect("validated with image_features");
            let features = ImageFeatureMap::new(features, stride).with_context(ctx)?;
            let depth = DepthDistribution::new(probs, cfg.camera.depth_bins.depths()?).with_context(ctx)?;
            lift_splat(&features, &depth, &frame.camera, &cfg.grid).with_context(ctx)?
        }
        None => (BevFeatureMap::zeros(cfg.camera.feature_channels, cfg.grid), 0),
    };
    let fused = concat_bev(&camera_map, &radar_map).with_context(ctx)?;
    timings.camera = t0.elapsed();

    let t0 = Instant::now();
    let (targets, num_targets) = frame_targets(frame, cfg).with_context(ctx)?;
    timings.targets = t0.elapsed();

    let t0 = Instant::now();
    write_tensor(
        &out.join(BEV_DIR).join(format!("{}.bin", frame.frame_id)),
        &Tensor::F32(fused.into_array().into_dyn()),
    )?;
    write_targets(out, &frame.frame_id, &targets)?;
    timings.write = t0.elapsed();

    Ok(FrameSummary {
        frame_id: frame.frame_id.clone(),
        sweeps_used: cloud.sweeps_used,
        pillars: pillars.num_pillars(),
        pillar_stats: pillars.stats,
        camera_points_outside,
        targets: num_targets,
        timings,
    })
}

/// Fused BEV features and target maps for every frame of a dataset.
pub fn preprocess(cfg: &PipelineConfig, dataset: &Path, out: &Path, workers: Option<usize>) -> Result<PreprocessSummary> {
    let (root, frames) = load_sorted(dataset)?;
    let dims: BTreeSet<RadarDims> = frames.iter().map(|f| f.radar_dims).collect();
    let weights = dims
        .into_iter()
        .map(|d| Ok((d, pointnet_weights(cfg, d)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let frames = pool(workers)?.install(|| {
        frames
            .par_iter()
            .map(|f| preprocess_frame(f, &root, cfg, &weights, out))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(PreprocessSummary { frames })
}

/// Target maps only; returns the number of frames written.
pub fn render_targets_cmd(cfg: &PipelineConfig, dataset: &Path, out: &Path, workers: Option<usize>) -> Result<usize> {
    let (_, frames) = load_sorted(dataset)?;
    pool(workers)?.install(|| {
        frames.par_iter().try_for_each(|f| {
            let (t, _) = frame_targets(f, cfg).with_context(|| format!("frame {}", f.frame_id))?;
            write_targets(out, &f.frame_id, &t)
        })
    })?;
    Ok(frames.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub frame_id: String,
    pub detections: Vec<Box3D>,
}

/// Decodes every `<frame_id>.heatmap.bin` / `.regression.bin` pair in
/// `input` (or its `targets/` subdirectory) into a predictions file.
pub fn decode_cmd(cfg: &PipelineConfig, input: &Path, out_file: &Path) -> Result<Vec<PredictionRecord>> {
    let dir = if input.join(TARGETS_DIR).is_dir() { input.join(TARGETS_DIR) } else { input.to_path_buf() };
    let mut ids = Vec::new();
    for entry in std::fs::read_dir(&dir).with_context(|| format!("listing {}", dir.display()))? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if let Some(id) = name.strip_suffix(HEATMAP_SUFFIX) {
            ids.push(id.to_string());
        }
    }
    ids.sort();
    ensure!(!ids.is_empty(), "no *{HEATMAP_SUFFIX} files in {}", dir.display());

    let mut records = Vec::with_capacity(ids.len());
    let mut text = String::new();
    for id in ids {
        let heat = load3_f64(&dir.join(format!("{id}{HEATMAP_SUFFIX}")))?;
        let regs = load3_f64(&dir.join(format!("{id}{REGRESSION_SUFFIX}")))?;
        let dets = decode_detections(&heat, &regs, &cfg.grid, cfg.head.decode).with_context(|| format!("frame {id}"))?;
        let rec = PredictionRecord {
            frame_id: id,
            detections: dets.into_iter().map(|d| d.bbox).collect(),
        };
        text.push_str(&serde_json::to_string(&rec)?);
        text.push('\n');
        records.push(rec);
    }
    write_atomic(out_file, text.as_bytes())?;
    Ok(records)
}

pub fn load_predictions(path: &Path) -> Result<BTreeMap<String, Vec<Box3D>>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = BTreeMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PredictionRecord =
            serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?;
        if let Some(b) = rec.detections.iter().find(|b| b.score.is_none()) {
            bail!("frame {}: detection without score at {:?}", rec.frame_id, b.center);
        }
        if out.insert(rec.frame_id.clone(), rec.detections).is_some() {
            bail!("frame {} appears twice in {}", rec.frame_id, path.display());
        }
    }
    Ok(out)
}

fn list(ids: &[&String]) -> String {
    ids.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
}

/// Builds evaluation samples, failing if the frame sets differ.
pub fn eval_samples(
    cfg: &PipelineConfig,
    mut predictions: BTreeMap<String, Vec<Box3D>>,
    frames: &[FrameRecord],
) -> Result<Vec<EvalSample>> {
    let gt_ids: BTreeSet<&String> = frames.iter().map(|f| &f.frame_id).collect();
    let pred_ids: BTreeSet<&String> = predictions.keys().collect();
    let missing: Vec<_> = gt_ids.difference(&pred_ids).copied().collect();
    let extra: Vec<_> = pred_ids.difference(&gt_ids).copied().collect();
    if !missing.is_empty() || !extra.is_empty() {
        let mut msg = String::from("prediction and ground-truth frame sets differ");
        if !missing.is_empty() {
            msg += &format!("; missing from predictions: {}", list(&missing));
        }
        if !extra.is_empty() {
            msg += &format!("; not in dataset: {}", list(&extra));
        }
        bail!(msg);
    }
    Ok(frames
        .iter()
        .map(|f| EvalSample {
            frame_id: f.frame_id.clone(),
            dets: predictions.remove(&f.frame_id).unwrap_or_default(),
            gts: visible_annotations(f, cfg),
            camera: Some(f.camera.clone()),
        })
        .collect())
}

pub fn evaluate(cfg: &PipelineConfig, samples: &[EvalSample]) -> Result<MetricsReport> {
    Ok(match cfg.eval.protocol {
        Protocol::Nuscenes => MetricsReport::Nuscenes(evaluate_nuscenes(samples, &cfg.eval.nuscenes)?),
        Protocol::Kitti => MetricsReport::Kitti(evaluate_kitti(samples, &cfg.eval.kitti)?),
    })
}

pub const METRICS_FILE: &str = "metrics.json";
pub const PR_DIR: &str = "pr";

pub fn write_report(report: &MetricsReport, out: &Path) -> Result<()> {
    write_atomic(&out.join(METRICS_FILE), &serde_json::to_vec_pretty(report)?)?;
    for c in report.curves() {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["recall", "precision"])?;
        for (r, p) in c.curve.recall.iter().zip(&c.curve.precision) {
            w.write_record([r.to_string(), p.to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow!("csv: {e}"))?;
        write_atomic(&out.join(PR_DIR).join(format!("{}_{}.csv", c.class.name(), c.label)), &bytes)?;
    }
    Ok(())
}

/// Evaluates a predictions file against a dataset and writes metrics.json
/// plus PR-curve CSVs under `out`.
pub fn eval_cmd(cfg: &PipelineConfig, predictions: &Path, dataset: &Path, out: &Path) -> Result<MetricsReport> {
    let (_, frames) = load_sorted(dataset)?;
    let samples = eval_samples(cfg, load_predictions(predictions)?, &frames)?;
    let report = evaluate(cfg, &samples)?;
    write_report(&report, out)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbgsOutput {
    pub indices: Vec<usize>,
    pub frame_ids: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct CbgsSummary {
    pub num_frames: usize,
    pub output: CbgsOutput,
    pub before: BTreeMap<ObjectClass, usize>,
    pub after: BTreeMap<ObjectClass, usize>,
}

impl CbgsSummary {
    pub fn line(&self) -> String {
        let counts = |m: &BTreeMap<ObjectClass, usize>| {
            ObjectClass::ALL
                .iter()
                .map(|c| format!("{} {}", c.short_name(), m.get(c).copied().unwrap_or(0)))
                .collect::<Vec<_>>()
                .join(", ")
        };
        format!(
            "resampled {} frames to {}; frames per class before: {}; after: {}",
            self.num_frames,
            self.output.indices.len(),
            counts(&self.before),
            counts(&self.after)
        )
    }
}

/// Class-balanced resampled index list over the manifest's frame order.
pub fn cbgs_cmd(cfg: &PipelineConfig, dataset: &Path, out_file: &Path) -> Result<CbgsSummary> {
    let (_, frames) = load_all_frames(dataset).with_context(|| format!("loading {}", dataset.display()))?;
    let indices = cbgs_resample(&frames, &cfg.cbgs, cfg.seed)?;
    let resampled: Vec<FrameRecord> = indices.iter().map(|&i| frames[i].clone()).collect();
    let output = CbgsOutput {
        frame_ids: indices.iter().map(|&i| frames[i].frame_id.clone()).collect(),
        indices,
    };
    write_atomic(out_file, &serde_json::to_vec_pretty(&output)?)?;
    Ok(CbgsSummary {
        num_frames: frames.len(),
        output,
        before: class_frame_counts(&frames),
        after: class_frame_counts(&resampled),
    })
}
