// SPDX-License-Identifier: Apache-2.0

//! Radar branch: multi-sweep accumulation, pillar voxelization with
//! per-point feature augmentation, a single-layer PointNet encoder and
//! scattering of pillar features back onto the BEV grid.

use std::collections::{BTreeMap, HashSet};

use nalgebra::Vector3;
use ndarray::{Array1, Array2, Array3, ArrayView1};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bev::BevFeatureMap;
use crate::error::{Error, Result};
use crate::geometry::{GridConfig, Pose};
use crate::tensor::Tensor;

pub const DEFAULT_MAX_POINTS_PER_PILLAR: usize = 32;
pub const DEFAULT_MAX_PILLARS: usize = 8192;

/// Radar point measurement dimensionality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RadarDims {
    /// Range, azimuth and Doppler; no elevation.
    #[serde(rename = "2+1D")]
    TwoPlusOne,
    /// Range, azimuth, elevation and Doppler.
    #[serde(rename = "3+1D")]
    ThreePlusOne,
}

impl RadarDims {
    /// Length of the augmented per-point feature vector.
    pub fn feat_dim(self) -> usize {
        match self {
            RadarDims::TwoPlusOne => 9,
            RadarDims::ThreePlusOne => 11,
        }
    }

    /// Number of f32 columns per point in a point blob (`x, y[, z], rcs, v_r`).
    pub fn record_len(self) -> usize {
        match self {
            RadarDims::TwoPlusOne => 4,
            RadarDims::ThreePlusOne => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarPoint {
    pub x: f64,
    pub y: f64,
    /// Absent for 2+1D radar.
    pub z: Option<f64>,
    /// Radar cross section, dBsm.
    pub rcs: f64,
    /// Ego-motion compensated radial velocity, m/s.
    pub v_r: f64,
    /// Seconds relative to the key frame, `<= 0` for past sweeps.
    pub t: f64,
}

impl RadarPoint {
    pub fn dims(&self) -> RadarDims {
        if self.z.is_some() {
            RadarDims::ThreePlusOne
        } else {
            RadarDims::TwoPlusOne
        }
    }

    pub fn position(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z.unwrap_or(0.0))
    }
}

/// One radar scan. Points are in the ego frame at `timestamp`; `pose` maps
/// that ego frame to the world.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub points: Vec<RadarPoint>,
    pub pose: Pose,
    /// Seconds.
    pub timestamp: f64,
}

#[derive(Debug, Clone)]
pub struct AccumulatedCloud {
    pub points: Vec<RadarPoint>,
    pub sweeps_requested: usize,
    pub sweeps_used: usize,
}

/// Merges the newest `num_sweeps` sweeps (input is newest-first) into the
/// key ego frame, stamping each point with its sweep age.
pub fn accumulate_sweeps(
    sweeps: &[Sweep],
    key_pose: &Pose,
    key_time: f64,
    num_sweeps: usize,
) -> Result<AccumulatedCloud> {
    if num_sweeps == 0 {
        return Err(Error::Config("num_sweeps must be at least 1".into()));
    }
    if sweeps.windows(2).any(|w| w[0].timestamp < w[1].timestamp) {
        return Err(Error::Config("sweeps must be ordered newest-first".into()));
    }
    let used = &sweeps[..num_sweeps.min(sweeps.len())];
    let to_key = key_pose.inverse();
    let mut points = Vec::with_capacity(used.iter().map(|s| s.points.len()).sum());
    for sweep in used {
        let tf = to_key.compose(&sweep.pose);
        let dt = sweep.timestamp - key_time;
        points.extend(sweep.points.iter().map(|p| {
            let q = tf.apply(&p.position());
            RadarPoint {
                x: q.x,
                y: q.y,
                z: p.z.map(|_| q.z),
                t: dt,
                ..*p
            }
        }));
    }
    Ok(AccumulatedCloud {
        points,
        sweeps_requested: num_sweeps,
        sweeps_used: used.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PillarConfig {
    pub max_points_per_pillar: usize,
    pub max_pillars: usize,
}

impl Default for PillarConfig {
    fn default() -> Self {
        Self {
            max_points_per_pillar: DEFAULT_MAX_POINTS_PER_PILLAR,
            max_pillars: DEFAULT_MAX_PILLARS,
        }
    }
}

/// Point bookkeeping for one `pillarize` call.
/// `in_grid == kept + dropped_point_overflow + dropped_pillar_overflow`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PillarStats {
    pub outside_grid: usize,
    pub in_grid: usize,
    pub kept: usize,
    /// Points beyond `max_points_per_pillar` in a retained pillar.
    pub dropped_point_overflow: usize,
    /// Points in pillars beyond `max_pillars`.
    pub dropped_pillar_overflow: usize,
}

/// Augmented pillar features `[pillars × max_points × feat_dim]`.
///
/// 3+1D column order: `x, y, z, rcs, v_r, t, x_c, y_c, z_c, x_p, y_p`;
/// 2+1D drops `z` and `z_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct PillarTensor {
    pub features: Array3<f64>,
    pub coords: Vec<(usize, usize)>,
    pub point_counts: Vec<usize>,
    pub dims: RadarDims,
    pub stats: PillarStats,
}

impl PillarTensor {
    pub fn num_pillars(&self) -> usize {
        self.coords.len()
    }

    pub fn feat_dim(&self) -> usize {
        self.dims.feat_dim()
    }
}

/// Mean summed in sorted order, so it does not depend on point order.
fn order_free_mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

fn augmented_features(points: &[&RadarPoint], center: (f64, f64), dims: RadarDims) -> Vec<Vec<f64>> {
    let mx = order_free_mean(points.iter().map(|p| p.x));
    let my = order_free_mean(points.iter().map(|p| p.y));
    let mz = order_free_mean(points.iter().map(|p| p.z.unwrap_or(0.0)));
    points
        .iter()
        .map(|p| match dims {
            RadarDims::ThreePlusOne => {
                let z = p.z.unwrap_or(0.0);
                vec![
                    p.x,
                    p.y,
                    z,
                    p.rcs,
                    p.v_r,
                    p.t,
                    p.x - mx,
                    p.y - my,
                    z - mz,
                    p.x - center.0,
                    p.y - center.1,
                ]
            }
            RadarDims::TwoPlusOne => vec![
                p.x,
                p.y,
                p.rcs,
                p.v_r,
                p.t,
                p.x - mx,
                p.y - my,
                p.x - center.0,
                p.y - center.1,
            ],
        })
        .collect()
}

/// Bins points into pillars and builds the augmented feature tensor.
///
/// Pillars are emitted in ascending `(row, col)` order. Overflowing pillars
/// and overflowing points are subsampled uniformly with a generator seeded
/// from `seed`; retained points keep their input order.
pub fn pillarize(
    points: &[RadarPoint],
    grid: &GridConfig,
    dims: RadarDims,
    config: PillarConfig,
    seed: u64,
) -> Result<PillarTensor> {
    if config.max_points_per_pillar == 0 || config.max_pillars == 0 {
        return Err(Error::Config(format!(
            "pillar capacities must be positive (max_points_per_pillar = {}, max_pillars = {})",
            config.max_points_per_pillar, config.max_pillars
        )));
    }
    if let Some(p) = points.iter().find(|p| p.dims() != dims) {
        return Err(Error::Config(format!(
            "point {:?} does not match configured radar dims {dims:?}",
            p
        )));
    }

    let mut stats = PillarStats::default();
    let mut bins: BTreeMap<(usize, usize), Vec<&RadarPoint>> = BTreeMap::new();
    for p in points {
        match grid.cell_of(p.x, p.y) {
            Some(cell) => {
                stats.in_grid += 1;
                bins.entry(cell).or_default().push(p);
            }
            None => stats.outside_grid += 1,
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pillars: Vec<((usize, usize), Vec<&RadarPoint>)> = bins.into_iter().collect();
    if pillars.len() > config.max_pillars {
        let mut keep = sample(&mut rng, pillars.len(), config.max_pillars).into_vec();
        keep.sort_unstable();
        let mut keep = keep.into_iter().peekable();
        let mut retained = Vec::with_capacity(config.max_pillars);
        for (i, pillar) in pillars.into_iter().enumerate() {
            if keep.peek() == Some(&i) {
                keep.next();
                retained.push(pillar);
            } else {
                stats.dropped_pillar_overflow += pillar.1.len();
            }
        }
        pillars = retained;
    }

    let feat_dim = dims.feat_dim();
    let max_pts = config.max_points_per_pillar;
    let mut features = Array3::zeros((pillars.len(), max_pts, feat_dim));
    let mut coords = Vec::with_capacity(pillars.len());
    let mut point_counts = Vec::with_capacity(pillars.len());
    for (i, (cell, mut pts)) in pillars.into_iter().enumerate() {
        if pts.len() > max_pts {
            stats.dropped_point_overflow += pts.len() - max_pts;
            let mut keep = sample(&mut rng, pts.len(), max_pts).into_vec();
            keep.sort_unstable();
            pts = keep.into_iter().map(|k| pts[k]).collect();
        }
        let center = grid.cell_center(cell.0, cell.1);
        for (j, row) in augmented_features(&pts, center, dims).into_iter().enumerate() {
            for (k, v) in row.into_iter().enumerate() {
                features[[i, j, k]] = v;
            }
        }
        stats.kept += pts.len();
        coords.push(cell);
        point_counts.push(pts.len());
    }

    Ok(PillarTensor {
        features,
        coords,
        point_counts,
        dims,
        stats,
    })
}

/// Fused linear layer of the per-point encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct PointNetWeights {
    /// `[feat_dim × out_channels]`.
    pub linear: Array2<f64>,
    pub bias: Array1<f64>,
}

impl PointNetWeights {
    pub fn new(linear: Array2<f64>, bias: Array1<f64>) -> Result<Self> {
        if linear.ncols() != bias.len() {
            return Err(Error::Shape {
                context: "pointnet bias",
                expected: vec![linear.ncols()],
                actual: vec![bias.len()],
            });
        }
        if ![9, 11].contains(&linear.nrows()) {
            return Err(Error::Config(format!(
                "pointnet input width must be 9 or 11, got {}",
                linear.nrows()
            )));
        }
        Ok(Self { linear, bias })
    }

    /// Deterministic Glorot-uniform weights with zero bias.
    pub fn random(feat_dim: usize, out_channels: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let limit = (6.0 / (feat_dim + out_channels) as f64).sqrt();
        let linear = Array2::from_shape_fn((feat_dim, out_channels), |_| rng.gen_range(-limit..=limit));
        Self::new(linear, Array1::zeros(out_channels))
    }

    /// Reads a `[feat_dim + 1, out_channels]` tensor whose last row is the bias.
    pub fn from_tensor(t: Tensor) -> Result<Self> {
        let a = t.into_f64();
        let shape = a.shape().to_vec();
        if shape.len() != 2 || shape[0] < 2 {
            return Err(Error::Shape {
                context: "pointnet weight tensor",
                expected: vec![12, 0],
                actual: shape,
            });
        }
        let a = a.into_dimensionality::<ndarray::Ix2>().expect("rank checked");
        let rows = a.nrows() - 1;
        let linear = a.slice(ndarray::s![..rows, ..]).to_owned();
        let bias = a.row(rows).to_owned();
        Self::new(linear, bias)
    }

    pub fn to_tensor(&self) -> Tensor {
        let mut a = Array2::zeros((self.linear.nrows() + 1, self.linear.ncols()));
        a.slice_mut(ndarray::s![..self.linear.nrows(), ..]).assign(&self.linear);
        a.row_mut(self.linear.nrows()).assign(&self.bias);
        Tensor::F64(a.into_dyn())
    }

    pub fn feat_dim(&self) -> usize {
        self.linear.nrows()
    }

    pub fn out_channels(&self) -> usize {
        self.linear.ncols()
    }

    fn apply(&self, x: ArrayView1<f64>) -> Array1<f64> {
        (x.dot(&self.linear) + &self.bias).mapv(|v| v.max(0.0))
    }
}

/// Linear + ReLU per point, then max over each pillar's occupied slots.
pub fn pointnet_encode(pillars: &PillarTensor, weights: &PointNetWeights) -> Result<Array2<f32>> {
    if weights.feat_dim() != pillars.feat_dim() {
        return Err(Error::Shape {
            context: "pointnet weights",
            expected: vec![pillars.feat_dim(), weights.out_channels()],
            actual: vec![weights.feat_dim(), weights.out_channels()],
        });
    }
    let mut out = Array2::<f32>::zeros((pillars.num_pillars(), weights.out_channels()));
    for (i, &count) in pillars.point_counts.iter().enumerate() {
        let mut acc = Array1::<f64>::from_elem(weights.out_channels(), f64::NEG_INFINITY);
        for j in 0..count {
            let h = weights.apply(pillars.features.slice(ndarray::s![i, j, ..]));
            acc.zip_mut_with(&h, |a, &b| *a = a.max(b));
        }
        if count > 0 {
            out.row_mut(i).assign(&acc.mapv(|v| v as f32));
        }
    }
    Ok(out)
}

/// Places each pillar's feature vector into its grid cell.
pub fn scatter_to_bev(
    pillar_features: &Array2<f32>,
    coords: &[(usize, usize)],
    grid: &GridConfig,
    channels: usize,
) -> Result<BevFeatureMap> {
    if pillar_features.nrows() != coords.len() || pillar_features.ncols() != channels {
        return Err(Error::Shape {
            context: "scatter_to_bev",
            expected: vec![coords.len(), channels],
            actual: pillar_features.shape().to_vec(),
        });
    }
    let mut map = BevFeatureMap::zeros(channels, *grid);
    let mut seen = HashSet::with_capacity(coords.len());
    let data = map.data_mut();
    for (i, &(r, c)) in coords.iter().enumerate() {
        if r >= grid.rows() || c >= grid.cols() {
            return Err(Error::Invariant(format!("pillar coordinate ({r}, {c}) outside grid")));
        }
        if !seen.insert((r, c)) {
            return Err(Error::Invariant(format!("duplicate pillar coordinate ({r}, {c})")));
        }
        data.slice_mut(ndarray::s![.., r, c]).assign(&pillar_features.row(i));
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn pt2(x: f64, y: f64) -> RadarPoint {
        RadarPoint {
            x,
            y,
            z: None,
            rcs: 1.0,
            v_r: 0.5,
            t: 0.0,
        }
    }

    fn pt3(x: f64, y: f64, z: f64) -> RadarPoint {
        RadarPoint { z: Some(z), ..pt2(x, y) }
    }

    fn unit_grid() -> GridConfig {
        GridConfig::new(0.0, 1.0, 0.0, 1.0, 0.1).unwrap()
    }

    #[test]
    fn stationary_ego_keeps_coordinates() {
        // five sweeps spanning 0.24 s, roughly the 0.3 s window at 5 sweeps
        let sweeps: Vec<Sweep> = (0..5)
            .map(|k| Sweep {
                points: vec![pt3(10.0 + k as f64, 1.0, 0.5)],
                pose: Pose::identity(),
                timestamp: 100.0 - 0.06 * k as f64,
            })
            .collect();
        let acc = accumulate_sweeps(&sweeps, &Pose::identity(), 100.0, 5).unwrap();
        assert_eq!(acc.sweeps_used, 5);
        assert_eq!(acc.points.len(), 5);
        for (k, p) in acc.points.iter().enumerate() {
            assert_eq!((p.x, p.y, p.z), (10.0 + k as f64, 1.0, Some(0.5)));
            assert_abs_diff_eq!(p.t, -0.06 * k as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn past_sweep_moves_into_key_frame() {
        let key = Pose::from_translation(Vector3::new(2.0, 0.0, 0.0));
        let sweeps = vec![
            Sweep {
                points: vec![],
                pose: key,
                timestamp: 1.0,
            },
            Sweep {
                points: vec![pt2(10.0, 0.0)],
                pose: Pose::identity(),
                timestamp: 0.9,
            },
        ];
        let acc = accumulate_sweeps(&sweeps, &key, 1.0, 5).unwrap();
        assert_eq!((acc.sweeps_used, acc.sweeps_requested), (2, 5));
        let p = acc.points[0];
        assert_abs_diff_eq!(p.x, 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 0.0, epsilon = 1e-12);
        assert_eq!(p.z, None);
        assert_abs_diff_eq!(p.t, -0.1, epsilon = 1e-12);
    }

    #[test]
    fn single_sweep_is_unchanged() {
        let sweeps = vec![
            Sweep {
                points: vec![pt2(3.0, 4.0)],
                pose: Pose::identity(),
                timestamp: 5.0,
            },
            Sweep {
                points: vec![pt2(7.0, 7.0)],
                pose: Pose::identity(),
                timestamp: 4.9,
            },
        ];
        let acc = accumulate_sweeps(&sweeps, &Pose::identity(), 5.0, 1).unwrap();
        assert_eq!(acc.points, vec![pt2(3.0, 4.0)]);
        assert!(accumulate_sweeps(&sweeps, &Pose::identity(), 5.0, 0).is_err());
        let reversed: Vec<_> = sweeps.into_iter().rev().collect();
        assert!(accumulate_sweeps(&reversed, &Pose::identity(), 5.0, 2).is_err());
    }

    #[test]
    fn single_point_offsets() {
        let pts = [pt2(0.05, 0.03)];
        let t = pillarize(&pts, &unit_grid(), RadarDims::TwoPlusOne, PillarConfig::default(), 0).unwrap();
        assert_eq!(t.coords, vec![(0, 0)]);
        assert_eq!(t.feat_dim(), 9);
        let f: Vec<f64> = t.features.slice(ndarray::s![0, 0, ..]).to_vec();
        // x, y, rcs, v_r, t, x_c, y_c, x_p, y_p
        assert_eq!((f[5], f[6]), (0.0, 0.0));
        assert_abs_diff_eq!(f[7], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f[8], -0.02, epsilon = 1e-12);
    }

    #[test]
    fn two_point_mean_offsets() {
        let pts = [pt3(0.02, 0.05, 1.0), pt3(0.08, 0.05, 1.0)];
        let t = pillarize(&pts, &unit_grid(), RadarDims::ThreePlusOne, PillarConfig::default(), 0).unwrap();
        assert_eq!(t.feat_dim(), 11);
        assert_eq!(t.point_counts, vec![2]);
        assert_abs_diff_eq!(t.features[[0, 0, 6]], -0.03, epsilon = 1e-12);
        assert_abs_diff_eq!(t.features[[0, 1, 6]], 0.03, epsilon = 1e-12);
        // padding slots are zero
        assert!(t.features.slice(ndarray::s![0, 2.., ..]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn capacity_errors_and_dims_mismatch() {
        let pts = [pt2(0.5, 0.5)];
        let g = unit_grid();
        let zero_pts = PillarConfig {
            max_points_per_pillar: 0,
            max_pillars: 10,
        };
        let zero_pillars = PillarConfig {
            max_points_per_pillar: 10,
            max_pillars: 0,
        };
        assert!(matches!(pillarize(&pts, &g, RadarDims::TwoPlusOne, zero_pts, 0), Err(Error::Config(_))));
        assert!(matches!(pillarize(&pts, &g, RadarDims::TwoPlusOne, zero_pillars, 0), Err(Error::Config(_))));
        assert!(pillarize(&pts, &g, RadarDims::ThreePlusOne, PillarConfig::default(), 0).is_err());
    }

    #[test]
    fn overflow_is_counted_and_seeded() {
        let pts: Vec<_> = (0..50)
            .map(|i| pt2(0.01 + 0.001 * i as f64, 0.02 + 0.1 * (i % 5) as f64))
            .chain(std::iter::once(pt2(5.0, 5.0)))
            .collect();
        let cfg = PillarConfig {
            max_points_per_pillar: 4,
            max_pillars: 3,
        };
        let a = pillarize(&pts, &unit_grid(), RadarDims::TwoPlusOne, cfg, 7).unwrap();
        let b = pillarize(&pts, &unit_grid(), RadarDims::TwoPlusOne, cfg, 7).unwrap();
        assert_eq!(a, b);
        let s = a.stats;
        assert_eq!(s.outside_grid, 1);
        assert_eq!(s.in_grid, 50);
        assert_eq!(s.kept, 12);
        assert_eq!(s.in_grid, s.kept + s.dropped_point_overflow + s.dropped_pillar_overflow);
        assert_eq!(a.point_counts.iter().sum::<usize>(), s.kept);
        assert!(a.coords.windows(2).all(|w| w[0] < w[1]));
    }

    fn one_pillar(features: &[&[f64]]) -> PillarTensor {
        let mut f = Array3::zeros((1, 4, 9));
        for (j, row) in features.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                f[[0, j, k]] = v;
            }
        }
        PillarTensor {
            features: f,
            coords: vec![(0, 0)],
            point_counts: vec![features.len()],
            dims: RadarDims::TwoPlusOne,
            stats: PillarStats::default(),
        }
    }

    fn identity_weights() -> PointNetWeights {
        PointNetWeights::new(Array2::eye(9), Array1::zeros(9)).unwrap()
    }

    #[test]
    fn pointnet_singleton_is_relu() {
        let row = [1.0, -2.0, 3.0, -4.0, 0.5, 0.0, -0.1, 0.2, 7.0];
        let out = pointnet_encode(&one_pillar(&[&row]), &identity_weights()).unwrap();
        let expected: Vec<f32> = row.iter().map(|v| v.max(0.0) as f32).collect();
        assert_eq!(out.row(0).to_vec(), expected);
    }

    #[test]
    fn pointnet_takes_elementwise_max() {
        let a = [1.0, 5.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0];
        let b = [3.0, 2.0, -2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        let out = pointnet_encode(&one_pillar(&[&a, &b]), &identity_weights()).unwrap();
        assert_eq!(out.row(0).to_vec(), vec![3.0f32, 5.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn pointnet_masks_padding() {
        // With bias +1 a zero padding slot would produce 1; the real point
        // produces ReLU(-5 + 1) = 0, so any leak from padding shows up.
        let w = PointNetWeights::new(Array2::eye(9), Array1::from_elem(9, 1.0)).unwrap();
        let out = pointnet_encode(&one_pillar(&[&[-5.0; 9]]), &w).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pointnet_shape_mismatch() {
        let w = PointNetWeights::new(Array2::zeros((11, 4)), Array1::zeros(4)).unwrap();
        assert!(pointnet_encode(&one_pillar(&[&[0.0; 9]]), &w).is_err());
        assert!(PointNetWeights::new(Array2::zeros((10, 4)), Array1::zeros(4)).is_err());
        assert!(PointNetWeights::new(Array2::zeros((9, 4)), Array1::zeros(3)).is_err());
    }

    #[test]
    fn weights_tensor_round_trip() {
        let w = PointNetWeights::random(11, 6, 3).unwrap();
        assert_eq!(PointNetWeights::from_tensor(w.to_tensor()).unwrap(), w);
    }

    #[test]
    fn scatter_examples() {
        let g = unit_grid();
        let f = array![[1.0f32, 2.0]];
        let m = scatter_to_bev(&f, &[(3, 7)], &g, 2).unwrap();
        assert_eq!(m.data()[[0, 3, 7]], 1.0);
        assert_eq!(m.data()[[1, 3, 7]], 2.0);
        assert_eq!(m.total(), 3.0);

        let empty = scatter_to_bev(&Array2::zeros((0, 2)), &[], &g, 2).unwrap();
        assert_eq!(empty.total(), 0.0);

        let two = scatter_to_bev(&array![[1.0f32], [4.0]], &[(0, 0), (9, 9)], &g, 1).unwrap();
        assert_eq!((two.data()[[0, 0, 0]], two.data()[[0, 9, 9]]), (1.0, 4.0));

        assert!(matches!(
            scatter_to_bev(&array![[1.0f32], [4.0]], &[(1, 1), (1, 1)], &g, 1),
            Err(Error::Invariant(_))
        ));
        assert!(scatter_to_bev(&array![[1.0f32]], &[(10, 0)], &g, 1).is_err());
    }
}
