// SPDX-License-Identifier: Apache-2.0

//! Camera-to-BEV view transform: lift image features along a per-pixel depth
//! distribution into ego-frame pseudo points, then sum-pool them into grid
//! cells.

use nalgebra::Vector3;
use ndarray::{Array2, Array3, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::bev::BevFeatureMap;
use crate::error::{Error, Result};
use crate::geometry::{CameraModel, GridConfig};

const DEPTH_SUM_TOL: f64 = 1e-5;

/// `[C × H' × W']` image features at `stride` raw pixels per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageFeatureMap {
    features: Array3<f32>,
    stride: f64,
}

impl ImageFeatureMap {
    pub fn new(features: Array3<f32>, stride: f64) -> Result<Self> {
        if !(stride > 0.0 && stride.is_finite()) {
            return Err(Error::Config(format!("feature stride must be positive, got {stride}")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("image features contain non-finite values".into()));
        }
        Ok(Self { features, stride })
    }

    pub fn features(&self) -> &Array3<f32> {
        &self.features
    }

    pub fn stride(&self) -> f64 {
        self.stride
    }

    pub fn channels(&self) -> usize {
        self.features.dim().0
    }
}

/// Depth bin layout: `count` bins at `start, start + step, ...` meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthBins {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl Default for DepthBins {
    fn default() -> Self {
        Self {
            start: 1.0,
            step: 1.0,
            count: 60,
        }
    }
}

impl DepthBins {
    pub fn depths(&self) -> Result<Vec<f64>> {
        if !(self.start > 0.0 && self.step > 0.0 && self.count > 0) {
            return Err(Error::Config(format!("invalid depth bins {self:?}")));
        }
        Ok((0..self.count).map(|i| self.start + i as f64 * self.step).collect())
    }
}

/// `[D × H' × W']` per-pixel categorical depth distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthDistribution {
    probs: Array3<f32>,
    bin_depths: Vec<f64>,
}

impl DepthDistribution {
    /// Validated distribution: every pixel's probabilities sum to one.
    pub fn new(probs: Array3<f32>, bin_depths: Vec<f64>) -> Result<Self> {
        let d = Self::unnormalized(probs, bin_depths)?;
        let (_, h, w) = d.probs.dim();
        for i in 0..h {
            for j in 0..w {
                let s: f64 = d.probs.slice(ndarray::s![.., i, j]).iter().map(|&p| f64::from(p)).sum();
                if (s - 1.0).abs() > DEPTH_SUM_TOL {
                    return Err(Error::Config(format!(
                        "depth probabilities at pixel ({i}, {j}) sum to {s}"
                    )));
                }
            }
        }
        Ok(d)
    }

    /// Skips the per-pixel normalization check; weights must still be
    /// finite and non-negative.
    pub fn unnormalized(probs: Array3<f32>, bin_depths: Vec<f64>) -> Result<Self> {
        if probs.dim().0 != bin_depths.len() {
            return Err(Error::Shape {
                context: "depth distribution bins",
                expected: vec![bin_depths.len()],
                actual: vec![probs.dim().0],
            });
        }
        if bin_depths.windows(2).any(|w| w[0] >= w[1]) || bin_depths.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::Config("bin depths must be positive and strictly increasing".into()));
        }
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::Config("depth probabilities must be finite and non-negative".into()));
        }
        Ok(Self { probs, bin_depths })
    }

    pub fn probs(&self) -> &Array3<f32> {
        &self.probs
    }

    pub fn bin_depths(&self) -> &[f64] {
        &self.bin_depths
    }
}

/// Ego-frame pseudo points with one feature row each.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoPoints {
    pub positions: Vec<Vector3<f64>>,
    /// `[N × C]`.
    pub features: Array2<f32>,
}

impl PseudoPoints {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

fn check_lift_inputs(features: &ImageFeatureMap, depth: &DepthDistribution, camera: &CameraModel) -> Result<()> {
    let (_, h, w) = features.features.dim();
    let (_, dh, dw) = depth.probs.dim();
    if (h, w) != (dh, dw) {
        return Err(Error::Shape {
            context: "lift: depth vs feature map",
            expected: vec![h, w],
            actual: vec![dh, dw],
        });
    }
    if h as f64 * features.stride > camera.height() as f64 || w as f64 * features.stride > camera.width() as f64 {
        return Err(Error::Config(format!(
            "feature map {w}x{h} at stride {} exceeds image {}x{}",
            features.stride,
            camera.width(),
            camera.height()
        )));
    }
    Ok(())
}

/// Visits pseudo points in `(bin, row, col)` order.
fn for_each_pseudo_point(
    features: &ImageFeatureMap,
    depth: &DepthDistribution,
    camera: &CameraModel,
    mut f: impl FnMut(Vector3<f64>, f32, ArrayView1<f32>),
) {
    let (_, h, w) = features.features.dim();
    for (d, &bin_depth) in depth.bin_depths.iter().enumerate() {
        for i in 0..h {
            let v = (i as f64 + 0.5) * features.stride;
            for j in 0..w {
                let u = (j as f64 + 0.5) * features.stride;
                let p = camera.unproject(u, v, bin_depth);
                f(p, depth.probs[[d, i, j]], features.features.slice(ndarray::s![.., i, j]));
            }
        }
    }
}

/// Expands every feature cell into `D` depth-weighted pseudo points.
pub fn lift(features: &ImageFeatureMap, depth: &DepthDistribution, camera: &CameraModel) -> Result<PseudoPoints> {
    check_lift_inputs(features, depth, camera)?;
    let (c, h, w) = features.features.dim();
    let n = depth.bin_depths.len() * h * w;
    let mut positions = Vec::with_capacity(n);
    let mut out = Array2::zeros((n, c));
    let mut k = 0;
    for_each_pseudo_point(features, depth, camera, |p, prob, feat| {
        positions.push(p);
        out.row_mut(k).zip_mut_with(&feat, |o, &x| *o = prob * x);
        k += 1;
    });
    Ok(PseudoPoints {
        positions,
        features: out,
    })
}

/// Sum-pools pseudo points into grid cells in input order and returns the
/// number of points that fell outside the grid.
pub fn splat_with_stats(points: &PseudoPoints, grid: &GridConfig) -> (BevFeatureMap, usize) {
    let mut map = BevFeatureMap::zeros(points.features.ncols(), *grid);
    let mut dropped = 0;
    let data = map.data_mut();
    for (p, feat) in points.positions.iter().zip(points.features.rows()) {
        match grid.cell_of(p.x, p.y) {
            Some((r, c)) => data.slice_mut(ndarray::s![.., r, c]).zip_mut_with(&feat, |o, &x| *o += x),
            None => dropped += 1,
        }
    }
    (map, dropped)
}

pub fn splat(points: &PseudoPoints, grid: &GridConfig) -> BevFeatureMap {
    splat_with_stats(points, grid).0
}

/// `splat(lift(..))` without materializing the pseudo point cloud. The
/// accumulation order is the same, so results are bit-identical.
pub fn lift_splat(
    features: &ImageFeatureMap,
    depth: &DepthDistribution,
    camera: &CameraModel,
    grid: &GridConfig,
) -> Result<(BevFeatureMap, usize)> {
    check_lift_inputs(features, depth, camera)?;
    let mut map = BevFeatureMap::zeros(features.channels(), *grid);
    let mut dropped = 0;
    let data = map.data_mut();
    for_each_pseudo_point(features, depth, camera, |p, prob, feat| match grid.cell_of(p.x, p.y) {
        Some((r, c)) => data
            .slice_mut(ndarray::s![.., r, c])
            .zip_mut_with(&feat, |o, &x| *o += prob * x),
        None => dropped += 1,
    });
    Ok((map, dropped))
}
