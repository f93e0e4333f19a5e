// SPDX-License-Identifier: Apache-2.0

//! Precision-recall curves and the two sampled-area AP approximations.

use serde::{Deserialize, Serialize};

use super::matching::{match_samples, EvalSample, MatchResult, Matcher};
use crate::error::Result;
use crate::geometry::ObjectClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Linear interpolation at 101 recall samples, with recall and precision
    /// below 0.1 discarded and the remainder rescaled.
    Nuscenes101,
    /// Mean interpolated (max-to-the-right) precision at recall 1/40 .. 40/40.
    Kitti40,
}

pub const NUSCENES_SAMPLES: usize = 101;
pub const NUSCENES_MIN_RECALL: f64 = 0.1;
pub const NUSCENES_MIN_PRECISION: f64 = 0.1;
pub const KITTI_SAMPLES: usize = 40;

/// Operating points of a score sweep, one per admitted detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub interpolation: Interpolation,
    pub scores: Vec<f64>,
    pub recall: Vec<f64>,
    pub precision: Vec<f64>,
}

impl PrCurve {
    pub fn from_matches(m: &MatchResult, interpolation: Interpolation) -> Self {
        let mut tp = 0usize;
        let mut curve = PrCurve {
            interpolation,
            scores: Vec::with_capacity(m.ranked.len()),
            recall: Vec::with_capacity(m.ranked.len()),
            precision: Vec::with_capacity(m.ranked.len()),
        };
        for (k, &(_, _, score, is_tp)) in m.ranked.iter().enumerate() {
            tp += is_tp as usize;
            curve.scores.push(score);
            curve.precision.push(tp as f64 / (k + 1) as f64);
            curve.recall.push(if m.num_gt == 0 { 0.0 } else { tp as f64 / m.num_gt as f64 });
        }
        curve
    }

    /// `(recall, precision)` at the scheme's sample positions.
    pub fn sampled(&self) -> Vec<(f64, f64)> {
        match self.interpolation {
            Interpolation::Nuscenes101 => (0..NUSCENES_SAMPLES)
                .map(|k| {
                    let r = k as f64 / (NUSCENES_SAMPLES - 1) as f64;
                    (r, interp_right_zero(r, &self.recall, &self.precision))
                })
                .collect(),
            Interpolation::Kitti40 => (1..=KITTI_SAMPLES)
                .map(|k| {
                    let r = k as f64 / KITTI_SAMPLES as f64;
                    (r, max_precision_at_or_above(r, &self.recall, &self.precision))
                })
                .collect(),
        }
    }

    /// Area estimate in percent.
    pub fn average_precision(&self) -> f64 {
        if self.recall.is_empty() {
            return 0.0;
        }
        let sampled = self.sampled();
        let ap = match self.interpolation {
            Interpolation::Nuscenes101 => {
                let skip = (100.0 * NUSCENES_MIN_RECALL).round() as usize + 1;
                let tail = &sampled[skip..];
                let sum: f64 = tail
                    .iter()
                    .map(|&(_, p)| (p - NUSCENES_MIN_PRECISION).max(0.0) / (1.0 - NUSCENES_MIN_PRECISION))
                    .sum();
                sum / tail.len() as f64
            }
            Interpolation::Kitti40 => sampled.iter().map(|&(_, p)| p).sum::<f64>() / KITTI_SAMPLES as f64,
        };
        100.0 * ap
    }
}

/// Piecewise-linear interpolation through `(xs, ys)` with `xs`
/// non-decreasing: left of the first knot returns `ys[0]`, right of the last
/// returns 0, and on a repeated knot the last duplicate wins.
fn interp_right_zero(x: f64, xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    if x > xs[n - 1] {
        return 0.0;
    }
    if x < xs[0] {
        return ys[0];
    }
    // last j with xs[j] <= x
    let j = xs.partition_point(|&v| v <= x) - 1;
    if xs[j] == x || j == n - 1 {
        return ys[j];
    }
    let slope = (ys[j + 1] - ys[j]) / (xs[j + 1] - xs[j]);
    ys[j] + slope * (x - xs[j])
}

fn max_precision_at_or_above(r: f64, recall: &[f64], precision: &[f64]) -> f64 {
    recall
        .iter()
        .zip(precision)
        .filter(|(&rc, _)| rc >= r)
        .map(|(_, &p)| p)
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApOutput {
    /// Percent.
    pub ap: f64,
    pub curve: PrCurve,
    pub matches: MatchResult,
}

/// AP for one class. `None` when the class has neither ground truth nor
/// detections; with detections but no ground truth every detection is a
/// false positive and AP is 0.
pub fn compute_ap(
    samples: &[EvalSample],
    class: ObjectClass,
    matcher: Matcher,
    interpolation: Interpolation,
) -> Result<Option<ApOutput>> {
    let matches = match_samples(samples, class, matcher)?;
    if matches.num_gt == 0 && matches.ranked.is_empty() {
        return Ok(None);
    }
    let curve = PrCurve::from_matches(&matches, interpolation);
    let ap = if matches.num_gt == 0 { 0.0 } else { curve.average_precision() };
    Ok(Some(ApOutput { ap, curve, matches }))
}
