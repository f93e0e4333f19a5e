// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::matching::{EvalSample, MatchResult};
use crate::geometry::{normalize_yaw, Box3D};

/// Mean errors over true-positive pairs; `None` when no pair contributes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TpErrors {
    /// BEV center distance, meters.
    pub ate: Option<f64>,
    /// 1 - IoU of the boxes after aligning centers and yaw.
    pub ase: Option<f64>,
    /// Smallest absolute yaw difference, radians.
    pub aoe: Option<f64>,
    /// L2 norm of the velocity difference, m/s.
    pub ave: Option<f64>,
    /// 1 - attribute accuracy over pairs whose ground truth has an attribute.
    pub aae: Option<f64>,
}

pub fn translation_error(det: &Box3D, gt: &Box3D) -> f64 {
    (det.center.xy() - gt.center.xy()).norm()
}

pub fn scale_error(det: &Box3D, gt: &Box3D) -> f64 {
    let inter: f64 = det.size.iter().zip(gt.size.iter()).map(|(a, b)| a.min(*b)).product();
    1.0 - inter / (det.volume() + gt.volume() - inter)
}

pub fn orientation_error(det: &Box3D, gt: &Box3D) -> f64 {
    normalize_yaw(det.yaw - gt.yaw).abs()
}

pub fn velocity_error(det: &Box3D, gt: &Box3D) -> f64 {
    (det.velocity - gt.velocity).norm()
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn tp_errors(matches: &MatchResult, samples: &[EvalSample]) -> TpErrors {
    let pairs: Vec<(&Box3D, &Box3D)> = matches
        .pairs
        .iter()
        .map(|p| (&samples[p.frame].dets[p.det], &samples[p.frame].gts[p.gt]))
        .collect();
    TpErrors {
        ate: mean(pairs.iter().map(|(d, g)| translation_error(d, g))),
        ase: mean(pairs.iter().map(|(d, g)| scale_error(d, g))),
        aoe: mean(pairs.iter().map(|(d, g)| orientation_error(d, g))),
        ave: mean(pairs.iter().map(|(d, g)| velocity_error(d, g))),
        aae: mean(
            pairs
                .iter()
                .filter_map(|(d, g)| g.attribute.map(|a| if d.attribute == Some(a) { 0.0 } else { 1.0 })),
        ),
    }
}
