// SPDX-License-Identifier: Apache-2.0

//! Greedy score-ordered assignment of detections to ground truth.

use serde::{Deserialize, Serialize};

use super::iou::{iou_2d_image, iou_3d, iou_bev};
use crate::error::{Error, Result};
use crate::geometry::{Box3D, CameraModel, ObjectClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IouVariant {
    #[serde(rename = "2d")]
    Image2d,
    Bev,
    #[serde(rename = "3d")]
    Full3d,
}

impl IouVariant {
    pub const ALL: [IouVariant; 3] = [IouVariant::Image2d, IouVariant::Bev, IouVariant::Full3d];

    pub fn label(self) -> &'static str {
        match self {
            IouVariant::Image2d => "2d",
            IouVariant::Bev => "bev",
            IouVariant::Full3d => "3d",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Matcher {
    /// BEV center distance strictly below the threshold (meters).
    CenterDistance(f64),
    /// Overlap strictly above the threshold.
    Iou { variant: IouVariant, threshold: f64 },
}

/// Detections and ground truth of one frame.
#[derive(Debug, Clone, Default)]
pub struct EvalSample {
    pub frame_id: String,
    pub dets: Vec<Box3D>,
    pub gts: Vec<Box3D>,
    /// Needed only for [`IouVariant::Image2d`].
    pub camera: Option<CameraModel>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPair {
    pub frame: usize,
    pub det: usize,
    pub gt: usize,
    pub score: f64,
}

/// Outcome of matching one class.
///
/// `ranked` lists every detection as `(frame, det index, score, is_tp)` in
/// the order the score sweep visits them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchResult {
    pub pairs: Vec<MatchedPair>,
    pub ranked: Vec<(usize, usize, f64, bool)>,
    pub num_gt: usize,
}

impl MatchResult {
    /// `(tp, fp, fn)` after admitting the `k` highest-ranked detections.
    pub fn counts_at(&self, k: usize) -> (usize, usize, usize) {
        let tp = self.ranked[..k].iter().filter(|r| r.3).count();
        (tp, k - tp, self.num_gt - tp)
    }

    pub fn num_tp(&self) -> usize {
        self.pairs.len()
    }
}

fn score_of(b: &Box3D) -> f64 {
    b.score.unwrap_or(0.0)
}

/// Matches class-`class` boxes across samples. Detections are visited in
/// descending score order (ties by frame, then input order); each takes the
/// best still-unmatched ground truth of its own frame that passes the
/// matcher, nearest center first or highest overlap first.
pub fn match_samples(samples: &[EvalSample], class: ObjectClass, matcher: Matcher) -> Result<MatchResult> {
    let mut order: Vec<(usize, usize, f64)> = samples
        .iter()
        .enumerate()
        .flat_map(|(f, s)| {
            s.dets
                .iter()
                .enumerate()
                .filter(|(_, d)| d.class == class)
                .map(move |(i, d)| (f, i, score_of(d)))
        })
        .collect();
    order.sort_by(|a, b| b.2.total_cmp(&a.2));

    let mut taken: Vec<Vec<bool>> = samples.iter().map(|s| vec![false; s.gts.len()]).collect();
    let num_gt = samples
        .iter()
        .map(|s| s.gts.iter().filter(|g| g.class == class).count())
        .sum();
    let mut result = MatchResult {
        num_gt,
        ..Default::default()
    };

    for (f, i, score) in order {
        let sample = &samples[f];
        let det = &sample.dets[i];
        let camera = match matcher {
            Matcher::Iou {
                variant: IouVariant::Image2d,
                ..
            } => Some(sample.camera.as_ref().ok_or_else(|| Error::Schema {
                frame_id: sample.frame_id.clone(),
                field: "camera".into(),
                reason: "2D image IoU needs a camera model".into(),
            })?),
            _ => None,
        };
        // (gt index, key) where smaller key is better
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in sample.gts.iter().enumerate() {
            if gt.class != class || taken[f][g] {
                continue;
            }
            let key = match matcher {
                Matcher::CenterDistance(th) => {
                    let d = (det.center.xy() - gt.center.xy()).norm();
                    if !(d < th) {
                        continue;
                    }
                    d
                }
                Matcher::Iou { variant, threshold } => {
                    let iou = match variant {
                        IouVariant::Image2d => iou_2d_image(det, gt, camera.expect("checked above")),
                        IouVariant::Bev => iou_bev(det, gt),
                        IouVariant::Full3d => iou_3d(det, gt),
                    };
                    if !(iou > threshold) {
                        continue;
                    }
                    -iou
                }
            };
            if best.map_or(true, |(_, k)| key < k) {
                best = Some((g, key));
            }
        }
        match best {
            Some((g, _)) => {
                taken[f][g] = true;
                result.pairs.push(MatchedPair {
                    frame: f,
                    det: i,
                    gt: g,
                    score,
                });
                result.ranked.push((f, i, score, true));
            }
            None => result.ranked.push((f, i, score, false)),
        }
    }
    Ok(result)
}

/// Single-frame center-distance matching of same-class boxes.
pub fn match_center_distance(dets: &[Box3D], gts: &[Box3D], threshold: f64) -> MatchResult {
    let class = dets.first().or(gts.first()).map_or(ObjectClass::Car, |b| b.class);
    let sample = EvalSample {
        frame_id: String::new(),
        dets: dets.to_vec(),
        gts: gts.to_vec(),
        camera: None,
    };
    match_samples(std::slice::from_ref(&sample), class, Matcher::CenterDistance(threshold))
        .expect("center distance matching needs no camera")
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn car(x: f64, y: f64) -> Box3D {
        Box3D::new(Vector3::new(x, y, 0.0), Vector3::new(4.0, 2.0, 1.5), 0.0, ObjectClass::Car)
    }

    #[test]
    fn center_distance_examples() {
        let m = match_center_distance(&[car(1.0, 0.0).with_score(0.9)], &[car(0.0, 0.0)], 2.0);
        assert_eq!(m.counts_at(1), (1, 0, 0));

        let m = match_center_distance(&[car(3.0, 0.0).with_score(0.9)], &[car(0.0, 0.0)], 2.0);
        assert_eq!(m.counts_at(1), (0, 1, 1));

        let m = match_center_distance(&[car(2.0, 0.0).with_score(0.9)], &[car(0.0, 0.0)], 2.0);
        assert_eq!(m.num_tp(), 0, "threshold is exclusive");
    }

    #[test]
    fn higher_score_wins_the_ground_truth() {
        // the lower-scored detection is closer, but visits second
        let dets = [car(0.2, 0.0).with_score(0.4), car(0.8, 0.0).with_score(0.7)];
        let m = match_center_distance(&dets, &[car(0.0, 0.0)], 2.0);
        assert_eq!(m.pairs.len(), 1);
        assert_eq!(m.pairs[0].det, 1);
        assert_eq!(m.ranked.iter().map(|r| r.3).collect::<Vec<_>>(), vec![true, false]);
    }

    #[test]
    fn nearest_unmatched_gt_is_taken() {
        let dets = [car(1.0, 0.0).with_score(0.9), car(1.0, 0.0).with_score(0.8)];
        let gts = [car(0.0, 0.0), car(1.5, 0.0)];
        let m = match_center_distance(&dets, &gts, 2.0);
        assert_eq!(m.pairs.iter().map(|p| (p.det, p.gt)).collect::<Vec<_>>(), vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn frames_do_not_cross_match() {
        let samples = vec![
            EvalSample {
                frame_id: "a".into(),
                dets: vec![car(0.0, 0.0).with_score(0.9)],
                gts: vec![],
                camera: None,
            },
            EvalSample {
                frame_id: "b".into(),
                dets: vec![],
                gts: vec![car(0.0, 0.0)],
                camera: None,
            },
        ];
        let m = match_samples(&samples, ObjectClass::Car, Matcher::CenterDistance(2.0)).unwrap();
        assert_eq!(m.counts_at(1), (0, 1, 1));
    }

    #[test]
    fn other_classes_are_ignored() {
        let ped = Box3D::new(Vector3::zeros(), Vector3::new(0.5, 0.5, 1.7), 0.0, ObjectClass::Pedestrian);
        let m = match_center_distance(&[car(0.0, 0.0).with_score(0.5)], &[car(0.1, 0.0), ped], 2.0);
        assert_eq!(m.num_gt, 1);
    }

    #[test]
    fn image_iou_requires_camera() {
        let s = EvalSample {
            frame_id: "x".into(),
            dets: vec![car(10.0, 0.0).with_score(0.5)],
            gts: vec![car(10.0, 0.0)],
            camera: None,
        };
        let m = Matcher::Iou {
            variant: IouVariant::Image2d,
            threshold: 0.5,
        };
        assert!(matches!(match_samples(&[s], ObjectClass::Car, m), Err(Error::Schema { .. })));
    }

    #[test]
    fn iou_matcher_prefers_highest_overlap() {
        let s = EvalSample {
            frame_id: "x".into(),
            dets: vec![car(0.5, 0.0).with_score(0.5)],
            gts: vec![car(0.0, 0.0), car(0.6, 0.0)],
            camera: None,
        };
        let m = Matcher::Iou {
            variant: IouVariant::Bev,
            threshold: 0.5,
        };
        let r = match_samples(&[s], ObjectClass::Car, m).unwrap();
        assert_eq!(r.pairs[0].gt, 1);
    }
}
