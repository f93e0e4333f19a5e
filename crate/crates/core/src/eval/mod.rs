// SPDX-License-Identifier: Apache-2.0

//! Detection evaluation.
//!
//! Two protocols are provided:
//!
//! * **nuScenes style**: greedy matching by BEV center distance, AP averaged
//!   over the distance thresholds with 101-point interpolation, plus mean
//!   true-positive errors at a single distance threshold;
//! * **KITTI / View-of-Delft style**: matching by rotated IoU in the image
//!   plane, in BEV and in 3D with per-class thresholds, AP over 40 recall
//!   positions.

pub mod ap;
pub mod iou;
pub mod matching;
pub mod tp;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use ap::{compute_ap, ApOutput, Interpolation, PrCurve};
pub use iou::{iou_2d_image, iou_3d, iou_bev, rect_iou, Rect};
pub use matching::{match_center_distance, match_samples, EvalSample, IouVariant, MatchResult, Matcher};
pub use tp::{tp_errors, TpErrors};

use crate::error::Result;
use crate::geometry::ObjectClass;

/// Unweighted mean over the classes that have an AP.
pub fn aggregate_map(per_class: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = per_class
        .into_iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NuscenesConfig {
    /// Meters; AP is averaged over these.
    pub distance_thresholds: Vec<f64>,
    /// Meters; threshold for true-positive error matching.
    pub tp_threshold: f64,
}

impl Default for NuscenesConfig {
    fn default() -> Self {
        Self {
            distance_thresholds: vec![0.5, 1.0, 2.0, 4.0],
            tp_threshold: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassThresholds {
    pub pedestrian: f64,
    pub cyclist: f64,
    pub car: f64,
}

impl ClassThresholds {
    pub fn get(&self, class: ObjectClass) -> f64 {
        match class {
            ObjectClass::Pedestrian => self.pedestrian,
            ObjectClass::Cyclist => self.cyclist,
            ObjectClass::Car => self.car,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KittiConfig {
    pub iou_thresholds: ClassThresholds,
}

impl Default for KittiConfig {
    fn default() -> Self {
        Self {
            iou_thresholds: ClassThresholds {
                pedestrian: 0.25,
                cyclist: 0.25,
                car: 0.5,
            },
        }
    }
}

/// A PR curve tagged with what produced it, for CSV export.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCurve {
    pub class: ObjectClass,
    /// e.g. `dist_2` or `iou_bev`.
    pub label: String,
    pub curve: PrCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NuscenesClassReport {
    pub num_gt: usize,
    pub num_det: usize,
    pub ap: Option<f64>,
    pub ap_by_threshold: BTreeMap<String, Option<f64>>,
    pub tp_errors: TpErrors,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NuscenesReport {
    pub classes: BTreeMap<ObjectClass, NuscenesClassReport>,
    pub map: Option<f64>,
    #[serde(skip)]
    pub curves: Vec<LabeledCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KittiClassReport {
    pub num_gt: usize,
    pub num_det: usize,
    pub iou_threshold: f64,
    pub ap: BTreeMap<IouVariant, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KittiReport {
    pub classes: BTreeMap<ObjectClass, KittiClassReport>,
    pub map: BTreeMap<IouVariant, Option<f64>>,
    #[serde(skip)]
    pub curves: Vec<LabeledCurve>,
}

/// Metrics document written by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "protocol", rename_all = "lowercase")]
pub enum MetricsReport {
    Nuscenes(NuscenesReport),
    Kitti(KittiReport),
}

impl MetricsReport {
    pub fn curves(&self) -> &[LabeledCurve] {
        match self {
            MetricsReport::Nuscenes(r) => &r.curves,
            MetricsReport::Kitti(r) => &r.curves,
        }
    }

    pub fn table(&self) -> String {
        match self {
            MetricsReport::Nuscenes(r) => format_nuscenes_table(r),
            MetricsReport::Kitti(r) => format_kitti_table(r),
        }
    }
}

fn class_counts(samples: &[EvalSample], class: ObjectClass) -> (usize, usize) {
    samples.iter().fold((0, 0), |(g, d), s| {
        (
            g + s.gts.iter().filter(|b| b.class == class).count(),
            d + s.dets.iter().filter(|b| b.class == class).count(),
        )
    })
}

fn threshold_key(t: f64) -> String {
    format!("{t}")
}

pub fn evaluate_nuscenes(samples: &[EvalSample], config: &NuscenesConfig) -> Result<NuscenesReport> {
    let mut classes = BTreeMap::new();
    let mut curves = Vec::new();
    for class in ObjectClass::ALL {
        let (num_gt, num_det) = class_counts(samples, class);
        if num_gt == 0 && num_det == 0 {
            continue;
        }
        let mut ap_by_threshold = BTreeMap::new();
        let mut aps = Vec::new();
        for &th in &config.distance_thresholds {
            let out = compute_ap(samples, class, Matcher::CenterDistance(th), Interpolation::Nuscenes101)?;
            let ap = out.as_ref().map(|o| o.ap);
            if let Some(o) = out {
                curves.push(LabeledCurve {
                    class,
                    label: format!("dist_{}", threshold_key(th)),
                    curve: o.curve,
                });
            }
            ap_by_threshold.insert(threshold_key(th), ap);
            aps.push(ap);
        }
        let ap = if aps.iter().all(Option::is_some) { aggregate_map(aps) } else { None };
        let m = match_samples(samples, class, Matcher::CenterDistance(config.tp_threshold))?;
        classes.insert(
            class,
            NuscenesClassReport {
                num_gt,
                num_det,
                ap,
                ap_by_threshold,
                tp_errors: tp_errors(&m, samples),
            },
        );
    }
    let map = aggregate_map(classes.values().map(|c| c.ap));
    Ok(NuscenesReport { classes, map, curves })
}

pub fn evaluate_kitti(samples: &[EvalSample], config: &KittiConfig) -> Result<KittiReport> {
    let mut classes = BTreeMap::new();
    let mut curves = Vec::new();
    for class in ObjectClass::ALL {
        let (num_gt, num_det) = class_counts(samples, class);
        if num_gt == 0 && num_det == 0 {
            continue;
        }
        let threshold = config.iou_thresholds.get(class);
        let mut ap = BTreeMap::new();
        for variant in IouVariant::ALL {
            let out = compute_ap(samples, class, Matcher::Iou { variant, threshold }, Interpolation::Kitti40)?;
            ap.insert(variant, out.as_ref().map(|o| o.ap));
            if let Some(o) = out {
                curves.push(LabeledCurve {
                    class,
                    label: format!("iou_{}", variant.label()),
                    curve: o.curve,
                });
            }
        }
        classes.insert(
            class,
            KittiClassReport {
                num_gt,
                num_det,
                iou_threshold: threshold,
                ap,
            },
        );
    }
    let map = IouVariant::ALL
        .into_iter()
        .map(|v| (v, aggregate_map(classes.values().map(|c: &KittiClassReport| c.ap[&v]))))
        .collect();
    Ok(KittiReport { classes, map, curves })
}

fn cell(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.prec$}"))
}

/// AP table (one row, mAP then per-class AP) followed by per-class
/// true-positive errors.
pub fn format_nuscenes_table(r: &NuscenesReport) -> String {
    let mut s = String::new();
    let ap = |c: ObjectClass| r.classes.get(&c).and_then(|x| x.ap);
    let _ = writeln!(s, "{:>8} {:>8} {:>8} {:>8}", "mAP", "AP ped", "AP cyc", "AP car");
    let _ = writeln!(
        s,
        "{:>8} {:>8} {:>8} {:>8}",
        cell(r.map, 1),
        cell(ap(ObjectClass::Pedestrian), 1),
        cell(ap(ObjectClass::Cyclist), 1),
        cell(ap(ObjectClass::Car), 1)
    );
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<6} {:>6} {:>6} {:>6} {:>6} {:>6}", "class", "ATE", "ASE", "AOE", "AVE", "AAE");
    for class in ObjectClass::ALL {
        if let Some(c) = r.classes.get(&class) {
            let e = &c.tp_errors;
            let _ = writeln!(
                s,
                "{:<6} {:>6} {:>6} {:>6} {:>6} {:>6}",
                class.short_name(),
                cell(e.ate, 2),
                cell(e.ase, 2),
                cell(e.aoe, 2),
                cell(e.ave, 2),
                cell(e.aae, 2)
            );
        }
    }
    s
}

/// mAP and per-class AP, each as 2D / BEV / 3D.
pub fn format_kitti_table(r: &KittiReport) -> String {
    let mut s = String::new();
    let groups = ["mAP", "AP ped", "AP cyc", "AP car"];
    let _ = writeln!(s, "{}", groups.map(|g| format!("{g:^20}")).join(" "));
    let _ = writeln!(s, "{}", groups.map(|_| format!("{:>6} {:>6} {:>6}", "2D", "BEV", "3D")).join(" "));
    let triple = |m: &dyn Fn(IouVariant) -> Option<f64>| {
        IouVariant::ALL.map(|v| format!("{:>6}", cell(m(v), 1))).join(" ")
    };
    let mut row = vec![triple(&|v| r.map.get(&v).copied().flatten())];
    for class in ObjectClass::ALL {
        row.push(triple(&|v| r.classes.get(&class).and_then(|c| c.ap[&v])));
    }
    let _ = writeln!(s, "{}", row.join(" "));
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Box3D;
    use approx::assert_abs_diff_eq;
    use nalgebra::Vector3;

    #[test]
    fn map_examples() {
        assert_abs_diff_eq!(aggregate_map([Some(36.6), Some(26.4), Some(58.9)]).unwrap(), 40.633333, epsilon = 1e-5);
        assert_abs_diff_eq!(aggregate_map([Some(39.2), Some(58.5), Some(51.2)]).unwrap(), 49.633333, epsilon = 1e-5);
        assert_eq!(aggregate_map([Some(12.0)]), Some(12.0));
        assert_eq!(aggregate_map([None, Some(12.0)]), Some(12.0));
        assert_eq!(aggregate_map([None]), None);
    }

    fn injected(aps: [f64; 3]) -> NuscenesReport {
        let classes = ObjectClass::ALL
            .into_iter()
            .zip(aps)
            .map(|(c, ap)| {
                (
                    c,
                    NuscenesClassReport {
                        num_gt: 1,
                        num_det: 1,
                        ap: Some(ap),
                        ap_by_threshold: BTreeMap::new(),
                        tp_errors: TpErrors::default(),
                    },
                )
            })
            .collect::<BTreeMap<_, _>>();
        let map = aggregate_map(classes.values().map(|c| c.ap));
        NuscenesReport {
            classes,
            map,
            curves: vec![],
        }
    }

    #[test]
    fn table_prints_map_like_the_reference_layout() {
        let t = format_nuscenes_table(&injected([36.6, 26.4, 58.9]));
        let row: Vec<&str> = t.lines().nth(1).unwrap().split_whitespace().collect();
        assert_eq!(row, vec!["40.6", "36.6", "26.4", "58.9"]);
    }

    fn car(x: f64, y: f64) -> Box3D {
        Box3D::new(Vector3::new(x, y, 0.8), Vector3::new(4.0, 1.8, 1.6), 0.1, ObjectClass::Car)
    }

    #[test]
    fn perfect_predictions_score_100() {
        let gts = vec![car(10.0, 0.0), car(20.0, 5.0)];
        let dets: Vec<_> = gts.iter().map(|g| g.clone().with_score(0.8)).collect();
        let samples = vec![EvalSample {
            frame_id: "0".into(),
            dets,
            gts,
            camera: Some(
                crate::CameraModel::front_facing(500.0, 500.0, 400.0, 300.0, 800, 600, Vector3::new(0.0, 0.0, 1.0))
                    .unwrap(),
            ),
        }];
        let n = evaluate_nuscenes(&samples, &NuscenesConfig::default()).unwrap();
        assert_eq!(n.map, Some(100.0));
        assert_eq!(n.classes[&ObjectClass::Car].tp_errors.ate, Some(0.0));
        assert_eq!(n.curves.len(), 4);
        let k = evaluate_kitti(&samples, &KittiConfig::default()).unwrap();
        for v in IouVariant::ALL {
            assert_eq!(k.map[&v], Some(100.0));
        }
        let json = serde_json::to_value(MetricsReport::Kitti(k)).unwrap();
        assert_eq!(json["protocol"], "kitti");
        assert_eq!(json["classes"]["car"]["ap"]["bev"], 100.0);
        assert_eq!(json["map"]["3d"], 100.0);
        let json = serde_json::to_value(MetricsReport::Nuscenes(n)).unwrap();
        assert_eq!(json["classes"]["car"]["ap_by_threshold"]["0.5"], 100.0);
    }
}
