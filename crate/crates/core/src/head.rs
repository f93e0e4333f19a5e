// SPDX-License-Identifier: Apache-2.0

//! BEV fusion by channel concatenation and the center-heatmap detection head
//! math: target rendering, Gaussian focal loss, masked L1 loss and peak
//! decoding.

use nalgebra::{Vector2, Vector3};
use ndarray::{s, Array2, Array3, ArrayView, Axis, Dimension, Zip};
use serde::{Deserialize, Serialize};

use crate::bev::BevFeatureMap;
use crate::error::{Error, Result};
use crate::geometry::{normalize_yaw, Box3D, GridConfig, ObjectClass};

/// Regression channel layout shared by targets and decoding.
pub mod reg {
    /// Sub-cell offset from the cell's lower corner along x, in cells.
    pub const DX: usize = 0;
    pub const DY: usize = 1;
    pub const Z: usize = 2;
    pub const LOG_L: usize = 3;
    pub const LOG_W: usize = 4;
    pub const LOG_H: usize = 5;
    pub const SIN_YAW: usize = 6;
    pub const COS_YAW: usize = 7;
    pub const VX: usize = 8;
    pub const VY: usize = 9;
    pub const COUNT: usize = 10;
    /// Optional attribute id channel (negative for none) in decode inputs.
    pub const ATTRIBUTE: usize = 10;
}

/// Channel-wise concatenation, camera channels first.
pub fn concat_bev(camera: &BevFeatureMap, radar: &BevFeatureMap) -> Result<BevFeatureMap> {
    let (a, b) = (camera.grid(), radar.grid());
    let checks: [(&'static str, String, String); 7] = [
        ("rows", a.rows().to_string(), b.rows().to_string()),
        ("cols", a.cols().to_string(), b.cols().to_string()),
        ("x_min", a.x_min().to_string(), b.x_min().to_string()),
        ("x_max", a.x_max().to_string(), b.x_max().to_string()),
        ("y_min", a.y_min().to_string(), b.y_min().to_string()),
        ("y_max", a.y_max().to_string(), b.y_max().to_string()),
        ("step", a.step().to_string(), b.step().to_string()),
    ];
    if let Some((field, left, right)) = checks.into_iter().find(|(_, l, r)| l != r) {
        return Err(Error::GridMismatch { field, left, right });
    }
    let data = ndarray::concatenate(Axis(0), &[camera.data().view(), radar.data().view()])
        .expect("spatial dims checked");
    BevFeatureMap::from_array(data, *a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianConfig {
    pub min_overlap: f64,
    /// Cells.
    pub min_radius: usize,
}

impl Default for GaussianConfig {
    fn default() -> Self {
        Self {
            min_overlap: 0.1,
            min_radius: 2,
        }
    }
}

/// Largest radius (cells) at which a corner-shifted box still overlaps the
/// true one with IoU `min_overlap`; the minimum of the three corner cases.
pub fn gaussian_radius(length: f64, width: f64, min_overlap: f64) -> f64 {
    let (h, w) = (length, width);

    let b1 = h + w;
    let c1 = w * h * (1.0 - min_overlap) / (1.0 + min_overlap);
    let r1 = (b1 + (b1 * b1 - 4.0 * c1).sqrt()) / 2.0;

    let a2 = 4.0;
    let b2 = 2.0 * (h + w);
    let c2 = (1.0 - min_overlap) * w * h;
    let r2 = (b2 + (b2 * b2 - 4.0 * a2 * c2).sqrt()) / 2.0;

    let a3 = 4.0 * min_overlap;
    let b3 = -2.0 * min_overlap * (h + w);
    let c3 = (min_overlap - 1.0) * w * h;
    let r3 = (b3 + (b3 * b3 - 4.0 * a3 * c3).sqrt()) / 2.0;

    r1.min(r2).min(r3)
}

/// Splats a unit-peak Gaussian of the given radius at `(row, col)`,
/// combining with existing values by elementwise max.
pub fn draw_gaussian(heatmap: &mut ndarray::ArrayViewMut2<f64>, row: usize, col: usize, radius: usize) {
    let sigma = (2 * radius + 1) as f64 / 6.0;
    let denom = 2.0 * sigma * sigma;
    let (rows, cols) = heatmap.dim();
    let r0 = row.saturating_sub(radius);
    let r1 = (row + radius + 1).min(rows);
    let c0 = col.saturating_sub(radius);
    let c1 = (col + radius + 1).min(cols);
    for r in r0..r1 {
        for c in c0..c1 {
            let dr = r as f64 - row as f64;
            let dc = c as f64 - col as f64;
            let mut g = (-(dr * dr + dc * dc) / denom).exp();
            if g < f64::EPSILON {
                g = 0.0;
            }
            let cell = &mut heatmap[[r, c]];
            *cell = cell.max(g);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetMaps {
    /// `[num_classes × rows × cols]`.
    pub heatmaps: Array3<f64>,
    /// `[reg::COUNT × rows × cols]`, valid where `mask` is set.
    pub regressions: Array3<f64>,
    pub mask: Array2<bool>,
    /// Attribute id per cell, `-1` where absent.
    pub attributes: Array2<i32>,
    pub grid: GridConfig,
}

impl TargetMaps {
    /// Regressions with the attribute channel appended, as consumed by
    /// [`decode_detections`].
    pub fn decode_regressions(&self) -> Array3<f64> {
        let attr = self.attributes.mapv(f64::from).insert_axis(Axis(0));
        ndarray::concatenate(Axis(0), &[self.regressions.view(), attr.view()]).expect("same spatial dims")
    }
}

/// Renders heatmap and regression targets for boxes; boxes whose center is
/// outside the grid are skipped.
pub fn render_targets(
    boxes: &[Box3D],
    grid: &GridConfig,
    num_classes: usize,
    gaussian: GaussianConfig,
) -> Result<TargetMaps> {
    let (rows, cols) = (grid.rows(), grid.cols());
    let mut t = TargetMaps {
        heatmaps: Array3::zeros((num_classes, rows, cols)),
        regressions: Array3::zeros((reg::COUNT, rows, cols)),
        mask: Array2::from_elem((rows, cols), false),
        attributes: Array2::from_elem((rows, cols), -1),
        grid: *grid,
    };
    for b in boxes {
        let k = b.class.index();
        if k >= num_classes {
            return Err(Error::Config(format!("class {} outside {num_classes} heatmaps", b.class)));
        }
        let Some((row, col)) = grid.cell_of(b.center.x, b.center.y) else {
            continue;
        };
        let radius = gaussian_radius(b.length() / grid.step(), b.width() / grid.step(), gaussian.min_overlap);
        let radius = (radius.floor().max(0.0) as usize).max(gaussian.min_radius);
        draw_gaussian(&mut t.heatmaps.index_axis_mut(Axis(0), k), row, col, radius);

        let (s, c) = b.yaw.sin_cos();
        let values = [
            (b.center.x - grid.x_min()) / grid.step() - row as f64,
            (b.center.y - grid.y_min()) / grid.step() - col as f64,
            b.center.z,
            b.size.x.ln(),
            b.size.y.ln(),
            b.size.z.ln(),
            s,
            c,
            b.velocity.x,
            b.velocity.y,
        ];
        for (ch, v) in values.into_iter().enumerate() {
            t.regressions[[ch, row, col]] = v;
        }
        t.mask[[row, col]] = true;
        t.attributes[[row, col]] = b.attribute.map_or(-1, |a| a as i32);
    }
    Ok(t)
}

fn check_same_shape(context: &'static str, a: &[usize], b: &[usize]) -> Result<()> {
    if a != b {
        return Err(Error::Shape {
            context,
            expected: a.to_vec(),
            actual: b.to_vec(),
        });
    }
    Ok(())
}

pub const FOCAL_ALPHA: i32 = 2;
pub const FOCAL_BETA: i32 = 4;

/// Penalty-reduced focal loss over center heatmaps, normalized by the
/// number of unit peaks (at least one). `pred` must lie strictly in (0, 1).
pub fn gaussian_focal_loss<D: Dimension>(pred: ArrayView<f64, D>, target: ArrayView<f64, D>) -> Result<f64> {
    check_same_shape("gaussian_focal_loss", target.shape(), pred.shape())?;
    if let Some(p) = pred.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
        return Err(Error::Config(format!("prediction {p} outside (0, 1); clamp before the loss")));
    }
    let mut pos = 0.0;
    let mut neg = 0.0;
    let mut num_pos = 0usize;
    Zip::from(&pred).and(&target).for_each(|&p, &t| {
        if t == 1.0 {
            pos -= p.ln() * (1.0 - p).powi(FOCAL_ALPHA);
            num_pos += 1;
        } else {
            neg -= (1.0 - p).ln() * p.powi(FOCAL_ALPHA) * (1.0 - t).powi(FOCAL_BETA);
        }
    });
    Ok((pos + neg) / num_pos.max(1) as f64)
}

/// Mean absolute error over masked cells and all channels; zero when the
/// mask is empty.
pub fn l1_regression_loss(pred: &Array3<f64>, target: &Array3<f64>, mask: &Array2<bool>) -> Result<f64> {
    check_same_shape("l1_regression_loss", target.shape(), pred.shape())?;
    check_same_shape("l1_regression_loss mask", &target.shape()[1..], mask.shape())?;
    let channels = pred.dim().0;
    let mut sum = 0.0;
    let mut cells = 0usize;
    for ((r, c), &m) in mask.indexed_iter() {
        if m {
            cells += 1;
            for ch in 0..channels {
                sum += (pred[[ch, r, c]] - target[[ch, r, c]]).abs();
            }
        }
    }
    if cells == 0 || channels == 0 {
        return Ok(0.0);
    }
    Ok(sum / (cells * channels) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodeConfig {
    pub score_threshold: f64,
    pub max_detections: usize,
    pub nms_kernel: usize,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            score_threshold: 0.1,
            max_detections: 500,
            nms_kernel: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub bbox: Box3D,
    pub row: usize,
    pub col: usize,
}

/// A cell is a peak when no neighbor in the window is larger and no
/// neighbor with a lower `(row, col)` index is equal.
fn is_local_max(heatmap: &ndarray::ArrayView2<f64>, row: usize, col: usize, half: usize) -> bool {
    let v = heatmap[[row, col]];
    let (rows, cols) = heatmap.dim();
    for r in row.saturating_sub(half)..(row + half + 1).min(rows) {
        for c in col.saturating_sub(half)..(col + half + 1).min(cols) {
            if (r, c) == (row, col) {
                continue;
            }
            let n = heatmap[[r, c]];
            if n > v || (n == v && (r, c) < (row, col)) {
                return false;
            }
        }
    }
    true
}

/// Extracts heatmap peaks and reconstructs boxes from the regression maps.
///
/// `regressions` holds the [`reg`] channels; an optional eleventh channel
/// carries attribute ids.
pub fn decode_detections(
    heatmaps: &Array3<f64>,
    regressions: &Array3<f64>,
    grid: &GridConfig,
    config: DecodeConfig,
) -> Result<Vec<Detection>> {
    if config.nms_kernel % 2 == 0 {
        return Err(Error::Config(format!("nms kernel must be odd, got {}", config.nms_kernel)));
    }
    let (num_classes, rows, cols) = heatmaps.dim();
    if (rows, cols) != (grid.rows(), grid.cols()) {
        return Err(Error::Shape {
            context: "decode heatmaps",
            expected: vec![num_classes, grid.rows(), grid.cols()],
            actual: heatmaps.shape().to_vec(),
        });
    }
    let (reg_ch, rr, rc) = regressions.dim();
    if (rr, rc) != (rows, cols) || !(reg::COUNT..=reg::COUNT + 1).contains(&reg_ch) {
        return Err(Error::Shape {
            context: "decode regressions",
            expected: vec![reg::COUNT, rows, cols],
            actual: regressions.shape().to_vec(),
        });
    }
    if num_classes > ObjectClass::ALL.len() {
        return Err(Error::Config(format!("{num_classes} heatmaps but only {} classes", ObjectClass::ALL.len())));
    }

    let half = config.nms_kernel / 2;
    let mut peaks: Vec<(f64, usize, usize, usize)> = Vec::new();
    for k in 0..num_classes {
        let hm = heatmaps.index_axis(Axis(0), k);
        for ((r, c), &v) in hm.indexed_iter() {
            if v >= config.score_threshold && is_local_max(&hm, r, c, half) {
                peaks.push((v, k, r, c));
            }
        }
    }
    // stable: equal scores keep (class, row, col) order
    peaks.sort_by(|a, b| b.0.total_cmp(&a.0));
    peaks.truncate(config.max_detections);

    let detections = peaks
        .into_iter()
        .map(|(score, k, r, c)| {
            let g = |ch: usize| regressions[[ch, r, c]];
            let x = (r as f64 + g(reg::DX)) * grid.step() + grid.x_min();
            let y = (c as f64 + g(reg::DY)) * grid.step() + grid.y_min();
            let attribute = (reg_ch > reg::ATTRIBUTE)
                .then(|| g(reg::ATTRIBUTE).round())
                .filter(|a| *a >= 0.0)
                .map(|a| a as u32);
            let bbox = Box3D {
                center: Vector3::new(x, y, g(reg::Z)),
                size: Vector3::new(g(reg::LOG_L).exp(), g(reg::LOG_W).exp(), g(reg::LOG_H).exp()),
                yaw: normalize_yaw(g(reg::SIN_YAW).atan2(g(reg::COS_YAW))),
                velocity: Vector2::new(g(reg::VX), g(reg::VY)),
                class: ObjectClass::from_index(k).expect("class count checked"),
                attribute,
                score: Some(score.clamp(0.0, 1.0)),
            };
            Detection { bbox, row: r, col: c }
        })
        .collect();
    Ok(detections)
}

/// Heatmap slice helper for tests and tools.
pub fn class_heatmap(t: &TargetMaps, class: ObjectClass) -> ndarray::ArrayView2<'_, f64> {
    t.heatmaps.slice(s![class.index(), .., ..])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid() -> GridConfig {
        GridConfig::new(0.0, 12.8, -6.4, 6.4, 0.1).unwrap()
    }

    fn car_at(x: f64, y: f64) -> Box3D {
        Box3D::new(Vector3::new(x, y, 0.8), Vector3::new(4.0, 1.8, 1.6), 0.3, ObjectClass::Car)
    }

    #[test]
    fn concat_examples() {
        let g = grid();
        let cam = BevFeatureMap::from_array(Array3::from_elem((80, g.rows(), g.cols()), 1.5), g).unwrap();
        let rad = BevFeatureMap::zeros(64, g);
        let f = concat_bev(&cam, &rad).unwrap();
        assert_eq!(f.channels(), 144);
        assert_eq!(f.data().slice(s![..80, .., ..]), cam.data());
        assert!(f.data().slice(s![80.., .., ..]).iter().all(|&v| v == 0.0));

        let other = GridConfig::new(0.0, 6.4, -6.4, 6.4, 0.1).unwrap();
        match concat_bev(&cam, &BevFeatureMap::zeros(4, other)) {
            Err(Error::GridMismatch { field, .. }) => assert_eq!(field, "rows"),
            other => panic!("expected grid mismatch, got {other:?}"),
        }
    }

    #[test]
    fn radius_rule_reference_values() {
        // 4 m x 1.8 m car at 0.1 m cells -> 40 x 18 cells
        let r = gaussian_radius(40.0, 18.0, 0.1);
        // case 3 is binding: b3 = -11.6, c3 = -648, a3 = 0.4
        let expected = (-11.6f64 + (11.6f64 * 11.6 + 4.0 * 0.4 * 648.0).sqrt()) / 2.0;
        assert_abs_diff_eq!(r, expected, epsilon = 1e-12);
        assert!(gaussian_radius(2.0, 2.0, 0.1) < 2.0);
    }

    #[test]
    fn single_object_peak() {
        let g = grid();
        // cell (50, 64) center is (5.05, 0.05)
        let t = render_targets(&[car_at(5.05, 0.05)], &g, 3, GaussianConfig::default()).unwrap();
        let hm = class_heatmap(&t, ObjectClass::Car);
        assert_eq!(hm[[50, 64]], 1.0);
        for d in 1..5 {
            assert!(hm[[50 + d, 64]] < hm[[50 + d - 1, 64]]);
            assert!(hm[[50, 64 - d]] < hm[[50, 64 - d + 1]]);
        }
        assert!(t.mask[[50, 64]]);
        assert_eq!(t.mask.iter().filter(|&&m| m).count(), 1);
        assert!(class_heatmap(&t, ObjectClass::Pedestrian).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn far_objects_have_independent_peaks() {
        let g = grid();
        let boxes = [car_at(2.05, -4.05), car_at(10.05, 4.05)];
        let t = render_targets(&boxes, &g, 3, GaussianConfig::default()).unwrap();
        let both = class_heatmap(&t, ObjectClass::Car).to_owned();
        let a = render_targets(&boxes[..1], &g, 3, GaussianConfig::default()).unwrap();
        let b = render_targets(&boxes[1..], &g, 3, GaussianConfig::default()).unwrap();
        let sum = &class_heatmap(&a, ObjectClass::Car) + &class_heatmap(&b, ObjectClass::Car);
        assert_eq!(both, sum);
        assert_eq!(both.iter().filter(|&&v| v == 1.0).count(), 2);
    }

    #[test]
    fn nearby_objects_combine_by_max() {
        let g = grid();
        let boxes = [car_at(5.05, 0.05), car_at(5.45, 0.25)];
        let t = render_targets(&boxes, &g, 3, GaussianConfig::default()).unwrap();
        // oracle: direct evaluation of both Gaussians at every cell
        let cfg = GaussianConfig::default();
        let rad = (gaussian_radius(40.0, 18.0, cfg.min_overlap).floor() as usize).max(cfg.min_radius) as i64;
        let sigma = (2 * rad + 1) as f64 / 6.0;
        let centers = [(50i64, 64i64), (54, 66)];
        let hm = class_heatmap(&t, ObjectClass::Car);
        for ((r, c), &v) in hm.indexed_iter() {
            let expected = centers
                .iter()
                .filter(|&&(cr, cc)| (r as i64 - cr).abs() <= rad && (c as i64 - cc).abs() <= rad)
                .map(|&(cr, cc)| {
                    let d2 = ((r as i64 - cr).pow(2) + (c as i64 - cc).pow(2)) as f64;
                    let g = (-d2 / (2.0 * sigma * sigma)).exp();
                    if g < f64::EPSILON { 0.0 } else { g }
                })
                .fold(0.0, f64::max);
            assert_eq!(v, expected, "cell ({r}, {c})");
        }
    }

    #[test]
    fn focal_loss_examples() {
        let mut target = Array2::zeros((4, 4));
        target[[1, 2]] = 1.0;
        let mut pred = Array2::from_elem((4, 4), 1e-6);
        pred[[1, 2]] = 1.0 - 1e-6;
        assert!(gaussian_focal_loss(pred.view(), target.view()).unwrap() < 1e-4);

        let single = gaussian_focal_loss(ndarray::arr1(&[0.5]).view(), ndarray::arr1(&[1.0]).view()).unwrap();
        assert_abs_diff_eq!(single, 0.25 * 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(single, 0.1733, epsilon = 1e-4);

        let doubled = gaussian_focal_loss(ndarray::arr1(&[0.5, 0.5]).view(), ndarray::arr1(&[1.0, 1.0]).view()).unwrap();
        assert_abs_diff_eq!(doubled, single, epsilon = 1e-15);

        assert!(gaussian_focal_loss(ndarray::arr1(&[1.0]).view(), ndarray::arr1(&[1.0]).view()).is_err());
        assert!(gaussian_focal_loss(ndarray::arr1(&[0.5]).view(), ndarray::arr1(&[1.0, 0.0]).view()).is_err());
    }

    #[test]
    fn focal_loss_penalizes_negatives_near_peaks_less() {
        let near = gaussian_focal_loss(ndarray::arr1(&[0.3]).view(), ndarray::arr1(&[0.9]).view()).unwrap();
        let far = gaussian_focal_loss(ndarray::arr1(&[0.3]).view(), ndarray::arr1(&[0.0]).view()).unwrap();
        assert!(near < far);
        assert_abs_diff_eq!(far, -(0.7f64).ln() * 0.09, epsilon = 1e-15);
    }

    #[test]
    fn l1_examples() {
        let target = Array3::from_elem((10, 2, 2), 0.25);
        let mut mask = Array2::from_elem((2, 2), false);
        assert_eq!(l1_regression_loss(&target, &target, &mask).unwrap(), 0.0);
        mask[[1, 0]] = true;
        let mut pred = target.clone();
        pred[[3, 1, 0]] += 0.5;
        pred[[3, 0, 0]] += 9.0; // unmasked
        assert_abs_diff_eq!(l1_regression_loss(&pred, &target, &mask).unwrap(), 0.05, epsilon = 1e-15);
        assert_eq!(l1_regression_loss(&pred, &target, &Array2::from_elem((2, 2), false)).unwrap(), 0.0);
    }

    fn peak_maps(value: f64) -> (Array3<f64>, Array3<f64>) {
        let g = grid();
        let mut hm = Array3::zeros((3, g.rows(), g.cols()));
        hm[[2, 10, 20]] = value;
        let mut regs = Array3::zeros((reg::COUNT, g.rows(), g.cols()));
        regs[[reg::COS_YAW, 10, 20]] = 1.0;
        (hm, regs)
    }

    #[test]
    fn decode_threshold_examples() {
        let g = grid();
        let cfg = DecodeConfig {
            score_threshold: 0.3,
            max_detections: 10,
            nms_kernel: 3,
        };
        let (hm, regs) = peak_maps(0.9);
        let d = decode_detections(&hm, &regs, &g, cfg).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].row, d[0].col, d[0].bbox.class), (10, 20, ObjectClass::Car));
        assert_eq!(d[0].bbox.score, Some(0.9));
        assert_abs_diff_eq!(d[0].bbox.center.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d[0].bbox.center.y, -4.4, epsilon = 1e-12);

        let (hm, regs) = peak_maps(0.2);
        assert!(decode_detections(&hm, &regs, &g, cfg).unwrap().is_empty());
        assert!(decode_detections(&hm, &regs, &g, DecodeConfig { nms_kernel: 2, ..cfg }).is_err());
    }

    #[test]
    fn plateau_tie_goes_to_lower_index() {
        let g = grid();
        let (mut hm, regs) = peak_maps(0.8);
        hm[[2, 10, 21]] = 0.8;
        hm[[2, 11, 20]] = 0.8;
        let d = decode_detections(&hm, &regs, &g, DecodeConfig::default()).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].row, d[0].col), (10, 20));
    }

    #[test]
    fn max_detections_keeps_highest() {
        let g = grid();
        let mut hm = Array3::zeros((3, g.rows(), g.cols()));
        for (i, v) in [0.5, 0.9, 0.7].into_iter().enumerate() {
            hm[[0, 10 + 10 * i, 10]] = v;
        }
        let regs = Array3::zeros((reg::COUNT, g.rows(), g.cols()));
        let cfg = DecodeConfig {
            max_detections: 2,
            ..DecodeConfig::default()
        };
        let d = decode_detections(&hm, &regs, &g, cfg).unwrap();
        let scores: Vec<_> = d.iter().map(|d| d.bbox.score.unwrap()).collect();
        assert_eq!(scores, vec![0.9, 0.7]);
    }

    #[test]
    fn render_decode_round_trip() {
        let g = grid();
        let b = Box3D::new(Vector3::new(3.217, -2.903, 1.1), Vector3::new(4.4, 1.9, 1.7), -2.5, ObjectClass::Car)
            .with_velocity(4.0, -1.0)
            .with_attribute(1);
        let t = render_targets(std::slice::from_ref(&b), &g, 3, GaussianConfig::default()).unwrap();
        let d = decode_detections(&t.heatmaps, &t.decode_regressions(), &g, DecodeConfig::default()).unwrap();
        assert_eq!(d.len(), 1);
        let r = &d[0].bbox;
        assert!((r.center - b.center).norm() < 1e-9);
        assert!((r.size - b.size).norm() < 1e-9);
        assert_abs_diff_eq!(r.yaw, b.yaw, epsilon = 1e-12);
        assert_eq!(r.velocity, b.velocity);
        assert_eq!(r.attribute, Some(1));
        assert_eq!(r.score, Some(1.0));
    }
}
