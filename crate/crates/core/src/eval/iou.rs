// SPDX-License-Identifier: Apache-2.0

//! Overlap measures for oriented boxes: BEV polygon IoU, 3D IoU and the
//! image-plane rectangle IoU of projected boxes.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::geometry::{box_corners_3d, box_corners_bev, Box3D, CameraModel};

const DEGENERATE_AREA: f64 = 1e-12;

fn cross(a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Signed shoelace area; positive for counterclockwise polygons.
pub fn polygon_area(poly: &[Vector2<f64>]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    0.5 * (0..n).map(|i| cross(poly[i], poly[(i + 1) % n])).sum::<f64>()
}

/// Clips `subject` by each edge of the counterclockwise convex polygon
/// `clip` (Sutherland-Hodgman). Both inputs must be convex.
pub fn clip_convex(subject: &[Vector2<f64>], clip: &[Vector2<f64>]) -> Vec<Vector2<f64>> {
    let mut output = subject.to_vec();
    for i in 0..clip.len() {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let edge = clip[(i + 1) % clip.len()] - a;
        let side = |p: Vector2<f64>| cross(edge, p - a);
        let input = std::mem::take(&mut output);
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            let (sc, sp) = (side(cur), side(prev));
            if sc >= 0.0 {
                if sp < 0.0 {
                    output.push(prev + (cur - prev) * (sp / (sp - sc)));
                }
                output.push(cur);
            } else if sp >= 0.0 {
                output.push(prev + (cur - prev) * (sp / (sp - sc)));
            }
        }
    }
    output
}

pub fn bev_intersection_area(a: &Box3D, b: &Box3D) -> f64 {
    let pa = box_corners_bev(a);
    let pb = box_corners_bev(b);
    polygon_area(&clip_convex(&pa, &pb)).max(0.0)
}

/// Rotated-rectangle IoU of the box footprints.
pub fn iou_bev(a: &Box3D, b: &Box3D) -> f64 {
    let (area_a, area_b) = (a.bev_area(), b.bev_area());
    if area_a < DEGENERATE_AREA || area_b < DEGENERATE_AREA {
        return 0.0;
    }
    let inter = bev_intersection_area(a, b);
    (inter / (area_a + area_b - inter)).clamp(0.0, 1.0)
}

pub fn vertical_overlap(a: &Box3D, b: &Box3D) -> f64 {
    let (a0, a1) = a.z_range();
    let (b0, b1) = b.z_range();
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

pub fn iou_3d(a: &Box3D, b: &Box3D) -> f64 {
    let (va, vb) = (a.volume(), b.volume());
    if va < DEGENERATE_AREA || vb < DEGENERATE_AREA {
        return 0.0;
    }
    let h = vertical_overlap(a, b);
    if h == 0.0 {
        return 0.0;
    }
    let inter = bev_intersection_area(a, b) * h;
    (inter / (va + vb - inter)).clamp(0.0, 1.0)
}

/// Axis-aligned image rectangle `[x0, x1] × [y0, y1]` in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0).max(0.0) * (self.y1 - self.y0).max(0.0)
    }
}

pub fn rect_iou(a: &Rect, b: &Rect) -> f64 {
    let (area_a, area_b) = (a.area(), b.area());
    if area_a < DEGENERATE_AREA || area_b < DEGENERATE_AREA {
        return 0.0;
    }
    let iw = (a.x1.min(b.x1) - a.x0.max(b.x0)).max(0.0);
    let ih = (a.y1.min(b.y1) - a.y0.max(b.y0)).max(0.0);
    let inter = iw * ih;
    (inter / (area_a + area_b - inter)).clamp(0.0, 1.0)
}

/// Bounding rectangle of the projected corners in front of the camera,
/// clipped to the image. `None` when every corner is behind the camera.
pub fn image_rect(b: &Box3D, camera: &CameraModel) -> Option<Rect> {
    let ext = camera.extrinsics();
    let mut rect: Option<Rect> = None;
    for corner in box_corners_3d(b) {
        let p = camera.project_camera_point(&ext.apply(&corner));
        if !(p.depth > 0.0) {
            continue;
        }
        let r = rect.get_or_insert(Rect::new(p.u, p.v, p.u, p.v));
        r.x0 = r.x0.min(p.u);
        r.y0 = r.y0.min(p.v);
        r.x1 = r.x1.max(p.u);
        r.y1 = r.y1.max(p.v);
    }
    rect.map(|r| {
        let (w, h) = (camera.width() as f64, camera.height() as f64);
        Rect::new(r.x0.clamp(0.0, w), r.y0.clamp(0.0, h), r.x1.clamp(0.0, w), r.y1.clamp(0.0, h))
    })
}

pub fn iou_2d_image(a: &Box3D, b: &Box3D, camera: &CameraModel) -> f64 {
    match (image_rect(a, camera), image_rect(b, camera)) {
        (Some(ra), Some(rb)) => rect_iou(&ra, &rb),
        _ => 0.0,
    }
}
