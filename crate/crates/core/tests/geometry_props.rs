// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;

use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;
use rcbev::geometry::{box_corners_bev, normalize_yaw, transform_points, Box3D, CameraModel, ObjectClass, Pose};

fn pose_strategy() -> impl Strategy<Value = Pose> {
    (
        -PI..PI,
        -1.5..1.5f64,
        -PI..PI,
        prop::array::uniform3(-100.0..100.0f64),
    )
        .prop_map(|(roll, pitch, yaw, t)| {
            let r = Rotation3::from_euler_angles(roll, pitch, yaw).into_inner();
            Pose::new(r, Vector3::from(t)).unwrap()
        })
}

fn points_strategy() -> impl Strategy<Value = Vec<Vector3<f64>>> {
    prop::collection::vec(prop::array::uniform3(-200.0..200.0f64).prop_map(Vector3::from), 0..50)
}

proptest! {
    #[test]
    fn transform_then_inverse_is_identity(pose in pose_strategy(), pts in points_strategy()) {
        let back = transform_points(&pose.inverse(), &transform_points(&pose, &pts));
        prop_assert_eq!(back.len(), pts.len());
        for (a, b) in back.iter().zip(&pts) {
            prop_assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn composition_is_associative(a in pose_strategy(), b in pose_strategy(), c in pose_strategy(),
                                  p in prop::array::uniform3(-50.0..50.0f64)) {
        let p = Vector3::from(p);
        let left = a.compose(&b).compose(&c).apply(&p);
        let right = a.compose(&b.compose(&c)).apply(&p);
        prop_assert!((left - right).norm() < 1e-9);
        prop_assert!((a.compose(&b).apply(&p) - a.apply(&b.apply(&p))).norm() < 1e-9);
    }

    #[test]
    fn corner_edges_match_size(l in 0.1..30.0f64, w in 0.1..30.0f64, yaw in -10.0..10.0f64,
                               cx in -50.0..50.0f64, cy in -50.0..50.0f64) {
        let b = Box3D::new(Vector3::new(cx, cy, 0.0), Vector3::new(l, w, 1.0), yaw, ObjectClass::Car);
        let c = box_corners_bev(&b);
        let edges: Vec<f64> = (0..4).map(|i| (c[(i + 1) % 4] - c[i]).norm()).collect();
        for (e, want) in edges.iter().zip([l, w, l, w]) {
            prop_assert!((e - want).abs() < 1e-9, "edges {:?}", edges);
        }
        // counterclockwise: positive signed area
        let area: f64 = (0..4).map(|i| c[i].perp(&c[(i + 1) % 4])).sum::<f64>() / 2.0;
        prop_assert!((area - l * w).abs() < 1e-8);
    }

    #[test]
    fn yaw_wraps_by_full_turns(yaw in -PI..PI, k in -20i32..20) {
        let shifted = yaw + 2.0 * PI * f64::from(k);
        let n = normalize_yaw(shifted);
        prop_assert!(n > -PI && n <= PI);
        let base = Box3D::new(Vector3::new(3.0, -2.0, 0.5), Vector3::new(4.0, 2.0, 1.5), yaw, ObjectClass::Car);
        let wrapped = Box3D::new(base.center, base.size, shifted, ObjectClass::Car);
        for (a, b) in box_corners_bev(&base).iter().zip(box_corners_bev(&wrapped).iter()) {
            prop_assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn unproject_then_project_round_trips(u in 0.0..1600.0f64, v in 0.0..900.0f64, depth in 0.5..80.0f64,
                                          pos in prop::array::uniform3(-2.0..2.0f64)) {
        let cam = CameraModel::front_facing(1266.0, 1266.0, 816.0, 491.0, 1600, 900, Vector3::from(pos)).unwrap();
        let p = cam.unproject(u, v, depth);
        let proj = cam.project(&p);
        prop_assert!(proj.valid);
        prop_assert!((proj.u - u).abs() < 1e-6 && (proj.v - v).abs() < 1e-6);
        prop_assert!((proj.depth - depth).abs() < 1e-9);
    }
}
