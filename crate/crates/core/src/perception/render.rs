//! Geometry-based segmentation oracle.
//!
//! Renders what the segmentation network would report: the visible
//! free-ground contour as an image-space polygon, plus one bounding box per
//! visible object. Visibility is purely geometric (FOV wedge, range, free
//! cells along each ray); occlusion between objects is not modeled.

use serde::{Deserialize, Serialize};

use crate::camera::{CameraModel, GroundHomography};
use crate::geometry::{Polygon, Pose2D};
use crate::world::World;

/// Axis-aligned object box in integer pixel coordinates, inclusive corners.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectBox {
    pub object_id: String,
    pub u_tl: u32,
    pub v_tl: u32,
    pub u_br: u32,
    pub v_br: u32,
}

impl ObjectBox {
    /// Box center per the tracker convention: integer division of the
    /// corner sums.
    pub fn center(&self) -> (u32, u32) {
        ((self.u_tl + self.u_br) / 2, (self.v_tl + self.v_br) / 2)
    }
}

/// One rendered camera frame: ground contour polygon (image px, possibly
/// empty) and the visible object boxes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentationFrame {
    pub ground_contour: Polygon,
    pub object_boxes: Vec<ObjectBox>,
}

impl SegmentationFrame {
    pub fn empty() -> Self {
        Self {
            ground_contour: Polygon::new(vec![]),
            object_boxes: vec![],
        }
    }

    pub fn box_by_id(&self, id: &str) -> Option<&ObjectBox> {
        self.object_boxes.iter().find(|b| b.object_id == id)
    }
}

/// Number of azimuth rays swept across the FOV when tracing the contour.
const CONTOUR_RAYS: usize = 61;
/// Radius of the near arc closing the contour fan, meters.
const NEAR_ARC_M: f64 = 0.05;

/// Renders the segmentation frame seen from `robot_pose`.
///
/// The ground contour is the FOV wedge clipped by map-free cells (marched
/// per ray), by the perception range, and by the image rectangle. Each
/// unpicked object whose footprint center lies in the wedge and range
/// yields the projected bounding box of its cylinder, clipped to the image;
/// boxes that fall entirely outside the image are dropped.
pub fn render_segmentation(
    world: &World,
    robot_pose: &Pose2D,
    cam: &CameraModel,
    hom: &GroundHomography,
) -> SegmentationFrame {
    let half_fov = cam.hfov / 2.0;
    let step = world.grid.resolution / 2.0;
    let (hx, hy) = robot_pose.heading_vec();
    let _ = (hx, hy);

    // march each azimuth ray through the grid to find the visible extent;
    // ground beyond the top image row is clipped anyway, so rays stop there
    let x_vis = cam.far_visible_ground_x();
    let mut far_pts: Vec<(f64, f64)> = Vec::with_capacity(CONTOUR_RAYS);
    let mut any_ground = false;
    for k in 0..CONTOUR_RAYS {
        let phi = half_fov - (k as f64 / (CONTOUR_RAYS - 1) as f64) * cam.hfov;
        let ray_cap = (x_vis / phi.cos().max(0.05) + 2.0 * step).min(cam.max_range);
        let world_dir = robot_pose.theta + phi;
        let (dx, dy) = (world_dir.cos(), world_dir.sin());
        let mut last_free = 0.0f64;
        let mut d = 0.0f64;
        loop {
            let wx = robot_pose.x + d * dx;
            let wy = robot_pose.y + d * dy;
            if !world.grid.is_free_world(wx, wy) {
                break;
            }
            last_free = d;
            if d >= ray_cap {
                break;
            }
            d = (d + step).min(ray_cap);
        }
        if last_free > NEAR_ARC_M {
            any_ground = true;
        }
        far_pts.push((
            last_free.max(NEAR_ARC_M) * phi.cos(),
            last_free.max(NEAR_ARC_M) * phi.sin(),
        ));
    }

    let mut frame = SegmentationFrame::empty();
    if !any_ground {
        return frame; // robot outside the map: non-ground fills the view
    }

    // close the fan with a near arc and project to the image
    let mut ground_poly: Vec<(f64, f64)> = Vec::with_capacity(2 * CONTOUR_RAYS);
    ground_poly.extend(far_pts.iter().copied());
    for k in (0..CONTOUR_RAYS).rev() {
        let phi = half_fov - (k as f64 / (CONTOUR_RAYS - 1) as f64) * cam.hfov;
        ground_poly.push((NEAR_ARC_M * phi.cos(), NEAR_ARC_M * phi.sin()));
    }
    let image_poly: Vec<(f64, f64)> = ground_poly
        .iter()
        .map(|&(x, y)| hom.project(x, y))
        .collect();
    let clipped = Polygon::new(image_poly).clip_to_rect(
        0.0,
        0.0,
        cam.width_px as f64 - 1.0,
        cam.height_px as f64 - 1.0,
    );
    if clipped.vertices.len() >= 3 {
        frame.ground_contour = clipped;
    }

    // object boxes
    for obj in world.unpicked_objects() {
        let (lx, ly) = robot_pose.world_to_local(obj.center.0, obj.center.1);
        let dist = (lx * lx + ly * ly).sqrt();
        let az = ly.atan2(lx);
        if dist > cam.max_range || az.abs() > half_fov {
            continue;
        }
        let mut min_u = f64::INFINITY;
        let mut min_v = f64::INFINITY;
        let mut max_u = f64::NEG_INFINITY;
        let mut max_v = f64::NEG_INFINITY;
        let mut projected_any = false;
        for z in [0.0, obj.height.max(0.0)] {
            for k in 0..16 {
                let a = k as f64 / 16.0 * std::f64::consts::TAU;
                let px = lx + obj.footprint_radius * a.cos();
                let py = ly + obj.footprint_radius * a.sin();
                if let Some((u, v)) = cam.project_point3(px, py, z) {
                    projected_any = true;
                    min_u = min_u.min(u);
                    min_v = min_v.min(v);
                    max_u = max_u.max(u);
                    max_v = max_v.max(v);
                }
            }
        }
        if !projected_any {
            continue;
        }
        let w1 = cam.width_px as f64 - 1.0;
        let h1 = cam.height_px as f64 - 1.0;
        let (cu0, cv0) = (min_u.max(0.0), min_v.max(0.0));
        let (cu1, cv1) = (max_u.min(w1), max_v.min(h1));
        if cu0 > cu1 || cv0 > cv1 {
            continue; // entirely outside the image
        }
        frame.object_boxes.push(ObjectBox {
            object_id: obj.id.clone(),
            u_tl: cu0.floor() as u32,
            v_tl: cv0.floor() as u32,
            u_br: cu1.ceil().min(w1) as u32,
            v_br: cv1.ceil().min(h1) as u32,
        });
    }

    frame
}

/// Picks the nearest box: largest bottom row wins, ties go to the box whose
/// center is closest to the image bottom-center column, then to frame order.
pub fn select_closest_object<'a>(
    frame: &'a SegmentationFrame,
    cam: &CameraModel,
) -> Option<&'a ObjectBox> {
    let (u_cl, _) = cam.bottom_center();
    frame.object_boxes.iter().fold(None, |best, b| match best {
        None => Some(b),
        Some(cur) => {
            let off = |bx: &ObjectBox| (bx.center().0 as i64 - u_cl).abs();
            if b.v_br > cur.v_br || (b.v_br == cur.v_br && off(b) < off(cur)) {
                Some(b)
            } else {
                Some(cur)
            }
        }
    })
}

/// Object center in pixels, integer division of the corner sums.
pub fn locate_garbage(object_box: &ObjectBox) -> (u32, u32) {
    object_box.center()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::build_homography;
    use crate::grid::OccupancyGrid;
    use crate::world::{GarbageClass, ObjectClass, RobotState, WorldObject};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn world_with(objects: Vec<WorldObject>) -> World {
        let boundary = Polygon::new(vec![(0.0, 0.0), (60.0, 0.0), (60.0, 60.0), (0.0, 60.0)]);
        World {
            grid: OccupancyGrid::from_boundary(&boundary, 0.25),
            objects,
            robot: RobotState::at(Pose2D::new(30.0, 30.0, 0.0)),
            v_max: 0.5,
            omega_max: 1.0,
            robot_radius: 0.2,
            ultrasonic_max_range: 3.0,
            sigma_ultrasonic: 0.0,
        }
    }

    fn obj_at(id: &str, x: f64, y: f64) -> WorldObject {
        WorldObject {
            id: id.to_string(),
            center: (x, y),
            footprint_radius: 0.08,
            height: 0.25,
            true_class: ObjectClass::Garbage(GarbageClass::Can),
            mass_kg: 0.2,
            picked: false,
        }
    }

    #[test]
    fn empty_field_gives_fov_trapezoid_and_no_boxes() {
        let world = world_with(vec![]);
        let cam = CameraModel::default_robot_camera();
        let hom = build_homography(&cam).unwrap();
        let frame = render_segmentation(&world, &world.robot.pose.clone(), &cam, &hom);
        assert!(frame.object_boxes.is_empty());
        let poly = &frame.ground_contour;
        assert!(poly.vertices.len() >= 4, "contour: {:?}", poly.vertices);
        // the clipped wedge spans the vertical center column over the lower
        // rows (strictly inside the clip rectangle: its border is on-edge)
        for v in [478.5, 400.0, 300.0, 100.0, 1.0] {
            assert!(poly.contains(319.5, v), "center column not ground at v={v}");
        }
    }

    #[test]
    fn object_three_meters_ahead_is_centered() {
        let world = world_with(vec![obj_at("g", 33.0, 30.0)]);
        let cam = CameraModel::default_robot_camera();
        let hom = build_homography(&cam).unwrap();
        let frame = render_segmentation(&world, &world.robot.pose.clone(), &cam, &hom);
        assert_eq!(frame.object_boxes.len(), 1);
        let (u_co, _) = frame.object_boxes[0].center();
        assert!((u_co as i64 - 319).abs() <= 1, "u_co {u_co}");
    }

    #[test]
    fn object_beyond_range_is_invisible() {
        let world = world_with(vec![obj_at("far", 42.0, 30.0)]);
        let cam = CameraModel::default_robot_camera();
        let hom = build_homography(&cam).unwrap();
        let frame = render_segmentation(&world, &world.robot.pose.clone(), &cam, &hom);
        assert!(frame.object_boxes.is_empty());
    }

    #[test]
    fn outside_map_gives_empty_contour() {
        let mut world = world_with(vec![]);
        world.robot.pose = Pose2D::new(-3.0, 30.0, 0.0);
        let cam = CameraModel::default_robot_camera();
        let hom = build_homography(&cam).unwrap();
        let frame = render_segmentation(&world, &world.robot.pose.clone(), &cam, &hom);
        assert!(frame.ground_contour.is_degenerate());
        assert!(frame.object_boxes.is_empty());
    }

    #[test]
    fn boxes_stay_inside_image_bounds() {
        let cam = CameraModel::default_robot_camera();
        let hom = build_homography(&cam).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..2000 {
            let mut objects = Vec::new();
            for i in 0..rng.gen_range(0..6) {
                objects.push(WorldObject {
                    id: format!("o{i}"),
                    center: (rng.gen_range(28.0..36.0), rng.gen_range(26.0..34.0)),
                    footprint_radius: rng.gen_range(0.03..0.2),
                    height: rng.gen_range(0.05..0.5),
                    true_class: ObjectClass::Garbage(GarbageClass::Bottle),
                    mass_kg: 0.2,
                    picked: false,
                });
            }
            let mut world = world_with(objects);
            world.robot.pose = Pose2D::new(
                rng.gen_range(29.0..31.0),
                rng.gen_range(29.0..31.0),
                rng.gen_range(-3.1..3.1),
            );
            let frame = render_segmentation(&world, &world.robot.pose.clone(), &cam, &hom);
            for b in &frame.object_boxes {
                assert!(b.u_tl <= b.u_br && b.u_br < cam.width_px);
                assert!(b.v_tl <= b.v_br && b.v_br < cam.height_px);
            }
            for &(u, v) in &frame.ground_contour.vertices {
                assert!((-1e-9..=639.0 + 1e-9).contains(&u));
                assert!((-1e-9..=479.0 + 1e-9).contains(&v));
            }
        }
    }

    #[test]
    fn rendering_is_pose_equivariant() {
        let cam = CameraModel::default_robot_camera();
        let hom = build_homography(&cam).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let alpha: f64 = rng.gen_range(-3.0..3.0);
            let base_theta: f64 = rng.gen_range(-0.5..0.5);
            // objects placed relative to the robot at (30, 30)
            let rel: Vec<(f64, f64)> = (0..3)
                .map(|_| (rng.gen_range(0.8..3.2), rng.gen_range(-1.0..1.0)))
                .collect();

            let make_frame = |rot: f64| {
                let (s, c) = rot.sin_cos();
                let objects: Vec<WorldObject> = rel
                    .iter()
                    .enumerate()
                    .map(|(i, &(x, y))| {
                        // rotate the robot-relative offset by (base_theta + rot)
                        let (bs, bc) = (base_theta).sin_cos();
                        let (wx, wy) = (x * bc - y * bs, x * bs + y * bc);
                        let (rx, ry) = (wx * c - wy * s, wx * s + wy * c);
                        obj_at(&format!("o{i}"), 30.0 + rx, 30.0 + ry)
                    })
                    .collect();
                let mut world = world_with(objects);
                world.robot.pose = Pose2D::new(30.0, 30.0, base_theta + rot);
                render_segmentation(&world, &world.robot.pose.clone(), &cam, &hom)
            };

            let f0 = make_frame(0.0);
            let f1 = make_frame(alpha);
            assert_eq!(f0.object_boxes, f1.object_boxes, "boxes changed under rotation");
            assert_eq!(f0.ground_contour.vertices.len(), f1.ground_contour.vertices.len());
            for (a, b) in f0
                .ground_contour
                .vertices
                .iter()
                .zip(f1.ground_contour.vertices.iter())
            {
                assert!((a.0 - b.0).abs() < 1e-6 && (a.1 - b.1).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn closest_selection_prefers_larger_bottom_row() {
        let cam = CameraModel::default_robot_camera();
        let mk = |id: &str, v_br: u32| ObjectBox {
            object_id: id.into(),
            u_tl: 100,
            v_tl: 50,
            u_br: 140,
            v_br,
        };
        let frame = SegmentationFrame {
            ground_contour: Polygon::new(vec![]),
            object_boxes: vec![mk("far", 300), mk("near", 400)],
        };
        assert_eq!(select_closest_object(&frame, &cam).unwrap().object_id, "near");
        let single = SegmentationFrame {
            ground_contour: Polygon::new(vec![]),
            object_boxes: vec![mk("only", 123)],
        };
        assert_eq!(select_closest_object(&single, &cam).unwrap().object_id, "only");
        assert!(select_closest_object(&SegmentationFrame::empty(), &cam).is_none());
    }

    #[test]
    fn selection_matches_world_distance_oracle() {
        let cam = CameraModel::default_robot_camera();
        let hom = build_homography(&cam).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let mut scenes = 0;
        while scenes < 100 {
            let n = rng.gen_range(1..5);
            let mut objects: Vec<WorldObject> = Vec::new();
            for i in 0..n {
                // keep objects inside the wedge, off the bottom clip, with
                // clearly distinct near-edge distances
                let d = rng.gen_range(0.7..3.2);
                let az = rng.gen_range(-0.38..0.38);
                let o = WorldObject {
                    id: format!("o{i}"),
                    center: (30.0 + d * f64::cos(az), 30.0 + d * f64::sin(az)),
                    footprint_radius: rng.gen_range(0.04..0.15),
                    height: rng.gen_range(0.1..0.3),
                    true_class: ObjectClass::Garbage(GarbageClass::Bottle),
                    mass_kg: 0.2,
                    picked: false,
                };
                objects.push(o);
            }
            // near-edge distances must be separated to make ordering unambiguous
            let mut edges: Vec<f64> = objects
                .iter()
                .map(|o| {
                    let dx = o.center.0 - 30.0;
                    let dy = o.center.1 - 30.0;
                    (dx * dx + dy * dy).sqrt() - o.footprint_radius
                })
                .collect();
            edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if edges.windows(2).any(|w| w[1] - w[0] < 0.05) {
                continue;
            }
            let world = world_with(objects);
            let frame = render_segmentation(&world, &world.robot.pose.clone(), &cam, &hom);
            if frame.object_boxes.len() != world.objects.len() {
                continue; // an object straddles the FOV edge; skip the scene
            }
            scenes += 1;
            let selected = select_closest_object(&frame, &cam).unwrap();
            let nearest = world
                .objects
                .iter()
                .min_by(|a, b| {
                    let da = ((a.center.0 - 30.0).powi(2) + (a.center.1 - 30.0).powi(2)).sqrt()
                        - a.footprint_radius;
                    let db = ((b.center.0 - 30.0).powi(2) + (b.center.1 - 30.0).powi(2)).sqrt()
                        - b.footprint_radius;
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap();
            assert_eq!(selected.object_id, nearest.id);
        }
    }

    #[test]
    fn locate_center_examples() {
        let b = ObjectBox {
            object_id: "x".into(),
            u_tl: 300,
            v_tl: 200,
            u_br: 340,
            v_br: 260,
        };
        assert_eq!(locate_garbage(&b), (320, 230));
        let point = ObjectBox {
            object_id: "p".into(),
            u_tl: 0,
            v_tl: 0,
            u_br: 0,
            v_br: 0,
        };
        assert_eq!(locate_garbage(&point), (0, 0));
        let full = ObjectBox {
            object_id: "f".into(),
            u_tl: 0,
            v_tl: 0,
            u_br: 639,
            v_br: 479,
        };
        assert_eq!(locate_garbage(&full), (319, 239));
    }
}
