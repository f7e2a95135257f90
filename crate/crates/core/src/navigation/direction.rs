//! Feasible-direction computation from a segmentation frame.
//!
//! For every image row in the lower half, the widest horizontal run of
//! pixels that are inside the ground contour and outside every object box
//! contributes its midpoint to a center set; a Hough fit through those
//! midpoints, mapped to the ground plane, gives the direction to follow.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{image_line_to_ground_heading, CameraModel, GroundHomography};
use crate::hough::{hough_line, PolarLine};
use crate::perception::SegmentationFrame;

/// Midpoints of the widest passable interval per row, at most one per image
/// row over the lower half, rows strictly increasing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentSet {
    /// (column midpoint, row) pairs; midpoints are exact halves.
    pub points: Vec<(f64, u32)>,
}

#[derive(Debug, Error, PartialEq)]
pub enum DirectionError {
    #[error("no feasible direction: {0} center points")]
    NoFeasibleDirection(usize),
    #[error("fitted line does not produce a forward direction")]
    NoForwardDirection,
}

/// A fitted direction with its intermediate products, for logging and the
/// one-shot debugging front end.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionFit {
    pub cent: CentSet,
    pub line: PolarLine,
    /// Heading in the robot frame, radians, positive left.
    pub heading: f64,
}

/// Integer pixel intervals `[lo, hi]` (inclusive) of passable pixels in one
/// row: inside the ground contour, outside every box active on the row.
fn passable_runs(
    frame: &SegmentationFrame,
    row: u32,
    width: u32,
    crossings: &mut Vec<f64>,
) -> Vec<(i64, i64)> {
    let y = row as f64;
    frame.ground_contour.row_crossings(y, crossings);
    let w1 = width as i64 - 1;

    // half-open [c0, c1) spans between crossing pairs, snapped to pixels
    let mut inside: Vec<(i64, i64)> = Vec::new();
    for pair in crossings.chunks_exact(2) {
        let lo = pair[0].ceil().max(0.0) as i64;
        let hi = (pair[1].ceil() - 1.0).min(w1 as f64) as i64;
        if lo <= hi {
            inside.push((lo, hi));
        }
    }
    // crossing pairs can abut on adjacent integers; merge to match a
    // per-pixel scan
    inside.sort();
    let mut merged: Vec<(i64, i64)> = Vec::new();
    for (lo, hi) in inside {
        match merged.last_mut() {
            Some(last) if lo <= last.1 + 1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }

    // subtract boxes covering this row (box pixels are object, inclusive)
    let mut blocked: Vec<(i64, i64)> = frame
        .object_boxes
        .iter()
        .filter(|b| b.v_tl <= row && row <= b.v_br)
        .map(|b| (b.u_tl as i64, b.u_br as i64))
        .collect();
    blocked.sort();

    let mut runs: Vec<(i64, i64)> = Vec::new();
    for (lo, hi) in merged {
        let mut cursor = lo;
        for &(b_lo, b_hi) in &blocked {
            if b_hi < cursor || b_lo > hi {
                continue;
            }
            if b_lo > cursor {
                runs.push((cursor, b_lo - 1));
            }
            cursor = cursor.max(b_hi + 1);
            if cursor > hi {
                break;
            }
        }
        if cursor <= hi {
            runs.push((cursor, hi));
        }
    }
    runs
}

/// Computes the per-row center set over rows `[h/2, h-1]`.
///
/// The widest run wins with a strict comparison, so ties keep the leftmost
/// run and rows whose best run is a single pixel contribute nothing.
pub fn cent_set(frame: &SegmentationFrame, cam: &CameraModel) -> CentSet {
    let h = cam.height_px;
    let mut points = Vec::with_capacity((h / 2) as usize);
    let mut crossings = Vec::new();
    if frame.ground_contour.is_degenerate() {
        return CentSet { points };
    }
    for row in h / 2..h {
        let runs = passable_runs(frame, row, cam.width_px, &mut crossings);
        let mut best_width = 0i64;
        let mut best: Option<(i64, i64)> = None;
        for (lo, hi) in runs {
            let w = hi - lo;
            if w > best_width {
                best_width = w;
                best = Some((lo, hi));
            }
        }
        if let Some((lo, hi)) = best {
            points.push(((lo + hi) as f64 / 2.0, row));
        }
    }
    CentSet { points }
}

/// Full direction pipeline: center set, Hough fit, ground heading.
pub fn find_optimal_direction(
    frame: &SegmentationFrame,
    hom: &GroundHomography,
    cam: &CameraModel,
) -> Result<DirectionFit, DirectionError> {
    let cent = cent_set(frame, cam);
    if cent.points.len() < 2 {
        return Err(DirectionError::NoFeasibleDirection(cent.points.len()));
    }
    let pts: Vec<(f64, f64)> = cent.points.iter().map(|&(u, v)| (u, v as f64)).collect();
    let line = hough_line(&pts)
        .map_err(|_| DirectionError::NoFeasibleDirection(cent.points.len()))?;
    let heading = image_line_to_ground_heading(&line, hom, cam)
        .map_err(|_| DirectionError::NoForwardDirection)?;
    Ok(DirectionFit { cent, line, heading })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::build_homography;
    use crate::geometry::Polygon;
    use crate::perception::ObjectBox;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cam() -> CameraModel {
        CameraModel::default_robot_camera()
    }

    fn trapezoid_frame() -> SegmentationFrame {
        // symmetric about u = 319.5
        SegmentationFrame {
            ground_contour: Polygon::new(vec![
                (119.5, 479.0),
                (519.5, 479.0),
                (589.5, 100.0),
                (49.5, 100.0),
            ]),
            object_boxes: vec![],
        }
    }

    #[test]
    fn symmetric_trapezoid_points_straight_ahead() {
        let camera = cam();
        let hom = build_homography(&camera).unwrap();
        let fit = find_optimal_direction(&trapezoid_frame(), &hom, &camera).unwrap();
        assert!(fit.heading.abs() <= 0.02, "heading {}", fit.heading);
    }

    #[test]
    fn right_blocked_frame_turns_left() {
        let camera = cam();
        let hom = build_homography(&camera).unwrap();
        let mut frame = trapezoid_frame();
        frame.object_boxes.push(ObjectBox {
            object_id: "obstacle".into(),
            u_tl: 320,
            v_tl: 240,
            u_br: 639,
            v_br: 479,
        });
        let fit = find_optimal_direction(&frame, &hom, &camera).unwrap();
        assert!(fit.heading > 0.0, "heading {}", fit.heading);
        // sign oracle: per-row centers must sit left of the image center
        for &(u, _) in &fit.cent.points {
            assert!(u < 319.5);
        }
    }

    #[test]
    fn empty_contour_is_an_error() {
        let camera = cam();
        let hom = build_homography(&camera).unwrap();
        let frame = SegmentationFrame::empty();
        assert_eq!(
            find_optimal_direction(&frame, &hom, &camera),
            Err(DirectionError::NoFeasibleDirection(0))
        );
    }

    /// Independent per-pixel oracle: classic crossing-count polygon test and
    /// a linear scan for maximal runs.
    fn oracle_cent_set(frame: &SegmentationFrame, camera: &CameraModel) -> Vec<(f64, u32)> {
        fn pnpoly(poly: &[(f64, f64)], x: f64, y: f64) -> bool {
            let n = poly.len();
            let mut c = false;
            let mut j = n - 1;
            for i in 0..n {
                if ((poly[i].1 > y) != (poly[j].1 > y))
                    && (x
                        < (poly[j].0 - poly[i].0) * (y - poly[i].1) / (poly[j].1 - poly[i].1)
                            + poly[i].0)
                {
                    c = !c;
                }
                j = i;
            }
            c
        }

        let h = camera.height_px;
        let w = camera.width_px;
        let mut out = Vec::new();
        if frame.ground_contour.vertices.len() < 3 {
            return out;
        }
        for v in h / 2..h {
            let mut passable = vec![false; w as usize];
            for u in 0..w {
                let inside = pnpoly(&frame.ground_contour.vertices, u as f64, v as f64);
                let in_box = frame.object_boxes.iter().any(|b| {
                    b.v_tl <= v && v <= b.v_br && b.u_tl <= u && u <= b.u_br
                });
                passable[u as usize] = inside && !in_box;
            }
            let mut best_w = 0i64;
            let mut best: Option<(i64, i64)> = None;
            let mut run_start: Option<i64> = None;
            for u in 0..=w as i64 {
                let on = (u as usize) < w as usize && passable[u as usize];
                match (on, run_start) {
                    (true, None) => run_start = Some(u),
                    (false, Some(s)) => {
                        let e = u - 1;
                        if e - s > best_w {
                            best_w = e - s;
                            best = Some((s, e));
                        }
                        run_start = None;
                    }
                    _ => {}
                }
            }
            if let Some((s, e)) = best {
                out.push(((s + e) as f64 / 2.0, v));
            }
        }
        out
    }

    fn random_frame(rng: &mut ChaCha8Rng) -> SegmentationFrame {
        // convex-ish blob: radial polygon around a random center
        let cx = rng.gen_range(200.0..440.0);
        let cy = rng.gen_range(200.0..340.0);
        let n = rng.gen_range(5..12);
        let base_r = rng.gen_range(80.0..260.0);
        let mut vertices = Vec::with_capacity(n);
        for k in 0..n {
            let a = k as f64 / n as f64 * std::f64::consts::TAU;
            let r = base_r * rng.gen_range(0.6..1.25);
            vertices.push((cx + r * a.cos(), cy + r * a.sin()));
        }
        let mut boxes = Vec::new();
        for i in 0..rng.gen_range(0..5) {
            let u_tl = rng.gen_range(0..620u32);
            let v_tl = rng.gen_range(200..470u32);
            boxes.push(ObjectBox {
                object_id: format!("b{i}"),
                u_tl,
                v_tl,
                u_br: (u_tl + rng.gen_range(4..160)).min(639),
                v_br: (v_tl + rng.gen_range(4..120)).min(479),
            });
        }
        SegmentationFrame {
            ground_contour: Polygon::new(vertices),
            object_boxes: boxes,
        }
    }

    #[test]
    fn cent_set_equals_per_pixel_oracle() {
        let camera = cam();
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for case in 0..200 {
            let frame = random_frame(&mut rng);
            let fast = cent_set(&frame, &camera).points;
            let slow = oracle_cent_set(&frame, &camera);
            assert_eq!(fast, slow, "case {case}");
        }
    }
}
