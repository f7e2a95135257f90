//! Boustrophedon lane coverage over the free area of the grid.

use crate::camera::CameraModel;
use crate::geometry::Pose2D;
use crate::grid::OccupancyGrid;

/// Endpoint inset from occupied cells, keeping the robot body on free ground.
const LANE_INSET_M: f64 = 0.5;

/// Default lane spacing: three quarters of the camera's ground-footprint
/// width at the farthest visible ground distance. The tilted camera cannot
/// see the ground past [`CameraModel::far_visible_ground_x`], so lanes any
/// wider leave blind strips the sweep never observes.
pub fn default_lane_spacing(cam: &CameraModel) -> f64 {
    let width = 2.0 * cam.far_visible_ground_x() * (cam.hfov / 2.0).tan();
    0.75 * width
}

/// Serpentine lane waypoints over the free cells.
///
/// The free extent is divided into `ceil(height / spacing)` equal lanes; on
/// each lane line the maximal free runs become waypoint pairs, traversed
/// left-to-right on even lanes and right-to-left on odd ones. Returns an
/// empty sequence when the map has no free area.
pub fn coverage_waypoints(grid: &OccupancyGrid, spacing: f64) -> Vec<Pose2D> {
    assert!(spacing > 0.0, "lane spacing must be positive");

    // extent of free-cell centers
    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    let mut any = false;
    for cy in 0..grid.height {
        for cx in 0..grid.width {
            if grid.is_free_cell(cx, cy) {
                let (wx, wy) = grid.cell_center(cx, cy);
                min_x = min_x.min(wx);
                max_x = max_x.max(wx);
                min_y = min_y.min(wy);
                max_y = max_y.max(wy);
                any = true;
            }
        }
    }
    if !any {
        return vec![];
    }

    let height = max_y - min_y;
    let lanes = (height / spacing).ceil().max(1.0) as usize;
    let lane_step = height / lanes as f64;

    let mut waypoints: Vec<Pose2D> = Vec::new();
    for lane in 0..lanes {
        let y = min_y + (lane as f64 + 0.5) * lane_step;
        // maximal free runs along this lane line
        let mut runs: Vec<(f64, f64)> = Vec::new();
        let mut run_start: Option<f64> = None;
        let steps = ((max_x - min_x) / grid.resolution).ceil() as usize + 1;
        for k in 0..=steps {
            let x = min_x + k as f64 * grid.resolution;
            let free = k <= steps && x <= max_x && grid.is_free_world(x, y);
            match (free, run_start) {
                (true, None) => run_start = Some(x),
                (false, Some(s)) => {
                    runs.push((s, min_x + (k as f64 - 1.0) * grid.resolution));
                    run_start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = run_start {
            runs.push((s, max_x));
        }

        let mut lane_pts: Vec<(f64, f64)> = Vec::new();
        for (s, e) in runs {
            if e - s >= 2.0 * LANE_INSET_M {
                lane_pts.push((s + LANE_INSET_M, y));
                lane_pts.push((e - LANE_INSET_M, y));
            } else if e > s {
                lane_pts.push(((s + e) / 2.0, y));
            }
        }
        if lane % 2 == 1 {
            lane_pts.reverse();
        }
        waypoints.extend(lane_pts.into_iter().map(|(x, y)| Pose2D::new(x, y, 0.0)));
    }

    // orient each waypoint toward its successor
    let n = waypoints.len();
    for i in 0..n {
        let theta = if i + 1 < n {
            let dx = waypoints[i + 1].x - waypoints[i].x;
            let dy = waypoints[i + 1].y - waypoints[i].y;
            dy.atan2(dx)
        } else if i > 0 {
            waypoints[i - 1].theta
        } else {
            0.0
        };
        waypoints[i].theta = theta;
    }
    waypoints
}
