//! Binary occupancy grid of the cleaning area.
//!
//! Cell convention: 1 = free (inside the cleaning area), 0 = occupied or
//! outside. Cells crossed by the boundary polygon are stamped 0, so a free
//! cell is always entirely inside the boundary.

use crate::geometry::{Polygon, Pose2D};

#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyGrid {
    /// Meters per cell.
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
    /// World coordinates of the grid's (0, 0) cell corner.
    pub origin: (f64, f64),
    /// Row-major, `true` = free.
    cells: Vec<bool>,
    free_centroid: (f64, f64),
}

impl OccupancyGrid {
    /// Rasterizes a boundary polygon into a grid at `resolution` m/cell.
    ///
    /// Every cell whose rectangle intersects a polygon edge is marked
    /// occupied; the remaining cells take the value of their center's
    /// point-in-polygon test. This keeps free cells entirely inside the
    /// boundary.
    pub fn from_boundary(boundary: &Polygon, resolution: f64) -> Self {
        assert!(resolution > 0.0, "resolution must be positive");
        let (min_x, min_y, max_x, max_y) = boundary.bbox();
        // one cell of margin so the boundary never sits on the grid edge
        let origin = (min_x - resolution, min_y - resolution);
        let width = ((max_x - origin.0) / resolution).ceil() as usize + 1;
        let height = ((max_y - origin.1) / resolution).ceil() as usize + 1;
        let mut grid = Self {
            resolution,
            width,
            height,
            origin,
            cells: vec![false; width * height],
            free_centroid: (0.0, 0.0),
        };

        for cy in 0..height {
            for cx in 0..width {
                let (wx, wy) = grid.cell_center(cx, cy);
                grid.cells[cy * width + cx] = boundary.contains(wx, wy);
            }
        }
        // stamp boundary-crossed cells occupied
        let n = boundary.vertices.len();
        for i in 0..n {
            let a = boundary.vertices[i];
            let b = boundary.vertices[(i + 1) % n];
            grid.stamp_segment(a, b);
        }
        grid.free_centroid = grid.compute_free_centroid();
        grid
    }

    fn stamp_segment(&mut self, a: (f64, f64), b: (f64, f64)) {
        // conservative: visit every cell whose rectangle the segment touches
        let lo_x = a.0.min(b.0);
        let hi_x = a.0.max(b.0);
        let lo_y = a.1.min(b.1);
        let hi_y = a.1.max(b.1);
        let (cx0, cy0) = self.world_to_cell_clamped(lo_x, lo_y);
        let (cx1, cy1) = self.world_to_cell_clamped(hi_x, hi_y);
        for cy in cy0..=cy1 {
            for cx in cx0..=cx1 {
                let rx0 = self.origin.0 + cx as f64 * self.resolution;
                let ry0 = self.origin.1 + cy as f64 * self.resolution;
                if segment_intersects_rect(a, b, rx0, ry0, rx0 + self.resolution, ry0 + self.resolution) {
                    self.cells[cy * self.width + cx] = false;
                }
            }
        }
    }

    fn compute_free_centroid(&self) -> (f64, f64) {
        let mut sx = 0.0;
        let mut sy = 0.0;
        let mut n = 0usize;
        for cy in 0..self.height {
            for cx in 0..self.width {
                if self.cells[cy * self.width + cx] {
                    let (wx, wy) = self.cell_center(cx, cy);
                    sx += wx;
                    sy += wy;
                    n += 1;
                }
            }
        }
        if n == 0 {
            let (ox, oy) = self.origin;
            return (
                ox + self.width as f64 * self.resolution * 0.5,
                oy + self.height as f64 * self.resolution * 0.5,
            );
        }
        (sx / n as f64, sy / n as f64)
    }

    pub fn cell_center(&self, cx: usize, cy: usize) -> (f64, f64) {
        (
            self.origin.0 + (cx as f64 + 0.5) * self.resolution,
            self.origin.1 + (cy as f64 + 0.5) * self.resolution,
        )
    }

    /// Cell containing a world point, or `None` outside the grid extent.
    pub fn world_to_cell(&self, wx: f64, wy: f64) -> Option<(usize, usize)> {
        let fx = (wx - self.origin.0) / self.resolution;
        let fy = (wy - self.origin.1) / self.resolution;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let cx = fx.floor() as usize;
        let cy = fy.floor() as usize;
        if cx >= self.width || cy >= self.height {
            return None;
        }
        Some((cx, cy))
    }

    fn world_to_cell_clamped(&self, wx: f64, wy: f64) -> (usize, usize) {
        let fx = ((wx - self.origin.0) / self.resolution).floor();
        let fy = ((wy - self.origin.1) / self.resolution).floor();
        let cx = fx.clamp(0.0, (self.width - 1) as f64) as usize;
        let cy = fy.clamp(0.0, (self.height - 1) as f64) as usize;
        (cx, cy)
    }

    pub fn is_free_cell(&self, cx: usize, cy: usize) -> bool {
        cx < self.width && cy < self.height && self.cells[cy * self.width + cx]
    }

    /// True iff the world point lies in a free cell. Points outside the grid
    /// extent count as out of the map.
    pub fn is_free_world(&self, wx: f64, wy: f64) -> bool {
        match self.world_to_cell(wx, wy) {
            Some((cx, cy)) => self.cells[cy * self.width + cx],
            None => false,
        }
    }

    /// Mean of free-cell centers; used as the return-mechanism fallback goal.
    pub fn free_centroid(&self) -> (f64, f64) {
        self.free_centroid
    }

    pub fn free_cell_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Distance from a world point to the nearest free-cell center, 0 if the
    /// point is already in a free cell.
    pub fn distance_to_free(&self, wx: f64, wy: f64) -> f64 {
        if self.is_free_world(wx, wy) {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for cy in 0..self.height {
            for cx in 0..self.width {
                if self.cells[cy * self.width + cx] {
                    let (cxw, cyw) = self.cell_center(cx, cy);
                    let d = ((cxw - wx).powi(2) + (cyw - wy).powi(2)).sqrt();
                    best = best.min(d);
                }
            }
        }
        best
    }

    /// ASCII PGM (P2) dump, maxval 1: free cells 1 (white), occupied 0.
    /// Row 0 of the file is the top (max y) of the map.
    pub fn to_pgm_ascii(&self) -> String {
        let mut out = String::with_capacity(self.width * self.height * 2 + 32);
        out.push_str("P2\n");
        out.push_str(&format!("{} {}\n1\n", self.width, self.height));
        for cy in (0..self.height).rev() {
            for cx in 0..self.width {
                if cx > 0 {
                    out.push(' ');
                }
                out.push(if self.cells[cy * self.width + cx] { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    /// Parses the output of [`OccupancyGrid::to_pgm_ascii`]. Metric placement
    /// (resolution, origin) is not stored in PGM, so defaults are used.
    pub fn from_pgm_ascii(text: &str, resolution: f64) -> Result<Self, String> {
        let mut tokens = text.split_whitespace();
        match tokens.next() {
            Some("P2") => {}
            other => return Err(format!("expected P2 header, got {other:?}")),
        }
        let width: usize = tokens
            .next()
            .ok_or("missing width")?
            .parse()
            .map_err(|e| format!("bad width: {e}"))?;
        let height: usize = tokens
            .next()
            .ok_or("missing height")?
            .parse()
            .map_err(|e| format!("bad height: {e}"))?;
        let _maxval: u32 = tokens
            .next()
            .ok_or("missing maxval")?
            .parse()
            .map_err(|e| format!("bad maxval: {e}"))?;
        let mut cells = vec![false; width * height];
        for row in 0..height {
            let cy = height - 1 - row;
            for cx in 0..width {
                let v: u32 = tokens
                    .next()
                    .ok_or("truncated raster")?
                    .parse()
                    .map_err(|e| format!("bad cell: {e}"))?;
                cells[cy * width + cx] = v != 0;
            }
        }
        let mut grid = Self {
            resolution,
            width,
            height,
            origin: (0.0, 0.0),
            cells,
            free_centroid: (0.0, 0.0),
        };
        grid.free_centroid = grid.compute_free_centroid();
        Ok(grid)
    }
}

/// True iff the robot's cell is free ("the pixel value 0 means the robot is
/// out, and 1 is not").
pub fn is_inside_map(grid: &OccupancyGrid, pose: &Pose2D) -> bool {
    grid.is_free_world(pose.x, pose.y)
}

/// Checks the cells along the heading ray of length `lookahead`, excluding
/// the cell containing the pose itself. True iff every traversed cell is
/// free. The traversal is a supercover walk, so the cell count follows from
/// the map resolution.
pub fn ray_free(grid: &OccupancyGrid, pose: &Pose2D, lookahead: f64) -> bool {
    assert!(lookahead > 0.0, "lookahead must be positive");
    let (dx, dy) = pose.heading_vec();
    let end = (pose.x + lookahead * dx, pose.y + lookahead * dy);
    let start_cell = grid.world_to_cell(pose.x, pose.y);
    for cell in traverse_cells(grid, (pose.x, pose.y), end) {
        if Some(cell) == start_cell {
            continue;
        }
        if !grid.is_free_cell(cell.0, cell.1) {
            return false;
        }
    }
    // segment leaving the grid extent counts as blocked beyond the edge
    if grid.world_to_cell(end.0, end.1).is_none() {
        return false;
    }
    true
}

/// Cells traversed by the segment from `a` to `b` (Amanatides-Woo walk),
/// including the start and end cells when they lie inside the grid.
pub fn traverse_cells(grid: &OccupancyGrid, a: (f64, f64), b: (f64, f64)) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let res = grid.resolution;
    let fx = (a.0 - grid.origin.0) / res;
    let fy = (a.1 - grid.origin.1) / res;
    let gx = (b.0 - grid.origin.0) / res;
    let gy = (b.1 - grid.origin.1) / res;

    let mut cx = fx.floor() as i64;
    let mut cy = fy.floor() as i64;
    let end_cx = gx.floor() as i64;
    let end_cy = gy.floor() as i64;

    let dx = gx - fx;
    let dy = gy - fy;
    let step_x: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_y: i64 = if dy > 0.0 { 1 } else { -1 };

    // parameter t in [0,1] along the segment at which the next cell border is crossed
    let mut t_max_x = if dx != 0.0 {
        let next = if dx > 0.0 { cx as f64 + 1.0 } else { cx as f64 };
        (next - fx) / dx
    } else {
        f64::INFINITY
    };
    let mut t_max_y = if dy != 0.0 {
        let next = if dy > 0.0 { cy as f64 + 1.0 } else { cy as f64 };
        (next - fy) / dy
    } else {
        f64::INFINITY
    };
    let t_delta_x = if dx != 0.0 { (1.0 / dx).abs() } else { f64::INFINITY };
    let t_delta_y = if dy != 0.0 { (1.0 / dy).abs() } else { f64::INFINITY };

    let push = |out: &mut Vec<(usize, usize)>, cx: i64, cy: i64| {
        if cx >= 0 && cy >= 0 && (cx as usize) < grid.width && (cy as usize) < grid.height {
            out.push((cx as usize, cy as usize));
        }
    };

    push(&mut out, cx, cy);
    let max_steps = ((end_cx - cx).unsigned_abs() + (end_cy - cy).unsigned_abs() + 4) as usize;
    let mut steps = 0;
    while (cx != end_cx || cy != end_cy) && steps < max_steps {
        if t_max_x < t_max_y {
            cx += step_x;
            t_max_x += t_delta_x;
        } else {
            cy += step_y;
            t_max_y += t_delta_y;
        }
        push(&mut out, cx, cy);
        steps += 1;
    }
    out
}

fn segment_intersects_rect(
    a: (f64, f64),
    b: (f64, f64),
    min_x: f64,
    min_y: f64,
    max_x: f64,
    max_y: f64,
) -> bool {
    // trivial accept: an endpoint inside the rect
    let inside = |p: (f64, f64)| p.0 >= min_x && p.0 <= max_x && p.1 >= min_y && p.1 <= max_y;
    if inside(a) || inside(b) {
        return true;
    }
    // slab clipping (Liang-Barsky)
    let dx = b.0 - a.0;
    let dy = b.1 - a.1;
    let mut t0: f64 = 0.0;
    let mut t1: f64 = 1.0;
    for (p, q) in [
        (-dx, a.0 - min_x),
        (dx, max_x - a.0),
        (-dy, a.1 - min_y),
        (dy, max_y - a.1),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rect_boundary(w: f64, h: f64) -> Polygon {
        Polygon::new(vec![(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)])
    }

    #[test]
    fn center_of_paper_field_is_free() {
        let grid = OccupancyGrid::from_boundary(&rect_boundary(85.4, 73.0), 0.25);
        let pose = Pose2D::new(85.4 / 2.0, 73.0 / 2.0, 0.0);
        assert!(is_inside_map(&grid, &pose));
    }

    #[test]
    fn point_beyond_boundary_is_out() {
        let grid = OccupancyGrid::from_boundary(&rect_boundary(20.0, 15.0), 0.25);
        assert!(!is_inside_map(&grid, &Pose2D::new(21.0, 7.0, 0.0)));
        assert!(!is_inside_map(&grid, &Pose2D::new(-1.0, 7.0, 0.0)));
    }

    #[test]
    fn point_on_boundary_cell_is_out() {
        let grid = OccupancyGrid::from_boundary(&rect_boundary(20.0, 15.0), 0.25);
        // exactly on the boundary polygon edge: its cell is edge-stamped 0
        assert!(!is_inside_map(&grid, &Pose2D::new(20.0, 7.5, 0.0)));
        assert!(!is_inside_map(&grid, &Pose2D::new(10.0, 0.0, 0.0)));
    }

    #[test]
    fn rasterization_sound_against_point_in_polygon_oracle() {
        // non-convex boundary
        let boundary = Polygon::new(vec![
            (0.0, 0.0),
            (30.0, 0.0),
            (30.0, 20.0),
            (16.0, 20.0),
            (16.0, 9.0),
            (9.0, 9.0),
            (9.0, 20.0),
            (0.0, 20.0),
        ]);
        let grid = OccupancyGrid::from_boundary(&boundary, 0.25);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let x = rng.gen_range(-2.0..32.0);
            let y = rng.gen_range(-2.0..22.0);
            if !boundary.contains(x, y) {
                assert!(
                    !grid.is_free_world(x, y),
                    "outside point ({x}, {y}) mapped to a free cell"
                );
            }
        }
    }

    #[test]
    fn ray_free_interior_and_boundary() {
        let grid = OccupancyGrid::from_boundary(&rect_boundary(30.0, 25.0), 0.25);
        let center = Pose2D::new(15.0, 12.5, 0.3);
        assert!(ray_free(&grid, &center, 2.0));
        // 0.5 m from the right boundary, facing it
        let near = Pose2D::new(29.5, 12.5, 0.0);
        assert!(!ray_free(&grid, &near, 2.0));
    }

    #[test]
    fn ray_free_matches_supercover_oracle() {
        // independent oracle: enumerate every grid cell whose closed rectangle
        // the ray segment intersects (parametric slab clipping), then demand
        // all of them free, with the same start-cell exclusion and
        // end-inside-extent rule as the implementation.
        fn seg_hits_rect(a: (f64, f64), b: (f64, f64), r: (f64, f64, f64, f64)) -> bool {
            let (min_x, min_y, max_x, max_y) = r;
            let d = (b.0 - a.0, b.1 - a.1);
            let mut t0: f64 = 0.0;
            let mut t1: f64 = 1.0;
            for (p, q) in [
                (-d.0, a.0 - min_x),
                (d.0, max_x - a.0),
                (-d.1, a.1 - min_y),
                (d.1, max_y - a.1),
            ] {
                if p.abs() < f64::MIN_POSITIVE {
                    if q < 0.0 {
                        return false;
                    }
                } else {
                    let r = q / p;
                    if p < 0.0 {
                        t0 = t0.max(r);
                    } else {
                        t1 = t1.min(r);
                    }
                }
            }
            t0 <= t1
        }

        let boundary = Polygon::new(vec![
            (0.0, 0.0),
            (25.0, 1.0),
            (28.0, 18.0),
            (12.0, 22.0),
            (-1.0, 14.0),
        ]);
        let grid = OccupancyGrid::from_boundary(&boundary, 0.25);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let pose = Pose2D::new(
                rng.gen_range(-2.0..30.0),
                rng.gen_range(-2.0..24.0),
                rng.gen_range(-3.2..3.2),
            );
            let lookahead = rng.gen_range(0.3..4.0);
            let (dx, dy) = pose.heading_vec();
            let a = (pose.x, pose.y);
            let b = (pose.x + lookahead * dx, pose.y + lookahead * dy);
            let start_cell = grid.world_to_cell(a.0, a.1);

            let mut expect = grid.world_to_cell(b.0, b.1).is_some();
            if expect {
                'scan: for cy in 0..grid.height {
                    for cx in 0..grid.width {
                        if Some((cx, cy)) == start_cell || grid.is_free_cell(cx, cy) {
                            continue;
                        }
                        let rx = grid.origin.0 + cx as f64 * grid.resolution;
                        let ry = grid.origin.1 + cy as f64 * grid.resolution;
                        if seg_hits_rect(a, b, (rx, ry, rx + grid.resolution, ry + grid.resolution)) {
                            expect = false;
                            break 'scan;
                        }
                    }
                }
            }
            assert_eq!(
                ray_free(&grid, &pose, lookahead),
                expect,
                "pose ({}, {}, {}), lookahead {lookahead}",
                pose.x,
                pose.y,
                pose.theta
            );
        }
    }

    #[test]
    fn ray_free_monotone_in_lookahead() {
        let grid = OccupancyGrid::from_boundary(&rect_boundary(30.0, 25.0), 0.25);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..500 {
            let pose = Pose2D::new(
                rng.gen_range(0.0..30.0),
                rng.gen_range(0.0..25.0),
                rng.gen_range(-3.2..3.2),
            );
            let l1 = rng.gen_range(0.2..2.0);
            let l2 = l1 + rng.gen_range(0.0..3.0);
            if ray_free(&grid, &pose, l2) {
                assert!(ray_free(&grid, &pose, l1));
            }
        }
    }

    #[test]
    fn pgm_round_trip() {
        let grid = OccupancyGrid::from_boundary(&rect_boundary(5.0, 4.0), 0.5);
        let text = grid.to_pgm_ascii();
        let parsed = OccupancyGrid::from_pgm_ascii(&text, grid.resolution).unwrap();
        assert_eq!(parsed.width, grid.width);
        assert_eq!(parsed.height, grid.height);
        for cy in 0..grid.height {
            for cx in 0..grid.width {
                assert_eq!(parsed.is_free_cell(cx, cy), grid.is_free_cell(cx, cy));
            }
        }
    }
}
