//! Planar geometry primitives shared by the map, camera, and navigation code.
//!
//! Frame convention used across the crate: world/robot x forward, y left,
//! angles counter-clockwise in radians, headings normalized to `(-PI, PI]`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Robot pose in the world frame: position in meters, heading in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    /// Heading, kept in `(-PI, PI]` after every update.
    pub theta: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    /// Unit heading vector `(cos theta, sin theta)`.
    pub fn heading_vec(&self) -> (f64, f64) {
        (self.theta.cos(), self.theta.sin())
    }

    /// Transforms a world point into this pose's local frame (x forward, y left).
    pub fn world_to_local(&self, wx: f64, wy: f64) -> (f64, f64) {
        let dx = wx - self.x;
        let dy = wy - self.y;
        let (s, c) = self.theta.sin_cos();
        (c * dx + s * dy, -s * dx + c * dy)
    }
}

/// Normalizes an angle to `(-PI, PI]`.
pub fn normalize_angle(theta: f64) -> f64 {
    // (PI - theta) mod 2PI lands in [0, 2PI); PI minus that is in (-PI, PI].
    PI - (PI - theta).rem_euclid(2.0 * PI)
}

/// Smallest signed difference `a - b`, normalized to `(-PI, PI]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    normalize_angle(a - b)
}

/// Simple polygon given as a vertex loop (implicitly closed).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<(f64, f64)>,
}

impl Polygon {
    pub fn new(vertices: Vec<(f64, f64)>) -> Self {
        Self { vertices }
    }

    pub fn is_degenerate(&self) -> bool {
        self.vertices.len() < 3
    }

    /// Even-odd point-in-polygon test (pnpoly crossing rule).
    ///
    /// Boundary behavior follows the half-open crossing convention; callers
    /// that need a specific edge behavior must not place query points exactly
    /// on polygon edges.
    pub fn contains(&self, px: f64, py: f64) -> bool {
        let v = &self.vertices;
        let n = v.len();
        if n < 3 {
            return false;
        }
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (xi, yi) = v[i];
            let (xj, yj) = v[j];
            if (yi > py) != (yj > py) {
                let cross_x = (xj - xi) * (py - yi) / (yj - yi) + xi;
                if px < cross_x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// X coordinates where polygon edges cross the horizontal line `y`,
    /// using the same half-open rule as [`Polygon::contains`]. Sorted
    /// ascending; the count is always even for a simple polygon.
    pub fn row_crossings(&self, y: f64, out: &mut Vec<f64>) {
        out.clear();
        let v = &self.vertices;
        let n = v.len();
        if n < 3 {
            return;
        }
        let mut j = n - 1;
        for i in 0..n {
            let (xi, yi) = v[i];
            let (xj, yj) = v[j];
            if (yi > y) != (yj > y) {
                out.push((xj - xi) * (y - yi) / (yj - yi) + xi);
            }
            j = i;
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }

    /// Axis-aligned bounding box `(min_x, min_y, max_x, max_y)`.
    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        let mut min_x = f64::INFINITY;
        let mut min_y = f64::INFINITY;
        let mut max_x = f64::NEG_INFINITY;
        let mut max_y = f64::NEG_INFINITY;
        for &(x, y) in &self.vertices {
            min_x = min_x.min(x);
            min_y = min_y.min(y);
            max_x = max_x.max(x);
            max_y = max_y.max(y);
        }
        (min_x, min_y, max_x, max_y)
    }

    /// Area-weighted centroid. Falls back to the vertex mean for degenerate
    /// (near-zero-area) loops.
    pub fn centroid(&self) -> (f64, f64) {
        let v = &self.vertices;
        let n = v.len();
        let mut area2 = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for i in 0..n {
            let (x0, y0) = v[i];
            let (x1, y1) = v[(i + 1) % n];
            let w = x0 * y1 - x1 * y0;
            area2 += w;
            cx += (x0 + x1) * w;
            cy += (y0 + y1) * w;
        }
        if area2.abs() < 1e-12 {
            let inv = 1.0 / n as f64;
            let (sx, sy) = v.iter().fold((0.0, 0.0), |(ax, ay), &(x, y)| (ax + x, ay + y));
            return (sx * inv, sy * inv);
        }
        (cx / (3.0 * area2), cy / (3.0 * area2))
    }

    /// Clips this polygon against an axis-aligned rectangle
    /// (Sutherland-Hodgman). Returns the clipped vertex loop, possibly empty.
    pub fn clip_to_rect(&self, min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Polygon {
        type Pt = (f64, f64);
        // inside predicate and segment intersection for each rectangle side
        fn clip_edge(
            input: &[Pt],
            inside: impl Fn(Pt) -> bool,
            intersect: impl Fn(Pt, Pt) -> Pt,
        ) -> Vec<Pt> {
            let mut out = Vec::with_capacity(input.len() + 4);
            let n = input.len();
            for i in 0..n {
                let cur = input[i];
                let prev = input[(i + n - 1) % n];
                let cur_in = inside(cur);
                let prev_in = inside(prev);
                if cur_in {
                    if !prev_in {
                        out.push(intersect(prev, cur));
                    }
                    out.push(cur);
                } else if prev_in {
                    out.push(intersect(prev, cur));
                }
            }
            out
        }

        let mut pts = self.vertices.clone();
        let sides: [(Box<dyn Fn(Pt) -> bool>, Box<dyn Fn(Pt, Pt) -> Pt>); 4] = [
            (
                Box::new(move |p: Pt| p.0 >= min_x),
                Box::new(move |a: Pt, b: Pt| {
                    let t = (min_x - a.0) / (b.0 - a.0);
                    (min_x, a.1 + t * (b.1 - a.1))
                }),
            ),
            (
                Box::new(move |p: Pt| p.0 <= max_x),
                Box::new(move |a: Pt, b: Pt| {
                    let t = (max_x - a.0) / (b.0 - a.0);
                    (max_x, a.1 + t * (b.1 - a.1))
                }),
            ),
            (
                Box::new(move |p: Pt| p.1 >= min_y),
                Box::new(move |a: Pt, b: Pt| {
                    let t = (min_y - a.1) / (b.1 - a.1);
                    (a.0 + t * (b.0 - a.0), min_y)
                }),
            ),
            (
                Box::new(move |p: Pt| p.1 <= max_y),
                Box::new(move |a: Pt, b: Pt| {
                    let t = (max_y - a.1) / (b.1 - a.1);
                    (a.0 + t * (b.0 - a.0), max_y)
                }),
            ),
        ];
        for (inside, intersect) in &sides {
            if pts.is_empty() {
                break;
            }
            pts = clip_edge(&pts, inside.as_ref(), intersect.as_ref());
        }
        Polygon::new(pts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn normalize_maps_into_half_open_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let raw: f64 = rng.gen_range(-50.0..50.0);
            let n = normalize_angle(raw);
            assert!(n > -PI && n <= PI, "raw {raw} -> {n}");
            // equivalent modulo 2*PI
            let d = (raw - n).rem_euclid(2.0 * PI);
            assert!(d < 1e-9 || (2.0 * PI - d) < 1e-9);
        }
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert_eq!(normalize_angle(3.0 * PI), PI);
    }

    #[test]
    fn contains_matches_winding_oracle_on_random_points() {
        // independent winding-number test used as the oracle
        fn winding_contains(poly: &[(f64, f64)], px: f64, py: f64) -> bool {
            let n = poly.len();
            let mut winding = 0i32;
            for i in 0..n {
                let (x0, y0) = poly[i];
                let (x1, y1) = poly[(i + 1) % n];
                let cross = (x1 - x0) * (py - y0) - (px - x0) * (y1 - y0);
                if y0 <= py {
                    if y1 > py && cross > 0.0 {
                        winding += 1;
                    }
                } else if y1 <= py && cross < 0.0 {
                    winding -= 1;
                }
            }
            winding != 0
        }

        let poly = Polygon::new(vec![
            (0.0, 0.0),
            (10.0, 0.3),
            (9.4, 6.0),
            (5.0, 3.1),
            (0.7, 7.2),
        ]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let px = rng.gen_range(-2.0..12.0);
            let py = rng.gen_range(-2.0..9.0);
            assert_eq!(
                poly.contains(px, py),
                winding_contains(&poly.vertices, px, py),
                "disagreement at ({px}, {py})"
            );
        }
    }

    #[test]
    fn clip_to_rect_square_overlap() {
        let poly = Polygon::new(vec![(-1.0, -1.0), (3.0, -1.0), (3.0, 3.0), (-1.0, 3.0)]);
        let clipped = poly.clip_to_rect(0.0, 0.0, 2.0, 2.0);
        assert_eq!(clipped.vertices.len(), 4);
        for &(x, y) in &clipped.vertices {
            assert!((0.0..=2.0).contains(&x) && (0.0..=2.0).contains(&y));
        }
    }

    #[test]
    fn centroid_of_rectangle() {
        let poly = Polygon::new(vec![(0.0, 0.0), (4.0, 0.0), (4.0, 2.0), (0.0, 2.0)]);
        let (cx, cy) = poly.centroid();
        assert!((cx - 2.0).abs() < 1e-12 && (cy - 1.0).abs() < 1e-12);
    }
}
