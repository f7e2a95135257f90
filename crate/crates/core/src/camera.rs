//! Pinhole camera over the ground plane.
//!
//! The camera sits `mount_height` above the ground at the robot origin,
//! pitched down by `tilt` below horizontal, looking along robot +x. Ground
//! frame: x forward, y left, z up; image frame: u right, v down. The
//! homography maps homogeneous ground points (x, y, 1) in the robot frame to
//! homogeneous pixels (u, v, 1).

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hough::PolarLine;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub width_px: u32,
    pub height_px: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Camera center height above ground, meters.
    pub mount_height: f64,
    /// Pitch below horizontal, radians, in (0, PI/2).
    pub tilt: f64,
    /// Horizontal field of view, radians.
    pub hfov: f64,
    /// Max perception range on the ground, meters.
    pub max_range: f64,
}

impl CameraModel {
    /// 640x480 camera with a 60 degree horizontal FOV, mounted 0.4 m up and
    /// tilted 30 degrees down, perceiving up to 10 m.
    pub fn default_robot_camera() -> Self {
        let width_px = 640u32;
        let height_px = 480u32;
        let hfov = 60f64.to_radians();
        let fx = (width_px as f64 / 2.0) / (hfov / 2.0).tan();
        Self {
            width_px,
            height_px,
            fx,
            fy: fx,
            cx: (width_px as f64 - 1.0) / 2.0,
            cy: (height_px as f64 - 1.0) / 2.0,
            mount_height: 0.4,
            tilt: 30f64.to_radians(),
            hfov,
            max_range: 10.0,
        }
    }

    /// Bottom-center pixel (u_cl, v_cl); (319, 479) at 640x480.
    pub fn bottom_center(&self) -> (i64, i64) {
        (
            (self.width_px as i64) / 2 - 1,
            (self.height_px as i64) - 1,
        )
    }

    /// Forward ground distance seen at the top image row, capped at
    /// `max_range`. Beyond this distance the ground projects above the
    /// image and is invisible.
    pub fn far_visible_ground_x(&self) -> f64 {
        let (s, c) = self.tilt.sin_cos();
        // ground x whose projection lands on row v = 0
        let denom = self.fy * s - self.cy * c;
        if denom <= 1e-9 {
            return self.max_range; // horizon (or more) is inside the image
        }
        let x = self.mount_height * (self.fy * c + self.cy * s) / denom;
        x.min(self.max_range)
    }

    /// Projects a 3D point in the robot frame (x forward, y left, z up) to
    /// pixel coordinates. Returns `None` when the point is not in front of
    /// the camera.
    pub fn project_point3(&self, x: f64, y: f64, z: f64) -> Option<(f64, f64)> {
        let (s, c) = self.tilt.sin_cos();
        // camera axes in the robot frame: z_cam = (c, 0, -s),
        // x_cam = (0, -1, 0), y_cam = (-s, 0, -c); camera center (0, 0, H)
        let dz = z - self.mount_height;
        let xc = -y;
        let yc = -x * s - dz * c;
        let zc = x * c - dz * s;
        if zc <= 1e-9 {
            return None;
        }
        Some((self.cx + self.fx * xc / zc, self.cy + self.fy * yc / zc))
    }
}

#[derive(Debug, Error)]
pub enum CameraError {
    #[error("degenerate camera: tilt leaves the ground plane unobservable")]
    DegenerateTilt,
    #[error("homography is not invertible")]
    SingularHomography,
}

/// Invertible map between the ground plane (robot frame) and the image.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundHomography {
    pub h: Matrix3<f64>,
    pub h_inv: Matrix3<f64>,
}

impl GroundHomography {
    /// Ground point (x forward, y left) to pixel (u, v).
    pub fn project(&self, x: f64, y: f64) -> (f64, f64) {
        let p = self.h * Vector3::new(x, y, 1.0);
        (p.x / p.z, p.y / p.z)
    }

    /// Pixel (u, v) back to the ground plane.
    pub fn backproject(&self, u: f64, v: f64) -> (f64, f64) {
        let p = self.h_inv * Vector3::new(u, v, 1.0);
        (p.x / p.z, p.y / p.z)
    }
}

/// Builds the ground-plane homography of a tilted, elevated pinhole camera.
pub fn build_homography(cam: &CameraModel) -> Result<GroundHomography, CameraError> {
    if !(cam.tilt > 1e-6 && cam.tilt < std::f64::consts::FRAC_PI_2 - 1e-6) || cam.mount_height <= 0.0 {
        return Err(CameraError::DegenerateTilt);
    }
    let (s, c) = cam.tilt.sin_cos();
    let hm = cam.mount_height;
    // derived by substituting z = 0 into the pinhole projection
    let h = Matrix3::new(
        cam.cx * c,
        -cam.fx,
        cam.cx * hm * s,
        cam.cy * c - cam.fy * s,
        0.0,
        (cam.cy * s + cam.fy * c) * hm,
        c,
        0.0,
        hm * s,
    );
    let h_inv = h.try_inverse().ok_or(CameraError::SingularHomography)?;
    // verify the inverse before anyone uses it
    let residual = (h * h_inv - Matrix3::identity()).abs().max();
    if residual > 1e-9 {
        return Err(CameraError::SingularHomography);
    }
    Ok(GroundHomography { h, h_inv })
}

#[derive(Debug, Error)]
pub enum HeadingError {
    #[error("line does not cross the lower image rows inside the image")]
    NoForwardDirection,
}

/// Converts a fitted image line into a ground heading in the robot frame.
///
/// Picks point A where the line crosses the bottom row (v = h-1) and point B
/// where it crosses the middle row (v = h/2), maps both through the inverse
/// homography and returns `atan2(yB - yA, xB - xA)`. B is farther from the
/// robot than A, so the heading points into the forward half-plane.
pub fn image_line_to_ground_heading(
    line: &PolarLine,
    hom: &GroundHomography,
    cam: &CameraModel,
) -> Result<f64, HeadingError> {
    let w = cam.width_px as f64;
    let h = cam.height_px as f64;
    let u_at = |v: f64| -> Option<f64> {
        let cos_t = line.theta_img.cos();
        if cos_t.abs() < 1e-9 {
            return None; // horizontal image line never crosses two rows
        }
        let u = (line.rho - v * line.theta_img.sin()) / cos_t;
        if (0.0..=w - 1.0).contains(&u) {
            Some(u)
        } else {
            None
        }
    };
    let v_near = h - 1.0;
    let v_far = h / 2.0;
    let (u_near, u_far) = match (u_at(v_near), u_at(v_far)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(HeadingError::NoForwardDirection),
    };
    let (xa, ya) = hom.backproject(u_near, v_near);
    let (xb, yb) = hom.backproject(u_far, v_far);
    if !(xb - xa).is_finite() || xb <= xa {
        return Err(HeadingError::NoForwardDirection);
    }
    Ok((yb - ya).atan2(xb - xa))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn optical_axis_ground_intersection_hits_principal_point() {
        let cam = CameraModel::default_robot_camera();
        let hom = build_homography(&cam).unwrap();
        // optical axis meets the ground at x = H / tan(tilt)
        let x0 = cam.mount_height / cam.tilt.tan();
        let (u, v) = hom.project(x0, 0.0);
        assert!((u - cam.cx).abs() < 1e-9, "u {u}");
        assert!((v - cam.cy).abs() < 1e-9, "v {v}");
    }

    #[test]
    fn round_trip_within_1e9() {
        let cam = CameraModel::default_robot_camera();
        let hom = build_homography(&cam).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let r = rng.gen_range(0.2..10.0);
            let phi = rng.gen_range(-0.5..0.5);
            let (x, y) = (r * f64::cos(phi), r * f64::sin(phi));
            let (u, v) = hom.project(x, y);
            let (bx, by) = hom.backproject(u, v);
            let err = ((bx - x).powi(2) + (by - y).powi(2)).sqrt();
            assert!(err < 1e-9, "round trip error {err} at ({x}, {y})");
        }
    }

    #[test]
    fn lateral_mirror_symmetry() {
        let cam = CameraModel::default_robot_camera();
        let hom = build_homography(&cam).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..100 {
            let x = rng.gen_range(0.3..8.0);
            let y = rng.gen_range(0.0..3.0);
            let (u_l, v_l) = hom.project(x, y);
            let (u_r, v_r) = hom.project(x, -y);
            assert!(((u_l - cam.cx) + (u_r - cam.cx)).abs() < 1e-9);
            assert!((v_l - v_r).abs() < 1e-9);
        }
    }

    #[test]
    fn homography_agrees_with_full_projection() {
        let cam = CameraModel::default_robot_camera();
        let hom = build_homography(&cam).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let x = rng.gen_range(0.2..9.0);
            let y = rng.gen_range(-3.0..3.0);
            let (u_h, v_h) = hom.project(x, y);
            let (u_p, v_p) = cam.project_point3(x, y, 0.0).unwrap();
            assert!((u_h - u_p).abs() < 1e-9 && (v_h - v_p).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_tilt_is_an_error() {
        let mut cam = CameraModel::default_robot_camera();
        cam.tilt = 0.0;
        assert!(build_homography(&cam).is_err());
    }

    #[test]
    fn vertical_center_line_maps_to_zero_heading() {
        let cam = CameraModel::default_robot_camera();
        let hom = build_homography(&cam).unwrap();
        let line = PolarLine {
            rho: cam.cx,
            theta_img: 0.0,
        };
        let heading = image_line_to_ground_heading(&line, &hom, &cam).unwrap();
        assert!(heading.abs() < 1e-12, "heading {heading}");
    }

    #[test]
    fn tilted_line_turns_left_when_far_point_is_left() {
        let cam = CameraModel::default_robot_camera();
        let hom = build_homography(&cam).unwrap();
        // line through (319.5, 479) and (250, 240): far point left of near point
        let (u1, v1) = (319.5, 479.0);
        let (u2, v2) = (250.0, 240.0);
        let theta = f64::atan2(u1 - u2, v2 - v1); // normal direction of the line
        let theta = if theta < 0.0 { theta + std::f64::consts::PI } else { theta };
        let rho = u1 * theta.cos() + v1 * theta.sin();
        let line = PolarLine { rho, theta_img: theta };
        let heading = image_line_to_ground_heading(&line, &hom, &cam).unwrap();
        assert!(heading > 0.0, "expected left turn, got {heading}");
    }

    #[test]
    fn heading_matches_dense_sampling_oracle() {
        let cam = CameraModel::default_robot_camera();
        let hom = build_homography(&cam).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let h = cam.height_px as f64;
        for _ in 0..200 {
            // construct a line from two random points on the near and mid rows
            let u_near = rng.gen_range(40.0..600.0);
            let u_far = rng.gen_range(40.0..600.0);
            let (v_near, v_far) = (h - 1.0, h / 2.0);
            let dx = u_far - u_near;
            let dy = v_far - v_near;
            let mut theta = f64::atan2(dx, -dy); // line normal angle in [0, PI)
            if theta < 0.0 {
                theta += std::f64::consts::PI;
            }
            if theta >= std::f64::consts::PI {
                theta -= std::f64::consts::PI;
            }
            let rho = u_near * theta.cos() + v_near * theta.sin();
            let line = PolarLine { rho, theta_img: theta };
            let heading = match image_line_to_ground_heading(&line, &hom, &cam) {
                Ok(t) => t,
                Err(_) => continue,
            };

            // oracle: map 50 samples of the image line to the ground and fit
            // the direction with a least-squares principal axis
            let mut pts = Vec::new();
            for k in 0..50 {
                let t = k as f64 / 49.0;
                let u = u_near + t * (u_far - u_near);
                let v = v_near + t * (v_far - v_near);
                pts.push(hom.backproject(u, v));
            }
            let n = pts.len() as f64;
            let (mx, my) = pts.iter().fold((0.0, 0.0), |(ax, ay), p| (ax + p.0, ay + p.1));
            let (mx, my) = (mx / n, my / n);
            let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
            for (x, y) in &pts {
                sxx += (x - mx) * (x - mx);
                sxy += (x - mx) * (y - my);
                syy += (y - my) * (y - my);
            }
            // principal eigenvector of the 2x2 scatter matrix
            let trace = sxx + syy;
            let det = sxx * syy - sxy * sxy;
            let lambda = trace / 2.0 + ((trace * trace) / 4.0 - det).max(0.0).sqrt();
            let (ex, ey) = if sxy.abs() > 1e-18 {
                (lambda - syy, sxy)
            } else if sxx >= syy {
                (1.0, 0.0)
            } else {
                (0.0, 1.0)
            };
            let mut oracle = ey.atan2(ex);
            // orient forward, matching the A-to-B convention
            if oracle.cos() < 0.0 {
                oracle = crate::geometry::normalize_angle(oracle + std::f64::consts::PI);
            }
            let diff = crate::geometry::angle_diff(heading, oracle).abs();
            assert!(diff < 1e-6, "heading {heading} vs oracle {oracle}");
        }
    }
}
