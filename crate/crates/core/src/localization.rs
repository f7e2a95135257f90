//! Planar EKF fusing odometry dead reckoning with intermittent GPS fixes.
//!
//! State is (x, y, theta). Prediction propagates the same constant-velocity
//! arc used by the simulator, with process noise mapped from the odometry
//! velocity noise; GPS updates observe position only.

use nalgebra::{Matrix2, Matrix3, Matrix3x2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::{normalize_angle, Pose2D};

#[derive(Clone, Debug, PartialEq)]
pub struct EkfState {
    pub mean: Vector3<f64>,
    pub covariance: Matrix3<f64>,
}

impl EkfState {
    /// Starts at a known pose with a small prior.
    pub fn at(pose: &Pose2D) -> Self {
        Self {
            mean: Vector3::new(pose.x, pose.y, pose.theta),
            covariance: Matrix3::identity() * 1e-6,
        }
    }

    pub fn pose(&self) -> Pose2D {
        Pose2D {
            x: self.mean.x,
            y: self.mean.y,
            theta: self.mean.z,
        }
    }
}

/// Sensor noise magnitudes and GPS timing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorNoise {
    /// Odometry translational noise, m/s per sample.
    pub sigma_v: f64,
    /// Odometry angular noise (IMU heading folded in), rad/s per sample.
    pub sigma_omega: f64,
    /// GPS position noise, meters; `INFINITY` disables the update.
    pub sigma_gps: f64,
    /// Seconds between fixes.
    pub gps_period_s: f64,
    /// Intervals `[start, end)` in seconds during which no fix arrives.
    pub gps_outages: Vec<(f64, f64)>,
}

impl Default for SensorNoise {
    fn default() -> Self {
        Self {
            sigma_v: 0.02,
            sigma_omega: 0.01,
            sigma_gps: 0.5,
            gps_period_s: 1.0,
            gps_outages: vec![],
        }
    }
}

impl SensorNoise {
    pub fn in_outage(&self, t: f64) -> bool {
        self.gps_outages.iter().any(|&(a, b)| t >= a && t < b)
    }
}

/// EKF prediction under an odometry reading (v, omega) over `dt` seconds.
pub fn ekf_predict(state: &EkfState, odom: (f64, f64), dt: f64, noise: &SensorNoise) -> EkfState {
    assert!(dt > 0.0, "dt must be positive");
    let (v, omega) = odom;
    let theta = state.mean.z;

    let (mean, f_jac, v_jac) = if omega.abs() < 1e-9 {
        let (s, c) = theta.sin_cos();
        let mean = Vector3::new(
            state.mean.x + v * c * dt,
            state.mean.y + v * s * dt,
            normalize_angle(theta + omega * dt),
        );
        let f_jac = Matrix3::new(
            1.0, 0.0, -v * s * dt,
            0.0, 1.0, v * c * dt,
            0.0, 0.0, 1.0,
        );
        let v_jac = Matrix3x2::new(
            c * dt, -0.5 * v * s * dt * dt,
            s * dt, 0.5 * v * c * dt * dt,
            0.0, dt,
        );
        (mean, f_jac, v_jac)
    } else {
        let theta_next = theta + omega * dt;
        let r = v / omega;
        let (s0, c0) = theta.sin_cos();
        let (s1, c1) = theta_next.sin_cos();
        let mean = Vector3::new(
            state.mean.x + r * (s1 - s0),
            state.mean.y - r * (c1 - c0),
            normalize_angle(theta_next),
        );
        let f_jac = Matrix3::new(
            1.0, 0.0, r * (c1 - c0),
            0.0, 1.0, r * (s1 - s0),
            0.0, 0.0, 1.0,
        );
        let v_jac = Matrix3x2::new(
            (s1 - s0) / omega, -r / omega * (s1 - s0) + r * dt * c1,
            (c0 - c1) / omega, -r / omega * (c0 - c1) + r * dt * s1,
            0.0, dt,
        );
        (mean, f_jac, v_jac)
    };

    let m = Matrix2::new(
        noise.sigma_v * noise.sigma_v, 0.0,
        0.0, noise.sigma_omega * noise.sigma_omega,
    );
    let mut covariance = f_jac * state.covariance * f_jac.transpose()
        + v_jac * m * v_jac.transpose();
    symmetrize(&mut covariance);
    EkfState { mean, covariance }
}

/// Linear position update from a GPS fix with noise `sigma_gps^2 * I`.
/// An infinite sigma is an uninformative measurement and leaves the state
/// unchanged.
pub fn ekf_update_gps(state: &EkfState, fix: (f64, f64), sigma_gps: f64) -> EkfState {
    if !sigma_gps.is_finite() {
        return state.clone();
    }
    let p = state.covariance;
    // H = [I2 | 0]
    let s = Matrix2::new(
        p[(0, 0)] + sigma_gps * sigma_gps, p[(0, 1)],
        p[(1, 0)], p[(1, 1)] + sigma_gps * sigma_gps,
    );
    let s_inv = match s.try_inverse() {
        Some(inv) => inv,
        None => return state.clone(),
    };
    let p_ht = Matrix3x2::new(
        p[(0, 0)], p[(0, 1)],
        p[(1, 0)], p[(1, 1)],
        p[(2, 0)], p[(2, 1)],
    );
    let k = p_ht * s_inv;
    let innovation = Vector2::new(fix.0 - state.mean.x, fix.1 - state.mean.y);
    let delta = k * innovation;
    let mean = Vector3::new(
        state.mean.x + delta.x,
        state.mean.y + delta.y,
        normalize_angle(state.mean.z + delta.z),
    );
    // Joseph form keeps the covariance symmetric PSD
    let kh = Matrix3::new(
        k[(0, 0)], k[(0, 1)], 0.0,
        k[(1, 0)], k[(1, 1)], 0.0,
        k[(2, 0)], k[(2, 1)], 0.0,
    );
    let ikh = Matrix3::identity() - kh;
    let r2 = Matrix2::identity() * (sigma_gps * sigma_gps);
    let mut covariance = ikh * p * ikh.transpose() + k * r2 * k.transpose();
    symmetrize(&mut covariance);
    EkfState { mean, covariance }
}

fn symmetrize(m: &mut Matrix3<f64>) {
    let t = m.transpose();
    *m = (*m + t) * 0.5;
}
