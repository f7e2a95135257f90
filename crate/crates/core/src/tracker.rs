//! Image-space servo that drives the robot until the tracked box sits at
//! the bottom-center of the frame.
//!
//! Offsets are measured from the image bottom-center (u_cl, v_cl) to the box
//! center column and box bottom row; speed scales with the vertical offset,
//! turn rate with the horizontal one, each inside a pixel deadband.

use serde::{Deserialize, Serialize};

use crate::camera::CameraModel;
use crate::perception::{select_closest_object, ObjectBox, SegmentationFrame};

/// Vertical deadband in pixels: no forward motion at or below this offset.
pub const DV_DEADBAND: i64 = 10;
/// Horizontal deadband in pixels: no rotation at or below this offset.
pub const DU_DEADBAND: i64 = 5;
/// Consecutive frames without the target before tracking aborts.
pub const LOST_FRAME_LIMIT: u32 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackerCommand {
    pub v: f64,
    pub omega: f64,
    pub arrived: bool,
}

/// Pixel offsets from the box to the image bottom-center:
/// `du = u_cl - u_co`, `dv = v_cl - v_br`.
pub fn compute_offsets(object_box: &ObjectBox, cam: &CameraModel) -> (i64, i64) {
    let (u_cl, v_cl) = cam.bottom_center();
    let (u_co, _) = object_box.center();
    let du = u_cl - u_co as i64;
    let dv = v_cl - object_box.v_br as i64;
    // box bottoms never lie below the last image row
    debug_assert!(dv >= 0, "box bottom below the image: dv = {dv}");
    (du, dv)
}

/// Servo law: proportional speed and turn rate outside strict deadbands,
/// zero (and arrival) inside both.
pub fn tracking_command(
    du: i64,
    dv: i64,
    v_max: f64,
    omega_max: f64,
    cam: &CameraModel,
) -> TrackerCommand {
    let h = cam.height_px as f64;
    let half_w = cam.width_px as f64 / 2.0;
    let v = if dv.abs() > DV_DEADBAND {
        dv as f64 / h * v_max
    } else {
        0.0
    };
    let omega = if du.abs() > DU_DEADBAND {
        du as f64 / half_w * omega_max
    } else {
        0.0
    };
    let arrived = dv.abs() <= DV_DEADBAND && du.abs() <= DU_DEADBAND;
    TrackerCommand { v, omega, arrived }
}

/// Outcome of one tracker step.
#[derive(Clone, Debug, PartialEq)]
pub enum TrackStep {
    /// Keep following this command; `target_id` names the box being tracked.
    Command(TrackerCommand),
    /// Target invisible for more than the frame limit; navigation resumes.
    Aborted,
}

/// Per-target tracking state across frames.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackerSession {
    pub target_id: String,
    pub frames_lost: u32,
}

impl TrackerSession {
    pub fn new(target_id: impl Into<String>) -> Self {
        Self {
            target_id: target_id.into(),
            frames_lost: 0,
        }
    }

    /// Runs one servo cycle against a rendered frame. Prefers the current
    /// target id; if it left the frame, re-acquires the closest visible box,
    /// and only counts a lost frame when nothing is visible at all.
    /// `eligible` filters which boxes may be (re-)acquired.
    pub fn step(
        &mut self,
        frame: &SegmentationFrame,
        cam: &CameraModel,
        v_max: f64,
        omega_max: f64,
        eligible: impl Fn(&ObjectBox) -> bool,
    ) -> TrackStep {
        let target = frame
            .box_by_id(&self.target_id)
            .filter(|b| eligible(b))
            .or_else(|| {
                let filtered = SegmentationFrame {
                    ground_contour: frame.ground_contour.clone(),
                    object_boxes: frame
                        .object_boxes
                        .iter()
                        .filter(|b| eligible(b))
                        .cloned()
                        .collect(),
                };
                select_closest_object(&filtered, cam)
                    .map(|b| frame.box_by_id(&b.object_id).unwrap())
            });

        match target {
            Some(b) => {
                self.target_id = b.object_id.clone();
                self.frames_lost = 0;
                let (du, dv) = compute_offsets(b, cam);
                TrackStep::Command(tracking_command(du, dv, v_max, omega_max, cam))
            }
            None => {
                self.frames_lost += 1;
                if self.frames_lost > LOST_FRAME_LIMIT {
                    TrackStep::Aborted
                } else {
                    TrackStep::Command(TrackerCommand {
                        v: 0.0,
                        omega: 0.0,
                        arrived: false,
                    })
                }
            }
        }
    }
}
