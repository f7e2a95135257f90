//! Navigation state machine: coverage, boundary return, object tracking,
//! recognition, pickup, and obstacle avoidance.
//!
//! One transition per simulation tick. Dispatch order: the out-of-map check
//! preempts everything; inside the map, visible trackable objects suspend
//! coverage until the approach ends in a pickup or an avoidance maneuver,
//! after which coverage resumes.

pub mod coverage;
pub mod direction;

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::camera::{CameraModel, GroundHomography};
use crate::geometry::{angle_diff, normalize_angle, Pose2D};
use crate::grid::{is_inside_map, ray_free, OccupancyGrid};
use crate::perception::{select_closest_object, Classification, ConfusionModel, SegmentationFrame};
use crate::tracker::{TrackStep, TrackerSession};
use crate::world::{ultrasonic_range, DriveCommand, World};

pub use coverage::{coverage_waypoints, default_lane_spacing};
pub use direction::{cent_set, find_optimal_direction, CentSet, DirectionError, DirectionFit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NavMode {
    Coverage,
    Return,
    Track,
    Recognize,
    Pickup,
    Avoid,
}

impl NavMode {
    pub fn name(&self) -> &'static str {
        match self {
            NavMode::Coverage => "coverage",
            NavMode::Return => "return",
            NavMode::Track => "track",
            NavMode::Recognize => "recognize",
            NavMode::Pickup => "pickup",
            NavMode::Avoid => "avoid",
        }
    }

    pub fn parse(s: &str) -> Option<NavMode> {
        Some(match s {
            "coverage" => NavMode::Coverage,
            "return" => NavMode::Return,
            "track" => NavMode::Track,
            "recognize" => NavMode::Recognize,
            "pickup" => NavMode::Pickup,
            "avoid" => NavMode::Avoid,
            _ => return None,
        })
    }
}

/// Events surfaced to the episode trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NavEvent {
    PickupSuccess { object_id: String },
    PickupFailure { object_id: String },
    Avoid { object_id: Option<String> },
    BoundaryExit,
    EmergencyStop,
}

/// Tunable navigation constants; defaults follow the controller geometry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NavParams {
    /// Return-mechanism ray length, meters.
    pub lookahead_m: f64,
    /// Distance driven along an avoidance heading before coverage resumes.
    pub escape_distance_m: f64,
    /// Ultrasonic emergency-stop threshold, meters.
    pub emergency_stop_m: f64,
    /// Manipulator reach from the robot front, meters.
    pub pickup_reach_m: f64,
    /// Wall-time of one pickup attempt, seconds.
    pub pickup_duration_s: f64,
    pub pickup_success_p: f64,
    pub pickup_max_attempts: u32,
    /// Heading error below which the robot drives instead of turning.
    pub align_tolerance_rad: f64,
    pub waypoint_arrive_m: f64,
    /// Ticks before an unreachable waypoint is skipped.
    pub waypoint_timeout_ticks: u32,
}

impl Default for NavParams {
    fn default() -> Self {
        Self {
            lookahead_m: 2.0,
            escape_distance_m: 1.5,
            emergency_stop_m: 0.3,
            pickup_reach_m: 0.35,
            pickup_duration_s: 1.4,
            pickup_success_p: 0.96,
            pickup_max_attempts: 3,
            align_tolerance_rad: 0.1,
            waypoint_arrive_m: 0.3,
            waypoint_timeout_ticks: 600,
        }
    }
}

/// Immutable per-episode context for the state machine.
pub struct NavContext<'a> {
    pub cam: &'a CameraModel,
    pub hom: &'a GroundHomography,
    pub confusion: &'a ConfusionModel,
    pub waypoints: &'a [Pose2D],
    pub params: &'a NavParams,
    pub dt: f64,
    /// Planned boustrophedon coverage vs segmentation-guided wandering.
    pub planned: bool,
}

/// Mutable navigation state carried across ticks.
#[derive(Clone, Debug, PartialEq)]
pub struct NavState {
    pub mode: NavMode,
    pub tracker: Option<TrackerSession>,
    /// Absolute heading being held in Return, Avoid, or random-coverage
    /// wander legs.
    pub committed_heading: Option<f64>,
    pub avoid_distance_remaining: f64,
    pub waypoint_index: usize,
    pub sweeps_completed: u32,
    /// Objects the robot decided never to pick up again: recognized
    /// non-garbage and objects that exhausted their pickup attempts. They
    /// remain visible as obstacles.
    pub ignored_ids: BTreeSet<String>,
    /// Set by the episode loop when the world reported a footprint contact.
    pub pending_collision: bool,
    recognize_pending: bool,
    recognized: Option<Classification>,
    pickup_ticks_left: u32,
    pickup_attempts: u32,
    /// Ticks since the distance to the current waypoint last improved.
    waypoint_stall_ticks: u32,
    waypoint_best_dist: f64,
    /// Consecutive emergency replans; after the first, headings go random
    /// to break deterministic stop-replan loops against a close obstacle.
    emergency_replans: u32,
}

impl NavState {
    pub fn new() -> Self {
        Self {
            mode: NavMode::Coverage,
            tracker: None,
            committed_heading: None,
            avoid_distance_remaining: 0.0,
            waypoint_index: 0,
            sweeps_completed: 0,
            ignored_ids: BTreeSet::new(),
            pending_collision: false,
            recognize_pending: false,
            recognized: None,
            pickup_ticks_left: 0,
            pickup_attempts: 0,
            waypoint_stall_ticks: 0,
            waypoint_best_dist: f64::INFINITY,
            emergency_replans: 0,
        }
    }
}

impl Default for NavState {
    fn default() -> Self {
        Self::new()
    }
}

/// Command plus the events raised during one tick.
#[derive(Clone, Debug, PartialEq)]
pub struct NavOutcome {
    pub cmd: DriveCommand,
    pub events: Vec<NavEvent>,
}

/// Repeatedly samples a uniform random rotation until the resulting heading
/// clears the lookahead ray; after 64 rejected samples, falls back to the
/// heading toward the free-area centroid.
pub fn return_heading<R: Rng>(
    grid: &OccupancyGrid,
    pose: &Pose2D,
    rng: &mut R,
    lookahead: f64,
) -> f64 {
    for _ in 0..64 {
        let rotation = rng.gen_range(-PI..PI);
        let candidate = normalize_angle(pose.theta + rotation);
        let probe = Pose2D {
            theta: candidate,
            ..*pose
        };
        if ray_free(grid, &probe, lookahead) {
            return candidate;
        }
    }
    let (cx, cy) = grid.free_centroid();
    (cy - pose.y).atan2(cx - pose.x)
}

/// Turn-toward-then-advance controller: rotation-dominant until the heading
/// error drops below the alignment tolerance, then full speed with a small
/// correction. Held headings (Return, Avoid) use this strict form.
fn steer_to_heading(err: f64, world: &World, params: &NavParams, dt: f64) -> DriveCommand {
    let omega = (err / dt).clamp(-world.omega_max, world.omega_max);
    if err.abs() > params.align_tolerance_rad {
        DriveCommand { v: 0.0, omega }
    } else {
        DriveCommand {
            v: world.v_max,
            omega,
        }
    }
}

/// Steering for headings recomputed from feedback every tick (fitted
/// directions, waypoint bearings). Speed blends down with heading error
/// instead of gating on it, which kills the stop-and-turn limit cycle that
/// a re-fitted direction can otherwise drive at the alignment boundary.
fn steer_blended(err: f64, world: &World, params: &NavParams, dt: f64) -> DriveCommand {
    let omega = (err / dt).clamp(-world.omega_max, world.omega_max);
    let v = if err.abs() <= params.align_tolerance_rad {
        world.v_max
    } else {
        world.v_max * (1.0 - err.abs() / 0.5).max(0.0)
    };
    DriveCommand { v, omega }
}

fn enter_avoid<R: Rng>(
    nav: &mut NavState,
    frame: &SegmentationFrame,
    est_pose: &Pose2D,
    ctx: &NavContext,
    rng: &mut R,
) {
    // the first replan trusts the fitted direction; repeated emergency
    // stops mean the fit keeps pointing at the same close obstacle, so
    // later headings are drawn at random until the robot gets clear
    let fitted = if nav.emergency_replans <= 1 {
        find_optimal_direction(frame, ctx.hom, ctx.cam).ok()
    } else {
        None
    };
    let heading = match fitted {
        Some(fit) => normalize_angle(est_pose.theta + fit.heading),
        None => normalize_angle(est_pose.theta + rng.gen_range(-PI..PI)),
    };
    nav.mode = NavMode::Avoid;
    nav.committed_heading = Some(heading);
    nav.avoid_distance_remaining = ctx.params.escape_distance_m;
}

/// One tick of the five-step navigation flow. Consumes the current frame and
/// estimated pose, mutates the navigation state (and the world, on pickup),
/// and returns the drive command with any events raised.
pub fn navigation_step<R: Rng>(
    world: &mut World,
    est_pose: &Pose2D,
    frame: &SegmentationFrame,
    nav: &mut NavState,
    ctx: &NavContext,
    rng: &mut R,
) -> NavOutcome {
    let mut events: Vec<NavEvent> = Vec::new();
    let params = ctx.params;

    // out-of-map preempts everything
    if !is_inside_map(&world.grid, est_pose) {
        if nav.mode != NavMode::Return {
            events.push(NavEvent::BoundaryExit);
            nav.mode = NavMode::Return;
            nav.committed_heading = None;
            nav.tracker = None;
            nav.recognize_pending = false;
            nav.recognized = None;
            nav.emergency_replans = 0;
        }
    } else if nav.mode == NavMode::Return {
        nav.mode = NavMode::Coverage;
        nav.committed_heading = None;
    }

    // collision reported by the world: replan around whatever we hit
    if nav.pending_collision {
        nav.pending_collision = false;
        if nav.mode != NavMode::Return && nav.mode != NavMode::Pickup {
            events.push(NavEvent::EmergencyStop);
            nav.tracker = None;
            nav.recognize_pending = false;
            nav.recognized = None;
            nav.emergency_replans += 1;
            enter_avoid(nav, frame, est_pose, ctx, rng);
        }
    }

    // bounded re-dispatch: a tick may pass through a transition chain like
    // Coverage -> Track, but every chain terminates in a command
    for _ in 0..4 {
        match nav.mode {
            NavMode::Return => {
                let heading = *nav
                    .committed_heading
                    .get_or_insert_with(|| return_heading(&world.grid, est_pose, rng, params.lookahead_m));
                let err = angle_diff(heading, est_pose.theta);
                return NavOutcome {
                    cmd: steer_to_heading(err, world, params, ctx.dt),
                    events,
                };
            }

            NavMode::Coverage => {
                // trackable objects suspend coverage
                let trackable = SegmentationFrame {
                    ground_contour: frame.ground_contour.clone(),
                    object_boxes: frame
                        .object_boxes
                        .iter()
                        .filter(|b| !nav.ignored_ids.contains(&b.object_id))
                        .cloned()
                        .collect(),
                };
                if let Some(target) = select_closest_object(&trackable, ctx.cam) {
                    nav.tracker = Some(TrackerSession::new(target.object_id.clone()));
                    nav.mode = NavMode::Track;
                    nav.committed_heading = None;
                    nav.emergency_replans = 0;
                    continue;
                }

                // ultrasonic guard against obstacles the tracker ignores
                let true_pose = world.robot.pose;
                let range = ultrasonic_range(world, &true_pose, rng);
                if range < params.emergency_stop_m {
                    events.push(NavEvent::EmergencyStop);
                    nav.emergency_replans += 1;
                    enter_avoid(nav, frame, est_pose, ctx, rng);
                    continue;
                }

                if ctx.planned && !ctx.waypoints.is_empty() {
                    nav.committed_heading = None;
                    let target = ctx.waypoints[nav.waypoint_index % ctx.waypoints.len()];
                    let dx = target.x - est_pose.x;
                    let dy = target.y - est_pose.y;
                    let dist = (dx * dx + dy * dy).sqrt();
                    // the stall timer only runs while no progress is made,
                    // so long treks between lanes never skip waypoints
                    if dist + 0.05 < nav.waypoint_best_dist {
                        nav.waypoint_best_dist = dist;
                        nav.waypoint_stall_ticks = 0;
                    } else {
                        nav.waypoint_stall_ticks += 1;
                    }
                    if dist < params.waypoint_arrive_m
                        || nav.waypoint_stall_ticks > params.waypoint_timeout_ticks
                    {
                        nav.waypoint_index += 1;
                        nav.waypoint_stall_ticks = 0;
                        nav.waypoint_best_dist = f64::INFINITY;
                        if nav.waypoint_index % ctx.waypoints.len() == 0 {
                            nav.sweeps_completed += 1;
                        }
                        return NavOutcome {
                            cmd: DriveCommand::STOP,
                            events,
                        };
                    }
                    let err = angle_diff(dy.atan2(dx), est_pose.theta);
                    return NavOutcome {
                        cmd: steer_blended(err, world, params, ctx.dt),
                        events,
                    };
                }

                // random mode: straight wander legs, redirected by the
                // random-rotation return mechanism when the lookahead ray
                // ahead of the leg is no longer clear
                let need_new_leg = match nav.committed_heading {
                    None => true,
                    Some(h) => {
                        let probe = Pose2D { theta: h, ..*est_pose };
                        !ray_free(&world.grid, &probe, params.lookahead_m)
                    }
                };
                if need_new_leg {
                    nav.committed_heading =
                        Some(return_heading(&world.grid, est_pose, rng, params.lookahead_m));
                }
                let heading = nav.committed_heading.unwrap();
                let err = angle_diff(heading, est_pose.theta);
                return NavOutcome {
                    cmd: steer_to_heading(err, world, params, ctx.dt),
                    events,
                };
            }

            NavMode::Track => {
                let ignored = nav.ignored_ids.clone();
                let session = nav.tracker.get_or_insert_with(|| {
                    TrackerSession::new(
                        select_closest_object(frame, ctx.cam)
                            .map(|b| b.object_id.clone())
                            .unwrap_or_default(),
                    )
                });
                match session.step(frame, ctx.cam, world.v_max, world.omega_max, |b| {
                    !ignored.contains(&b.object_id)
                }) {
                    TrackStep::Command(c) if c.arrived => {
                        nav.mode = NavMode::Recognize;
                        nav.recognize_pending = true;
                        nav.recognized = None;
                        return NavOutcome {
                            cmd: DriveCommand::STOP,
                            events,
                        };
                    }
                    TrackStep::Command(c) => {
                        return NavOutcome {
                            cmd: DriveCommand {
                                v: c.v,
                                omega: c.omega,
                            },
                            events,
                        };
                    }
                    TrackStep::Aborted => {
                        nav.tracker = None;
                        nav.mode = NavMode::Coverage;
                        return NavOutcome {
                            cmd: DriveCommand::STOP,
                            events,
                        };
                    }
                }
            }

            NavMode::Recognize => {
                let target_id = match &nav.tracker {
                    Some(s) => s.target_id.clone(),
                    None => {
                        nav.mode = NavMode::Coverage;
                        continue;
                    }
                };
                let true_class = match world.object_by_id(&target_id) {
                    Some(o) if !o.picked => o.true_class,
                    _ => {
                        // target vanished between frames; resume coverage
                        nav.tracker = None;
                        nav.recognize_pending = false;
                        nav.mode = NavMode::Coverage;
                        continue;
                    }
                };
                if nav.recognize_pending {
                    // one-tick recognition pause; the classifier runs once
                    nav.recognized = Some(ctx.confusion.classify(true_class, rng));
                    nav.recognize_pending = false;
                    return NavOutcome {
                        cmd: DriveCommand::STOP,
                        events,
                    };
                }
                let result = nav.recognized.take().expect("recognition result pending");
                if result.is_garbage {
                    nav.mode = NavMode::Pickup;
                    nav.pickup_attempts = 0;
                    nav.pickup_ticks_left = pickup_ticks(params, ctx.dt);
                    continue;
                }
                // treated as an obstacle from now on
                nav.ignored_ids.insert(target_id.clone());
                nav.tracker = None;
                events.push(NavEvent::Avoid {
                    object_id: Some(target_id),
                });
                nav.emergency_replans = 0;
                enter_avoid(nav, frame, est_pose, ctx, rng);
                continue;
            }

            NavMode::Pickup => {
                let target_id = match &nav.tracker {
                    Some(s) => s.target_id.clone(),
                    None => {
                        nav.mode = NavMode::Coverage;
                        continue;
                    }
                };
                if world.object_by_id(&target_id).map_or(true, |o| o.picked) {
                    nav.tracker = None;
                    nav.mode = NavMode::Coverage;
                    continue;
                }
                // an attempt spans exactly `pickup_ticks` stopped ticks; the
                // manipulator outcome resolves on the last of them
                nav.pickup_ticks_left = nav.pickup_ticks_left.saturating_sub(1);
                if nav.pickup_ticks_left > 0 {
                    return NavOutcome {
                        cmd: DriveCommand::STOP,
                        events,
                    };
                }
                // attempt resolves: the gripper must reach the object
                let true_pose = world.robot.pose;
                let reach_ok = world
                    .object_by_id(&target_id)
                    .map(|o| {
                        let (fx, fy) = true_pose.heading_vec();
                        let gx = true_pose.x + world.robot_radius * fx;
                        let gy = true_pose.y + world.robot_radius * fy;
                        let d = ((o.center.0 - gx).powi(2) + (o.center.1 - gy).powi(2)).sqrt();
                        d <= params.pickup_reach_m
                    })
                    .unwrap_or(false);
                let success = rng.gen_range(0.0..1.0) < params.pickup_success_p && reach_ok;
                if success {
                    world.pick_object(&target_id);
                    events.push(NavEvent::PickupSuccess {
                        object_id: target_id,
                    });
                    nav.tracker = None;
                    nav.mode = NavMode::Coverage;
                    return NavOutcome {
                        cmd: DriveCommand::STOP,
                        events,
                    };
                }
                events.push(NavEvent::PickupFailure {
                    object_id: target_id.clone(),
                });
                nav.pickup_attempts += 1;
                if nav.pickup_attempts < params.pickup_max_attempts {
                    nav.pickup_ticks_left = pickup_ticks(params, ctx.dt);
                    return NavOutcome {
                        cmd: DriveCommand::STOP,
                        events,
                    };
                }
                // attempts exhausted: reclassified as an obstacle
                nav.ignored_ids.insert(target_id.clone());
                nav.tracker = None;
                events.push(NavEvent::Avoid {
                    object_id: Some(target_id),
                });
                nav.emergency_replans = 0;
                enter_avoid(nav, frame, est_pose, ctx, rng);
                continue;
            }

            NavMode::Avoid => {
                let heading = match nav.committed_heading {
                    Some(h) => h,
                    None => {
                        enter_avoid(nav, frame, est_pose, ctx, rng);
                        nav.committed_heading.unwrap()
                    }
                };
                if nav.avoid_distance_remaining <= 0.0 {
                    nav.committed_heading = None;
                    nav.mode = NavMode::Coverage;
                    nav.emergency_replans = 0;
                    return NavOutcome {
                        cmd: DriveCommand::STOP,
                        events,
                    };
                }
                let err = angle_diff(heading, est_pose.theta);
                let cmd = steer_to_heading(err, world, params, ctx.dt);
                if cmd.v > 0.0 {
                    // moving: watch the ultrasonic for a blocked escape path
                    let true_pose = world.robot.pose;
                    let range = ultrasonic_range(world, &true_pose, rng);
                    if range < params.emergency_stop_m {
                        events.push(NavEvent::EmergencyStop);
                        nav.emergency_replans += 1;
                        enter_avoid(nav, frame, est_pose, ctx, rng);
                        return NavOutcome {
                            cmd: DriveCommand::STOP,
                            events,
                        };
                    }
                    nav.avoid_distance_remaining -= cmd.v * ctx.dt;
                }
                return NavOutcome { cmd, events };
            }
        }
    }
    // transition chains are short; reaching here means a dispatch bug
    unreachable!("navigation dispatch did not settle on a command");
}

/// Whole ticks consumed by one pickup attempt.
pub fn pickup_ticks(params: &NavParams, dt: f64) -> u32 {
    (params.pickup_duration_s / dt).round().max(1.0) as u32
}

/// Per-attempt pickup sequencer used by the acceptance statistics: runs one
/// full attempt and reports (ticks consumed, success).
pub fn simulate_pickup_attempt<R: Rng>(params: &NavParams, dt: f64, rng: &mut R) -> (u32, bool) {
    let ticks = pickup_ticks(params, dt);
    let success = rng.gen_range(0.0..1.0) < params.pickup_success_p;
    (ticks, success)
}
