//! The closed-loop episode runner: localization, perception, navigation,
//! kinematics, and event logging on a fixed timestep.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::localization::{ekf_predict, ekf_update_gps, EkfState};
use crate::navigation::{
    coverage_waypoints, navigation_step, NavContext, NavEvent, NavState,
};
use crate::perception::render_segmentation;
use crate::scenario::{CoverageMode, ScenarioConfig, ScenarioError};

use super::trace::{EpisodeSummary, EpisodeTrace, EventKind, EventRecord, TickRecord};

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error(transparent)]
    Config(#[from] ScenarioError),
    #[error("runtime invariant violated: {0}")]
    Invariant(String),
}

/// Optional overrides applied on top of the scenario file.
#[derive(Clone, Debug, Default)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub mode: Option<CoverageMode>,
    pub budget_s: Option<f64>,
}

/// Runs one episode to completion or budget. The trace is a pure function
/// of (config, overrides): identical inputs give byte-identical CSVs.
pub fn run_episode(config: &ScenarioConfig, ov: &RunOverrides) -> Result<EpisodeTrace, EpisodeError> {
    let built = config.build(ov.seed, ov.mode)?;
    let mut world = built.world;
    let dt = built.dt;
    let budget_s = ov.budget_s.unwrap_or(built.budget_s);
    let budget_ticks = (budget_s / dt).ceil() as u64;

    let waypoints = if built.mode == CoverageMode::Planned {
        coverage_waypoints(&world.grid, built.lane_spacing)
    } else {
        vec![]
    };
    let ctx = NavContext {
        cam: &built.camera,
        hom: &built.homography,
        confusion: &built.confusion,
        waypoints: &waypoints,
        params: &built.nav_params,
        dt,
        planned: built.mode == CoverageMode::Planned,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(built.seed);
    let mut nav = NavState::new();
    let mut ekf = EkfState::at(&world.robot.pose.clone());
    let noise = built.noise;
    let odo_v = (noise.sigma_v > 0.0).then(|| Normal::new(0.0, noise.sigma_v).unwrap());
    let odo_w = (noise.sigma_omega > 0.0).then(|| Normal::new(0.0, noise.sigma_omega).unwrap());
    let gps_n = (noise.sigma_gps > 0.0 && noise.sigma_gps.is_finite())
        .then(|| Normal::new(0.0, noise.sigma_gps).unwrap());
    let gps_period_ticks = (noise.gps_period_s / dt).round().max(1.0) as u64;

    let initial_garbage = world
        .objects
        .iter()
        .filter(|o| o.true_class.is_garbage())
        .count() as u32;

    let mut records: Vec<TickRecord> = Vec::new();
    let mut events: Vec<EventRecord> = Vec::new();
    let mut pickups = 0u32;
    let mut wrong_pickups = 0u32;
    let mut pickup_failures = 0u32;
    let mut completion_t: Option<f64> = None;
    let mut sim_time = 0.0f64;

    for tick in 0..budget_ticks {
        let t_end = (tick + 1) as f64 * dt;
        let est_pose = ekf.pose();
        let true_pose = world.robot.pose;
        let frame = render_segmentation(&world, &true_pose, &built.camera, &built.homography);

        let out = navigation_step(&mut world, &est_pose, &frame, &mut nav, &ctx, &mut rng);
        for ev in &out.events {
            let (kind, object_id) = match ev {
                NavEvent::PickupSuccess { object_id } => {
                    pickups += 1;
                    if world
                        .object_by_id(object_id)
                        .map_or(false, |o| !o.true_class.is_garbage())
                    {
                        wrong_pickups += 1;
                    }
                    (EventKind::PickupSuccess, Some(object_id.clone()))
                }
                NavEvent::PickupFailure { object_id } => {
                    pickup_failures += 1;
                    (EventKind::PickupFailure, Some(object_id.clone()))
                }
                NavEvent::Avoid { object_id } => (EventKind::Avoid, object_id.clone()),
                NavEvent::BoundaryExit => (EventKind::BoundaryExit, None),
                NavEvent::EmergencyStop => (EventKind::EmergencyStop, None),
            };
            events.push(EventRecord {
                t_s: t_end,
                kind,
                object_id,
            });
        }

        let step = world.step(out.cmd, dt);
        if step.collided {
            nav.pending_collision = true;
        }

        // odometry measures the executed velocities
        let mut odom = (world.robot.v, world.robot.omega);
        if let Some(n) = &odo_v {
            odom.0 += n.sample(&mut rng);
        }
        if let Some(n) = &odo_w {
            odom.1 += n.sample(&mut rng);
        }
        ekf = ekf_predict(&ekf, odom, dt, &noise);
        if (tick + 1) % gps_period_ticks == 0 && !noise.in_outage(t_end) {
            if let Some(n) = &gps_n {
                let fix = (
                    world.robot.pose.x + n.sample(&mut rng),
                    world.robot.pose.y + n.sample(&mut rng),
                );
                ekf = ekf_update_gps(&ekf, fix, noise.sigma_gps);
            }
        }

        // garbage accounting
        let mut picked_garbage = 0u32;
        let mut failed_garbage = 0u32;
        let mut remaining = 0u32;
        for o in &world.objects {
            if !o.true_class.is_garbage() {
                continue;
            }
            if o.picked {
                picked_garbage += 1;
            } else if nav.ignored_ids.contains(&o.id) {
                failed_garbage += 1;
            } else {
                remaining += 1;
            }
        }
        if remaining == 0 && completion_t.is_none() && initial_garbage > 0 {
            completion_t = Some(t_end);
        }

        records.push(TickRecord {
            t_s: t_end,
            true_pose: world.robot.pose,
            est_pose: ekf.pose(),
            mode: nav.mode,
            v: world.robot.v,
            omega: world.robot.omega,
            remaining,
            picked: picked_garbage,
            failed: failed_garbage,
        });
        sim_time = t_end;

        // termination
        if initial_garbage > 0 && remaining == 0 {
            break;
        }
        if initial_garbage == 0
            && built.mode == CoverageMode::Planned
            && (nav.sweeps_completed >= 1 || waypoints.is_empty())
        {
            break;
        }
    }

    // paranoia: the trace must be strictly ordered in time
    if records.windows(2).any(|w| w[1].t_s <= w[0].t_s) {
        return Err(EpisodeError::Invariant("tick timestamps not increasing".into()));
    }

    let last = records.last();
    let completed = initial_garbage == 0 || last.map_or(false, |r| r.remaining == 0);
    let permanently_failed = last.map_or(0, |r| r.failed);
    Ok(EpisodeTrace {
        records,
        events,
        summary: EpisodeSummary {
            completed,
            completion_t_s: completion_t,
            sim_time_s: sim_time,
            initial_garbage,
            pickups,
            pickup_failures,
            wrong_pickups,
            permanently_failed,
        },
    })
}

/// Convenience wrapper used in a few statistics tests: runs the stochastic
/// pickup model alone, without a world.
pub fn sample_pickup_outcomes(n: usize, success_p: f64, seed: u64) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ok = 0;
    for _ in 0..n {
        if rng.gen_range(0.0..1.0) < success_p {
            ok += 1;
        }
    }
    (ok, n - ok)
}
