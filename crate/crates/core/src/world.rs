//! Metric world state: grid map, objects, robot kinematics, range sensing.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::{normalize_angle, Pose2D};
use crate::grid::OccupancyGrid;

/// The five classes the robot is allowed to pick up.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GarbageClass {
    Bottle,
    Can,
    Carton,
    PlasticBag,
    WastePaper,
}

pub const GARBAGE_CLASSES: [GarbageClass; 5] = [
    GarbageClass::Bottle,
    GarbageClass::Can,
    GarbageClass::Carton,
    GarbageClass::PlasticBag,
    GarbageClass::WastePaper,
];

/// Common lawn objects that must be avoided, not collected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonGarbageClass {
    Cup,
    Book,
    Shoes,
    Phone,
    Bag,
    Wallet,
}

pub const NON_GARBAGE_CLASSES: [NonGarbageClass; 6] = [
    NonGarbageClass::Cup,
    NonGarbageClass::Book,
    NonGarbageClass::Shoes,
    NonGarbageClass::Phone,
    NonGarbageClass::Bag,
    NonGarbageClass::Wallet,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObjectClass {
    Garbage(GarbageClass),
    NonGarbage(NonGarbageClass),
}

impl ObjectClass {
    pub fn is_garbage(&self) -> bool {
        matches!(self, ObjectClass::Garbage(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            ObjectClass::Garbage(GarbageClass::Bottle) => "bottle",
            ObjectClass::Garbage(GarbageClass::Can) => "can",
            ObjectClass::Garbage(GarbageClass::Carton) => "carton",
            ObjectClass::Garbage(GarbageClass::PlasticBag) => "plastic_bag",
            ObjectClass::Garbage(GarbageClass::WastePaper) => "waste_paper",
            ObjectClass::NonGarbage(NonGarbageClass::Cup) => "cup",
            ObjectClass::NonGarbage(NonGarbageClass::Book) => "book",
            ObjectClass::NonGarbage(NonGarbageClass::Shoes) => "shoes",
            ObjectClass::NonGarbage(NonGarbageClass::Phone) => "phone",
            ObjectClass::NonGarbage(NonGarbageClass::Bag) => "bag",
            ObjectClass::NonGarbage(NonGarbageClass::Wallet) => "wallet",
        }
    }

    pub fn parse(s: &str) -> Option<ObjectClass> {
        let cls = match s {
            "bottle" => ObjectClass::Garbage(GarbageClass::Bottle),
            "can" => ObjectClass::Garbage(GarbageClass::Can),
            "carton" => ObjectClass::Garbage(GarbageClass::Carton),
            "plastic_bag" => ObjectClass::Garbage(GarbageClass::PlasticBag),
            "waste_paper" => ObjectClass::Garbage(GarbageClass::WastePaper),
            "cup" => ObjectClass::NonGarbage(NonGarbageClass::Cup),
            "book" => ObjectClass::NonGarbage(NonGarbageClass::Book),
            "shoes" => ObjectClass::NonGarbage(NonGarbageClass::Shoes),
            "phone" => ObjectClass::NonGarbage(NonGarbageClass::Phone),
            "bag" => ObjectClass::NonGarbage(NonGarbageClass::Bag),
            "wallet" => ObjectClass::NonGarbage(NonGarbageClass::Wallet),
            _ => return None,
        };
        Some(cls)
    }
}

/// A cylinder standing on the lawn: footprint circle plus height.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldObject {
    pub id: String,
    pub center: (f64, f64),
    pub footprint_radius: f64,
    pub height: f64,
    pub true_class: ObjectClass,
    pub mass_kg: f64,
    /// Picked objects are excluded from rendering and collision.
    pub picked: bool,
}

/// Ground-truth robot state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub pose: Pose2D,
    pub v: f64,
    pub omega: f64,
    pub carried_count: u32,
}

impl RobotState {
    pub fn at(pose: Pose2D) -> Self {
        Self {
            pose,
            v: 0.0,
            omega: 0.0,
            carried_count: 0,
        }
    }
}

/// Velocity command applied for one timestep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveCommand {
    pub v: f64,
    pub omega: f64,
}

impl DriveCommand {
    pub const STOP: DriveCommand = DriveCommand { v: 0.0, omega: 0.0 };

    pub fn clamped(self, v_max: f64, omega_max: f64) -> Self {
        DriveCommand {
            v: self.v.clamp(-v_max, v_max),
            omega: self.omega.clamp(-omega_max, omega_max),
        }
    }
}

/// Integrates the unicycle model for one step of `dt` seconds.
///
/// Uses the closed-form constant-velocity arc (exact for constant `v`,
/// `omega` over the step); for `|omega|` near zero it reduces to straight
/// motion. Heading is renormalized to `(-PI, PI]`.
pub fn step_kinematics(state: &RobotState, cmd: DriveCommand, dt: f64) -> RobotState {
    assert!(dt > 0.0, "dt must be positive");
    let Pose2D { x, y, theta } = state.pose;
    let (v, omega) = (cmd.v, cmd.omega);
    let pose = if omega.abs() < 1e-9 {
        Pose2D {
            x: x + v * theta.cos() * dt,
            y: y + v * theta.sin() * dt,
            theta: normalize_angle(theta + omega * dt),
        }
    } else {
        let theta_next = theta + omega * dt;
        let r = v / omega;
        Pose2D {
            x: x + r * (theta_next.sin() - theta.sin()),
            y: y - r * (theta_next.cos() - theta.cos()),
            theta: normalize_angle(theta_next),
        }
    };
    RobotState {
        pose,
        v,
        omega,
        carried_count: state.carried_count,
    }
}

/// Everything the simulation loop mutates: map, objects, robot.
#[derive(Clone, Debug)]
pub struct World {
    pub grid: OccupancyGrid,
    pub objects: Vec<WorldObject>,
    pub robot: RobotState,
    pub v_max: f64,
    pub omega_max: f64,
    /// Collision disc radius of the robot base.
    pub robot_radius: f64,
    pub ultrasonic_max_range: f64,
    pub sigma_ultrasonic: f64,
}

/// Result of one world step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepResult {
    /// Translation was cancelled because it would have entered an object
    /// footprint. Rotation is still applied.
    pub collided: bool,
    /// Id index of the object that blocked the motion.
    pub collided_with: Option<usize>,
}

impl World {
    /// Advances the robot by one timestep under a clamped command.
    /// On footprint contact the translation is cancelled and the collision
    /// is reported; rotation still applies.
    pub fn step(&mut self, cmd: DriveCommand, dt: f64) -> StepResult {
        let cmd = cmd.clamped(self.v_max, self.omega_max);
        let next = step_kinematics(&self.robot, cmd, dt);
        let mut result = StepResult {
            collided: false,
            collided_with: None,
        };
        for (idx, obj) in self.objects.iter().enumerate() {
            if obj.picked {
                continue;
            }
            let d = ((next.pose.x - obj.center.0).powi(2) + (next.pose.y - obj.center.1).powi(2)).sqrt();
            if d < self.robot_radius + obj.footprint_radius {
                result.collided = true;
                result.collided_with = Some(idx);
                break;
            }
        }
        if result.collided {
            // keep position, apply rotation, zero the executed translation
            self.robot = RobotState {
                pose: Pose2D {
                    x: self.robot.pose.x,
                    y: self.robot.pose.y,
                    theta: next.pose.theta,
                },
                v: 0.0,
                omega: cmd.omega,
                carried_count: self.robot.carried_count,
            };
        } else {
            self.robot = next;
        }
        result
    }

    pub fn object_by_id(&self, id: &str) -> Option<&WorldObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// Marks an object picked and increments the carried count.
    pub fn pick_object(&mut self, id: &str) -> bool {
        if let Some(obj) = self.objects.iter_mut().find(|o| o.id == id && !o.picked) {
            obj.picked = true;
            self.robot.carried_count += 1;
            true
        } else {
            false
        }
    }

    pub fn unpicked_objects(&self) -> impl Iterator<Item = &WorldObject> {
        self.objects.iter().filter(|o| !o.picked)
    }
}

/// Range along the heading to the nearest unpicked object footprint or map
/// boundary, saturated at the sensor's max range, with additive Gaussian
/// noise when `sigma_ultrasonic > 0`.
pub fn ultrasonic_range<R: Rng>(world: &World, pose: &Pose2D, rng: &mut R) -> f64 {
    let (dx, dy) = pose.heading_vec();
    let mut nearest = world.ultrasonic_max_range;

    // ray-circle intersections against object footprints
    for obj in world.unpicked_objects() {
        let ox = obj.center.0 - pose.x;
        let oy = obj.center.1 - pose.y;
        let proj = ox * dx + oy * dy;
        if proj <= 0.0 {
            continue;
        }
        let perp2 = (ox * ox + oy * oy) - proj * proj;
        let r2 = obj.footprint_radius * obj.footprint_radius;
        if perp2 > r2 {
            continue;
        }
        let t = proj - (r2 - perp2).sqrt();
        if t >= 0.0 && t < nearest {
            nearest = t;
        }
    }

    // boundary: march the ray until a non-free cell
    let step = world.grid.resolution * 0.25;
    let mut d = step;
    while d < nearest {
        if !world.grid.is_free_world(pose.x + d * dx, pose.y + d * dy) {
            nearest = nearest.min(d);
            break;
        }
        d += step;
    }

    if world.sigma_ultrasonic > 0.0 {
        let noise = Normal::new(0.0, world.sigma_ultrasonic).unwrap();
        (nearest + noise.sample(rng)).max(0.0)
    } else {
        nearest
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Polygon;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn free_world(w: f64, h: f64) -> World {
        let boundary = Polygon::new(vec![(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)]);
        World {
            grid: OccupancyGrid::from_boundary(&boundary, 0.25),
            objects: vec![],
            robot: RobotState::at(Pose2D::new(w / 2.0, h / 2.0, 0.0)),
            v_max: 0.5,
            omega_max: 1.0,
            robot_radius: 0.2,
            ultrasonic_max_range: 3.0,
            sigma_ultrasonic: 0.0,
        }
    }

    fn obj(id: &str, x: f64, y: f64, r: f64) -> WorldObject {
        WorldObject {
            id: id.to_string(),
            center: (x, y),
            footprint_radius: r,
            height: 0.25,
            true_class: ObjectClass::Garbage(GarbageClass::Bottle),
            mass_kg: 0.3,
            picked: false,
        }
    }

    #[test]
    fn pure_translation() {
        let s = RobotState::at(Pose2D::new(0.0, 0.0, 0.0));
        let next = step_kinematics(&s, DriveCommand { v: 1.0, omega: 0.0 }, 1.0);
        assert!((next.pose.x - 1.0).abs() < 1e-15);
        assert!(next.pose.y.abs() < 1e-15);
        assert!(next.pose.theta.abs() < 1e-15);
    }

    #[test]
    fn pure_rotation() {
        let s = RobotState::at(Pose2D::new(0.0, 0.0, 0.0));
        let next = step_kinematics(&s, DriveCommand { v: 0.0, omega: FRAC_PI_2 }, 1.0);
        assert!(next.pose.x.abs() < 1e-15);
        assert!(next.pose.y.abs() < 1e-15);
        assert!((next.pose.theta - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn ten_steps_match_closed_form_arc() {
        let mut s = RobotState::at(Pose2D::new(0.0, 0.0, 0.0));
        let cmd = DriveCommand { v: 0.5, omega: 0.1 };
        for _ in 0..10 {
            s = step_kinematics(&s, cmd, 0.1);
        }
        // closed-form unicycle arc at t = 1.0
        let t = 1.0;
        let r = cmd.v / cmd.omega;
        let ex = r * (cmd.omega * t).sin();
        let ey = r * (1.0 - (cmd.omega * t).cos());
        let err = ((s.pose.x - ex).powi(2) + (s.pose.y - ey).powi(2)).sqrt();
        assert!(err < 1e-3, "arc error {err}");
        assert!((s.pose.theta - 0.1).abs() < 1e-12);
    }

    #[test]
    fn theta_stays_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        use rand::Rng;
        let mut s = RobotState::at(Pose2D::new(0.0, 0.0, 0.0));
        for _ in 0..2000 {
            let cmd = DriveCommand {
                v: rng.gen_range(-0.5..0.5),
                omega: rng.gen_range(-1.0..1.0),
            };
            s = step_kinematics(&s, cmd, rng.gen_range(0.01..0.5));
            assert!(s.pose.theta > -PI && s.pose.theta <= PI);
        }
    }

    #[test]
    fn ultrasonic_direct_hit_noiseless() {
        let mut w = free_world(30.0, 25.0);
        // footprint edge exactly 1.0 m dead ahead of the robot at (15, 12.5, 0)
        w.objects.push(obj("a", 16.1, 12.5, 0.1));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = ultrasonic_range(&w, &w.robot.pose.clone(), &mut rng);
        assert!((d - 1.0).abs() < 1e-12, "got {d}");
    }

    #[test]
    fn ultrasonic_saturates_on_empty_heading() {
        let w = free_world(30.0, 25.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = ultrasonic_range(&w, &w.robot.pose.clone(), &mut rng);
        assert_eq!(d, 3.0);
    }

    #[test]
    fn ultrasonic_noise_mean_converges() {
        let mut w = free_world(30.0, 25.0);
        w.objects.push(obj("a", 16.1, 12.5, 0.1));
        w.sigma_ultrasonic = 0.02;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 10_000;
        let pose = w.robot.pose;
        let mean: f64 = (0..n).map(|_| ultrasonic_range(&w, &pose, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.001, "mean {mean}");
    }

    #[test]
    fn collision_halts_translation() {
        let mut w = free_world(30.0, 25.0);
        w.objects.push(obj("wall", 15.72, 12.5, 0.1));
        let r = w.step(DriveCommand { v: 0.5, omega: 0.0 }, 0.1);
        assert!(!r.collided, "first step stays clear");
        let mut collided = false;
        for _ in 0..20 {
            let r = w.step(DriveCommand { v: 0.5, omega: 0.0 }, 0.1);
            if r.collided {
                collided = true;
                break;
            }
        }
        assert!(collided);
        // robot stopped short of the footprint
        let d = ((w.robot.pose.x - 15.72).powi(2) + (w.robot.pose.y - 12.5).powi(2)).sqrt();
        assert!(d >= 0.3 - 1e-9, "penetrated: {d}");
    }

    #[test]
    fn seeded_world_ops_are_bit_identical() {
        let run = || {
            let mut w = free_world(30.0, 25.0);
            w.objects.push(obj("a", 17.0, 13.0, 0.08));
            w.sigma_ultrasonic = 0.02;
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            use rand::Rng;
            let mut acc: Vec<u64> = Vec::new();
            for _ in 0..500 {
                let cmd = DriveCommand {
                    v: rng.gen_range(-0.5..0.5),
                    omega: rng.gen_range(-1.0..1.0),
                };
                w.step(cmd, 0.1);
                let pose = w.robot.pose;
                let us = ultrasonic_range(&w, &pose, &mut rng);
                acc.push(pose.x.to_bits());
                acc.push(pose.y.to_bits());
                acc.push(pose.theta.to_bits());
                acc.push(us.to_bits());
            }
            acc
        };
        assert_eq!(run(), run());
    }
}
