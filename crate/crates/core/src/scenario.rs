//! Scenario files: a declarative TOML description of the field, robot,
//! sensors, classifier, and object layout. A scenario plus a seed fully
//! determines an episode.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{build_homography, CameraModel, GroundHomography};
use crate::geometry::{Polygon, Pose2D};
use crate::grid::OccupancyGrid;
use crate::localization::SensorNoise;
use crate::navigation::NavParams;
use crate::perception::ConfusionModel;
use crate::world::{
    ObjectClass, RobotState, World, WorldObject, GARBAGE_CLASSES, NON_GARBAGE_CLASSES,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageMode {
    Planned,
    Random,
}

impl CoverageMode {
    pub fn name(&self) -> &'static str {
        match self {
            CoverageMode::Planned => "planned",
            CoverageMode::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "planned" => Some(CoverageMode::Planned),
            "random" => Some(CoverageMode::Random),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("field `{field}` is invalid: {reason}")]
    Invalid { field: String, reason: String },
    #[error("object `{id}` is invalid: {reason}")]
    BadObject { id: String, reason: String },
    #[error("could not place {0} objects inside the boundary")]
    PlacementFailed(usize),
}

fn invalid(field: &str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldSection {
    /// Boundary polygon vertices in meters.
    pub boundary_m: Vec<(f64, f64)>,
    #[serde(default = "default_resolution")]
    pub resolution_m: f64,
}

fn default_resolution() -> f64 {
    0.25
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RobotSection {
    /// Start pose: x_m, y_m, theta_rad.
    pub start_pose: (f64, f64, f64),
    #[serde(default = "default_v_max")]
    pub v_max_mps: f64,
    #[serde(default = "default_omega_max")]
    pub omega_max_radps: f64,
    #[serde(default = "default_robot_radius")]
    pub radius_m: f64,
}

fn default_v_max() -> f64 {
    0.5
}
fn default_omega_max() -> f64 {
    1.0
}
fn default_robot_radius() -> f64 {
    0.2
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimSection {
    #[serde(default = "default_dt")]
    pub dt_s: f64,
    pub mode: CoverageMode,
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub budget_s: f64,
}

fn default_dt() -> f64 {
    0.1
}
fn default_budget() -> f64 {
    3600.0
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CameraSection {
    pub mount_height_m: Option<f64>,
    pub tilt_deg: Option<f64>,
    pub hfov_deg: Option<f64>,
    pub range_m: Option<f64>,
    pub width_px: Option<u32>,
    pub height_px: Option<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NoiseSection {
    #[serde(default = "default_sigma_v")]
    pub sigma_v_mps: f64,
    #[serde(default = "default_sigma_omega")]
    pub sigma_omega_radps: f64,
    #[serde(default = "default_sigma_gps")]
    pub sigma_gps_m: f64,
    #[serde(default = "default_gps_period")]
    pub gps_period_s: f64,
    #[serde(default)]
    pub gps_outages_s: Vec<(f64, f64)>,
    #[serde(default = "default_sigma_us")]
    pub sigma_ultrasonic_m: f64,
}

fn default_sigma_v() -> f64 {
    0.02
}
fn default_sigma_omega() -> f64 {
    0.01
}
fn default_sigma_gps() -> f64 {
    0.5
}
fn default_gps_period() -> f64 {
    1.0
}
fn default_sigma_us() -> f64 {
    0.02
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            sigma_v_mps: default_sigma_v(),
            sigma_omega_radps: default_sigma_omega(),
            sigma_gps_m: default_sigma_gps(),
            gps_period_s: default_gps_period(),
            gps_outages_s: vec![],
            sigma_ultrasonic_m: default_sigma_us(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ClassifierSection {
    pub threshold: Option<f64>,
    /// Optional 5x6 override of the garbage rows.
    pub garbage_rows: Option<Vec<Vec<f64>>>,
    /// Optional 6x6 override of the non-garbage rows.
    pub nongarbage_rows: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PlacementSection {
    pub garbage_count: u32,
    #[serde(default)]
    pub distractor_count: Option<u32>,
    /// Defaults to the episode seed (stream-split), keeping layouts paired
    /// across modes.
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub id: String,
    pub class: String,
    pub x_m: f64,
    pub y_m: f64,
    pub radius_m: Option<f64>,
    pub height_m: Option<f64>,
    pub mass_kg: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct NavSection {
    pub lane_spacing_m: Option<f64>,
    pub lookahead_m: Option<f64>,
    pub escape_distance_m: Option<f64>,
    pub pickup_reach_m: Option<f64>,
    pub pickup_success_p: Option<f64>,
    pub pickup_duration_s: Option<f64>,
}

/// Parsed scenario file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub field: FieldSection,
    pub robot: RobotSection,
    pub sim: SimSection,
    #[serde(default)]
    pub camera: CameraSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub classifier: ClassifierSection,
    #[serde(default)]
    pub placement: Option<PlacementSection>,
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
    #[serde(default)]
    pub nav: NavSection,
}

/// Everything an episode needs, constructed and validated from a scenario.
#[derive(Debug)]
pub struct BuiltScenario {
    pub world: World,
    pub camera: CameraModel,
    pub homography: GroundHomography,
    pub confusion: ConfusionModel,
    pub noise: SensorNoise,
    pub nav_params: NavParams,
    pub lane_spacing: f64,
    pub mode: CoverageMode,
    pub seed: u64,
    pub dt: f64,
    pub budget_s: f64,
    pub boundary: Polygon,
}

/// Per-class default footprint radius, height, and mass.
fn class_defaults(class: ObjectClass) -> (f64, f64, f64) {
    use crate::world::GarbageClass::*;
    use crate::world::NonGarbageClass::*;
    match class {
        ObjectClass::Garbage(Bottle) => (0.04, 0.25, 0.5),
        ObjectClass::Garbage(Can) => (0.035, 0.12, 0.05),
        ObjectClass::Garbage(Carton) => (0.10, 0.20, 0.40),
        ObjectClass::Garbage(PlasticBag) => (0.12, 0.10, 0.05),
        ObjectClass::Garbage(WastePaper) => (0.08, 0.05, 0.02),
        ObjectClass::NonGarbage(Cup) => (0.04, 0.10, 0.25),
        ObjectClass::NonGarbage(Book) => (0.12, 0.03, 0.80),
        ObjectClass::NonGarbage(Shoes) => (0.14, 0.10, 0.70),
        ObjectClass::NonGarbage(Phone) => (0.07, 0.02, 0.20),
        ObjectClass::NonGarbage(Bag) => (0.15, 0.25, 0.90),
        ObjectClass::NonGarbage(Wallet) => (0.06, 0.02, 0.15),
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    /// Validates and constructs the world. `seed` and `mode` override the
    /// file's values when given.
    pub fn build(
        &self,
        seed_override: Option<u64>,
        mode_override: Option<CoverageMode>,
    ) -> Result<BuiltScenario, ScenarioError> {
        let seed = seed_override.unwrap_or(self.sim.seed);
        let mode = mode_override.unwrap_or(self.sim.mode);

        if self.field.boundary_m.len() < 3 {
            return Err(invalid("field.boundary_m", "needs at least 3 vertices"));
        }
        if !(self.field.resolution_m > 0.0) {
            return Err(invalid("field.resolution_m", "must be positive"));
        }
        if !(self.sim.dt_s > 0.0) {
            return Err(invalid("sim.dt_s", "must be positive"));
        }
        if !(self.sim.budget_s > 0.0) {
            return Err(invalid("sim.budget_s", "must be positive"));
        }
        if !(self.robot.v_max_mps > 0.0) {
            return Err(invalid("robot.v_max_mps", "must be positive"));
        }
        if !(self.robot.omega_max_radps > 0.0) {
            return Err(invalid("robot.omega_max_radps", "must be positive"));
        }

        let boundary = Polygon::new(self.field.boundary_m.clone());
        let grid = OccupancyGrid::from_boundary(&boundary, self.field.resolution_m);
        if grid.free_cell_count() == 0 {
            return Err(invalid("field.boundary_m", "no free cells after rasterization"));
        }

        let (sx, sy, stheta) = self.robot.start_pose;
        let start = Pose2D::new(sx, sy, stheta);
        if !grid.is_free_world(sx, sy) {
            return Err(invalid("robot.start_pose", "start pose is not on free ground"));
        }

        // camera
        let mut camera = CameraModel::default_robot_camera();
        if let Some(w) = self.camera.width_px {
            camera.width_px = w;
            camera.cx = (w as f64 - 1.0) / 2.0;
        }
        if let Some(h) = self.camera.height_px {
            camera.height_px = h;
            camera.cy = (h as f64 - 1.0) / 2.0;
        }
        if let Some(fov) = self.camera.hfov_deg {
            if !(fov > 0.0 && fov < 180.0) {
                return Err(invalid("camera.hfov_deg", "must lie in (0, 180)"));
            }
            camera.hfov = fov.to_radians();
        }
        camera.fx = (camera.width_px as f64 / 2.0) / (camera.hfov / 2.0).tan();
        camera.fy = camera.fx;
        if let Some(hm) = self.camera.mount_height_m {
            camera.mount_height = hm;
        }
        if let Some(t) = self.camera.tilt_deg {
            camera.tilt = t.to_radians();
        }
        if let Some(r) = self.camera.range_m {
            camera.max_range = r;
        }
        let homography = build_homography(&camera)
            .map_err(|e| invalid("camera", format!("{e}")))?;

        // classifier
        let mut confusion = ConfusionModel::default();
        if let Some(tau) = self.classifier.threshold {
            confusion.threshold = tau;
        }
        if let Some(rows) = &self.classifier.garbage_rows {
            if rows.len() != 5 || rows.iter().any(|r| r.len() != 6) {
                return Err(invalid("classifier.garbage_rows", "expected a 5x6 matrix"));
            }
            for (i, r) in rows.iter().enumerate() {
                for (j, &p) in r.iter().enumerate() {
                    confusion.garbage_rows[i][j] = p;
                }
            }
        }
        if let Some(rows) = &self.classifier.nongarbage_rows {
            if rows.len() != 6 || rows.iter().any(|r| r.len() != 6) {
                return Err(invalid("classifier.nongarbage_rows", "expected a 6x6 matrix"));
            }
            for (i, r) in rows.iter().enumerate() {
                for (j, &p) in r.iter().enumerate() {
                    confusion.nongarbage_rows[i][j] = p;
                }
            }
        }
        confusion
            .validate()
            .map_err(|e| invalid("classifier", format!("{e}")))?;

        // noise
        let noise = SensorNoise {
            sigma_v: self.noise.sigma_v_mps,
            sigma_omega: self.noise.sigma_omega_radps,
            sigma_gps: self.noise.sigma_gps_m,
            gps_period_s: self.noise.gps_period_s,
            gps_outages: self.noise.gps_outages_s.clone(),
        };
        if noise.sigma_v < 0.0 || noise.sigma_omega < 0.0 || noise.sigma_gps < 0.0 {
            return Err(invalid("noise", "sigmas must be non-negative"));
        }
        if !(noise.gps_period_s > 0.0) {
            return Err(invalid("noise.gps_period_s", "must be positive"));
        }

        // nav parameters
        let mut nav_params = NavParams::default();
        if let Some(v) = self.nav.lookahead_m {
            nav_params.lookahead_m = v;
        }
        if let Some(v) = self.nav.escape_distance_m {
            nav_params.escape_distance_m = v;
        }
        if let Some(v) = self.nav.pickup_reach_m {
            nav_params.pickup_reach_m = v;
        }
        if let Some(v) = self.nav.pickup_success_p {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid("nav.pickup_success_p", "must lie in [0, 1]"));
            }
            nav_params.pickup_success_p = v;
        }
        if let Some(v) = self.nav.pickup_duration_s {
            nav_params.pickup_duration_s = v;
        }
        let lane_spacing = self
            .nav
            .lane_spacing_m
            .unwrap_or_else(|| crate::navigation::default_lane_spacing(&camera));

        // explicit objects
        let mut objects: Vec<WorldObject> = Vec::new();
        for spec in &self.objects {
            let class = ObjectClass::parse(&spec.class).ok_or_else(|| ScenarioError::BadObject {
                id: spec.id.clone(),
                reason: format!("unknown class `{}`", spec.class),
            })?;
            let (dr, dh, dm) = class_defaults(class);
            let obj = WorldObject {
                id: spec.id.clone(),
                center: (spec.x_m, spec.y_m),
                footprint_radius: spec.radius_m.unwrap_or(dr),
                height: spec.height_m.unwrap_or(dh),
                true_class: class,
                mass_kg: spec.mass_kg.unwrap_or(dm),
                picked: false,
            };
            if obj.footprint_radius <= 0.0 {
                return Err(ScenarioError::BadObject {
                    id: obj.id,
                    reason: "footprint radius must be positive".into(),
                });
            }
            if !boundary.contains(obj.center.0, obj.center.1) {
                return Err(ScenarioError::BadObject {
                    id: obj.id,
                    reason: "center lies outside the boundary polygon".into(),
                });
            }
            if class.is_garbage() && obj.mass_kg > 1.0 {
                return Err(ScenarioError::BadObject {
                    id: obj.id,
                    reason: format!("garbage mass {} kg exceeds the 1 kg gripper limit", obj.mass_kg),
                });
            }
            if objects.iter().any(|o| o.id == obj.id) {
                return Err(ScenarioError::BadObject {
                    id: obj.id,
                    reason: "duplicate object id".into(),
                });
            }
            objects.push(obj);
        }

        // random placement
        if let Some(placement) = &self.placement {
            let mut rng = ChaCha8Rng::seed_from_u64(placement.seed.unwrap_or(seed));
            // objects live on a separate stream so layouts pair across modes
            rng.set_stream(1);
            let distractors = placement.distractor_count.unwrap_or_else(|| {
                // roughly one distractor per nine garbage objects
                ((placement.garbage_count as f64) * 0.1 / 0.9).round() as u32
            });
            place_random_objects(
                &mut objects,
                placement.garbage_count,
                distractors,
                &boundary,
                &grid,
                &start,
                &mut rng,
            )?;
        }

        let world = World {
            grid,
            objects,
            robot: RobotState::at(start),
            v_max: self.robot.v_max_mps,
            omega_max: self.robot.omega_max_radps,
            robot_radius: self.robot.radius_m,
            ultrasonic_max_range: 3.0,
            sigma_ultrasonic: self.noise.sigma_ultrasonic_m,
        };

        Ok(BuiltScenario {
            world,
            camera,
            homography,
            confusion,
            noise,
            nav_params,
            lane_spacing,
            mode,
            seed,
            dt: self.sim.dt_s,
            budget_s: self.sim.budget_s,
            boundary,
        })
    }
}

fn place_random_objects<R: Rng>(
    objects: &mut Vec<WorldObject>,
    garbage_count: u32,
    distractor_count: u32,
    boundary: &Polygon,
    grid: &OccupancyGrid,
    start: &Pose2D,
    rng: &mut R,
) -> Result<(), ScenarioError> {
    let (min_x, min_y, max_x, max_y) = boundary.bbox();
    let total = garbage_count + distractor_count;
    let mut placed = 0u32;
    let mut attempts = 0usize;
    let max_attempts = 20_000 * total.max(1) as usize;
    while placed < total {
        attempts += 1;
        if attempts > max_attempts {
            return Err(ScenarioError::PlacementFailed((total - placed) as usize));
        }
        let x = rng.gen_range(min_x..max_x);
        let y = rng.gen_range(min_y..max_y);
        if !grid.is_free_world(x, y) {
            continue;
        }
        // stay clear of the start pose and of other objects
        let d_start = ((x - start.x).powi(2) + (y - start.y).powi(2)).sqrt();
        if d_start < 1.5 {
            continue;
        }
        if objects
            .iter()
            .any(|o| ((x - o.center.0).powi(2) + (y - o.center.1).powi(2)).sqrt() < 0.6)
        {
            continue;
        }
        let class = if placed < garbage_count {
            ObjectClass::Garbage(GARBAGE_CLASSES[rng.gen_range(0..GARBAGE_CLASSES.len())])
        } else {
            ObjectClass::NonGarbage(NON_GARBAGE_CLASSES[rng.gen_range(0..NON_GARBAGE_CLASSES.len())])
        };
        let (radius, height, mass) = class_defaults(class);
        let prefix = if class.is_garbage() { "g" } else { "d" };
        objects.push(WorldObject {
            id: format!("{prefix}{placed:03}"),
            center: (x, y),
            footprint_radius: radius,
            height,
            true_class: class,
            mass_kg: mass,
            picked: false,
        });
        placed += 1;
    }
    Ok(())
}

/// A ready-to-run desk-scale scenario used by tests and as a starting point
/// for handwritten files.
pub fn desk_scenario(seed: u64, mode: CoverageMode, garbage_count: u32) -> ScenarioConfig {
    ScenarioConfig {
        field: FieldSection {
            boundary_m: vec![(0.0, 0.0), (30.0, 0.0), (30.0, 25.0), (0.0, 25.0)],
            resolution_m: 0.25,
        },
        robot: RobotSection {
            start_pose: (2.0, 2.0, 0.0),
            v_max_mps: 0.5,
            omega_max_radps: 1.0,
            radius_m: 0.2,
        },
        sim: SimSection {
            dt_s: 0.1,
            mode,
            seed,
            budget_s: 5400.0,
        },
        camera: CameraSection::default(),
        noise: NoiseSection::default(),
        classifier: ClassifierSection::default(),
        placement: Some(PlacementSection {
            garbage_count,
            distractor_count: None,
            seed: None,
        }),
        objects: vec![],
        nav: NavSection::default(),
    }
}
