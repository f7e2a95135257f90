//! Deterministic 2D simulator and library for a grass-cleaning robot.
//!
//! The crate models a differential-drive robot on a bounded lawn that finds
//! litter with a camera, approaches it with an image-space servo loop,
//! classifies it with a confusion-matrix stub, picks it up with a timed
//! stochastic manipulator action, and covers the field either along planned
//! boustrophedon lanes or by segmentation-guided wandering. Localization
//! fuses noisy odometry with intermittent GPS through a planar EKF. Every
//! run is a pure function of its scenario and seed.

pub mod camera;
pub mod frame_file;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod hough;
pub mod localization;
pub mod navigation;
pub mod perception;
pub mod scenario;
pub mod tracker;
pub mod world;

pub use camera::{build_homography, CameraModel, GroundHomography};
pub use geometry::{normalize_angle, Polygon, Pose2D};
pub use grid::{is_inside_map, ray_free, OccupancyGrid};
pub use harness::{run_episode, run_experiment, EpisodeTrace, RunOverrides};
pub use hough::{hough_line, PolarLine};
pub use scenario::{CoverageMode, ScenarioConfig};
pub use world::{step_kinematics, ultrasonic_range, DriveCommand, RobotState, World, WorldObject};
