use lawnbot::camera::{build_homography, CameraModel};
use lawnbot::geometry::{Polygon, Pose2D};
use lawnbot::grid::{is_inside_map, OccupancyGrid};
use lawnbot::navigation::{navigation_step, NavContext, NavMode, NavParams, NavState};
use lawnbot::perception::{render_segmentation, ConfusionModel};
use lawnbot::world::{RobotState, World};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let cam = CameraModel::default_robot_camera();
    let hom = build_homography(&cam).unwrap();
    let confusion = ConfusionModel::default();
    let params = NavParams::default();
    let mut seed_rng = ChaCha8Rng::seed_from_u64(777);
    for episode in 0..=11 {
        let (x, y) = match episode % 4 {
            0 => (-0.08, seed_rng.gen_range(3.0..22.0)),
            1 => (30.08, seed_rng.gen_range(3.0..22.0)),
            2 => (seed_rng.gen_range(3.0..27.0), -0.08),
            _ => (seed_rng.gen_range(3.0..27.0), 25.08),
        };
        let theta = seed_rng.gen_range(-3.14..3.14);
        if episode < 11 { continue; }
        println!("episode {episode}: start ({x:.3}, {y:.3}, {theta:.3})");
        let boundary = Polygon::new(vec![(0.0, 0.0), (30.0, 0.0), (30.0, 25.0), (0.0, 25.0)]);
        let mut world = World {
            grid: OccupancyGrid::from_boundary(&boundary, 0.25),
            objects: vec![],
            robot: RobotState::at(Pose2D::new(x, y, theta)),
            v_max: 0.5, omega_max: 1.0, robot_radius: 0.2,
            ultrasonic_max_range: 3.0, sigma_ultrasonic: 0.0,
        };
        let ctx = NavContext { cam: &cam, hom: &hom, confusion: &confusion, waypoints: &[], params: &params, dt: 0.1, planned: false };
        let mut nav = NavState::new();
        let mut rng = ChaCha8Rng::seed_from_u64(9000 + episode as u64);
        for step in 0..200 {
            let pose = world.robot.pose;
            if is_inside_map(&world.grid, &pose) && nav.mode != NavMode::Return { break; }
            let frame = render_segmentation(&world, &pose, &cam, &hom);
            let out = navigation_step(&mut world, &pose, &frame, &mut nav, &ctx, &mut rng);
            world.step(out.cmd, 0.1);
            let p = world.robot.pose;
            let d = world.grid.distance_to_free(p.x, p.y);
            println!("step {step}: pose ({:.4}, {:.4}, {:.4}) cmd ({:.2}, {:.2}) heading {:?} d {:.6}",
                p.x, p.y, p.theta, out.cmd.v, out.cmd.omega, nav.committed_heading, d);
            if step > 40 { break; }
        }
    }
}
