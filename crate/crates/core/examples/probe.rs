use std::time::Instant;
use lawnbot::scenario::{desk_scenario, CoverageMode};
use lawnbot::perception::render_segmentation;
use lawnbot::navigation::cent_set;
use lawnbot::hough::hough_line;

fn main() {
    let built = desk_scenario(7, CoverageMode::Planned, 20).build(None, None).unwrap();
    let mut world = built.world;
    world.robot.pose = lawnbot::Pose2D::new(15.0, 12.5, 0.7);
    let pose = world.robot.pose;

    let t0 = Instant::now();
    for _ in 0..2000 {
        let _ = render_segmentation(&world, &pose, &built.camera, &built.homography);
    }
    println!("render: {:?}/call", t0.elapsed() / 2000);

    let frame = render_segmentation(&world, &pose, &built.camera, &built.homography);
    println!("contour vertices: {}", frame.ground_contour.vertices.len());

    let t0 = Instant::now();
    for _ in 0..2000 { let _ = cent_set(&frame, &built.camera); }
    println!("cent_set: {:?}/call", t0.elapsed() / 2000);

    let cent = cent_set(&frame, &built.camera);
    let pts: Vec<(f64,f64)> = cent.points.iter().map(|&(u,v)| (u, v as f64)).collect();
    println!("cent points: {}", pts.len());
    let t0 = Instant::now();
    for _ in 0..2000 { let _ = hough_line(&pts); }
    println!("hough_line: {:?}/call", t0.elapsed() / 2000);
}
