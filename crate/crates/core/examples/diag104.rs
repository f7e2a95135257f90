use lawnbot::scenario::{desk_scenario, CoverageMode};
use lawnbot::navigation::{coverage_waypoints, default_lane_spacing};

fn main() {
    let built = desk_scenario(104, CoverageMode::Planned, 20).build(None, None).unwrap();
    println!("spacing {}", default_lane_spacing(&built.camera));
    let wps = coverage_waypoints(&built.world.grid, built.lane_spacing);
    let mut lane_ys: Vec<f64> = wps.iter().map(|p| p.y).collect();
    lane_ys.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    println!("lanes: {lane_ys:?}");
    for o in &built.world.objects {
        let nearest = lane_ys.iter().map(|y| (y - o.center.1).abs()).fold(f64::INFINITY, f64::min);
        println!("{} {} at ({:.2}, {:.2}) lane_dist {:.2}", o.id, o.true_class.name(), o.center.0, o.center.1, nearest);
    }
}
