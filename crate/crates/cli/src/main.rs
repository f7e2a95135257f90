//! Command-line front end for the lawnbot simulator.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime invariant
//! violation, 4 no feasible direction, 1 anything else.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lawnbot::camera::CameraModel;
use lawnbot::frame_file;
use lawnbot::harness::{run_episode, run_experiment, EpisodeError, ExperimentSpec, RunOverrides};
use lawnbot::navigation::find_optimal_direction;
use lawnbot::perception::ObjectBox;
use lawnbot::scenario::{CoverageMode, ScenarioConfig};
use lawnbot::tracker::{compute_offsets, tracking_command};

const EXIT_CONFIG: u8 = 2;
const EXIT_INVARIANT: u8 = 3;
const EXIT_NO_DIRECTION: u8 = 4;

#[derive(Parser)]
#[command(
    name = "lawnbot",
    about = "Deterministic grass-cleaning robot simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and write its trace CSVs.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Episode seed (overrides the scenario file).
        #[arg(long)]
        seed: u64,
        /// Coverage mode override: planned | random.
        #[arg(long)]
        mode: Option<String>,
        /// Simulated-time budget in seconds.
        #[arg(long)]
        budget: Option<f64>,
        /// Output directory (default: $LAWNBOT_OUT_DIR or ./out).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the planned-vs-random experiment grid and write the report.
    Experiment {
        #[arg(long)]
        scenario: PathBuf,
        /// Base seed; episodes use seed, seed+1, ...
        #[arg(long)]
        seed: u64,
        /// Number of seeds per cell.
        #[arg(long, default_value_t = 20)]
        seeds: u32,
        /// Comma-separated garbage counts.
        #[arg(long, default_value = "20,50")]
        garbage: String,
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write per-episode trace CSVs.
        #[arg(long, default_value_t = false)]
        write_traces: bool,
    },
    /// Fit the optimal direction for a single frame file and print it.
    Direction {
        #[arg(long)]
        frame: PathBuf,
    },
    /// Compute the tracking command for one object box (debugging).
    Track {
        /// Box corners as u_tl,v_tl,u_br,v_br in pixels.
        #[arg(long = "box")]
        box_px: String,
        #[arg(long, default_value_t = 0.5)]
        v_max: f64,
        #[arg(long, default_value_t = 1.0)]
        omega_max: f64,
    },
    /// Validate a scenario file without running it.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
        /// Write the rasterized occupancy grid as ASCII PGM.
        #[arg(long)]
        dump_grid: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            scenario,
            seed,
            mode,
            budget,
            out,
        } => cmd_run(&scenario, seed, mode.as_deref(), budget, out),
        Command::Experiment {
            scenario,
            seed,
            seeds,
            garbage,
            budget,
            out,
            write_traces,
        } => cmd_experiment(&scenario, seed, seeds, &garbage, budget, out, write_traces),
        Command::Direction { frame } => cmd_direction(&frame),
        Command::Track {
            box_px,
            v_max,
            omega_max,
        } => cmd_track(&box_px, v_max, omega_max),
        Command::Validate {
            scenario,
            dump_grid,
        } => cmd_validate(&scenario, dump_grid),
    }
}

fn out_dir(cli_value: Option<PathBuf>) -> PathBuf {
    cli_value
        .or_else(|| std::env::var_os("LAWNBOT_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn parse_mode(s: &str) -> Result<CoverageMode, String> {
    CoverageMode::parse(s).ok_or_else(|| format!("unknown mode `{s}` (expected planned|random)"))
}

fn load_scenario(path: &Path) -> Result<ScenarioConfig, ExitCode> {
    ScenarioConfig::load(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_CONFIG)
    })
}

fn cmd_run(
    scenario: &Path,
    seed: u64,
    mode: Option<&str>,
    budget: Option<f64>,
    out: Option<PathBuf>,
) -> ExitCode {
    let cfg = match load_scenario(scenario) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let mode = match mode.map(parse_mode).transpose() {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let ov = RunOverrides {
        seed: Some(seed),
        mode,
        budget_s: budget,
    };
    let trace = match run_episode(&cfg, &ov) {
        Ok(t) => t,
        Err(EpisodeError::Config(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(EpisodeError::Invariant(e)) => {
            eprintln!("error: invariant violation: {e}");
            return ExitCode::from(EXIT_INVARIANT);
        }
    };
    let dir = out_dir(out);
    if let Err(e) = trace.write_csv(&dir, "") {
        eprintln!("error: cannot write traces to {}: {e}", dir.display());
        return ExitCode::FAILURE;
    }
    let s = &trace.summary;
    println!(
        "completed={} sim_time_s={} completion_s={} pickups={} failures={} wrong_pickups={} permanently_failed={} out={}",
        s.completed,
        s.sim_time_s,
        s.completion_t_s.map_or("-".to_string(), |t| t.to_string()),
        s.pickups,
        s.pickup_failures,
        s.wrong_pickups,
        s.permanently_failed,
        dir.display()
    );
    ExitCode::SUCCESS
}

fn cmd_experiment(
    scenario: &Path,
    seed: u64,
    seeds: u32,
    garbage: &str,
    budget: Option<f64>,
    out: Option<PathBuf>,
    write_traces: bool,
) -> ExitCode {
    let cfg = match load_scenario(scenario) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let counts: Result<Vec<u32>, _> = garbage.split(',').map(|s| s.trim().parse()).collect();
    let counts = match counts {
        Ok(c) if !c.is_empty() => c,
        _ => {
            eprintln!("error: --garbage must be a comma-separated list of counts");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if seeds == 0 {
        eprintln!("error: --seeds must be at least 1");
        return ExitCode::from(EXIT_CONFIG);
    }
    let dir = out_dir(out);
    let spec = ExperimentSpec {
        garbage_counts: counts,
        seeds: (0..seeds as u64).map(|i| seed + i).collect(),
        budget_s: budget,
        curve_sample_s: 600.0,
        trace_dir: write_traces.then(|| dir.join("traces")),
    };
    let report = match run_experiment(&cfg, &spec) {
        Ok(r) => r,
        Err(EpisodeError::Config(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(EpisodeError::Invariant(e)) => {
            eprintln!("error: invariant violation: {e}");
            return ExitCode::from(EXIT_INVARIANT);
        }
    };

    if let Err(e) = std::fs::create_dir_all(&dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return ExitCode::FAILURE;
    }
    let report_path = dir.join("report.json");
    if let Err(e) = std::fs::write(&report_path, report.to_json_string()) {
        eprintln!("error: cannot write {}: {e}", report_path.display());
        return ExitCode::FAILURE;
    }
    if let Err(e) = report.write_curve_files(&dir) {
        eprintln!("error: cannot write curves: {e}");
        return ExitCode::FAILURE;
    }

    println!("garbage  planned_mean_s  random_mean_s  ratio_r/p  planned_faster_frac");
    for p in &report.paired {
        let planned = report
            .cell(CoverageMode::Planned, p.garbage_count)
            .map_or(f64::NAN, |c| c.mean_completion_s);
        let random = report
            .cell(CoverageMode::Random, p.garbage_count)
            .map_or(f64::NAN, |c| c.mean_completion_s);
        println!(
            "{:<8} {:<15.1} {:<14.1} {:<10.3} {:.2}",
            p.garbage_count,
            planned,
            random,
            p.mean_ratio_random_over_planned,
            p.planned_faster_fraction
        );
    }
    if report.insufficient_for_aggregate_claims {
        println!("note: insufficient for aggregate claims (fewer than 20 seeds)");
    }
    println!("report: {}", report_path.display());
    ExitCode::SUCCESS
}

fn cmd_direction(frame_path: &Path) -> ExitCode {
    let text = match std::fs::read_to_string(frame_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", frame_path.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let frame = match frame_file::parse_frame(&text) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let cam = CameraModel::default_robot_camera();
    let hom = match lawnbot::camera::build_homography(&cam) {
        Ok(h) => h,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match find_optimal_direction(&frame, &hom, &cam) {
        Ok(fit) => {
            for &(u, v) in &fit.cent.points {
                println!("cent {u} {v}");
            }
            println!(
                "line rho={} theta_deg={}",
                fit.line.rho,
                fit.line.theta_img.to_degrees()
            );
            println!("heading_deg={}", fit.heading.to_degrees());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_NO_DIRECTION)
        }
    }
}

fn cmd_track(box_px: &str, v_max: f64, omega_max: f64) -> ExitCode {
    let parts: Vec<&str> = box_px.split(',').map(|s| s.trim()).collect();
    if parts.len() != 4 {
        eprintln!("error: --box expects u_tl,v_tl,u_br,v_br");
        return ExitCode::from(EXIT_CONFIG);
    }
    let vals: Result<Vec<u32>, _> = parts.iter().map(|s| s.parse()).collect();
    let vals = match vals {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: bad box coordinate: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let (u_tl, v_tl, u_br, v_br) = (vals[0], vals[1], vals[2], vals[3]);
    if u_br < u_tl || v_br < v_tl {
        eprintln!("error: box corners are not ordered");
        return ExitCode::from(EXIT_CONFIG);
    }
    let cam = CameraModel::default_robot_camera();
    if v_br >= cam.height_px || u_br >= cam.width_px {
        eprintln!("error: box exceeds the {}x{} image", cam.width_px, cam.height_px);
        return ExitCode::from(EXIT_CONFIG);
    }
    let b = ObjectBox {
        object_id: "cli".into(),
        u_tl,
        v_tl,
        u_br,
        v_br,
    };
    let (du, dv) = compute_offsets(&b, &cam);
    let cmd = tracking_command(du, dv, v_max, omega_max, &cam);
    println!(
        "du={du} dv={dv} v_mps={} omega_radps={} arrived={}",
        cmd.v, cmd.omega, cmd.arrived
    );
    ExitCode::SUCCESS
}

fn cmd_validate(scenario: &Path, dump_grid: Option<PathBuf>) -> ExitCode {
    let cfg = match load_scenario(scenario) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let built = match cfg.build(None, None) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(path) = dump_grid {
        if let Err(e) = std::fs::write(&path, built.world.grid.to_pgm_ascii()) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::FAILURE;
        }
        println!("grid: {}", path.display());
    }
    let garbage = built
        .world
        .objects
        .iter()
        .filter(|o| o.true_class.is_garbage())
        .count();
    println!(
        "scenario ok: mode={} seed={} objects={} (garbage={}) free_cells={} dt_s={}",
        built.mode.name(),
        built.seed,
        built.world.objects.len(),
        garbage,
        built.world.grid.free_cell_count(),
        built.dt
    );
    ExitCode::SUCCESS
}
