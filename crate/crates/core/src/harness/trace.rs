//! Episode traces: per-tick records, event log, CSV round trip.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::Pose2D;
use crate::navigation::NavMode;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub t_s: f64,
    pub true_pose: Pose2D,
    pub est_pose: Pose2D,
    pub mode: NavMode,
    pub v: f64,
    pub omega: f64,
    /// Garbage still pickable (not collected, not written off).
    pub remaining: u32,
    /// Garbage collected so far.
    pub picked: u32,
    /// Garbage permanently written off (mis-recognized or attempts
    /// exhausted).
    pub failed: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    PickupSuccess,
    PickupFailure,
    Avoid,
    BoundaryExit,
    EmergencyStop,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::PickupSuccess => "pickup_success",
            EventKind::PickupFailure => "pickup_failure",
            EventKind::Avoid => "avoid",
            EventKind::BoundaryExit => "boundary_exit",
            EventKind::EmergencyStop => "emergency_stop",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "pickup_success" => EventKind::PickupSuccess,
            "pickup_failure" => EventKind::PickupFailure,
            "avoid" => EventKind::Avoid,
            "boundary_exit" => EventKind::BoundaryExit,
            "emergency_stop" => EventKind::EmergencyStop,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub t_s: f64,
    pub kind: EventKind,
    pub object_id: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    /// All garbage accounted for (picked or permanently failed).
    pub completed: bool,
    /// First time at which nothing pickable remained.
    pub completion_t_s: Option<f64>,
    pub sim_time_s: f64,
    pub initial_garbage: u32,
    pub pickups: u32,
    pub pickup_failures: u32,
    /// Non-garbage objects mistakenly collected.
    pub wrong_pickups: u32,
    pub permanently_failed: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub records: Vec<TickRecord>,
    pub events: Vec<EventRecord>,
    pub summary: EpisodeSummary,
}

pub const TICKS_HEADER: &str =
    "t_s,x_m,y_m,theta_rad,est_x_m,est_y_m,est_theta_rad,mode,v_mps,omega_radps,remaining,picked,failed";
pub const EVENTS_HEADER: &str = "t_s,kind,object_id";

impl EpisodeTrace {
    pub fn ticks_csv(&self) -> String {
        let mut out = String::with_capacity(self.records.len() * 96 + 128);
        out.push_str(TICKS_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.t_s,
                r.true_pose.x,
                r.true_pose.y,
                r.true_pose.theta,
                r.est_pose.x,
                r.est_pose.y,
                r.est_pose.theta,
                r.mode.name(),
                r.v,
                r.omega,
                r.remaining,
                r.picked,
                r.failed
            ));
        }
        out
    }

    pub fn events_csv(&self) -> String {
        let mut out = String::with_capacity(self.events.len() * 32 + 32);
        out.push_str(EVENTS_HEADER);
        out.push('\n');
        for e in &self.events {
            out.push_str(&format!(
                "{},{},{}\n",
                e.t_s,
                e.kind.name(),
                e.object_id.as_deref().unwrap_or("")
            ));
        }
        out
    }

    /// Writes `ticks.csv` and `events.csv` under `dir`.
    pub fn write_csv(&self, dir: &Path, stem: &str) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut f = std::fs::File::create(dir.join(format!("{stem}ticks.csv")))?;
        f.write_all(self.ticks_csv().as_bytes())?;
        let mut f = std::fs::File::create(dir.join(format!("{stem}events.csv")))?;
        f.write_all(self.events_csv().as_bytes())?;
        Ok(())
    }
}

fn bad_line(file: &str, line_no: usize, why: impl std::fmt::Display) -> String {
    format!("{file}:{line_no}: {why}")
}

/// Parses a `ticks.csv` produced by [`EpisodeTrace::ticks_csv`].
pub fn parse_ticks_csv(text: &str) -> Result<Vec<TickRecord>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TICKS_HEADER => {}
        other => return Err(format!("unexpected ticks header: {other:?}")),
    }
    let mut out = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 13 {
            return Err(bad_line("ticks.csv", idx + 2, "expected 13 columns"));
        }
        let f = |i: usize| -> Result<f64, String> {
            cols[i]
                .parse()
                .map_err(|e| bad_line("ticks.csv", idx + 2, format!("column {i}: {e}")))
        };
        let u = |i: usize| -> Result<u32, String> {
            cols[i]
                .parse()
                .map_err(|e| bad_line("ticks.csv", idx + 2, format!("column {i}: {e}")))
        };
        out.push(TickRecord {
            t_s: f(0)?,
            true_pose: Pose2D {
                x: f(1)?,
                y: f(2)?,
                theta: f(3)?,
            },
            est_pose: Pose2D {
                x: f(4)?,
                y: f(5)?,
                theta: f(6)?,
            },
            mode: NavMode::parse(cols[7])
                .ok_or_else(|| bad_line("ticks.csv", idx + 2, "unknown mode"))?,
            v: f(8)?,
            omega: f(9)?,
            remaining: u(10)?,
            picked: u(11)?,
            failed: u(12)?,
        });
    }
    Ok(out)
}

/// Parses an `events.csv` produced by [`EpisodeTrace::events_csv`].
pub fn parse_events_csv(text: &str) -> Result<Vec<EventRecord>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == EVENTS_HEADER => {}
        other => return Err(format!("unexpected events header: {other:?}")),
    }
    let mut out = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.splitn(3, ',').collect();
        if cols.len() != 3 {
            return Err(bad_line("events.csv", idx + 2, "expected 3 columns"));
        }
        out.push(EventRecord {
            t_s: cols[0]
                .parse()
                .map_err(|e| bad_line("events.csv", idx + 2, format!("t_s: {e}")))?,
            kind: EventKind::parse(cols[1])
                .ok_or_else(|| bad_line("events.csv", idx + 2, "unknown event kind"))?,
            object_id: if cols[2].is_empty() {
                None
            } else {
                Some(cols[2].to_string())
            },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let trace = EpisodeTrace {
            records: vec![TickRecord {
                t_s: 0.30000000000000004,
                true_pose: Pose2D::new(1.0 / 3.0, -2.75, 0.1),
                est_pose: Pose2D::new(0.3333333333333, -2.7499999, 0.1000001),
                mode: NavMode::Track,
                v: 0.22812500000000002,
                omega: -0.015625,
                remaining: 19,
                picked: 1,
                failed: 0,
            }],
            events: vec![
                EventRecord {
                    t_s: 0.2,
                    kind: EventKind::PickupSuccess,
                    object_id: Some("g003".into()),
                },
                EventRecord {
                    t_s: 0.3,
                    kind: EventKind::BoundaryExit,
                    object_id: None,
                },
            ],
            summary: EpisodeSummary {
                completed: false,
                completion_t_s: None,
                sim_time_s: 0.3,
                initial_garbage: 20,
                pickups: 1,
                pickup_failures: 0,
                wrong_pickups: 0,
                permanently_failed: 0,
            },
        };
        let ticks = parse_ticks_csv(&trace.ticks_csv()).unwrap();
        assert_eq!(ticks, trace.records);
        let events = parse_events_csv(&trace.events_csv()).unwrap();
        assert_eq!(events, trace.events);
    }
}
