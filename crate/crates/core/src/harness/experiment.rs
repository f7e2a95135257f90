//! Planned-vs-random cleaning-efficiency experiments across seeds.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scenario::{CoverageMode, ScenarioConfig};

use super::episode::{run_episode, EpisodeError, RunOverrides};
use super::trace::EpisodeTrace;

/// Seeds below this count flag the aggregate statistics as unreliable.
pub const MIN_SEEDS_FOR_AGGREGATES: usize = 20;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub garbage_counts: Vec<u32>,
    pub seeds: Vec<u64>,
    /// Episode budget; defaults to the scenario's budget.
    pub budget_s: Option<f64>,
    /// Remaining-garbage curve sampling interval.
    pub curve_sample_s: f64,
    /// When set, per-episode trace CSVs are written под this directory.
    #[serde(skip)]
    pub trace_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn table_iv_design(seeds: Vec<u64>) -> Self {
        Self {
            garbage_counts: vec![20, 50],
            seeds,
            budget_s: None,
            curve_sample_s: 600.0,
            trace_dir: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub completed: bool,
    /// First time all garbage was accounted for, or the budget when the
    /// episode ran out of time.
    pub completion_s: f64,
    pub pickups: u32,
    pub pickup_failures: u32,
    pub wrong_pickups: u32,
    pub permanently_failed: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub mode: CoverageMode,
    pub garbage_count: u32,
    pub outcomes: Vec<SeedOutcome>,
    pub mean_completion_s: f64,
    /// (t_s, mean remaining garbage) sampled on the curve interval.
    pub curve: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedStats {
    pub garbage_count: u32,
    /// Fraction of seeds in which planned finished strictly earlier.
    pub planned_faster_fraction: f64,
    /// mean(random completion) / mean(planned completion).
    pub mean_ratio_random_over_planned: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seeds: Vec<u64>,
    pub budget_s: f64,
    pub cells: Vec<CellReport>,
    pub paired: Vec<PairedStats>,
    /// Set when fewer seeds ran than aggregate claims need.
    pub insufficient_for_aggregate_claims: bool,
}

impl ExperimentReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn cell(&self, mode: CoverageMode, garbage_count: u32) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.mode == mode && c.garbage_count == garbage_count)
    }

    /// Two-column `t_s,mean_remaining` CSV per cell.
    pub fn write_curve_files(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for cell in &self.cells {
            let path = dir.join(format!(
                "curve_{}_{}.csv",
                cell.mode.name(),
                cell.garbage_count
            ));
            let mut text = String::from("t_s,mean_remaining\n");
            for &(t, rem) in &cell.curve {
                text.push_str(&format!("{t},{rem}\n"));
            }
            std::fs::write(&path, text)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Remaining-garbage value at time `t` in a trace (ticks are dt-spaced, so
/// this is the last record at or before `t`; after termination the final
/// value holds).
fn remaining_at(trace: &EpisodeTrace, t: f64) -> f64 {
    if trace.records.is_empty() {
        return 0.0;
    }
    let mut last = trace.summary.initial_garbage as f64;
    for r in &trace.records {
        if r.t_s > t {
            return last;
        }
        last = r.remaining as f64;
    }
    last
}

/// Runs the full design: every garbage count x {planned, random} x seed.
/// Episodes run in parallel; each owns its rng, and aggregation sorts by
/// seed, so the report does not depend on scheduling.
pub fn run_experiment(
    base: &ScenarioConfig,
    spec: &ExperimentSpec,
) -> Result<ExperimentReport, EpisodeError> {
    let budget_s = spec.budget_s.unwrap_or(base.sim.budget_s);
    let mut jobs: Vec<(u32, CoverageMode, u64)> = Vec::new();
    for &count in &spec.garbage_counts {
        for mode in [CoverageMode::Planned, CoverageMode::Random] {
            for &seed in &spec.seeds {
                jobs.push((count, mode, seed));
            }
        }
    }

    let results: Vec<((u32, CoverageMode, u64), Result<EpisodeTrace, EpisodeError>)> = jobs
        .par_iter()
        .map(|&(count, mode, seed)| {
            let mut cfg = base.clone();
            match cfg.placement.as_mut() {
                Some(p) => {
                    p.garbage_count = count;
                    p.distractor_count = None;
                }
                None => {
                    cfg.placement = Some(crate::scenario::PlacementSection {
                        garbage_count: count,
                        distractor_count: None,
                        seed: None,
                    });
                }
            }
            let ov = RunOverrides {
                seed: Some(seed),
                mode: Some(mode),
                budget_s: Some(budget_s),
            };
            let trace = run_episode(&cfg, &ov);
            if let (Ok(trace), Some(dir)) = (&trace, &spec.trace_dir) {
                let stem = format!("{}_{}_seed{}_", mode.name(), count, seed);
                let _ = trace.write_csv(dir, &stem);
            }
            ((count, mode, seed), trace)
        })
        .collect();

    let mut cells: Vec<CellReport> = Vec::new();
    let curve_len = (budget_s / spec.curve_sample_s).floor() as usize + 1;
    for &count in &spec.garbage_counts {
        for mode in [CoverageMode::Planned, CoverageMode::Random] {
            let mut outcomes: Vec<SeedOutcome> = Vec::new();
            let mut curve_sum = vec![0.0f64; curve_len];
            for ((c, m, seed), trace) in &results {
                if *c != count || *m != mode {
                    continue;
                }
                let trace = match trace {
                    Ok(t) => t,
                    Err(e) => {
                        return Err(EpisodeError::Invariant(format!(
                            "episode (count {count}, {} seed {seed}) failed: {e}",
                            mode.name()
                        )))
                    }
                };
                outcomes.push(SeedOutcome {
                    seed: *seed,
                    completed: trace.summary.completed,
                    completion_s: trace.summary.completion_t_s.unwrap_or(budget_s),
                    pickups: trace.summary.pickups,
                    pickup_failures: trace.summary.pickup_failures,
                    wrong_pickups: trace.summary.wrong_pickups,
                    permanently_failed: trace.summary.permanently_failed,
                });
                for (i, slot) in curve_sum.iter_mut().enumerate() {
                    *slot += remaining_at(trace, i as f64 * spec.curve_sample_s);
                }
            }
            outcomes.sort_by_key(|o| o.seed);
            let n = outcomes.len().max(1) as f64;
            let mean_completion_s = outcomes.iter().map(|o| o.completion_s).sum::<f64>() / n;
            let curve = curve_sum
                .iter()
                .enumerate()
                .map(|(i, &s)| (i as f64 * spec.curve_sample_s, s / n))
                .collect();
            cells.push(CellReport {
                mode,
                garbage_count: count,
                outcomes,
                mean_completion_s,
                curve,
            });
        }
    }

    let mut paired = Vec::new();
    for &count in &spec.garbage_counts {
        let planned = cells
            .iter()
            .find(|c| c.garbage_count == count && c.mode == CoverageMode::Planned)
            .expect("planned cell exists");
        let random = cells
            .iter()
            .find(|c| c.garbage_count == count && c.mode == CoverageMode::Random)
            .expect("random cell exists");
        let mut faster = 0usize;
        let mut total = 0usize;
        for (p, r) in planned.outcomes.iter().zip(random.outcomes.iter()) {
            debug_assert_eq!(p.seed, r.seed);
            total += 1;
            if p.completion_s < r.completion_s {
                faster += 1;
            }
        }
        paired.push(PairedStats {
            garbage_count: count,
            planned_faster_fraction: faster as f64 / total.max(1) as f64,
            mean_ratio_random_over_planned: random.mean_completion_s
                / planned.mean_completion_s,
        });
    }

    Ok(ExperimentReport {
        seeds: spec.seeds.clone(),
        budget_s,
        cells,
        paired,
        insufficient_for_aggregate_claims: spec.seeds.len() < MIN_SEEDS_FOR_AGGREGATES,
    })
}
