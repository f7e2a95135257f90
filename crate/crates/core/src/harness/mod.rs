//! Episode runner and cleaning-efficiency experiments.

pub mod episode;
pub mod experiment;
pub mod trace;

pub use episode::{run_episode, EpisodeError, RunOverrides};
pub use experiment::{run_experiment, ExperimentReport, ExperimentSpec};
pub use trace::{EpisodeSummary, EpisodeTrace, EventKind, EventRecord, TickRecord};
