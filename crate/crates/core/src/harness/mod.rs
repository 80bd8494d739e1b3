//! Episode protocols, metrics, failure categories and suite reports.

mod episode;
mod failure;
pub mod metrics;
mod suite;

pub use episode::{EpisodeRecord, EpisodeResult, GoalResult, GoalRun, Harness, HarnessConfig};
pub use failure::{classify_failure, FailureCategory, FailureEvidence};
pub use metrics::{AnswerMode, MetricError};
pub use suite::{read_results_csv, EpisodeJob, HarnessError, SuiteReport, SuiteRun, TaskAggregate};
