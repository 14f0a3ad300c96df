//! Benchmark engine for composite class-domain incremental learning.
//!
//! A run walks an ordered stream of session datasets. Every session is split
//! into `k` folds (by subject or by instance), fold `τ` is bound across all
//! sessions to form trial `τ`, and a learner is trained session by session
//! through a remappable classification head. After session `t` the learner is
//! scored on the union of the bound test folds of sessions `1..=t`, over the
//! cumulative label space seen so far.
//!
//! Module map:
//!
//! * [`data`]: samples, sessions, label registry, cumulative label spaces.
//! * [`split`]: subject-level and instance-level fold assignment, fold binding.
//! * [`rch`]: per-session head groups, summation remap, softmax prediction.
//! * [`learners`]: the fine-tune and random-projection prototype learners.
//! * [`pipeline`]: session, trial, and experiment orchestration.
//! * [`metrics`]: final/average accuracy and trial aggregation.
//! * [`synth`]: synthetic Gaussian session streams with domain and subject shift.
//! * [`io`]: manifest and feature CSV ingestion, report and dump emitters.

pub mod data;
pub mod error;
pub mod io;
pub mod learners;
pub mod math;
pub mod metrics;
pub mod pipeline;
pub mod rch;
pub mod rng;
pub mod split;
pub mod synth;

pub use data::{LabelRegistry, Sample, SessionDataset, SessionSequence};
pub use error::{Error, Result};
pub use learners::{IncrementalLearner, LearnerConfig, LearnerKind};
pub use metrics::ExperimentReport;
pub use pipeline::{ExperimentConfig, SessionEval, TrialResult};
pub use rch::{InitSpec, Rch};
pub use split::{FoldAssignment, Protocol, TrialPlan};
pub use synth::SynthSpec;
