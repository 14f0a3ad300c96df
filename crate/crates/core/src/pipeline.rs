//! Session, trial, and experiment orchestration.
//!
//! Trial `τ` trains a fresh learner on sessions `1..=n` in order. Session
//! `t` sees only its bound training split; afterwards the learner is scored
//! on the bound test folds of sessions `1..=t` over `L_t`. An experiment runs
//! the `k` trials (in parallel unless deterministic mode is requested) and
//! averages them.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Sample, SessionSequence};
use crate::error::{Error, Result};
use crate::learners::{self, IncrementalLearner, LearnerConfig, LearnerKind};
use crate::metrics::{self, ExperimentReport};
use crate::rch::Rch;
use crate::rng;
use crate::split::{self, FoldAssignment, Protocol, TrialPlan};
use crate::synth::{self, SynthSpec};

/// Caps trial parallelism when set to a positive integer.
pub const THREADS_ENV: &str = "CDIL_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Synthetic(SynthSpec),
    /// Path to a manifest file.
    Manifest(PathBuf),
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic(SynthSpec::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    pub k: usize,
    pub learner: LearnerKind,
    pub learner_config: LearnerConfig,
    pub seed: u64,
    pub data: DataSource,
    pub out: Option<PathBuf>,
    /// Sequential trials with a fixed reduction order.
    pub deterministic: bool,
    /// Also write each trial's final head weights under `out/heads/`.
    pub dump_heads: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            protocol: Protocol::Slcv,
            k: 5,
            learner: LearnerKind::Prototype,
            learner_config: LearnerConfig::default(),
            seed: 0,
            data: DataSource::default(),
            out: None,
            deterministic: false,
            dump_heads: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::config(format!("k must be at least 2, got {}", self.k)));
        }
        self.learner_config.validate()
    }

    pub fn load_sequence(&self) -> Result<SessionSequence> {
        match &self.data {
            DataSource::Synthetic(spec) => synth::generate_stream(spec),
            DataSource::Manifest(path) => crate::io::load_sequence(path),
        }
    }

    /// Seed of every learner built for this experiment. It does not depend on
    /// the trial index, so trials differ only through their bound folds.
    pub fn learner_seed(&self) -> u64 {
        rng::derive_seed(self.seed, &[rng::tag::TRIAL])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceEval {
    pub session: usize,
    pub correct: u64,
    pub total: u64,
}

impl SourceEval {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

/// `A_t = C_t / T_t` after session `t`, with the counts it came from and a
/// breakdown by the session each test sample belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEval {
    pub session: usize,
    pub correct: u64,
    pub total: u64,
    pub accuracy: f64,
    pub by_source: Vec<SourceEval>,
}

impl SessionEval {
    #[cfg(test)]
    pub(crate) fn from_accuracy_for_tests(session: usize, accuracy: f64) -> Self {
        Self {
            session,
            correct: 0,
            total: 0,
            accuracy,
            by_source: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub sessions: Vec<SessionEval>,
}

impl TrialResult {
    pub fn accuracies(&self) -> Vec<f64> {
        self.sessions.iter().map(|s| s.accuracy).collect()
    }

    /// Accuracy on session `source`'s test fold as measured after session `after`.
    pub fn source_accuracy(&self, after: usize, source: usize) -> Option<f64> {
        self.sessions
            .get(after.checked_sub(1)?)?
            .by_source
            .iter()
            .find(|s| s.session == source)
            .map(SourceEval::accuracy)
    }
}

/// Trains `learner` on session `t`'s bound training split, then scores it
/// on the bound test folds of sessions `1..=t`.
pub fn run_session(
    learner: &mut dyn IncrementalLearner,
    seq: &SessionSequence,
    plan: &TrialPlan,
    t: usize,
) -> Result<SessionEval> {
    let session = seq.session(t)?;
    let split = plan.split(t)?;
    let train: Vec<&Sample> = session
        .samples()
        .iter()
        .filter(|s| split.train_ids.contains(&s.sample_id))
        .collect();
    let cumulative = seq.cumulative_label_space(t)?;
    learner.update(t, &train, session.label_set(), &cumulative)?;
    let known = learner.known_classes();
    if known != cumulative {
        return Err(Error::protocol(format!(
            "learner knows {known:?} after session {t}, expected {cumulative:?}"
        )));
    }

    let mut by_source = Vec::with_capacity(t);
    for i in 1..=t {
        let test_ids = &plan.split(i)?.test_ids;
        let mut eval = SourceEval {
            session: i,
            correct: 0,
            total: 0,
        };
        for s in seq.session(i)?.samples().iter().filter(|s| test_ids.contains(&s.sample_id)) {
            eval.total += 1;
            if learner.predict(&s.features)? == s.label {
                eval.correct += 1;
            }
        }
        by_source.push(eval);
    }
    let correct = by_source.iter().map(|s| s.correct).sum();
    let total: u64 = by_source.iter().map(|s| s.total).sum();
    if total == 0 {
        return Err(Error::protocol(format!(
            "session {t}: the cumulative test set is empty"
        )));
    }
    Ok(SessionEval {
        session: t,
        correct,
        total,
        accuracy: correct as f64 / total as f64,
        by_source,
    })
}

/// Runs sessions `1..=n` of trial `tau` on the given learner.
pub fn run_trial_with(
    learner: &mut dyn IncrementalLearner,
    seq: &SessionSequence,
    assignments: &[FoldAssignment],
    tau: usize,
) -> Result<TrialResult> {
    if assignments.len() != seq.len() {
        return Err(Error::protocol(format!(
            "{} fold assignments for {} sessions",
            assignments.len(),
            seq.len()
        )));
    }
    let plan = split::bind_folds(assignments, tau)?;
    let sessions = (1..=seq.len())
        .map(|t| run_session(learner, seq, &plan, t).map_err(|e| e.in_session(t)))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_trial(tau))?;
    Ok(TrialResult { trial: tau, sessions })
}

pub fn build_learner(cfg: &ExperimentConfig, seq: &SessionSequence) -> Result<Box<dyn IncrementalLearner>> {
    learners::build(cfg.learner, &cfg.learner_config, seq.feature_dim(), cfg.learner_seed())
}

/// Trial `tau` with a fresh learner built from `cfg`.
pub fn run_trial(
    cfg: &ExperimentConfig,
    seq: &SessionSequence,
    assignments: &[FoldAssignment],
    tau: usize,
) -> Result<TrialResult> {
    let mut learner = build_learner(cfg, seq)?;
    run_trial_with(learner.as_mut(), seq, assignments, tau)
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs all `k` trials over an already loaded sequence.
pub fn run_on_sequence(cfg: &ExperimentConfig, seq: &SessionSequence) -> Result<(ExperimentReport, Vec<Option<Rch>>)> {
    cfg.validate()?;
    let assignments = split::partition_sequence(seq, cfg.protocol, cfg.k, cfg.seed)?;
    let run_one = |tau: usize| -> Result<(TrialResult, Option<Rch>)> {
        let mut learner = build_learner(cfg, seq)?;
        let result = run_trial_with(learner.as_mut(), seq, &assignments, tau)?;
        log::info!(
            "{} {} trial {tau}/{}: Ā {:.4} Ã {:.4}",
            cfg.learner,
            cfg.protocol,
            cfg.k,
            metrics::average_accuracy(&result.accuracies())?,
            metrics::final_accuracy(&result.accuracies())?
        );
        Ok((result, learner.head().cloned()))
    };

    let outcomes: Vec<(TrialResult, Option<Rch>)> = if cfg.deterministic {
        (1..=cfg.k).map(run_one).collect::<Result<_>>()?
    } else {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = thread_cap() {
            builder = builder.num_threads(n);
        }
        let pool = builder
            .build()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?;
        pool.install(|| (1..=cfg.k).into_par_iter().map(run_one).collect::<Result<_>>())?
    };
    let (trials, heads): (Vec<_>, Vec<_>) = outcomes.into_iter().unzip();
    let mut report = metrics::aggregate(trials, cfg.k)?;
    report.config = serde_json::to_value(cfg).map_err(|e| Error::config(e.to_string()))?;
    Ok((report, heads))
}

/// Loads the data, runs every trial, and writes the report when `cfg.out` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let seq = cfg.load_sequence()?;
    log::info!(
        "{} sessions, {} samples, d = {}, {} classes",
        seq.len(),
        seq.sessions().iter().map(|s| s.len()).sum::<usize>(),
        seq.feature_dim(),
        seq.registry().len()
    );
    let (report, heads) = run_on_sequence(cfg, &seq)?;
    if let Some(out) = &cfg.out {
        crate::io::write_report(&report, out, &format!("{} / {}", cfg.learner, cfg.protocol))?;
        if cfg.dump_heads {
            for (tau, head) in heads.iter().enumerate() {
                if let Some(head) = head {
                    let path = out.join("heads").join(format!("trial_{}.csv", tau + 1));
                    crate::io::write_rch_csv(head, seq.registry(), &path)?;
                }
            }
        }
    }
    Ok(report)
}

/// `T_t`, the size of the evaluation set after each session of `plan`.
pub fn evaluation_sizes(plan: &TrialPlan) -> Vec<usize> {
    (1..=plan.splits.len())
        .map(|t| plan.cumulative_test_ids(t).map_or(0, |s| s.len()))
        .collect()
}
