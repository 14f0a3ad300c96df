//! Subject-level (SLCV) and instance-level (ILCV) fold assignment, and fold
//! binding across sessions.
//!
//! Both partitioners shuffle their units (subjects, or samples) with a
//! [`crate::rng::StreamRng`] seeded from the fold seed, then deal unit `i` to
//! fold `(i mod k) + 1`. Fold sizes therefore differ by at most one unit.
//! SLCV shuffles subjects in sorted-id order; ILCV shuffles samples in the
//! order they appear in the session. The shuffle is `rand`'s Fisher-Yates
//! implementation, so assignments are stable for a pinned `rand` release.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::data::{SessionDataset, SessionSequence};
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// Folds partition subjects.
    Slcv,
    /// Folds partition individual samples.
    Ilcv,
}

impl Protocol {
    fn tag(self) -> u64 {
        match self {
            Protocol::Slcv => rng::tag::FOLD_SLCV,
            Protocol::Ilcv => rng::tag::FOLD_ILCV,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Slcv => "slcv",
            Protocol::Ilcv => "ilcv",
        })
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "slcv" => Ok(Protocol::Slcv),
            "ilcv" => Ok(Protocol::Ilcv),
            other => Err(Error::config(format!("unknown protocol `{other}`"))),
        }
    }
}

/// Per-session fold seed, independent across sessions and protocols.
pub fn fold_seed(experiment_seed: u64, session_index: usize, protocol: Protocol) -> u64 {
    rng::derive_seed(experiment_seed, &[protocol.tag(), session_index as u64])
}

/// Sample-to-fold map of one session. Folds are numbered `1..=k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub session_index: usize,
    pub k: usize,
    pub mode: Protocol,
    pub seed: u64,
    pub fold_of: BTreeMap<String, usize>,
}

impl FoldAssignment {
    pub fn fold(&self, tau: usize) -> BTreeSet<&str> {
        self.fold_of
            .iter()
            .filter(|(_, &f)| f == tau)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    /// Number of samples in each fold, index 0 holding fold 1.
    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in self.fold_of.values() {
            sizes[f - 1] += 1;
        }
        sizes
    }
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::config(format!("k must be at least 2, got {k}")));
    }
    Ok(())
}

fn deal<T>(mut units: Vec<T>, k: usize, seed: u64) -> impl Iterator<Item = (T, usize)> {
    let mut rng = StreamRng::seed_from_u64(seed);
    units.shuffle(&mut rng);
    units.into_iter().enumerate().map(move |(i, u)| (u, i % k + 1))
}

pub fn slcv_partition(session: &SessionDataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    check_k(k)?;
    let subjects: Vec<&str> = session.subjects().iter().map(String::as_str).collect();
    if subjects.len() < k {
        return Err(Error::config(format!(
            "session {}: fewer subjects than folds ({} < {k})",
            session.session_index(),
            subjects.len()
        )));
    }
    let subject_fold: BTreeMap<&str, usize> = deal(subjects, k, seed).collect();
    let fold_of = session
        .samples()
        .iter()
        .map(|s| (s.sample_id.clone(), subject_fold[s.subject_id.as_str()]))
        .collect();
    Ok(FoldAssignment {
        session_index: session.session_index(),
        k,
        mode: Protocol::Slcv,
        seed,
        fold_of,
    })
}

pub fn ilcv_partition(session: &SessionDataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    check_k(k)?;
    if session.len() < k {
        return Err(Error::config(format!(
            "session {}: fewer samples than folds ({} < {k})",
            session.session_index(),
            session.len()
        )));
    }
    let ids: Vec<String> = session.samples().iter().map(|s| s.sample_id.clone()).collect();
    Ok(FoldAssignment {
        session_index: session.session_index(),
        k,
        mode: Protocol::Ilcv,
        seed,
        fold_of: deal(ids, k, seed).collect(),
    })
}

pub fn partition(
    session: &SessionDataset,
    protocol: Protocol,
    k: usize,
    seed: u64,
) -> Result<FoldAssignment> {
    match protocol {
        Protocol::Slcv => slcv_partition(session, k, seed),
        Protocol::Ilcv => ilcv_partition(session, k, seed),
    }
}

/// Partitions every session of `seq` with seeds derived from `experiment_seed`.
pub fn partition_sequence(
    seq: &SessionSequence,
    protocol: Protocol,
    k: usize,
    experiment_seed: u64,
) -> Result<Vec<FoldAssignment>> {
    seq.sessions()
        .iter()
        .map(|s| {
            let seed = fold_seed(experiment_seed, s.session_index(), protocol);
            partition(s, protocol, k, seed)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSplit {
    pub session_index: usize,
    pub train_ids: BTreeSet<String>,
    pub test_ids: BTreeSet<String>,
}

/// The bound train/test splits of trial `τ`, one per session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub trial_index: usize,
    pub splits: Vec<SessionSplit>,
}

impl TrialPlan {
    pub fn split(&self, t: usize) -> Result<&SessionSplit> {
        if t == 0 || t > self.splits.len() {
            return Err(Error::Range {
                what: "session",
                value: t,
                min: 1,
                max: self.splits.len(),
            });
        }
        Ok(&self.splits[t - 1])
    }

    /// Test ids of sessions `1..=t`, each tagged with its session.
    pub fn cumulative_test_ids(&self, t: usize) -> Result<BTreeSet<(usize, &str)>> {
        self.split(t)?;
        Ok(self.splits[..t]
            .iter()
            .flat_map(|s| s.test_ids.iter().map(move |id| (s.session_index, id.as_str())))
            .collect())
    }
}

/// Binds fold `tau` of every session into one trial plan.
pub fn bind_folds(assignments: &[FoldAssignment], tau: usize) -> Result<TrialPlan> {
    let first = assignments
        .first()
        .ok_or_else(|| Error::config("no fold assignments to bind"))?;
    for a in assignments {
        if a.k != first.k || a.mode != first.mode {
            return Err(Error::config(format!(
                "session {} was partitioned with k={} {} but session {} with k={} {}",
                a.session_index, a.k, a.mode, first.session_index, first.k, first.mode
            )));
        }
    }
    if tau == 0 || tau > first.k {
        return Err(Error::Range {
            what: "trial",
            value: tau,
            min: 1,
            max: first.k,
        });
    }
    let splits = assignments
        .iter()
        .map(|a| {
            let (test, train): (Vec<_>, Vec<_>) =
                a.fold_of.iter().partition(|(_, &f)| f == tau);
            SessionSplit {
                session_index: a.session_index,
                train_ids: train.into_iter().map(|(id, _)| id.clone()).collect(),
                test_ids: test.into_iter().map(|(id, _)| id.clone()).collect(),
            }
        })
        .collect();
    Ok(TrialPlan {
        trial_index: tau,
        splits,
    })
}
