//! Samples, sessions, and the label universe they share.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ClassId = usize;

/// Class names with indices assigned in order of first registration.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct LabelRegistry {
    names: Vec<String>,
    index_of: HashMap<String, ClassId>,
}

impl From<Vec<String>> for LabelRegistry {
    fn from(names: Vec<String>) -> Self {
        let mut registry = LabelRegistry::default();
        for name in names {
            registry.register(&name);
        }
        registry
    }
}

impl From<LabelRegistry> for Vec<String> {
    fn from(registry: LabelRegistry) -> Self {
        registry.names
    }
}

impl LabelRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the index of `name`, assigning the next free index if it is new.
    pub fn register(&mut self, name: &str) -> ClassId {
        if let Some(&idx) = self.index_of.get(name) {
            return idx;
        }
        let idx = self.names.len();
        self.names.push(name.to_owned());
        self.index_of.insert(name.to_owned(), idx);
        idx
    }

    pub fn index(&self, name: &str) -> Result<ClassId> {
        self.index_of
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownClass(name.to_owned()))
    }

    pub fn name(&self, class: ClassId) -> Result<&str> {
        self.names
            .get(class)
            .map(String::as_str)
            .ok_or_else(|| Error::UnknownClass(format!("#{class}")))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub sample_id: String,
    pub subject_id: String,
    pub label: ClassId,
    pub features: Vec<f64>,
}

/// Subject id as stored in a session. Raw ids from distinct sessions are
/// distinct people unless the source declares subjects shared across sessions.
pub fn scoped_subject_id(session_index: usize, raw: &str, shared_across_sessions: bool) -> String {
    if shared_across_sessions {
        raw.to_owned()
    } else {
        format!("s{session_index}/{raw}")
    }
}

/// One session `D^(t)`: its samples, label set `l^(t)`, and subjects.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionDataset {
    session_index: usize,
    samples: Vec<Sample>,
    label_set: BTreeSet<ClassId>,
    subjects: BTreeSet<String>,
}

impl SessionDataset {
    pub fn new(
        session_index: usize,
        samples: Vec<Sample>,
        label_set: BTreeSet<ClassId>,
    ) -> Result<Self> {
        if session_index == 0 {
            return Err(Error::config("session indices start at 1"));
        }
        if samples.is_empty() {
            return Err(Error::config(format!("session {session_index} has no samples")));
        }
        let mut seen = BTreeSet::new();
        for s in &samples {
            if !label_set.contains(&s.label) {
                return Err(Error::config(format!(
                    "session {session_index}: sample `{}` has label {} outside the session label set",
                    s.sample_id, s.label
                )));
            }
            if !seen.insert(s.sample_id.as_str()) {
                return Err(Error::config(format!(
                    "session {session_index}: duplicate sample id `{}`",
                    s.sample_id
                )));
            }
        }
        let subjects = samples.iter().map(|s| s.subject_id.clone()).collect();
        Ok(Self {
            session_index,
            samples,
            label_set,
            subjects,
        })
    }

    pub fn session_index(&self) -> usize {
        self.session_index
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn label_set(&self) -> &BTreeSet<ClassId> {
        &self.label_set
    }

    pub fn subjects(&self) -> &BTreeSet<String> {
        &self.subjects
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample counts per class, zero entries included for every class of the label set.
    pub fn class_counts(&self) -> BTreeMap<ClassId, usize> {
        let mut counts: BTreeMap<ClassId, usize> =
            self.label_set.iter().map(|&c| (c, 0)).collect();
        for s in &self.samples {
            *counts.entry(s.label).or_default() += 1;
        }
        counts
    }
}

/// The ordered stream `D^(1), ..., D^(n)` over one feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionSequence {
    sessions: Vec<SessionDataset>,
    registry: LabelRegistry,
    feature_dim: usize,
}

impl SessionSequence {
    pub fn new(
        sessions: Vec<SessionDataset>,
        registry: LabelRegistry,
        feature_dim: usize,
    ) -> Result<Self> {
        if sessions.is_empty() {
            return Err(Error::config("a session sequence needs at least one session"));
        }
        if feature_dim == 0 {
            return Err(Error::config("feature dimension must be positive"));
        }
        for (i, session) in sessions.iter().enumerate() {
            if session.session_index != i + 1 {
                return Err(Error::config(format!(
                    "session at position {} has index {}",
                    i + 1,
                    session.session_index
                )));
            }
            for s in &session.samples {
                if s.features.len() != feature_dim {
                    return Err(Error::Shape {
                        expected: feature_dim,
                        got: s.features.len(),
                    }
                    .in_session(session.session_index));
                }
            }
            if let Some(&c) = session.label_set.iter().find(|&&c| c >= registry.len()) {
                return Err(Error::UnknownClass(format!("#{c}")).in_session(session.session_index));
            }
        }
        Ok(Self {
            sessions,
            registry,
            feature_dim,
        })
    }

    pub fn sessions(&self) -> &[SessionDataset] {
        &self.sessions
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    pub fn registry(&self) -> &LabelRegistry {
        &self.registry
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn session(&self, t: usize) -> Result<&SessionDataset> {
        self.check_session(t)?;
        Ok(&self.sessions[t - 1])
    }

    fn check_session(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.sessions.len() {
            return Err(Error::Range {
                what: "session",
                value: t,
                min: 1,
                max: self.sessions.len(),
            });
        }
        Ok(())
    }

    /// `L_t`: union of the label sets of sessions `1..=t`.
    pub fn cumulative_label_space(&self, t: usize) -> Result<BTreeSet<ClassId>> {
        self.check_session(t)?;
        Ok(self.sessions[..t]
            .iter()
            .flat_map(|s| s.label_set.iter().copied())
            .collect())
    }

    /// `T_c`: the sessions whose label set contains `class`.
    pub fn sessions_of_class(&self, class: ClassId) -> Result<BTreeSet<usize>> {
        let found: BTreeSet<usize> = self
            .sessions
            .iter()
            .filter(|s| s.label_set.contains(&class))
            .map(|s| s.session_index)
            .collect();
        if found.is_empty() {
            return Err(Error::UnknownClass(format!("#{class}")));
        }
        Ok(found)
    }
}
