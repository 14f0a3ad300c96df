//! Remappable classification head.
//!
//! Each session `t` adds an independent head group with one weight row per
//! class of `l^(t)`. A class that occurs in several sessions therefore owns
//! several rows. For prediction the rows of a class are summed into a single
//! remapped row, `H_final^c = Σ_{t ∈ T_c} H_t^c`, and
//! `p(c | x) = softmax_c(xᵀ H_final^c)` over every known class.
//!
//! Heads carry no bias; a learner that wants one appends a constant feature.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::ClassId;
use crate::error::{Error, Result};
use crate::math;
use crate::rng::StreamRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitSpec {
    #[default]
    Zeros,
    Gaussian { std: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadGroup {
    pub session_index: usize,
    pub class_rows: BTreeMap<ClassId, Vec<f64>>,
}

/// Summed weights, one row per known class in ascending class order.
#[derive(Debug, Clone, PartialEq)]
pub struct RemappedHead {
    pub classes: Vec<ClassId>,
    pub rows: Vec<Vec<f64>>,
}

impl RemappedHead {
    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|w| math::dot(w, x)).collect()
    }
}

#[derive(Debug, Default)]
pub struct Rch {
    feature_dim: usize,
    groups: Vec<HeadGroup>,
    class_sessions: BTreeMap<ClassId, Vec<usize>>,
    remapped: OnceLock<RemappedHead>,
}

impl Clone for Rch {
    fn clone(&self) -> Self {
        Self {
            feature_dim: self.feature_dim,
            groups: self.groups.clone(),
            class_sessions: self.class_sessions.clone(),
            remapped: OnceLock::new(),
        }
    }
}

impl PartialEq for Rch {
    fn eq(&self, other: &Self) -> bool {
        self.feature_dim == other.feature_dim && self.groups == other.groups
    }
}

impl Rch {
    pub fn new(feature_dim: usize) -> Self {
        Self {
            feature_dim,
            ..Self::default()
        }
    }

    /// Rebuilds a head from dumped groups.
    pub fn from_groups(feature_dim: usize, groups: Vec<HeadGroup>) -> Result<Self> {
        let mut rch = Self::new(feature_dim);
        for g in groups {
            if g.class_rows.is_empty() {
                return Err(Error::config(format!(
                    "head group of session {} has no rows",
                    g.session_index
                )));
            }
            if let Some(row) = g.class_rows.values().find(|r| r.len() != feature_dim) {
                return Err(Error::Shape {
                    expected: feature_dim,
                    got: row.len(),
                });
            }
            rch.push_group(g);
        }
        Ok(rch)
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn groups(&self) -> &[HeadGroup] {
        &self.groups
    }

    /// `L_t` as currently covered by head groups, ascending.
    pub fn known_classes(&self) -> BTreeSet<ClassId> {
        self.class_sessions.keys().copied().collect()
    }

    /// `T_c` restricted to the sessions that added a head group.
    pub fn sessions_of(&self, class: ClassId) -> Option<&[usize]> {
        self.class_sessions.get(&class).map(Vec::as_slice)
    }

    fn push_group(&mut self, group: HeadGroup) {
        for &c in group.class_rows.keys() {
            self.class_sessions
                .entry(c)
                .or_default()
                .push(group.session_index);
        }
        self.groups.push(group);
        self.remapped = OnceLock::new();
    }

    pub fn add_session(
        &mut self,
        session_index: usize,
        label_set: &BTreeSet<ClassId>,
        init: InitSpec,
        rng: &mut StreamRng,
    ) -> Result<()> {
        if label_set.is_empty() {
            return Err(Error::config(format!(
                "session {session_index} has an empty label set"
            )));
        }
        if self.groups.iter().any(|g| g.session_index == session_index) {
            return Err(Error::config(format!(
                "session {session_index} already has a head group"
            )));
        }
        let d = self.feature_dim;
        let class_rows = match init {
            InitSpec::Zeros => label_set.iter().map(|&c| (c, vec![0.0; d])).collect(),
            InitSpec::Gaussian { std } => {
                let normal = Normal::new(0.0, std)
                    .map_err(|e| Error::config(format!("bad init std {std}: {e}")))?;
                label_set
                    .iter()
                    .map(|&c| (c, (0..d).map(|_| normal.sample(rng)).collect()))
                    .collect()
            }
        };
        self.push_group(HeadGroup {
            session_index,
            class_rows,
        });
        Ok(())
    }

    pub fn group(&self, session_index: usize) -> Option<&HeadGroup> {
        self.groups.iter().find(|g| g.session_index == session_index)
    }

    /// Mutable access to one session's rows. Invalidates the remap cache.
    pub fn group_mut(&mut self, session_index: usize) -> Option<&mut HeadGroup> {
        self.remapped = OnceLock::new();
        self.groups
            .iter_mut()
            .find(|g| g.session_index == session_index)
    }

    /// Summed per-class weights. Cached until the next head write.
    pub fn remap(&self) -> &RemappedHead {
        self.remapped.get_or_init(|| {
            let classes: Vec<ClassId> = self.class_sessions.keys().copied().collect();
            let rows = classes
                .iter()
                .map(|c| {
                    let mut row = vec![0.0; self.feature_dim];
                    for g in &self.groups {
                        if let Some(w) = g.class_rows.get(c) {
                            row.iter_mut().zip(w).for_each(|(r, v)| *r += v);
                        }
                    }
                    row
                })
                .collect();
            RemappedHead { classes, rows }
        })
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.feature_dim {
            return Err(Error::Shape {
                expected: self.feature_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self.remap().logits(x))
    }

    /// Probabilities aligned with [`Rch::known_classes`].
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(math::softmax(&self.logits(x)?))
    }

    /// Arg-max class; the lowest class index wins ties.
    pub fn predict(&self, x: &[f64]) -> Result<ClassId> {
        let logits = self.logits(x)?;
        let best = math::argmax(&logits)
            .ok_or_else(|| Error::protocol("prediction requested before any head group exists"))?;
        Ok(self.remap().classes[best])
    }
}
