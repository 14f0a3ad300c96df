//! Frozen random features with ridge-regressed class prototypes.
//!
//! Inputs are embedded as `h = φ(P a)` with a fixed Gaussian projection `P`
//! (entries `N(0, 1) / √width`) and a nonlinearity `φ`. Each session
//! accumulates `G_t = Σ h hᵀ` and per-class sums `C_t[c] = Σ_{y=c} h`, then
//! sets its head rows to the columns of `(G_t + λI)⁻¹ C_t`. Heads live in the
//! projected space, so the learner's head has width `M`, not `d`.

use std::collections::{BTreeMap, BTreeSet};
use std::hash::{Hash, Hasher};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::ridge::ridge_solve;
use super::{check_labels, warn_missing_classes, IncrementalLearner, LearnerConfig, PrototypeStats};
use crate::data::{ClassId, Sample};
use crate::error::{Error, Result};
use crate::math::{self, CompensatedSum};
use crate::rch::{InitSpec, Rch};
use crate::rng;

/// Compensated accumulators for `G` (upper triangle, row-major) and class sums.
#[derive(Debug, Clone)]
pub struct PrototypeStatistics {
    dim: usize,
    gram_upper: Vec<CompensatedSum>,
    class_sums: BTreeMap<ClassId, Vec<CompensatedSum>>,
}

impl PrototypeStatistics {
    fn new(dim: usize) -> Self {
        Self {
            dim,
            gram_upper: vec![CompensatedSum::default(); dim * (dim + 1) / 2],
            class_sums: BTreeMap::new(),
        }
    }

    fn add(&mut self, h: &[f64], label: ClassId) {
        let mut k = 0;
        for i in 0..self.dim {
            for j in i..self.dim {
                self.gram_upper[k].add(h[i] * h[j]);
                k += 1;
            }
        }
        let sums = self
            .class_sums
            .entry(label)
            .or_insert_with(|| vec![CompensatedSum::default(); self.dim]);
        sums.iter_mut().zip(h).for_each(|(s, v)| s.add(*v));
    }

    pub fn gram(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.dim, self.dim);
        let mut k = 0;
        for i in 0..self.dim {
            for j in i..self.dim {
                let v = self.gram_upper[k].value();
                g[(i, j)] = v;
                g[(j, i)] = v;
                k += 1;
            }
        }
        g
    }

    /// Columns of `C` for `classes`, zero for classes without samples.
    pub fn class_sum_matrix(&self, classes: &BTreeSet<ClassId>) -> DMatrix<f64> {
        let mut c = DMatrix::zeros(self.dim, classes.len());
        for (col, class) in classes.iter().enumerate() {
            if let Some(sums) = self.class_sums.get(class) {
                for (row, s) in sums.iter().enumerate() {
                    c[(row, col)] = s.value();
                }
            }
        }
        c
    }
}

#[derive(Debug, Clone)]
pub struct PrototypeLearner {
    cfg: LearnerConfig,
    feature_dim: usize,
    width: usize,
    projection_dim: usize,
    /// Row-major `projection_dim × width`.
    projection: Vec<f64>,
    rch: Rch,
    session_stats: BTreeMap<usize, PrototypeStatistics>,
    cumulative: Option<PrototypeStatistics>,
}

impl PrototypeLearner {
    pub fn new(cfg: LearnerConfig, feature_dim: usize, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let width = cfg.input_width(feature_dim);
        let projection_dim = cfg.projection_dim.unwrap_or(4 * feature_dim);
        let mut prng = rng::substream(cfg.projection_seed.unwrap_or(seed), &[rng::tag::PROJECTION]);
        let scale = 1.0 / (width as f64).sqrt();
        let projection = (0..projection_dim * width)
            .map(|_| scale * prng.sample::<f64, _>(StandardNormal))
            .collect();
        let cumulative = (cfg.prototype_stats == PrototypeStats::Cumulative)
            .then(|| PrototypeStatistics::new(projection_dim));
        Ok(Self {
            cfg,
            feature_dim,
            width,
            projection_dim,
            projection,
            rch: Rch::new(projection_dim),
            session_stats: BTreeMap::new(),
            cumulative,
        })
    }

    pub fn rch(&self) -> &Rch {
        &self.rch
    }

    pub fn projection_dim(&self) -> usize {
        self.projection_dim
    }

    /// Hash of the projection's bit patterns.
    pub fn projection_fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for v in &self.projection {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }

    pub fn session_statistics(&self, session_index: usize) -> Option<&PrototypeStatistics> {
        self.session_stats.get(&session_index)
    }

    pub fn embed(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.feature_dim {
            return Err(Error::Shape {
                expected: self.feature_dim,
                got: x.len(),
            });
        }
        let a = self.cfg.prepare(x);
        Ok(self
            .projection
            .chunks_exact(self.width)
            .map(|row| self.cfg.nonlinearity.apply(math::dot(row, &a)))
            .collect())
    }
}

impl IncrementalLearner for PrototypeLearner {
    fn update(
        &mut self,
        session_index: usize,
        train: &[&Sample],
        session_labels: &BTreeSet<ClassId>,
        cumulative_labels: &BTreeSet<ClassId>,
    ) -> Result<()> {
        if train.is_empty() {
            return Err(Error::protocol(format!(
                "session {session_index}: empty training split"
            )));
        }
        let mut stats = PrototypeStatistics::new(self.projection_dim);
        for s in train {
            if !session_labels.contains(&s.label) {
                return Err(Error::protocol(format!(
                    "session {session_index}: training sample `{}` has a label outside the session label set",
                    s.sample_id
                )));
            }
            let h = self.embed(&s.features)?;
            stats.add(&h, s.label);
            if let Some(global) = self.cumulative.as_mut() {
                global.add(&h, s.label);
            }
        }
        warn_missing_classes(session_index, train, session_labels);

        // zero-initialised rows; the solve below overwrites them
        let mut unused = rng::substream(0, &[]);
        self.rch
            .add_session(session_index, session_labels, InitSpec::Zeros, &mut unused)?;
        check_labels(&self.rch.known_classes(), cumulative_labels)?;

        let gram = match &self.cumulative {
            Some(global) => global.gram(),
            None => stats.gram(),
        };
        let targets = stats.class_sum_matrix(session_labels);
        let w = ridge_solve(&gram, self.cfg.ridge_lambda, &targets)
            .map_err(|e| e.in_session(session_index))?;
        let group = self.rch.group_mut(session_index).expect("group was just added");
        for (col, row) in group.class_rows.values_mut().enumerate() {
            row.iter_mut()
                .zip(w.column(col).iter())
                .for_each(|(r, v)| *r = *v);
        }
        self.session_stats.insert(session_index, stats);
        Ok(())
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.rch.predict_proba(&self.embed(x)?)
    }

    fn predict(&self, x: &[f64]) -> Result<ClassId> {
        self.rch.predict(&self.embed(x)?)
    }

    fn known_classes(&self) -> BTreeSet<ClassId> {
        self.rch.known_classes()
    }

    fn head(&self) -> Option<&Rch> {
        Some(&self.rch)
    }
}
