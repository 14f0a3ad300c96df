//! Naive fine-tuning: mini-batch softmax cross-entropy over the whole
//! cumulative label space.
//!
//! Logits are `z_c = (F a)ᵀ H_final^c`, where `a` is the (optionally
//! bias-augmented) input and `F` a shared square feature map initialised to
//! the identity. A session trains its own head group and, depending on
//! [`FeatureMapMode`], the feature map. Head groups of earlier sessions are
//! never written. The feature map is shared, so training it on a new session
//! moves the logits of every old class: that is where forgetting comes from.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;

use super::{check_labels, warn_missing_classes, FeatureMapMode, IncrementalLearner, LearnerConfig};
use crate::data::{ClassId, Sample};
use crate::error::{Error, Result};
use crate::math;
use crate::rch::Rch;
use crate::rng::{self, StreamRng};

#[derive(Debug, Clone)]
pub struct FinetuneLearner {
    cfg: LearnerConfig,
    feature_dim: usize,
    width: usize,
    seed: u64,
    rch: Rch,
    /// Row-major `width × width`.
    feature_map: Option<Vec<f64>>,
    current_session: Option<usize>,
    map_trainable: bool,
    sessions_seen: usize,
}

impl FinetuneLearner {
    pub fn new(cfg: LearnerConfig, feature_dim: usize, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let width = cfg.input_width(feature_dim);
        let feature_map = (cfg.feature_map != FeatureMapMode::Off).then(|| {
            let mut m = vec![0.0; width * width];
            (0..width).for_each(|i| m[i * width + i] = 1.0);
            m
        });
        Ok(Self {
            cfg,
            feature_dim,
            width,
            seed,
            rch: Rch::new(width),
            feature_map,
            current_session: None,
            map_trainable: false,
            sessions_seen: 0,
        })
    }

    pub fn rch(&self) -> &Rch {
        &self.rch
    }

    pub fn feature_map(&self) -> Option<&[f64]> {
        self.feature_map.as_deref()
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

    /// `F a`, or `a` when there is no feature map.
    fn transform(&self, x: &[f64]) -> Vec<f64> {
        let a = self.cfg.prepare(x);
        match &self.feature_map {
            Some(m) => m.chunks_exact(self.width).map(|row| math::dot(row, &a)).collect(),
            None => a.into_owned(),
        }
    }

    /// Opens session `t`: adds its head group and decides whether the feature
    /// map trains during it. [`IncrementalLearner::update`] calls this first.
    pub fn begin_session(
        &mut self,
        session_index: usize,
        session_labels: &BTreeSet<ClassId>,
        cumulative_labels: &BTreeSet<ClassId>,
    ) -> Result<()> {
        let mut init_rng = rng::substream(self.seed, &[rng::tag::HEAD_INIT, session_index as u64]);
        self.rch
            .add_session(session_index, session_labels, self.cfg.head_init, &mut init_rng)?;
        check_labels(&self.rch.known_classes(), cumulative_labels)?;
        self.map_trainable = match self.cfg.feature_map {
            FeatureMapMode::Off => false,
            FeatureMapMode::FirstSession => self.sessions_seen == 0,
            FeatureMapMode::AllSessions => true,
        };
        self.current_session = Some(session_index);
        self.sessions_seen += 1;
        Ok(())
    }

    fn session(&self) -> Result<usize> {
        self.current_session
            .ok_or_else(|| Error::protocol("no session has been opened on this learner"))
    }

    /// Number of trainable weights of the open session.
    pub fn param_count(&self) -> usize {
        let rows = self
            .current_session
            .and_then(|t| self.rch.group(t))
            .map_or(0, |g| g.class_rows.len());
        rows * self.width + if self.map_trainable { self.width * self.width } else { 0 }
    }

    /// Trainable weights flattened: the open session's rows in class order,
    /// then the feature map (row-major) when it is trainable.
    pub fn trainable_params(&self) -> Result<Vec<f64>> {
        let group = self
            .rch
            .group(self.session()?)
            .expect("open session has a head group");
        let mut out: Vec<f64> = group.class_rows.values().flatten().copied().collect();
        if self.map_trainable {
            out.extend(self.feature_map.as_ref().expect("trainable map exists"));
        }
        Ok(out)
    }

    pub fn set_trainable_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Shape {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        let width = self.width;
        let t = self.session()?;
        let group = self.rch.group_mut(t).expect("open session has a head group");
        let mut chunks = params.chunks_exact(width);
        for row in group.class_rows.values_mut() {
            row.copy_from_slice(chunks.next().expect("length checked"));
        }
        if self.map_trainable {
            let offset = params.len() - width * width;
            self.feature_map
                .as_mut()
                .expect("trainable map exists")
                .copy_from_slice(&params[offset..]);
        }
        Ok(())
    }

    /// Mean cross-entropy of `batch` over all known classes.
    pub fn batch_loss(&self, batch: &[&Sample]) -> Result<f64> {
        Ok(self.loss_and_gradient(batch, false)?.0)
    }

    /// Mean cross-entropy and its gradient in [`Self::trainable_params`] order.
    pub fn batch_gradient(&self, batch: &[&Sample]) -> Result<(f64, Vec<f64>)> {
        self.loss_and_gradient(batch, true)
    }

    fn loss_and_gradient(&self, batch: &[&Sample], want_grad: bool) -> Result<(f64, Vec<f64>)> {
        let t = self.session()?;
        if batch.is_empty() {
            return Err(Error::protocol("empty mini-batch"));
        }
        let width = self.width;
        let remapped = self.rch.remap();
        let group = self.rch.group(t).expect("open session has a head group");
        // position of each session-t class inside the remapped class list
        let group_pos: Vec<usize> = group
            .class_rows
            .keys()
            .map(|c| remapped.classes.binary_search(c).expect("session class is known"))
            .collect();
        let n_rows = group_pos.len();
        let mut grad = if want_grad { vec![0.0; self.param_count()] } else { Vec::new() };
        let mut loss = 0.0;

        for s in batch {
            self.check_dim(&s.features)?;
            let y = remapped.classes.binary_search(&s.label).map_err(|_| {
                Error::protocol(format!(
                    "sample `{}` has class {} outside the known label space",
                    s.sample_id, s.label
                ))
            })?;
            let a = self.cfg.prepare(&s.features);
            let u = self.transform(&s.features);
            let z = remapped.logits(&u);
            loss += math::log_sum_exp(&z) - z[y];
            if !want_grad {
                continue;
            }
            let mut dz = math::softmax(&z);
            dz[y] -= 1.0;
            for (r, &pos) in group_pos.iter().enumerate() {
                let g = &mut grad[r * width..(r + 1) * width];
                g.iter_mut().zip(&u).for_each(|(gi, ui)| *gi += dz[pos] * ui);
            }
            if self.map_trainable {
                // dL/dF = (Σ_c dz_c H_final^c) aᵀ
                let mut v = vec![0.0; width];
                for (row, &d) in remapped.rows.iter().zip(&dz) {
                    v.iter_mut().zip(row).for_each(|(vi, wi)| *vi += d * wi);
                }
                let gm = &mut grad[n_rows * width..];
                for (i, vi) in v.iter().enumerate() {
                    let g = &mut gm[i * width..(i + 1) * width];
                    g.iter_mut().zip(a.iter()).for_each(|(gij, aj)| *gij += vi * aj);
                }
            }
        }
        let n = batch.len() as f64;
        loss /= n;
        grad.iter_mut().for_each(|g| *g /= n);
        if !loss.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite cross-entropy {loss} in session {t} (batch of {}, lr {})",
                batch.len(),
                self.cfg.learning_rate
            )));
        }
        Ok((loss, grad))
    }

    /// One pass over `train` in shuffled mini-batches. Returns the mean batch loss.
    pub fn train_epoch(&mut self, train: &[&Sample], rng: &mut StreamRng) -> Result<f64> {
        let mut order: Vec<&Sample> = train.to_vec();
        order.shuffle(rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(self.cfg.batch_size) {
            let (loss, grad) = self.batch_gradient(batch)?;
            let mut params = self.trainable_params()?;
            params
                .iter_mut()
                .zip(&grad)
                .for_each(|(p, g)| *p -= self.cfg.learning_rate * g);
            self.set_trainable_params(&params)?;
            total += loss;
            batches += 1;
        }
        Ok(total / batches.max(1) as f64)
    }
}

impl IncrementalLearner for FinetuneLearner {
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
        if let Some(s) = train.iter().find(|s| !session_labels.contains(&s.label)) {
            return Err(Error::protocol(format!(
                "session {session_index}: training sample `{}` has a label outside the session label set",
                s.sample_id
            )));
        }
        let first = self.sessions_seen == 0;
        self.begin_session(session_index, session_labels, cumulative_labels)?;
        warn_missing_classes(session_index, train, session_labels);
        let epochs = if first { self.cfg.epochs_first } else { self.cfg.epochs_later };
        let mut order_rng =
            rng::substream(self.seed, &[rng::tag::BATCH_ORDER, session_index as u64]);
        for epoch in 0..epochs {
            let loss = self.train_epoch(train, &mut order_rng)?;
            log::trace!("session {session_index} epoch {epoch}: loss {loss:.6}");
        }
        Ok(())
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        self.rch.predict_proba(&self.transform(x))
    }

    fn predict(&self, x: &[f64]) -> Result<ClassId> {
        self.check_dim(x)?;
        self.rch.predict(&self.transform(x))
    }

    fn known_classes(&self) -> BTreeSet<ClassId> {
        self.rch.known_classes()
    }

    fn head(&self) -> Option<&Rch> {
        Some(&self.rch)
    }
}
