//! Incremental learners behind one contract.
//!
//! A learner sees session `t` only through [`IncrementalLearner::update`],
//! which receives the training split of that session and the cumulative label
//! space `L_t`. After the call it must classify every class of `L_t`.

mod finetune;
mod prototype;
pub mod ridge;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{ClassId, Sample};
use crate::error::{Error, Result};
use crate::rch::{InitSpec, Rch};

pub use finetune::FinetuneLearner;
pub use prototype::PrototypeLearner;

pub trait IncrementalLearner: Send {
    /// Adds the session-`t` head group and trains it on `train`.
    fn update(
        &mut self,
        session_index: usize,
        train: &[&Sample],
        session_labels: &BTreeSet<ClassId>,
        cumulative_labels: &BTreeSet<ClassId>,
    ) -> Result<()>;

    /// Probabilities aligned with [`IncrementalLearner::known_classes`].
    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn predict(&self, x: &[f64]) -> Result<ClassId>;

    fn known_classes(&self) -> BTreeSet<ClassId>;

    /// The learner's classification head, when it has one.
    fn head(&self) -> Option<&Rch> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    /// Cross-entropy fine-tuning of the current head group and a shared linear feature map.
    Finetune,
    /// Frozen random projection with per-session ridge prototypes.
    Prototype,
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LearnerKind::Finetune => "finetune",
            LearnerKind::Prototype => "prototype",
        })
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "finetune" => Ok(LearnerKind::Finetune),
            "prototype" => Ok(LearnerKind::Prototype),
            other => Err(Error::config(format!("unknown learner `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    #[default]
    Relu,
    Identity,
}

impl Nonlinearity {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Nonlinearity::Relu => v.max(0.0),
            Nonlinearity::Identity => v,
        }
    }
}

/// When the fine-tune learner's shared `d×d` feature map is trained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMapMode {
    /// No feature map; logits are taken on the raw features.
    Off,
    /// Trained in the first session, frozen afterwards.
    FirstSession,
    /// Trained in every session.
    #[default]
    AllSessions,
}

/// How the prototype learner accumulates its Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PrototypeStats {
    /// A fresh Gram matrix per session; heads of different sessions add up in the remap.
    #[default]
    PerSession,
    /// One Gram matrix accumulated over all sessions seen so far.
    Cumulative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs_first: usize,
    pub epochs_later: usize,
    pub ridge_lambda: f64,
    /// Random-feature width; `None` means four times the input width.
    pub projection_dim: Option<usize>,
    /// Overrides the trial-derived projection seed.
    pub projection_seed: Option<u64>,
    pub nonlinearity: Nonlinearity,
    pub head_init: InitSpec,
    pub feature_map: FeatureMapMode,
    pub prototype_stats: PrototypeStats,
    /// Appends a constant 1 feature, which acts as a per-class bias.
    pub append_bias: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            batch_size: 16,
            epochs_first: 60,
            epochs_later: 10,
            ridge_lambda: 1.0,
            projection_dim: None,
            projection_seed: None,
            nonlinearity: Nonlinearity::Relu,
            head_init: InitSpec::Zeros,
            feature_map: FeatureMapMode::AllSessions,
            prototype_stats: PrototypeStats::PerSession,
            append_bias: false,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        // lr = 0 is accepted: it freezes every weight, which tests rely on.
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate must be a finite non-negative number"));
        }
        if self.batch_size == 0 || self.epochs_first == 0 || self.epochs_later == 0 {
            return Err(Error::config("batch_size and epoch counts must be positive"));
        }
        if !(self.ridge_lambda > 0.0 && self.ridge_lambda.is_finite()) {
            return Err(Error::config("ridge_lambda must be positive"));
        }
        if self.projection_dim == Some(0) {
            return Err(Error::config("projection_dim must be positive"));
        }
        if let InitSpec::Gaussian { std } = self.head_init {
            if !(std >= 0.0 && std.is_finite()) {
                return Err(Error::config("head_init std must be non-negative"));
            }
        }
        Ok(())
    }

    pub(crate) fn input_width(&self, feature_dim: usize) -> usize {
        feature_dim + usize::from(self.append_bias)
    }

    pub(crate) fn prepare<'a>(&self, x: &'a [f64]) -> std::borrow::Cow<'a, [f64]> {
        if self.append_bias {
            let mut v = x.to_vec();
            v.push(1.0);
            v.into()
        } else {
            x.into()
        }
    }
}

/// Builds a fresh learner for one trial. `seed` is the trial's seed; every
/// random draw of the learner is derived from it.
pub fn build(
    kind: LearnerKind,
    cfg: &LearnerConfig,
    feature_dim: usize,
    seed: u64,
) -> Result<Box<dyn IncrementalLearner>> {
    Ok(match kind {
        LearnerKind::Finetune => Box::new(FinetuneLearner::new(cfg.clone(), feature_dim, seed)?),
        LearnerKind::Prototype => Box::new(PrototypeLearner::new(cfg.clone(), feature_dim, seed)?),
    })
}

pub(crate) fn check_labels(
    rch_known: &BTreeSet<ClassId>,
    cumulative: &BTreeSet<ClassId>,
) -> Result<()> {
    if rch_known != cumulative {
        return Err(Error::protocol(format!(
            "head covers classes {rch_known:?} but the cumulative label space is {cumulative:?}"
        )));
    }
    Ok(())
}

pub(crate) fn warn_missing_classes(
    session_index: usize,
    train: &[&Sample],
    session_labels: &BTreeSet<ClassId>,
) {
    let present: BTreeSet<ClassId> = train.iter().map(|s| s.label).collect();
    for c in session_labels.difference(&present) {
        log::warn!(
            "session {session_index}: class {c} has no training samples; its head rows keep their initial values"
        );
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_validation() {
        let cfg = LearnerConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.batch_size, 16);
        assert_eq!((cfg.epochs_first, cfg.epochs_later), (60, 10));
        let bad = LearnerConfig {
            ridge_lambda: 0.0,
            ..cfg.clone()
        };
        assert!(bad.validate().is_err());
        let bad = LearnerConfig {
            batch_size: 0,
            ..cfg.clone()
        };
        assert!(bad.validate().is_err());
        let bad = LearnerConfig {
            learning_rate: -1.0,
            ..cfg
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn config_parses_partial_json() {
        let cfg: LearnerConfig =
            serde_json::from_str(r#"{"learning_rate": 0.1, "head_init": {"kind": "gaussian", "std": 0.01}}"#)
                .unwrap();
        assert_eq!(cfg.learning_rate, 0.1);
        assert_eq!(cfg.head_init, InitSpec::Gaussian { std: 0.01 });
        assert_eq!(cfg.epochs_first, 60);
        assert!(serde_json::from_str::<LearnerConfig>(r#"{"lr": 1}"#).is_err());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("Finetune".parse::<LearnerKind>().unwrap(), LearnerKind::Finetune);
        assert_eq!("prototype".parse::<LearnerKind>().unwrap(), LearnerKind::Prototype);
        assert!("der".parse::<LearnerKind>().is_err());
    }
}
