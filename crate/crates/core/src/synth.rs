//! Synthetic session streams with class, domain, and subject structure.
//!
//! Class `c` has a base mean `μ_c`, session `t` a domain offset `δ_t` shared
//! by all of its classes, and subject `s` an offset `η_s`. A sample of class
//! `c` from subject `s` in session `t` is drawn from `N(μ_c + δ_t + η_s, σ²I)`.
//! Each offset points in an independent uniformly random direction and has
//! the configured norm. Norms are absolute; with the default `σ = 1` they read
//! as multiples of the noise scale.
//!
//! Within a session the subjects are split evenly across the session's
//! classes (subject `j` belongs to the class at position `j mod |l^(t)|`), and
//! a class's samples are dealt round-robin to its subjects. Subject offsets
//! therefore carry class information that only transfers to test samples
//! whose subject was seen in training.

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{scoped_subject_id, LabelRegistry, Sample, SessionDataset, SessionSequence};
use crate::error::{Error, Result};
use crate::rng::{self, tag, StreamRng};

/// Label sets of the four-session benchmark stream, in incremental order.
pub const BENCHMARK_LABEL_SETS: [&[&str]; 4] = [
    &["disgust", "happiness", "others", "repression", "surprise"],
    &["anger", "contempt", "happiness", "others", "surprise"],
    &["disgust", "fear", "happiness", "others", "sad", "surprise"],
    &["anger", "disgust", "fear", "happiness", "others", "sad", "surprise"],
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub session_label_sets: Vec<Vec<String>>,
    pub feature_dim: usize,
    pub samples_per_class_per_session: usize,
    pub subjects_per_session: usize,
    pub class_separation: f64,
    pub domain_shift: f64,
    pub subject_shift: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            session_label_sets: BENCHMARK_LABEL_SETS
                .iter()
                .map(|s| s.iter().map(|n| n.to_string()).collect())
                .collect(),
            feature_dim: 64,
            samples_per_class_per_session: 40,
            subjects_per_session: 15,
            class_separation: 4.0,
            domain_shift: 2.0,
            subject_shift: 0.5,
            noise: 1.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let first = self
            .session_label_sets
            .first()
            .ok_or_else(|| Error::config("synthetic stream needs at least one session"))?;
        if first.len() < 2 {
            return Err(Error::config("session 1 needs at least two classes"));
        }
        for (i, labels) in self.session_label_sets.iter().enumerate() {
            let unique: BTreeSet<&String> = labels.iter().collect();
            if labels.is_empty() || unique.len() != labels.len() {
                return Err(Error::config(format!(
                    "session {} label set is empty or has duplicates",
                    i + 1
                )));
            }
            if self.subjects_per_session < labels.len() {
                return Err(Error::config(format!(
                    "session {} has {} classes but only {} subjects",
                    i + 1,
                    labels.len(),
                    self.subjects_per_session
                )));
            }
        }
        if self.feature_dim == 0 || self.samples_per_class_per_session == 0 {
            return Err(Error::config("feature_dim and samples_per_class_per_session must be positive"));
        }
        for (name, v) in [
            ("class_separation", self.class_separation),
            ("domain_shift", self.domain_shift),
            ("subject_shift", self.subject_shift),
            ("noise", self.noise),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be finite and non-negative")));
            }
        }
        Ok(())
    }

    pub fn registry(&self) -> LabelRegistry {
        let mut registry = LabelRegistry::new();
        for name in self.session_label_sets.iter().flatten() {
            registry.register(name);
        }
        registry
    }

    /// `μ_c` for every registered class, indexed by class.
    pub fn class_means(&self) -> Vec<Vec<f64>> {
        (0..self.registry().len())
            .map(|c| self.offset(&[tag::CLASS_MEAN, c as u64], self.class_separation))
            .collect()
    }

    /// `δ_t`, indexed by `t - 1`.
    pub fn domain_offsets(&self) -> Vec<Vec<f64>> {
        (1..=self.session_label_sets.len())
            .map(|t| self.offset(&[tag::DOMAIN_SHIFT, t as u64], self.domain_shift))
            .collect()
    }

    fn subject_offset(&self, t: usize, j: usize) -> Vec<f64> {
        self.offset(&[tag::SUBJECT_SHIFT, t as u64, j as u64], self.subject_shift)
    }

    fn offset(&self, coords: &[u64], norm: f64) -> Vec<f64> {
        let mut r = rng::substream(self.seed, coords);
        scaled_direction(&mut r, self.feature_dim, norm)
    }
}

fn scaled_direction(rng: &mut StreamRng, d: usize, norm: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 1e-12 {
            return v.into_iter().map(|x| norm * x / len).collect();
        }
    }
}

pub fn generate_stream(spec: &SynthSpec) -> Result<SessionSequence> {
    spec.validate()?;
    let registry = spec.registry();
    let means = spec.class_means();
    let domains = spec.domain_offsets();
    let d = spec.feature_dim;

    let mut sessions = Vec::with_capacity(spec.session_label_sets.len());
    for (i, names) in spec.session_label_sets.iter().enumerate() {
        let t = i + 1;
        let classes: Vec<usize> = names
            .iter()
            .map(|n| registry.index(n))
            .collect::<Result<_>>()?;
        let subjects: Vec<(String, Vec<f64>)> = (0..spec.subjects_per_session)
            .map(|j| {
                (
                    scoped_subject_id(t, &format!("p{j:02}"), false),
                    spec.subject_offset(t, j),
                )
            })
            .collect();
        let mut noise = rng::substream(spec.seed, &[tag::NOISE, t as u64]);
        let mut samples = Vec::with_capacity(classes.len() * spec.samples_per_class_per_session);
        for (pos, &c) in classes.iter().enumerate() {
            let own: Vec<&(String, Vec<f64>)> = subjects
                .iter()
                .enumerate()
                .filter(|(j, _)| j % classes.len() == pos)
                .map(|(_, s)| s)
                .collect();
            for n in 0..spec.samples_per_class_per_session {
                let (subject, eta) = own[n % own.len()];
                let features = (0..d)
                    .map(|k| {
                        let z: f64 = noise.sample(StandardNormal);
                        means[c][k] + domains[i][k] + eta[k] + spec.noise * z
                    })
                    .collect();
                samples.push(Sample {
                    sample_id: format!("t{t}-{}-{n:04}", names[pos]),
                    subject_id: subject.clone(),
                    label: c,
                    features,
                });
            }
        }
        sessions.push(SessionDataset::new(t, samples, classes.into_iter().collect())?);
    }
    SessionSequence::new(sessions, registry, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math;

    fn small() -> SynthSpec {
        SynthSpec {
            feature_dim: 16,
            samples_per_class_per_session: 12,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn default_stream_shape() {
        let seq = generate_stream(&SynthSpec::default()).unwrap();
        assert_eq!(seq.len(), 4);
        let sizes: Vec<usize> = seq.sessions().iter().map(|s| s.label_set().len()).collect();
        assert_eq!(sizes, vec![5, 5, 6, 7]);
        let cumulative: Vec<usize> = (1..=4)
            .map(|t| seq.cumulative_label_space(t).unwrap().len())
            .collect();
        assert_eq!(cumulative, vec![5, 7, 9, 9]);
        for s in seq.sessions() {
            assert_eq!(s.len(), s.label_set().len() * 40);
            assert_eq!(s.subjects().len(), 15);
        }
        assert_eq!(seq.feature_dim(), 64);
    }

    #[test]
    fn deterministic_in_seed() {
        let a = generate_stream(&small()).unwrap();
        let b = generate_stream(&small()).unwrap();
        assert_eq!(a, b);
        let c = generate_stream(&SynthSpec { seed: 1, ..small() }).unwrap();
        assert_ne!(a.sessions()[0].samples()[0].features, c.sessions()[0].samples()[0].features);
    }

    #[test]
    fn subjects_belong_to_one_session_and_one_class() {
        let seq = generate_stream(&small()).unwrap();
        let mut owner = std::collections::HashMap::new();
        for s in seq.sessions() {
            for x in s.samples() {
                let prev = owner.insert(x.subject_id.clone(), (s.session_index(), x.label));
                assert!(prev.is_none() || prev == Some((s.session_index(), x.label)));
            }
        }
    }

    #[test]
    fn noiseless_samples_sit_on_their_means() {
        let spec = SynthSpec {
            noise: 0.0,
            subject_shift: 0.0,
            ..small()
        };
        let seq = generate_stream(&spec).unwrap();
        let means = spec.class_means();
        let domains = spec.domain_offsets();
        for s in seq.sessions() {
            let t = s.session_index();
            for x in s.samples() {
                let expected: Vec<f64> = means[x.label].iter().zip(&domains[t - 1]).map(|(a, b)| a + b).collect();
                assert_eq!(x.features, expected);
            }
            // nearest class mean within the session is perfect
            let correct = s
                .samples()
                .iter()
                .filter(|x| {
                    let best = s
                        .label_set()
                        .iter()
                        .min_by(|&&a, &&b| {
                            let da: f64 = x.features.iter().zip(&means[a]).zip(&domains[t - 1]).map(|((v, m), d)| (v - m - d).powi(2)).sum();
                            let db: f64 = x.features.iter().zip(&means[b]).zip(&domains[t - 1]).map(|((v, m), d)| (v - m - d).powi(2)).sum();
                            da.total_cmp(&db)
                        })
                        .unwrap();
                    *best == x.label
                })
                .count();
            assert_eq!(correct, s.len());
        }
    }

    #[test]
    fn offsets_have_requested_norms() {
        let spec = small();
        for m in spec.class_means() {
            assert!((math::dot(&m, &m).sqrt() - 4.0).abs() < 1e-12);
        }
        for d in spec.domain_offsets() {
            assert!((math::dot(&d, &d).sqrt() - 2.0).abs() < 1e-12);
        }
    }

    /// Maximum-likelihood classifier that knows every class mean and session
    /// offset; subject offsets are treated as unknown noise.
    #[test]
    fn bayes_oracle_on_default_stream() {
        let spec = SynthSpec { seed: 77, ..SynthSpec::default() };
        let seq = generate_stream(&spec).unwrap();
        let means = spec.class_means();
        let domains = spec.domain_offsets();
        let (mut correct, mut total) = (0usize, 0usize);
        for s in seq.sessions() {
            let t = s.session_index();
            let cumulative = seq.cumulative_label_space(t).unwrap();
            for x in s.samples() {
                let best = cumulative
                    .iter()
                    .min_by(|&&a, &&b| {
                        let dist = |c: usize| -> f64 {
                            x.features.iter().zip(&means[c]).zip(&domains[t - 1]).map(|((v, m), d)| (v - m - d).powi(2)).sum()
                        };
                        dist(a).total_cmp(&dist(b))
                    })
                    .unwrap();
                correct += usize::from(*best == x.label);
                total += 1;
            }
        }
        let acc = correct as f64 / total as f64;
        assert!(acc >= 0.9, "oracle accuracy {acc}");
    }

    #[test]
    fn validation() {
        assert!(generate_stream(&SynthSpec { session_label_sets: vec![], ..small() }).is_err());
        assert!(generate_stream(&SynthSpec { session_label_sets: vec![vec!["a".into()]], ..small() }).is_err());
        assert!(generate_stream(&SynthSpec { subjects_per_session: 4, ..small() }).is_err());
        assert!(generate_stream(&SynthSpec { noise: -1.0, ..small() }).is_err());
        assert!(generate_stream(&SynthSpec {
            session_label_sets: vec![vec!["a".into(), "a".into()]],
            ..small()
        })
        .is_err());
    }
}
