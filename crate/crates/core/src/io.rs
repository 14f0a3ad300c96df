//! Files in and out.
//!
//! **Manifest** (JSON): the stream name, feature width, and sessions in
//! incremental order:
//!
//! ```json
//! {
//!   "name": "benchmark",
//!   "feature_dim": 64,
//!   "cross_session_subjects": false,
//!   "sessions": [
//!     {"name": "CASME II", "year": 2014, "features_path": "casme2.csv",
//!      "label_names": ["disgust", "happiness", "others", "repression", "surprise"]},
//!     {"name": "SAMM", "year": 2018, "features_path": "samm.csv",
//!      "label_names": ["anger", "contempt", "happiness", "others", "surprise"],
//!      "min_samples_per_class": 10}
//!   ]
//! }
//! ```
//!
//! `features_path` is relative to the manifest's directory. Classes of a
//! session with fewer than `min_samples_per_class` samples are dropped from
//! that session. Unless `cross_session_subjects` is true, subject ids are
//! scoped to their session (`s<t>/<raw id>`).
//!
//! **Feature file** (CSV, UTF-8, `.` as decimal separator): header
//! `sample_id,subject_id,label,f0,...,f{d-1}`, one sample per row, `label`
//! holding the class name.
//!
//! **Report directory**: `report.json` (every value at full precision plus the
//! configuration echo), `trials/trial_<τ>.json`, and `summary.txt` with the
//! per-session means, Ā and Ã in percent.
//!
//! **Head dump** (CSV): header `session,class,w0,...,w{m-1}`, one row per
//! head-group row, `class` holding the class name.
//!
//! **Fold dump** (CSV): header `session,sample_id,subject_id,fold`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{scoped_subject_id, LabelRegistry, Sample, SessionDataset, SessionSequence};
use crate::error::{Error, Result};
use crate::metrics::{self, ExperimentReport};
use crate::pipeline::{DataSource, ExperimentConfig, TrialResult};
use crate::rch::{HeadGroup, Rch};
use crate::split::FoldAssignment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestSession {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<u32>,
    pub label_names: Vec<String>,
    pub features_path: PathBuf,
    #[serde(default)]
    pub min_samples_per_class: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub name: String,
    pub feature_dim: usize,
    #[serde(default)]
    pub cross_session_subjects: bool,
    pub sessions: Vec<ManifestSession>,
    /// Directory that relative feature paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Manifest {
    /// Registry over the declared label names, before any class filtering.
    pub fn registry(&self) -> LabelRegistry {
        let mut registry = LabelRegistry::new();
        for name in self.sessions.iter().flat_map(|s| &s.label_names) {
            registry.register(name);
        }
        registry
    }

    pub fn features_path(&self, session: &ManifestSession) -> PathBuf {
        self.base_dir.join(&session.features_path)
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn json_error(path: &Path, e: serde_json::Error) -> Error {
    let field = e
        .to_string()
        .split('`')
        .nth(1)
        .map(str::to_owned)
        .unwrap_or_else(|| "-".to_owned());
    Error::load(path, e.line() as u64, field, e.to_string())
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let mut manifest: Manifest =
        serde_json::from_str(&read_to_string(path)?).map_err(|e| json_error(path, e))?;
    manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();

    let bad = |field: String, msg: String| Error::load(path, 0, field, msg);
    if manifest.feature_dim == 0 {
        return Err(bad("feature_dim".into(), "must be positive".into()));
    }
    if manifest.sessions.is_empty() {
        return Err(bad("sessions".into(), "at least one session is required".into()));
    }
    let mut names = HashSet::new();
    for (i, s) in manifest.sessions.iter().enumerate() {
        if !names.insert(s.name.as_str()) {
            return Err(bad(format!("sessions[{i}].name"), format!("duplicate session name `{}`", s.name)));
        }
        if s.label_names.is_empty() {
            return Err(bad(format!("sessions[{i}].label_names"), "must not be empty".into()));
        }
        let unique: BTreeSet<&String> = s.label_names.iter().collect();
        if unique.len() != s.label_names.len() {
            return Err(bad(format!("sessions[{i}].label_names"), "duplicate label name".into()));
        }
        let features = manifest.features_path(s);
        if let Err(e) = fs::File::open(&features) {
            return Err(bad(
                format!("sessions[{i}].features_path"),
                format!("cannot read {}: {e}", features.display()),
            ));
        }
    }
    Ok(manifest)
}

/// Reads one session's feature file, drops under-populated classes, and
/// registers the surviving classes in `registry`.
pub fn load_session_features(
    entry: &ManifestSession,
    session_index: usize,
    registry: &mut LabelRegistry,
    feature_dim: usize,
    cross_session_subjects: bool,
    base_dir: &Path,
) -> Result<SessionDataset> {
    let path = base_dir.join(&entry.features_path);
    let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let csv_err = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line());
        Error::load(&path, line, "-", e.to_string())
    };

    let header = reader.headers().map_err(csv_err)?.clone();
    let columns: Vec<&str> = header.iter().collect();
    if columns.len() < 3 || columns[..3] != ["sample_id", "subject_id", "label"] {
        return Err(Error::load(&path, 1, "header", "expected `sample_id,subject_id,label,f0,...`"));
    }
    if columns.len() - 3 != feature_dim {
        return Err(Error::load(
            &path,
            1,
            "header",
            format!(
                "session `{}`: manifest declares feature_dim {feature_dim} but the file has {} feature columns",
                entry.name,
                columns.len() - 3
            ),
        ));
    }
    for (j, col) in columns[3..].iter().enumerate() {
        if *col != format!("f{j}") {
            return Err(Error::load(&path, 1, "header", format!("column {} should be `f{j}`, found `{col}`", j + 3)));
        }
    }

    let declared: BTreeMap<&str, usize> = entry
        .label_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut seen_ids = HashSet::new();
    let mut rows: Vec<(String, String, usize, Vec<f64>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != columns.len() {
            return Err(Error::load(
                &path,
                line,
                "-",
                format!("expected {} fields, found {}", columns.len(), record.len()),
            ));
        }
        let sample_id = record[0].to_owned();
        if !seen_ids.insert(sample_id.clone()) {
            return Err(Error::load(&path, line, "sample_id", format!("duplicate sample id `{sample_id}`")));
        }
        let label = *declared.get(&record[2]).ok_or_else(|| {
            Error::load(
                &path,
                line,
                "label",
                format!("`{}` is not a label of session `{}`", &record[2], entry.name),
            )
        })?;
        let features = (0..feature_dim)
            .map(|j| {
                let raw = &record[3 + j];
                raw.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::load(&path, line, format!("f{j}"), format!("`{raw}` is not a finite number")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((sample_id, record[1].to_owned(), label, features));
    }

    let mut counts = vec![0usize; entry.label_names.len()];
    rows.iter().for_each(|r| counts[r.2] += 1);
    let kept: Vec<bool> = counts.iter().map(|&n| n >= entry.min_samples_per_class).collect();
    for (name, (&n, _)) in entry.label_names.iter().zip(counts.iter().zip(&kept)).filter(|(_, (_, k))| !**k) {
        log::info!(
            "session `{}`: dropping class `{name}` ({n} < {} samples)",
            entry.name,
            entry.min_samples_per_class
        );
    }
    let class_of: Vec<Option<usize>> = entry
        .label_names
        .iter()
        .zip(&kept)
        .map(|(name, &k)| k.then(|| registry.register(name)))
        .collect();
    let label_set: BTreeSet<usize> = class_of.iter().flatten().copied().collect();
    let samples = rows
        .into_iter()
        .filter_map(|(sample_id, subject, label, features)| {
            class_of[label].map(|c| Sample {
                sample_id,
                subject_id: scoped_subject_id(session_index, &subject, cross_session_subjects),
                label: c,
                features,
            })
        })
        .collect();
    SessionDataset::new(session_index, samples, label_set).map_err(|e| match e {
        Error::Config(msg) => Error::load(&path, 0, "-", msg),
        other => other,
    })
}

pub fn load_sequence(manifest_path: impl AsRef<Path>) -> Result<SessionSequence> {
    let manifest = load_manifest(manifest_path)?;
    let mut registry = LabelRegistry::new();
    let sessions = manifest
        .sessions
        .iter()
        .enumerate()
        .map(|(i, entry)| {
            load_session_features(
                entry,
                i + 1,
                &mut registry,
                manifest.feature_dim,
                manifest.cross_session_subjects,
                &manifest.base_dir,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    SessionSequence::new(sessions, registry, manifest.feature_dim)
}

/// Writes `seq` as a manifest plus one feature file per session. Subject ids
/// are written as stored, which are already session scoped, so the manifest
/// declares them cross-session.
pub fn write_stream(seq: &SessionSequence, dir: impl AsRef<Path>, name: &str) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let registry = seq.registry();
    let mut sessions = Vec::new();
    for s in seq.sessions() {
        let t = s.session_index();
        let file = format!("session_{t}.csv");
        let path = dir.join(&file);
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["sample_id".to_owned(), "subject_id".to_owned(), "label".to_owned()];
        header.extend((0..seq.feature_dim()).map(|j| format!("f{j}")));
        let write_err = |e: csv::Error| Error::load(&path, 0, "-", e.to_string());
        w.write_record(&header).map_err(write_err)?;
        for x in s.samples() {
            let mut row = vec![x.sample_id.clone(), x.subject_id.clone(), registry.name(x.label)?.to_owned()];
            row.extend(x.features.iter().map(|v| v.to_string()));
            w.write_record(&row).map_err(write_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::load(&path, 0, "-", e.to_string()))?;
        write_file(&path, &bytes)?;
        sessions.push(ManifestSession {
            name: format!("session {t}"),
            year: None,
            label_names: s
                .label_set()
                .iter()
                .map(|&c| registry.name(c).map(str::to_owned))
                .collect::<Result<_>>()?,
            features_path: file.into(),
            min_samples_per_class: 0,
        });
    }
    let manifest = Manifest {
        name: name.to_owned(),
        feature_dim: seq.feature_dim(),
        cross_session_subjects: true,
        sessions,
        base_dir: PathBuf::new(),
    };
    let path = dir.join("manifest.json");
    write_json(&path, &manifest)?;
    Ok(path)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::load(path, 0, "-", e.to_string()))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_to_string(path)?).map_err(|e| json_error(path, e))
}

pub fn write_report(report: &ExperimentReport, dir: impl AsRef<Path>, label: &str) -> Result<()> {
    if report.trials.is_empty() {
        return Err(Error::protocol("refusing to write a report without trials"));
    }
    let dir = dir.as_ref();
    write_json(&dir.join("report.json"), report)?;
    for t in &report.trials {
        write_json(&dir.join("trials").join(format!("trial_{}.json", t.trial)), t)?;
    }
    write_file(&dir.join("summary.txt"), report.table(label).as_bytes())
}

pub fn read_report(dir: impl AsRef<Path>) -> Result<ExperimentReport> {
    read_json(&dir.as_ref().join("report.json"))
}

/// Rebuilds the aggregate from `trials/trial_*.json`, keeping the config echo
/// of `report.json` when present.
pub fn reaggregate(dir: impl AsRef<Path>) -> Result<ExperimentReport> {
    let dir = dir.as_ref();
    let trials_dir = dir.join("trials");
    let mut trials: Vec<TrialResult> = fs::read_dir(&trials_dir)
        .map_err(|e| Error::io(&trials_dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|p| read_json(&p))
        .collect::<Result<_>>()?;
    trials.sort_by_key(|t| t.trial);
    let k = trials.len();
    let mut report = metrics::aggregate(trials, k)?;
    if dir.join("report.json").exists() {
        report.config = read_report(dir)?.config;
    }
    Ok(report)
}

pub fn write_rch_csv(rch: &Rch, registry: &LabelRegistry, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::load(path, 0, "-", e.to_string());
    let mut header = vec!["session".to_owned(), "class".to_owned()];
    header.extend((0..rch.feature_dim()).map(|j| format!("w{j}")));
    w.write_record(&header).map_err(err)?;
    for g in rch.groups() {
        for (&c, row) in &g.class_rows {
            let mut rec = vec![g.session_index.to_string(), registry.name(c)?.to_owned()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::load(path, 0, "-", e.to_string()))?;
    write_file(path, &bytes)
}

pub fn read_rch_csv(path: impl AsRef<Path>, registry: &LabelRegistry) -> Result<Rch> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let csv_err = |e: csv::Error| Error::load(path, e.position().map_or(0, |p| p.line()), "-", e.to_string());
    let width = reader.headers().map_err(csv_err)?.len().saturating_sub(2);
    let mut groups: Vec<HeadGroup> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let session: usize = record[0]
            .parse()
            .map_err(|_| Error::load(path, line, "session", format!("`{}` is not a session index", &record[0])))?;
        let class = registry
            .index(&record[1])
            .map_err(|_| Error::load(path, line, "class", format!("unknown class `{}`", &record[1])))?;
        let row = (0..width)
            .map(|j| {
                record[2 + j]
                    .parse::<f64>()
                    .map_err(|_| Error::load(path, line, format!("w{j}"), format!("`{}` is not a number", &record[2 + j])))
            })
            .collect::<Result<Vec<_>>>()?;
        match groups.last_mut() {
            Some(g) if g.session_index == session => {
                g.class_rows.insert(class, row);
            }
            _ => groups.push(HeadGroup {
                session_index: session,
                class_rows: BTreeMap::from([(class, row)]),
            }),
        }
    }
    Rch::from_groups(width, groups)
}

pub fn write_assignments_csv(
    seq: &SessionSequence,
    assignments: &[FoldAssignment],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::load(path, 0, "-", e.to_string());
    w.write_record(["session", "sample_id", "subject_id", "fold"]).map_err(err)?;
    for (s, a) in seq.sessions().iter().zip(assignments) {
        for x in s.samples() {
            let fold = a.fold_of.get(&x.sample_id).ok_or_else(|| {
                Error::protocol(format!("sample `{}` has no fold", x.sample_id))
            })?;
            w.write_record([
                s.session_index().to_string(),
                x.sample_id.clone(),
                x.subject_id.clone(),
                fold.to_string(),
            ])
            .map_err(err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::load(path, 0, "-", e.to_string()))?;
    write_file(path, &bytes)
}

/// Loads an experiment config; relative manifest and output paths are taken
/// relative to the config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let mut cfg: ExperimentConfig = read_json(path)?;
    let base = path.parent().unwrap_or(Path::new(""));
    if let DataSource::Manifest(m) = &mut cfg.data {
        if m.is_relative() {
            *m = base.join(&*m);
        }
    }
    if let Some(out) = &mut cfg.out {
        if out.is_relative() {
            *out = base.join(&*out);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_synth_spec(path: impl AsRef<Path>) -> Result<crate::synth::SynthSpec> {
    read_json(path.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_stream, SynthSpec, BENCHMARK_LABEL_SETS};
    use std::fmt::Write as _;

    fn csv_with(labels: &[(&str, usize)], d: usize) -> String {
        let mut s = String::from("sample_id,subject_id,label");
        (0..d).for_each(|j| write!(s, ",f{j}").unwrap());
        s.push('\n');
        let mut n = 0;
        for (label, count) in labels {
            for _ in 0..*count {
                write!(s, "x{n},p{},{label}", n % 3).unwrap();
                (0..d).for_each(|j| write!(s, ",{}.5", n + j).unwrap());
                s.push('\n');
                n += 1;
            }
        }
        s
    }

    fn entry(labels: &[&str], min: usize) -> ManifestSession {
        ManifestSession {
            name: "samm".into(),
            year: Some(2018),
            label_names: labels.iter().map(|s| s.to_string()).collect(),
            features_path: "f.csv".into(),
            min_samples_per_class: min,
        }
    }

    #[test]
    fn minimum_sample_filter_drops_small_classes() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("f.csv"), csv_with(&[("anger", 12), ("contempt", 9), ("happiness", 10)], 2)).unwrap();
        let mut reg = LabelRegistry::new();
        let s = load_session_features(&entry(&["anger", "contempt", "happiness"], 10), 1, &mut reg, 2, false, dir.path()).unwrap();
        assert_eq!(s.len(), 22);
        assert_eq!(reg.names(), &["anger".to_string(), "happiness".to_string()]);
        assert_eq!(s.label_set().len(), 2);
        assert!(s.samples().iter().all(|x| x.subject_id.starts_with("s1/")));

        let mut reg = LabelRegistry::new();
        let s = load_session_features(&entry(&["anger", "contempt", "happiness"], 0), 2, &mut reg, 2, true, dir.path()).unwrap();
        assert_eq!(s.len(), 31);
        assert_eq!(reg.len(), 3);
        assert!(s.samples().iter().all(|x| !x.subject_id.contains('/')));
    }

    #[test]
    fn loader_errors_name_file_line_and_field() {
        let dir = tempfile::tempdir().unwrap();
        let check = |contents: &str, field: &str, line: u64| {
            fs::write(dir.path().join("f.csv"), contents).unwrap();
            let mut reg = LabelRegistry::new();
            let err = load_session_features(&entry(&["a"], 0), 1, &mut reg, 2, false, dir.path()).unwrap_err();
            match &err {
                Error::Load { file, line: l, field: f, .. } => {
                    assert!(file.ends_with("f.csv"));
                    assert_eq!((f.as_str(), *l), (field, line), "{err}");
                }
                other => panic!("unexpected {other}"),
            }
        };
        check("sample_id,subject_id,label,f0,f1\nx,p,a,1,oops\n", "f1", 2);
        check("sample_id,subject_id,label,f0,f1\nx,p,a,1,2\ny,p,zzz,1,2\n", "label", 3);
        check("sample_id,subject_id,label,f0,f1\nx,p,a,1,2\nx,p,a,1,2\n", "sample_id", 3);
        check("sample_id,subject_id,label,f0\nx,p,a,1\n", "header", 1);
        check("sample_id,subject_id,label,f0,f1\nx,p,a,1,NaN\n", "f1", 2);
    }

    fn write_manifest(dir: &Path, body: &str) -> PathBuf {
        let p = dir.join("manifest.json");
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn benchmark_manifest_registry() {
        let dir = tempfile::tempdir().unwrap();
        let names = ["casme2", "samm", "mmew", "casme3"];
        let mut sessions = Vec::new();
        for (name, labels) in names.iter().zip(BENCHMARK_LABEL_SETS) {
            let counts: Vec<(&str, usize)> = labels.iter().map(|l| (*l, 2)).collect();
            fs::write(dir.path().join(format!("{name}.csv")), csv_with(&counts, 3)).unwrap();
            sessions.push(serde_json::json!({"name": name, "label_names": labels, "features_path": format!("{name}.csv")}));
        }
        let body = serde_json::json!({"name": "bench", "feature_dim": 3, "sessions": sessions}).to_string();
        let path = write_manifest(dir.path(), &body);
        let m = load_manifest(&path).unwrap();
        assert_eq!(m.registry().len(), 9);
        let seq = load_sequence(&path).unwrap();
        let sizes: Vec<usize> = (1..=4).map(|t| seq.cumulative_label_space(t).unwrap().len()).collect();
        assert_eq!(sizes, vec![5, 7, 9, 9]);
        assert_eq!(seq.registry().names(), m.registry().names());
    }

    #[test]
    fn manifest_validation() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("one.csv"), csv_with(&[("a", 3)], 2)).unwrap();
        let one = r#"{"name": "x", "feature_dim": 2, "sessions": [{"name": "s", "label_names": ["a"], "features_path": "one.csv"}]}"#;
        let seq = load_sequence(write_manifest(dir.path(), one)).unwrap();
        assert_eq!(seq.len(), 1);

        let wrong_dim = one.replace("\"feature_dim\": 2", "\"feature_dim\": 5");
        let err = load_sequence(write_manifest(dir.path(), &wrong_dim)).unwrap_err();
        assert!(err.to_string().contains("session `s`"), "{err}");

        let dup = r#"{"name": "x", "feature_dim": 2, "sessions": [
            {"name": "s", "label_names": ["a"], "features_path": "one.csv"},
            {"name": "s", "label_names": ["a"], "features_path": "one.csv"}]}"#;
        assert!(matches!(load_manifest(write_manifest(dir.path(), dup)), Err(Error::Load { .. })));
        let missing = one.replace("one.csv", "nope.csv");
        let err = load_manifest(write_manifest(dir.path(), &missing)).unwrap_err();
        assert!(err.to_string().contains("features_path"), "{err}");
        let no_field = r#"{"name": "x", "sessions": []}"#;
        let err = load_manifest(write_manifest(dir.path(), no_field)).unwrap_err();
        assert!(err.to_string().contains("feature_dim"), "{err}");
    }

    #[test]
    fn synthetic_stream_round_trips_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let seq = generate_stream(&SynthSpec { feature_dim: 8, samples_per_class_per_session: 6, ..SynthSpec::default() }).unwrap();
        let path = write_stream(&seq, dir.path(), "synthetic").unwrap();
        let back = load_sequence(&path).unwrap();
        assert_eq!(back, seq);
        // manifest fixpoint
        let m = load_manifest(&path).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let again: Manifest = serde_json::from_str(&text).unwrap();
        assert_eq!(again.sessions, m.sessions);
    }

    #[test]
    fn head_dump_round_trip() {
        let mut reg = LabelRegistry::new();
        ["x", "y", "z"].iter().for_each(|n| {
            reg.register(n);
        });
        let mut rng = crate::rng::substream(3, &[]);
        let mut rch = Rch::new(4);
        rch.add_session(1, &BTreeSet::from([0, 1]), crate::rch::InitSpec::Gaussian { std: 1.0 }, &mut rng).unwrap();
        rch.add_session(2, &BTreeSet::from([1, 2]), crate::rch::InitSpec::Gaussian { std: 1.0 }, &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("heads.csv");
        write_rch_csv(&rch, &reg, &path).unwrap();
        assert_eq!(read_rch_csv(&path, &reg).unwrap(), rch);
        assert!(fs::read_to_string(&path).unwrap().starts_with("session,class,w0,w1,w2,w3\n"));
    }
}
