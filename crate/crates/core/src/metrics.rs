//! Session accuracy, final accuracy `Ã = A_n`, average accuracy
//! `Ā = (1/n) Σ A_i`, and averaging over the bound trials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::TrialResult;

pub fn final_accuracy(accuracies: &[f64]) -> Result<f64> {
    accuracies
        .last()
        .copied()
        .ok_or_else(|| Error::protocol("final accuracy of an empty accuracy vector"))
}

pub fn average_accuracy(accuracies: &[f64]) -> Result<f64> {
    if accuracies.is_empty() {
        return Err(Error::protocol("average accuracy of an empty accuracy vector"));
    }
    Ok(accuracies.iter().sum::<f64>() / accuracies.len() as f64)
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation; `None` below two values.
fn sample_std(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    Some((ss / (values.len() - 1) as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub trials: Vec<TrialResult>,
    pub mean_per_session: Vec<f64>,
    pub mean_final: f64,
    pub mean_average: f64,
    pub per_trial_final: Vec<f64>,
    pub per_trial_average: Vec<f64>,
    pub std_final: Option<f64>,
    pub std_average: Option<f64>,
    /// Echo of the configuration that produced the report.
    #[serde(default)]
    pub config: serde_json::Value,
}

/// Averages `k` trial results over the trials.
pub fn aggregate(trials: Vec<TrialResult>, k: usize) -> Result<ExperimentReport> {
    if trials.is_empty() {
        return Err(Error::protocol("cannot aggregate zero trials"));
    }
    if trials.len() != k {
        return Err(Error::protocol(format!(
            "expected {k} trials, got {}",
            trials.len()
        )));
    }
    let n = trials[0].sessions.len();
    if n == 0 {
        return Err(Error::protocol("trial without sessions"));
    }
    if let Some(t) = trials.iter().find(|t| t.sessions.len() != n) {
        return Err(Error::protocol(format!(
            "trial {} has {} sessions, trial {} has {n}",
            t.trial,
            t.sessions.len(),
            trials[0].trial
        )));
    }
    let per_trial: Vec<Vec<f64>> = trials.iter().map(TrialResult::accuracies).collect();
    let per_trial_final = per_trial
        .iter()
        .map(|a| final_accuracy(a))
        .collect::<Result<Vec<_>>>()?;
    let per_trial_average = per_trial
        .iter()
        .map(|a| average_accuracy(a))
        .collect::<Result<Vec<_>>>()?;
    let mean_per_session = (0..n)
        .map(|i| mean(&per_trial.iter().map(|a| a[i]).collect::<Vec<_>>()))
        .collect();
    Ok(ExperimentReport {
        mean_final: mean(&per_trial_final),
        mean_average: mean(&per_trial_average),
        std_final: sample_std(&per_trial_final),
        std_average: sample_std(&per_trial_average),
        mean_per_session,
        per_trial_final,
        per_trial_average,
        trials,
        config: serde_json::Value::Null,
    })
}

impl ExperimentReport {
    pub fn sessions(&self) -> usize {
        self.mean_per_session.len()
    }

    /// Header line of [`ExperimentReport::table_row`].
    pub fn table_header(sessions: usize) -> String {
        let mut s = format!("{:<24}", "Method");
        for i in 1..=sessions {
            s.push_str(&format!(" | {:>9}", format!("Session {i}")));
        }
        s.push_str(&format!(" | {:>6} | {:>6}", "Ā", "Ã"));
        s
    }

    /// Percentages to two decimals: per-session means, then Ā and Ã.
    pub fn table_row(&self, label: &str) -> String {
        let mut s = format!("{label:<24}");
        for a in &self.mean_per_session {
            s.push_str(&format!(" | {:>9.2}", 100.0 * a));
        }
        s.push_str(&format!(
            " | {:>6.2} | {:>6.2}",
            100.0 * self.mean_average,
            100.0 * self.mean_final
        ));
        s
    }

    pub fn table(&self, label: &str) -> String {
        format!(
            "{}\n{}\n",
            Self::table_header(self.sessions()),
            self.table_row(label)
        )
    }
}
