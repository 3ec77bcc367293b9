use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::protocols::ProtocolOutcome;

/// Per-trial columns of `results.csv`, in order.
pub const CSV_COLUMNS: [&str; 14] = [
    "trial",
    "protocol",
    "aborted",
    "restarts",
    "detected",
    "qber",
    "timing_violations",
    "systems_sent",
    "delivered_bits",
    "fidelity",
    "eve_accuracy",
    "key_rate",
    "transcript_events",
    "transcript_sha256",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub protocol: String,
    pub aborted: bool,
    pub restarts: usize,
    pub detected: bool,
    pub qber: f64,
    pub timing_violations: usize,
    pub systems_sent: usize,
    pub delivered_bits: usize,
    pub fidelity: Option<f64>,
    pub eve_accuracy: Option<f64>,
    pub key_rate: f64,
    pub transcript_events: usize,
    pub transcript_sha256: String,
    pub tallies: BTreeMap<String, u64>,
}

impl TrialRow {
    pub fn from_outcome(trial: usize, outcome: &ProtocolOutcome) -> Self {
        let jsonl = outcome.transcript.to_jsonl();
        Self {
            trial,
            protocol: outcome.protocol.clone(),
            aborted: outcome.aborted,
            restarts: outcome.restarts,
            detected: outcome.detected(),
            qber: outcome.qber(),
            timing_violations: outcome.timing_violations(),
            systems_sent: outcome.systems_sent,
            delivered_bits: outcome.bob_bits.len(),
            fidelity: outcome.fidelity(),
            eve_accuracy: outcome.eve_accuracy(),
            key_rate: outcome.key_rate(),
            transcript_events: outcome.transcript.len(),
            transcript_sha256: hex::encode(Sha256::digest(jsonl.as_bytes())),
            tallies: outcome.tallies.clone(),
        }
    }

    fn csv_record(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        vec![
            self.trial.to_string(),
            self.protocol.clone(),
            self.aborted.to_string(),
            self.restarts.to_string(),
            self.detected.to_string(),
            self.qber.to_string(),
            self.timing_violations.to_string(),
            self.systems_sent.to_string(),
            self.delivered_bits.to_string(),
            opt(self.fidelity),
            opt(self.eve_accuracy),
            self.key_rate.to_string(),
            self.transcript_events.to_string(),
            self.transcript_sha256.clone(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub trials: usize,
    pub mean_qber: f64,
    pub detection_rate: f64,
    pub abort_rate: f64,
    pub mean_key_rate: f64,
    pub mean_fidelity: Option<f64>,
    pub mean_eve_accuracy: Option<f64>,
    pub timing_violations: usize,
    pub tallies: BTreeMap<String, u64>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

impl Aggregate {
    pub fn from_rows(rows: &[TrialRow]) -> Self {
        let frac = |pred: fn(&TrialRow) -> bool| mean(rows.iter().map(|r| if pred(r) { 1.0 } else { 0.0 })).unwrap_or(0.0);
        let mut tallies = BTreeMap::new();
        for r in rows {
            for (k, v) in &r.tallies {
                *tallies.entry(k.clone()).or_insert(0) += v;
            }
        }
        Self {
            trials: rows.len(),
            mean_qber: mean(rows.iter().map(|r| r.qber)).unwrap_or(0.0),
            detection_rate: frac(|r| r.detected),
            abort_rate: frac(|r| r.aborted),
            mean_key_rate: mean(rows.iter().map(|r| r.key_rate)).unwrap_or(0.0),
            mean_fidelity: mean(rows.iter().filter_map(|r| r.fidelity)),
            mean_eve_accuracy: mean(rows.iter().filter_map(|r| r.eve_accuracy)),
            timing_violations: rows.iter().map(|r| r.timing_violations).sum(),
            tallies,
        }
    }
}

/// Contents of `results.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsDoc {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub aggregate: Aggregate,
    pub trials: Vec<TrialRow>,
}

impl ResultsDoc {
    pub fn new(config: ExperimentConfig, trials: Vec<TrialRow>) -> Self {
        Self {
            tool: "orthoqc".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: config.seed,
            aggregate: Aggregate::from_rows(&trials),
            config,
            trials,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("results serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_COLUMNS).expect("in-memory csv");
        for row in &self.trials {
            w.write_record(row.csv_record()).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::config::Protocol;

    fn row(trial: usize, qber: f64, detected: bool, fidelity: Option<f64>) -> TrialRow {
        TrialRow {
            trial,
            protocol: "pp".into(),
            aborted: false,
            restarts: usize::from(detected),
            detected,
            qber,
            timing_violations: 0,
            systems_sent: 24,
            delivered_bits: 4,
            fidelity,
            eve_accuracy: None,
            key_rate: 4.0 / 24.0,
            transcript_events: 10,
            transcript_sha256: "00".into(),
            tallies: BTreeMap::from([("rounds".to_owned(), 3)]),
        }
    }

    #[test]
    fn aggregate_means() {
        let rows = [row(0, 0.1, true, Some(1.0)), row(1, 0.3, false, None)];
        let a = Aggregate::from_rows(&rows);
        assert!((a.mean_qber - 0.2).abs() < 1e-12);
        assert_eq!(a.detection_rate, 0.5);
        assert_eq!(a.mean_fidelity, Some(1.0));
        assert_eq!(a.mean_eve_accuracy, None);
        assert_eq!(a.tallies["rounds"], 6);
    }

    #[test]
    fn json_round_trip_is_byte_stable() {
        let doc = ResultsDoc::new(
            ExperimentConfig::new(Protocol::Pp).resolve().unwrap(),
            vec![row(0, 1.0 / 3.0, true, Some(0.1 + 0.2)), row(1, 0.0, false, None)],
        );
        let text = doc.to_json();
        let back = ResultsDoc::from_json(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn csv_header_and_rows() {
        let doc = ResultsDoc::new(ExperimentConfig::new(Protocol::Pp), vec![row(0, 0.25, false, None)]);
        let csv = doc.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), CSV_COLUMNS.len());
        assert_eq!(fields[5], "0.25");
        assert_eq!(fields[9], "");
    }
}
