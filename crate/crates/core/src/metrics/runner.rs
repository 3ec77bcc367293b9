use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use super::config::{ConfigError, ExperimentConfig, Protocol, TranscriptPolicy};
use super::results::{ResultsDoc, TrialRow};
use crate::engine::PartyId;
use crate::protocols::{self, random_bits, ProtocolError, ProtocolOutcome, RunOptions};

/// Environment variable naming the output directory when neither the
/// command line nor the config picks one.
pub const OUT_DIR_ENV: &str = "ORTHOQC_OUT_DIR";

pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("results"), PathBuf::from)
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    #[error("trial {trial}: {source}")]
    Protocol {
        trial: usize,
        #[source]
        source: ProtocolError,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl ExperimentError {
    /// 1 for anything the user can fix in the config, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 1,
            _ => 2,
        }
    }
}

/// Runs trial `trial` of an already resolved config. Each trial draws from
/// its own ChaCha stream, so results do not depend on scheduling.
pub fn run_trial(config: &ExperimentConfig, trial: usize) -> Result<ProtocolOutcome, ExperimentError> {
    let protocol = config.protocol()?;
    let p = &config.params;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(trial as u64);
    let opts = RunOptions {
        threshold: p.threshold.unwrap_or(protocol.default_threshold()),
        max_restarts: p.max_restarts.unwrap_or(3),
        channel: config.channel,
    };
    let n = config.n();
    let message = match protocol.message_len(n) {
        Some(len) => config.message_bits().unwrap_or_else(|| random_bits(len, &mut rng)),
        None => Vec::new(),
    };
    let r = p.reflectivity.unwrap_or(0.5);
    let mut eve = config.eve.build();
    let eve = eve.as_mut();
    let rng = &mut rng;
    let outcome = match protocol {
        Protocol::Gv => protocols::gv_qkd(n, eve, &opts, rng),
        Protocol::KoashiImoto => protocols::koashi_imoto(n, r, eve, &opts, rng),
        Protocol::Ev => protocols::ev_run(n, p.bomb_probability.unwrap_or(1.0), eve, &opts, rng),
        Protocol::GuoShi => protocols::guo_shi(n, eve, &opts, rng),
        Protocol::N09 => protocols::n09_qkd(n, r, eve, &opts, rng),
        Protocol::Pp => protocols::pp_run(n, &message, false, eve, &opts, rng),
        Protocol::Cl => protocols::pp_run(n, &message, true, eve, &opts, rng),
        Protocol::Dll => protocols::dll_run(n, &message, eve, &opts, rng),
        Protocol::PpGv => protocols::pp_gv_run(n, &message, eve, &opts, rng),
        Protocol::DllGv => protocols::dll_gv_run(n, &message, eve, &opts, rng),
        Protocol::GvCheck => protocols::gv_subroutine(&message, eve, &opts, rng),
        Protocol::Bb84Check => protocols::bb84_subroutine(n, p.verifier.unwrap_or(PartyId::Alice), eve, &opts, rng),
    };
    outcome.map_err(|source| ExperimentError::Protocol { trial, source })
}

/// A finished experiment, ready to be written out.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub results: ResultsDoc,
    /// (trial, JSONL transcript) for the trials the policy keeps.
    pub transcripts: Vec<(usize, String)>,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Experiment, ExperimentError> {
    let config = config.resolve()?;
    let outcomes: Vec<ProtocolOutcome> =
        (0..config.trials).into_par_iter().map(|t| run_trial(&config, t)).collect::<Result<_, _>>()?;
    let rows = outcomes.iter().enumerate().map(|(t, o)| TrialRow::from_outcome(t, o)).collect();
    let transcripts = outcomes
        .iter()
        .enumerate()
        .filter(|(t, _)| match config.transcripts {
            TranscriptPolicy::First => *t == 0,
            TranscriptPolicy::All => true,
            TranscriptPolicy::None => false,
        })
        .map(|(t, o)| (t, o.transcript.to_jsonl()))
        .collect();
    Ok(Experiment { results: ResultsDoc::new(config, rows), transcripts })
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    let io_err = |source| ExperimentError::Io { path: path.to_owned(), source };
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

impl Experiment {
    /// Writes `results.json`, `results.csv` and `transcripts/trial_NNNNN.jsonl`
    /// under `dir`. Each file appears whole or not at all.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
        let mkdir = |d: &Path| fs::create_dir_all(d).map_err(|source| ExperimentError::Io { path: d.to_owned(), source });
        mkdir(dir)?;
        let mut written = Vec::new();
        let json = dir.join("results.json");
        write_atomic(&json, &self.results.to_json())?;
        written.push(json);
        let csv = dir.join("results.csv");
        write_atomic(&csv, &self.results.to_csv())?;
        written.push(csv);
        if !self.transcripts.is_empty() {
            let tdir = dir.join("transcripts");
            mkdir(&tdir)?;
            for (trial, text) in &self.transcripts {
                let path = tdir.join(format!("trial_{trial:05}.jsonl"));
                write_atomic(&path, text)?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trials_are_reproducible_and_distinct() {
        let mut cfg = ExperimentConfig::new(Protocol::Pp);
        cfg.params.n = Some(16);
        cfg.seed = 11;
        let cfg = cfg.resolve().unwrap();
        let a = run_trial(&cfg, 0).unwrap();
        let b = run_trial(&cfg, 0).unwrap();
        let c = run_trial(&cfg, 1).unwrap();
        assert_eq!(a.alice_bits, b.alice_bits);
        assert_eq!(a.transcript.to_jsonl(), b.transcript.to_jsonl());
        assert_ne!(a.transcript.to_jsonl(), c.transcript.to_jsonl());
    }

    #[test]
    fn config_errors_exit_with_one() {
        let mut cfg = ExperimentConfig::new(Protocol::Pp);
        cfg.params.n = Some(3);
        let err = run_experiment(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn writes_expected_files() {
        let mut cfg = ExperimentConfig::new(Protocol::Gv);
        cfg.params.n = Some(20);
        cfg.trials = 3;
        cfg.transcripts = TranscriptPolicy::All;
        let exp = run_experiment(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let written = exp.write(dir.path()).unwrap();
        assert_eq!(written.len(), 5);
        assert!(dir.path().join("transcripts/trial_00002.jsonl").exists());
        let doc = ResultsDoc::from_json(&fs::read_to_string(dir.path().join("results.json")).unwrap()).unwrap();
        assert_eq!(doc.trials.len(), 3);
        assert_eq!(doc.aggregate.mean_fidelity, Some(1.0));
    }
}
