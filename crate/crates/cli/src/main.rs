//! `orthoqc`: run protocol experiments from a TOML config, list the
//! available protocols, and check recorded transcripts for causality.
//!
//! Settings resolve in this order, first match wins: command-line flag,
//! config file key, `ORTHOQC_OUT_DIR` (output directory only), built-in
//! default.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use orthoqc::adversaries::EveSpec;
use orthoqc::engine::{lint, Transcript};
use orthoqc::metrics::{default_output_dir, run_experiment, ExperimentConfig, ExperimentError, Protocol, OUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "orthoqc", version, about = "Orthogonal-state QKD and direct-communication simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the trials described by a config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Output directory [default: config `output`, then $ORTHOQC_OUT_DIR, then ./results]
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        protocol: Option<String>,
        /// Replace the config's adversary with this strategy at its defaults.
        #[arg(long)]
        eve: Option<String>,
    },
    /// Print the protocol names accepted in configs.
    ListProtocols,
    /// Check a JSONL transcript for causality and information-flow violations.
    LintTranscript { log: PathBuf },
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        Self { code: e.exit_code() as u8, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, seed, trials, out, protocol, eve } => run(&config, seed, trials, out, protocol, eve),
        Command::ListProtocols => {
            list_protocols();
            Ok(())
        }
        Command::LintTranscript { log } => lint_transcript(&log),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(
    path: &Path,
    seed: Option<u64>,
    trials: Option<usize>,
    out: Option<PathBuf>,
    protocol: Option<String>,
    eve: Option<String>,
) -> Result<(), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    let mut config = ExperimentConfig::from_toml(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(trials) = trials {
        config.trials = trials;
    }
    if let Some(protocol) = protocol {
        config.protocol = protocol;
    }
    if let Some(eve) = eve {
        config.eve = EveSpec::from_name(&eve).map_err(|e| Failure::config(format!("--eve: {e}")))?;
    }
    let dir = out.or_else(|| config.output.clone()).unwrap_or_else(default_output_dir);

    let experiment = run_experiment(&config)?;
    let written = experiment.write(&dir)?;
    let agg = &experiment.results.aggregate;
    let mut text = format!(
        "{} x{} seed={}: qber={:.4} detection={:.4} aborts={:.4} key_rate={:.4}\n",
        experiment.results.config.protocol,
        agg.trials,
        experiment.results.seed,
        agg.mean_qber,
        agg.detection_rate,
        agg.abort_rate,
        agg.mean_key_rate,
    );
    if let Some(f) = agg.mean_fidelity {
        text.push_str(&format!("fidelity={f:.4}\n"));
    }
    for p in written {
        text.push_str(&format!("wrote {}\n", p.display()));
    }
    emit(&text);
    Ok(())
}

fn list_protocols() {
    let mut text = String::new();
    for p in Protocol::ALL {
        text.push_str(&format!("{:<13} {:<20} {}\n", p.name(), format!("n = {}", p.size_unit()), p.summary()));
    }
    text.push_str(&format!("\nadversaries: {}\n", EveSpec::NAMES.join(", ")));
    text.push_str(&format!("default output directory: ${OUT_DIR_ENV} or ./results\n"));
    emit(&text);
}

/// Writes to stdout, tolerating a closed pipe (`orthoqc ... | head`).
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

/// Exit 0 when clean, 1 when the file cannot be read or parsed, 2 when it
/// parses but breaks a rule.
fn lint_transcript(path: &Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    let transcript = Transcript::from_jsonl(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    let report = lint(transcript.events());
    let mut text = format!("{} events\n", report.events);
    for (basis, count) in &report.measurements {
        text.push_str(&format!("  {basis:?} measurements: {count}\n"));
    }
    text.push_str(&format!("  eve measurements: {}\n", report.eve_measurements));
    if report.is_clean() {
        text.push_str("clean\n");
        emit(&text);
        return Ok(());
    }
    for issue in &report.issues {
        text.push_str(&format!("event {}: [{}] {}\n", issue.seq, issue.rule, issue.message));
    }
    emit(&text);
    Err(Failure { code: 2, message: format!("{} issue(s) found", report.issues.len()) })
}
