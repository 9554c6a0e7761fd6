//! Command-line front end: `run`, `lint`, `report` and `replay`.
//!
//! Exit codes are part of the interface: 0 success, 1 findings or a replay
//! divergence, 2 bad input (scenario, descriptor, trace or flags), 3 a
//! runtime invariant violation.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use crate::chain::state::{QueryKey, ReadMode};
use crate::chain::EOS;
use crate::contracts::checker::{check_vulnerabilities, Finding};
use crate::contracts::descriptor;
use crate::metrics::{self, DEFAULT_WINDOW_MS};
use crate::scenarios::{bundled, run_scenario, summarize, ConfigError, RunError, ScenarioSpec};
use crate::trace::{Trace, TraceError, TraceHeader, SCHEMA};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "eosim", version, about = "Deterministic EOSIO-style chain simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write its trace, summary and metric series.
    Run {
        /// Scenario file, or the name of a bundled scenario.
        #[arg(long)]
        scenario: String,
        /// Replaces the seed given in the scenario.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// State view used for the final balance listing.
        #[arg(long, default_value = "head")]
        read_mode: ReadMode,
    },
    /// Check contract descriptors for known vulnerability patterns.
    Lint {
        #[arg(required = true)]
        contracts: Vec<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Recompute the summary and metric series from a trace file.
    Report {
        trace: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
    /// Re-run the scenario recorded in a trace and compare byte for byte.
    Replay { trace: PathBuf },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}: {source}")]
    Config {
        origin: String,
        #[source]
        source: ConfigError,
    },
    #[error("{path}:{line}: {message}")]
    Descriptor { path: PathBuf, line: usize, message: String },
    #[error("{path}: {source}")]
    Trace {
        path: PathBuf,
        #[source]
        source: TraceError,
    },
    #[error("{0}: trace header carries no scenario to replay")]
    NoScenario(PathBuf),
    #[error("replay diverges at event {event} (line {line})")]
    ReplayDivergence { event: usize, line: usize },
    #[error("runtime failure: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ReplayDivergence { .. } => EXIT_FINDINGS,
            CliError::Runtime(_) => EXIT_RUNTIME,
            _ => EXIT_INPUT,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))
}

/// Parses `args` (program name first) and executes the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match cmd {
        Command::Run {
            scenario,
            seed,
            out: dir,
            format,
            read_mode,
        } => run(&scenario, seed, &dir, format, read_mode, out),
        Command::Lint { contracts, format } => lint(&contracts, format, out),
        Command::Report { trace, format, out: dir } => report(&trace, format, &dir, out),
        Command::Replay { trace } => replay(&trace, out),
    }
}

/// Loads a scenario from a path, falling back to the bundled set.
pub fn load_scenario(arg: &str) -> Result<ScenarioSpec, CliError> {
    let path = Path::new(arg);
    let text = if path.exists() {
        fs::read_to_string(path).map_err(io_err(path))?
    } else if let Some(t) = bundled::text(arg) {
        t.to_string()
    } else {
        return Err(CliError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or bundled scenario"),
        });
    };
    ScenarioSpec::parse(&text).map_err(|source| CliError::Config {
        origin: arg.to_string(),
        source,
    })
}

fn run_error(origin: &str, e: RunError) -> CliError {
    match e {
        RunError::Config(source) => CliError::Config {
            origin: origin.to_string(),
            source,
        },
        other => CliError::Runtime(other.to_string()),
    }
}

fn write_metrics(trace: &Trace, dir: &Path, format: Format) -> Result<(), CliError> {
    let Ok(report) = metrics::compute(trace, DEFAULT_WINDOW_MS) else {
        return Ok(());
    };
    match format {
        Format::Csv => {
            for (name, body) in report.csv_files() {
                write_file(&dir.join(name), body.as_bytes())?;
            }
        }
        Format::Json => {
            let text = serde_json::to_vec_pretty(&report).expect("metrics serialize");
            write_file(&dir.join("metrics.json"), &text)?;
        }
    }
    Ok(())
}

fn summary_bytes(summary: &crate::scenarios::Summary) -> Vec<u8> {
    let mut text = serde_json::to_vec_pretty(summary).expect("summary serializes");
    text.push(b'\n');
    text
}

fn run(arg: &str, seed: Option<u64>, dir: &Path, format: Format, read_mode: ReadMode, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut spec = load_scenario(arg)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let result = run_scenario(&spec).map_err(|e| run_error(arg, e))?;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_file(&dir.join("trace.jsonl"), result.trace.to_jsonl().as_bytes())?;
    write_file(&dir.join("summary.json"), &summary_bytes(&result.summary))?;
    write_metrics(&result.trace, dir, format)?;

    let chain = &result.node0;
    let mut balances = serde_json::Map::new();
    for account in result.ledger.accounts.keys() {
        let key = QueryKey::Balance {
            account: account.clone(),
            symbol: EOS.to_string(),
        };
        let v = chain.query(read_mode, &key).map_err(|e| CliError::Runtime(e.to_string()))?;
        balances.insert(account.to_string(), json!(v));
    }
    let listing = json!({ "read_mode": read_mode.as_str(), "balances": balances });
    write_file(&dir.join("balances.json"), &serde_json::to_vec_pretty(&listing).expect("json"))?;

    let _ = writeln!(
        out,
        "{}: {} events, head {}, written to {}",
        spec.name,
        result.trace.events.len(),
        chain.head_num(),
        dir.display()
    );
    Ok(EXIT_OK)
}

fn lint(paths: &[PathBuf], format: Option<Format>, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut all: Vec<(String, Vec<Finding>)> = Vec::new();
    for path in paths {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let parsed = descriptor::parse(&text).map_err(|e| CliError::Descriptor {
            path: path.clone(),
            line: e.line,
            message: e.message,
        })?;
        all.push((path.display().to_string(), check_vulnerabilities(&parsed.contract)));
    }
    if format == Some(Format::Json) {
        let doc: Vec<_> = all.iter().map(|(p, f)| json!({ "file": p, "findings": f })).collect();
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json"));
    } else {
        for (p, findings) in &all {
            if findings.is_empty() {
                let _ = writeln!(out, "{p}: clean");
            }
            for f in findings {
                let _ = writeln!(out, "{p}: {f}");
            }
        }
    }
    let any = all.iter().any(|(_, f)| !f.is_empty());
    Ok(if any { EXIT_FINDINGS } else { EXIT_OK })
}

fn read_trace(path: &Path) -> Result<Trace, CliError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    Trace::read_jsonl(std::io::BufReader::new(file)).map_err(|source| CliError::Trace {
        path: path.to_path_buf(),
        source,
    })
}

fn report(path: &Path, format: Format, dir: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let trace = read_trace(path)?;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_file(&dir.join("summary.json"), &summary_bytes(&summarize(&trace)))?;
    write_metrics(&trace, dir, format)?;
    let _ = writeln!(out, "report for {} written to {}", trace.header.scenario, dir.display());
    Ok(EXIT_OK)
}

/// Reads only the header line, so a corrupted event still reaches the
/// byte comparison.
fn read_header(path: &Path, text: &str) -> Result<TraceHeader, CliError> {
    let trace_err = |source| CliError::Trace {
        path: path.to_path_buf(),
        source,
    };
    let first = text.lines().next().ok_or_else(|| trace_err(TraceError::Empty))?;
    let header: TraceHeader = serde_json::from_str(first).map_err(|e| {
        trace_err(TraceError::Parse {
            line: 1,
            message: e.to_string(),
        })
    })?;
    if header.schema != SCHEMA {
        return Err(trace_err(TraceError::SchemaMismatch { found: header.schema }));
    }
    Ok(header)
}

fn replay(path: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let recorded = fs::read_to_string(path).map_err(io_err(path))?;
    let header = read_header(path, &recorded)?;
    let spec_text = header.spec.ok_or_else(|| CliError::NoScenario(path.to_path_buf()))?;
    let spec = ScenarioSpec::parse(&spec_text).map_err(|source| CliError::Config {
        origin: path.display().to_string(),
        source,
    })?;
    let fresh = run_scenario(&spec).map_err(|e| run_error(&spec.name, e))?.trace.to_jsonl();
    if let Some(line) = first_difference(&recorded, &fresh) {
        return Err(CliError::ReplayDivergence {
            event: line.saturating_sub(2),
            line,
        });
    }
    let _ = writeln!(out, "{}: replay matches ({} bytes)", spec.name, recorded.len());
    Ok(EXIT_OK)
}

/// 1-based line number of the first line that differs, if any.
fn first_difference(a: &str, b: &str) -> Option<usize> {
    let mut la = a.split_inclusive('\n');
    let mut lb = b.split_inclusive('\n');
    let mut n = 0;
    loop {
        n += 1;
        match (la.next(), lb.next()) {
            (None, None) => return None,
            (x, y) if x != y => return Some(n),
            _ => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_difference_finds_the_line() {
        assert_eq!(first_difference("a\nb\nc\n", "a\nb\nc\n"), None);
        assert_eq!(first_difference("a\nb\nc\n", "a\nx\nc\n"), Some(2));
        assert_eq!(first_difference("a\nb\n", "a\nb\nc\n"), Some(3));
        assert_eq!(first_difference("a\nb", "a\nb\n"), Some(2));
    }

    #[test]
    fn unknown_flag_is_an_input_error() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run_cli(["eosim", "run", "--bogus"], &mut o, &mut e), EXIT_INPUT);
    }

    #[test]
    fn invariant_failures_map_to_the_runtime_code() {
        let e = run_error("x", RunError::Invariant("node 1 finalized a different block 3".into()));
        assert_eq!(e.exit_code(), EXIT_RUNTIME);
        let e = run_error("x", RunError::Config(ConfigError::Parse { line: 1, message: "bad".into() }));
        assert_eq!(e.exit_code(), EXIT_INPUT);
        assert_eq!(CliError::ReplayDivergence { event: 0, line: 2 }.exit_code(), EXIT_FINDINGS);
    }
}
