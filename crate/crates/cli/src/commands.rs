//! `run`, `compare` and `validate` subcommands.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use netctl::whatif::{compare, render_table, ComparisonRow, WhatIfRequest};
use netctl::{run, Error, Scenario, FORMAT_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

/// Process exit status of a subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Parse = 3,
    Invalid = 4,
    Failure = 5,
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct CommandError {
    pub exit: Exit,
    pub message: String,
}

impl fmt::Display for CommandError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl CommandError {
    fn io(path: &Path, err: std::io::Error) -> Self {
        Self { exit: Exit::Failure, message: format!("{}: {err}", path.display()) }
    }
}

impl From<Error> for CommandError {
    fn from(err: Error) -> Self {
        let exit = match err {
            Error::Parse(_) => Exit::Parse,
            Error::Invalid { .. } => Exit::Invalid,
            _ => Exit::Failure,
        };
        Self { exit, message: err.to_string() }
    }
}

pub type CommandResult = Result<Exit, CommandError>;

pub fn load_scenario(path: &Path) -> Result<Scenario, CommandError> {
    let text = fs::read_to_string(path).map_err(|e| CommandError::io(path, e))?;
    let scenario = Scenario::from_json(&text).map_err(|e| CommandError {
        exit: Exit::Parse,
        message: format!("{}: {e}", path.display()),
    })?;
    Ok(scenario)
}

fn load_valid(path: &Path, max_cycles: Option<u32>) -> Result<Scenario, CommandError> {
    let mut scenario = load_scenario(path)?;
    if let Some(m) = max_cycles {
        scenario.max_cycles = m;
    }
    scenario.validate().map_err(|e| CommandError {
        exit: Exit::Invalid,
        message: format!("{}: {e}", path.display()),
    })?;
    Ok(scenario)
}

#[derive(Serialize)]
struct RunReport<'a> {
    format_version: u32,
    #[serde(flatten)]
    summary: &'a netctl::sim::RunSummary,
    wall_time_ms: f64,
}

pub fn run_command(
    scenario: &Path,
    out: Option<&Path>,
    format: Format,
    max_cycles: Option<u32>,
    stdout: &mut dyn Write,
) -> CommandResult {
    let scenario = load_valid(scenario, max_cycles)?;
    let result = run(&scenario)?;
    if let Some(path) = out {
        let file = fs::File::create(path).map_err(|e| CommandError::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        result
            .write_ndjson(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| CommandError::io(path, e))?;
    }
    let summary = result.summary();
    let wall_time_ms = result.wall_time.as_secs_f64() * 1e3;
    let line = match format {
        Format::Text => format!(
            "{}: {} ({} cycles, {:.1} ms)",
            summary.name, result.outcome, summary.cycles, wall_time_ms
        ),
        Format::Json => serde_json::to_string(&RunReport {
            format_version: FORMAT_VERSION,
            summary: &summary,
            wall_time_ms,
        })
        .expect("report serializes"),
    };
    writeln!(stdout, "{line}").map_err(|e| CommandError::io(Path::new("<stdout>"), e))?;
    Ok(Exit::Ok)
}

pub fn validate_command(scenario: &Path, format: Format, stdout: &mut dyn Write) -> CommandResult {
    let s = load_valid(scenario, None)?;
    let line = match format {
        Format::Text => format!(
            "{}: ok ({} nodes, {} targets, {:?} model)",
            s.display_name(),
            s.nodes.len(),
            s.targets.len(),
            s.comm_model
        ),
        Format::Json => serde_json::json!({
            "format_version": FORMAT_VERSION,
            "name": s.display_name(),
            "valid": true,
        })
        .to_string(),
    };
    writeln!(stdout, "{line}").map_err(|e| CommandError::io(Path::new("<stdout>"), e))?;
    Ok(Exit::Ok)
}

#[derive(Serialize)]
struct ComparisonDocument<'a> {
    format_version: u32,
    rows: &'a [ComparisonRow],
}

/// Loads what-if variants. A variant's `base`, when set, is a scenario path
/// relative to the variants file.
pub fn load_variants(path: &Path) -> Result<Vec<WhatIfRequest>, CommandError> {
    let text = fs::read_to_string(path).map_err(|e| CommandError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CommandError {
        exit: Exit::Parse,
        message: format!("{}: {e}", path.display()),
    })
}

pub fn compare_command(
    scenario: &Path,
    variants: Option<&Path>,
    out: Option<&Path>,
    format: Format,
    max_cycles: Option<u32>,
    stdout: &mut dyn Write,
) -> CommandResult {
    let base = load_valid(scenario, max_cycles)?;
    let requests = match variants {
        Some(p) => load_variants(p)?,
        None => Vec::new(),
    };
    let variants_dir: PathBuf = variants
        .and_then(Path::parent)
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let prepared: Vec<(String, netctl::Result<Scenario>)> = requests
        .iter()
        .map(|req| {
            let scenario = match &req.base {
                None => Ok(base.clone()),
                Some(rel) => load_valid(&variants_dir.join(rel), max_cycles)
                    .map_err(|e| Error::invalid("base", e.message)),
            }
            .and_then(|b| req.apply(&b));
            (req.label.clone(), scenario)
        })
        .collect();
    let base_label = base.display_name().to_string();
    let rows = compare(&base_label, &base, &prepared)?;

    let document = serde_json::to_string_pretty(&ComparisonDocument { format_version: FORMAT_VERSION, rows: &rows })
        .expect("comparison serializes");
    if let Some(path) = out {
        fs::write(path, format!("{document}\n")).map_err(|e| CommandError::io(path, e))?;
    }
    let text = match format {
        Format::Text => render_table(&rows),
        Format::Json => format!("{document}\n"),
    };
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| CommandError::io(Path::new("<stdout>"), e))?;
    Ok(Exit::Ok)
}
