//! `scd` — the command line front end for system composition models.
//!
//! Four commands share one pipeline: `check` parses, links and validates;
//! `fmt` rewrites sources into the canonical layout; `export` renders a
//! resolved model as JSON or DOT; `query` answers boundary, drill-down and
//! evaluation questions. Documents and results go to standard output,
//! diagnostics to the error stream, and the exit status is always 0 (clean),
//! 1 (error diagnostics) or 2 (usage or I/O failure).

use std::fs;
use std::io::{IsTerminal, Write};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use scdl::analyze::{evaluate_aggregates, Valuation};
use scdl::ast::SymbolKind;
use scdl::diag::{Diagnostic, Severity};
use scdl::export::{export_dot, export_json};
use scdl::resolve::{drill_down, resolve, FsLoader};
use scdl::span::SourceSpan;
use scdl::validate::{classify_boundary, validate};

#[derive(Parser)]
#[command(name = "scd", version, about = "Model systems by composition, environment, structure and mechanism")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, link and validate models, reporting diagnostics.
    Check {
        /// Root unit files, each checked independently in argument order.
        #[arg(required = true)]
        files: Vec<String>,
        /// Print each diagnostic as one standalone JSON object per line.
        #[arg(long)]
        json_diagnostics: bool,
        /// Count warnings as failures when computing the exit status.
        #[arg(long)]
        deny_warnings: bool,
    },
    /// Rewrite source files into the canonical layout.
    Fmt {
        #[arg(required = true)]
        files: Vec<String>,
        /// Write nothing; exit 1 if any file is not already canonical.
        #[arg(long)]
        check: bool,
    },
    /// Render a resolved model as a machine-readable document.
    Export {
        /// Root unit file.
        file: String,
        #[arg(long, value_enum)]
        format: ExportFormat,
        /// System path whose child level to draw (DOT only; defaults to the
        /// root level).
        #[arg(long)]
        level: Option<String>,
    },
    /// Ask questions of a resolved, validated model.
    Query {
        /// Root unit file.
        file: String,
        #[command(subcommand)]
        kind: QueryKind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Json,
    Dot,
}

#[derive(Subcommand)]
enum QueryKind {
    /// Split a system's composition into boundary and internal components.
    Boundary { target: String },
    /// List the systems of the level a system explodes into.
    Drill { target: String },
    /// Evaluate derived properties, printing `key=value` lines sorted by key.
    Eval {
        /// Restrict output to properties inside one system's subtree.
        target: Option<String>,
        /// Valuation file of `path = number` lines for intrinsic leaves.
        #[arg(long)]
        values: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = match cli.command {
        Command::Check { files, json_diagnostics, deny_warnings } => {
            files.iter().fold(0, |worst, file| {
                worst.max(check_one(file, json_diagnostics, deny_warnings))
            })
        }
        Command::Fmt { files, check } => fmt_files(&files, check),
        Command::Export { file, format, level } => export_cmd(&file, format, level.as_deref()),
        Command::Query { file, kind } => query_cmd(&file, &kind),
    };
    ExitCode::from(status)
}

// ===== Shared plumbing =====

fn out(text: &str) {
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(text.as_bytes());
}

fn out_line(text: &str) {
    out(text);
    out("\n");
}

fn usage_error(message: &str) -> u8 {
    let mut stderr = std::io::stderr().lock();
    let _ = writeln!(stderr, "scd: {message}");
    2
}

fn color_enabled() -> bool {
    std::env::var_os("NO_COLOR").is_none() && std::io::stderr().is_terminal()
}

/// The fixed diagnostic line, with the severity word colored when the error
/// stream is an ANSI terminal and NO_COLOR is unset.
fn render_colored(d: &Diagnostic) -> String {
    let paint = match d.severity {
        Severity::Error => "\x1b[31m",
        Severity::Warning => "\x1b[33m",
    };
    format!(
        "{}:{}:{}: {}{}\x1b[0m[{}]: {}",
        d.span.file, d.span.start_line, d.span.start_col, paint, d.severity.as_str(), d.code, d.message
    )
}

fn print_diagnostics(diags: &[Diagnostic], json: bool) {
    let color = color_enabled();
    let mut stderr = std::io::stderr().lock();
    for d in diags {
        let line = if json {
            d.render_json()
        } else if color {
            render_colored(d)
        } else {
            d.render()
        };
        let _ = writeln!(stderr, "{line}");
    }
}

fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}

/// Reads the root file up front so an unreadable path is a usage failure
/// (exit 2), distinct from diagnostics produced while resolving child units.
fn require_readable(file: &str) -> Result<(), u8> {
    match fs::read_to_string(file) {
        Ok(_) => Ok(()),
        Err(e) => Err(usage_error(&format!("cannot read `{file}`: {e}"))),
    }
}

// ===== check =====

fn check_one(file: &str, json: bool, deny_warnings: bool) -> u8 {
    if let Err(status) = require_readable(file) {
        return status;
    }
    let diags = match resolve(file, &FsLoader) {
        Ok(model) => validate(&model),
        Err(diags) => diags,
    };
    print_diagnostics(&diags, json);
    if has_errors(&diags) {
        1
    } else if deny_warnings && !diags.is_empty() {
        1
    } else {
        0
    }
}

// ===== fmt =====

fn fmt_files(files: &[String], check_only: bool) -> u8 {
    let mut status = 0u8;
    for file in files {
        let source = match fs::read_to_string(file) {
            Ok(s) => s,
            Err(e) => {
                status = status.max(usage_error(&format!("cannot read `{file}`: {e}")));
                continue;
            }
        };
        // Formatting ill-formed input is refused; the parse diagnostics say why.
        let unit = match scdl::parse(&source, file) {
            Ok(unit) => unit,
            Err(diags) => {
                print_diagnostics(&diags, false);
                status = status.max(2);
                continue;
            }
        };
        let canonical = scdl::format::format(&unit);
        if source == canonical {
            continue;
        }
        if check_only {
            let mut stderr = std::io::stderr().lock();
            let _ = writeln!(stderr, "{file}: not in canonical form");
            status = status.max(1);
        } else if let Err(e) = fs::write(file, canonical) {
            status = status.max(usage_error(&format!("cannot write `{file}`: {e}")));
        }
    }
    status
}

// ===== export =====

fn export_cmd(file: &str, format: ExportFormat, level: Option<&str>) -> u8 {
    if let Err(status) = require_readable(file) {
        return status;
    }
    let model = match resolve(file, &FsLoader) {
        Ok(model) => model,
        Err(diags) => {
            print_diagnostics(&diags, false);
            return 1;
        }
    };
    match format {
        ExportFormat::Json => {
            if level.is_some() {
                return usage_error("--level only applies to --format dot");
            }
            out(&export_json(&model));
            0
        }
        ExportFormat::Dot => {
            let unit_index = match level {
                None => 0,
                Some(path) => match drill_down(&model, path) {
                    Ok(view) => view.unit_index,
                    Err(diags) => {
                        print_diagnostics(&diags, false);
                        return 1;
                    }
                },
            };
            out(&export_dot(&model, unit_index));
            0
        }
    }
}

// ===== query =====

fn query_cmd(file: &str, kind: &QueryKind) -> u8 {
    if let Err(status) = require_readable(file) {
        return status;
    }
    let model = match resolve(file, &FsLoader) {
        Ok(model) => model,
        Err(diags) => {
            print_diagnostics(&diags, false);
            return 1;
        }
    };
    // Queries presuppose a valid model; warnings are reported but harmless.
    let diags = validate(&model);
    print_diagnostics(&diags, false);
    if has_errors(&diags) {
        return 1;
    }

    match kind {
        QueryKind::Boundary { target } => {
            let Some(sys) = find_system(&model, target) else {
                return unknown_system(&model, target);
            };
            let (boundary, internal) = classify_boundary(sys);
            out_line(&list_line("boundary", &boundary));
            out_line(&list_line("internal", &internal));
            0
        }
        QueryKind::Drill { target } => match drill_down(&model, target) {
            Ok(view) => {
                for sys in &view.unit.unit.systems {
                    out_line(&sys.name);
                }
                0
            }
            Err(diags) => {
                print_diagnostics(&diags, false);
                1
            }
        },
        QueryKind::Eval { target, values } => eval_cmd(&model, target.as_deref(), values.as_deref()),
    }
}

fn find_system<'a>(
    model: &'a scdl::ast::ResolvedModel,
    path: &str,
) -> Option<&'a scdl::ast::SystemDecl> {
    let symbol = model.symbols.get(path)?;
    (symbol.kind == SymbolKind::System)
        .then(|| &model.units[symbol.unit].unit.systems[symbol.system])
}

fn unknown_system(model: &scdl::ast::ResolvedModel, path: &str) -> u8 {
    let diag = Diagnostic::new(
        scdl::diag::codes::E_QRY_001,
        format!("no system named `{path}`"),
        SourceSpan::point(&model.root().path, 1, 1),
    );
    print_diagnostics(&[diag], false);
    1
}

fn list_line(label: &str, names: &[String]) -> String {
    if names.is_empty() {
        format!("{label}:")
    } else {
        format!("{label}: {}", names.join(", "))
    }
}

fn eval_cmd(model: &scdl::ast::ResolvedModel, target: Option<&str>, values: Option<&str>) -> u8 {
    if let Some(path) = target {
        if find_system(model, path).is_none() {
            return unknown_system(model, path);
        }
    }
    let valuation = match values {
        None => Valuation::new(),
        Some(path) => {
            let text = match fs::read_to_string(path) {
                Ok(text) => text,
                Err(e) => return usage_error(&format!("cannot read `{path}`: {e}")),
            };
            match Valuation::parse(&text) {
                Ok(v) => v,
                Err(message) => return usage_error(&format!("{path}: {message}")),
            }
        }
    };
    match evaluate_aggregates(model, &valuation) {
        Ok(results) => {
            for (key, value) in &results {
                let in_scope = match target {
                    None => true,
                    Some(prefix) => key.starts_with(&format!("{prefix}.")),
                };
                if in_scope {
                    out_line(&format!("{key}={value}"));
                }
            }
            0
        }
        Err(diags) => {
            print_diagnostics(&diags, false);
            1
        }
    }
}
