//! Command line interface.
//!
//! Exit status: 0 ok, holds or found; 1 fails or not found; 2 usage, parse or
//! model file errors; 3 semantic errors during execution or analysis.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::formula::{parse_formula, parse_proposition};
use super::model::{parse_model, ModelDocument};
use super::printer::print_model;
use super::trace_json::{counterexample_json, trace_json};
use crate::analysis::ltl::{check_graph, CheckError};
use crate::analysis::search::SearchError;
use crate::analysis::{build_state_graph, search, Bound, CexStep, EdgeKind, GraphOptions, Verdict};
use crate::exec::{simulate, ExecOptions, Snapshot, StopReason};
use crate::model::TimeVal;
use crate::postfire::initialize;
use crate::SystemState;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SEMANTIC: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "de-fixpoint",
    version,
    about = "Simulate and model check discrete-event actor models"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run the model up to a time bound and print the trace.
    Simulate {
        model: PathBuf,
        #[arg(long)]
        until: String,
        #[arg(long, default_value_t = 1_000_000)]
        max_steps: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Treat ports left unknown by a causality cycle as absent.
        #[arg(long)]
        bottom_as_absent: bool,
    },
    /// Breadth-first search for a state satisfying a proposition.
    Search {
        model: PathBuf,
        #[arg(long)]
        prop: String,
        #[command(flatten)]
        analysis: AnalysisArgs,
    },
    /// Model check an LTL formula.
    Check {
        model: PathBuf,
        #[arg(long)]
        formula: String,
        #[command(flatten)]
        analysis: AnalysisArgs,
    },
    /// Print the parsed model in canonical form.
    Dump { model: PathBuf },
}

#[derive(Args, Debug)]
struct AnalysisArgs {
    /// Explore only up to this time.
    #[arg(long, conflicts_with = "unbounded")]
    until: Option<String>,
    /// Explore the whole reachable state space (the default).
    #[arg(long)]
    unbounded: bool,
    #[arg(long, default_value_t = 100_000)]
    max_states: usize,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    bottom_as_absent: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

struct Ui<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    color: bool,
}

impl Ui<'_> {
    fn paint(&self, code: &str, s: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{s}\x1b[0m")
        } else {
            s.to_string()
        }
    }

    fn fail(&mut self, code: i32, msg: impl std::fmt::Display) -> i32 {
        let tag = self.paint("1;31", "error");
        let _ = writeln!(self.err, "{tag}: {msg}");
        code
    }
}

/// Runs the CLI with `args` (including the program name).
pub fn run(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let color = std::env::var("DE_FIXPOINT_COLOR").is_ok_and(|v| v == "1");
    let mut ui = Ui { out, err, color };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(ui.err, "{text}");
            } else {
                let _ = write!(ui.out, "{text}");
            }
            return code;
        }
    };
    match cli.cmd {
        Cmd::Dump { model } => match load(&model) {
            Ok(doc) => {
                let _ = write!(ui.out, "{}", print_model(&doc));
                EXIT_OK
            }
            Err(e) => ui.fail(EXIT_USAGE, e),
        },
        Cmd::Simulate {
            model,
            until,
            max_steps,
            format,
            bottom_as_absent,
        } => {
            let doc = match load(&model) {
                Ok(d) => d,
                Err(e) => return ui.fail(EXIT_USAGE, e),
            };
            let bound: TimeVal = match until.parse() {
                Ok(t) => t,
                Err(e) => return ui.fail(EXIT_USAGE, format!("--until: {e}")),
            };
            let opts = ExecOptions {
                bottom_as_absent,
                max_steps,
            };
            let trace = match simulate(initial_state(doc), &bound, &opts) {
                Ok(t) => t,
                Err(e) => return ui.fail(EXIT_SEMANTIC, e),
            };
            match format {
                Format::Json => {
                    let _ = writeln!(
                        ui.out,
                        "{}",
                        serde_json::to_string_pretty(&trace_json(&trace)).unwrap_or_default()
                    );
                }
                Format::Text => {
                    let mut prev = &trace.initial;
                    for e in &trace.steps {
                        let _ = writeln!(
                            ui.out,
                            "[t={} n={}] {}{}",
                            e.elapsed,
                            e.microstep,
                            e.kind,
                            changes(prev, &e.snapshot)
                        );
                        prev = &e.snapshot;
                    }
                    let why = match trace.stop {
                        StopReason::QueueEmpty => "event queue empty",
                        StopReason::TimeBound => "time bound reached",
                        StopReason::MaxSteps => "step limit reached",
                    };
                    let _ = writeln!(ui.out, "stopped: {why}");
                }
            }
            EXIT_OK
        }
        Cmd::Search {
            model,
            prop,
            analysis,
        } => {
            let (doc, opts) = match prepare(&model, &analysis) {
                Ok(x) => x,
                Err(e) => return ui.fail(EXIT_USAGE, e),
            };
            let p = match parse_proposition(&prop) {
                Ok(p) => p,
                Err(e) => return ui.fail(EXIT_USAGE, format!("proposition: {e}")),
            };
            match search(initial_state(doc), &p, &opts) {
                Ok(Some(path)) => {
                    if analysis.format == Format::Json {
                        let records: Vec<_> = path
                            .iter()
                            .map(|e| {
                                serde_json::json!({
                                    "elapsed": super::trace_json::time_json(&e.elapsed),
                                    "microstep": e.microstep,
                                    "kind": e.kind.to_string(),
                                })
                            })
                            .collect();
                        let _ = writeln!(
                            ui.out,
                            "{}",
                            serde_json::json!({ "found": true, "path": records })
                        );
                    } else {
                        let found = ui.paint("32", "found");
                        let _ = writeln!(ui.out, "{found} after {} steps", path.len());
                        for e in &path {
                            let _ =
                                writeln!(ui.out, "[t={} n={}] {}", e.elapsed, e.microstep, e.kind);
                        }
                    }
                    EXIT_OK
                }
                Ok(None) => {
                    if analysis.format == Format::Json {
                        let _ = writeln!(ui.out, "{}", serde_json::json!({ "found": false }));
                    } else {
                        let nf = ui.paint("33", "not found");
                        let _ = writeln!(ui.out, "{nf}");
                    }
                    EXIT_NEGATIVE
                }
                Err(SearchError::Prop(e)) => ui.fail(EXIT_SEMANTIC, e),
                Err(SearchError::Graph(e)) => ui.fail(EXIT_SEMANTIC, e),
            }
        }
        Cmd::Check {
            model,
            formula,
            analysis,
        } => {
            let (doc, opts) = match prepare(&model, &analysis) {
                Ok(x) => x,
                Err(e) => return ui.fail(EXIT_USAGE, e),
            };
            let f = match parse_formula(&formula) {
                Ok(f) => f,
                Err(e) => return ui.fail(EXIT_USAGE, format!("formula: {e}")),
            };
            let report = build_state_graph(initial_state(doc), &opts)
                .map_err(CheckError::from)
                .and_then(|g| check_graph(g, &f, &opts.exec));
            let report = match report {
                Ok(r) => r,
                Err(e) => return ui.fail(EXIT_SEMANTIC, e),
            };
            if analysis.format == Format::Json {
                let mut rec = serde_json::json!({
                    "formula": f.to_string(),
                    "states": report.states,
                    "verdict": if report.verdict.holds() { "holds" } else { "fails" },
                });
                if let Verdict::Fails(cex) = &report.verdict {
                    rec["counterexample"] = counterexample_json(cex);
                }
                let _ = writeln!(
                    ui.out,
                    "{}",
                    serde_json::to_string_pretty(&rec).unwrap_or_default()
                );
            } else {
                let _ = writeln!(ui.out, "formula: {f}");
                let _ = writeln!(
                    ui.out,
                    "states: {} (product {})",
                    report.states, report.product_states
                );
                match &report.verdict {
                    Verdict::Holds => {
                        let v = ui.paint("32", "holds");
                        let _ = writeln!(ui.out, "result: {v}");
                    }
                    Verdict::Fails(cex) => {
                        let v = ui.paint("31", "fails");
                        let _ = writeln!(ui.out, "result: {v}");
                        let _ = writeln!(ui.out, "counterexample prefix:");
                        let last = print_steps(ui.out, &cex.prefix, None);
                        let _ = writeln!(ui.out, "cycle:");
                        print_steps(ui.out, &cex.cycle, last);
                    }
                }
            }
            if report.verdict.holds() {
                EXIT_OK
            } else {
                EXIT_NEGATIVE
            }
        }
    }
}

fn load(path: &PathBuf) -> Result<ModelDocument, String> {
    let src = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_model(&src).map_err(|e| format!("{}: {e}", path.display()))
}

fn prepare(model: &PathBuf, a: &AnalysisArgs) -> Result<(ModelDocument, GraphOptions), String> {
    let doc = load(model)?;
    let bound = match &a.until {
        Some(t) => Bound::Until(t.parse().map_err(|e| format!("--until: {e}"))?),
        None => Bound::Unbounded,
    };
    if a.workers == 0 {
        return Err("--workers must be at least 1".into());
    }
    let opts = GraphOptions {
        bound,
        max_states: a.max_states,
        workers: a.workers,
        exec: ExecOptions {
            bottom_as_absent: a.bottom_as_absent,
            ..ExecOptions::default()
        },
    };
    Ok((doc, opts))
}

/// Initialized state of a parsed model.
pub fn initial_state(doc: ModelDocument) -> SystemState {
    let mut top = doc.top;
    let queue = initialize(&mut top);
    SystemState::new(top, queue)
}

fn changes(before: &Snapshot, after: &Snapshot) -> String {
    let mut parts: Vec<String> = after
        .changed_since(before)
        .into_iter()
        .map(|((a, v), val)| format!("{a}.{v}={val}"))
        .collect();
    for (a, l) in &after.locations {
        if before.locations.get(a) != Some(l) {
            parts.push(format!("{a}@{l}"));
        }
    }
    if parts.is_empty() {
        String::new()
    } else {
        format!("  {}", parts.join(" "))
    }
}

fn print_steps<'a>(
    out: &mut dyn Write,
    steps: &'a [CexStep],
    mut prev: Option<&'a Snapshot>,
) -> Option<&'a Snapshot> {
    for s in steps {
        let via = match &s.via {
            None => "initial".to_string(),
            Some(EdgeKind::Stutter) => "stutter".to_string(),
            Some(EdgeKind::Step(k)) => k.to_string(),
        };
        let detail = match prev {
            Some(p) => changes(p, &s.snapshot),
            None => changes(&Snapshot::default(), &s.snapshot),
        };
        let _ = writeln!(out, "  [t={} n={}] {via}{detail}", s.elapsed, s.microstep);
        prev = Some(&s.snapshot);
    }
    prev
}
