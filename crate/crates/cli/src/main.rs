//! `zsm`: parse membrane systems, explore them, compile them to zero-safe
//! nets, unfold those nets and extract event structures with simultaneity.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use zsm_core::compile::{check_correspondence, compile};
use zsm_core::ess::ess_of;
use zsm_core::semantics::{computations, reachability_graph, SemanticsError, DEFAULT_STATE_CAP};
use zsm_core::unfold::{unfold, UnfoldBounds, DEFAULT_EVENT_BUDGET};
use zsm_core::{parse_with, MembraneSystem, ParseOptions};

macro_rules! outln {
    ($o:expr, $($arg:tt)*) => {
        writeln!($o, $($arg)*).expect("writing to a string")
    };
}

const USAGE: u8 = 1;
const INVALID: u8 = 2;
const CHECK_FAILED: u8 = 3;
const BUDGET: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "zsm",
    version,
    about = "Membrane systems, zero-safe nets and event structures with simultaneity"
)]
struct Cli {
    /// Accept `out` targets in the skin membrane and discard what they send.
    #[arg(long, global = true)]
    allow_skin_out: bool,

    /// Maximum number of configurations explored.
    #[arg(long, global = true, env = "ZSM_STATE_CAP", default_value_t = DEFAULT_STATE_CAP)]
    state_cap: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a system description.
    Validate { file: PathBuf },
    /// Reachability graph within a number of macro steps.
    Run {
        file: PathBuf,
        #[arg(long)]
        depth: usize,
        /// Also list every computation up to the depth.
        #[arg(long)]
        all_traces: bool,
        #[command(flatten)]
        out: Outputs,
    },
    /// Translate the system to a zero-safe net.
    Compile {
        file: PathBuf,
        #[command(flatten)]
        out: Outputs,
    },
    /// Individual-token unfolding of the compiled net.
    Unfold {
        file: PathBuf,
        #[command(flatten)]
        bounds: Bounds,
        #[command(flatten)]
        out: Outputs,
    },
    /// Event structure with simultaneity of the unfolding.
    Ess {
        file: PathBuf,
        #[command(flatten)]
        bounds: Bounds,
        #[command(flatten)]
        out: Outputs,
    },
    /// Check the net against the semantics on every reachable configuration.
    Check {
        file: PathBuf,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Outputs {
    /// Write Graphviz output here; `-` for standard output.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Write JSON output here; `-` for standard output.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Bounds {
    /// Highest layer of the unfolding.
    #[arg(long)]
    layers: u32,
    /// Maximum number of events.
    #[arg(long, default_value_t = DEFAULT_EVENT_BUDGET)]
    events: usize,
}

/// Header of every JSON document.
#[derive(Serialize)]
struct RunManifest<'a> {
    input: String,
    command: &'a str,
    bounds: ManifestBounds,
    format: &'a str,
    deterministic: bool,
}

#[derive(Serialize, Default)]
struct ManifestBounds {
    #[serde(skip_serializing_if = "Option::is_none")]
    depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    layers: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    events: Option<usize>,
    state_cap: usize,
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    manifest: RunManifest<'a>,
    #[serde(flatten)]
    body: T,
}

/// Failure with its exit code; the message goes to standard error.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::new(USAGE, format!("{e:#}"))
    }
}

impl From<SemanticsError> for Failure {
    fn from(e: SemanticsError) -> Self {
        let code = if matches!(e, SemanticsError::StateCap { .. }) {
            BUDGET
        } else {
            INVALID
        };
        Failure::new(code, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let mut stdout = String::new();
    let result = run(&cli, &mut stdout);
    let mut lock = io::stdout().lock();
    // A closed pipe is not an error for a command-line filter.
    let _ = lock
        .write_all(stdout.as_bytes())
        .and_then(|()| lock.flush());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("zsm: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(path: &Path, cli: &Cli) -> Result<MembraneSystem, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::new(USAGE, format!("{}: {e}", path.display())))?;
    parse_with(
        &text,
        ParseOptions {
            allow_skin_out: cli.allow_skin_out,
        },
    )
    .map_err(|ds| {
        let lines: Vec<String> =
            ds.0.iter()
                .map(|d| format!("{}:{d}", path.display()))
                .collect();
        Failure::new(INVALID, format!("invalid system\n{}", lines.join("\n")))
    })
}

/// `-` appends to the standard output buffer.
fn write_to(target: &Path, contents: &str, stdout: &mut String) -> anyhow::Result<()> {
    if target.as_os_str() == "-" {
        stdout.push_str(contents);
        Ok(())
    } else {
        fs::write(target, contents).with_context(|| format!("cannot write {}", target.display()))
    }
}

fn write_json<T: Serialize>(
    target: &Path,
    manifest: RunManifest<'_>,
    body: T,
    stdout: &mut String,
) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(&Document { manifest, body })?;
    text.push('\n');
    write_to(target, &text, stdout)
}

fn manifest<'a>(file: &Path, command: &'a str, bounds: ManifestBounds) -> RunManifest<'a> {
    RunManifest {
        input: file.display().to_string(),
        command,
        bounds,
        format: "json",
        deterministic: true,
    }
}

#[derive(Serialize)]
struct Traces {
    traces: Vec<Vec<String>>,
}

fn run(cli: &Cli, o: &mut String) -> Result<(), Failure> {
    let cap = cli.state_cap;
    match &cli.command {
        Command::Validate { file } => {
            let sys = load(file, cli)?;
            outln!(
                o,
                "{}: ok ({} membranes, {} objects, {} rules)",
                file.display(),
                sys.membranes(),
                sys.alphabet().len(),
                sys.rule_count()
            );
        }
        Command::Run {
            file,
            depth,
            all_traces,
            out,
        } => {
            let sys = load(file, cli)?;
            let graph = reachability_graph(&sys, *depth, cap)?;
            let traces = if *all_traces {
                let cs = computations(&sys, *depth, cap)?;
                Some(Traces {
                    traces: cs
                        .iter()
                        .map(|c| {
                            let mut t = vec![c.configurations[0].to_string()];
                            for (s, k) in c.steps.iter().zip(&c.configurations[1..]) {
                                t.push(format!("{s} => {k}"));
                            }
                            t
                        })
                        .collect(),
                })
            } else {
                None
            };
            if let Some(p) = &out.json {
                let b = ManifestBounds {
                    depth: Some(*depth),
                    state_cap: cap,
                    ..Default::default()
                };
                #[derive(Serialize)]
                struct Body<'t> {
                    graph: zsm_core::semantics::GraphExport,
                    #[serde(flatten, skip_serializing_if = "Option::is_none")]
                    traces: Option<&'t Traces>,
                }
                write_json(
                    p,
                    manifest(file, "run", b),
                    Body {
                        graph: graph.to_export(),
                        traces: traces.as_ref(),
                    },
                    o,
                )?;
            }
            if let Some(p) = &out.dot {
                write_to(p, &graph.to_dot(), o)?;
            }
            if out.json.is_none() && out.dot.is_none() {
                for (k, c) in graph.nodes.iter().enumerate() {
                    let halt = if graph.halting[k] { " halting" } else { "" };
                    outln!(o, "n{k} depth {} {c}{halt}", graph.depth[k]);
                }
                for e in &graph.edges {
                    outln!(o, "n{} -> n{} {}", e.from, e.to, e.rules);
                }
                if let Some(t) = &traces {
                    for trace in &t.traces {
                        outln!(o, "trace: {}", trace.join(" ; "));
                    }
                }
            }
        }
        Command::Compile { file, out } => {
            let sys = load(file, cli)?;
            let net = compile(&sys);
            if let Some(p) = &out.json {
                #[derive(Serialize)]
                struct Body {
                    net: zsm_core::zsnet::NetExport,
                }
                let b = ManifestBounds {
                    state_cap: cap,
                    ..Default::default()
                };
                write_json(
                    p,
                    manifest(file, "compile", b),
                    Body {
                        net: net.to_export(),
                    },
                    o,
                )?;
            }
            if let Some(p) = &out.dot {
                write_to(p, &net.to_dot(), o)?;
            }
            if out.json.is_none() && out.dot.is_none() {
                let zero = net.place_ixs().filter(|p| net.is_zero(*p)).count();
                outln!(
                    o,
                    "{} places ({zero} zero), {} transitions",
                    net.places().len(),
                    net.transitions().len()
                );
                for t in net.trans_ixs() {
                    outln!(
                        o,
                        "{}: {} -> {}",
                        net.transition(t),
                        net.marking_text(net.pre(t)),
                        net.marking_text(net.post(t))
                    );
                }
            }
        }
        Command::Unfold { file, bounds, out } => {
            let sys = load(file, cli)?;
            let net = compile(&sys);
            let unf = unfold(
                &net,
                UnfoldBounds {
                    layers: Some(bounds.layers),
                    events: bounds.events,
                },
            );
            if let Some(p) = &out.json {
                #[derive(Serialize)]
                struct Body {
                    unfolding: zsm_core::unfold::UnfoldingExport,
                }
                write_json(
                    p,
                    manifest(file, "unfold", layered(bounds, cap)),
                    Body {
                        unfolding: unf.to_export(&net),
                    },
                    o,
                )?;
            }
            if let Some(p) = &out.dot {
                write_to(p, &unf.to_dot(&net), o)?;
            }
            if out.json.is_none() && out.dot.is_none() {
                outln!(
                    o,
                    "{} conditions, {} events, highest layer {}",
                    unf.occ.conditions().len(),
                    unf.occ.events().len(),
                    unf.max_layer()
                );
            }
            if unf.truncated {
                return Err(Failure::new(
                    BUDGET,
                    format!("event budget of {} exhausted", bounds.events),
                ));
            }
        }
        Command::Ess { file, bounds, out } => {
            let sys = load(file, cli)?;
            let net = compile(&sys);
            let unf = unfold(
                &net,
                UnfoldBounds {
                    layers: Some(bounds.layers),
                    events: bounds.events,
                },
            );
            let u = ess_of(&unf, &net).map_err(|e| Failure::new(INVALID, e.to_string()))?;
            if let Some(p) = &out.json {
                #[derive(Serialize)]
                struct Body {
                    ess: zsm_core::ess::EssExport,
                }
                write_json(
                    p,
                    manifest(file, "ess", layered(bounds, cap)),
                    Body {
                        ess: u.to_export(&net, &unf),
                    },
                    o,
                )?;
            }
            if let Some(p) = &out.dot {
                write_to(p, &u.to_dot(&net), o)?;
            }
            if out.json.is_none() && out.dot.is_none() {
                outln!(
                    o,
                    "{} events, {} simultaneity classes",
                    u.ess.len(),
                    u.ess.sim.len()
                );
                for s in &u.ess.sim {
                    let labels: Vec<String> = s
                        .iter()
                        .map(|&i| format!("e{}:{}", u.events[i].0, net.transition(u.ess.labels[i])))
                        .collect();
                    outln!(o, "{{{}}}", labels.join(", "));
                }
                for v in u.ess.violations() {
                    outln!(o, "violation of axiom {}: {}", v.axiom, v.message);
                }
            }
            if u.truncated {
                return Err(Failure::new(
                    BUDGET,
                    format!("event budget of {} exhausted", bounds.events),
                ));
            }
        }
        Command::Check { file, depth, json } => {
            let sys = load(file, cli)?;
            let report = check_correspondence(&sys, *depth, cap)?;
            match json {
                Some(p) => {
                    #[derive(Serialize)]
                    struct Body<'r> {
                        report: &'r zsm_core::compile::CorrespondenceReport,
                        passed: bool,
                    }
                    let b = ManifestBounds {
                        depth: Some(*depth),
                        state_cap: cap,
                        ..Default::default()
                    };
                    let passed = report.passed();
                    write_json(
                        p,
                        manifest(file, "check", b),
                        Body {
                            report: &report,
                            passed,
                        },
                        o,
                    )?;
                    if p.as_os_str() != "-" {
                        outln!(o, "{report}");
                    }
                }
                None => outln!(o, "{report}"),
            }
            if !report.passed() {
                return Err(Failure::new(CHECK_FAILED, report.summary()));
            }
        }
    }
    Ok(())
}

fn layered(bounds: &Bounds, cap: usize) -> ManifestBounds {
    ManifestBounds {
        layers: Some(bounds.layers),
        events: Some(bounds.events),
        state_cap: cap,
        ..Default::default()
    }
}
