//! Argument parsing and dispatch for the `anongossip` binary.

use std::io::Write;
use std::path::{Path, PathBuf};

use anongossip::adversary::{attack_success_rate, select_curious, AttackKind, AttackOptions, Prior, SelectionMode};
use anongossip::experiments::{run_audit, run_sweep, ExperimentConfig};
use anongossip::gossip::{default_horizon, simulate, write_trace, ProtocolKind, ProtocolSpec};
use anongossip::graph::{
    adversarial_density, generate_random_regular, named_graph, parse_edge_list, spectral_expansion,
    vertex_connectivity, write_edge_list, NamedGraph,
};
use anongossip::privacy::{analyze_with, AdversaryMode, AnalyzeOptions};
use anongossip::{CuriousSet, Error, Graph};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Exit code for bad arguments, unreadable inputs and infeasible requests.
pub const EXIT_INVALID: i32 = 1;
/// Exit code when an audit finds a violated inequality.
pub const EXIT_AUDIT: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "anongossip", version, about = "Source-anonymous gossip experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a random regular graph (or a named one) as an edge list.
    GenGraph {
        #[arg(long)]
        n: usize,
        #[arg(long, required_unless_present = "named")]
        d: Option<usize>,
        /// complete, cycle, path, petersen or hypercube instead of a random graph.
        #[arg(long)]
        named: Option<NamedGraph>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print spectral expansion, vertex connectivity and adversarial density.
    Spectral {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        curious: CuriousArgs,
    },
    /// Exact leakage and bounds as JSON.
    Privacy {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        curious: CuriousArgs,
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[arg(long, default_value = "worst")]
        mode: String,
    },
    /// Run one execution and write its trace as JSON lines.
    Simulate {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[arg(long, default_value_t = 0)]
        source: usize,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Success rate of a source-guessing attack against the leakage bound.
    Attack {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        curious: CuriousArgs,
        #[command(flatten)]
        protocol: ProtocolArgs,
        /// first_contact, mle, map or fixed:<node>.
        #[arg(long, default_value = "mle")]
        attack: String,
        /// Source prior for sampling and MAP: uniform or point:<node>.
        #[arg(long, default_value = "uniform")]
        prior: String,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 20_000)]
        likelihood_trials: usize,
        /// Observations per likelihood event.
        #[arg(long, default_value_t = 1)]
        prefix: usize,
    },
    /// Run a sweep described by a JSON config; writes CSV and JSON.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's CSV path; with no path at all the CSV goes to stdout.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Randomized inequality audit plus upper-bound checks; exit 2 on a violation.
    Audit {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Extra regular graphs to check with every single-node curious set.
        #[arg(long)]
        graph: Vec<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct GraphArg {
    /// Edge-list file.
    #[arg(long)]
    graph: PathBuf,
}

#[derive(Args, Debug)]
struct CuriousArgs {
    /// Comma-separated curious node ids.
    #[arg(long, value_delimiter = ',', conflicts_with = "f")]
    curious: Vec<usize>,
    /// Number of curious nodes to select instead of listing them.
    #[arg(long)]
    f: Option<usize>,
    #[arg(long, default_value = "uniform")]
    selection: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ProtocolArgs {
    #[arg(long, default_value = "cobra")]
    protocol: String,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    /// Head branching budget for the anaconda walk.
    #[arg(long, default_value_t = 0)]
    budget: usize,
}

impl ProtocolArgs {
    fn spec(&self) -> anongossip::Result<ProtocolSpec> {
        let kind: ProtocolKind = self.protocol.parse()?;
        ProtocolSpec { kind, rho: self.rho, budget: self.budget }.validated()
    }
}

enum Failure {
    Invalid(String),
    Audit(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(Failure::Invalid(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_INVALID
        }
        Err(Failure::Audit(msg)) => {
            let _ = writeln!(err, "audit failed: {msg}");
            EXIT_AUDIT
        }
    }
}

fn load_graph(path: &Path) -> Result<Graph, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    Ok(parse_edge_list(&text)?)
}

fn curious_set(g: &Graph, args: &CuriousArgs) -> Result<Option<CuriousSet>, Failure> {
    if let Some(f) = args.f {
        let mode: SelectionMode = args.selection.parse()?;
        return Ok(Some(select_curious(g, f, mode, args.seed)?));
    }
    if args.curious.is_empty() {
        return Ok(None);
    }
    Ok(Some(CuriousSet::new(g.n(), args.curious.iter().copied())?))
}

fn require_curious(g: &Graph, args: &CuriousArgs) -> Result<CuriousSet, Failure> {
    curious_set(g, args)?.ok_or_else(|| Failure::Invalid("give --curious or --f".into()))
}

fn emit_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Invalid(e.to_string()))?;
    writeln!(out, "{text}")?;
    Ok(())
}

fn write_or_print(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct SpectralReport {
    n: usize,
    edges: usize,
    d: Option<usize>,
    lambda: f64,
    lambda2: f64,
    kappa: Option<usize>,
    curious: Option<Vec<usize>>,
    alpha_f: Option<f64>,
    gate_passed: Option<bool>,
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::GenGraph { n, d, named, seed, out: path } => {
            let g = match named {
                Some(kind) => named_graph(kind, n)?,
                None => generate_random_regular(n, d.expect("clap requires d"), seed)?,
            };
            write_or_print(out, path.as_deref(), &write_edge_list(&g))
        }
        Command::Spectral { graph, curious } => {
            let g = load_graph(&graph.graph)?;
            let lambda = spectral_expansion(&g)?;
            let lambda2 = g.normalized_spectrum()?.get(1).copied().unwrap_or(0.0);
            let kappa = match vertex_connectivity(&g) {
                Ok(k) => Some(k),
                Err(Error::SizeCapExceeded { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            let c = curious_set(&g, &curious)?;
            let density = c.as_ref().map(|c| adversarial_density(&g, c)).transpose()?;
            emit_json(
                out,
                &SpectralReport {
                    n: g.n(),
                    edges: g.edge_count(),
                    d: g.regular_degree(),
                    lambda,
                    lambda2,
                    kappa,
                    curious: c.map(|c| c.members().to_vec()),
                    alpha_f: density.map(|a| a.value()),
                    gate_passed: density.map(|a| a.passes_gate(lambda)),
                },
            )
        }
        Command::Privacy { graph, curious, protocol, mode } => {
            let g = load_graph(&graph.graph)?;
            let c = require_curious(&g, &curious)?;
            let mode = match mode.as_str() {
                "worst" => AdversaryMode::Worst,
                "average" => AdversaryMode::Average,
                other => return Err(Failure::Invalid(format!("unknown adversary mode {other:?}"))),
            };
            let report = analyze_with(&g, &c, protocol.spec()?, &AnalyzeOptions::new(mode))?;
            emit_json(out, &report)
        }
        Command::Simulate { graph, protocol, source, horizon, seed, out: path } => {
            let g = load_graph(&graph.graph)?;
            let horizon = horizon.unwrap_or_else(|| default_horizon(g.n()));
            let exec = simulate(&g, protocol.spec()?, source, horizon, seed)?;
            write_or_print(out, path.as_deref(), &write_trace(&exec))
        }
        Command::Attack { graph, curious, protocol, attack, prior, trials, likelihood_trials, prefix } => {
            let g = load_graph(&graph.graph)?;
            let seed = curious.seed;
            let c = require_curious(&g, &curious)?;
            let attack: AttackKind = attack.parse()?;
            let prior = match prior.as_str() {
                "uniform" => Prior::uniform(&c),
                p => match p.strip_prefix("point:").and_then(|v| v.parse().ok()) {
                    Some(v) => Prior::point(&c, v)?,
                    None => return Err(Failure::Invalid(format!("unknown prior {p:?}"))),
                },
            };
            let opts = AttackOptions { prefix, likelihood_trials, horizon: None };
            let report = attack_success_rate(&g, &c, protocol.spec()?, attack, &prior, trials, seed, &opts)?;
            emit_json(out, &report)
        }
        Command::Sweep { config, csv, json } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if csv.is_some() {
                cfg.outputs.csv = csv;
            }
            if json.is_some() {
                cfg.outputs.json = json;
            }
            let result = run_sweep(&cfg)?;
            result.write_outputs(&cfg.outputs)?;
            if cfg.outputs.csv.is_none() {
                out.write_all(result.to_csv().as_bytes())?;
            }
            Ok(())
        }
        Command::Audit { seed, trials, graph } => {
            let extra = graph.iter().map(|p| load_graph(p)).collect::<Result<Vec<_>, _>>()?;
            let audit = run_audit(seed, trials, &extra)?;
            emit_json(out, &audit)?;
            if audit.passed {
                Ok(())
            } else {
                Err(Failure::Audit(format!("largest violation {}", audit.inequalities.max_violation())))
            }
        }
    }
}
