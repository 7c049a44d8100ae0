//! Configured parameter sweeps over graphs, curious sets and protocols, with
//! deterministic CSV and JSON output.

mod config;
mod format;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

pub use config::{AdversaryConfig, Axes, ExperimentConfig, GraphSource, Outputs};
pub use format::fmt_sig;

use crate::adversary::{attack_success_rate, select_curious, AttackKind, AttackOptions, Prior, SelectionMode};
use crate::error::{Error, Result};
use crate::gossip::{default_horizon, dissemination_time, ProtocolKind, ProtocolSpec};
use crate::graph::{
    adversarial_density, generate_random_regular, named_graph, parse_edge_list, spectral_expansion, CuriousSet, Graph,
};
use crate::privacy::{analyze_with, mixing_sanity, opt_real, real, AdversaryMode, AnalyzeOptions, Bound};
use crate::rng::derive_seed_path;
use crate::spectral::{build_chain, lemma_audit, AuditReport};

/// Column order of the sweep CSV.
pub const CSV_COLUMNS: [&str; 25] = [
    "n",
    "d",
    "f",
    "rho",
    "protocol",
    "mode",
    "status",
    "selection",
    "lambda",
    "alpha_f",
    "gate_passed",
    "epsilon_exact",
    "epsilon_upper",
    "epsilon_lower",
    "mixing_bound",
    "worst_case_infinite",
    "diss_trials",
    "diss_censored",
    "diss_mean",
    "diss_ci95",
    "diss_median",
    "mle_rate",
    "mle_bound",
    "mle_bound_satisfied",
    "first_contact_rate",
];

/// One sweep point. Metric fields stay `None` when the stage was skipped,
/// does not apply to the protocol, or failed (see `status`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub d: Option<usize>,
    pub f: usize,
    #[serde(serialize_with = "real")]
    pub rho: f64,
    pub protocol: ProtocolKind,
    pub mode: AdversaryMode,
    /// `ok`, an error code, or `bound_violation` when the exact leakage
    /// exceeds a gated upper bound.
    pub status: String,
    pub message: Option<String>,
    pub selection: String,
    #[serde(serialize_with = "opt_real")]
    pub lambda: Option<f64>,
    #[serde(serialize_with = "opt_real")]
    pub alpha_f: Option<f64>,
    pub gate_passed: Option<bool>,
    #[serde(serialize_with = "opt_real")]
    pub epsilon_exact: Option<f64>,
    #[serde(serialize_with = "opt_real")]
    pub epsilon_upper: Option<f64>,
    #[serde(serialize_with = "opt_real")]
    pub epsilon_lower: Option<f64>,
    #[serde(serialize_with = "opt_real")]
    pub mixing_bound: Option<f64>,
    pub worst_case_infinite: Option<bool>,
    pub diss_trials: usize,
    pub diss_censored: Option<usize>,
    #[serde(serialize_with = "opt_real")]
    pub diss_mean: Option<f64>,
    #[serde(serialize_with = "opt_real")]
    pub diss_ci95: Option<f64>,
    #[serde(serialize_with = "opt_real")]
    pub diss_median: Option<f64>,
    #[serde(serialize_with = "opt_real")]
    pub mle_rate: Option<f64>,
    #[serde(serialize_with = "opt_real")]
    pub mle_bound: Option<f64>,
    pub mle_bound_satisfied: Option<bool>,
    #[serde(serialize_with = "opt_real")]
    pub first_contact_rate: Option<f64>,
}

impl SweepRow {
    fn csv_fields(&self) -> Vec<String> {
        let num = |v: Option<f64>| v.map(fmt_sig).unwrap_or_default();
        let int = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        let flag = |v: Option<bool>| v.map(|x| x.to_string()).unwrap_or_default();
        vec![
            self.n.to_string(),
            int(self.d),
            self.f.to_string(),
            fmt_sig(self.rho),
            self.protocol.name().to_string(),
            self.mode.name().to_string(),
            self.status.clone(),
            self.selection.clone(),
            num(self.lambda),
            num(self.alpha_f),
            flag(self.gate_passed),
            num(self.epsilon_exact),
            num(self.epsilon_upper),
            num(self.epsilon_lower),
            num(self.mixing_bound),
            flag(self.worst_case_infinite),
            self.diss_trials.to_string(),
            int(self.diss_censored),
            num(self.diss_mean),
            num(self.diss_ci95),
            num(self.diss_median),
            num(self.mle_rate),
            num(self.mle_bound),
            flag(self.mle_bound_satisfied),
            num(self.first_contact_rate),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub seed: u64,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Header plus one line per row; no field contains a comma.
    pub fn to_csv(&self) -> String {
        let mut out = CSV_COLUMNS.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_fields().join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("rows serialize") + "\n"
    }

    pub fn write_outputs(&self, outputs: &Outputs) -> Result<()> {
        if let Some(p) = &outputs.csv {
            std::fs::write(p, self.to_csv())?;
        }
        if let Some(p) = &outputs.json {
            std::fs::write(p, self.to_json())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Point {
    n: usize,
    d: usize,
    f: usize,
    spec: ProtocolSpec,
}

impl Point {
    fn key(&self) -> (usize, usize, usize, u64, ProtocolKind, usize) {
        // rho is in [0, 1], where bit order matches numeric order.
        (self.n, self.d, self.f, self.spec.rho.to_bits(), self.spec.kind, self.spec.budget)
    }
}

struct Fixture {
    graph: Graph,
    lambda: Option<f64>,
}

/// Runs every axis point of `config`. Configuration problems (including an
/// unreadable edge list) are errors; anything that goes wrong at a single
/// point is recorded in that row's status and the sweep carries on.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let fixed = match &config.graph {
        GraphSource::Generate { .. } => None,
        GraphSource::EdgeList { path } => Some(parse_edge_list(&std::fs::read_to_string(path)?)?),
        GraphSource::Named { kind, n } => Some(named_graph(*kind, *n)?),
    };
    let fixed_curious = match (&fixed, &config.adversary.curious) {
        (Some(g), Some(members)) => Some(CuriousSet::new(g.n(), members.iter().copied())?),
        _ => None,
    };
    let (ns, ds) = match (&config.graph, &fixed) {
        (GraphSource::Generate { n, d }, _) => (or_default(&config.axes.n, *n), or_default(&config.axes.d, *d)),
        (_, Some(g)) => (vec![g.n()], vec![g.regular_degree().unwrap_or(0)]),
        _ => unreachable!(),
    };
    let fs = match (&fixed_curious, config.adversary.f) {
        (Some(c), _) => vec![c.f()],
        (None, f) => or_default(&config.axes.f, f.unwrap_or(0)),
    };

    let mut points = Vec::new();
    for &n in &ns {
        for &d in &ds {
            for &f in &fs {
                for p in &config.protocols {
                    for rho in or_default(&config.axes.rho, p.rho) {
                        points.push(Point { n, d, f, spec: ProtocolSpec { rho, ..*p } });
                    }
                }
            }
        }
    }
    points.sort_by_key(Point::key);
    points.dedup_by_key(|p| p.key());

    let mut shapes: Vec<(usize, usize)> = points.iter().map(|p| (p.n, p.d)).collect();
    shapes.dedup();
    let fixtures: BTreeMap<(usize, usize), Result<Fixture>> = shapes
        .into_par_iter()
        .map(|(n, d)| {
            let graph = match &fixed {
                Some(g) => Ok(g.clone()),
                None => generate_random_regular(n, d, derive_seed_path(config.seed, &[1, n as u64, d as u64])),
            };
            let fixture = graph.map(|graph| Fixture { lambda: spectral_expansion(&graph).ok(), graph });
            ((n, d), fixture)
        })
        .collect();

    let rows = points
        .par_iter()
        .map(|p| run_point(config, p, &fixtures[&(p.n, p.d)], fixed_curious.as_ref()))
        .collect();
    Ok(SweepResult { seed: config.seed, rows })
}

fn or_default<T: Clone>(axis: &[T], fallback: T) -> Vec<T> {
    if axis.is_empty() {
        vec![fallback]
    } else {
        axis.to_vec()
    }
}

fn privacy_supported(spec: &ProtocolSpec) -> bool {
    spec.is_cobra_family() || matches!(spec.kind, ProtocolKind::Dandelion | ProtocolKind::MutingPush)
}

fn run_point(config: &ExperimentConfig, p: &Point, fixture: &Result<Fixture>, fixed: Option<&CuriousSet>) -> SweepRow {
    let mut row = SweepRow {
        n: p.n,
        d: None,
        f: p.f,
        rho: p.spec.rho,
        protocol: p.spec.kind,
        mode: config.adversary.mode,
        status: "ok".into(),
        message: None,
        selection: config.adversary.selection.name().into(),
        lambda: None,
        alpha_f: None,
        gate_passed: None,
        epsilon_exact: None,
        epsilon_upper: None,
        epsilon_lower: None,
        mixing_bound: None,
        worst_case_infinite: None,
        diss_trials: config.trials,
        diss_censored: None,
        diss_mean: None,
        diss_ci95: None,
        diss_median: None,
        mle_rate: None,
        mle_bound: None,
        mle_bound_satisfied: None,
        first_contact_rate: None,
    };
    if let Err(e) = fill_point(config, p, fixture, fixed, &mut row) {
        row.status = e.code().into();
        row.message = Some(e.to_string());
    }
    row
}

fn fill_point(
    config: &ExperimentConfig,
    p: &Point,
    fixture: &Result<Fixture>,
    fixed: Option<&CuriousSet>,
    row: &mut SweepRow,
) -> Result<()> {
    let fx = fixture.as_ref().map_err(Clone::clone)?;
    let g = &fx.graph;
    row.d = g.regular_degree();
    row.lambda = fx.lambda;
    let spec = p.spec.validated()?;
    let tag = |stage: u64, extra: &[u64]| {
        let mut path = vec![stage, p.n as u64, p.d as u64, p.f as u64];
        path.extend_from_slice(extra);
        derive_seed_path(config.seed, &path)
    };
    let curious = match fixed {
        Some(c) => c.clone(),
        None => select_curious(g, p.f, config.adversary.selection, tag(2, &[]))?,
    };
    if let Ok(density) = adversarial_density(g, &curious) {
        row.alpha_f = Some(density.value());
    }

    if privacy_supported(&spec) {
        let mut opts = AnalyzeOptions::new(config.adversary.mode);
        opts.density_variant = config.adversary.density_variant;
        let report = analyze_with(g, &curious, spec, &opts)?;
        row.epsilon_exact = Some(report.epsilon_exact);
        row.epsilon_upper = report.epsilon_upper.value();
        row.gate_passed = Some(matches!(report.epsilon_upper, Bound::Value(_)));
        row.epsilon_lower = Some(report.epsilon_lower);
        row.mixing_bound = report.mixing_bound;
        row.worst_case_infinite = report.worst_case_infinite;
        if let Bound::Value(upper) = report.epsilon_upper {
            if report.epsilon_exact > upper {
                row.status = "bound_violation".into();
                row.message = Some(format!("epsilon_exact {} exceeds the upper bound {upper}", report.epsilon_exact));
            }
        }
    }

    let source = curious.honest_nodes()[0];
    let horizon = config.horizon.unwrap_or_else(|| default_horizon(g.n()));
    if config.trials > 0 {
        // The seed ignores rho so that points along the rho axis share random numbers.
        let stats = dissemination_time(g, spec, source, config.trials, tag(3, &[spec.kind as u64]), horizon)?;
        row.diss_censored = Some(stats.censored);
        if let Some(s) = stats.summary {
            row.diss_mean = Some(s.mean);
            row.diss_ci95 = Some(s.ci95_half_width());
            row.diss_median = Some(s.median);
        }
    }

    if config.attack_trials > 0 && privacy_supported(&spec) && row.epsilon_exact.is_some_and(f64::is_finite) {
        let opts = AttackOptions { prefix: 1, likelihood_trials: config.likelihood_trials, horizon: Some(horizon) };
        let prior = Prior::uniform(&curious);
        let seed = tag(4, &[spec.kind as u64, spec.rho.to_bits()]);
        let mle = attack_success_rate(g, &curious, spec, AttackKind::Mle, &prior, config.attack_trials, seed, &opts)?;
        let first =
            attack_success_rate(g, &curious, spec, AttackKind::FirstContact, &prior, config.attack_trials, seed, &opts)?;
        row.mle_rate = Some(mle.rate);
        row.mle_bound = Some(mle.bound);
        row.mle_bound_satisfied = Some(mle.bound_satisfied);
        row.first_contact_rate = Some(first.rate);
    }
    Ok(())
}

/// Exact leakage against the upper-bound formula at the true density on one
/// generated fixture.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingRecord {
    pub n: usize,
    pub d: usize,
    pub f: usize,
    pub rho: f64,
    pub lambda: f64,
    pub alpha_f: f64,
    pub epsilon_exact: f64,
    #[serde(serialize_with = "real")]
    pub bound: f64,
    #[serde(serialize_with = "real")]
    pub slack: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FullAudit {
    pub inequalities: AuditReport,
    pub mixing: Vec<MixingRecord>,
    /// Fixture points skipped for failing the density gate or leaving the
    /// honest part disconnected.
    pub mixing_gated_out: usize,
    pub passed: bool,
}

const MIXING_SHAPES: [(usize, usize); 3] = [(32, 12), (64, 16), (96, 24)];
const MIXING_RHOS: [f64; 4] = [0.0, 0.25, 0.5, 0.9];
const MIXING_FS: [usize; 2] = [2, 4];

/// The randomized matrix-inequality audit plus the upper-bound check on a
/// fixed grid of generated expanders and on any `extra` graphs (each
/// single-node curious set).
pub fn run_audit(seed: u64, trials: usize, extra: &[Graph]) -> Result<FullAudit> {
    let inequalities = lemma_audit(seed, trials);
    let mut mixing = Vec::new();
    let mut mixing_gated_out = 0;
    let mut check = |g: &Graph, curious: &CuriousSet, lambda: f64| -> Result<()> {
        for rho in MIXING_RHOS {
            let Ok(chain) = build_chain(g, curious, rho) else {
                mixing_gated_out += 1;
                continue;
            };
            match mixing_sanity(&chain, lambda) {
                Ok(m) => mixing.push(MixingRecord {
                    n: g.n(),
                    d: g.regular_degree().unwrap_or(0),
                    f: curious.f(),
                    rho,
                    lambda,
                    alpha_f: m.alpha_f,
                    epsilon_exact: m.epsilon_exact,
                    bound: m.bound,
                    slack: m.slack,
                    holds: m.holds(),
                }),
                Err(Error::GatingViolated { .. }) => mixing_gated_out += 1,
                Err(e) => return Err(e),
            }
        }
        Ok(())
    };
    for (n, d) in MIXING_SHAPES {
        let g = generate_random_regular(n, d, derive_seed_path(seed, &[1, n as u64, d as u64]))?;
        let lambda = spectral_expansion(&g)?;
        for f in MIXING_FS {
            let curious = select_curious(&g, f, SelectionMode::Uniform, derive_seed_path(seed, &[2, n as u64, f as u64]))?;
            check(&g, &curious, lambda)?;
        }
    }
    for g in extra {
        if g.regular_degree().is_none() {
            return Err(Error::NonRegularGraph);
        }
        let lambda = spectral_expansion(g)?;
        for v in 0..g.n() {
            check(g, &CuriousSet::new(g.n(), [v])?, lambda)?;
        }
    }
    let passed = inequalities.passed && mixing.iter().all(|m| m.holds);
    Ok(FullAudit { inequalities, mixing, mixing_gated_out, passed })
}
