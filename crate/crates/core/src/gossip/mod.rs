//! Discrete-round execution engine for the gossip protocols, dissemination
//! time measurement and the auxiliary walks behind the privacy analysis.

mod protocol;
mod trace;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{CuriousSet, Graph};
use crate::rng::{stream_rng, SimRng};
use crate::stats::{wilson_interval, Summary, Z95};

pub use protocol::{ProtocolKind, ProtocolSpec, Stepper};
pub use trace::{read_trace, write_trace};

/// One round: the active set `X_t`, the communications `C_t` (self-messages
/// included) and the Dandelion phase flag, which is `true` for other protocols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Round {
    pub active: Vec<usize>,
    pub comms: Vec<(usize, usize)>,
    pub anon: bool,
}

/// A recorded run started at round 0 from `source`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Execution {
    pub source: usize,
    pub rounds: Vec<Round>,
    /// Active set after the last recorded round.
    pub final_active: Vec<usize>,
    /// First round at which each node was active.
    pub informed_at: Vec<Option<usize>>,
    /// First round at which every node had been active, if reached.
    pub covered_at: Option<usize>,
}

impl Execution {
    fn start(n: usize, source: usize) -> Self {
        let mut informed_at = vec![None; n];
        informed_at[source] = Some(0);
        Self {
            source,
            rounds: Vec::new(),
            final_active: vec![source],
            informed_at,
            covered_at: if n == 1 { Some(0) } else { None },
        }
    }

    fn mark_informed(&mut self, t: usize, remaining: &mut usize) {
        for &v in &self.final_active {
            if self.informed_at[v].is_none() {
                self.informed_at[v] = Some(t);
                *remaining -= 1;
            }
        }
        if *remaining == 0 && self.covered_at.is_none() {
            self.covered_at = Some(t);
        }
    }

    /// Active set at round `t`, including the state after the last round.
    pub fn active_at(&self, t: usize) -> Option<&[usize]> {
        match t.cmp(&self.rounds.len()) {
            std::cmp::Ordering::Less => Some(&self.rounds[t].active),
            std::cmp::Ordering::Equal => Some(&self.final_active),
            std::cmp::Ordering::Greater => None,
        }
    }

    /// Checks the structural round invariants against `g`.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        let bad = |t: usize, what: &str| Err(Error::InvalidParameter(format!("round {t}: {what}")));
        if self.active_at(0) != Some(&[self.source][..]) {
            return bad(0, "initial active set is not the source");
        }
        for (t, round) in self.rounds.iter().enumerate() {
            for &(u, v) in &round.comms {
                if round.active.binary_search(&u).is_err() {
                    return bad(t, "sender is not active");
                }
                if u != v && !g.has_edge(u, v) {
                    return bad(t, "communication along a non-edge");
                }
            }
            let mut receivers: Vec<usize> = round.comms.iter().map(|&(_, v)| v).collect();
            receivers.sort_unstable();
            receivers.dedup();
            if Some(&receivers[..]) != self.active_at(t + 1) {
                return bad(t, "next active set differs from the receivers");
            }
        }
        Ok(())
    }
}

/// `ceil(100 n ln n)`, comfortably above random-walk cover times.
pub fn default_horizon(n: usize) -> usize {
    let n = n.max(2) as f64;
    (100.0 * n * n.ln()).ceil() as usize
}

/// Runs the protocol until every node has been informed, the active set
/// dies out, or `horizon` rounds have been played.
pub fn simulate(g: &Graph, spec: ProtocolSpec, source: usize, horizon: usize, seed: u64) -> Result<Execution> {
    simulate_with(g, spec, source, horizon, &mut stream_rng(seed, 0), |e| e.covered_at.is_some())
}

/// Like [`simulate`] but with a caller-chosen stopping rule, consulted after
/// every round (and once before the first).
pub fn simulate_with<F>(
    g: &Graph,
    spec: ProtocolSpec,
    source: usize,
    horizon: usize,
    rng: &mut SimRng,
    mut stop: F,
) -> Result<Execution>
where
    F: FnMut(&Execution) -> bool,
{
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let mut stepper = Stepper::new(g, spec, source)?;
    let mut exec = Execution::start(g.n(), source);
    let mut remaining = g.n() - 1;
    let mut comms = Vec::new();
    while !stop(&exec) && exec.rounds.len() < horizon && !exec.final_active.is_empty() {
        let anon = stepper.begin_round(rng);
        let active = stepper.active().to_vec();
        stepper.emit(rng, &mut comms);
        exec.rounds.push(Round { active, comms: comms.clone(), anon });
        exec.final_active = stepper.active().to_vec();
        exec.mark_informed(exec.rounds.len(), &mut remaining);
    }
    Ok(exec)
}

/// First round at which every node has been active, without recording rounds.
pub fn coverage_time(g: &Graph, spec: ProtocolSpec, source: usize, horizon: usize, rng: &mut SimRng) -> Result<Option<usize>> {
    let mut stepper = Stepper::new(g, spec, source)?;
    let mut informed = vec![false; g.n()];
    informed[source] = true;
    let mut remaining = g.n() - 1;
    let mut comms = Vec::new();
    for t in 1..=horizon {
        if remaining == 0 {
            return Ok(Some(t - 1));
        }
        stepper.begin_round(rng);
        stepper.emit(rng, &mut comms);
        if stepper.active().is_empty() {
            return Ok(None);
        }
        for &v in stepper.active() {
            if !std::mem::replace(&mut informed[v], true) {
                remaining -= 1;
            }
        }
    }
    Ok((remaining == 0).then_some(horizon))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisseminationStats {
    pub trials: usize,
    /// Trials that hit the horizon, or died out, before full coverage.
    pub censored: usize,
    /// Summary of the uncensored coverage times.
    pub summary: Option<Summary>,
    #[serde(skip)]
    pub times: Vec<Option<usize>>,
}

/// Coverage times over `trials` independent runs; trial `i` draws from
/// stream `i` of `seed`.
pub fn dissemination_time(
    g: &Graph,
    spec: ProtocolSpec,
    source: usize,
    trials: usize,
    seed: u64,
    horizon: usize,
) -> Result<DisseminationStats> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    Stepper::new(g, spec, source)?;
    let times: Vec<Option<usize>> = (0..trials)
        .into_par_iter()
        .map(|i| coverage_time(g, spec, source, horizon, &mut stream_rng(seed, i as u64)))
        .collect::<Result<_>>()?;
    let done: Vec<f64> = times.iter().flatten().map(|&t| t as f64).collect();
    Ok(DisseminationStats {
        trials,
        censored: trials - done.len(),
        summary: Summary::of(&done),
        times,
    })
}

fn check_die_out(g: &Graph, curious: &CuriousSet, rho: f64, source: usize) -> Result<()> {
    if source >= g.n() || curious.contains(source) {
        return Err(Error::InvalidSource(source));
    }
    if curious.n() != g.n() {
        return Err(Error::InvalidCuriousSet("size does not match the graph".into()));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!("rho = {rho} is outside [0, 1]")));
    }
    if rho == 0.0 {
        let comps = g.components_avoiding(curious.mask());
        let comp = comps.iter().find(|c| c.contains(&source)).expect("source is honest");
        if comp.iter().all(|&v| curious.curious_degree(g, v) == 0) {
            return Err(Error::SingularSystem);
        }
    }
    Ok(())
}

fn die_out_once(g: &Graph, curious: &CuriousSet, rho: f64, source: usize, rng: &mut SimRng) -> usize {
    use rand::Rng;
    let mut at = source;
    loop {
        if rng.random_bool(rho) {
            return at;
        }
        let nb = g.neighbors(at);
        if nb.is_empty() {
            return at;
        }
        let next = nb[rng.random_range(0..nb.len())];
        if curious.contains(next) {
            return at;
        }
        at = next;
    }
}

/// Last honest position of a walk that dies with probability `rho` before
/// each step and on its first step into `F`.
pub fn die_out_death_site(g: &Graph, curious: &CuriousSet, rho: f64, source: usize, seed: u64) -> Result<usize> {
    check_die_out(g, curious, rho, source)?;
    Ok(die_out_once(g, curious, rho, source, &mut stream_rng(seed, 0)))
}

const DIE_OUT_CHUNKS: usize = 64;

/// Death-site counts per node over `trials` walks, split across parallel
/// streams in a seed-determined way.
pub fn die_out_histogram(
    g: &Graph,
    curious: &CuriousSet,
    rho: f64,
    source: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<u64>> {
    check_die_out(g, curious, rho, source)?;
    let per_chunk = trials.div_ceil(DIE_OUT_CHUNKS);
    let parts: Vec<Vec<u64>> = (0..DIE_OUT_CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let mut counts = vec![0u64; g.n()];
            let todo = per_chunk.min(trials.saturating_sub(c * per_chunk));
            for _ in 0..todo {
                counts[die_out_once(g, curious, rho, source, &mut rng)] += 1;
            }
            counts
        })
        .collect();
    let mut total = vec![0u64; g.n()];
    for part in parts {
        total.iter_mut().zip(part).for_each(|(t, p)| *t += p);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PassageEstimate {
    pub trials: usize,
    pub successes: usize,
    /// Trials stopped by the horizon before resolving.
    pub censored: usize,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Monte Carlo estimate of the probability that the protocol started at `u`
/// reaches the active set `{v}` before any curious node becomes active
/// (for Dandelion, also while still in the anonymity phase).
#[allow(clippy::too_many_arguments)]
pub fn passage_probability(
    g: &Graph,
    curious: &CuriousSet,
    spec: ProtocolSpec,
    u: usize,
    v: usize,
    trials: usize,
    horizon: usize,
    seed: u64,
) -> Result<PassageEstimate> {
    let spec = spec.validated()?;
    if !(spec.is_cobra_family() || matches!(spec.kind, ProtocolKind::Dandelion | ProtocolKind::Anaconda)) {
        return Err(Error::UnsupportedProtocol(spec.kind.name().into()));
    }
    for node in [u, v] {
        if node >= g.n() || curious.contains(node) {
            return Err(Error::InvalidSource(node));
        }
    }
    let outcomes: Vec<Option<bool>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let mut stepper = Stepper::new(g, spec, u).expect("validated above");
            let mut comms = Vec::new();
            for _ in 0..=horizon {
                let anon = stepper.begin_round(&mut rng);
                let active = stepper.active();
                if active.is_empty() || active.iter().any(|&x| curious.contains(x)) || !anon {
                    return Some(false);
                }
                if active == [v] {
                    return Some(true);
                }
                stepper.emit(&mut rng, &mut comms);
            }
            None
        })
        .collect();
    let successes = outcomes.iter().filter(|o| **o == Some(true)).count();
    let censored = outcomes.iter().filter(|o| o.is_none()).count();
    let (ci_low, ci_high) = wilson_interval(successes as u64, trials as u64, Z95);
    Ok(PassageEstimate {
        trials,
        successes,
        censored,
        estimate: if trials == 0 { 0.0 } else { successes as f64 / trials as f64 },
        ci_low,
        ci_high,
    })
}
