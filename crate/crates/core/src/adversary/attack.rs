use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{observe_prefix, AdversaryView, Observation, Prior};
use crate::error::{Error, Result};
use crate::gossip::{default_horizon, ProtocolKind, ProtocolSpec};
use crate::graph::{CuriousSet, Graph};
use crate::privacy::{divergence_matrix_relaxed, real};
use crate::rng::{derive_seed, stream_rng};
use crate::spectral::build_chain_relaxed;
use crate::stats::{binomial_std, wilson_interval, Z95};

/// Sender of a non-curious to curious message in the first observation,
/// lowest id first; `None` on an empty view.
pub fn first_contact_attack(view: &AdversaryView, curious: &CuriousSet) -> Option<usize> {
    view.observations
        .first()?
        .comms
        .iter()
        .filter(|&&(u, v)| !curious.contains(u) && curious.contains(v))
        .map(|&(u, _)| u)
        .min()
}

/// Monte Carlo estimates of `Pr[first k observations = sigma]` per source,
/// computed once and reused for every attack in an invocation.
#[derive(Debug, Clone)]
pub struct LikelihoodModel {
    curious: CuriousSet,
    prefix: usize,
    trials: usize,
    counts: Vec<HashMap<Vec<Observation>, u32>>,
}

impl LikelihoodModel {
    pub fn build(
        g: &Graph,
        spec: ProtocolSpec,
        curious: &CuriousSet,
        prefix: usize,
        trials: usize,
        horizon: usize,
        seed: u64,
    ) -> Result<Self> {
        if prefix == 0 || trials == 0 {
            return Err(Error::InvalidParameter("prefix and likelihood trials must be positive".into()));
        }
        let counts = (0..g.n())
            .into_par_iter()
            .map(|v| {
                let mut table = HashMap::new();
                if curious.contains(v) {
                    return Ok(table);
                }
                let mut rng = stream_rng(seed, v as u64);
                for _ in 0..trials {
                    if let Some(event) = observe_prefix(g, spec, curious, v, prefix, horizon, &mut rng)? {
                        *table.entry(event).or_insert(0) += 1;
                    }
                }
                Ok(table)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { curious: curious.clone(), prefix, trials, counts })
    }

    pub fn prefix(&self) -> usize {
        self.prefix
    }

    pub fn likelihood(&self, v: usize, event: &[Observation]) -> f64 {
        self.count(v, event) as f64 / self.trials as f64
    }

    fn count(&self, v: usize, event: &[Observation]) -> u32 {
        self.counts[v].get(event).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttackGuess {
    pub node: Option<usize>,
    /// Every likelihood was zero and the first-contact rule decided.
    pub fallback: bool,
}

/// `argmax_v Pr[prefix | v] p(v)` with lowest-id tie-break.
pub fn map_attack(model: &LikelihoodModel, prior: &Prior, view: &AdversaryView) -> AttackGuess {
    if view.is_empty() {
        return AttackGuess { node: None, fallback: false };
    }
    let event = view.prefix(model.prefix);
    let mut best: Option<(usize, f64)> = None;
    for v in (0..model.counts.len()).filter(|&v| prior.weight(v) > 0.0) {
        let score = model.likelihood(v, event) * prior.weight(v);
        if score > 0.0 && best.is_none_or(|(_, b)| score > b) {
            best = Some((v, score));
        }
    }
    match best {
        Some((v, _)) => AttackGuess { node: Some(v), fallback: false },
        None => AttackGuess { node: first_contact_attack(view, &model.curious), fallback: true },
    }
}

/// MAP under the uniform prior.
pub fn mle_attack(model: &LikelihoodModel, view: &AdversaryView) -> AttackGuess {
    map_attack(model, &Prior::uniform(&model.curious), view)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    FirstContact,
    Mle,
    Map,
    /// Ignores the view and always names this node.
    Fixed(usize),
}

impl AttackKind {
    pub fn name(self) -> String {
        match self {
            Self::FirstContact => "first_contact".into(),
            Self::Mle => "mle".into(),
            Self::Map => "map".into(),
            Self::Fixed(v) => format!("fixed:{v}"),
        }
    }
}

impl std::str::FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first_contact" => Ok(Self::FirstContact),
            "mle" => Ok(Self::Mle),
            "map" => Ok(Self::Map),
            other => other
                .strip_prefix("fixed:")
                .and_then(|v| v.parse().ok())
                .map(Self::Fixed)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown attack {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackOptions {
    /// Observations per likelihood event.
    pub prefix: usize,
    pub likelihood_trials: usize,
    /// Round cap per run; `None` uses the default horizon.
    pub horizon: Option<usize>,
}

impl Default for AttackOptions {
    fn default() -> Self {
        Self { prefix: 1, likelihood_trials: 20_000, horizon: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackReport {
    pub attack: String,
    pub trials: usize,
    /// Trials in which the adversary observed anything.
    pub conditioned_trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `exp(epsilon) * max p(guess)` with the exact leakage of the protocol.
    #[serde(serialize_with = "real")]
    pub bound: f64,
    /// `rate <= bound + 3 sigma`.
    pub bound_satisfied: bool,
    #[serde(skip)]
    pub fallbacks: usize,
}

fn exact_epsilon(g: &Graph, curious: &CuriousSet, spec: ProtocolSpec) -> Result<f64> {
    if !(spec.is_cobra_family() || matches!(spec.kind, ProtocolKind::Dandelion | ProtocolKind::MutingPush)) {
        return Err(Error::UnsupportedProtocol(spec.kind.name().into()));
    }
    Ok(divergence_matrix_relaxed(&build_chain_relaxed(g, curious, spec.rho)?)?.epsilon)
}

/// Samples sources from `sampler`, runs the protocol, and scores the attack
/// on the runs that produced an observation.
#[allow(clippy::too_many_arguments)]
pub fn attack_success_rate(
    g: &Graph,
    curious: &CuriousSet,
    spec: ProtocolSpec,
    attack: AttackKind,
    sampler: &Prior,
    trials: usize,
    seed: u64,
    opts: &AttackOptions,
) -> Result<AttackReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let spec = spec.validated()?;
    let epsilon = exact_epsilon(g, curious, spec)?;
    let horizon = opts.horizon.unwrap_or_else(|| default_horizon(g.n()));
    let model = match attack {
        AttackKind::Mle | AttackKind::Map => Some(LikelihoodModel::build(
            g,
            spec,
            curious,
            opts.prefix,
            opts.likelihood_trials,
            horizon,
            derive_seed(seed, 1),
        )?),
        _ => None,
    };
    let uniform = Prior::uniform(curious);
    let observed = match attack {
        AttackKind::Mle | AttackKind::Map => opts.prefix,
        _ => 1,
    };
    let run_seed = derive_seed(seed, 2);
    let outcomes: Vec<Option<(Option<usize>, bool, bool)>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(run_seed, i as u64);
            let source = sampler.sample(&mut rng);
            let Some(obs) = observe_prefix(g, spec, curious, source, observed, horizon, &mut rng)? else {
                return Ok(None);
            };
            let view = AdversaryView { observations: obs };
            let guess = match (attack, &model) {
                (AttackKind::FirstContact, _) => AttackGuess { node: first_contact_attack(&view, curious), fallback: false },
                (AttackKind::Fixed(v), _) => AttackGuess { node: Some(v), fallback: false },
                (AttackKind::Mle, Some(m)) => map_attack(m, &uniform, &view),
                (AttackKind::Map, Some(m)) => map_attack(m, sampler, &view),
                _ => unreachable!("likelihood attacks always have a model"),
            };
            Ok(Some((guess.node, guess.node == Some(source), guess.fallback)))
        })
        .collect::<Result<_>>()?;

    let conditioned: Vec<_> = outcomes.iter().flatten().collect();
    let successes = conditioned.iter().filter(|o| o.1).count();
    let fallbacks = conditioned.iter().filter(|o| o.2).count();
    let max_prior = conditioned
        .iter()
        .filter_map(|o| o.0)
        .filter(|&v| v < g.n())
        .map(|v| sampler.weight(v))
        .fold(0.0, f64::max);
    let n_cond = conditioned.len();
    let rate = if n_cond == 0 { 0.0 } else { successes as f64 / n_cond as f64 };
    let (ci_low, ci_high) = wilson_interval(successes as u64, n_cond as u64, Z95);
    let bound = if max_prior == 0.0 { 0.0 } else { epsilon.exp() * max_prior };
    Ok(AttackReport {
        attack: attack.name(),
        trials,
        conditioned_trials: n_cond,
        successes,
        rate,
        ci_low,
        ci_high,
        bound,
        bound_satisfied: rate <= bound + 3.0 * binomial_std(rate, n_cond as u64),
        fallbacks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistinguisherReport {
    pub trials: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// Distinct training events produced by both sources.
    pub shared_events: usize,
}

/// Separates two candidate sources by exact equality of observation
/// prefixes: a test view is attributed to whichever source produced it more
/// often in training (ties and unseen views go to `a`).
#[allow(clippy::too_many_arguments)]
pub fn distinguish_sources(
    g: &Graph,
    curious: &CuriousSet,
    spec: ProtocolSpec,
    a: usize,
    b: usize,
    trials: usize,
    prefix: usize,
    seed: u64,
) -> Result<DistinguisherReport> {
    let horizon = default_horizon(g.n());
    let model = LikelihoodModel::build(g, spec, curious, prefix, trials, horizon, derive_seed(seed, 1))?;
    let shared_events = model.counts[a].keys().filter(|k| model.counts[b].contains_key(*k)).count();
    let test_seed = derive_seed(seed, 2);
    let correct = (0..trials)
        .into_par_iter()
        .map(|i| {
            let source = if i % 2 == 0 { a } else { b };
            let mut rng = stream_rng(test_seed, i as u64);
            let event = observe_prefix(g, spec, curious, source, prefix, horizon, &mut rng)?.unwrap_or_default();
            let guess = if model.count(b, &event) > model.count(a, &event) { b } else { a };
            Ok(usize::from(guess == source))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(DistinguisherReport { trials, correct, accuracy: correct as f64 / trials as f64, shared_events })
}

/// Plug-in estimate of the max divergence between first-observation laws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalDivergence {
    #[serde(serialize_with = "real")]
    pub epsilon_hat: f64,
    pub pair: Option<(usize, usize)>,
    /// Three standard errors of the log-ratio at the maximizing event.
    pub slack: f64,
    pub trials_per_source: usize,
    /// Events whose numerator count fell below the threshold and were skipped.
    pub skipped_events: usize,
}

/// Estimates `max_{v,u,sigma} ln(P_v(sigma) / P_u(sigma))` over the first
/// observation (including "nothing observed"). Only events seen at least
/// `min_count` times under `v` enter; an empty denominator reports `inf`
/// rather than being smoothed away.
pub fn empirical_divergence(
    g: &Graph,
    curious: &CuriousSet,
    spec: ProtocolSpec,
    trials_per_source: usize,
    min_count: u32,
    horizon: usize,
    seed: u64,
) -> Result<EmpiricalDivergence> {
    let honest = curious.honest_nodes();
    let tables: Vec<HashMap<Option<Observation>, u32>> = honest
        .par_iter()
        .map(|&v| {
            let mut rng = stream_rng(seed, v as u64);
            let mut table = HashMap::new();
            for _ in 0..trials_per_source {
                let event = observe_prefix(g, spec, curious, v, 1, horizon, &mut rng)?.map(|mut o| o.remove(0));
                *table.entry(event).or_insert(0u32) += 1;
            }
            Ok(table)
        })
        .collect::<Result<_>>()?;
    let n = trials_per_source as f64;
    let mut best = EmpiricalDivergence {
        epsilon_hat: 0.0,
        pair: None,
        slack: 0.0,
        trials_per_source,
        skipped_events: 0,
    };
    for (i, tv) in tables.iter().enumerate() {
        // Sorted iteration keeps the reported argmax deterministic.
        let mut events: Vec<_> = tv.iter().collect();
        events.sort();
        for (event, &cv) in events {
            if cv < min_count {
                best.skipped_events += 1;
                continue;
            }
            for (j, tu) in tables.iter().enumerate() {
                if i == j {
                    continue;
                }
                let cu = tu.get(event).copied().unwrap_or(0);
                let (ratio, se) = if cu == 0 {
                    (f64::INFINITY, 0.0)
                } else {
                    let (pv, pu) = (cv as f64 / n, cu as f64 / n);
                    ((pv / pu).ln(), ((1.0 - pv) / (n * pv) + (1.0 - pu) / (n * pu)).sqrt())
                };
                if ratio > best.epsilon_hat {
                    best.epsilon_hat = ratio;
                    best.pair = Some((honest[i], honest[j]));
                    best.slack = 3.0 * se;
                }
            }
        }
    }
    Ok(best)
}
