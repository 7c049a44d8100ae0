//! Curious-node adversaries: choosing `F`, extracting what `F` sees from an
//! execution, and attacks that guess the source from that view.

mod attack;
mod select;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gossip::{Execution, ProtocolSpec, Stepper};
use crate::graph::{CuriousSet, Graph};
use crate::rng::SimRng;

pub use attack::{
    attack_success_rate, distinguish_sources, empirical_divergence, first_contact_attack, map_attack, mle_attack,
    AttackGuess, AttackKind, AttackOptions, AttackReport, DistinguisherReport, EmpiricalDivergence, LikelihoodModel,
};
pub use select::{select_curious, Padding, SelectionMode};

/// The communications of one round that touch `F`, plus the phase flag.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Observation {
    /// Sorted, duplicates kept.
    pub comms: Vec<(usize, usize)>,
    pub anon: bool,
}

/// What the adversary sees: observations from the first round in which a
/// curious node took part, re-indexed from zero.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AdversaryView {
    pub observations: Vec<Observation>,
}

impl AdversaryView {
    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// The first `k` observations, as an event for likelihood estimation.
    pub fn prefix(&self, k: usize) -> &[Observation] {
        &self.observations[..k.min(self.observations.len())]
    }
}

fn visible(comms: &[(usize, usize)], curious: &CuriousSet) -> Vec<(usize, usize)> {
    let mut seen: Vec<(usize, usize)> =
        comms.iter().copied().filter(|&(u, v)| curious.contains(u) || curious.contains(v)).collect();
    seen.sort_unstable();
    seen
}

/// Applies the visibility filter to every round and drops the rounds before
/// the first visible communication.
pub fn observe(exec: &Execution, curious: &CuriousSet) -> AdversaryView {
    let observations: Vec<Observation> = exec
        .rounds
        .iter()
        .map(|r| Observation { comms: visible(&r.comms, curious), anon: r.anon })
        .skip_while(|o| o.comms.is_empty())
        .collect();
    AdversaryView { observations }
}

/// Runs the protocol from `source` until `k` observations have been made,
/// without recording the execution. `None` if the run ends first.
pub fn observe_prefix(
    g: &Graph,
    spec: ProtocolSpec,
    curious: &CuriousSet,
    source: usize,
    k: usize,
    horizon: usize,
    rng: &mut SimRng,
) -> Result<Option<Vec<Observation>>> {
    let mut stepper = Stepper::new(g, spec, source)?;
    let mut comms = Vec::new();
    let mut out = Vec::with_capacity(k);
    for _ in 0..horizon {
        if out.len() == k || stepper.active().is_empty() {
            break;
        }
        let anon = stepper.begin_round(rng);
        stepper.emit(rng, &mut comms);
        let seen = visible(&comms, curious);
        if !out.is_empty() || !seen.is_empty() {
            out.push(Observation { comms: seen, anon });
        }
    }
    Ok((out.len() == k).then_some(out))
}

/// A source distribution over the non-curious nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Prior {
    /// `weights[v]` for every node `v`; curious nodes must carry zero mass.
    pub fn new(curious: &CuriousSet, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != curious.n() {
            return Err(Error::NotADistribution("one weight per node expected".into()));
        }
        if weights.iter().any(|&w| w.is_nan() || w < 0.0 || !w.is_finite()) {
            return Err(Error::NotADistribution("weights must be nonnegative".into()));
        }
        if curious.members().iter().any(|&v| weights[v] > 0.0) {
            return Err(Error::NotADistribution("curious nodes carry prior mass".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::NotADistribution(format!("weights sum to {sum}")));
        }
        let cumulative = weights
            .iter()
            .scan(0.0, |acc, &w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        Ok(Self { weights, cumulative })
    }

    pub fn uniform(curious: &CuriousSet) -> Self {
        let k = (curious.n() - curious.f()) as f64;
        let weights = (0..curious.n()).map(|v| if curious.contains(v) { 0.0 } else { 1.0 / k }).collect();
        Self::new(curious, weights).expect("uniform weights are valid")
    }

    /// All mass on `v`.
    pub fn point(curious: &CuriousSet, v: usize) -> Result<Self> {
        if v >= curious.n() || curious.contains(v) {
            return Err(Error::InvalidSource(v));
        }
        let mut weights = vec![0.0; curious.n()];
        weights[v] = 1.0;
        Self::new(curious, weights)
    }

    pub fn weight(&self, v: usize) -> f64 {
        self.weights[v]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let x: f64 = rng.random();
        let last = self.weights.iter().rposition(|&w| w > 0.0).expect("some mass");
        self.cumulative.iter().position(|&c| x < c).filter(|&v| self.weights[v] > 0.0).unwrap_or(last)
    }
}
