use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    RandomWalk,
    Cobra,
    TwoCobra,
    Dandelion,
    MutingPush,
    DieOutWalk,
    Anaconda,
}

impl ProtocolKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::RandomWalk => "random_walk",
            Self::Cobra => "cobra",
            Self::TwoCobra => "two_cobra",
            Self::Dandelion => "dandelion",
            Self::MutingPush => "muting_push",
            Self::DieOutWalk => "die_out_walk",
            Self::Anaconda => "anaconda",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "random_walk" => Self::RandomWalk,
            "cobra" => Self::Cobra,
            "two_cobra" => Self::TwoCobra,
            "dandelion" => Self::Dandelion,
            "muting_push" => Self::MutingPush,
            "die_out_walk" => Self::DieOutWalk,
            "anaconda" => Self::Anaconda,
            other => return Err(Error::UnsupportedProtocol(other.to_string())),
        })
    }
}

/// A protocol together with its parameters.
///
/// `rho` is the branching probability for cobra walks, the per-round phase
/// switch probability for Dandelion, the stay-active probability for muting
/// push and the per-step death probability for the die-out walk. `budget`
/// caps the number of head branchings of an anaconda walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    pub rho: f64,
    #[serde(default)]
    pub budget: usize,
}

impl ProtocolSpec {
    pub fn new(kind: ProtocolKind, rho: f64) -> Result<Self> {
        Self { kind, rho, budget: 0 }.validated()
    }

    pub fn random_walk() -> Self {
        Self { kind: ProtocolKind::RandomWalk, rho: 0.0, budget: 0 }
    }

    pub fn two_cobra() -> Self {
        Self { kind: ProtocolKind::TwoCobra, rho: 1.0, budget: 0 }
    }

    pub fn cobra(rho: f64) -> Result<Self> {
        Self::new(ProtocolKind::Cobra, rho)
    }

    pub fn dandelion(rho: f64) -> Result<Self> {
        Self::new(ProtocolKind::Dandelion, rho)
    }

    pub fn muting_push(rho: f64) -> Result<Self> {
        Self::new(ProtocolKind::MutingPush, rho)
    }

    pub fn die_out_walk(rho: f64) -> Result<Self> {
        Self::new(ProtocolKind::DieOutWalk, rho)
    }

    pub fn anaconda(budget: usize, rho: f64) -> Result<Self> {
        Self { kind: ProtocolKind::Anaconda, rho, budget }.validated()
    }

    /// Checks `rho` and pins it for the fixed-parameter kinds.
    pub fn validated(mut self) -> Result<Self> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidParameter(format!("rho = {} is outside [0, 1]", self.rho)));
        }
        match self.kind {
            ProtocolKind::RandomWalk => self.rho = 0.0,
            ProtocolKind::TwoCobra => self.rho = 1.0,
            _ => {}
        }
        Ok(self)
    }

    /// Whether the protocol reduces to a cobra walk with this `rho`.
    pub fn is_cobra_family(&self) -> bool {
        matches!(self.kind, ProtocolKind::RandomWalk | ProtocolKind::Cobra | ProtocolKind::TwoCobra)
    }
}

/// Round-by-round state machine shared by every protocol.
///
/// Each round first calls [`Stepper::begin_round`], which settles the phase
/// flag, then [`Stepper::emit`], which draws the communications and advances
/// the active set to their receivers.
#[derive(Debug, Clone)]
pub struct Stepper<'g> {
    g: &'g Graph,
    spec: ProtocolSpec,
    active: Vec<usize>,
    anon: bool,
    head: usize,
    branches: usize,
    receivers: Vec<usize>,
}

impl<'g> Stepper<'g> {
    pub fn new(g: &'g Graph, spec: ProtocolSpec, source: usize) -> Result<Self> {
        if source >= g.n() {
            return Err(Error::InvalidSource(source));
        }
        let spec = spec.validated()?;
        Ok(Self {
            g,
            spec,
            active: vec![source],
            anon: true,
            head: source,
            branches: 0,
            receivers: Vec::new(),
        })
    }

    /// Current active set `X_t`, sorted.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn anon(&self) -> bool {
        self.anon
    }

    /// Dandelion leaves the anonymity phase with probability `rho` at the
    /// start of each round. Returns the phase flag of this round.
    pub fn begin_round<R: Rng>(&mut self, rng: &mut R) -> bool {
        if self.spec.kind == ProtocolKind::Dandelion && self.anon && rng.random_bool(self.spec.rho) {
            self.anon = false;
        }
        self.anon
    }

    /// Draws this round's communications into `comms` and moves to the next
    /// active set.
    pub fn emit<R: Rng>(&mut self, rng: &mut R, comms: &mut Vec<(usize, usize)>) {
        comms.clear();
        let g = self.g;
        let rho = self.spec.rho;
        let pick = |rng: &mut R, u: usize| {
            let nb = g.neighbors(u);
            nb[rng.random_range(0..nb.len())]
        };
        let mut next_head = self.head;
        for &u in &self.active {
            if g.degree(u) == 0 {
                continue;
            }
            match self.spec.kind {
                ProtocolKind::RandomWalk | ProtocolKind::Cobra | ProtocolKind::TwoCobra => {
                    let branch = rng.random_bool(rho);
                    comms.push((u, pick(rng, u)));
                    if branch {
                        comms.push((u, pick(rng, u)));
                    }
                }
                ProtocolKind::Dandelion => {
                    if self.anon {
                        comms.push((u, pick(rng, u)));
                    } else {
                        comms.extend(g.neighbors(u).iter().map(|&v| (u, v)));
                    }
                }
                ProtocolKind::MutingPush => {
                    comms.push((u, pick(rng, u)));
                    if rng.random_bool(rho) {
                        comms.push((u, u));
                    }
                }
                ProtocolKind::DieOutWalk => {
                    if !rng.random_bool(rho) {
                        comms.push((u, pick(rng, u)));
                    }
                }
                ProtocolKind::Anaconda => {
                    let first = pick(rng, u);
                    comms.push((u, first));
                    if u == self.head {
                        if self.branches < self.spec.budget && rng.random_bool(rho) {
                            comms.push((u, pick(rng, u)));
                            self.branches += 1;
                        }
                        next_head = first;
                    }
                }
            }
        }
        self.head = next_head;
        self.receivers.clear();
        self.receivers.extend(comms.iter().map(|&(_, v)| v));
        self.receivers.sort_unstable();
        self.receivers.dedup();
        std::mem::swap(&mut self.active, &mut self.receivers);
    }
}
