//! Random d-regular graphs from the configuration model.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;

use super::Graph;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

pub const DEFAULT_RETRY_LIMIT: usize = 10_000;

/// Degrees up to this value use whole-pairing rejection; above it the
/// acceptance rate `~exp(-(d^2 - 1) / 4)` collapses and pairing proceeds
/// stub by stub with restarts instead.
const WHOLE_REJECTION_MAX_DEGREE: usize = 5;

/// Sampler for simple, connected d-regular graphs.
#[derive(Debug, Clone, Copy)]
pub struct RegularGraphGenerator {
    n: usize,
    d: usize,
    retry_limit: usize,
}

impl RegularGraphGenerator {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        let infeasible = |reason: &str| Error::Infeasible { n, d, reason: reason.into() };
        if d < 3 {
            return Err(infeasible("degree must be at least 3"));
        }
        if d >= n {
            return Err(infeasible("degree must be below n"));
        }
        if (n * d) % 2 == 1 {
            return Err(infeasible("n * d must be even"));
        }
        Ok(Self { n, d, retry_limit: DEFAULT_RETRY_LIMIT })
    }

    pub fn with_retry_limit(mut self, limit: usize) -> Self {
        self.retry_limit = limit;
        self
    }

    pub fn sample(&self, seed: u64) -> Result<Graph> {
        let mut rng = stream_rng(seed, 0);
        // Dense regular graphs are complements of sparse ones and are always
        // connected once d >= n / 2.
        let complement = 2 * self.d > self.n;
        let target = if complement { self.n - 1 - self.d } else { self.d };
        for _ in 0..self.retry_limit {
            let Some(edges) = pair_stubs(self.n, target, &mut rng) else {
                continue;
            };
            let g = Graph::from_edges(self.n, &edges)?;
            let g = if complement { g.complement() } else { g };
            if g.is_connected() {
                return Ok(g);
            }
        }
        Err(Error::RetryLimitExceeded { attempts: self.retry_limit })
    }
}

/// Samples a simple, connected d-regular graph; deterministic in `seed`.
pub fn generate_random_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    RegularGraphGenerator::new(n, d)?.sample(seed)
}

fn pair_stubs<R: Rng>(n: usize, d: usize, rng: &mut R) -> Option<Vec<(usize, usize)>> {
    if d == 0 {
        return Some(Vec::new());
    }
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    if d <= WHOLE_REJECTION_MAX_DEGREE {
        stubs.shuffle(rng);
        let mut seen = HashSet::with_capacity(stubs.len() / 2);
        let mut edges = Vec::with_capacity(stubs.len() / 2);
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v || !seen.insert((u, v)) {
                return None;
            }
            edges.push((u, v));
        }
        return Some(edges);
    }
    let mut seen = HashSet::with_capacity(n * d / 2);
    let mut edges = Vec::with_capacity(n * d / 2);
    while !stubs.is_empty() {
        let mut leftover: BTreeMap<usize, usize> = BTreeMap::new();
        stubs.shuffle(rng);
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u != v && !seen.contains(&(u, v)) {
                seen.insert((u, v));
                edges.push((u, v));
            } else {
                *leftover.entry(u).or_default() += 1;
                *leftover.entry(v).or_default() += 1;
            }
        }
        let open: Vec<usize> = leftover.keys().copied().collect();
        let pairable = open.is_empty()
            || open.iter().enumerate().any(|(i, &u)| open[i + 1..].iter().any(|&v| !seen.contains(&(u, v))));
        if !pairable {
            return None;
        }
        stubs = leftover.into_iter().flat_map(|(v, c)| std::iter::repeat_n(v, c)).collect();
    }
    Some(edges)
}
