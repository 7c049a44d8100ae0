//! Undirected simple graphs and the structural quantities the privacy bounds
//! consume: spectral expansion, vertex connectivity and adversarial density.

mod connectivity;
mod edge_list;
mod generate;

use std::collections::VecDeque;
use std::fmt;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use connectivity::{
    minimum_vertex_cut, vertex_connectivity, vertex_connectivity_with_cap, VertexCut,
    DEFAULT_CONNECTIVITY_CAP,
};
pub use edge_list::{parse_edge_list, write_edge_list};
pub use generate::{generate_random_regular, RegularGraphGenerator, DEFAULT_RETRY_LIMIT};

/// Largest graph handed to the dense eigensolver.
pub const DENSE_SPECTRUM_CAP: usize = 4096;

/// Undirected simple graph on nodes `0..n` with sorted neighbour lists.
///
/// Immutable once built; the normalized adjacency spectrum is computed lazily
/// and cached.
#[derive(Clone)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    degree: Option<usize>,
    spectrum: OnceLock<Vec<f64>>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.adjacency == other.adjacency
    }
}

impl Eq for Graph {}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.n())
            .field("m", &self.edge_count())
            .field("degree", &self.degree)
            .finish()
    }
}

impl Graph {
    /// Builds a graph from an edge list, rejecting self-loops, duplicate edges
    /// and out-of-range endpoints. Edge orientation is irrelevant.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u}, {v}) has an endpoint outside 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidParameter(format!("self-loop at node {u}")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for (u, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate edge ({}, {})",
                    u.min(w[0]),
                    u.max(w[0])
                )));
            }
        }
        Ok(Self::from_sorted_adjacency(adjacency))
    }

    fn from_sorted_adjacency(adjacency: Vec<Vec<usize>>) -> Self {
        let degree = match adjacency.first() {
            Some(first) if adjacency.iter().all(|l| l.len() == first.len()) => Some(first.len()),
            _ => None,
        };
        Self { adjacency, degree, spectrum: OnceLock::new() }
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// Common degree `d` when the graph is regular.
    pub fn regular_degree(&self) -> Option<usize> {
        self.degree
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn is_connected(&self) -> bool {
        self.components_avoiding(&vec![false; self.n()]).len() <= 1
    }

    /// Connected components of the subgraph induced by nodes with
    /// `removed[v] == false`, each sorted, ordered by smallest member.
    pub fn components_avoiding(&self, removed: &[bool]) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = removed.to_vec();
        let mut components = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &v in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            components.push(comp);
        }
        components
    }

    /// BFS distances from `source`; `None` for unreachable nodes.
    pub fn distances_from(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for &v in &self.adjacency[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Diameter, or `None` when disconnected.
    pub fn diameter(&self) -> Option<usize> {
        (0..self.n()).try_fold(0, |acc, s| {
            self.distances_from(s)
                .into_iter()
                .try_fold(acc, |m, d| d.map(|d| m.max(d)))
        })
    }

    /// The graph with node `v` renamed to `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidParameter("relabeling is not a permutation".into()));
        }
        let edges: Vec<_> = self.edges().map(|(u, v)| (perm[u], perm[v])).collect();
        Self::from_edges(n, &edges)
    }

    pub fn complement(&self) -> Self {
        let n = self.n();
        let adjacency = (0..n)
            .map(|u| (0..n).filter(|&v| v != u && !self.has_edge(u, v)).collect())
            .collect();
        Self::from_sorted_adjacency(adjacency)
    }

    /// Dense normalized adjacency `D^(-1/2) A D^(-1/2)`.
    pub fn normalized_adjacency(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut a = DMatrix::zeros(n, n);
        for (u, v) in self.edges() {
            let w = 1.0 / ((self.degree(u) * self.degree(v)) as f64).sqrt();
            a[(u, v)] = w;
            a[(v, u)] = w;
        }
        a
    }

    /// Eigenvalues of the normalized adjacency matrix, in descending order.
    pub fn normalized_spectrum(&self) -> Result<&[f64]> {
        if self.n() > DENSE_SPECTRUM_CAP {
            return Err(Error::SizeCapExceeded { n: self.n(), cap: DENSE_SPECTRUM_CAP });
        }
        Ok(self.spectrum.get_or_init(|| {
            let mut values: Vec<f64> =
                self.normalized_adjacency().symmetric_eigenvalues().iter().copied().collect();
            values.sort_by(|a, b| b.total_cmp(a));
            values
        }))
    }
}

/// Spectral expansion `max(|lambda_2|, |lambda_n|)` of the normalized adjacency.
pub fn spectral_expansion(g: &Graph) -> Result<f64> {
    if !g.is_connected() {
        return Err(Error::DisconnectedGraph);
    }
    let spectrum = g.normalized_spectrum()?;
    if spectrum.len() < 2 {
        return Ok(0.0);
    }
    let second = spectrum[1].abs();
    let last = spectrum[spectrum.len() - 1].abs();
    Ok(second.max(last).min(1.0))
}

/// Canonical fixture graphs with known spectra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedGraph {
    Complete,
    Cycle,
    Path,
    Petersen,
    Hypercube,
}

impl std::str::FromStr for NamedGraph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "complete" => Self::Complete,
            "cycle" => Self::Cycle,
            "path" => Self::Path,
            "petersen" => Self::Petersen,
            "hypercube" => Self::Hypercube,
            other => return Err(Error::InvalidParameter(format!("unknown graph kind {other:?}"))),
        })
    }
}

pub fn named_graph(kind: NamedGraph, n: usize) -> Result<Graph> {
    let invalid = |reason: &str| Error::InvalidSize { kind: format!("{kind:?}"), reason: reason.into() };
    let edges: Vec<(usize, usize)> = match kind {
        NamedGraph::Complete => {
            if n < 2 {
                return Err(invalid("needs at least 2 nodes"));
            }
            (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect()
        }
        NamedGraph::Cycle => {
            if n < 3 {
                return Err(invalid("needs at least 3 nodes"));
            }
            (0..n).map(|u| (u, (u + 1) % n)).collect()
        }
        NamedGraph::Path => {
            if n < 2 {
                return Err(invalid("needs at least 2 nodes"));
            }
            (0..n - 1).map(|u| (u, u + 1)).collect()
        }
        NamedGraph::Petersen => {
            if n != 10 {
                return Err(invalid("the Petersen graph has exactly 10 nodes"));
            }
            (0..5)
                .flat_map(|i| [(i, (i + 1) % 5), (i, i + 5), (5 + i, 5 + (i + 2) % 5)])
                .collect()
        }
        NamedGraph::Hypercube => {
            if n < 2 || !n.is_power_of_two() {
                return Err(invalid("needs a power of two, at least 2"));
            }
            let bits = n.trailing_zeros();
            (0..n)
                .flat_map(|u| (0..bits).map(move |b| (u, u ^ (1 << b))).filter(|&(u, v)| u < v))
                .collect()
        }
    };
    Graph::from_edges(n, &edges)
}

/// The curious set `F`: nodes that report their communications to the adversary.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CuriousSet {
    members: Vec<usize>,
    mask: Vec<bool>,
}

impl CuriousSet {
    /// Validates `members` against a graph on `n` nodes; requires `f < n - 1`.
    pub fn new(n: usize, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut mask = vec![false; n];
        let mut list = Vec::new();
        for v in members {
            if v >= n {
                return Err(Error::InvalidCuriousSet(format!("node {v} is outside 0..{n}")));
            }
            if !std::mem::replace(&mut mask[v], true) {
                list.push(v);
            }
        }
        if list.len() + 1 >= n {
            return Err(Error::InvalidCuriousSet(format!(
                "f = {} must be below n - 1 = {}",
                list.len(),
                n.saturating_sub(1)
            )));
        }
        list.sort_unstable();
        Ok(Self { members: list, mask })
    }

    pub fn empty(n: usize) -> Self {
        Self { members: Vec::new(), mask: vec![false; n] }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn f(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Size of the underlying node set.
    pub fn n(&self) -> usize {
        self.mask.len()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.mask.get(v).copied().unwrap_or(false)
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Non-curious nodes in ascending order.
    pub fn honest_nodes(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&v| !self.mask[v]).collect()
    }

    /// Number of neighbours of `v` in `F`.
    pub fn curious_degree(&self, g: &Graph, v: usize) -> usize {
        g.neighbors(v).iter().filter(|&&u| self.mask[u]).count()
    }

    fn check_graph(&self, g: &Graph) -> Result<()> {
        if self.n() != g.n() {
            return Err(Error::InvalidCuriousSet(format!(
                "built for {} nodes, graph has {}",
                self.n(),
                g.n()
            )));
        }
        Ok(())
    }
}

/// Adversarial density as an exact fraction `curious_neighbors / degree`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Density {
    pub curious_neighbors: usize,
    pub degree: usize,
}

impl Density {
    pub fn value(&self) -> f64 {
        self.curious_neighbors as f64 / self.degree as f64
    }

    /// `alpha_F < 1 - lambda`, the gate of every upper bound.
    pub fn passes_gate(&self, lambda: f64) -> bool {
        self.value() < 1.0 - lambda
    }
}

/// Maximum fraction of curious neighbours over the non-curious nodes.
pub fn adversarial_density(g: &Graph, curious: &CuriousSet) -> Result<Density> {
    curious.check_graph(g)?;
    let d = g.regular_degree().ok_or(Error::NonRegularGraph)?;
    let worst = (0..g.n())
        .filter(|&v| !curious.contains(v))
        .map(|v| curious.curious_degree(g, v))
        .max()
        .unwrap_or(0);
    Ok(Density { curious_neighbors: worst, degree: d })
}

/// Whether the subgraph induced by `V \ F` is connected.
pub fn induced_subgraph_connected(g: &Graph, curious: &CuriousSet) -> bool {
    g.components_avoiding(curious.mask()).len() <= 1
}
