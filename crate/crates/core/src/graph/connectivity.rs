//! Vertex connectivity by unit-capacity max-flow on the node-split digraph.

use std::collections::VecDeque;

use serde::Serialize;

use super::Graph;
use crate::error::{Error, Result};

/// Default largest graph accepted by the connectivity routines.
pub const DEFAULT_CONNECTIVITY_CAP: usize = 200;

/// A minimum vertex cut together with one node from each side it separates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VertexCut {
    pub nodes: Vec<usize>,
    pub source: usize,
    pub sink: usize,
}

impl VertexCut {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }
}

struct FlowNetwork {
    head: Vec<usize>,
    cap: Vec<u32>,
    adj: Vec<Vec<usize>>,
}

impl FlowNetwork {
    /// `v_in = 2v`, `v_out = 2v + 1`; the internal arc carries capacity 1 and
    /// original edges become uncapacitated arcs `u_out -> v_in`.
    fn split(g: &Graph) -> Self {
        let n = g.n();
        let mut net = Self { head: Vec::new(), cap: Vec::new(), adj: vec![Vec::new(); 2 * n] };
        let big = n as u32 + 1;
        for v in 0..n {
            net.add_arc(2 * v, 2 * v + 1, 1);
        }
        for (u, v) in g.edges() {
            net.add_arc(2 * u + 1, 2 * v, big);
            net.add_arc(2 * v + 1, 2 * u, big);
        }
        net
    }

    fn add_arc(&mut self, from: usize, to: usize, cap: u32) {
        self.adj[from].push(self.head.len());
        self.head.push(to);
        self.cap.push(cap);
        self.adj[to].push(self.head.len());
        self.head.push(from);
        self.cap.push(0);
    }

    fn reset(&mut self, original: &[u32]) {
        self.cap.copy_from_slice(original);
    }

    /// Max-flow from `s` to `t`, stopping early once it reaches `limit`.
    fn max_flow(&mut self, s: usize, t: usize, limit: usize) -> usize {
        let mut flow = 0;
        let mut parent_arc = vec![usize::MAX; self.adj.len()];
        while flow < limit {
            parent_arc.fill(usize::MAX);
            let mut queue = VecDeque::from([s]);
            let mut reached = false;
            'bfs: while let Some(x) = queue.pop_front() {
                for &a in &self.adj[x] {
                    let y = self.head[a];
                    if self.cap[a] > 0 && y != s && parent_arc[y] == usize::MAX {
                        parent_arc[y] = a;
                        if y == t {
                            reached = true;
                            break 'bfs;
                        }
                        queue.push_back(y);
                    }
                }
            }
            if !reached {
                break;
            }
            let mut y = t;
            while y != s {
                let a = parent_arc[y];
                self.cap[a] -= 1;
                self.cap[a ^ 1] += 1;
                y = self.head[a ^ 1];
            }
            flow += 1;
        }
        flow
    }

    fn residual_reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            for &a in &self.adj[x] {
                let y = self.head[a];
                if self.cap[a] > 0 && !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        seen
    }
}

fn search(g: &Graph, cap: usize) -> Result<Option<VertexCut>> {
    let n = g.n();
    if n > cap {
        return Err(Error::SizeCapExceeded { n, cap });
    }
    let components = g.components_avoiding(&vec![false; n]);
    if components.len() > 1 {
        return Ok(Some(VertexCut { nodes: Vec::new(), source: components[0][0], sink: components[1][0] }));
    }
    let mut net = FlowNetwork::split(g);
    let original = net.cap.clone();
    let mut best = n.saturating_sub(1);
    let mut best_pair = None;
    // Some node among the first best+1 lies outside a minimum cut, and every
    // node across the cut from it has a larger index.
    let mut i = 0;
    while i <= best && i < n {
        for j in i + 1..n {
            if g.has_edge(i, j) {
                continue;
            }
            net.reset(&original);
            let flow = net.max_flow(2 * i + 1, 2 * j, best);
            if flow < best || best_pair.is_none() && flow == best {
                best = flow;
                best_pair = Some((i, j));
            }
        }
        i += 1;
    }
    let Some((s, t)) = best_pair else {
        return Ok(None);
    };
    net.reset(&original);
    net.max_flow(2 * s + 1, 2 * t, usize::MAX);
    let reach = net.residual_reachable(2 * s + 1);
    let nodes = (0..n).filter(|&v| v != s && reach[2 * v] && !reach[2 * v + 1]).collect();
    Ok(Some(VertexCut { nodes, source: s, sink: t }))
}

/// Vertex connectivity `kappa(G)`; complete graphs report `n - 1` and
/// disconnected graphs `0`.
pub fn vertex_connectivity(g: &Graph) -> Result<usize> {
    vertex_connectivity_with_cap(g, DEFAULT_CONNECTIVITY_CAP)
}

pub fn vertex_connectivity_with_cap(g: &Graph, cap: usize) -> Result<usize> {
    Ok(search(g, cap)?.map_or(g.n().saturating_sub(1), |c| c.size()))
}

/// One minimum vertex cut, or `None` for complete graphs, which have none.
pub fn minimum_vertex_cut(g: &Graph, cap: usize) -> Result<Option<VertexCut>> {
    search(g, cap)
}
