use rand::seq::index::sample;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{minimum_vertex_cut, CuriousSet, Graph, DEFAULT_CONNECTIVITY_CAP};
use crate::rng::stream_rng;

/// How a vertex-cut adversary fills the curious slots left after the cut.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    /// Smallest eligible node ids first.
    #[default]
    LowestId,
    /// Uniformly among eligible nodes.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum SelectionMode {
    /// Uniform over all `f`-subsets.
    Uniform,
    /// A minimum vertex cut, padded so both sides keep an honest node.
    MinVertexCut {
        #[serde(default)]
        padding: Padding,
    },
    /// Repeatedly adds the node that maximizes the resulting density.
    GreedyDensity,
}

impl SelectionMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Uniform => "uniform",
            Self::MinVertexCut { .. } => "min_vertex_cut",
            Self::GreedyDensity => "greedy_density",
        }
    }
}

impl std::str::FromStr for SelectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "uniform" => Self::Uniform,
            "min_vertex_cut" => Self::MinVertexCut { padding: Padding::LowestId },
            "greedy_density" => Self::GreedyDensity,
            other => return Err(Error::InvalidParameter(format!("unknown adversary mode {other:?}"))),
        })
    }
}

pub fn select_curious(g: &Graph, f: usize, mode: SelectionMode, seed: u64) -> Result<CuriousSet> {
    let n = g.n();
    if f == 0 || f + 1 >= n {
        return Err(Error::InfeasibleF { f, reason: format!("need 0 < f < n - 1 = {}", n.saturating_sub(1)) });
    }
    let mut rng = stream_rng(seed, 0);
    match mode {
        SelectionMode::Uniform => CuriousSet::new(n, sample(&mut rng, n, f).into_vec()),
        SelectionMode::MinVertexCut { padding } => {
            let cut = minimum_vertex_cut(g, DEFAULT_CONNECTIVITY_CAP)?
                .ok_or_else(|| Error::InfeasibleF { f, reason: "complete graphs have no vertex cut".into() })?;
            if cut.size() > f {
                return Err(Error::InfeasibleF { f, reason: format!("the smallest vertex cut has {} nodes", cut.size()) });
            }
            let mut members = cut.nodes.clone();
            let mut removed = vec![false; n];
            members.iter().for_each(|&v| removed[v] = true);
            let comps = g.components_avoiding(&removed);
            let keep = [comps[0][0], comps[1][0]];
            let mut pool: Vec<usize> = (0..n).filter(|&v| !removed[v] && !keep.contains(&v)).collect();
            if padding == Padding::Random {
                pool.shuffle(&mut rng);
            }
            members.extend(pool.into_iter().take(f - cut.size()));
            CuriousSet::new(n, members)
        }
        SelectionMode::GreedyDensity => {
            g.regular_degree().ok_or(Error::NonRegularGraph)?;
            let mut chosen = vec![false; n];
            let mut count = vec![0usize; n];
            for _ in 0..f {
                let mut best: Option<(usize, usize)> = None;
                for x in (0..n).filter(|&x| !chosen[x]) {
                    let worst = (0..n)
                        .filter(|&v| !chosen[v] && v != x)
                        .map(|v| count[v] + usize::from(g.has_edge(x, v)))
                        .max()
                        .unwrap_or(0);
                    if best.is_none_or(|(_, b)| worst > b) {
                        best = Some((x, worst));
                    }
                }
                let (x, _) = best.expect("f < n leaves candidates");
                chosen[x] = true;
                g.neighbors(x).iter().for_each(|&v| count[v] += 1);
            }
            CuriousSet::new(n, (0..n).filter(|&v| chosen[v]))
        }
    }
}
