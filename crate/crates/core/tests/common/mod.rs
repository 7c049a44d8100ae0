//! Reference computations that avoid the library's linear algebra: mass
//! propagation for the die-out walk and value iteration for passage
//! probabilities.
#![allow(dead_code)]

use anongossip::{CuriousSet, Graph};

/// Death-site distribution of the die-out walk from `source`, by pushing
/// probability mass until less than `1e-15` remains alive.
pub fn death_distribution(g: &Graph, c: &CuriousSet, rho: f64, source: usize) -> Vec<f64> {
    let n = g.n();
    let mut alive = vec![0.0; n];
    alive[source] = 1.0;
    let mut dead = vec![0.0; n];
    for _ in 0..10_000_000 {
        if alive.iter().sum::<f64>() < 1e-15 {
            break;
        }
        let mut next = vec![0.0; n];
        for w in 0..n {
            let m = alive[w];
            if m == 0.0 {
                continue;
            }
            dead[w] += rho * m;
            let share = (1.0 - rho) * m / g.degree(w) as f64;
            for &x in g.neighbors(w) {
                if c.contains(x) {
                    dead[w] += share;
                } else {
                    next[x] += share;
                }
            }
        }
        alive = next;
    }
    dead
}

/// `max_{v != u, w} ln(P_v(w) / P_u(w))` from the mass-propagation oracle.
pub fn epsilon_by_propagation(g: &Graph, c: &CuriousSet, rho: f64) -> f64 {
    let honest = c.honest_nodes();
    let dists: Vec<Vec<f64>> = honest.iter().map(|&v| death_distribution(g, c, rho, v)).collect();
    let mut eps: f64 = 0.0;
    for p in &dists {
        for q in &dists {
            for w in 0..g.n() {
                if p[w] > 1e-15 {
                    eps = eps.max(if q[w] > 1e-15 { (p[w] / q[w]).ln() } else { f64::INFINITY });
                }
            }
        }
    }
    eps
}

/// Probability that a simple random walk from `u` hits `v` before touching
/// a curious node, by value iteration.
pub fn walk_passage(g: &Graph, c: &CuriousSet, u: usize, v: usize) -> f64 {
    let mut h = vec![0.0; g.n()];
    h[v] = 1.0;
    for _ in 0..100_000 {
        let mut next = h.clone();
        for w in (0..g.n()).filter(|&w| w != v && !c.contains(w)) {
            next[w] = g.neighbors(w).iter().map(|&x| if c.contains(x) { 0.0 } else { h[x] }).sum::<f64>()
                / g.degree(w) as f64;
        }
        let delta = next.iter().zip(&h).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        h = next;
        if delta < 1e-15 {
            break;
        }
    }
    h[u]
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
