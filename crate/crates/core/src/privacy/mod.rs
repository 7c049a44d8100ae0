//! Exact max-divergence leakage through the die-out chain and the closed-form
//! upper and lower bounds on the privacy parameter.

mod report;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{mixing_horizon, resolvent, DieOutChain};

pub use report::{
    analyze, analyze_with, mixing_sanity, AdversaryMode, AnalyzeOptions, Bound, MixingSanity, PrivacyParams,
    PrivacyReport,
};
pub(crate) use report::{opt_real, real};

/// Probabilities at or below this are treated as exact zeros.
pub const ZERO_THRESHOLD: f64 = 1e-15;

const SUM_TOLERANCE: f64 = 1e-9;

fn check_distribution(p: &[f64], name: &str) -> Result<()> {
    let sum: f64 = p.iter().sum();
    if p.iter().any(|&x| x < 0.0 || !x.is_finite()) || (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::NotADistribution(format!("{name} sums to {sum}")));
    }
    Ok(())
}

/// `D_inf(p || q) = max_i ln(p_i / q_i)` over the support of `p`; infinite
/// when `q` misses part of that support.
pub fn max_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::NotADistribution("length mismatch".into()));
    }
    check_distribution(p, "p")?;
    check_distribution(q, "q")?;
    let mut worst = f64::NEG_INFINITY;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi <= ZERO_THRESHOLD {
            continue;
        }
        if qi <= ZERO_THRESHOLD {
            return Ok(f64::INFINITY);
        }
        worst = worst.max((pi / qi).ln());
    }
    Ok(worst)
}

/// Pairwise `D_inf(W^(v) || W^(u))` between death-site distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceMatrix {
    /// Row `v`, column `u`, indexed like the chain's honest rows.
    pub values: DMatrix<f64>,
    pub nodes: Vec<usize>,
    /// Maximum over all ordered pairs.
    pub epsilon: f64,
    /// Node ids `(v, u, w)` attaining the maximum, `w` being the death site.
    pub worst: Option<(usize, usize, usize)>,
}

impl DivergenceMatrix {
    pub fn get(&self, v: usize, u: usize) -> Option<f64> {
        let i = self.nodes.binary_search(&v).ok()?;
        let j = self.nodes.binary_search(&u).ok()?;
        Some(self.values[(i, j)])
    }
}

/// Requires a connected honest subgraph; see [`divergence_matrix_relaxed`].
pub fn exact_divergence_matrix(chain: &DieOutChain) -> Result<DivergenceMatrix> {
    if chain.components().len() > 1 {
        return Err(Error::DisconnectedHonestSubgraph);
    }
    divergence_matrix_relaxed(chain)
}

/// Sources in different honest components are infinitely far apart.
///
/// Death sites `w` with zero death weight `rho + (1 - rho) R_ww` carry no
/// mass under any source and are excluded from the maximum.
pub fn divergence_matrix_relaxed(chain: &DieOutChain) -> Result<DivergenceMatrix> {
    let k = chain.size();
    let nodes = chain.nodes().to_vec();
    let mut values = DMatrix::zeros(k, k);
    let mut epsilon = if k > 1 { f64::NEG_INFINITY } else { 0.0 };
    let mut worst = None;
    if chain.rho() == 1.0 {
        for v in 0..k {
            for u in 0..k {
                if u != v {
                    values[(v, u)] = f64::INFINITY;
                }
            }
        }
        if k > 1 {
            epsilon = f64::INFINITY;
            worst = Some((nodes[0], nodes[1], nodes[0]));
        }
        return Ok(DivergenceMatrix { values, nodes, epsilon, worst });
    }
    let n = resolvent(chain)?;
    let support: Vec<usize> = {
        let weights = chain.death_weights();
        (0..k).filter(|&w| weights[w] > 0.0).collect()
    };
    for v in 0..k {
        for u in 0..k {
            if u == v {
                continue;
            }
            let mut best = f64::NEG_INFINITY;
            let mut arg = support[0];
            for &w in &support {
                let (num, den) = (n[(v, w)], n[(u, w)]);
                if num <= ZERO_THRESHOLD {
                    continue;
                }
                let ratio = if den <= ZERO_THRESHOLD { f64::INFINITY } else { (num / den).ln() };
                if ratio > best {
                    best = ratio;
                    arg = w;
                }
            }
            values[(v, u)] = best;
            if best > epsilon {
                epsilon = best;
                worst = Some((nodes[v], nodes[u], nodes[arg]));
            }
        }
    }
    Ok(DivergenceMatrix { values, nodes, epsilon, worst })
}

/// The closed-form upper bound with its horizon `t_tilde`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpperBound {
    pub epsilon: f64,
    pub t_tilde: f64,
}

/// `ln(rho (n - f) + f) - 2 T ln(1 - alpha) - T ln(1 - rho) - ln(1 - lambda) + ln 24`
/// with `T = t_tilde`; `None` when `alpha >= 1 - lambda`. At `rho = 1` the
/// value is infinite.
pub fn epsilon_upper_bound(n: usize, f: usize, lambda: f64, rho: f64, alpha: f64) -> Result<Option<UpperBound>> {
    if !(0.0..=1.0).contains(&rho) || !(0.0..=1.0).contains(&lambda) || !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "need rho and lambda in [0, 1], alpha in [0, 1); got rho={rho}, lambda={lambda}, alpha={alpha}"
        )));
    }
    if f >= n {
        return Err(Error::InvalidParameter(format!("f = {f} must be below n = {n}")));
    }
    let mass = rho * (n - f) as f64 + f as f64;
    if mass <= 0.0 {
        return Err(Error::InvalidParameter("rho (n - f) + f must be positive".into()));
    }
    if lambda >= 1.0 - alpha {
        return Ok(None);
    }
    let t_tilde = mixing_horizon(n, f, lambda, alpha)?.t_tilde;
    let epsilon = mass.ln() - 2.0 * t_tilde * (1.0 - alpha).ln() - t_tilde * (1.0 - rho).ln()
        - (1.0 - lambda).ln()
        + 24f64.ln();
    Ok(Some(UpperBound { epsilon, t_tilde }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "variant")]
pub enum DensityVariant {
    General,
    /// Requires `f / n >= c` and `d > ln(n) / (c^2 delta^2)`.
    Dense { delta: f64, c: f64 },
}

/// High-probability bound on the adversarial density of a uniformly random
/// curious set. May exceed 1.
pub fn adversarial_density_bound(n: usize, f: usize, d: usize, variant: DensityVariant) -> Result<f64> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter("n and d must be positive".into()));
    }
    let beta = f as f64 / n as f64;
    let ln_n = (n as f64).ln();
    match variant {
        DensityVariant::General => {
            let gamma = ln_n / (std::f64::consts::E * d as f64);
            let excess = (gamma.ln() - beta.ln()).max(0.0);
            Ok(4.0 * std::f64::consts::E * gamma.max(beta) / (1.0 + excess))
        }
        DensityVariant::Dense { delta, c } => {
            if !(c > 0.0 && delta > 0.0) {
                return Err(Error::DenseHypothesesViolated("c and delta must be positive".into()));
            }
            if beta < c {
                return Err(Error::DenseHypothesesViolated(format!("f / n = {beta} is below c = {c}")));
            }
            let need = ln_n / (c * c * delta * delta);
            if d as f64 <= need {
                return Err(Error::DenseHypothesesViolated(format!("d = {d} must exceed {need}")));
            }
            Ok((1.0 + delta) * beta)
        }
    }
}

/// `ln(f - 1)` for `f >= 2`, else 0.
pub fn epsilon_lower_bound(f: usize) -> f64 {
    if f >= 2 {
        ((f - 1) as f64).ln()
    } else {
        0.0
    }
}

/// A worst-case adversary with `f >= kappa(G)` can disconnect the graph, after
/// which no finite privacy parameter holds.
pub fn worst_case_infinite(kappa: usize, f: usize) -> bool {
    kappa <= f
}
