//! The absorbing die-out chain over the non-curious nodes and its linear algebra.
//!
//! A die-out walk started at `v` moves to a uniform neighbour each step. Before
//! moving it dies with probability `rho`; a step into a curious node kills it
//! as well. With `Q` the normalized adjacency restricted to `V \ F` and `R`
//! the diagonal of curious-neighbour fractions, the death-site distribution is
//! `M = (rho I + (1 - rho) R) (I - (1 - rho) Q)^-1`.

mod audit;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{adversarial_density, CuriousSet, Density, Graph};

pub use audit::{lemma_audit, AuditCheck, AuditReport, AUDIT_SLACK};

/// Largest honest node count handled by the dense routines.
pub const DENSE_CHAIN_CAP: usize = 4096;

/// Default truncation tolerance of [`series_resolvent_oracle`].
pub const SERIES_TOLERANCE: f64 = 1e-14;

const MAX_SERIES_TERMS: f64 = 2e6;

#[derive(Debug, Clone)]
pub struct DieOutChain {
    q: DMatrix<f64>,
    r: DVector<f64>,
    rho: f64,
    nodes: Vec<usize>,
    rows: Vec<Option<usize>>,
    components: Vec<Vec<usize>>,
    degree: usize,
    n: usize,
    density: Density,
}

/// Builds the chain; the subgraph induced by `V \ F` must be connected.
pub fn build_chain(g: &Graph, curious: &CuriousSet, rho: f64) -> Result<DieOutChain> {
    let chain = build_chain_relaxed(g, curious, rho)?;
    if chain.components.len() > 1 {
        return Err(Error::DisconnectedHonestSubgraph);
    }
    Ok(chain)
}

/// Like [`build_chain`] but tolerates a disconnected honest subgraph, in which
/// case walks never cross between components.
pub fn build_chain_relaxed(g: &Graph, curious: &CuriousSet, rho: f64) -> Result<DieOutChain> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!("rho = {rho} is outside [0, 1]")));
    }
    let density = adversarial_density(g, curious)?;
    let d = density.degree;
    let nodes = curious.honest_nodes();
    let k = nodes.len();
    if k > DENSE_CHAIN_CAP {
        return Err(Error::SizeCapExceeded { n: k, cap: DENSE_CHAIN_CAP });
    }
    let mut rows = vec![None; g.n()];
    for (i, &v) in nodes.iter().enumerate() {
        rows[v] = Some(i);
    }
    let step = 1.0 / d as f64;
    let mut q = DMatrix::zeros(k, k);
    let mut r = DVector::zeros(k);
    for (i, &v) in nodes.iter().enumerate() {
        for &u in g.neighbors(v) {
            match rows[u] {
                Some(j) => q[(i, j)] = step,
                None => r[i] += 1.0,
            }
        }
        r[i] /= d as f64;
    }
    let components = g
        .components_avoiding(curious.mask())
        .into_iter()
        .map(|c| c.into_iter().filter_map(|v| rows[v]).collect())
        .collect();
    Ok(DieOutChain { q, r, rho, nodes, rows, components, degree: d, n: g.n(), density })
}

impl DieOutChain {
    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// Diagonal of `R`: fraction of curious neighbours per honest row.
    pub fn r(&self) -> &DVector<f64> {
        &self.r
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::InvalidParameter(format!("rho = {rho} is outside [0, 1]")));
        }
        Ok(Self { rho, ..self.clone() })
    }

    /// Honest node ids in row order.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn row_of(&self, node: usize) -> Option<usize> {
        self.rows.get(node).copied().flatten()
    }

    /// Number of honest nodes, `n - f`.
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn f(&self) -> usize {
        self.n - self.nodes.len()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn density(&self) -> Density {
        self.density
    }

    /// Connected components of the honest subgraph, as row indices.
    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    /// Per-row death probability of a single step: `rho + (1 - rho) R_ww`.
    pub fn death_weights(&self) -> DVector<f64> {
        self.r.map(|r| self.rho + (1.0 - self.rho) * r)
    }

    /// The walk is absorbed with certainty from every start.
    pub fn absorption_certain(&self) -> bool {
        self.rho > 0.0 || self.components.iter().all(|c| c.iter().any(|&i| self.r[i] > 0.0))
    }
}

/// `(I - (1 - rho) Q)^-1` by LU with partial pivoting.
pub fn resolvent(chain: &DieOutChain) -> Result<DMatrix<f64>> {
    if !chain.absorption_certain() {
        return Err(Error::SingularSystem);
    }
    let k = chain.size();
    let system = DMatrix::identity(k, k) - &chain.q * (1.0 - chain.rho);
    system.lu().try_inverse().ok_or(Error::SingularSystem)
}

/// Death-site distribution; column `v` is the law of `W^(v)` over honest rows.
pub fn absorbing_probabilities(chain: &DieOutChain) -> Result<DMatrix<f64>> {
    let mut m = resolvent(chain)?;
    let weights = chain.death_weights();
    for (i, mut row) in m.row_iter_mut().enumerate() {
        row *= weights[i];
    }
    Ok(m)
}

/// `sum_t (1 - rho)^t Q^t`, truncated once the geometric tail bound drops
/// below `tol`. Independent of the LU route; used to cross-check it.
pub fn series_resolvent_oracle(chain: &DieOutChain, tol: f64) -> Result<DMatrix<f64>> {
    let k = chain.size();
    let mut sum = DMatrix::identity(k, k);
    let ratio = (1.0 - chain.rho) * spectral_summary(chain).lambda1.max(0.0);
    if ratio == 0.0 {
        return Ok(sum);
    }
    if ratio >= 1.0 {
        return Err(Error::DivergentSeries(format!("(1 - rho) lambda1(Q) = {ratio} is not below 1")));
    }
    let terms = ((tol * (1.0 - ratio)).ln() / ratio.ln()).ceil().max(1.0);
    if terms > MAX_SERIES_TERMS {
        return Err(Error::DivergentSeries(format!("needs about {terms:.0} terms")));
    }
    let step = &chain.q * (1.0 - chain.rho);
    let mut term = DMatrix::identity(k, k);
    for _ in 0..terms as usize {
        term = &step * &term;
        sum += &term;
    }
    Ok(sum)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSummary {
    pub lambda1: f64,
    /// `max(|lambda_2(Q)|, |lambda_min(Q)|)`; zero for a single honest node.
    pub lambda_sub: f64,
    /// Unit top eigenvector, sign-fixed so its coordinates are nonnegative.
    pub phi1: Vec<f64>,
}

pub fn spectral_summary(chain: &DieOutChain) -> SpectralSummary {
    top_eigenpair(&chain.q)
}

/// Leading eigenvalue, second-largest modulus and Perron vector of a
/// symmetric nonnegative matrix.
pub(crate) fn top_eigenpair(m: &DMatrix<f64>) -> SpectralSummary {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = order[0];
    let lambda_sub = if order.len() > 1 {
        eig.eigenvalues[order[1]].abs().max(eig.eigenvalues[order[order.len() - 1]].abs())
    } else {
        0.0
    };
    let mut phi1: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
    if phi1.iter().sum::<f64>() < 0.0 {
        phi1.iter_mut().for_each(|x| *x = -*x);
    }
    SpectralSummary { lambda1: eig.eigenvalues[top], lambda_sub, phi1 }
}

/// `Q_bar = (I - R)^(-1/2) Q (I - R)^(-1/2)` and `Q_under = (1 - alpha) Q_bar`.
pub fn q_bar_q_underline(chain: &DieOutChain, alpha: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if alpha >= 1.0 || chain.r.iter().any(|&r| r >= 1.0) {
        return Err(Error::AlphaAtOne);
    }
    let scale = chain.r.map(|r| 1.0 / (1.0 - r).sqrt());
    let mut bar = chain.q.clone();
    for i in 0..bar.nrows() {
        for j in 0..bar.ncols() {
            bar[(i, j)] *= scale[i] * scale[j];
        }
    }
    let under = &bar * (1.0 - alpha);
    Ok((bar, under))
}

/// Mixing horizons of the upper-bound argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixingHorizon {
    /// `ceil(log_{lambda / (1 - alpha)}((1 - alpha) / (4 (n - f))))`.
    pub t: f64,
    pub t_tilde: f64,
}

/// Requires `alpha < 1 - lambda`. With `lambda = 0` the logarithm base is 0
/// and the formulas give `t = 0`, `t_tilde = 2`.
pub fn mixing_horizon(n: usize, f: usize, lambda: f64, alpha: f64) -> Result<MixingHorizon> {
    // Written so that NaN inputs also fail the gate.
    if alpha.is_nan() || lambda.is_nan() || alpha >= 1.0 - lambda {
        return Err(Error::GatingViolated { alpha, lambda });
    }
    if f >= n {
        return Err(Error::InvalidParameter(format!("f = {f} must be below n = {n}")));
    }
    let ln_base = (lambda / (1.0 - alpha)).ln();
    let log_base = |x: f64| {
        let v = x.ln() / ln_base;
        if v.is_nan() { 0.0 } else { v + 0.0 }
    };
    let t = log_base((1.0 - alpha) / (4.0 * (n - f) as f64)).ceil();
    let t_tilde = t * (log_base(1.0 - alpha) + 2.0) + 2.0;
    Ok(MixingHorizon { t, t_tilde })
}

/// Closed-form interval that contains every squared Perron coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Delocalization {
    pub t: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Delocalization {
    pub fn contains(&self, phi_sq: f64, slack: f64) -> bool {
        phi_sq >= self.lo - slack && phi_sq <= self.hi + slack
    }

    /// The horizon fell below 1, outside the regime the closed form targets.
    pub fn degenerate(&self) -> bool {
        self.t < 1.0
    }
}

pub fn delocalization_interval(chain: &DieOutChain, alpha: f64, lambda: f64) -> Result<Delocalization> {
    let h = mixing_horizon(chain.n, chain.f(), lambda, alpha)?;
    let k = chain.size() as f64;
    let shrink = (1.0 - alpha).powf(h.t + 1.0);
    Ok(Delocalization { t: h.t, lo: shrink / (2.0 * k), hi: 2.0 / (shrink * k) })
}

/// Entrywise envelope `I + lo J <= (I - (1 - rho) Q)^-1 <= I + hi J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolventEnvelope {
    pub lo: f64,
    pub hi: f64,
    pub t_tilde: f64,
}

pub fn resolvent_envelope(chain: &DieOutChain, alpha: f64, lambda: f64) -> Result<ResolventEnvelope> {
    let (n, f) = (chain.n as f64, chain.f() as f64);
    let h = mixing_horizon(chain.n, chain.f(), lambda, alpha)?;
    let rho = chain.rho;
    let mass = (rho * (n - f) + f) * (n - f);
    let hi = (2.0 * n * (1.0 - alpha).powf(-h.t_tilde) / mass + lambda) / (1.0 - lambda);
    let lo = n * ((1.0 - alpha) * (1.0 - rho)).powf(h.t_tilde) / (8.0 * mass);
    Ok(ResolventEnvelope { lo, hi, t_tilde: h.t_tilde })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{named_graph, NamedGraph};

    fn c4_chain(rho: f64) -> DieOutChain {
        let g = named_graph(NamedGraph::Cycle, 4).unwrap();
        build_chain(&g, &CuriousSet::new(4, [3]).unwrap(), rho).unwrap()
    }

    fn assert_matrix(actual: &DMatrix<f64>, expected: &[&[f64]], tol: f64) {
        for (i, row) in expected.iter().enumerate() {
            for (j, &e) in row.iter().enumerate() {
                assert!((actual[(i, j)] - e).abs() <= tol, "({i},{j}): {} vs {e}", actual[(i, j)]);
            }
        }
    }

    #[test]
    fn c4_assembly() {
        let chain = c4_chain(0.0);
        assert_matrix(chain.q(), &[&[0.0, 0.5, 0.0], &[0.5, 0.0, 0.5], &[0.0, 0.5, 0.0]], 0.0);
        assert_eq!(chain.r().as_slice(), &[0.5, 0.0, 0.5]);
        assert_eq!(chain.nodes(), &[0, 1, 2]);
        assert_eq!(chain.row_of(3), None);
    }

    #[test]
    fn k3_assembly() {
        let g = named_graph(NamedGraph::Complete, 3).unwrap();
        let chain = build_chain(&g, &CuriousSet::new(3, [2]).unwrap(), 0.5).unwrap();
        assert_matrix(chain.q(), &[&[0.0, 0.5], &[0.5, 0.0]], 0.0);
        assert_eq!(chain.r().as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn empty_curious_set_gives_normalized_adjacency() {
        let g = named_graph(NamedGraph::Petersen, 10).unwrap();
        let chain = build_chain(&g, &CuriousSet::empty(10), 0.3).unwrap();
        assert_eq!(chain.q(), &g.normalized_adjacency());
        assert!(chain.r().iter().all(|&r| r == 0.0));
    }

    #[test]
    fn rejects_disconnected_and_irregular() {
        let c6 = named_graph(NamedGraph::Cycle, 6).unwrap();
        let f = CuriousSet::new(6, [0, 3]).unwrap();
        assert_eq!(build_chain(&c6, &f, 0.0).unwrap_err(), Error::DisconnectedHonestSubgraph);
        assert!(build_chain_relaxed(&c6, &f, 0.0).is_ok());
        let p = named_graph(NamedGraph::Path, 4).unwrap();
        assert_eq!(build_chain(&p, &CuriousSet::new(4, [0]).unwrap(), 0.0).unwrap_err(), Error::NonRegularGraph);
        assert!(build_chain(&c6, &f, 1.5).is_err());
    }

    #[test]
    fn c4_resolvent_and_absorption() {
        let expected: &[&[f64]] = &[&[1.5, 1.0, 0.5], &[1.0, 2.0, 1.0], &[0.5, 1.0, 1.5]];
        let chain = c4_chain(0.0);
        assert_matrix(&resolvent(&chain).unwrap(), expected, 1e-12);
        assert_matrix(&series_resolvent_oracle(&chain, SERIES_TOLERANCE).unwrap(), expected, 1e-12);
        let m = absorbing_probabilities(&chain).unwrap();
        assert!((m[(0, 0)] - 0.75).abs() < 1e-12);
        assert!(m[(1, 0)].abs() < 1e-12);
        assert!((m[(2, 0)] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn rho_one_is_identity() {
        let chain = c4_chain(1.0);
        let eye = DMatrix::identity(3, 3);
        assert_eq!(resolvent(&chain).unwrap(), eye);
        assert_eq!(absorbing_probabilities(&chain).unwrap(), eye);
        assert_eq!(series_resolvent_oracle(&chain, SERIES_TOLERANCE).unwrap(), eye);
    }

    #[test]
    fn no_curious_and_no_death_is_singular() {
        let g = named_graph(NamedGraph::Complete, 5).unwrap();
        let chain = build_chain(&g, &CuriousSet::empty(5), 0.0).unwrap();
        assert_eq!(resolvent(&chain), Err(Error::SingularSystem));
        assert!(matches!(series_resolvent_oracle(&chain, 1e-14), Err(Error::DivergentSeries(_))));
    }

    #[test]
    fn isolated_honest_node_dies_in_place() {
        // Node 1 has both neighbours curious.
        let g = named_graph(NamedGraph::Cycle, 6).unwrap();
        let chain = build_chain_relaxed(&g, &CuriousSet::new(6, [0, 2]).unwrap(), 0.3).unwrap();
        let m = absorbing_probabilities(&chain).unwrap();
        let v = chain.row_of(1).unwrap();
        for w in 0..chain.size() {
            let want = if w == v { 1.0 } else { 0.0 };
            assert!((m[(w, v)] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn summaries_of_fixtures() {
        let s = spectral_summary(&c4_chain(0.0));
        assert!((s.lambda1 - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(s.phi1.iter().all(|&x| x >= -1e-12));

        let k3 = named_graph(NamedGraph::Complete, 3).unwrap();
        let s = spectral_summary(&build_chain(&k3, &CuriousSet::new(3, [2]).unwrap(), 0.0).unwrap());
        assert!((s.lambda1 - 0.5).abs() < 1e-12);

        let p = named_graph(NamedGraph::Petersen, 10).unwrap();
        let s = spectral_summary(&build_chain(&p, &CuriousSet::empty(10), 0.5).unwrap());
        assert!((s.lambda1 - 1.0).abs() < 1e-12);
        assert!(s.phi1.iter().all(|&x| (x - 0.1f64.sqrt()).abs() < 1e-9));
    }

    #[test]
    fn q_bar_on_c4() {
        let chain = c4_chain(0.0);
        let (bar, under) = q_bar_q_underline(&chain, 0.5).unwrap();
        let s = top_eigenpair(&bar);
        assert!((s.lambda1 - 1.0).abs() < 1e-12);
        // Squared coordinates proportional to honest degrees (1, 2, 1).
        for (x, deg) in s.phi1.iter().zip([1.0, 2.0, 1.0]) {
            assert!((x * x - deg / 4.0).abs() < 1e-12);
        }
        assert!((top_eigenpair(&under).lambda1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn q_bar_rejects_full_density() {
        let g = named_graph(NamedGraph::Cycle, 6).unwrap();
        let chain = build_chain_relaxed(&g, &CuriousSet::new(6, [0, 2]).unwrap(), 0.0).unwrap();
        assert_eq!(q_bar_q_underline(&chain, 1.0).unwrap_err(), Error::AlphaAtOne);
    }

    #[test]
    fn delocalization_without_curious_nodes() {
        let g = named_graph(NamedGraph::Petersen, 10).unwrap();
        let chain = build_chain(&g, &CuriousSet::empty(10), 0.0).unwrap();
        let iv = delocalization_interval(&chain, 0.0, 2.0 / 3.0).unwrap();
        assert!((iv.lo - 0.05).abs() < 1e-12 && (iv.hi - 0.2).abs() < 1e-12);
        assert!(iv.contains(0.1, 0.0));
    }

    #[test]
    fn delocalization_on_k4_minus_node() {
        let g = named_graph(NamedGraph::Complete, 4).unwrap();
        let chain = build_chain(&g, &CuriousSet::new(4, [3]).unwrap(), 0.0).unwrap();
        let alpha = chain.density().value();
        let iv = delocalization_interval(&chain, alpha, 1.0 / 3.0).unwrap();
        let s = spectral_summary(&chain);
        assert!(s.phi1.iter().all(|x| iv.contains(x * x, 1e-8)));
    }

    #[test]
    fn delocalization_gate() {
        let chain = c4_chain(0.0);
        assert!(matches!(
            delocalization_interval(&chain, 0.5, 1.0),
            Err(Error::GatingViolated { .. })
        ));
    }

    #[test]
    fn mixing_horizon_reference_values() {
        let h = mixing_horizon(10, 2, 0.1, 0.5).unwrap();
        assert_eq!(h.t, 3.0);
        assert!((h.t_tilde - 9.292_029_674_220_178).abs() < 1e-9);
        let h = mixing_horizon(10, 2, 0.0, 0.3).unwrap();
        assert_eq!((h.t, h.t_tilde), (0.0, 2.0));
    }
}
