use serde::{Deserialize, Serialize, Serializer};

use super::{
    adversarial_density_bound, divergence_matrix_relaxed, epsilon_lower_bound, epsilon_upper_bound,
    exact_divergence_matrix, worst_case_infinite, DensityVariant,
};
use crate::error::{Error, Result};
use crate::gossip::{ProtocolKind, ProtocolSpec};
use crate::graph::{spectral_expansion, vertex_connectivity_with_cap, CuriousSet, Graph};
use crate::spectral::{build_chain_relaxed, DieOutChain};

/// Writes non-finite reals as the strings `"inf"`, `"-inf"` and `"nan"`.
pub(crate) fn real<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_nan() {
        s.serialize_str("nan")
    } else if v.is_infinite() {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*v)
    }
}

pub(crate) fn opt_real<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => real(x, s),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryMode {
    /// `F` chosen with knowledge of the graph; the bound uses `alpha = f / d`.
    Worst,
    /// `F` uniform among `f`-subsets; the bound uses the concentration bound.
    Average,
}

impl AdversaryMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Worst => "worst",
            Self::Average => "average",
        }
    }
}

/// An upper bound that is either a number or excluded by `alpha >= 1 - lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Value(f64),
    GatedOut,
}

impl Bound {
    pub fn value(self) -> Option<f64> {
        match self {
            Self::Value(v) => Some(v),
            Self::GatedOut => None,
        }
    }
}

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Value(v) => real(v, s),
            Self::GatedOut => s.serialize_str("gated_out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrivacyParams {
    pub n: usize,
    pub f: usize,
    pub d: usize,
    pub lambda: f64,
    pub rho: f64,
    pub protocol: ProtocolKind,
    pub adversary_mode: AdversaryMode,
}

/// Field order is the serialized key order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrivacyReport {
    pub params: PrivacyParams,
    #[serde(serialize_with = "real")]
    pub epsilon_exact: f64,
    /// `(v, u, w)`: the pair of sources and the death site attaining it.
    pub worst_pair: Option<(usize, usize, usize)>,
    pub epsilon_upper: Bound,
    pub epsilon_lower: f64,
    /// `kappa(G) <= f`; `None` when the graph is above the connectivity cap.
    pub worst_case_infinite: Option<bool>,
    #[serde(serialize_with = "opt_real")]
    pub t_tilde: Option<f64>,
    pub alpha_used: f64,
    /// The bound evaluated at the true adversarial density of `F`.
    #[serde(serialize_with = "opt_real")]
    pub mixing_bound: Option<f64>,
    /// `mixing_bound - epsilon_exact`.
    #[serde(serialize_with = "opt_real")]
    pub slack: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzeOptions {
    pub mode: AdversaryMode,
    pub density_variant: DensityVariant,
    pub connectivity_cap: usize,
}

impl AnalyzeOptions {
    pub fn new(mode: AdversaryMode) -> Self {
        Self { mode, density_variant: DensityVariant::General, connectivity_cap: crate::graph::DEFAULT_CONNECTIVITY_CAP }
    }
}

/// Leakage report for one protocol on `(g, F)`. Cobra walks, Dandelion and
/// muting push with the same `rho` share a single die-out chain, hence the
/// same exact value. A disconnected honest subgraph yields `inf`.
pub fn analyze(g: &Graph, curious: &CuriousSet, spec: ProtocolSpec, mode: AdversaryMode) -> Result<PrivacyReport> {
    analyze_with(g, curious, spec, &AnalyzeOptions::new(mode))
}

pub fn analyze_with(g: &Graph, curious: &CuriousSet, spec: ProtocolSpec, opts: &AnalyzeOptions) -> Result<PrivacyReport> {
    let spec = spec.validated()?;
    if !(spec.is_cobra_family() || matches!(spec.kind, ProtocolKind::Dandelion | ProtocolKind::MutingPush)) {
        return Err(Error::UnsupportedProtocol(spec.kind.name().into()));
    }
    let lambda = spectral_expansion(g)?;
    let chain = build_chain_relaxed(g, curious, spec.rho)?;
    let (n, f, d) = (g.n(), curious.f(), chain.degree());
    let dm = divergence_matrix_relaxed(&chain)?;

    let alpha_used = match opts.mode {
        AdversaryMode::Worst => f as f64 / d as f64,
        AdversaryMode::Average => adversarial_density_bound(n, f, d, opts.density_variant)?,
    }
    .min(1.0);
    let upper = if alpha_used < 1.0 { epsilon_upper_bound(n, f, lambda, spec.rho, alpha_used)? } else { None };
    let alpha_f = chain.density().value();
    let mixing_bound = if chain.density().passes_gate(lambda) {
        epsilon_upper_bound(n, f, lambda, spec.rho, alpha_f)?.map(|b| b.epsilon)
    } else {
        None
    };
    let worst_case = match vertex_connectivity_with_cap(g, opts.connectivity_cap) {
        Ok(kappa) => Some(worst_case_infinite(kappa, f)),
        Err(Error::SizeCapExceeded { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(PrivacyReport {
        params: PrivacyParams { n, f, d, lambda, rho: spec.rho, protocol: spec.kind, adversary_mode: opts.mode },
        epsilon_exact: dm.epsilon,
        worst_pair: dm.worst,
        epsilon_upper: upper.map_or(Bound::GatedOut, |b| Bound::Value(b.epsilon)),
        epsilon_lower: epsilon_lower_bound(f),
        worst_case_infinite: worst_case,
        t_tilde: upper.map(|b| b.t_tilde),
        alpha_used,
        mixing_bound,
        slack: mixing_bound.map(|b| b - dm.epsilon),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixingSanity {
    #[serde(serialize_with = "real")]
    pub epsilon_exact: f64,
    #[serde(serialize_with = "real")]
    pub bound: f64,
    pub alpha_f: f64,
    #[serde(serialize_with = "real")]
    pub slack: f64,
}

impl MixingSanity {
    pub fn holds(&self) -> bool {
        self.epsilon_exact <= self.bound
    }
}

/// Compares the exact leakage against the bound at the true density of `F`.
pub fn mixing_sanity(chain: &DieOutChain, lambda: f64) -> Result<MixingSanity> {
    let alpha_f = chain.density().value();
    if !chain.density().passes_gate(lambda) {
        return Err(Error::GatingViolated { alpha: alpha_f, lambda });
    }
    let epsilon_exact = exact_divergence_matrix(chain)?.epsilon;
    let bound = epsilon_upper_bound(chain.n(), chain.f(), lambda, chain.rho(), alpha_f)?
        .expect("gate checked above")
        .epsilon;
    Ok(MixingSanity { epsilon_exact, bound, alpha_f, slack: bound - epsilon_exact })
}
