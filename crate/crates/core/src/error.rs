use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid size for {kind}: {reason}")]
    InvalidSize { kind: String, reason: String },

    #[error("infeasible regular graph: n={n}, d={d} ({reason})")]
    Infeasible { n: usize, d: usize, reason: String },

    #[error("gave up after {attempts} rejected samples")]
    RetryLimitExceeded { attempts: usize },

    #[error("graph is disconnected")]
    DisconnectedGraph,

    #[error("graph has {n} nodes, above the cap of {cap}")]
    SizeCapExceeded { n: usize, cap: usize },

    #[error("graph is not regular")]
    NonRegularGraph,

    #[error("invalid curious set: {0}")]
    InvalidCuriousSet(String),

    #[error("subgraph induced by the non-curious nodes is disconnected")]
    DisconnectedHonestSubgraph,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("linear system is singular (absorption is not certain)")]
    SingularSystem,

    #[error("series does not converge: {0}")]
    DivergentSeries(String),

    #[error("some non-curious node has only curious neighbours; (I - R)^(-1/2) is undefined")]
    AlphaAtOne,

    #[error("gate violated: adversarial density {alpha} is not below 1 - lambda = {}", 1.0 - lambda)]
    GatingViolated { alpha: f64, lambda: f64 },

    #[error("invalid source node {0}")]
    InvalidSource(usize),

    #[error("protocol {0} is not supported by this operation")]
    UnsupportedProtocol(String),

    #[error("not a probability distribution: {0}")]
    NotADistribution(String),

    #[error("dense-regime hypotheses violated: {0}")]
    DenseHypothesesViolated(String),

    #[error("infeasible number of curious nodes f={f}: {reason}")]
    InfeasibleF { f: usize, reason: String },

    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Short stable identifier, used in sweep status columns.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidSize { .. } => "invalid_size",
            Error::Infeasible { .. } => "infeasible",
            Error::RetryLimitExceeded { .. } => "retry_limit_exceeded",
            Error::DisconnectedGraph => "disconnected_graph",
            Error::SizeCapExceeded { .. } => "size_cap_exceeded",
            Error::NonRegularGraph => "non_regular_graph",
            Error::InvalidCuriousSet(_) => "invalid_curious_set",
            Error::DisconnectedHonestSubgraph => "disconnected_honest_subgraph",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::SingularSystem => "singular_system",
            Error::DivergentSeries(_) => "divergent_series",
            Error::AlphaAtOne => "alpha_at_one",
            Error::GatingViolated { .. } => "gating_violated",
            Error::InvalidSource(_) => "invalid_source",
            Error::UnsupportedProtocol(_) => "unsupported_protocol",
            Error::NotADistribution(_) => "not_a_distribution",
            Error::DenseHypothesesViolated(_) => "dense_hypotheses_violated",
            Error::InfeasibleF { .. } => "infeasible_f",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
        }
    }
}
