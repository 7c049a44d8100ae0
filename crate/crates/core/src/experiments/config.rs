use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adversary::SelectionMode;
use crate::error::{Error, Result};
use crate::gossip::ProtocolSpec;
use crate::graph::NamedGraph;
use crate::privacy::{AdversaryMode, DensityVariant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source", deny_unknown_fields)]
pub enum GraphSource {
    /// Random connected `d`-regular graph; the `n` and `d` axes override these.
    Generate { n: usize, d: usize },
    EdgeList { path: PathBuf },
    Named { kind: NamedGraph, n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryConfig {
    #[serde(default = "default_mode")]
    pub mode: AdversaryMode,
    #[serde(default = "default_selection")]
    pub selection: SelectionMode,
    /// Number of curious nodes; the `f` axis overrides it.
    #[serde(default)]
    pub f: Option<usize>,
    /// Explicit curious set; excludes `f` and the `f` axis.
    #[serde(default)]
    pub curious: Option<Vec<usize>>,
    #[serde(default = "default_variant")]
    pub density_variant: DensityVariant,
}

fn default_mode() -> AdversaryMode {
    AdversaryMode::Worst
}

fn default_selection() -> SelectionMode {
    SelectionMode::Uniform
}

fn default_variant() -> DensityVariant {
    DensityVariant::General
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axes {
    #[serde(default)]
    pub rho: Vec<f64>,
    #[serde(default)]
    pub f: Vec<usize>,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub d: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub json: Option<PathBuf>,
}

/// One sweep, read from a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    /// The `rho` axis, when non-empty, replaces each protocol's own `rho`.
    pub protocols: Vec<ProtocolSpec>,
    pub adversary: AdversaryConfig,
    #[serde(default)]
    pub axes: Axes,
    /// Dissemination runs per point; 0 skips dissemination.
    #[serde(default)]
    pub trials: usize,
    /// Round cap per run; defaults to `ceil(100 n ln n)`.
    #[serde(default)]
    pub horizon: Option<usize>,
    pub seed: u64,
    /// Attack runs per point; 0 skips the attack columns.
    #[serde(default)]
    pub attack_trials: usize,
    #[serde(default = "default_likelihood_trials")]
    pub likelihood_trials: usize,
    #[serde(default)]
    pub outputs: Outputs,
}

fn default_likelihood_trials() -> usize {
    20_000
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), reason: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_json(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let GraphSource::EdgeList { path } = &mut cfg.graph {
            rebase(path);
        }
        cfg.outputs.csv.as_mut().map(rebase);
        cfg.outputs.json.as_mut().map(rebase);
        Ok(cfg)
    }

    /// Checks everything that can be checked without building a graph.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.protocols.is_empty() {
            return bad("at least one protocol is required");
        }
        for p in &self.protocols {
            p.validated()?;
        }
        if let Some(r) = self.axes.rho.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::InvalidParameter(format!("rho axis value {r} outside [0, 1]")));
        }
        let generated = matches!(self.graph, GraphSource::Generate { .. });
        if !generated && !(self.axes.n.is_empty() && self.axes.d.is_empty()) {
            return bad("n and d axes need a generated graph source");
        }
        let a = &self.adversary;
        match (&a.curious, a.f) {
            (Some(_), Some(_)) => return bad("give either adversary.f or adversary.curious, not both"),
            (Some(_), None) if !self.axes.f.is_empty() => return bad("an explicit curious set excludes the f axis"),
            (Some(_), None) if generated => return bad("an explicit curious set needs a fixed graph"),
            (None, None) if self.axes.f.is_empty() => return bad("no curious set: set adversary.f, adversary.curious or the f axis"),
            _ => {}
        }
        if self.attack_trials > 0 && self.likelihood_trials == 0 {
            return bad("likelihood_trials must be positive when attacks run");
        }
        Ok(())
    }
}
