//! Model files. Every file is JSON with unknown keys rejected; parse errors
//! carry the line and column of the offending token.

use std::path::Path;

use markovia_core::counterexamples::{ParityProcessSpec, ShiftBase};
use markovia_core::discrete::chain::MarkovChainSpec;
use markovia_core::discrete::ising::IsingSpec;
use markovia_core::discrete::Pmf;
use markovia_core::gaussian::{CovarianceSpec, DecayEnvelope};
use markovia_core::graph::{GraphSpec, Vertex, VertexSet};
use markovia_core::graphoid::{relation_from_discrete, relation_from_gaussian, CIRelation, CIStatement};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::CliError;

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
    parse(&text, &path.display().to_string())
}

pub fn parse<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config {
        path: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// A ternary relation given by a table, a covariance, or a statement list.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RelationSpec {
    Pmf { vars: Vec<Vertex>, probs: Vec<f64> },
    Gaussian { covariance: CovarianceSpec, size: usize },
    Explicit { ground: Vec<Vertex>, statements: Vec<[Vec<Vertex>; 3]> },
}

impl RelationSpec {
    pub fn build(&self, tol: Option<f64>) -> Result<CIRelation, CliError> {
        Ok(match self {
            RelationSpec::Pmf { vars, probs } => {
                let p = Pmf::new(vars.clone(), probs.clone())?;
                relation_from_discrete(&p, tol.unwrap_or(markovia_core::graphoid::DEFAULT_DISCRETE_TOL))
            }
            RelationSpec::Gaussian { covariance, size } => {
                let m = covariance.build()?;
                let labels: Vec<Vertex> = (1..=*size).collect();
                relation_from_gaussian(
                    &m.leading(*size)?,
                    &labels,
                    tol.unwrap_or(markovia_core::graphoid::DEFAULT_GAUSSIAN_TOL),
                )?
            }
            RelationSpec::Explicit { ground, statements } => {
                let st = statements
                    .iter()
                    .map(|[a, b, c]| {
                        CIStatement::new(VertexSet::from(a.clone()), VertexSet::from(b.clone()), VertexSet::from(c.clone()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                CIRelation::explicit(VertexSet::from(ground.clone()), st)?
            }
        })
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovConfig {
    pub relation: RelationSpec,
    pub graph: GraphSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianConfig {
    pub covariance: CovarianceSpec,
    #[serde(default)]
    pub envelope: Option<DecayEnvelope>,
    #[serde(default)]
    pub cutoff: Option<usize>,
    #[serde(default)]
    pub eps: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsingConfig {
    pub model: IsingSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub chain: MarkovChainSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CounterexampleConfig {
    Parity(ParityProcessSpec),
    ThetaShift { weight: f64, truncation: usize },
    MaShift { weight: f64, alpha: f64, truncation: usize },
}

impl CounterexampleConfig {
    pub fn shift_base(&self) -> Option<ShiftBase> {
        match self {
            CounterexampleConfig::ThetaShift { .. } => Some(ShiftBase::Iid),
            CounterexampleConfig::MaShift { alpha, .. } => Some(ShiftBase::MovingAverage { alpha: *alpha }),
            CounterexampleConfig::Parity(_) => None,
        }
    }
}
