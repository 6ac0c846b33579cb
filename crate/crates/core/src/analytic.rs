//! Closed-form long-run expected version age on path and tree networks.
//!
//! For a node reached from the source over links `l_1, ..., l_k`,
//!
//! ```text
//! lim E[X(t)] = (1 / E[Y_source]) * Σ_i E[Y_i²] / (2 E[Y_i])
//! ```
//!
//! Each term is the limiting mean backward recurrence time of one link, so
//! the age is additive over hops and blind to their order. On a tree every
//! node simply uses its own path.

use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::network::{CacheNetwork, Classification, NodeId};

/// `E[Y²] / (2E[Y])` of one link.
pub fn link_contribution(dist: &DistributionSpec) -> Result<f64> {
    dist.moments()?.mean_backward_recurrence().ok_or_else(|| Error::InfiniteMoment { what: dist.to_string() })
}

/// Sum in ascending order, so the total does not depend on the order in
/// which the terms were listed.
fn canonical_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.into_iter().fold(0.0, |acc, t| acc + t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkContribution {
    pub from: String,
    pub to: String,
    pub dist: DistributionSpec,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeAge {
    pub node: String,
    pub age: f64,
    /// Indices into [`AnalyticAge::links`], source side first.
    pub path: Vec<usize>,
}

/// Raised when a distribution is lattice-supported: the limit theorem does
/// not cover it, though the value is still reported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArithmeticWarning {
    pub at: String,
    pub dist: DistributionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticAge {
    pub classification: Classification,
    pub source_mean: f64,
    pub nodes: Vec<NodeAge>,
    pub links: Vec<LinkContribution>,
    pub warnings: Vec<ArithmeticWarning>,
}

impl AnalyticAge {
    pub fn age_of(&self, node: &str) -> Option<f64> {
        self.nodes.iter().find(|n| n.node == node).map(|n| n.age)
    }
}

/// Expected age at the end of a path with the given source and link
/// distributions.
pub fn path_age(source: &DistributionSpec, links: &[DistributionSpec]) -> Result<f64> {
    let m = source.moments()?;
    if !m.has_finite_second_moment() {
        return Err(Error::InfiniteMoment { what: format!("source {source}") });
    }
    let terms = links.iter().map(link_contribution).collect::<Result<Vec<_>>>()?;
    Ok(canonical_sum(terms) / m.mean)
}

pub fn expected_version_age(network: &CacheNetwork) -> Result<AnalyticAge> {
    let classification = network.classification();
    if !classification.is_tree() {
        return Err(Error::NotATree(classification));
    }

    let source_dist = network.source_dist();
    let sm = source_dist.moments()?;
    if !sm.has_finite_second_moment() {
        return Err(Error::InfiniteMoment { what: format!("source {source_dist}") });
    }

    let mut warnings = Vec::new();
    if source_dist.is_arithmetic() {
        warnings.push(ArithmeticWarning { at: "source".into(), dist: *source_dist });
    }

    let mut links = Vec::with_capacity(network.links().len());
    for l in network.links() {
        let (from, to) = (network.name(l.from).to_string(), network.name(l.to).to_string());
        let contribution = link_contribution(&l.dist).map_err(|e| match e {
            Error::InfiniteMoment { what } => Error::InfiniteMoment { what: format!("link {from} -> {to}: {what}") },
            other => other,
        })?;
        if l.dist.is_arithmetic() {
            warnings.push(ArithmeticWarning { at: format!("link {from} -> {to}"), dist: l.dist });
        }
        links.push(LinkContribution { from, to, dist: l.dist, contribution });
    }

    let nodes = (0..network.node_count())
        .map(NodeId)
        .map(|j| {
            let path: Vec<usize> = network.path_to_source(j)?.into_iter().map(|l| l.0).collect();
            let age = canonical_sum(path.iter().map(|&i| links[i].contribution).collect()) / sm.mean;
            Ok(NodeAge { node: network.name(j).to_string(), age, path })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(AnalyticAge { classification, source_mean: sm.mean, nodes, links, warnings })
}

/// All-Poisson special case: `λs * Σ 1/λ_j`.
pub fn expected_version_age_poisson(source_rate: f64, link_rates: &[f64]) -> Result<f64> {
    for &r in std::iter::once(&source_rate).chain(link_rates) {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidParameter(format!("rates must be positive and finite, got {r}")));
        }
    }
    Ok(source_rate * canonical_sum(link_rates.iter().map(|r| 1.0 / r).collect()))
}
