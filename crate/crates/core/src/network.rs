//! Cache network topology.
//!
//! Nodes are named; dense indices follow declaration order so that random
//! stream ids derived from them are stable. A network whose every cache has
//! exactly one upstream feeder is a tree and admits the closed form; anything
//! else can only be simulated.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result, Violation};

/// Serializable description of a network, as found in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub nodes: Vec<String>,
    pub source: String,
    pub source_dist: DistributionSpec,
    #[serde(default)]
    pub links: Vec<LinkSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub from: String,
    pub to: String,
    pub dist: DistributionSpec,
    /// Lower values are served first among simultaneous deliveries.
    /// Defaults to the link's declaration index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority: Option<i64>,
}

impl LinkSpec {
    pub fn new(from: impl Into<String>, to: impl Into<String>, dist: DistributionSpec) -> Self {
        Self { from: from.into(), to: to.into(), dist, priority: None }
    }
}

impl NetworkSpec {
    /// A chain `source -> n1 -> ... -> nk` with one link per distribution.
    pub fn chain(source_dist: DistributionSpec, links: &[DistributionSpec]) -> Self {
        let nodes: Vec<String> = (0..=links.len()).map(|i| format!("n{i}")).collect();
        let links =
            links.iter().enumerate().map(|(i, d)| LinkSpec::new(nodes[i].clone(), nodes[i + 1].clone(), *d)).collect();
        Self { source: nodes[0].clone(), nodes, source_dist, links }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Path,
    Tree,
    General,
}

impl Classification {
    pub fn is_tree(self) -> bool {
        !matches!(self, Classification::General)
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Path => "path",
            Classification::Tree => "tree",
            Classification::General => "general",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub from: NodeId,
    pub to: NodeId,
    pub dist: DistributionSpec,
    pub priority: i64,
}

/// A validated cache network. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheNetwork {
    names: Vec<String>,
    source: NodeId,
    source_dist: DistributionSpec,
    links: Vec<Link>,
    incoming: Vec<Vec<LinkId>>,
    outgoing: Vec<Vec<LinkId>>,
    depth: Vec<usize>,
    classification: Classification,
}

/// Checks a description and classifies it.
pub fn validate(spec: &NetworkSpec) -> std::result::Result<Classification, Vec<Violation>> {
    CacheNetwork::build(spec).map(|n| n.classification)
}

impl CacheNetwork {
    pub fn new(spec: &NetworkSpec) -> Result<Self> {
        Self::build(spec).map_err(Error::InvalidNetwork)
    }

    fn build(spec: &NetworkSpec) -> std::result::Result<Self, Vec<Violation>> {
        let mut violations = Vec::new();

        let mut index = HashMap::new();
        for (i, name) in spec.nodes.iter().enumerate() {
            if index.insert(name.as_str(), NodeId(i)).is_some() {
                violations.push(Violation::DuplicateNode(name.clone()));
            }
        }
        let lookup = |name: &str, violations: &mut Vec<Violation>| {
            let id = index.get(name).copied();
            if id.is_none() {
                violations.push(Violation::UndeclaredNode(name.to_string()));
            }
            id
        };

        let source = lookup(&spec.source, &mut violations);
        if let Err(e) = spec.source_dist.validate() {
            violations.push(Violation::BadDistribution { at: "source".into(), reason: e.to_string() });
        }

        let n = spec.nodes.len();
        let mut links = Vec::with_capacity(spec.links.len());
        let mut seen = HashSet::new();
        for (i, l) in spec.links.iter().enumerate() {
            let (Some(from), Some(to)) = (lookup(&l.from, &mut violations), lookup(&l.to, &mut violations)) else {
                continue;
            };
            if from == to {
                violations.push(Violation::SelfLoop(l.from.clone()));
                continue;
            }
            if !seen.insert((from, to)) {
                violations.push(Violation::DuplicateLink(l.from.clone(), l.to.clone()));
                continue;
            }
            if let Err(e) = l.dist.validate() {
                violations.push(Violation::BadDistribution {
                    at: format!("link {} -> {}", l.from, l.to),
                    reason: e.to_string(),
                });
            }
            links.push(Link { from, to, dist: l.dist, priority: l.priority.unwrap_or(i as i64) });
        }

        let mut incoming = vec![Vec::new(); n];
        let mut outgoing = vec![Vec::new(); n];
        for (i, l) in links.iter().enumerate() {
            incoming[l.to.0].push(LinkId(i));
            outgoing[l.from.0].push(LinkId(i));
        }

        for (j, inc) in incoming.iter().enumerate() {
            let mut prios = HashSet::new();
            for &LinkId(li) in inc {
                if !prios.insert(links[li].priority) {
                    violations.push(Violation::DuplicatePriority {
                        node: spec.nodes[j].clone(),
                        priority: links[li].priority,
                    });
                }
            }
        }

        let Some(source) = source else {
            return Err(violations);
        };

        // breadth-first hop distance from the source
        let mut depth = vec![usize::MAX; n];
        depth[source.0] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &LinkId(li) in &outgoing[u.0] {
                let v = links[li].to;
                if depth[v.0] == usize::MAX {
                    depth[v.0] = depth[u.0] + 1;
                    queue.push_back(v);
                }
            }
        }

        for &LinkId(li) in &incoming[source.0] {
            let from = links[li].from;
            violations.push(Violation::SourceHasIncoming {
                source_node: spec.source.clone(),
                from: spec.nodes[from.0].clone(),
            });
            if depth[from.0] != usize::MAX {
                violations.push(Violation::CycleThroughSource(spec.nodes[from.0].clone(), spec.source.clone()));
            }
        }
        for (j, &d) in depth.iter().enumerate() {
            if d == usize::MAX {
                violations.push(Violation::UnreachableNode(spec.nodes[j].clone()));
            }
        }

        if !violations.is_empty() {
            return Err(violations);
        }

        let single_feeder = (0..n).all(|j| j == source.0 || incoming[j].len() == 1);
        let classification = if !single_feeder {
            Classification::General
        } else if outgoing.iter().all(|o| o.len() <= 1) {
            Classification::Path
        } else {
            Classification::Tree
        };

        Ok(Self {
            names: spec.nodes.clone(),
            source,
            source_dist: spec.source_dist,
            links,
            incoming,
            outgoing,
            depth,
            classification,
        })
    }

    pub fn classification(&self) -> Classification {
        self.classification
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn node_names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, node: NodeId) -> &str {
        &self.names[node.0]
    }

    pub fn node(&self, name: &str) -> Result<NodeId> {
        self.names.iter().position(|n| n == name).map(NodeId).ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn source_dist(&self) -> &DistributionSpec {
        &self.source_dist
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.0]
    }

    /// Links delivering into `node` (the feeder set `S_j`).
    pub fn incoming(&self, node: NodeId) -> &[LinkId] {
        &self.incoming[node.0]
    }

    pub fn outgoing(&self, node: NodeId) -> &[LinkId] {
        &self.outgoing[node.0]
    }

    /// Shortest hop distance from the source.
    pub fn depth(&self, node: NodeId) -> usize {
        self.depth[node.0]
    }

    /// Nodes other than the source with no outgoing links, in declaration order.
    pub fn leaves(&self) -> Vec<NodeId> {
        (0..self.names.len()).map(NodeId).filter(|&j| j != self.source && self.outgoing[j.0].is_empty()).collect()
    }

    /// Links from the source down to `node`, in hop order.
    pub fn path_to_source(&self, node: NodeId) -> Result<Vec<LinkId>> {
        if !self.classification.is_tree() {
            return Err(Error::NotATree(self.classification));
        }
        let mut path = Vec::with_capacity(self.depth[node.0]);
        let mut cur = node;
        while cur != self.source {
            let li = self.incoming[cur.0][0];
            path.push(li);
            cur = self.links[li.0].from;
        }
        path.reverse();
        Ok(path)
    }

    /// Normalized description with every priority spelled out.
    pub fn to_spec(&self) -> NetworkSpec {
        NetworkSpec {
            nodes: self.names.clone(),
            source: self.names[self.source.0].clone(),
            source_dist: self.source_dist,
            links: self
                .links
                .iter()
                .map(|l| LinkSpec {
                    from: self.names[l.from.0].clone(),
                    to: self.names[l.to.0].clone(),
                    dist: l.dist,
                    priority: Some(l.priority),
                })
                .collect(),
        }
    }
}
