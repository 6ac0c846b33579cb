use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} has an infinite second moment")]
    InfiniteMoment { what: String },

    #[error("stream was not advanced past t = {t}")]
    NoFutureEvent { t: f64 },

    #[error("invalid network: {}", join_violations(.0))]
    InvalidNetwork(Vec<Violation>),

    #[error("closed form requires tree (network is {0})")]
    NotATree(crate::network::Classification),

    #[error("unknown node `{0}`")]
    UnknownNode(String),
}

/// A single reason a network description was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("node `{0}` is not reachable from the source")]
    UnreachableNode(String),
    #[error("duplicate link {0} -> {1}")]
    DuplicateLink(String, String),
    #[error("source `{source_node}` has incoming link from `{from}`")]
    SourceHasIncoming { source_node: String, from: String },
    #[error("link {0} -> {1} closes a cycle through the source")]
    CycleThroughSource(String, String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("priority {priority} used twice on links into `{node}`")]
    DuplicatePriority { node: String, priority: i64 },
    #[error("link references undeclared node `{0}`")]
    UndeclaredNode(String),
    #[error("node `{0}` declared twice")]
    DuplicateNode(String),
    #[error("distribution on {at}: {reason}")]
    BadDistribution { at: String, reason: String },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
