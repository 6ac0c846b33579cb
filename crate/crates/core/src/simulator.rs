//! Event-driven simulation of version propagation.
//!
//! The source bumps its version at each of its renewals. Each renewal of a
//! link `(i, j)` delivers node `i`'s current version to `j`, which keeps the
//! fresher of the two. Version age is `X_j = W_0 - W_j`.
//!
//! Renewals are merged lazily from per-stream cursors. Events sharing a
//! timestamp are ordered source first, then links by hop depth of the sender,
//! then by link priority; with continuous distributions such ties have
//! probability zero.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{CacheNetwork, LinkId, NodeId};
use crate::renewal::RenewalStream;
use crate::rng::RngStream;
use crate::stats::Summary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// `X_j(T)` at the horizon.
    #[default]
    Terminal,
    /// Per-path mean of `X_j(t)` over `[T/2, T]`.
    TimeAverage,
}

/// Which renewal process fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StreamKind {
    Source,
    Link(usize),
}

/// Result of one replication, indexed by node.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub terminal: Vec<u64>,
    pub time_average: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time: f64,
    pub stream: StreamKind,
    /// Version held by every node after the event.
    pub versions: Vec<u64>,
}

/// Full event log of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub source: NodeId,
    pub events: Vec<TraceEvent>,
    pub final_state: Replication,
}

impl Trace {
    /// Version ages of all nodes after every event with time `<= t`.
    pub fn ages_at(&self, t: f64) -> Vec<u64> {
        let idx = self.events.partition_point(|e| e.time <= t);
        match idx {
            0 => vec![0; self.final_state.terminal.len()],
            i => {
                let v = &self.events[i - 1].versions;
                v.iter().map(|w| v[self.source.0] - w).collect()
            }
        }
    }

    /// Renewal instants of one stream.
    pub fn stream_events(&self, stream: StreamKind) -> Vec<f64> {
        self.events.iter().filter(|e| e.stream == stream).map(|e| e.time).collect()
    }
}

/// Next-event cursors of all streams, ordered by `(time, rank)`. Small
/// networks scan linearly; larger ones keep a binary heap.
enum EventQueue {
    Scan { times: Vec<f64>, ranks: Vec<usize> },
    Heap { heap: BinaryHeap<Reverse<Pending>>, ranks: Vec<usize> },
}

const SCAN_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy)]
struct Pending {
    time: f64,
    rank: usize,
    stream: usize,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then(self.rank.cmp(&other.rank))
    }
}

impl EventQueue {
    fn new(times: Vec<f64>, ranks: Vec<usize>) -> Self {
        if times.len() <= SCAN_LIMIT {
            EventQueue::Scan { times, ranks }
        } else {
            let heap = times
                .iter()
                .enumerate()
                .map(|(stream, &time)| Reverse(Pending { time, rank: ranks[stream], stream }))
                .collect();
            EventQueue::Heap { heap, ranks }
        }
    }

    fn peek(&self) -> (usize, f64) {
        match self {
            EventQueue::Scan { times, ranks } => {
                let mut best = 0;
                for i in 1..times.len() {
                    let (t, b) = (times[i], times[best]);
                    if t < b || (t == b && ranks[i] < ranks[best]) {
                        best = i;
                    }
                }
                (best, times[best])
            }
            EventQueue::Heap { heap, .. } => {
                let Reverse(p) = heap.peek().expect("queue holds one entry per stream");
                (p.stream, p.time)
            }
        }
    }

    /// Replaces the head stream's pending time.
    fn update(&mut self, stream: usize, time: f64) {
        match self {
            EventQueue::Scan { times, .. } => times[stream] = time,
            EventQueue::Heap { heap, ranks } => {
                let Reverse(head) = heap.pop().expect("non-empty");
                debug_assert_eq!(head.stream, stream);
                heap.push(Reverse(Pending { time, rank: ranks[stream], stream }));
            }
        }
    }
}

/// Stream 0 is the source, stream `i + 1` is link `i`.
fn stream_ranks(network: &CacheNetwork) -> Vec<usize> {
    let links = network.links();
    let mut order: Vec<usize> = (0..links.len()).collect();
    order.sort_by_key(|&i| (network.depth(links[i].from), links[i].priority, i));
    let mut ranks = vec![0; links.len() + 1];
    for (r, &i) in order.iter().enumerate() {
        ranks[i + 1] = r + 1;
    }
    ranks
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon.is_finite() && horizon > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("horizon must be positive and finite, got {horizon}")))
    }
}

fn run<F>(network: &CacheNetwork, horizon: f64, master_seed: u64, iteration: u64, mut observe: F) -> Replication
where
    F: FnMut(f64, StreamKind, &[u64]),
{
    let n = network.node_count();
    let src = network.source().0;
    let links = network.links();

    let mut streams = Vec::with_capacity(links.len() + 1);
    streams.push(*network.source_dist());
    streams.extend(links.iter().map(|l| l.dist));
    let mut streams: Vec<RenewalStream> = streams
        .into_iter()
        .enumerate()
        .map(|(id, d)| {
            RenewalStream::new(d, id as u64, RngStream::new(master_seed, iteration, id as u64))
                .expect("validated network")
        })
        .collect();

    let ranks = stream_ranks(network);
    let mut queue = EventQueue::new(streams.iter().map(RenewalStream::next_event).collect(), ranks);

    let window_start = horizon / 2.0;
    let overlap = |a: f64, b: f64| (b.min(horizon) - a.max(window_start)).max(0.0);

    let mut version = vec![0u64; n];
    let mut since = vec![0.0f64; n];
    let mut area = vec![0.0f64; n];

    loop {
        let (stream, time) = queue.peek();
        if time > horizon {
            break;
        }
        let s = &mut streams[stream];
        let t = s.pop();
        queue.update(stream, s.next_event());

        let (node, new_version, kind) = if stream == 0 {
            (src, version[src] + 1, StreamKind::Source)
        } else {
            let li = stream - 1;
            let link = &links[li];
            (link.to.0, version[link.from.0].max(version[link.to.0]), StreamKind::Link(li))
        };
        if new_version != version[node] {
            area[node] += version[node] as f64 * overlap(since[node], t);
            since[node] = t;
            version[node] = new_version;
        }
        debug_assert!(version[node] <= version[src]);
        observe(t, kind, &version);
    }

    let span = horizon - window_start;
    for j in 0..n {
        area[j] += version[j] as f64 * overlap(since[j], horizon);
    }
    Replication {
        terminal: version.iter().map(|w| version[src] - w).collect(),
        time_average: area.iter().map(|a| (area[src] - a) / span).collect(),
    }
}

/// One replication up to `horizon`: version ages at the horizon and their
/// time averages over the second half of the run.
pub fn simulate_once(network: &CacheNetwork, horizon: f64, master_seed: u64, iteration: u64) -> Result<Replication> {
    check_horizon(horizon)?;
    Ok(run(network, horizon, master_seed, iteration, |_, _, _| {}))
}

/// Like [`simulate_once`] but records every event. Also checks the
/// staleness ordering after each event and panics if it is broken.
pub fn simulate_traced(network: &CacheNetwork, horizon: f64, master_seed: u64, iteration: u64) -> Result<Trace> {
    check_horizon(horizon)?;
    let src = network.source();
    let tree = network.classification().is_tree();
    let mut events = Vec::new();
    let final_state = run(network, horizon, master_seed, iteration, |time, stream, versions| {
        for (j, &w) in versions.iter().enumerate() {
            assert!(w <= versions[src.0], "node {} ahead of the source", network.name(NodeId(j)));
        }
        if tree {
            for l in network.links() {
                assert!(versions[l.to.0] <= versions[l.from.0], "child ahead of parent");
            }
        }
        events.push(TraceEvent { time, stream, versions: versions.to_vec() });
    });
    Ok(Trace { source: src, events, final_state })
}

/// Monte Carlo estimate of the version age at one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub target: String,
    pub estimator: Estimator,
    pub mean: f64,
    pub std_error: f64,
    pub iterations: usize,
    pub horizon: f64,
    /// Per-replication values in replication order; not serialized.
    #[serde(skip)]
    pub samples: Vec<f64>,
}

impl SimOutcome {
    fn new(target: String, estimator: Estimator, horizon: f64, samples: Vec<f64>) -> Self {
        let s = Summary::of(&samples);
        Self { target, estimator, mean: s.mean, std_error: s.std_error, iterations: samples.len(), horizon, samples }
    }
}

/// Runs `iterations` independent replications and summarizes both
/// estimators for each target, terminal first.
///
/// Replication `k` draws stream `s` from `(master_seed, k, s)`, and samples
/// are reduced in replication order, so the output does not depend on the
/// thread pool.
pub fn monte_carlo_both(
    network: &CacheNetwork,
    targets: &[NodeId],
    horizon: f64,
    iterations: usize,
    master_seed: u64,
) -> Result<(Vec<SimOutcome>, Vec<SimOutcome>)> {
    check_horizon(horizon)?;
    if iterations == 0 {
        return Err(Error::InvalidParameter("iterations must be at least 1".into()));
    }
    if let Some(bad) = targets.iter().find(|t| t.0 >= network.node_count()) {
        return Err(Error::UnknownNode(format!("#{}", bad.0)));
    }

    let reps: Vec<Replication> =
        (0..iterations as u64).into_par_iter().map(|k| run(network, horizon, master_seed, k, |_, _, _| {})).collect();

    let collect = |estimator| -> Vec<SimOutcome> {
        targets
            .iter()
            .map(|&t| {
                let samples = reps
                    .iter()
                    .map(|r| match estimator {
                        Estimator::Terminal => r.terminal[t.0] as f64,
                        Estimator::TimeAverage => r.time_average[t.0],
                    })
                    .collect();
                SimOutcome::new(network.name(t).to_string(), estimator, horizon, samples)
            })
            .collect()
    };
    Ok((collect(Estimator::Terminal), collect(Estimator::TimeAverage)))
}

pub fn monte_carlo(
    network: &CacheNetwork,
    targets: &[NodeId],
    horizon: f64,
    iterations: usize,
    master_seed: u64,
    estimator: Estimator,
) -> Result<Vec<SimOutcome>> {
    let (terminal, average) = monte_carlo_both(network, targets, horizon, iterations, master_seed)?;
    Ok(match estimator {
        Estimator::Terminal => terminal,
        Estimator::TimeAverage => average,
    })
}

/// Link ids in the order simultaneous deliveries are applied.
pub fn tie_break_order(network: &CacheNetwork) -> Vec<LinkId> {
    let ranks = stream_ranks(network);
    let mut ids: Vec<usize> = (0..network.links().len()).collect();
    ids.sort_by_key(|&i| ranks[i + 1]);
    ids.into_iter().map(LinkId).collect()
}
