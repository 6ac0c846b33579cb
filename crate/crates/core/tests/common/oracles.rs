//! Recursive age formulas evaluated on a recorded event schedule. They use
//! only which stream fired and in what order, never the simulator's versions.

use std::collections::HashMap;

use vage::network::{CacheNetwork, NodeId};
use vage::simulator::{StreamKind, Trace};

/// General-network recursion: the most recent delivery into `j` decides its
/// age, which is the fresher of sender and receiver at that delivery plus
/// the source updates since. Returns the ages after the first `k` events.
pub struct GeneralRecursion<'a> {
    net: &'a CacheNetwork,
    trace: &'a Trace,
    source_prefix: Vec<u64>,
    memo: HashMap<(usize, usize), u64>,
}

impl<'a> GeneralRecursion<'a> {
    pub fn new(net: &'a CacheNetwork, trace: &'a Trace) -> Self {
        let mut source_prefix = vec![0];
        for e in &trace.events {
            let last = *source_prefix.last().unwrap();
            source_prefix.push(last + u64::from(e.stream == StreamKind::Source));
        }
        Self { net, trace, source_prefix, memo: HashMap::new() }
    }

    pub fn age(&mut self, j: NodeId, k: usize) -> u64 {
        if j == self.net.source() {
            return 0;
        }
        if let Some(&v) = self.memo.get(&(j.0, k)) {
            return v;
        }
        let last_delivery = (0..k).rev().find_map(|e| match self.trace.events[e].stream {
            StreamKind::Link(l) if self.net.links()[l].to == j => Some((e, self.net.links()[l].from)),
            _ => None,
        });
        let v = match last_delivery {
            None => self.source_prefix[k],
            Some((e, i)) => {
                let sender = self.age(i, e);
                let receiver = self.age(j, e);
                sender.min(receiver) + self.source_prefix[k] - self.source_prefix[e]
            }
        };
        self.memo.insert((j.0, k), v);
        v
    }
}

/// Tree look-back: walk from `node` up to the source, stepping back by each
/// link's backward recurrence time, then count source updates in the window.
pub fn tree_lookback_age(net: &CacheNetwork, trace: &Trace, node: NodeId, t: f64) -> u64 {
    let source_events = trace.stream_events(StreamKind::Source);
    let count = |tau: f64| source_events.partition_point(|&e| e <= tau) as u64;
    let mut tau = t;
    for link in net.path_to_source(node).unwrap().into_iter().rev() {
        let events = trace.stream_events(StreamKind::Link(link.0));
        let n = events.partition_point(|&e| e <= tau);
        tau = if n == 0 { 0.0 } else { events[n - 1] };
    }
    count(t) - count(tau)
}
