mod common;

use common::oracles::{tree_lookback_age, GeneralRecursion};
use proptest::prelude::*;
use vage::distributions::DistributionSpec;
use vage::network::{CacheNetwork, LinkSpec, NetworkSpec, NodeId};
use vage::simulator::*;

fn exp(rate: f64) -> DistributionSpec {
    DistributionSpec::Exponential { rate }
}

fn det(c: f64) -> DistributionSpec {
    DistributionSpec::Deterministic { c }
}

/// Random connected network: node `j` gets a feeder among earlier nodes,
/// optionally a second one, and optionally a back edge between caches.
fn random_network(
    dist: impl Strategy<Value = DistributionSpec> + Clone,
    tree_only: bool,
) -> impl Strategy<Value = NetworkSpec> {
    (2usize..7)
        .prop_flat_map(move |n| {
            let parents = proptest::collection::vec(
                (any::<prop::sample::Index>(), any::<prop::sample::Index>(), any::<bool>()),
                n - 1,
            );
            let dists = proptest::collection::vec(dist.clone(), 3 * n);
            (Just(n), parents, dists, dist.clone(), any::<prop::sample::Index>(), any::<bool>())
        })
        .prop_map(move |(n, parents, dists, source_dist, back, add_back)| {
            let nodes: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
            let mut links = Vec::new();
            let mut pairs = std::collections::HashSet::new();
            let mut d = dists.into_iter();
            for (j, (p1, p2, second)) in parents.into_iter().enumerate() {
                let j = j + 1;
                let a = p1.index(j);
                pairs.insert((a, j));
                links.push(LinkSpec::new(nodes[a].clone(), nodes[j].clone(), d.next().unwrap()));
                let b = p2.index(j);
                if !tree_only && second && b != a {
                    pairs.insert((b, j));
                    links.push(LinkSpec::new(nodes[b].clone(), nodes[j].clone(), d.next().unwrap()));
                }
            }
            if !tree_only && add_back && n > 2 {
                let from = n - 1;
                let to = 1 + back.index(n - 2);
                if from != to && pairs.insert((from, to)) {
                    links.push(LinkSpec::new(nodes[from].clone(), nodes[to].clone(), d.next().unwrap()));
                }
            }
            NetworkSpec { source: nodes[0].clone(), nodes, source_dist, links }
        })
}

fn exp_dist() -> impl Strategy<Value = DistributionSpec> + Clone {
    (0.3f64..3.0).prop_map(exp)
}

fn det_dist() -> impl Strategy<Value = DistributionSpec> + Clone {
    (1u32..8).prop_map(|k| det(f64::from(k) * 0.25))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trajectories_follow_the_general_recursion(spec in random_network(exp_dist(), false), seed in any::<u64>()) {
        let net = CacheNetwork::new(&spec).unwrap();
        let trace = simulate_traced(&net, 15.0, seed, 0).unwrap();
        let mut oracle = GeneralRecursion::new(&net, &trace);
        for k in 0..=trace.events.len() {
            let versions = if k == 0 { vec![0; net.node_count()] } else { trace.events[k - 1].versions.clone() };
            for j in 0..net.node_count() {
                let simulated = versions[net.source().0] - versions[j];
                prop_assert_eq!(simulated, oracle.age(NodeId(j), k), "node {} after {} events", j, k);
            }
        }
    }

    #[test]
    fn tree_ages_match_lookback(spec in random_network(det_dist(), true), probes in proptest::collection::vec(0.0f64..12.0, 1..20)) {
        let net = CacheNetwork::new(&spec).unwrap();
        prop_assert!(net.classification().is_tree());
        let trace = simulate_traced(&net, 12.0, 0, 0).unwrap();
        for t in probes.into_iter().chain([12.0, 3.0, 5.0]) {
            let ages = trace.ages_at(t);
            for (j, &age) in ages.iter().enumerate() {
                prop_assert_eq!(age, tree_lookback_age(&net, &trace, NodeId(j), t));
            }
        }
    }

    #[test]
    fn random_trees_keep_children_behind_parents(spec in random_network(exp_dist(), true), seed in any::<u64>()) {
        // simulate_traced asserts both staleness orderings after every event
        let net = CacheNetwork::new(&spec).unwrap();
        simulate_traced(&net, 30.0, seed, 1).unwrap();
    }

    #[test]
    fn link_declaration_order_is_irrelevant(spec in random_network(det_dist(), false), perm_seed in any::<u64>()) {
        let mut spec = spec;
        for (i, l) in spec.links.iter_mut().enumerate() {
            l.priority = Some(i as i64);
        }
        let net = CacheNetwork::new(&spec).unwrap();
        let mut shuffled = spec.clone();
        let mut order: Vec<usize> = (0..shuffled.links.len()).collect();
        let mut s = perm_seed;
        for i in (1..order.len()).rev() {
            s = vage::rng::mix64(s.wrapping_add(i as u64));
            order.swap(i, (s % (i as u64 + 1)) as usize);
        }
        shuffled.links = order.iter().map(|&i| spec.links[i].clone()).collect();
        let net2 = CacheNetwork::new(&shuffled).unwrap();

        let a = simulate_traced(&net, 10.0, 0, 0).unwrap();
        let b = simulate_traced(&net2, 10.0, 0, 0).unwrap();
        let times: Vec<f64> = a.events.iter().map(|e| e.time).collect();
        for t in times.into_iter().chain([10.0]) {
            prop_assert_eq!(a.ages_at(t), b.ages_at(t));
        }
        prop_assert_eq!(a.final_state, b.final_state);
    }
}

#[test]
fn monte_carlo_is_reproducible_across_thread_pools() {
    let net =
        CacheNetwork::new(&NetworkSpec::chain(exp(2.0), &[DistributionSpec::Uniform { lo: 0.0, hi: 2.0 }, exp(1.0)]))
            .unwrap();
    let targets = [NodeId(1), NodeId(2)];
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| monte_carlo(&net, &targets, 50.0, 500, 42, Estimator::Terminal).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(1));
    assert_eq!(one[0].samples.len(), 500);
    assert_eq!(one[0].target, "n1");

    let single = monte_carlo(&net, &targets, 50.0, 1, 42, Estimator::Terminal).unwrap();
    assert_eq!(single, monte_carlo(&net, &targets, 50.0, 1, 42, Estimator::Terminal).unwrap());
    assert_ne!(one, run_with_seed(&net, &targets, 43));
}

fn run_with_seed(net: &CacheNetwork, targets: &[NodeId], seed: u64) -> Vec<SimOutcome> {
    monte_carlo(net, targets, 50.0, 500, seed, Estimator::Terminal).unwrap()
}

#[test]
fn outcome_statistics_are_consistent() {
    let net = CacheNetwork::new(&NetworkSpec::chain(exp(1.0), &[exp(1.0)])).unwrap();
    let out = monte_carlo(&net, &[NodeId(1)], 20.0, 1000, 5, Estimator::TimeAverage).unwrap().remove(0);
    let n = out.samples.len() as f64;
    let mean = out.samples.iter().sum::<f64>() / n;
    let sd = (out.samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((out.mean - mean).abs() < 1e-12);
    assert!((out.std_error - sd / n.sqrt()).abs() < 1e-12);
    assert_eq!(out.estimator, Estimator::TimeAverage);
    assert_eq!(out.iterations, 1000);
}

#[test]
fn two_hop_poisson_chain() {
    let source_rate = 0.5;
    let net = CacheNetwork::new(&NetworkSpec::chain(exp(source_rate), &[exp(1.0), exp(1.0)])).unwrap();
    let out = monte_carlo(&net, &[NodeId(2)], 1e3, 50_000, 17, Estimator::Terminal).unwrap().remove(0);
    let target = source_rate * 2.0;
    assert!((out.mean - target).abs() < 4.0 * out.std_error, "{} ± {}", out.mean, out.std_error);
}

#[test]
fn terminal_and_time_average_agree() {
    let net = CacheNetwork::new(&NetworkSpec::chain(
        DistributionSpec::ParetoI { a: 3.0, m: 1.0 / 3.0 },
        &[DistributionSpec::Uniform { lo: 0.0, hi: 2.0 }, DistributionSpec::Rayleigh { sigma: 1.0 }],
    ))
    .unwrap();
    let (terminal, average) = monte_carlo_both(&net, &[NodeId(2)], 1e3, 5_000, 23).unwrap();
    let (a, b) = (&terminal[0], &average[0]);
    let joint = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!((a.mean - b.mean).abs() < 4.0 * joint, "{} vs {}", a.mean, b.mean);
    // the time average is the lower-variance estimator
    assert!(b.std_error < a.std_error);
}
