//! Parameter sweeps comparing the closed form against Monte Carlo.
//!
//! Three built-in families mirror the classic experiments on chains:
//!
//! * `source_mean`: 3-hop chain Rayleigh(1) / ChiSquare(1) / Beta(2, 3) fed by
//!   a ParetoI(3, m) source, swept over `m`;
//! * `hop_count`: an `n`-hop chain of Uniform(0, 2) links, ParetoI(3, 1/3)
//!   source, swept over `n`;
//! * `link_variance`: a 4-hop chain of unit-mean uniform links of variance
//!   `v`, ParetoI(3, 1/3) source, swept over `v`.
//!
//! Point `i` of a sweep simulates under the seed `derive_seed(seed, [i])`.

use std::fmt::{self, Write as _};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytic;
use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::network::{CacheNetwork, NetworkSpec};
use crate::rng::derive_seed;
use crate::simulator::{monte_carlo, Estimator, SimOutcome};
use crate::stats::{z_score, LinearFit};

pub const CSV_HEADER: &str = "sweep_kind,param,analytic,mc_mean,mc_stderr,z,iterations,horizon,seed";

pub const DEFAULT_ITERATIONS: usize = 20_000;
pub const DEFAULT_HORIZON: f64 = 1e3;
/// Two-sided gate on every point's z-score.
pub const Z_GATE: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    SourceMean,
    HopCount,
    LinkVariance,
    Custom,
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepKind::SourceMean => "source_mean",
            SweepKind::HopCount => "hop_count",
            SweepKind::LinkVariance => "link_variance",
            SweepKind::Custom => "custom",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub iterations: usize,
    pub horizon: f64,
    pub seed: u64,
    pub estimator: Estimator,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { iterations: DEFAULT_ITERATIONS, horizon: DEFAULT_HORIZON, seed: 0, estimator: Estimator::Terminal }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub param: f64,
    pub analytic: Option<f64>,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub z: Option<f64>,
    pub iterations: usize,
    pub horizon: f64,
    pub outcome: SimOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSweep {
    pub kind: SweepKind,
    pub options: SweepOptions,
    pub points: Vec<SweepPoint>,
    /// Least-squares line through the Monte Carlo means.
    pub fit: Option<LinearFit>,
}

/// A fully specified sweep point: parameter value, network and target node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSpec {
    pub param: f64,
    pub network: NetworkSpec,
    pub target: String,
}

fn pareto_source(m: f64) -> DistributionSpec {
    DistributionSpec::ParetoI { a: 3.0, m }
}

pub fn source_mean_network(m: f64) -> NetworkSpec {
    NetworkSpec::chain(
        pareto_source(m),
        &[
            DistributionSpec::Rayleigh { sigma: 1.0 },
            DistributionSpec::ChiSquare { k: 1 },
            DistributionSpec::Beta { alpha: 2.0, beta: 3.0 },
        ],
    )
}

pub fn hop_count_network(n: u32) -> NetworkSpec {
    let links = vec![DistributionSpec::Uniform { lo: 0.0, hi: 2.0 }; n as usize];
    NetworkSpec::chain(pareto_source(1.0 / 3.0), &links)
}

pub fn link_variance_network(v: f64) -> Result<NetworkSpec> {
    let link = DistributionSpec::uniform_unit_mean(v)?;
    Ok(NetworkSpec::chain(pareto_source(1.0 / 3.0), &[link; 4]))
}

fn end_of_chain(spec: NetworkSpec, param: f64) -> PointSpec {
    let target = spec.nodes.last().cloned().expect("chain has a source");
    PointSpec { param, network: spec, target }
}

fn check_monotone(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one value".into()));
    }
    let up = values.windows(2).all(|w| w[0] < w[1]);
    let down = values.windows(2).all(|w| w[0] > w[1]);
    if up || down {
        Ok(())
    } else {
        Err(Error::InvalidParameter("sweep values must be strictly monotone".into()))
    }
}

pub fn sweep_source_mean(m_values: &[f64], opts: SweepOptions) -> Result<ExperimentSweep> {
    let points = m_values.iter().map(|&m| end_of_chain(source_mean_network(m), m)).collect();
    run_sweep(SweepKind::SourceMean, points, opts)
}

pub fn sweep_hop_count(n_values: &[u32], opts: SweepOptions) -> Result<ExperimentSweep> {
    let points = n_values.iter().map(|&n| end_of_chain(hop_count_network(n), f64::from(n))).collect();
    run_sweep(SweepKind::HopCount, points, opts)
}

pub fn sweep_link_variance(v_values: &[f64], opts: SweepOptions) -> Result<ExperimentSweep> {
    let points =
        v_values.iter().map(|&v| Ok(end_of_chain(link_variance_network(v)?, v))).collect::<Result<Vec<_>>>()?;
    run_sweep(SweepKind::LinkVariance, points, opts)
}

pub fn sweep_custom(points: Vec<PointSpec>, opts: SweepOptions) -> Result<ExperimentSweep> {
    run_sweep(SweepKind::Custom, points, opts)
}

fn run_sweep(kind: SweepKind, specs: Vec<PointSpec>, opts: SweepOptions) -> Result<ExperimentSweep> {
    let params: Vec<f64> = specs.iter().map(|p| p.param).collect();
    check_monotone(&params)?;

    let prepared = specs
        .into_iter()
        .map(|p| {
            let net = CacheNetwork::new(&p.network)?;
            let target = net.node(&p.target)?;
            let analytic = match analytic::expected_version_age(&net) {
                Ok(a) => a.age_of(&p.target),
                Err(Error::NotATree(_)) => None,
                Err(e) => return Err(e),
            };
            Ok((p.param, net, target, analytic))
        })
        .collect::<Result<Vec<_>>>()?;

    let points = prepared
        .into_par_iter()
        .enumerate()
        .map(|(i, (param, net, target, analytic))| {
            let seed = derive_seed(opts.seed, &[i as u64]);
            let outcome = monte_carlo(&net, &[target], opts.horizon, opts.iterations, seed, opts.estimator)?
                .pop()
                .expect("one target");
            Ok(SweepPoint {
                param,
                analytic,
                mc_mean: outcome.mean,
                mc_stderr: outcome.std_error,
                z: analytic.map(|a| z_score(outcome.mean, a, outcome.std_error)),
                iterations: outcome.iterations,
                horizon: outcome.horizon,
                outcome,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let xs: Vec<f64> = points.iter().map(|p| p.param).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.mc_mean).collect();
    Ok(ExperimentSweep { kind, options: opts, fit: LinearFit::fit(&xs, &ys), points })
}

/// Gate verdict: a sweep fails when more than one point in twenty misses
/// the analytic value by `Z_GATE` standard errors or more.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateReport {
    pub checked: usize,
    pub exceeded: usize,
    pub passed: bool,
}

impl ExperimentSweep {
    pub fn gate(&self) -> GateReport {
        let zs: Vec<f64> = self.points.iter().filter_map(|p| p.z).collect();
        let exceeded = zs.iter().filter(|z| z.is_nan() || z.abs() >= Z_GATE).count();
        GateReport { checked: zs.len(), exceeded, passed: exceeded <= zs.len() / 20 }
    }

    /// Comparison rows, preceded by a `#` provenance line.
    pub fn to_csv(&self, provenance: &Provenance) -> String {
        let mut out = String::new();
        writeln!(out, "{}", provenance.comment_line()).unwrap();
        writeln!(out, "{CSV_HEADER}").unwrap();
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for p in &self.points {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                self.kind,
                p.param,
                opt(p.analytic),
                p.mc_mean,
                p.mc_stderr,
                opt(p.z),
                p.iterations,
                p.horizon,
                self.options.seed
            )
            .unwrap();
        }
        out
    }

    pub fn to_json(&self, provenance: &Provenance) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            provenance: &'a Provenance,
            gate: GateReport,
            sweep: &'a ExperimentSweep,
        }
        serde_json::to_string_pretty(&Doc { provenance, gate: self.gate(), sweep: self }).expect("serializable")
    }
}

/// Run identity embedded in every emitted file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    /// Hashes the canonical JSON form of whatever configured the run.
    pub fn new<T: Serialize>(config: &T, seed: u64) -> Self {
        let bytes = serde_json::to_vec(config).expect("serializable config");
        let digest = Sha256::digest(&bytes);
        let config_hash = digest.iter().fold(String::with_capacity(64), |mut s, b| {
            write!(s, "{b:02x}").unwrap();
            s
        });
        Self { tool: "vage".into(), version: env!("CARGO_PKG_VERSION").into(), config_hash, seed }
    }

    pub fn comment_line(&self) -> String {
        format!("# {} {} config_hash={} seed={}", self.tool, self.version, self.config_hash, self.seed)
    }
}
