use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use vage::analytic::{self, AnalyticAge};
use vage::distributions::DistributionSpec;
use vage::experiments::{self, ExperimentSweep, PointSpec, Provenance, SweepOptions, CSV_HEADER, Z_GATE};
use vage::network::CacheNetwork;
use vage::renewal::{self, StatCheck};
use vage::simulator::{self, Estimator, SimOutcome};
use vage::stats::z_score;

use crate::config::{ConfigError, RunConfig};
use crate::{CliError, Command, RunFlags, SweepName};

pub(crate) fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Analytic { config, json } => analytic(&config, json),
        Command::Simulate { config, run, targets } => simulate(&config, &run, targets),
        Command::Verify { dists, probe, t_grid, t_large, paths, seed } => {
            verify(&dists, probe.as_ref(), &t_grid, t_large, paths, seed)
        }
        Command::Sweep { kind, run, m, n, v, template, values } => {
            let values = match kind {
                SweepName::Fig5 => SweepValues::Reals(m.unwrap_or_else(|| vec![1.0 / 6.0, 1.0 / 3.0, 2.0 / 3.0, 1.0])),
                SweepName::Fig6 => SweepValues::Counts(n.map(|c| c.0).unwrap_or_else(|| (1..=6).collect())),
                SweepName::Fig7 => SweepValues::Reals(v.unwrap_or_else(|| vec![0.05, 0.15, 0.25, 1.0 / 3.0])),
                SweepName::Custom => {
                    let template = template.ok_or_else(|| CliError::Usage("custom sweep needs --template".into()))?;
                    let values = values.ok_or_else(|| CliError::Usage("custom sweep needs --values".into()))?;
                    SweepValues::Custom { template, values }
                }
            };
            sweep(kind, values, &run)
        }
    }
}

fn tree_ages(net: &CacheNetwork) -> Result<Option<AnalyticAge>, CliError> {
    match analytic::expected_version_age(net) {
        Ok(a) => Ok(Some(a)),
        Err(vage::Error::NotATree(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn write_outputs(dir: &Path, stem: &str, csv: &str, json: &str) -> Result<(), CliError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| CliError::Write { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    for (ext, body) in [("csv", csv), ("json", json)] {
        let path = dir.join(format!("{stem}.{ext}"));
        fs::write(&path, body).map_err(io(&path))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn analytic(config: &str, json: bool) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let net = CacheNetwork::new(&cfg.network)?;
    let ages = analytic::expected_version_age(&net)?;
    let provenance = Provenance::new(&cfg.normalized(&net), cfg.seed);
    if json {
        #[derive(Serialize)]
        struct Doc<'a> {
            provenance: &'a Provenance,
            analytic: &'a AnalyticAge,
        }
        println!(
            "{}",
            serde_json::to_string_pretty(&Doc { provenance: &provenance, analytic: &ages }).expect("serializable")
        );
        return Ok(());
    }

    let mut out = String::new();
    writeln!(out, "{}", provenance.comment_line()).unwrap();
    writeln!(
        out,
        "network: {} with {} nodes, source {} ~ {} (mean {})",
        ages.classification,
        net.node_count(),
        net.name(net.source()),
        net.source_dist(),
        ages.source_mean
    )
    .unwrap();
    writeln!(out, "link contributions E[Y^2]/(2E[Y]):").unwrap();
    for l in &ages.links {
        writeln!(out, "  {} -> {}  {}  {:.6}", l.from, l.to, l.dist, l.contribution).unwrap();
    }
    writeln!(out, "expected version age:").unwrap();
    for n in &ages.nodes {
        let via = match n.path.first() {
            Some(&first) => {
                let mut hops = vec![ages.links[first].from.as_str()];
                hops.extend(n.path.iter().map(|&i| ages.links[i].to.as_str()));
                format!("  via {}", hops.join(" -> "))
            }
            None => String::new(),
        };
        writeln!(out, "  {}  {:.6}{via}", n.node, n.age).unwrap();
    }
    for w in &ages.warnings {
        writeln!(out, "warning: {} at {} is arithmetic; the limit may not exist", w.dist, w.at).unwrap();
    }
    print!("{out}");
    Ok(())
}

#[derive(Serialize)]
struct TargetResult {
    #[serde(flatten)]
    outcome: SimOutcome,
    analytic: Option<f64>,
    z: Option<f64>,
}

fn simulate(config: &str, run: &RunFlags, targets: Option<Vec<String>>) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(h) = run.horizon {
        cfg.horizon = h;
    }
    if let Some(i) = run.iterations {
        cfg.iterations = i;
    }
    if let Some(s) = run.seed {
        cfg.seed = s;
    }
    if let Some(e) = run.estimator {
        cfg.estimator = e.into();
    }
    if targets.is_some() {
        cfg.targets = targets;
    }
    let out_dir = run.out.clone().or_else(|| cfg.output.as_ref().map(PathBuf::from));

    let net = CacheNetwork::new(&cfg.network)?;
    let target_ids = cfg.resolve_targets(&net)?;
    let normalized = cfg.normalized(&net);
    let provenance = Provenance::new(&normalized, cfg.seed);
    let ages = tree_ages(&net)?;

    let outcomes = simulator::monte_carlo(&net, &target_ids, cfg.horizon, cfg.iterations, cfg.seed, cfg.estimator)?;
    let results: Vec<TargetResult> = outcomes
        .into_iter()
        .map(|outcome| {
            let analytic = ages.as_ref().and_then(|a| a.age_of(&outcome.target));
            let z = analytic.map(|a| z_score(outcome.mean, a, outcome.std_error));
            TargetResult { outcome, analytic, z }
        })
        .collect();

    let mut csv = String::new();
    writeln!(csv, "{}", provenance.comment_line()).unwrap();
    writeln!(csv, "{CSV_HEADER}").unwrap();
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &results {
        let o = &r.outcome;
        writeln!(
            csv,
            "simulate,{},{},{},{},{},{},{},{}",
            o.target,
            opt(r.analytic),
            o.mean,
            o.std_error,
            opt(r.z),
            o.iterations,
            o.horizon,
            cfg.seed
        )
        .unwrap();
    }

    #[derive(Serialize)]
    struct Doc<'a> {
        provenance: &'a Provenance,
        config: &'a RunConfig,
        results: &'a [TargetResult],
    }
    let json = serde_json::to_string_pretty(&Doc { provenance: &provenance, config: &normalized, results: &results })
        .expect("serializable");

    match out_dir {
        Some(dir) => write_outputs(&dir, "simulate", &csv, &json),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn verify(
    dists: &[DistributionSpec],
    probe: Option<&DistributionSpec>,
    t_grid: &[f64],
    t_large: f64,
    paths: usize,
    seed: u64,
) -> Result<(), CliError> {
    let mut checks: Vec<StatCheck> = Vec::new();
    for (i, spec) in dists.iter().enumerate() {
        let seed = vage::rng::derive_seed(seed, &[i as u64]);
        let mean = spec.moments()?.mean;
        checks.extend(renewal::verify_martingale_zero_mean(spec, t_grid, paths, seed)?);
        checks.push(renewal::verify_backward_recurrence_limit(spec, t_large * mean, paths, seed)?);
        if let Some(probe) = probe {
            let scale = mean.max(probe.moments()?.mean);
            checks.push(renewal::verify_lemma2(spec, probe, t_large * scale, paths, seed)?);
        }
    }
    let mut failed = 0;
    for c in &checks {
        let ok = c.passes(Z_GATE);
        failed += usize::from(!ok);
        println!(
            "{} {}: estimate {:.6} target {:.6} stderr {:.6} z {:+.3} ({} paths)",
            if ok { "PASS" } else { "FAIL" },
            c.label,
            c.estimate,
            c.target,
            c.std_error,
            c.z,
            c.paths
        );
    }
    if failed > 0 {
        return Err(CliError::Gate(format!("{failed} of {} checks at |z| >= {Z_GATE}", checks.len())));
    }
    Ok(())
}

enum SweepValues {
    Reals(Vec<f64>),
    Counts(Vec<u32>),
    Custom { template: PathBuf, values: Vec<f64> },
}

/// Replaces every string equal to `$param` with `value`.
fn substitute(doc: &mut Value, value: f64) {
    match doc {
        Value::String(s) if s == "$param" => *doc = Value::from(value),
        Value::Array(items) => items.iter_mut().for_each(|v| substitute(v, value)),
        Value::Object(map) => map.values_mut().for_each(|v| substitute(v, value)),
        _ => {}
    }
}

fn custom_points(template: &Path, values: &[f64]) -> Result<(Vec<PointSpec>, Option<RunConfig>), CliError> {
    let name = template.display().to_string();
    let text = fs::read_to_string(template).map_err(|source| ConfigError::Io { path: name.clone(), source })?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| ConfigError::parse(&name, ".".into(), e))?;
    let mut points = Vec::with_capacity(values.len());
    let mut first = None;
    for &value in values {
        let mut doc = doc.clone();
        substitute(&mut doc, value);
        let cfg = RunConfig::parse(&doc.to_string(), &format!("{name} (param {value})"))?;
        let net = CacheNetwork::new(&cfg.network)?;
        let target = cfg.resolve_targets(&net)?[0];
        points.push(PointSpec { param: value, network: net.to_spec(), target: net.name(target).to_string() });
        first.get_or_insert(cfg);
    }
    Ok((points, first))
}

fn sweep(kind: SweepName, values: SweepValues, run: &RunFlags) -> Result<(), CliError> {
    let mut opts = SweepOptions::default();
    let (stem, points_for_custom) = match (&kind, &values) {
        (SweepName::Custom, SweepValues::Custom { template, values }) => {
            let (points, base) = custom_points(template, values)?;
            if let Some(base) = base {
                opts = SweepOptions {
                    iterations: base.iterations,
                    horizon: base.horizon,
                    seed: base.seed,
                    estimator: base.estimator,
                };
            }
            ("custom", Some(points))
        }
        (SweepName::Fig5, _) => ("fig5", None),
        (SweepName::Fig6, _) => ("fig6", None),
        (SweepName::Fig7, _) => ("fig7", None),
        (SweepName::Custom, _) => unreachable!("custom values are built with the template"),
    };
    if let Some(i) = run.iterations {
        opts.iterations = i;
    }
    if let Some(h) = run.horizon {
        opts.horizon = h;
    }
    if let Some(s) = run.seed {
        opts.seed = s;
    }
    if let Some(e) = run.estimator {
        opts.estimator = Estimator::from(e);
    }

    #[derive(Serialize)]
    struct SweepConfig<'a> {
        sweep: &'a str,
        options: &'a SweepOptions,
        values: Vec<f64>,
        points: Option<&'a [PointSpec]>,
    }
    let value_list: Vec<f64> = match &values {
        SweepValues::Reals(v) => v.clone(),
        SweepValues::Counts(n) => n.iter().map(|&n| f64::from(n)).collect(),
        SweepValues::Custom { values, .. } => values.clone(),
    };
    let provenance = Provenance::new(
        &SweepConfig { sweep: stem, options: &opts, values: value_list, points: points_for_custom.as_deref() },
        opts.seed,
    );

    let result: ExperimentSweep = match values {
        SweepValues::Reals(v) => match kind {
            SweepName::Fig5 => experiments::sweep_source_mean(&v, opts)?,
            _ => experiments::sweep_link_variance(&v, opts)?,
        },
        SweepValues::Counts(n) => experiments::sweep_hop_count(&n, opts)?,
        SweepValues::Custom { .. } => experiments::sweep_custom(points_for_custom.expect("custom points"), opts)?,
    };

    let csv = result.to_csv(&provenance);
    let json = result.to_json(&provenance);
    match &run.out {
        Some(dir) => write_outputs(dir, stem, &csv, &json)?,
        None => print!("{csv}"),
    }
    if let Some(fit) = result.fit {
        eprintln!("fit: slope {:.6} intercept {:.6}", fit.slope, fit.intercept);
    }
    let gate = result.gate();
    eprintln!("gate: {} of {} points at |z| >= {Z_GATE}", gate.exceeded, gate.checked);
    if gate.passed {
        Ok(())
    } else {
        Err(CliError::Gate(format!("{} of {} sweep points exceed {Z_GATE} sigma", gate.exceeded, gate.checked)))
    }
}
