use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;

use config::ConfigError;

#[derive(Debug, Parser)]
#[command(name = "vage", version, about = "Expected version age in gossip cache networks")]
struct Cli {
    /// Worker threads; 0 lets the pool decide. Never changes results.
    #[arg(long, global = true, env = "VAGE_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form expected age per node, with the per-link breakdown.
    Analytic {
        /// Config file, or a built-in name: fig5, fig6, fig7.
        config: String,
        #[arg(long)]
        json: bool,
    },
    /// Monte Carlo estimate at the configured targets.
    Simulate {
        config: String,
        #[command(flatten)]
        run: RunFlags,
        /// Comma-separated node names; overrides the config.
        #[arg(long, value_delimiter = ',')]
        targets: Option<Vec<String>>,
    },
    /// Renewal checks: martingale, backward recurrence, and optionally the
    /// counting lemma against a probe stream. Exits 2 if any |z| >= 4.
    Verify {
        /// Distributions such as `Exponential(1)` or `ParetoI(3, 0.5)`.
        #[arg(required = true)]
        dists: Vec<vage::distributions::DistributionSpec>,
        /// Probe stream for the lemma check, each DIST acting as source.
        #[arg(long)]
        probe: Option<vage::distributions::DistributionSpec>,
        #[arg(long, value_delimiter = ',', default_values_t = [10.0, 100.0])]
        t_grid: Vec<f64>,
        /// Evaluation time for the limit checks, in multiples of the larger mean.
        #[arg(long, default_value_t = 200.0)]
        t_large: f64,
        #[arg(long, default_value_t = 50_000)]
        paths: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Parameter sweep against the closed form. Exits 2 if the z-gate fails.
    Sweep {
        kind: SweepName,
        #[command(flatten)]
        run: RunFlags,
        /// Source scale values for fig5 (fractions like 1/3 allowed).
        #[arg(long, value_delimiter = ',', value_parser = parse_real)]
        m: Option<Vec<f64>>,
        /// Hop counts for fig6: a list or an inclusive range like 1..6.
        #[arg(long, value_parser = parse_counts)]
        n: Option<Counts>,
        /// Link variances for fig7.
        #[arg(long, value_delimiter = ',', value_parser = parse_real)]
        v: Option<Vec<f64>>,
        /// Config whose string value "$param" is replaced by each value (custom).
        #[arg(long)]
        template: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', value_parser = parse_real)]
        values: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SweepName {
    Fig5,
    Fig6,
    Fig7,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EstimatorArg {
    Terminal,
    TimeAverage,
}

impl From<EstimatorArg> for vage::simulator::Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Terminal => Self::Terminal,
            EstimatorArg::TimeAverage => Self::TimeAverage,
        }
    }
}

#[derive(Debug, Args)]
struct RunFlags {
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    estimator: Option<EstimatorArg>,
    /// Directory for the CSV and JSON outputs; without it the CSV goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
struct Counts(Vec<u32>);

fn parse_real(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let value = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("bad number `{s}`"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("bad number `{s}`"))?;
            a / b
        }
        None => s.parse().map_err(|_| format!("bad number `{s}`"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_counts(s: &str) -> Result<Counts, String> {
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u32 = lo.trim().parse().map_err(|_| format!("bad range `{s}`"))?;
        let hi: u32 = hi.trim().trim_start_matches('=').parse().map_err(|_| format!("bad range `{s}`"))?;
        if lo > hi {
            return Err(format!("empty range `{s}`"));
        }
        return Ok(Counts((lo..=hi).collect()));
    }
    s.split(',').map(|p| p.trim().parse().map_err(|_| format!("bad count `{p}`"))).collect::<Result<_, _>>().map(Counts)
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] vage::Error),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("statistical gate failed: {0}")]
    Gate(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Gate(_) => 2,
            _ => 1,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
