//! Renewal event streams, recurrence times and statistical checks of the
//! renewal-theory facts the closed forms rest on.
//!
//! Streams are realized lazily: a [`RenewalStream`] only ever holds the last
//! and the next renewal instant, so memory does not grow with the horizon.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionSpec, Moments};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::stats::{z_score, Summary};

/// Smallest path count accepted by the verifiers.
pub const MIN_VERIFY_PATHS: usize = 10_000;

/// A renewal process started at time 0 with `T_0 = 0`.
#[derive(Debug, Clone)]
pub struct RenewalStream {
    spec: DistributionSpec,
    stream_id: u64,
    rng: RngStream,
    count: u64,
    last_event: f64,
    next_event: f64,
}

impl RenewalStream {
    pub fn new(spec: DistributionSpec, stream_id: u64, rng: RngStream) -> Result<Self> {
        spec.validate()?;
        let mut stream = Self { spec, stream_id, rng, count: 0, last_event: 0.0, next_event: 0.0 };
        stream.next_event = stream.after(0.0);
        Ok(stream)
    }

    /// Stream `stream_id` of replication `replication` under `master_seed`.
    pub fn seeded(spec: DistributionSpec, master_seed: u64, replication: u64, stream_id: u64) -> Result<Self> {
        Self::new(spec, stream_id, RngStream::new(master_seed, replication, stream_id))
    }

    fn after(&mut self, t: f64) -> f64 {
        let next = t + self.spec.sample(&mut self.rng);
        // a vanishing gap must still move the clock forward
        if next > t {
            next
        } else {
            t.next_up()
        }
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of renewals consumed so far.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// Time of the last consumed renewal, 0 before the first.
    pub fn last_event(&self) -> f64 {
        self.last_event
    }

    pub fn next_event(&self) -> f64 {
        self.next_event
    }

    /// Consumes the pending renewal and returns its time.
    pub fn pop(&mut self) -> f64 {
        let t = self.next_event;
        self.count += 1;
        self.last_event = t;
        self.next_event = self.after(t);
        t
    }

    /// Yields every renewal in `(cursor, until]`, advancing the stream as the
    /// iterator is driven.
    pub fn advance(&mut self, until: f64) -> Advance<'_> {
        Advance { stream: self, until }
    }

    /// Moves the cursor to `t` and reports the recurrence times there.
    /// `t` must not precede the last consumed renewal.
    pub fn recurrence(&mut self, t: f64) -> RecurrenceView {
        debug_assert!(t >= self.last_event);
        self.advance(t).for_each(drop);
        RecurrenceView { t, count: self.count, backward: t - self.last_event, forward: self.next_event - t }
    }
}

pub struct Advance<'a> {
    stream: &'a mut RenewalStream,
    until: f64,
}

impl Iterator for Advance<'_> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        (self.stream.next_event <= self.until).then(|| self.stream.pop())
    }
}

/// Counting and recurrence quantities of a renewal process at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceView {
    pub t: f64,
    /// `N(t)`
    pub count: u64,
    /// `A(t) = t - T_{N(t)}`
    pub backward: f64,
    /// `B(t) = T_{N(t)+1} - t`
    pub forward: f64,
}

/// Recurrence view of a recorded, strictly increasing event sequence.
pub fn recurrence_at(events: &[f64], t: f64) -> Result<RecurrenceView> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidParameter(format!("t must be >= 0, got {t}")));
    }
    let n = events.partition_point(|&e| e <= t);
    let last = if n == 0 { 0.0 } else { events[n - 1] };
    let next = *events.get(n).ok_or(Error::NoFutureEvent { t })?;
    Ok(RecurrenceView { t, count: n as u64, backward: t - last, forward: next - t })
}

/// Outcome of one Monte Carlo check against an exact target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatCheck {
    pub label: String,
    pub estimate: f64,
    pub target: f64,
    pub std_error: f64,
    pub z: f64,
    pub paths: usize,
}

impl StatCheck {
    fn new(label: String, samples: &[f64], target: f64) -> Self {
        let s = Summary::of(samples);
        Self {
            label,
            estimate: s.mean,
            target,
            std_error: s.std_error,
            z: z_score(s.mean, target, s.std_error),
            paths: samples.len(),
        }
    }

    pub fn passes(&self, sigmas: f64) -> bool {
        self.z.abs() < sigmas
    }
}

fn finite_moments(spec: &DistributionSpec) -> Result<Moments> {
    let m = spec.moments()?;
    if m.has_finite_second_moment() {
        Ok(m)
    } else {
        Err(Error::InfiniteMoment { what: spec.to_string() })
    }
}

fn check_paths(n_paths: usize) -> Result<()> {
    if n_paths < MIN_VERIFY_PATHS {
        return Err(Error::InvalidParameter(format!("at least {MIN_VERIFY_PATHS} paths required, got {n_paths}")));
    }
    Ok(())
}

/// Studentized sample mean of `M(t) = N(t) + 1 - T_{N(t)+1}/μ` at each `t`,
/// whose population mean is exactly zero.
pub fn verify_martingale_zero_mean(
    spec: &DistributionSpec,
    t_grid: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<StatCheck>> {
    let mean = finite_moments(spec)?.mean;
    check_paths(n_paths)?;
    if let Some(&bad) = t_grid.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidParameter(format!("grid time {bad} is not a finite nonnegative number")));
    }

    let mut order: Vec<usize> = (0..t_grid.len()).collect();
    order.sort_by(|&a, &b| t_grid[a].total_cmp(&t_grid[b]));

    let per_path: Vec<Vec<f64>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|path| {
            let mut stream = RenewalStream::seeded(*spec, seed, path, 0).expect("validated");
            let mut values = vec![0.0; t_grid.len()];
            for &i in &order {
                let view = stream.recurrence(t_grid[i]);
                values[i] = (view.count + 1) as f64 - stream.next_event() / mean;
            }
            values
        })
        .collect();

    Ok(t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let samples: Vec<f64> = per_path.iter().map(|v| v[i]).collect();
            StatCheck::new(format!("martingale {spec} t={t}"), &samples, 0.0)
        })
        .collect())
}

/// Evaluation time for one path. Arithmetic streams have a deterministic
/// `A(t)` at any fixed `t`, so for them the time is drawn uniformly over one
/// period past `t_large`, which reads the limit as a time average.
fn evaluation_time(spec: &DistributionSpec, t_large: f64, rng: &mut RngStream) -> f64 {
    match *spec {
        DistributionSpec::Deterministic { c } => t_large + c * rng.open01(),
        _ => t_large,
    }
}

/// Estimates `E[A(t_large)]` against the limit `E[Y²]/(2E[Y])`.
pub fn verify_backward_recurrence_limit(
    spec: &DistributionSpec,
    t_large: f64,
    n_paths: usize,
    seed: u64,
) -> Result<StatCheck> {
    let m = finite_moments(spec)?;
    check_paths(n_paths)?;
    if t_large.is_nan() || t_large < 50.0 * m.mean {
        return Err(Error::InvalidParameter(format!(
            "t_large must be at least 50 x mean ({}), got {t_large}",
            50.0 * m.mean
        )));
    }
    let target = m.mean_backward_recurrence().expect("finite");
    let samples: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map(|path| {
            let mut clock = RngStream::new(seed, path, u64::MAX);
            let t = evaluation_time(spec, t_large, &mut clock);
            RenewalStream::seeded(*spec, seed, path, 0).expect("validated").recurrence(t).backward
        })
        .collect();
    Ok(StatCheck::new(format!("backward recurrence {spec} t={t_large}"), &samples, target))
}

/// Estimates `E[N(t) - N(t - S(t))]` where `N` counts `source` renewals and
/// `S(t)` is the backward recurrence time of an independent `probe` stream,
/// against `(E[S²]/(2E[S])) / E[Y_source]`.
pub fn verify_lemma2(
    source: &DistributionSpec,
    probe: &DistributionSpec,
    t_large: f64,
    n_paths: usize,
    seed: u64,
) -> Result<StatCheck> {
    let ms = finite_moments(source)?;
    let mp = finite_moments(probe)?;
    check_paths(n_paths)?;
    let floor = 50.0 * ms.mean.max(mp.mean);
    if t_large.is_nan() || t_large < floor {
        return Err(Error::InvalidParameter(format!(
            "t_large must be at least 50 x the larger mean ({floor}), got {t_large}"
        )));
    }
    let target = mp.mean_backward_recurrence().expect("finite") / ms.mean;
    let samples: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map(|path| {
            let mut clock = RngStream::new(seed, path, u64::MAX);
            let t = evaluation_time(probe, t_large, &mut clock);
            let lag = RenewalStream::seeded(*probe, seed, path, 1).expect("validated").recurrence(t).backward;
            let mut src = RenewalStream::seeded(*source, seed, path, 0).expect("validated");
            let before = src.recurrence(t - lag).count;
            let after = src.recurrence(t).count;
            (after - before) as f64
        })
        .collect();
    Ok(StatCheck::new(format!("lemma2 source {source} probe {probe} t={t_large}"), &samples, target))
}
