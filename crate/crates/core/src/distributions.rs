//! Inter-renewal time distributions.
//!
//! A [`DistributionSpec`] is a plain value: it knows its exact first and
//! second moments and how to turn a uniform stream into variates. Every
//! variant with a closed-form quantile is sampled by inverse transform, so a
//! draw is a fixed function of the stream position. Chi-square and beta
//! variates are built from rejection or Box-Muller steps and may consume a
//! variable number of uniforms; that is harmless because each renewal process
//! owns its stream.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// An inter-renewal time distribution.
///
/// In config files this is an object tagged by `type`:
///
/// ```json
/// { "type": "pareto1", "a": 3.0, "m": 0.3333333333333333 }
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Exponential {
        rate: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    Rayleigh {
        sigma: f64,
    },
    ChiSquare {
        k: u32,
    },
    Beta {
        alpha: f64,
        beta: f64,
    },
    /// Pareto type I with shape `a` and scale (minimum) `m`.
    #[serde(rename = "pareto1")]
    ParetoI {
        #[serde(alias = "shape")]
        a: f64,
        #[serde(alias = "scale")]
        m: f64,
    },
    Deterministic {
        c: f64,
    },
}

/// Exact first and second moments. An infinite second moment is stored as
/// `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub second_moment: f64,
}

impl Moments {
    pub fn has_finite_second_moment(&self) -> bool {
        self.second_moment.is_finite()
    }

    pub fn variance(&self) -> f64 {
        self.second_moment - self.mean * self.mean
    }

    /// `E[Y²] / (2 E[Y])`, the limiting mean backward recurrence time.
    /// `None` when the second moment diverges.
    pub fn mean_backward_recurrence(&self) -> Option<f64> {
        self.has_finite_second_moment().then(|| self.second_moment / (2.0 * self.mean))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be a positive finite number, got {v}")))
    }
}

impl DistributionSpec {
    /// Uniform on `[1 - √(3v), 1 + √(3v)]`: mean one, variance `v`.
    pub fn uniform_unit_mean(variance: f64) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0 && variance <= 1.0 / 3.0 + 1e-15) {
            return Err(Error::InvalidParameter(format!("unit-mean uniform needs 0 < v <= 1/3, got {variance}")));
        }
        let half = (3.0 * variance).sqrt();
        Ok(Self::Uniform { lo: (1.0 - half).max(0.0), hi: 1.0 + half })
    }

    pub fn validate(&self) -> Result<()> {
        use DistributionSpec::*;
        match *self {
            Exponential { rate } => positive("exponential rate", rate),
            Uniform { lo, hi } => {
                if !(lo.is_finite() && lo >= 0.0) {
                    return Err(Error::InvalidParameter(format!("uniform lo must be >= 0, got {lo}")));
                }
                if !(hi.is_finite() && hi > lo) {
                    return Err(Error::InvalidParameter(format!("uniform hi must exceed lo ({lo}), got {hi}")));
                }
                Ok(())
            }
            Rayleigh { sigma } => positive("rayleigh sigma", sigma),
            ChiSquare { k } => {
                if k == 0 {
                    Err(Error::InvalidParameter("chi-square k must be a positive integer".into()))
                } else {
                    Ok(())
                }
            }
            Beta { alpha, beta } => {
                positive("beta alpha", alpha)?;
                positive("beta beta", beta)
            }
            ParetoI { a, m } => {
                positive("pareto shape a", a)?;
                positive("pareto scale m", m)?;
                if a <= 1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "pareto shape a must exceed 1 for a finite mean, got {a}"
                    )));
                }
                Ok(())
            }
            Deterministic { c } => positive("deterministic c", c),
        }
    }

    /// Lattice-supported distributions, outside the hypotheses of the
    /// renewal limit theorems.
    pub fn is_arithmetic(&self) -> bool {
        matches!(self, DistributionSpec::Deterministic { .. })
    }

    pub fn moments(&self) -> Result<Moments> {
        use DistributionSpec::*;
        self.validate()?;
        let (mean, second_moment) = match *self {
            Exponential { rate } => (1.0 / rate, 2.0 / (rate * rate)),
            Uniform { lo, hi } => ((lo + hi) / 2.0, (lo * lo + lo * hi + hi * hi) / 3.0),
            Rayleigh { sigma } => (sigma * (PI / 2.0).sqrt(), 2.0 * sigma * sigma),
            ChiSquare { k } => {
                let k = f64::from(k);
                (k, k * (k + 2.0))
            }
            Beta { alpha, beta } => {
                let s = alpha + beta;
                (alpha / s, alpha * (alpha + 1.0) / (s * (s + 1.0)))
            }
            ParetoI { a, m } => {
                let second = if a > 2.0 { a * m * m / (a - 2.0) } else { f64::INFINITY };
                (a * m / (a - 1.0), second)
            }
            Deterministic { c } => (c, c * c),
        };
        Ok(Moments { mean, second_moment })
    }

    /// Closed-form quantile where one exists. `u` is in (0, 1).
    pub fn quantile(&self, u: f64) -> Option<f64> {
        use DistributionSpec::*;
        match *self {
            Exponential { rate } => Some(-(-u).ln_1p() / rate),
            Uniform { lo, hi } => Some(lo + u * (hi - lo)),
            Rayleigh { sigma } => Some(sigma * (-2.0 * (-u).ln_1p()).sqrt()),
            ParetoI { a, m } => Some(m * (-(-u).ln_1p() / a).exp()),
            Deterministic { c } => Some(c),
            ChiSquare { .. } | Beta { .. } => None,
        }
    }

    /// One draw. The spec must already be valid.
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        use DistributionSpec::*;
        match *self {
            Deterministic { c } => c,
            ChiSquare { k } => sample_chi_square(k, rng),
            Beta { alpha, beta } => sample_beta(alpha, beta, rng),
            _ => {
                let u = rng.open01();
                self.quantile(u).expect("closed-form quantile")
            }
        }
    }
}

/// Sum of `k` squared standard normals, drawn in Box-Muller pairs.
fn sample_chi_square(k: u32, rng: &mut RngStream) -> f64 {
    let mut acc = 0.0;
    let mut left = k;
    while left > 0 {
        let r = (-2.0 * rng.open01().ln()).sqrt();
        let theta = TAU * rng.open01();
        let z1 = r * theta.cos();
        acc += z1 * z1;
        left -= 1;
        if left > 0 {
            let z2 = r * theta.sin();
            acc += z2 * z2;
            left -= 1;
        }
    }
    acc
}

/// Cheng's BB (both shapes above one) and BC (otherwise) rejection samplers.
fn sample_beta(alpha: f64, beta: f64, rng: &mut RngStream) -> f64 {
    let (a, b) = if alpha < beta { (alpha, beta) } else { (beta, alpha) };
    let swapped = alpha >= beta;
    let sum = a + b;

    let (w, b) = if a > 1.0 {
        // BB: a = min shape, b = max shape
        let bb = ((sum - 2.0) / (2.0 * a * b - sum)).sqrt();
        let gamma = a + 1.0 / bb;
        loop {
            let u1 = rng.open01();
            let u2 = rng.open01();
            let v = bb * (u1 / (1.0 - u1)).ln();
            let w = a * v.exp();
            let z = u1 * u1 * u2;
            let r = gamma * v - 4f64.ln();
            let s = a + r - w;
            if s + 2.609_437_912_434_1 >= 5.0 * z {
                break (w, b);
            }
            let t = z.ln();
            if s > t || r + sum * (sum / (b + w)).ln() >= t {
                break (w, b);
            }
        }
    } else {
        // BC: here the roles flip, a = max shape, b = min shape
        let (a, b) = (b, a);
        let beta_c = 1.0 / b;
        let delta = 1.0 + a - b;
        let k1 = delta * (0.013_888_9 + 0.041_666_7 * b) / (a * beta_c - 0.777_778);
        let k2 = 0.25 + (0.5 + 0.25 / delta) * b;
        let w = loop {
            let u1 = rng.open01();
            let u2 = rng.open01();
            let z;
            if u1 < 0.5 {
                let y = u1 * u2;
                z = u1 * y;
                if 0.25 * u2 + z - y >= k1 {
                    continue;
                }
            } else {
                z = u1 * u1 * u2;
                if z <= 0.25 {
                    let v = beta_c * (u1 / (1.0 - u1)).ln();
                    break a * v.exp();
                }
                if z >= k2 {
                    continue;
                }
            }
            let v = beta_c * (u1 / (1.0 - u1)).ln();
            let w = a * v.exp();
            if sum * ((sum / (b + w)).ln() + v) - 1.386_294_4 >= z.ln() {
                break w;
            }
        };
        // w belongs to the larger shape here
        return finish_beta(w, b, !swapped);
    };
    finish_beta(w, b, swapped)
}

/// Maps Cheng's `w` to the variate, `b/(b+w)` when the shapes were swapped.
fn finish_beta(w: f64, b: f64, swapped: bool) -> f64 {
    let x = if swapped {
        b / (b + w)
    } else if w.is_infinite() {
        1.0
    } else {
        w / (b + w)
    };
    x.max(f64::MIN_POSITIVE)
}

/// Parses the [`Display`](fmt::Display) form, e.g. `Uniform(0, 2)` or
/// `pareto1(3, 0.5)`. Names are case-insensitive and ignore `_`.
impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse distribution `{s}`"));
        let s = s.trim();
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let args = rest.trim_end().strip_suffix(')').ok_or_else(bad)?;
        let args: Vec<f64> = if args.trim().is_empty() {
            Vec::new()
        } else {
            args.split(',').map(|a| a.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?
        };
        let name = name.trim().to_ascii_lowercase().replace('_', "");
        let spec = match (name.as_str(), args.as_slice()) {
            ("exponential" | "exp", &[rate]) => DistributionSpec::Exponential { rate },
            ("uniform", &[lo, hi]) => DistributionSpec::Uniform { lo, hi },
            ("rayleigh", &[sigma]) => DistributionSpec::Rayleigh { sigma },
            ("chisquare", &[k]) if k.fract() == 0.0 && k >= 0.0 && k <= f64::from(u32::MAX) => {
                DistributionSpec::ChiSquare { k: k as u32 }
            }
            ("beta", &[alpha, beta]) => DistributionSpec::Beta { alpha, beta },
            ("paretoi" | "pareto1" | "pareto", &[a, m]) => DistributionSpec::ParetoI { a, m },
            ("deterministic" | "det", &[c]) => DistributionSpec::Deterministic { c },
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use DistributionSpec::*;
        match self {
            Exponential { rate } => write!(f, "Exponential({rate})"),
            Uniform { lo, hi } => write!(f, "Uniform({lo}, {hi})"),
            Rayleigh { sigma } => write!(f, "Rayleigh({sigma})"),
            ChiSquare { k } => write!(f, "ChiSquare({k})"),
            Beta { alpha, beta } => write!(f, "Beta({alpha}, {beta})"),
            ParetoI { a, m } => write!(f, "ParetoI({a}, {m})"),
            Deterministic { c } => write!(f, "Deterministic({c})"),
        }
    }
}
