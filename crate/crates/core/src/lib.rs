//! Version age of information in multi-hop cache networks.
//!
//! A source produces numbered versions at the renewals of one renewal
//! process; every link of a cache network forwards its sender's current
//! version at the renewals of its own process. This crate simulates such
//! networks event by event and evaluates the closed-form long-run expected
//! version age for tree topologies, where the age at a node is the sum of
//! `E[Y²]/(2E[Y])` over the links on its path, divided by the mean source
//! inter-update time.
//!
//! ```
//! use vage::{analytic, distributions::DistributionSpec, network::{CacheNetwork, NetworkSpec}};
//!
//! let chain = NetworkSpec::chain(
//!     DistributionSpec::Exponential { rate: 1.0 },
//!     &[DistributionSpec::Uniform { lo: 0.0, hi: 2.0 }; 2],
//! );
//! let net = CacheNetwork::new(&chain).unwrap();
//! let ages = analytic::expected_version_age(&net).unwrap();
//! assert!((ages.age_of("n2").unwrap() - 4.0 / 3.0).abs() < 1e-12);
//! ```

pub mod analytic;
pub mod distributions;
pub mod error;
pub mod experiments;
pub mod network;
pub mod renewal;
pub mod rng;
pub mod simulator;
pub mod stats;

pub use error::{Error, Result};
