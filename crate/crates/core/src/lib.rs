//! Hierarchical Bayesian analysis of somatic mutation counts.
//!
//! Two complementary models over sparse gene x mutation-type x sample count
//! data with per-cell coverage offsets:
//!
//! * a rate model that estimates per-gene mutation rates under a
//!   Dirichlet-process prior, with no assumption about the passenger rate;
//! * a driver model that, given a known passenger rate, estimates per-gene
//!   driver probabilities and the genome-wide driver proportion.
//!
//! Plus the frequentist baselines (per-gene MLEs, Poisson LRT p-values,
//! Benjamini-Hochberg FDR), a planted-truth simulator, and posterior
//! summaries. All sampling is deterministic given a dataset and a seed.

pub mod baselines;
pub mod config;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod exposure;
pub mod math;
pub mod rng;
pub mod simulator;
pub mod slice;
pub mod summary;

pub mod driver_model;
pub mod rate_model;

pub use config::{load_config, parse_config, ModelConfig};
pub use dataset::{load_dataset, DatasetBuilder, MutationDataset};
pub use engine::{run_chain, ModelKind, Trace, TraceRecord};
pub use error::{Error, Result};
pub use exposure::ExposureCache;
