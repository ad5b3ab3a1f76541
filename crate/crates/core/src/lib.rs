//! Population-based neuroevolution of compact feedforward regressors.
//!
//! Individuals are a randomly initialised base MLP plus an ordered list of
//! perturbation blocks. Each inflate mutation appends a small tanh-bounded
//! chain network whose contribution to the output lies in `[-ms, ms]`; each
//! deflate mutation removes one previously appended block. Because blocks
//! never feed back into the base network, every block's output over the
//! training and test rows is computed once and cached, and the fitness of an
//! offspring is obtained by summing cached vectors.
//!
//! Module map:
//!
//! - [`nn`]: dense networks, datasets, forward evaluation, backprop.
//! - [`gsm`]: perturbation blocks and the inflate/deflate operators.
//! - [`individual`]: the composite individual and its semantic caches.
//! - [`evolution`]: selection, generational loop, run driver.
//! - [`trainer`]: a-priori / a-posteriori training and the backprop baseline.
//! - [`harness`]: dataset ingestion, Monte Carlo splits, experiments,
//!   result tables, Wilcoxon signed-rank test, timing summaries.

pub mod error;
pub mod evolution;
pub mod gsm;
pub mod harness;
pub mod individual;
pub mod nn;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
pub use evolution::{AprtMode, EvolutionConfig, EvolutionOutcome, Population, RunRecord};
pub use gsm::{MutationStep, PerturbationBlock};
pub use individual::{CompositeIndividual, MaterializedNetwork};
pub use nn::{Activation, ArchConfig, Dataset, MlpNetwork, OptConfig, Semantics};
