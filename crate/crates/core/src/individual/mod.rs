//! The composite individual: a base network plus the ordered history of
//! perturbation blocks appended to it, with cached semantics.
//!
//! Fitness is computed from cached vectors only. The base network's outputs
//! and hidden activations are evaluated once per base and shared by every
//! descendant; each block carries its own cached contribution; the
//! individual keeps the running sum.

mod materialize;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

pub use materialize::{MaterializedChain, MaterializedNetwork};

use crate::error::{Error, Result};
use crate::gsm::PerturbationBlock;
use crate::nn::{rmse, Dataset, LayerActivations, MlpNetwork, Semantics};

/// Cache updates a lineage may accumulate before its sums are rebuilt from
/// the block caches.
pub const DRIFT_REFRESH_INTERVAL: u32 = 100;

static NEXT_LINEAGE: AtomicU64 = AtomicU64::new(1);

/// Identity of one individual object. Offspring always get a fresh id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LineageId(pub u64);

impl LineageId {
    fn fresh() -> Self {
        LineageId(NEXT_LINEAGE.fetch_add(1, Ordering::Relaxed))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fitness {
    pub train_rmse: f64,
    pub test_rmse: f64,
}

/// Everything about the base network that all descendants share.
#[derive(Debug)]
pub(crate) struct BaseContext {
    net: MlpNetwork,
    train_hidden: Vec<LayerActivations>,
    test_hidden: Vec<LayerActivations>,
    train_semantics: Semantics,
    test_semantics: Semantics,
    train_targets: Vec<f64>,
    test_targets: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CompositeIndividual {
    base: Arc<BaseContext>,
    blocks: Vec<Arc<PerturbationBlock>>,
    sum_train: Semantics,
    sum_test: Semantics,
    train_rmse: f64,
    test_rmse: f64,
    node_count: usize,
    lineage: LineageId,
    updates_since_refresh: u32,
}

impl CompositeIndividual {
    /// Wraps a base network with an empty block list.
    pub fn from_base(net: MlpNetwork, train: &Dataset, test: &Dataset) -> Result<Self> {
        let (train_semantics, train_hidden) = net.forward_with_hidden(train)?;
        let (test_semantics, test_hidden) = net.forward_with_hidden(test)?;
        let train_rmse = rmse(&train_semantics, train.targets())?;
        let test_rmse = rmse(&test_semantics, test.targets())?;
        let node_count = net.neuron_count();
        let base = Arc::new(BaseContext {
            net,
            train_hidden,
            test_hidden,
            train_semantics: train_semantics.clone(),
            test_semantics: test_semantics.clone(),
            train_targets: train.targets().to_vec(),
            test_targets: test.targets().to_vec(),
        });
        Ok(Self {
            base,
            blocks: Vec::new(),
            sum_train: train_semantics,
            sum_test: test_semantics,
            train_rmse,
            test_rmse,
            node_count,
            lineage: LineageId::fresh(),
            updates_since_refresh: 0,
        })
    }

    /// Builds an individual from an explicit base and block list, with the
    /// sums computed from the block caches.
    pub fn from_parts(net: MlpNetwork, blocks: Vec<Arc<PerturbationBlock>>, train: &Dataset, test: &Dataset) -> Result<Self> {
        let empty = Self::from_base(net, train, test)?;
        let (sum_train, sum_test) = empty.sums_from_blocks(&blocks)?;
        empty.derive_with(blocks, sum_train, sum_test, 0)
    }

    pub fn base(&self) -> &MlpNetwork {
        &self.base.net
    }

    pub fn blocks(&self) -> &[Arc<PerturbationBlock>] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Summed training semantics (base plus every block).
    pub fn train_semantics(&self) -> &Semantics {
        &self.sum_train
    }

    pub fn test_semantics(&self) -> &Semantics {
        &self.sum_test
    }

    pub fn base_train_semantics(&self) -> &Semantics {
        &self.base.train_semantics
    }

    pub fn base_test_semantics(&self) -> &Semantics {
        &self.base.test_semantics
    }

    pub fn train_targets(&self) -> &[f64] {
        &self.base.train_targets
    }

    pub fn test_targets(&self) -> &[f64] {
        &self.base.test_targets
    }

    pub(crate) fn train_hidden(&self) -> &[LayerActivations] {
        &self.base.train_hidden
    }

    pub(crate) fn test_hidden(&self) -> &[LayerActivations] {
        &self.base.test_hidden
    }

    pub fn train_rmse(&self) -> f64 {
        self.train_rmse
    }

    pub fn test_rmse(&self) -> f64 {
        self.test_rmse
    }

    pub fn fitness(&self) -> Fitness {
        Fitness {
            train_rmse: self.train_rmse,
            test_rmse: self.test_rmse,
        }
    }

    /// Hidden plus output neurons of the base, plus every chain neuron.
    pub fn size(&self) -> usize {
        self.node_count
    }

    pub fn lineage(&self) -> LineageId {
        self.lineage
    }

    /// Whether `other` shares this individual's base network object.
    pub fn shares_base_with(&self, other: &CompositeIndividual) -> bool {
        Arc::ptr_eq(&self.base, &other.base)
    }

    /// Fitness from the cached sums alone; no network is evaluated.
    pub fn evaluate_incremental(&self) -> Result<Fitness> {
        Ok(Fitness {
            train_rmse: rmse(&self.sum_train, &self.base.train_targets)?,
            test_rmse: rmse(&self.sum_test, &self.base.test_targets)?,
        })
    }

    /// Train and test sums rebuilt from the base and block caches in list
    /// order.
    pub fn recomputed_sums(&self) -> Result<(Semantics, Semantics)> {
        self.sums_from_blocks(&self.blocks)
    }

    fn sums_from_blocks(&self, blocks: &[Arc<PerturbationBlock>]) -> Result<(Semantics, Semantics)> {
        let mut train = self.base.train_semantics.clone();
        let mut test = self.base.test_semantics.clone();
        for b in blocks {
            train.add_assign(b.train_semantics())?;
            test.add_assign(b.test_semantics())?;
        }
        Ok((train, test))
    }

    /// A single network object equivalent to this individual.
    pub fn materialize(&self) -> MaterializedNetwork {
        MaterializedNetwork::new(
            self.base.net.clone(),
            self.blocks
                .iter()
                .map(|b| MaterializedChain {
                    neurons: b.chain().to_vec(),
                    output_weight: b.output_weight(),
                })
                .collect(),
        )
    }

    /// Offspring sharing this individual's base with a new block list and
    /// incrementally updated sums.
    pub(crate) fn derive(&self, blocks: Vec<Arc<PerturbationBlock>>, sum_train: Semantics, sum_test: Semantics) -> Result<Self> {
        self.derive_with(blocks, sum_train, sum_test, self.updates_since_refresh + 1)
    }

    fn derive_with(&self, blocks: Vec<Arc<PerturbationBlock>>, mut sum_train: Semantics, mut sum_test: Semantics, mut updates: u32) -> Result<Self> {
        if sum_train.len() != self.base.train_targets.len() || sum_test.len() != self.base.test_targets.len() {
            return Err(Error::Internal("offspring semantics length mismatch".into()));
        }
        if updates >= DRIFT_REFRESH_INTERVAL {
            (sum_train, sum_test) = self.sums_from_blocks(&blocks)?;
            updates = 0;
        }
        let train_rmse = rmse(&sum_train, &self.base.train_targets)?;
        let test_rmse = rmse(&sum_test, &self.base.test_targets)?;
        let node_count = self.base.net.neuron_count() + blocks.iter().map(|b| b.depth_span()).sum::<usize>();
        Ok(Self {
            base: Arc::clone(&self.base),
            blocks,
            sum_train,
            sum_test,
            train_rmse,
            test_rmse,
            node_count,
            lineage: LineageId::fresh(),
            updates_since_refresh: updates,
        })
    }
}
