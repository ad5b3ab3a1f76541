//! Inflate/deflate geometric semantic mutations.
//!
//! Inflate appends a [`PerturbationBlock`]: a chain with one neuron per base
//! layer whose last neuron is `tanh` and whose output is scaled by a weight
//! drawn from `[0, ms]`, so the offspring's semantics move by at most `ms` on
//! every row. Deflate removes one previously appended block, which subtracts
//! exactly the contribution it once added.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::individual::CompositeIndividual;
use crate::nn::{dot, Activation, Dataset, LayerActivations, MlpNetwork, Semantics};

/// The mutation step: bound on the per-row semantic displacement of a single
/// inflate or deflate.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct MutationStep(f64);

impl MutationStep {
    pub fn new(ms: f64) -> Result<Self> {
        if ms.is_finite() && ms > 0.0 {
            Ok(Self(ms))
        } else {
            Err(Error::config(format!("mutation step must be positive, got {ms}")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// One neuron of a perturbation chain.
///
/// Neuron `i` reads every activation of base layer `i - 1` (layer 0 being the
/// network inputs) and, for `i >= 1`, the previous chain neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainNeuron {
    pub input_weights: Vec<f64>,
    pub recurrent_weight: Option<f64>,
    pub bias: f64,
    pub activation: Activation,
}

impl ChainNeuron {
    pub fn parameter_count(&self) -> usize {
        self.input_weights.len() + usize::from(self.recurrent_weight.is_some()) + 1
    }

    #[inline]
    pub(crate) fn pre_activation(&self, source: &[f64], prev: f64) -> f64 {
        dot(&self.input_weights, source) + self.recurrent_weight.map_or(0.0, |w| w * prev) + self.bias
    }
}

/// A block appended by inflate, with its contribution on both data splits
/// computed once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationBlock {
    chain: Vec<ChainNeuron>,
    output_weight: f64,
    train_semantics: Semantics,
    test_semantics: Semantics,
}

impl PerturbationBlock {
    /// Assembles a block from explicit parameters and evaluates it against the
    /// base activations on both splits.
    ///
    /// Only chain wiring is validated here; the `[-1, 1]` and `[0, ms]`
    /// sampling ranges are a property of [`build_perturbation`], and blocks
    /// rebuilt from fine-tuned weights may leave them.
    pub fn from_parts(
        chain: Vec<ChainNeuron>,
        output_weight: f64,
        base: &MlpNetwork,
        train: (&Dataset, &[LayerActivations]),
        test: (&Dataset, &[LayerActivations]),
    ) -> Result<Self> {
        validate_chain(&chain, base)?;
        if !output_weight.is_finite() {
            return Err(Error::config("block output weight must be finite"));
        }
        let train_semantics = chain_semantics(&chain, output_weight, train.0, train.1)?;
        let test_semantics = chain_semantics(&chain, output_weight, test.0, test.1)?;
        Ok(Self {
            chain,
            output_weight,
            train_semantics,
            test_semantics,
        })
    }

    pub fn chain(&self) -> &[ChainNeuron] {
        &self.chain
    }

    pub fn output_weight(&self) -> f64 {
        self.output_weight
    }

    /// Number of chain neurons.
    pub fn depth_span(&self) -> usize {
        self.chain.len()
    }

    pub fn parameter_count(&self) -> usize {
        self.chain.iter().map(ChainNeuron::parameter_count).sum::<usize>() + 1
    }

    pub fn train_semantics(&self) -> &Semantics {
        &self.train_semantics
    }

    pub fn test_semantics(&self) -> &Semantics {
        &self.test_semantics
    }
}

fn validate_chain(chain: &[ChainNeuron], base: &MlpNetwork) -> Result<()> {
    if chain.is_empty() || chain.len() > base.depth() {
        return Err(Error::config(format!(
            "chain length {} must be in 1..={}",
            chain.len(),
            base.depth()
        )));
    }
    if chain.last().map(|n| n.activation) != Some(Activation::Tanh) {
        return Err(Error::config("the last chain neuron must use tanh"));
    }
    for (i, neuron) in chain.iter().enumerate() {
        let width = source_width(base, i);
        if neuron.input_weights.len() != width {
            return Err(Error::Shape {
                context: "chain neuron input weights",
                expected: width,
                actual: neuron.input_weights.len(),
            });
        }
        if neuron.recurrent_weight.is_some() != (i > 0) {
            return Err(Error::config("only non-first chain neurons carry a recurrent weight"));
        }
        let finite = neuron.input_weights.iter().all(|w| w.is_finite())
            && neuron.bias.is_finite()
            && neuron.recurrent_weight.map_or(true, f64::is_finite);
        if !finite {
            return Err(Error::config("chain weights must be finite"));
        }
    }
    Ok(())
}

/// Width of the base layer feeding chain neuron `i`.
fn source_width(base: &MlpNetwork, i: usize) -> usize {
    if i == 0 {
        base.input_dim()
    } else {
        base.layers()[i - 1].outputs
    }
}

/// `output_weight * chain(x)` for every row of `data`, reading the cached
/// hidden activations of the base network.
fn chain_semantics(chain: &[ChainNeuron], output_weight: f64, data: &Dataset, hidden: &[LayerActivations]) -> Result<Semantics> {
    let n = data.row_count();
    for layer in hidden.iter().take(chain.len().saturating_sub(1)) {
        if layer.rows() != n {
            return Err(Error::Internal(format!(
                "cached activations cover {} rows, dataset has {n}",
                layer.rows()
            )));
        }
    }
    let mut out = Vec::with_capacity(n);
    for r in 0..n {
        let mut h = 0.0;
        for (i, neuron) in chain.iter().enumerate() {
            let src = if i == 0 { data.row(r) } else { hidden[i - 1].row(r) };
            h = neuron.activation.apply(neuron.pre_activation(src, h));
        }
        out.push(output_weight * h);
    }
    Ok(Semantics::new(out))
}

/// Number of chain neurons for a base with `layers` layers (hidden plus
/// output) at the given span fraction: `ceil(fraction * layers)`.
pub fn chain_length(layers: usize, span_fraction: f64) -> usize {
    // tolerance keeps e.g. 0.7 * 10 = 7.000000000000001 at 7
    let raw = span_fraction * layers as f64;
    ((raw - 1e-9).ceil() as usize).clamp(1, layers)
}

pub fn check_span_fraction(span_fraction: f64) -> Result<()> {
    if span_fraction > 0.0 && span_fraction <= 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!("span fraction must be in (0, 1], got {span_fraction}")))
    }
}

/// Samples a new perturbation block for `parent`.
///
/// The chain spans the first `ceil(span_fraction * n)` layers of the parent's
/// base network, where `n` counts hidden layers plus the output layer. Input,
/// recurrent and bias weights are uniform in `[-1, 1]`; non-final neurons
/// draw their activation from `pool`; the final neuron is `tanh`; the output
/// weight is uniform in `[0, ms]`.
pub fn build_perturbation<R: Rng + ?Sized>(
    parent: &CompositeIndividual,
    train: &Dataset,
    test: &Dataset,
    ms: MutationStep,
    span_fraction: f64,
    pool: &[Activation],
    rng: &mut R,
) -> Result<PerturbationBlock> {
    check_span_fraction(span_fraction)?;
    if pool.is_empty() {
        return Err(Error::config("chain activation pool is empty"));
    }
    let base = parent.base();
    let len = chain_length(base.depth(), span_fraction);
    let chain: Vec<ChainNeuron> = (0..len)
        .map(|i| {
            let input_weights = (0..source_width(base, i)).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let recurrent_weight = (i > 0).then(|| rng.gen_range(-1.0..=1.0));
            let bias = rng.gen_range(-1.0..=1.0);
            let activation = if i + 1 == len {
                Activation::Tanh
            } else {
                *pool.choose(rng).expect("pool checked non-empty")
            };
            ChainNeuron {
                input_weights,
                recurrent_weight,
                bias,
                activation,
            }
        })
        .collect();
    let output_weight = rng.gen_range(0.0..=ms.get());
    PerturbationBlock::from_parts(
        chain,
        output_weight,
        base,
        (train, parent.train_hidden()),
        (test, parent.test_hidden()),
    )
}

/// Appends `block` to a copy of `parent`'s block list.
pub fn inflate(parent: &CompositeIndividual, block: impl Into<Arc<PerturbationBlock>>) -> Result<CompositeIndividual> {
    let block = block.into();
    validate_chain(block.chain(), parent.base())?;
    let sum_train = parent.train_semantics().plus(block.train_semantics())?;
    let sum_test = parent.test_semantics().plus(block.test_semantics())?;
    let mut blocks = parent.blocks().to_vec();
    blocks.push(block);
    parent.derive(blocks, sum_train, sum_test)
}

/// Removes the block at `index` from a copy of `parent`.
pub fn deflate(parent: &CompositeIndividual, index: usize) -> Result<CompositeIndividual> {
    let k = parent.block_count();
    if k == 0 {
        return Err(Error::DeflateUnavailable);
    }
    if index >= k {
        return Err(Error::BlockIndex { index, len: k });
    }
    let removed = &parent.blocks()[index];
    let sum_train = parent.train_semantics().minus(removed.train_semantics())?;
    let sum_test = parent.test_semantics().minus(removed.test_semantics())?;
    let mut blocks = parent.blocks().to_vec();
    blocks.remove(index);
    parent.derive(blocks, sum_train, sum_test)
}
