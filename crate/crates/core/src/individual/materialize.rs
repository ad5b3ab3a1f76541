use std::sync::Arc;

use super::CompositeIndividual;
use crate::error::{Error, Result};
use crate::gsm::{ChainNeuron, PerturbationBlock};
use crate::nn::{BackpropScratch, Dataset, MlpNetwork, Semantics, Trainable};

#[derive(Debug, Clone, PartialEq)]
pub struct MaterializedChain {
    pub neurons: Vec<ChainNeuron>,
    pub output_weight: f64,
}

/// A composite individual flattened into one evaluable network:
/// `base(x) + sum_j output_weight_j * chain_j(x)`.
///
/// Every output is recomputed from weights on each call, so this is the
/// reference the cached evaluation is checked against, and the object that
/// a-posteriori training fine-tunes.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterializedNetwork {
    base: MlpNetwork,
    chains: Vec<MaterializedChain>,
}

impl MaterializedNetwork {
    pub fn new(base: MlpNetwork, chains: Vec<MaterializedChain>) -> Self {
        Self { base, chains }
    }

    pub fn base(&self) -> &MlpNetwork {
        &self.base
    }

    pub fn chains(&self) -> &[MaterializedChain] {
        &self.chains
    }

    pub fn node_count(&self) -> usize {
        self.base.neuron_count() + self.chains.iter().map(|c| c.neurons.len()).sum::<usize>()
    }

    pub fn parameter_count(&self) -> usize {
        self.base.parameter_count()
            + self
                .chains
                .iter()
                .map(|c| c.neurons.iter().map(ChainNeuron::parameter_count).sum::<usize>() + 1)
                .sum::<usize>()
    }

    fn check_chains(&self) -> Result<()> {
        for c in &self.chains {
            if c.neurons.is_empty() || c.neurons.len() > self.base.depth() {
                return Err(Error::config("chain length exceeds base depth"));
            }
        }
        Ok(())
    }

    /// Output on every row of `data`.
    pub fn forward(&self, data: &Dataset) -> Result<Semantics> {
        self.base.check_input(data)?;
        self.check_chains()?;
        let mut scratch = BackpropScratch::new(&self.base);
        let mut hs = Vec::new();
        let out = (0..data.row_count())
            .map(|r| {
                let x = data.row(r);
                let mut y = scratch.forward(&self.base, x);
                for chain in &self.chains {
                    chain_forward(chain, x, &scratch.out, &mut hs);
                    y += chain.output_weight * hs.last().expect("non-empty chain").1;
                }
                y
            })
            .collect();
        Ok(Semantics::new(out))
    }

    /// Rebuilds a composite individual (fresh caches) from these weights.
    pub fn into_individual(self, train: &Dataset, test: &Dataset) -> Result<CompositeIndividual> {
        let wrapped = CompositeIndividual::from_base(self.base.clone(), train, test)?;
        let blocks = self
            .chains
            .into_iter()
            .map(|c| {
                PerturbationBlock::from_parts(
                    c.neurons,
                    c.output_weight,
                    wrapped.base(),
                    (train, wrapped.train_hidden()),
                    (test, wrapped.test_hidden()),
                )
                .map(Arc::new)
            })
            .collect::<Result<Vec<_>>>()?;
        CompositeIndividual::from_parts(self.base, blocks, train, test)
    }
}

/// Evaluates one chain for one row; fills `hs` with `(z, h)` per neuron.
fn chain_forward(chain: &MaterializedChain, x: &[f64], base_out: &[Vec<f64>], hs: &mut Vec<(f64, f64)>) {
    hs.clear();
    let mut prev = 0.0;
    for (i, n) in chain.neurons.iter().enumerate() {
        let src: &[f64] = if i == 0 { x } else { &base_out[i - 1] };
        let z = n.pre_activation(src, prev);
        prev = n.activation.apply(z);
        hs.push((z, prev));
    }
}

impl Trainable for MaterializedNetwork {
    /// Base parameters in canonical order, then for each chain its neurons'
    /// input weights, recurrent weight (if any) and bias, then its output
    /// weight.
    fn parameters(&self) -> Vec<f64> {
        let mut p = self.base.parameters();
        for c in &self.chains {
            for n in &c.neurons {
                p.extend_from_slice(&n.input_weights);
                p.extend(n.recurrent_weight);
                p.push(n.bias);
            }
            p.push(c.output_weight);
        }
        p
    }

    fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(Error::Shape {
                context: "materialized parameter vector",
                expected: self.parameter_count(),
                actual: params.len(),
            });
        }
        let nb = self.base.parameter_count();
        self.base.set_parameters(&params[..nb])?;
        let mut off = nb;
        for c in &mut self.chains {
            for n in &mut c.neurons {
                let k = n.input_weights.len();
                n.input_weights.copy_from_slice(&params[off..off + k]);
                off += k;
                if let Some(w) = n.recurrent_weight.as_mut() {
                    *w = params[off];
                    off += 1;
                }
                n.bias = params[off];
                off += 1;
            }
            c.output_weight = params[off];
            off += 1;
        }
        Ok(())
    }

    fn loss_and_gradient(&self, data: &Dataset) -> Result<(f64, Vec<f64>)> {
        self.base.check_input(data)?;
        self.check_chains()?;
        let n = data.row_count() as f64;
        let mut grad = vec![0.0; self.parameter_count()];
        let mut scratch = BackpropScratch::new(&self.base);
        let mut per_chain: Vec<Vec<(f64, f64)>> = vec![Vec::new(); self.chains.len()];
        let mut sse = 0.0;
        for r in 0..data.row_count() {
            let x = data.row(r);
            let mut y = scratch.forward(&self.base, x);
            for (chain, hs) in self.chains.iter().zip(per_chain.iter_mut()) {
                chain_forward(chain, x, &scratch.out, hs);
                y += chain.output_weight * hs.last().expect("non-empty chain").1;
            }
            let err = y - data.targets()[r];
            sse += err * err;
            let dy = 2.0 * err / n;

            scratch.clear_deltas();
            let mut off = self.base.parameter_count();
            for (chain, hs) in self.chains.iter().zip(&per_chain) {
                // parameter offsets of each neuron within this chain
                let mut starts = Vec::with_capacity(chain.neurons.len());
                for nr in &chain.neurons {
                    starts.push(off);
                    off += nr.parameter_count();
                }
                let ow_idx = off;
                off += 1;
                let h_last = hs.last().expect("non-empty chain").1;
                grad[ow_idx] += dy * h_last;
                let mut dh = dy * chain.output_weight;
                for i in (0..chain.neurons.len()).rev() {
                    let nr = &chain.neurons[i];
                    let (z, h) = hs[i];
                    let dz = dh * nr.activation.derivative(z, h);
                    let s = starts[i];
                    let k = nr.input_weights.len();
                    if i == 0 {
                        for (g, a) in grad[s..s + k].iter_mut().zip(x) {
                            *g += dz * a;
                        }
                    } else {
                        for (g, a) in grad[s..s + k].iter_mut().zip(&scratch.out[i - 1]) {
                            *g += dz * a;
                        }
                        let delta = &mut scratch.delta[i - 1];
                        for (d, w) in delta.iter_mut().zip(&nr.input_weights) {
                            *d += dz * w;
                        }
                    }
                    let mut p = s + k;
                    if let Some(rw) = nr.recurrent_weight {
                        grad[p] += dz * hs[i - 1].1;
                        p += 1;
                        dh = dz * rw;
                    } else {
                        dh = 0.0;
                    }
                    grad[p] += dz;
                }
            }
            scratch.backward(&self.base, x, dy, &mut grad, 0);
        }
        Ok((sse / n, grad))
    }
}
