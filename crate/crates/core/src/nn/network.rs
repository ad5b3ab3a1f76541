use rand::seq::SliceRandom;
use rand::Rng;

use super::{Activation, Dataset, LayerActivations, Semantics};
use crate::error::{Error, Result};

/// One fully connected layer. `weights` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activations: Vec<Activation>,
}

impl DenseLayer {
    pub fn new(
        inputs: usize,
        outputs: usize,
        weights: Vec<f64>,
        biases: Vec<f64>,
        activations: Vec<Activation>,
    ) -> Result<Self> {
        if outputs == 0 || inputs == 0 {
            return Err(Error::config("layers need at least one input and one output"));
        }
        if weights.len() != inputs * outputs {
            return Err(Error::Shape {
                context: "layer weights",
                expected: inputs * outputs,
                actual: weights.len(),
            });
        }
        if biases.len() != outputs {
            return Err(Error::Shape {
                context: "layer biases",
                expected: outputs,
                actual: biases.len(),
            });
        }
        if activations.len() != outputs {
            return Err(Error::Shape {
                context: "layer activations",
                expected: outputs,
                actual: activations.len(),
            });
        }
        Ok(Self {
            inputs,
            outputs,
            weights,
            biases,
            activations,
        })
    }

    #[inline]
    pub fn weight_row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }

    #[inline]
    pub(crate) fn forward_row(&self, input: &[f64], pre: &mut [f64], out: &mut [f64]) {
        for o in 0..self.outputs {
            let z = dot(self.weight_row(o), input) + self.biases[o];
            pre[o] = z;
            out[o] = self.activations[o].apply(z);
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dense feedforward regressor with a single identity output neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNetwork {
    input_dim: usize,
    layers: Vec<DenseLayer>,
}

impl MlpNetwork {
    pub fn new(input_dim: usize, layers: Vec<DenseLayer>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::config("input_dim must be at least 1"));
        }
        let Some(last) = layers.last() else {
            return Err(Error::config("a network needs at least an output layer"));
        };
        if last.outputs != 1 || last.activations[0] != Activation::Identity {
            return Err(Error::config("output layer must be a single identity neuron"));
        }
        let mut width = input_dim;
        for layer in &layers {
            if layer.inputs != width {
                return Err(Error::Shape {
                    context: "layer input width",
                    expected: width,
                    actual: layer.inputs,
                });
            }
            width = layer.outputs;
        }
        if layers
            .iter()
            .any(|l| l.weights.iter().chain(&l.biases).any(|v| !v.is_finite()))
        {
            return Err(Error::config("network weights must be finite"));
        }
        Ok(Self { input_dim, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    /// Layers including the output layer.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1].iter().map(|l| l.outputs).collect()
    }

    /// Hidden plus output neurons; inputs are not counted.
    pub fn neuron_count(&self) -> usize {
        self.layers.iter().map(|l| l.outputs).sum()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Flat parameter vector. Canonical order: for each layer from input to
    /// output, its weights row by row (`weights[o * inputs + i]`), then its
    /// biases.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            p.extend_from_slice(&l.weights);
            p.extend_from_slice(&l.biases);
        }
        p
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(Error::Shape {
                context: "parameter vector",
                expected: self.parameter_count(),
                actual: params.len(),
            });
        }
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&params[off..off + nw]);
            off += nw;
            let nb = l.biases.len();
            l.biases.copy_from_slice(&params[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    pub(crate) fn check_input(&self, data: &Dataset) -> Result<()> {
        if data.feature_count() != self.input_dim {
            return Err(Error::Shape {
                context: "dataset features vs network inputs",
                expected: self.input_dim,
                actual: data.feature_count(),
            });
        }
        Ok(())
    }

    /// Output on every row of `data`.
    pub fn forward(&self, data: &Dataset) -> Result<Semantics> {
        Ok(self.forward_with_hidden(data)?.0)
    }

    /// Output on every row plus the post-activation values of every hidden
    /// layer (the output layer is not included in the second element).
    pub fn forward_with_hidden(&self, data: &Dataset) -> Result<(Semantics, Vec<LayerActivations>)> {
        self.check_input(data)?;
        let n = data.row_count();
        let hidden = &self.layers[..self.layers.len() - 1];
        let mut acts: Vec<LayerActivations> = hidden
            .iter()
            .map(|l| LayerActivations {
                width: l.outputs,
                values: vec![0.0; n * l.outputs],
            })
            .collect();
        let max_w = self.layers.iter().map(|l| l.outputs).max().unwrap_or(1);
        let mut pre = vec![0.0; max_w];
        let mut out = vec![0.0; n];
        let mut cur: Vec<f64> = Vec::with_capacity(max_w);
        let mut next = vec![0.0; max_w];
        for r in 0..n {
            cur.clear();
            cur.extend_from_slice(data.row(r));
            for (li, layer) in self.layers.iter().enumerate() {
                let w = layer.outputs;
                layer.forward_row(&cur, &mut pre[..w], &mut next[..w]);
                if li < hidden.len() {
                    acts[li].values[r * w..(r + 1) * w].copy_from_slice(&next[..w]);
                }
                cur.clear();
                cur.extend_from_slice(&next[..w]);
            }
            out[r] = cur[0];
        }
        Ok((Semantics::new(out), acts))
    }
}

/// Sampling ranges for random base networks. All bounds are inclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchConfig {
    pub depth: (usize, usize),
    pub width: (usize, usize),
    pub weight_range: (f64, f64),
    pub activation_pool: Vec<Activation>,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            depth: (1, 3),
            width: (4, 16),
            weight_range: (-1.0, 1.0),
            activation_pool: vec![Activation::Tanh, Activation::ReLU, Activation::Sigmoid],
        }
    }
}

impl ArchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth.0 > self.depth.1 {
            return Err(Error::config(format!("empty depth range {:?}", self.depth)));
        }
        if self.width.0 == 0 || self.width.0 > self.width.1 {
            return Err(Error::config(format!("empty width range {:?}", self.width)));
        }
        let (lo, hi) = self.weight_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::config(format!("empty weight range {:?}", self.weight_range)));
        }
        if self.activation_pool.is_empty() {
            return Err(Error::config("activation pool is empty"));
        }
        Ok(())
    }
}

/// Samples a network: depth, each hidden width and each hidden activation are
/// uniform over their ranges; weights and biases are uniform in the weight
/// range; the output is one identity neuron.
pub fn random_mlp<R: Rng + ?Sized>(input_dim: usize, arch: &ArchConfig, rng: &mut R) -> Result<MlpNetwork> {
    arch.validate()?;
    if input_dim == 0 {
        return Err(Error::config("input_dim must be at least 1"));
    }
    let (lo, hi) = arch.weight_range;
    let draw = |rng: &mut R| if lo == hi { lo } else { rng.gen_range(lo..=hi) };
    let depth = rng.gen_range(arch.depth.0..=arch.depth.1);
    let mut layers = Vec::with_capacity(depth + 1);
    let mut width_in = input_dim;
    for _ in 0..depth {
        let w = rng.gen_range(arch.width.0..=arch.width.1);
        let weights = (0..w * width_in).map(|_| draw(rng)).collect();
        let biases = (0..w).map(|_| draw(rng)).collect();
        let activations = (0..w)
            .map(|_| *arch.activation_pool.choose(rng).expect("pool checked non-empty"))
            .collect();
        layers.push(DenseLayer::new(width_in, w, weights, biases, activations)?);
        width_in = w;
    }
    let weights = (0..width_in).map(|_| draw(rng)).collect();
    let bias = vec![draw(rng)];
    layers.push(DenseLayer::new(width_in, 1, weights, bias, vec![Activation::Identity])?);
    MlpNetwork::new(input_dim, layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn degenerate_ranges_force_shape() {
        let arch = ArchConfig {
            depth: (1, 1),
            width: (3, 3),
            ..ArchConfig::default()
        };
        let net = random_mlp(5, &arch, &mut rng(1)).unwrap();
        let shapes: Vec<(usize, usize)> = net.layers().iter().map(|l| (l.inputs, l.outputs)).collect();
        assert_eq!(shapes, vec![(5, 3), (3, 1)]);
        assert_eq!(net.layers()[1].activations, vec![Activation::Identity]);
    }

    #[test]
    fn zero_weight_range_gives_zero_semantics() {
        let arch = ArchConfig {
            weight_range: (0.0, 0.0),
            ..ArchConfig::default()
        };
        let net = random_mlp(3, &arch, &mut rng(2)).unwrap();
        let data = Dataset::from_rows(&[vec![1.0, 2.0, 3.0], vec![-4.0, 0.5, 9.0]], &[0.0, 0.0]).unwrap();
        let out = net.forward(&data).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn depth_sampling_is_uniform() {
        let arch = ArchConfig::default();
        let mut r = rng(3);
        let mut counts = [0usize; 3];
        for _ in 0..1000 {
            let net = random_mlp(2, &arch, &mut r).unwrap();
            counts[net.depth() - 2] += 1;
        }
        for c in counts {
            let f = c as f64 / 1000.0;
            assert!((0.28..=0.39).contains(&f), "{counts:?}");
        }
    }

    #[test]
    fn empty_ranges_are_config_errors() {
        let mut r = rng(4);
        let bad = [
            ArchConfig { depth: (3, 1), ..ArchConfig::default() },
            ArchConfig { width: (0, 4), ..ArchConfig::default() },
            ArchConfig { width: (5, 4), ..ArchConfig::default() },
            ArchConfig { weight_range: (1.0, -1.0), ..ArchConfig::default() },
            ArchConfig { activation_pool: vec![], ..ArchConfig::default() },
        ];
        for arch in bad {
            assert!(matches!(random_mlp(2, &arch, &mut r), Err(Error::Config(_))));
        }
    }

    #[test]
    fn linear_identity_example() {
        let layer = DenseLayer::new(2, 1, vec![1.0, 1.0], vec![0.0], vec![Activation::Identity]).unwrap();
        let net = MlpNetwork::new(2, vec![layer]).unwrap();
        let data = Dataset::from_rows(&[vec![2.0, 3.0], vec![0.0, 0.0]], &[0.0, 0.0]).unwrap();
        assert_eq!(net.forward(&data).unwrap()[0], 5.0);
    }

    #[test]
    fn dimension_mismatch_is_shape_error() {
        let net = random_mlp(4, &ArchConfig::default(), &mut rng(5)).unwrap();
        let data = Dataset::from_rows(&[vec![1.0], vec![2.0]], &[0.0, 0.0]).unwrap();
        assert!(matches!(net.forward(&data), Err(Error::Shape { .. })));
    }

    #[test]
    fn matches_scalar_loop_oracle() {
        let mut r = rng(6);
        let arch = ArchConfig {
            depth: (1, 1),
            width: (4, 4),
            activation_pool: vec![Activation::Tanh],
            ..ArchConfig::default()
        };
        let net = random_mlp(5, &arch, &mut r).unwrap();
        let rows: Vec<Vec<f64>> = (0..10).map(|_| (0..5).map(|_| r.gen_range(-2.0..2.0)).collect()).collect();
        let data = Dataset::from_rows(&rows, &[0.0; 10]).unwrap();
        let out = net.forward(&data).unwrap();
        let (h, o) = (&net.layers()[0], &net.layers()[1]);
        for (i, x) in rows.iter().enumerate() {
            let mut y = o.biases[0];
            for j in 0..4 {
                let mut z = h.biases[j];
                for k in 0..5 {
                    z += h.weights[j * 5 + k] * x[k];
                }
                y += o.weights[j] * z.tanh();
            }
            assert!((out[i] - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn forward_is_deterministic_and_params_round_trip() {
        let mut r = rng(7);
        let mut net = random_mlp(3, &ArchConfig::default(), &mut r).unwrap();
        let data = Dataset::from_rows(&[vec![0.1, 0.2, 0.3], vec![1.0, -1.0, 0.5]], &[0.0, 1.0]).unwrap();
        assert_eq!(net.forward(&data).unwrap(), net.forward(&data).unwrap());
        let p = net.parameters();
        assert_eq!(p.len(), net.parameter_count());
        let before = net.clone();
        net.set_parameters(&p).unwrap();
        assert_eq!(net, before);
        assert!(net.set_parameters(&p[1..]).is_err());
    }

    #[test]
    fn rejects_inconsistent_layers() {
        let l1 = DenseLayer::new(2, 3, vec![0.0; 6], vec![0.0; 3], vec![Activation::Tanh; 3]).unwrap();
        let l2 = DenseLayer::new(2, 1, vec![0.0; 2], vec![0.0], vec![Activation::Identity]).unwrap();
        assert!(MlpNetwork::new(2, vec![l1.clone(), l2]).is_err());
        let tanh_out = DenseLayer::new(3, 1, vec![0.0; 3], vec![0.0], vec![Activation::Tanh]).unwrap();
        assert!(MlpNetwork::new(2, vec![l1, tanh_out]).is_err());
        assert!(MlpNetwork::new(2, vec![]).is_err());
    }
}
