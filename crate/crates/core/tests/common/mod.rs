//! Reference computations written against public data only, sharing no code
//! with the library's evaluation paths.

#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semevo::gsm::{build_perturbation, deflate, inflate};
use semevo::nn::{random_mlp, ArchConfig};
use semevo::{Activation, CompositeIndividual, Dataset, MlpNetwork, MutationStep};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn act(a: Activation, z: f64) -> f64 {
    match a {
        Activation::Tanh => z.tanh(),
        Activation::ReLU => {
            if z > 0.0 {
                z
            } else {
                0.0
            }
        }
        Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        Activation::Identity => z,
    }
}

/// Activations of every base layer for one row: index 0 is the input, index
/// `j` the output of layer `j`.
pub fn layer_outputs(net: &MlpNetwork, x: &[f64]) -> Vec<Vec<f64>> {
    let mut outs = vec![x.to_vec()];
    for layer in net.layers() {
        let prev = outs.last().unwrap();
        let mut next = Vec::with_capacity(layer.outputs);
        for o in 0..layer.outputs {
            let mut z = layer.biases[o];
            for i in 0..layer.inputs {
                z += layer.weights[o * layer.inputs + i] * prev[i];
            }
            next.push(act(layer.activations[o], z));
        }
        outs.push(next);
    }
    outs
}

/// Output of an individual on one row, rebuilt from its base layers and
/// block parameters.
pub fn composite_output(ind: &CompositeIndividual, x: &[f64]) -> f64 {
    let outs = layer_outputs(ind.base(), x);
    let mut y = outs.last().unwrap()[0];
    for block in ind.blocks() {
        let mut prev = 0.0;
        for (i, n) in block.chain().iter().enumerate() {
            let src = &outs[i];
            let mut z = n.bias;
            for (w, v) in n.input_weights.iter().zip(src) {
                z += w * v;
            }
            if let Some(r) = n.recurrent_weight {
                z += r * prev;
            }
            prev = act(n.activation, z);
        }
        y += block.output_weight() * prev;
    }
    y
}

pub fn rmse(pred: &[f64], y: &[f64]) -> f64 {
    (pred.iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / y.len() as f64).sqrt()
}

pub fn mse_of(net: &MlpNetwork, data: &Dataset) -> f64 {
    let mut s = 0.0;
    for i in 0..data.row_count() {
        let outs = layer_outputs(net, data.row(i));
        let e = outs.last().unwrap()[0] - data.targets()[i];
        s += e * e;
    }
    s / data.row_count() as f64
}

/// Which ReLU units are active, for every row.
pub fn relu_pattern(net: &MlpNetwork, data: &Dataset) -> Vec<bool> {
    let mut pattern = Vec::new();
    for i in 0..data.row_count() {
        let mut prev = data.row(i).to_vec();
        for layer in net.layers() {
            let mut next = Vec::with_capacity(layer.outputs);
            for o in 0..layer.outputs {
                let mut z = layer.biases[o];
                for k in 0..layer.inputs {
                    z += layer.weights[o * layer.inputs + k] * prev[k];
                }
                if layer.activations[o] == Activation::ReLU {
                    pattern.push(z > 0.0);
                }
                next.push(act(layer.activations[o], z));
            }
            prev = next;
        }
    }
    pattern
}

/// Five-point central-difference gradient of the MSE (error O(h^4)).
///
/// The step for a parameter shrinks until no ReLU unit switches on or off
/// inside the stencil, so every difference is taken where the loss is
/// smooth.
pub fn fd_gradient(net: &MlpNetwork, data: &Dataset, h: f64) -> Vec<f64> {
    let p = net.parameters();
    let mut g = Vec::with_capacity(p.len());
    let mut probe = net.clone();
    let mut shifted = |i: usize, delta: f64| {
        let mut q = p.clone();
        q[i] += delta;
        probe.set_parameters(&q).unwrap();
        probe.clone()
    };
    for i in 0..p.len() {
        let mut step = h;
        while step > 1e-8 {
            let (hi, lo) = (shifted(i, 2.0 * step), shifted(i, -2.0 * step));
            if relu_pattern(&hi, data) == relu_pattern(&lo, data) {
                break;
            }
            step /= 4.0;
        }
        let mut f = |d: f64| mse_of(&shifted(i, d), data);
        let (f2, f1, b1, b2) = (f(2.0 * step), f(step), f(-step), f(-2.0 * step));
        g.push((-f2 + 8.0 * f1 - 8.0 * b1 + b2) / (12.0 * step));
    }
    g
}

pub fn synthetic(seed: u64, n: usize, d: usize) -> Dataset {
    let mut r = rng(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| r.gen_range(-2.0..2.0)).collect()).collect();
    let ys: Vec<f64> = rows
        .iter()
        .map(|x| x.iter().enumerate().map(|(j, v)| ((j + 1) as f64 * v).sin()).sum::<f64>() + x[0] * x[d - 1])
        .collect();
    Dataset::from_rows(&rows, &ys).unwrap()
}

/// A random individual with a random inflate/deflate history of `ops`
/// steps, capped at `max_blocks` blocks.
pub fn random_composite<R: Rng>(
    train: &Dataset,
    test: &Dataset,
    ops: usize,
    max_blocks: usize,
    r: &mut R,
) -> CompositeIndividual {
    let net = random_mlp(train.feature_count(), &ArchConfig::default(), r).unwrap();
    let mut ind = CompositeIndividual::from_base(net, train, test).unwrap();
    let ms = MutationStep::new(r.gen_range(0.1..3.0)).unwrap();
    let pool = [Activation::Tanh, Activation::ReLU, Activation::Sigmoid];
    for _ in 0..ops {
        let k = ind.block_count();
        if k > 0 && (k >= max_blocks || r.gen_bool(0.35)) {
            ind = deflate(&ind, r.gen_range(0..k)).unwrap();
        } else {
            let span = [0.3, 0.5, 0.7, 1.0][r.gen_range(0..4)];
            let b = build_perturbation(&ind, train, test, ms, span, &pool, r).unwrap();
            ind = inflate(&ind, b).unwrap();
        }
    }
    ind
}

/// Mid-ranks of the magnitudes, 1-based.
pub fn midranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|x| {
            let below = v.iter().filter(|y| *y < x).count() as f64;
            let equal = v.iter().filter(|y| *y == x).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Two-sided signed-rank p-value by enumerating all sign assignments.
pub fn wilcoxon_enumerated(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|v| *v != 0.0).collect();
    if d.is_empty() {
        return 1.0;
    }
    let ranks = midranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let observed: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let n = d.len();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w <= observed + 1e-9 {
            le += 1;
        }
        if w >= observed - 1e-9 {
            ge += 1;
        }
    }
    let total = (1u64 << n) as f64;
    (2.0 * (le.min(ge) as f64) / total).min(1.0)
}

/// Same p-value for large `n` by counting subsets per attainable rank sum.
pub fn wilcoxon_exact_counts(a: &[f64], b: &[f64]) -> f64 {
    use std::collections::BTreeMap;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|v| *v != 0.0).collect();
    if d.is_empty() {
        return 1.0;
    }
    let ranks = midranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let observed: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    // key: rank sum in half units
    let mut dist: BTreeMap<i64, f64> = BTreeMap::new();
    dist.insert(0, 1.0);
    for r in &ranks {
        let step = (r * 2.0).round() as i64;
        let mut next = dist.clone();
        for (k, c) in &dist {
            *next.entry(k + step).or_insert(0.0) += c;
        }
        dist = next;
    }
    let w = (observed * 2.0).round() as i64;
    let total: f64 = dist.values().sum();
    let le: f64 = dist.range(..=w).map(|(_, c)| c).sum();
    let ge: f64 = dist.range(w..).map(|(_, c)| c).sum();
    (2.0 * le.min(ge) / total).min(1.0)
}

/// Standard normal draws by Box-Muller.
pub fn normals<R: Rng>(r: &mut R, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let u1: f64 = r.gen_range(f64::EPSILON..1.0);
            let u2: f64 = r.gen();
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        })
        .collect()
}

/// Directory holding the benchmark csv files: `SEMEVO_DATA_DIR` or the
/// workspace `data/` directory.
pub fn data_dir() -> PathBuf {
    std::env::var_os("SEMEVO_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

pub fn dataset_path(name: &str) -> Option<PathBuf> {
    let p = data_dir().join(format!("{name}.csv"));
    p.exists().then_some(p)
}
