//! Best-model dump format.
//!
//! ```text
//! semevo-model
//! format-version 1
//! input-dim <d>
//! base-layers <L>
//! layer <i> inputs <in> outputs <out>
//! activations <act> x out
//! weights <f64> x (out * in), row-major
//! biases <f64> x out
//! ... (L layer records)
//! blocks <k>
//! block <j> span <s> output-weight <f64>
//! neuron <i> activation <act> bias <f64> recurrent <f64|-> weights <f64>...
//! ... (s neuron lines per block)
//! end
//! ```
//!
//! Floats are written in shortest round-trip form, so parsing a dump
//! reproduces the weights bit for bit.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::gsm::ChainNeuron;
use crate::individual::{MaterializedChain, MaterializedNetwork};
use crate::nn::{Activation, DenseLayer, MlpNetwork};

pub const MODEL_FORMAT_VERSION: u32 = 1;

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

pub fn write_model(model: &MaterializedNetwork) -> String {
    let mut s = String::new();
    let base = model.base();
    writeln!(s, "semevo-model").unwrap();
    writeln!(s, "format-version {MODEL_FORMAT_VERSION}").unwrap();
    writeln!(s, "input-dim {}", base.input_dim()).unwrap();
    writeln!(s, "base-layers {}", base.depth()).unwrap();
    for (i, l) in base.layers().iter().enumerate() {
        writeln!(s, "layer {i} inputs {} outputs {}", l.inputs, l.outputs).unwrap();
        writeln!(s, "activations {}", join(&l.activations)).unwrap();
        writeln!(s, "weights {}", join(&l.weights)).unwrap();
        writeln!(s, "biases {}", join(&l.biases)).unwrap();
    }
    writeln!(s, "blocks {}", model.chains().len()).unwrap();
    for (j, c) in model.chains().iter().enumerate() {
        writeln!(s, "block {j} span {} output-weight {}", c.neurons.len(), c.output_weight).unwrap();
        for (i, n) in c.neurons.iter().enumerate() {
            let rec = n.recurrent_weight.map_or_else(|| "-".to_string(), |w| w.to_string());
            writeln!(
                s,
                "neuron {i} activation {} bias {} recurrent {rec} weights {}",
                n.activation,
                n.bias,
                join(&n.input_weights)
            )
            .unwrap();
        }
    }
    writeln!(s, "end").unwrap();
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::ModelFormat {
            line: self.line,
            message: message.into(),
        }
    }

    /// Next non-blank line split into tokens, checked to start with `key`.
    fn expect(&mut self, key: &str) -> Result<Vec<&'a str>> {
        loop {
            let Some((i, l)) = self.inner.next() else {
                return Err(self.err(format!("unexpected end of file, expected `{key}`")));
            };
            self.line = i + 1;
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            if toks[0] != key {
                return Err(self.err(format!("expected `{key}`, found `{}`", toks[0])));
            }
            return Ok(toks[1..].to_vec());
        }
    }

    fn num<T: std::str::FromStr>(&self, tok: Option<&&str>, what: &str) -> Result<T> {
        tok.and_then(|t| t.parse().ok())
            .ok_or_else(|| self.err(format!("missing or invalid {what}")))
    }

    fn floats(&self, toks: &[&str], expected: usize, what: &str) -> Result<Vec<f64>> {
        let v = toks
            .iter()
            .map(|t| t.parse::<f64>().map_err(|_| self.err(format!("invalid number `{t}` in {what}"))))
            .collect::<Result<Vec<_>>>()?;
        if v.len() != expected {
            return Err(self.err(format!("{what}: expected {expected} values, found {}", v.len())));
        }
        Ok(v)
    }

    /// `key value` pairs at fixed positions: checks `toks[pos] == key`.
    fn keyed<'t>(&self, toks: &'t [&'a str], pos: usize, key: &str) -> Result<Option<&'t &'a str>> {
        if toks.get(pos) != Some(&key) {
            return Err(self.err(format!("expected `{key}`")));
        }
        Ok(toks.get(pos + 1))
    }
}

pub fn parse_model(text: &str) -> Result<MaterializedNetwork> {
    let mut p = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    p.expect("semevo-model")?;
    let v = p.expect("format-version")?;
    let version: u32 = p.num(v.first(), "format version")?;
    if version != MODEL_FORMAT_VERSION {
        return Err(p.err(format!("unsupported format version {version}")));
    }
    let v = p.expect("input-dim")?;
    let input_dim: usize = p.num(v.first(), "input dimension")?;
    let v = p.expect("base-layers")?;
    let depth: usize = p.num(v.first(), "layer count")?;
    let mut layers = Vec::with_capacity(depth);
    for _ in 0..depth {
        let t = p.expect("layer")?;
        let inputs: usize = p.num(p.keyed(&t, 1, "inputs")?, "layer inputs")?;
        let outputs: usize = p.num(p.keyed(&t, 3, "outputs")?, "layer outputs")?;
        let acts = p
            .expect("activations")?
            .iter()
            .map(|a| a.parse::<Activation>().map_err(|e| p.err(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let w = p.expect("weights")?;
        let weights = p.floats(&w, inputs * outputs, "weights")?;
        let b = p.expect("biases")?;
        let biases = p.floats(&b, outputs, "biases")?;
        layers.push(DenseLayer::new(inputs, outputs, weights, biases, acts).map_err(|e| p.err(e.to_string()))?);
    }
    let base = MlpNetwork::new(input_dim, layers).map_err(|e| p.err(e.to_string()))?;
    let v = p.expect("blocks")?;
    let k: usize = p.num(v.first(), "block count")?;
    let mut chains = Vec::with_capacity(k);
    for _ in 0..k {
        let t = p.expect("block")?;
        let span: usize = p.num(p.keyed(&t, 1, "span")?, "block span")?;
        let output_weight: f64 = p.num(p.keyed(&t, 3, "output-weight")?, "output weight")?;
        if span == 0 || span > base.depth() {
            return Err(p.err(format!("block span {span} out of range")));
        }
        let mut neurons = Vec::with_capacity(span);
        for i in 0..span {
            let t = p.expect("neuron")?;
            let activation = p
                .keyed(&t, 1, "activation")?
                .ok_or_else(|| p.err("missing activation"))?
                .parse::<Activation>()
                .map_err(|e| p.err(e.to_string()))?;
            let bias: f64 = p.num(p.keyed(&t, 3, "bias")?, "bias")?;
            let rec = p.keyed(&t, 5, "recurrent")?.ok_or_else(|| p.err("missing recurrent weight"))?;
            let recurrent_weight = if *rec == "-" {
                None
            } else {
                Some(rec.parse::<f64>().map_err(|_| p.err("invalid recurrent weight"))?)
            };
            if t.get(7) != Some(&"weights") {
                return Err(p.err("expected `weights`"));
            }
            let width = if i == 0 { input_dim } else { base.layers()[i - 1].outputs };
            let input_weights = p.floats(&t[8..], width, "neuron weights")?;
            neurons.push(ChainNeuron {
                input_weights,
                recurrent_weight,
                bias,
                activation,
            });
        }
        chains.push(MaterializedChain { neurons, output_weight });
    }
    p.expect("end")?;
    Ok(MaterializedNetwork::new(base, chains))
}
