use super::{Dataset, MlpNetwork, Semantics};
use crate::error::{Error, Result};

/// Full-batch gradient-descent settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptConfig {
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 100,
        }
    }
}

impl OptConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// A model with a flat parameter vector and an MSE gradient.
pub trait Trainable: Clone {
    fn parameters(&self) -> Vec<f64>;
    fn set_parameters(&mut self, params: &[f64]) -> Result<()>;
    /// Mean squared error on `data` and its gradient with respect to
    /// [`Trainable::parameters`], in the same order.
    fn loss_and_gradient(&self, data: &Dataset) -> Result<(f64, Vec<f64>)>;
}

#[derive(Debug, Clone)]
pub struct Trained<M> {
    pub model: M,
    /// MSE at the start of each epoch, before that epoch's update.
    pub loss_curve: Vec<f64>,
}

/// Runs `opt.epochs` steps of `params -= lr * grad(MSE)`.
pub fn gradient_descent<M: Trainable>(model: &M, data: &Dataset, opt: OptConfig) -> Result<Trained<M>> {
    opt.validate()?;
    let mut model = model.clone();
    let mut params = model.parameters();
    let mut loss_curve = Vec::with_capacity(opt.epochs);
    for epoch in 0..opt.epochs {
        let (loss, grad) = model.loss_and_gradient(data)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence { epoch });
        }
        loss_curve.push(loss);
        params.iter_mut().zip(&grad).for_each(|(p, g)| *p -= opt.learning_rate * g);
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Divergence { epoch });
        }
        model.set_parameters(&params)?;
    }
    Ok(Trained { model, loss_curve })
}

pub fn train_backprop(net: &MlpNetwork, data: &Dataset, opt: OptConfig) -> Result<Trained<MlpNetwork>> {
    gradient_descent(net, data, opt)
}

/// MSE gradient in [`MlpNetwork::parameters`] order.
pub fn gradient(net: &MlpNetwork, data: &Dataset) -> Result<Vec<f64>> {
    Ok(net.loss_and_gradient(data)?.1)
}

pub fn rmse(pred: &Semantics, targets: &[f64]) -> Result<f64> {
    if pred.len() != targets.len() {
        return Err(Error::Shape {
            context: "rmse operands",
            expected: targets.len(),
            actual: pred.len(),
        });
    }
    if targets.is_empty() {
        return Err(Error::Internal("rmse of an empty vector".into()));
    }
    let sse: f64 = pred
        .as_slice()
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok((sse / targets.len() as f64).sqrt())
}

/// Per-row scratch buffers for backprop through a dense stack.
pub(crate) struct BackpropScratch {
    pub pre: Vec<Vec<f64>>,
    pub out: Vec<Vec<f64>>,
    pub delta: Vec<Vec<f64>>,
}

impl BackpropScratch {
    pub fn new(net: &MlpNetwork) -> Self {
        let widths: Vec<usize> = net.layers().iter().map(|l| l.outputs).collect();
        let mk = || widths.iter().map(|&w| vec![0.0; w]).collect::<Vec<_>>();
        Self {
            pre: mk(),
            out: mk(),
            delta: mk(),
        }
    }

    /// Forward pass of one row, keeping every layer's pre- and
    /// post-activations. Returns the network output.
    pub fn forward(&mut self, net: &MlpNetwork, x: &[f64]) -> f64 {
        for (li, layer) in net.layers().iter().enumerate() {
            let (before, after) = self.out.split_at_mut(li);
            let input = if li == 0 { x } else { &before[li - 1][..] };
            layer.forward_row(input, &mut self.pre[li], &mut after[0]);
        }
        self.out[net.depth() - 1][0]
    }

    /// Backward pass for one row. `delta` of every layer must already hold
    /// dLoss/d(post-activation) contributions from outside the stack (zero
    /// if none); the output layer's entry receives `d_out`. Accumulates into
    /// `grad` (canonical order) starting at `offset`.
    pub fn backward(&mut self, net: &MlpNetwork, x: &[f64], d_out: f64, grad: &mut [f64], offset: usize) {
        let layers = net.layers();
        let last = layers.len() - 1;
        self.delta[last][0] += d_out;
        // offsets of each layer's block in the flat vector
        let mut offs = Vec::with_capacity(layers.len());
        let mut o = offset;
        for l in layers {
            offs.push(o);
            o += l.weights.len() + l.biases.len();
        }
        for li in (0..layers.len()).rev() {
            let layer = &layers[li];
            // convert d/d(post) into d/d(pre) in place
            for j in 0..layer.outputs {
                let z = self.pre[li][j];
                let y = self.out[li][j];
                self.delta[li][j] *= layer.activations[j].derivative(z, y);
            }
            let (below, here) = self.delta.split_at_mut(li);
            let dz = &here[0];
            let input: &[f64] = if li == 0 { x } else { &self.out[li - 1] };
            let base = offs[li];
            for j in 0..layer.outputs {
                let d = dz[j];
                if d == 0.0 {
                    continue;
                }
                let gw = &mut grad[base + j * layer.inputs..base + (j + 1) * layer.inputs];
                gw.iter_mut().zip(input).for_each(|(g, a)| *g += d * a);
                grad[base + layer.weights.len() + j] += d;
            }
            if li > 0 {
                let prev = &mut below[li - 1];
                for (i, p) in prev.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for j in 0..layer.outputs {
                        s += layer.weights[j * layer.inputs + i] * dz[j];
                    }
                    *p += s;
                }
            }
        }
    }

    pub fn clear_deltas(&mut self) {
        self.delta.iter_mut().for_each(|d| d.iter_mut().for_each(|v| *v = 0.0));
    }
}

impl Trainable for MlpNetwork {
    fn parameters(&self) -> Vec<f64> {
        MlpNetwork::parameters(self)
    }

    fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        MlpNetwork::set_parameters(self, params)
    }

    fn loss_and_gradient(&self, data: &Dataset) -> Result<(f64, Vec<f64>)> {
        self.check_input(data)?;
        let n = data.row_count() as f64;
        let mut grad = vec![0.0; self.parameter_count()];
        let mut scratch = BackpropScratch::new(self);
        let mut sse = 0.0;
        for r in 0..data.row_count() {
            let x = data.row(r);
            let y = scratch.forward(self, x);
            let err = y - data.targets()[r];
            sse += err * err;
            scratch.clear_deltas();
            scratch.backward(self, x, 2.0 * err / n, &mut grad, 0);
        }
        Ok((sse / n, grad))
    }
}
