//! Gradient training around the evolutionary loop: a-priori training of
//! initial members, a-posteriori fine-tuning of the final best individual,
//! and the plain backprop baseline with a node budget matched to an evolved
//! individual.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::individual::CompositeIndividual;
use crate::nn::{gradient_descent, rmse, train_backprop, Activation, Dataset, DenseLayer, MlpNetwork, OptConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainingPhase {
    AprT,
    ApoT,
    Baseline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRecord {
    pub phase: TrainingPhase,
    pub epochs_run: usize,
    pub loss_curve: Vec<f64>,
    pub wall_time_s: f64,
    /// Set when training stopped on a non-finite loss; the model that was
    /// passed in is kept in that case.
    pub diverged_at: Option<usize>,
}

impl TrainingRecord {
    fn new(phase: TrainingPhase, loss_curve: Vec<f64>, started: Instant, diverged_at: Option<usize>) -> Self {
        Self {
            phase,
            epochs_run: loss_curve.len(),
            loss_curve,
            wall_time_s: started.elapsed().as_secs_f64(),
            diverged_at,
        }
    }

    /// Mean wall time of one epoch, if any epoch ran.
    pub fn seconds_per_epoch(&self) -> Option<f64> {
        (self.epochs_run > 0).then(|| self.wall_time_s / self.epochs_run as f64)
    }
}

/// Which initial members are backprop-trained before evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AprtMode {
    None,
    #[default]
    Half,
    All,
}

impl fmt::Display for AprtMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AprtMode::None => "none",
            AprtMode::Half => "half",
            AprtMode::All => "all",
        })
    }
}

impl FromStr for AprtMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "no" => Ok(AprtMode::None),
            "half" => Ok(AprtMode::Half),
            "all" | "full" => Ok(AprtMode::All),
            other => Err(Error::config(format!("unknown AprT mode `{other}`"))),
        }
    }
}

/// Trains the members selected by `mode`. Under [`AprtMode::Half`],
/// `floor(n / 2)` members are sampled uniformly without replacement from
/// `rng`. Records are returned as `(member index, record)` sorted by index.
pub fn apriori_train<R: Rng + ?Sized>(
    members: Vec<MlpNetwork>,
    mode: AprtMode,
    opt: OptConfig,
    train: &Dataset,
    rng: &mut R,
) -> Result<(Vec<MlpNetwork>, Vec<(usize, TrainingRecord)>)> {
    let n = members.len();
    let mut selected: Vec<usize> = match mode {
        AprtMode::None => Vec::new(),
        AprtMode::Half => index::sample(rng, n, n / 2).into_vec(),
        AprtMode::All => (0..n).collect(),
    };
    selected.sort_unstable();
    let mut members = members;
    let mut records = Vec::with_capacity(selected.len());
    for i in selected {
        let started = Instant::now();
        let trained = train_backprop(&members[i], train, opt)?;
        records.push((i, TrainingRecord::new(TrainingPhase::AprT, trained.loss_curve, started, None)));
        members[i] = trained.model;
    }
    Ok((members, records))
}

#[derive(Debug, Clone)]
pub struct ApotOutcome {
    /// The tuned individual, or the input unchanged if training diverged.
    pub individual: CompositeIndividual,
    pub record: TrainingRecord,
    pub train_rmse_before: f64,
    pub train_rmse_after: f64,
    pub test_rmse_before: f64,
    pub test_rmse_after: f64,
}

/// Fine-tunes every weight of the materialized individual (base, chains and
/// output weights) and rebuilds its caches. Both test RMSEs are reported;
/// the caller decides which model to use.
pub fn aposteriori_train(best: &CompositeIndividual, train: &Dataset, test: &Dataset, opt: OptConfig) -> Result<ApotOutcome> {
    let started = Instant::now();
    let materialized = best.materialize();
    let (individual, record) = match gradient_descent(&materialized, train, opt) {
        Ok(trained) => {
            let tuned = trained.model.into_individual(train, test)?;
            (tuned, TrainingRecord::new(TrainingPhase::ApoT, trained.loss_curve, started, None))
        }
        Err(Error::Divergence { epoch }) => {
            log::warn!("a-posteriori training diverged at epoch {epoch}; keeping the evolved model");
            (best.clone(), TrainingRecord::new(TrainingPhase::ApoT, Vec::new(), started, Some(epoch)))
        }
        Err(e) => return Err(e),
    };
    Ok(ApotOutcome {
        train_rmse_before: best.train_rmse(),
        test_rmse_before: best.test_rmse(),
        train_rmse_after: individual.train_rmse(),
        test_rmse_after: individual.test_rmse(),
        individual,
        record,
    })
}

/// Hidden layer widths of a backprop baseline network.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineArch {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub activation: Activation,
}

impl BaselineArch {
    /// One hidden layer per hidden layer of the individual's base network,
    /// with widths chosen so hidden plus output neurons equal the
    /// individual's node count. The division remainder goes to the last
    /// hidden layer.
    pub fn matching(ind: &CompositeIndividual) -> Self {
        let layers = ind.base().hidden_widths().len().max(1);
        let hidden_total = ind.size().saturating_sub(1).max(layers);
        let each = hidden_total / layers;
        let mut hidden_widths = vec![each; layers];
        hidden_widths[layers - 1] += hidden_total - each * layers;
        Self {
            input_dim: ind.base().input_dim(),
            hidden_widths,
            activation: Activation::Tanh,
        }
    }

    pub fn neuron_count(&self) -> usize {
        self.hidden_widths.iter().sum::<usize>() + 1
    }

    /// Xavier-uniform initialisation, zero biases.
    pub fn initialize<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<MlpNetwork> {
        let mut layers = Vec::with_capacity(self.hidden_widths.len() + 1);
        let mut fan_in = self.input_dim;
        let widths = self.hidden_widths.iter().copied().chain(std::iter::once(1));
        let last = self.hidden_widths.len();
        for (i, w) in widths.enumerate() {
            let limit = (6.0 / (fan_in + w) as f64).sqrt();
            let weights = (0..fan_in * w).map(|_| rng.gen_range(-limit..=limit)).collect();
            let act = if i == last { Activation::Identity } else { self.activation };
            layers.push(DenseLayer::new(fan_in, w, weights, vec![0.0; w], vec![act; w])?);
            fan_in = w;
        }
        MlpNetwork::new(self.input_dim, layers)
    }
}

#[derive(Debug, Clone)]
pub struct BaselineOutcome {
    pub network: MlpNetwork,
    pub train_rmse: f64,
    pub test_rmse: f64,
    pub record: TrainingRecord,
}

/// Trains a freshly initialised network of the given architecture.
pub fn baseline_nn<R: Rng + ?Sized>(
    arch: &BaselineArch,
    train: &Dataset,
    test: &Dataset,
    opt: OptConfig,
    rng: &mut R,
) -> Result<BaselineOutcome> {
    let init = arch.initialize(rng)?;
    let started = Instant::now();
    let trained = train_backprop(&init, train, opt)?;
    let record = TrainingRecord::new(TrainingPhase::Baseline, trained.loss_curve, started, None);
    let network = trained.model;
    Ok(BaselineOutcome {
        train_rmse: rmse(&network.forward(train)?, train.targets())?,
        test_rmse: rmse(&network.forward(test)?, test.targets())?,
        network,
        record,
    })
}
