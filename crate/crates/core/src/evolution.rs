//! Generational loop: tournament selection, inflate/deflate offspring,
//! elitism and per-generation logging.
//!
//! Every random draw comes from a stream keyed by `(seed, generation, slot)`
//! (see [`crate::rng`]), so producing offspring in parallel gives the same
//! population as producing them one by one.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gsm::{build_perturbation, check_span_fraction, deflate, inflate, MutationStep};
use crate::individual::CompositeIndividual;
use crate::nn::{random_mlp, Activation, ArchConfig, Dataset, OptConfig};
use crate::rng::{stream, Purpose};
use crate::trainer::{aposteriori_train, apriori_train, ApotOutcome, TrainingRecord};

pub use crate::trainer::AprtMode;

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub generations: usize,
    pub ms: f64,
    /// Probability of inflate; deflate happens with `1 - p_inflate`.
    pub p_inflate: f64,
    pub span_fraction: f64,
    pub aprt_mode: AprtMode,
    pub apot_enabled: bool,
    pub tournament_size: usize,
    pub elitism_count: usize,
    pub seed: u64,
    pub arch: ArchConfig,
    /// Activations available to non-final chain neurons.
    pub chain_pool: Vec<Activation>,
    pub aprt_opt: OptConfig,
    pub apot_opt: OptConfig,
    /// Produce offspring of one generation on the rayon pool.
    pub parallel: bool,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            generations: 200,
            ms: 2.0,
            p_inflate: 0.7,
            span_fraction: 1.0,
            aprt_mode: AprtMode::Half,
            apot_enabled: false,
            tournament_size: 2,
            elitism_count: 1,
            seed: 0,
            arch: ArchConfig::default(),
            chain_pool: vec![Activation::Tanh, Activation::ReLU, Activation::Sigmoid],
            // Targets stay on their raw scale; 0.01 diverges within a few
            // epochs on targets in the hundreds.
            aprt_opt: OptConfig {
                learning_rate: 0.001,
                epochs: 100,
            },
            apot_opt: OptConfig {
                learning_rate: 0.0001,
                epochs: 100,
            },
            parallel: false,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::config("population size must be at least 2"));
        }
        if self.elitism_count >= self.population_size {
            return Err(Error::config("elitism count must be smaller than the population"));
        }
        if self.tournament_size == 0 {
            return Err(Error::config("tournament size must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.p_inflate) {
            return Err(Error::config(format!("p_inflate must be in [0, 1], got {}", self.p_inflate)));
        }
        if self.chain_pool.is_empty() {
            return Err(Error::config("chain activation pool is empty"));
        }
        check_span_fraction(self.span_fraction)?;
        MutationStep::new(self.ms)?;
        self.arch.validate()?;
        self.aprt_opt.validate()?;
        self.apot_opt.validate()?;
        Ok(())
    }

    pub fn p_deflate(&self) -> f64 {
        1.0 - self.p_inflate
    }

    fn mutation_step(&self) -> MutationStep {
        MutationStep::new(self.ms).expect("validated")
    }
}

#[derive(Debug, Clone)]
pub struct Population {
    pub members: Vec<CompositeIndividual>,
    pub generation: usize,
    pub best_index: usize,
    /// A-priori training records `(member index, record)`; only the initial
    /// population carries any.
    pub aprt_records: Vec<(usize, TrainingRecord)>,
}

impl Population {
    pub fn new(members: Vec<CompositeIndividual>, generation: usize) -> Self {
        let best_index = best_index(&members);
        Self {
            members,
            generation,
            best_index,
            aprt_records: Vec::new(),
        }
    }

    pub fn best(&self) -> &CompositeIndividual {
        &self.members[self.best_index]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Index of the lowest training RMSE; ties go to the lowest index.
fn best_index(members: &[CompositeIndividual]) -> usize {
    members
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.train_rmse().total_cmp(&b.train_rmse()).then(i.cmp(j)))
        .map_or(0, |(i, _)| i)
}

/// One row of the per-generation log.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: usize,
    pub generation: usize,
    pub best_train_rmse: f64,
    pub best_test_rmse: f64,
    pub best_node_count: usize,
    pub gen_wall_time_s: f64,
    /// Mean time to build and evaluate one offspring; `None` for the
    /// initial population.
    pub mutation_eval_time_s: Option<f64>,
}

impl RunRecord {
    fn for_population(run_id: usize, pop: &Population, gen_wall_time_s: f64, mutation_eval_time_s: Option<f64>) -> Self {
        let best = pop.best();
        Self {
            run_id,
            generation: pop.generation,
            best_train_rmse: best.train_rmse(),
            best_test_rmse: best.test_rmse(),
            best_node_count: best.size(),
            gen_wall_time_s,
            mutation_eval_time_s,
        }
    }

    /// The record without its timing fields, for determinism comparisons.
    pub fn untimed(&self) -> (usize, usize, u64, u64, usize) {
        (
            self.run_id,
            self.generation,
            self.best_train_rmse.to_bits(),
            self.best_test_rmse.to_bits(),
            self.best_node_count,
        )
    }
}

/// Random base networks (optionally backprop-trained) wrapped as individuals.
pub fn init_population(cfg: &EvolutionConfig, train: &Dataset, test: &Dataset) -> Result<Population> {
    cfg.validate()?;
    let nets = (0..cfg.population_size)
        .map(|slot| {
            let mut rng = stream(cfg.seed, Purpose::BaseNetwork, &[slot as u64]);
            random_mlp(train.feature_count(), &cfg.arch, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sel_rng = stream(cfg.seed, Purpose::AprtSelection, &[]);
    let (nets, aprt_records) = apriori_train(nets, cfg.aprt_mode, cfg.aprt_opt, train, &mut sel_rng)?;
    let members = nets
        .into_iter()
        .map(|n| CompositeIndividual::from_base(n, train, test))
        .collect::<Result<Vec<_>>>()?;
    let mut pop = Population::new(members, 0);
    pop.aprt_records = aprt_records;
    Ok(pop)
}

/// Draws `tournament_size` members uniformly with replacement and returns
/// the index of the one with the lowest training RMSE (earliest draw wins
/// ties).
pub fn tournament_select<R: Rng + ?Sized>(members: &[CompositeIndividual], tournament_size: usize, rng: &mut R) -> usize {
    let mut best = rng.gen_range(0..members.len());
    for _ in 1..tournament_size {
        let c = rng.gen_range(0..members.len());
        if members[c].train_rmse() < members[best].train_rmse() {
            best = c;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    Inflate,
    Deflate,
    /// Deflate was drawn on a block-less parent; inflate was applied.
    FallbackInflate,
}

#[derive(Debug, Clone, Default)]
pub struct GenerationStats {
    pub inflates: usize,
    pub deflates: usize,
    pub fallbacks: usize,
    /// Seconds spent building and evaluating each offspring.
    pub mutation_times: Vec<f64>,
    pub wall_time_s: f64,
}

impl GenerationStats {
    pub fn mean_mutation_time(&self) -> Option<f64> {
        (!self.mutation_times.is_empty()).then(|| self.mutation_times.iter().sum::<f64>() / self.mutation_times.len() as f64)
    }
}

fn make_offspring(
    pop: &Population,
    cfg: &EvolutionConfig,
    slot: usize,
    train: &Dataset,
    test: &Dataset,
) -> Result<(CompositeIndividual, Operator, f64)> {
    let mut rng = stream(cfg.seed, Purpose::Offspring, &[(pop.generation + 1) as u64, slot as u64]);
    let parent = &pop.members[tournament_select(&pop.members, cfg.tournament_size, &mut rng)];
    let wants_inflate = rng.gen_bool(cfg.p_inflate);
    let started = Instant::now();
    let (child, op) = if !wants_inflate && parent.block_count() > 0 {
        let index = rng.gen_range(0..parent.block_count());
        (deflate(parent, index)?, Operator::Deflate)
    } else {
        let block = build_perturbation(parent, train, test, cfg.mutation_step(), cfg.span_fraction, &cfg.chain_pool, &mut rng)?;
        let op = if wants_inflate { Operator::Inflate } else { Operator::FallbackInflate };
        (inflate(parent, block)?, op)
    };
    Ok((child, op, started.elapsed().as_secs_f64()))
}

/// Produces the next generation: the `elitism_count` best members are
/// copied unchanged, every other slot gets a mutated offspring of a
/// tournament-selected parent.
pub fn step_generation(pop: &Population, cfg: &EvolutionConfig, train: &Dataset, test: &Dataset) -> Result<(Population, GenerationStats)> {
    let started = Instant::now();
    let n = cfg.population_size;
    let mut order: Vec<usize> = (0..pop.members.len()).collect();
    order.sort_by(|&i, &j| pop.members[i].train_rmse().total_cmp(&pop.members[j].train_rmse()).then(i.cmp(&j)));
    let elites = order.iter().take(cfg.elitism_count).map(|&i| pop.members[i].clone());

    let slots = cfg.elitism_count..n;
    let produced: Vec<Result<(CompositeIndividual, Operator, f64)>> = if cfg.parallel {
        slots.into_par_iter().map(|s| make_offspring(pop, cfg, s, train, test)).collect()
    } else {
        slots.map(|s| make_offspring(pop, cfg, s, train, test)).collect()
    };

    let mut members: Vec<CompositeIndividual> = elites.collect();
    let mut stats = GenerationStats::default();
    for r in produced {
        let (child, op, t) = r?;
        match op {
            Operator::Inflate => stats.inflates += 1,
            Operator::Deflate => stats.deflates += 1,
            Operator::FallbackInflate => stats.fallbacks += 1,
        }
        stats.mutation_times.push(t);
        members.push(child);
    }
    stats.wall_time_s = started.elapsed().as_secs_f64();
    Ok((Population::new(members, pop.generation + 1), stats))
}

#[derive(Debug, Clone)]
pub struct EvolutionOutcome {
    pub population: Population,
    /// Best individual of the last generation, before any fine-tuning.
    pub best: CompositeIndividual,
    pub initial_best_train_rmse: f64,
    pub log: Vec<RunRecord>,
    pub aprt_records: Vec<(usize, TrainingRecord)>,
    pub apot: Option<ApotOutcome>,
    pub total_time_s: f64,
}

impl EvolutionOutcome {
    /// The reported model: the fine-tuned one when fine-tuning ran.
    pub fn final_individual(&self) -> &CompositeIndividual {
        self.apot.as_ref().map_or(&self.best, |a| &a.individual)
    }
}

/// Initialises a population and runs `cfg.generations` generations.
pub fn run_evolution(cfg: &EvolutionConfig, train: &Dataset, test: &Dataset) -> Result<EvolutionOutcome> {
    run_evolution_with_id(cfg, train, test, 0)
}

pub fn run_evolution_with_id(cfg: &EvolutionConfig, train: &Dataset, test: &Dataset, run_id: usize) -> Result<EvolutionOutcome> {
    let started = Instant::now();
    let mut pop = init_population(cfg, train, test)?;
    let aprt_records = std::mem::take(&mut pop.aprt_records);
    let initial_best_train_rmse = pop.best().train_rmse();
    let mut log = Vec::with_capacity(cfg.generations + 1);
    log.push(RunRecord::for_population(run_id, &pop, started.elapsed().as_secs_f64(), None));
    for _ in 0..cfg.generations {
        let (next, stats) = step_generation(&pop, cfg, train, test)?;
        pop = next;
        log.push(RunRecord::for_population(run_id, &pop, stats.wall_time_s, stats.mean_mutation_time()));
    }
    let best = pop.best().clone();
    let apot = if cfg.apot_enabled {
        Some(aposteriori_train(&best, train, test, cfg.apot_opt)?)
    } else {
        None
    };
    Ok(EvolutionOutcome {
        population: pop,
        best,
        initial_best_train_rmse,
        log,
        aprt_records,
        apot,
        total_time_s: started.elapsed().as_secs_f64(),
    })
}
