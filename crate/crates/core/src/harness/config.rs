use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::evolution::EvolutionConfig;
use crate::nn::OptConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ablation {
    /// The evolved model against a backprop network of matched size.
    #[default]
    MainComparison,
    AprT,
    ApoT,
    Probabilities,
    SpanFraction,
}

impl Ablation {
    pub fn label(self) -> &'static str {
        match self {
            Ablation::MainComparison => "main",
            Ablation::AprT => "aprt",
            Ablation::ApoT => "apot",
            Ablation::Probabilities => "prob",
            Ablation::SpanFraction => "span",
        }
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "main" => Ok(Ablation::MainComparison),
            "aprt" => Ok(Ablation::AprT),
            "apot" => Ok(Ablation::ApoT),
            "prob" | "probabilities" => Ok(Ablation::Probabilities),
            "span" => Ok(Ablation::SpanFraction),
            other => Err(Error::config(format!("unknown ablation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub dataset_path: PathBuf,
    pub runs: usize,
    pub train_fraction: f64,
    /// Shared settings; `cfg.seed` is the master seed from which every run's
    /// split and evolution seed derive.
    pub cfg: EvolutionConfig,
    pub ablation: Ablation,
    pub output_dir: PathBuf,
    /// Worker threads for independent runs; 0 means all available cores.
    pub jobs: usize,
    pub baseline_opt: OptConfig,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            dataset_path: PathBuf::new(),
            runs: 30,
            train_fraction: 0.8,
            cfg: EvolutionConfig::default(),
            ablation: Ablation::MainComparison,
            output_dir: PathBuf::from("results"),
            jobs: 0,
            baseline_opt: OptConfig {
                learning_rate: 0.01,
                epochs: 200,
            },
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "" | "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::config(format!("invalid boolean `{value}` for `{key}`"))),
    }
}

impl ExperimentSpec {
    /// Applies one setting. Keys are the long CLI flag names without dashes
    /// (`pop-size`, `p-inflate`, ...); underscores are accepted too.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        let k = key.as_str();
        match k {
            "dataset" => self.dataset_path = PathBuf::from(value),
            "runs" => self.runs = parse(k, value)?,
            "train-fraction" => self.train_fraction = parse(k, value)?,
            "generations" => self.cfg.generations = parse(k, value)?,
            "pop-size" => self.cfg.population_size = parse(k, value)?,
            "ms" => self.cfg.ms = parse(k, value)?,
            "p-inflate" => self.cfg.p_inflate = parse(k, value)?,
            "span-fraction" => self.cfg.span_fraction = parse(k, value)?,
            "aprt" => self.cfg.aprt_mode = value.parse()?,
            "apot" => self.cfg.apot_enabled = parse_bool(k, value)?,
            "tournament-size" => self.cfg.tournament_size = parse(k, value)?,
            "elitism" => self.cfg.elitism_count = parse(k, value)?,
            "seed" => self.cfg.seed = parse(k, value)?,
            "out" => self.output_dir = PathBuf::from(value),
            "ablation" => self.ablation = value.parse()?,
            "jobs" => self.jobs = parse(k, value)?,
            "parallel-offspring" => self.cfg.parallel = parse_bool(k, value)?,
            "aprt-lr" => self.cfg.aprt_opt.learning_rate = parse(k, value)?,
            "aprt-epochs" => self.cfg.aprt_opt.epochs = parse(k, value)?,
            "apot-lr" => self.cfg.apot_opt.learning_rate = parse(k, value)?,
            "apot-epochs" => self.cfg.apot_opt.epochs = parse(k, value)?,
            "baseline-lr" => self.baseline_opt.learning_rate = parse(k, value)?,
            "baseline-epochs" => self.baseline_opt.epochs = parse(k, value)?,
            _ => return Err(Error::config(format!("unknown setting `{key}`"))),
        }
        Ok(())
    }

    /// Parses a flat `key=value` file. `#` starts a comment.
    pub fn apply_config_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::config(format!("config line {}: expected key=value", i + 1)));
            };
            self.set(k, v)
                .map_err(|e| Error::config(format!("config line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn apply_config_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_config_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::config("runs must be at least 1"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::config("train fraction must be in (0, 1)"));
        }
        if self.dataset_path.as_os_str().is_empty() {
            return Err(Error::config("no dataset given"));
        }
        self.baseline_opt.validate()?;
        self.cfg.validate()
    }

    /// File-name stem of the dataset.
    pub fn dataset_name(&self) -> String {
        self.dataset_path
            .file_stem()
            .map_or_else(|| "dataset".to_string(), |s| s.to_string_lossy().into_owned())
    }
}
