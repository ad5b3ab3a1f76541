use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use semevo::harness::{format_splits, load_dataset, monte_carlo_splits, run_experiment, ExperimentSpec};
use semevo::Error;

#[derive(Parser)]
#[command(name = "semevo", version, about = "Neuroevolution with inflate/deflate semantic mutations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a multi-run experiment and write result tables.
    Run(RunArgs),
    /// Print the Monte Carlo split indices of every run.
    Splits(SplitArgs),
    /// Print row and feature counts of a dataset file.
    Info {
        #[arg(long)]
        dataset: PathBuf,
    },
}

// Every flag is optional so that a config file can supply it; flags win.
#[derive(Args)]
struct RunArgs {
    /// Flat key=value file using the flag names as keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    pop_size: Option<usize>,
    #[arg(long)]
    ms: Option<f64>,
    #[arg(long)]
    p_inflate: Option<f64>,
    #[arg(long)]
    span_fraction: Option<f64>,
    /// none, half or all
    #[arg(long)]
    aprt: Option<String>,
    #[arg(long)]
    apot: bool,
    #[arg(long)]
    tournament_size: Option<usize>,
    #[arg(long)]
    elitism: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// main, aprt, apot, prob or span
    #[arg(long)]
    ablation: Option<String>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    aprt_lr: Option<f64>,
    #[arg(long)]
    aprt_epochs: Option<usize>,
    #[arg(long)]
    apot_lr: Option<f64>,
    #[arg(long)]
    apot_epochs: Option<usize>,
    #[arg(long)]
    baseline_lr: Option<f64>,
    #[arg(long)]
    baseline_epochs: Option<usize>,
}

impl RunArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        fn put<T: ToString>(out: &mut Vec<(&'static str, String)>, key: &'static str, v: &Option<T>) {
            if let Some(v) = v {
                out.push((key, v.to_string()));
            }
        }
        let mut o = Vec::new();
        put(&mut o, "dataset", &self.dataset.as_ref().map(|p| p.display().to_string()));
        put(&mut o, "runs", &self.runs);
        put(&mut o, "generations", &self.generations);
        put(&mut o, "pop-size", &self.pop_size);
        put(&mut o, "ms", &self.ms);
        put(&mut o, "p-inflate", &self.p_inflate);
        put(&mut o, "span-fraction", &self.span_fraction);
        put(&mut o, "aprt", &self.aprt);
        put(&mut o, "apot", &self.apot.then_some("true"));
        put(&mut o, "tournament-size", &self.tournament_size);
        put(&mut o, "elitism", &self.elitism);
        put(&mut o, "seed", &self.seed);
        put(&mut o, "out", &self.out.as_ref().map(|p| p.display().to_string()));
        put(&mut o, "ablation", &self.ablation);
        put(&mut o, "jobs", &self.jobs);
        put(&mut o, "train-fraction", &self.train_fraction);
        put(&mut o, "aprt-lr", &self.aprt_lr);
        put(&mut o, "aprt-epochs", &self.aprt_epochs);
        put(&mut o, "apot-lr", &self.apot_lr);
        put(&mut o, "apot-epochs", &self.apot_epochs);
        put(&mut o, "baseline-lr", &self.baseline_lr);
        put(&mut o, "baseline-epochs", &self.baseline_epochs);
        o
    }

    fn spec(&self) -> semevo::Result<ExperimentSpec> {
        let mut spec = ExperimentSpec::default();
        if let Some(path) = &self.config {
            spec.apply_config_file(path)?;
        }
        for (k, v) in self.overrides() {
            spec.set(k, &v)?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 30)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Ingestion { .. } | Error::InvalidDataset(_) => 3,
        _ => 1,
    }
}

fn run(args: &RunArgs) -> semevo::Result<u8> {
    let spec = args.spec()?;
    let report = run_experiment(&spec)?;
    for f in &report.failures {
        eprintln!("run {} {}: {}", f.run_id, f.method, f.message);
    }
    for m in &report.methods {
        let rows = report.finals_for(m);
        if rows.is_empty() {
            continue;
        }
        let mut test: Vec<f64> = rows.iter().map(|r| r.test_rmse).collect();
        test.sort_by(f64::total_cmp);
        let nodes = rows.iter().map(|r| r.node_count as f64).sum::<f64>() / rows.len() as f64;
        println!(
            "{m}: {} runs, median test RMSE {:.6}, mean nodes {:.1}",
            rows.len(),
            test[test.len() / 2],
            nodes
        );
    }
    for w in &report.wilcoxon {
        println!("wilcoxon {} vs {}: p = {:.6}", w.method_a, w.method_b, w.result.p_value);
    }
    println!("results in {}", spec.output_dir.display());
    Ok(if report.all_failed() { 1 } else { report.exit_code() as u8 })
}

fn splits(args: &SplitArgs) -> semevo::Result<u8> {
    let data = load_dataset(&args.dataset)?;
    let text = format_splits(&monte_carlo_splits(&data, args.runs, args.train_fraction, args.seed)?);
    match &args.out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Splits(a) => splits(a),
        Command::Info { dataset } => load_dataset(dataset).map(|d| {
            println!("rows {} features {}", d.row_count(), d.feature_count());
            0
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
