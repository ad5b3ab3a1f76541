use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{Ablation, ExperimentSpec};
use super::dataset_io::load_dataset;
use super::model_file::write_model;
use super::splits::{prepare_split, split_for_run};
use super::stats::{wilcoxon_signed_rank, WilcoxonMode, WilcoxonResult};
use super::timing::{timing_report, MeanStd, TimingSummary};
use crate::error::{Error, Result};
use crate::evolution::{run_evolution_with_id, EvolutionConfig, RunRecord};
use crate::nn::Dataset;
use crate::rng::{derive_seed, stream, Purpose};
use crate::trainer::{baseline_nn, AprtMode, BaselineArch};

pub const GENERATION_COLUMNS: &str = "run_id,generation,method,train_rmse,test_rmse,node_count,gen_time_s,mut_eval_time_s";
pub const FINAL_COLUMNS: &str = "run_id,method,train_rmse,test_rmse,node_count,total_time_s";

const EVOLVED: &str = "gsm-ne";
const BASELINE: &str = "backprop-nn";
const APOT: &str = "gsm-ne-apot";
const SWEEP: [f64; 4] = [0.3, 0.5, 0.7, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct FinalRow {
    pub run_id: usize,
    pub method: String,
    pub train_rmse: f64,
    pub test_rmse: f64,
    pub node_count: usize,
    pub total_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub run_id: usize,
    pub method: String,
    pub message: String,
}

/// Everything one method produced for one run.
#[derive(Debug, Clone)]
struct MethodResult {
    method: String,
    log: Vec<RunRecord>,
    row: FinalRow,
    model: Option<String>,
    epoch_time: Option<f64>,
    arch: Option<BaselineArch>,
}

#[derive(Debug, Clone)]
struct Variant {
    method: String,
    cfg: EvolutionConfig,
}

fn variants(spec: &ExperimentSpec) -> Vec<Variant> {
    let base = &spec.cfg;
    let with = |method: String, f: &dyn Fn(&mut EvolutionConfig)| {
        let mut cfg = base.clone();
        f(&mut cfg);
        Variant { method, cfg }
    };
    match spec.ablation {
        Ablation::MainComparison => vec![with(EVOLVED.into(), &|_| {})],
        Ablation::AprT => [AprtMode::None, AprtMode::Half, AprtMode::All]
            .into_iter()
            .map(|m| with(format!("{EVOLVED}-aprt-{m}"), &move |c| c.aprt_mode = m))
            .collect(),
        // One evolution serves both methods: the evolved model and its
        // fine-tuned version.
        Ablation::ApoT => vec![with(EVOLVED.into(), &|c| c.apot_enabled = true)],
        Ablation::Probabilities => SWEEP
            .into_iter()
            .map(|p| with(format!("{EVOLVED}-p{p}"), &move |c| c.p_inflate = p))
            .collect(),
        Ablation::SpanFraction => SWEEP
            .into_iter()
            .map(|s| with(format!("{EVOLVED}-span{s}"), &move |c| c.span_fraction = s))
            .collect(),
    }
}

/// Method labels an experiment reports, in output order.
pub fn method_labels(spec: &ExperimentSpec) -> Vec<String> {
    let mut out: Vec<String> = variants(spec).into_iter().map(|v| v.method).collect();
    match spec.ablation {
        Ablation::MainComparison => out.push(BASELINE.into()),
        Ablation::ApoT => out.push(APOT.into()),
        _ => {}
    }
    out
}

fn run_variant(
    spec: &ExperimentSpec,
    variant: &Variant,
    run: usize,
    train: &Dataset,
    test: &Dataset,
) -> Result<Vec<MethodResult>> {
    let mut cfg = variant.cfg.clone();
    cfg.seed = derive_seed(spec.cfg.seed, Purpose::RunSeed, &[run as u64]);
    let outcome = run_evolution_with_id(&cfg, train, test, run)?;
    let best = &outcome.best;
    let evolved = MethodResult {
        method: variant.method.clone(),
        log: outcome.log.clone(),
        row: FinalRow {
            run_id: run,
            method: variant.method.clone(),
            train_rmse: best.train_rmse(),
            test_rmse: best.test_rmse(),
            node_count: best.size(),
            total_time_s: outcome.total_time_s - outcome.apot.as_ref().map_or(0.0, |a| a.record.wall_time_s),
        },
        model: Some(write_model(&best.materialize())),
        epoch_time: None,
        arch: Some(BaselineArch::matching(best)),
    };
    let mut out = vec![evolved];
    if let Some(apot) = &outcome.apot {
        let tuned = &apot.individual;
        out.push(MethodResult {
            method: APOT.into(),
            log: outcome.log.clone(),
            row: FinalRow {
                run_id: run,
                method: APOT.into(),
                train_rmse: tuned.train_rmse(),
                test_rmse: tuned.test_rmse(),
                node_count: tuned.size(),
                total_time_s: outcome.total_time_s,
            },
            model: Some(write_model(&tuned.materialize())),
            epoch_time: None,
            arch: None,
        });
    }
    Ok(out)
}

fn run_baseline(spec: &ExperimentSpec, run: usize, evolved: &MethodResult, train: &Dataset, test: &Dataset) -> Result<MethodResult> {
    let arch = evolved
        .arch
        .clone()
        .ok_or_else(|| Error::Internal("evolved result without a size".into()))?;
    let mut rng = stream(spec.cfg.seed, Purpose::Baseline, &[run as u64]);
    let out = baseline_nn(&arch, train, test, spec.baseline_opt, &mut rng)?;
    Ok(MethodResult {
        method: BASELINE.into(),
        log: Vec::new(),
        row: FinalRow {
            run_id: run,
            method: BASELINE.into(),
            train_rmse: out.train_rmse,
            test_rmse: out.test_rmse,
            node_count: out.network.neuron_count(),
            total_time_s: out.record.wall_time_s,
        },
        model: None,
        epoch_time: out.record.seconds_per_epoch(),
        arch: None,
    })
}

/// All methods of one run. Failures are per method; a failed split fails
/// every method of the run.
fn execute_run(spec: &ExperimentSpec, data: &Dataset, run: usize) -> (Vec<MethodResult>, Vec<RunFailure>) {
    let labels = method_labels(spec);
    let fail_all = |e: Error| {
        let failures = labels
            .iter()
            .map(|m| RunFailure { run_id: run, method: m.clone(), message: e.to_string() })
            .collect();
        (Vec::new(), failures)
    };
    let prepared = split_for_run(data.row_count(), run, spec.train_fraction, spec.cfg.seed).and_then(|s| prepare_split(data, &s));
    let (train, test) = match prepared {
        Ok(p) => p,
        Err(e) => return fail_all(e),
    };
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for variant in variants(spec) {
        match run_variant(spec, &variant, run, &train, &test) {
            Ok(r) => results.extend(r),
            Err(e) => {
                log::warn!("run {run} method {} failed: {e}", variant.method);
                failures.push(RunFailure { run_id: run, method: variant.method.clone(), message: e.to_string() });
                if spec.ablation == Ablation::ApoT {
                    failures.push(RunFailure { run_id: run, method: APOT.into(), message: e.to_string() });
                }
            }
        }
    }
    if spec.ablation == Ablation::MainComparison {
        match results.first().map(|ev| run_baseline(spec, run, ev, &train, &test)) {
            Some(Ok(b)) => results.push(b),
            Some(Err(e)) => failures.push(RunFailure { run_id: run, method: BASELINE.into(), message: e.to_string() }),
            None => failures.push(RunFailure {
                run_id: run,
                method: BASELINE.into(),
                message: "no evolved model to size the baseline".into(),
            }),
        }
    }
    (results, failures)
}

#[derive(Debug, Clone)]
pub struct WilcoxonRow {
    pub method_a: String,
    pub method_b: String,
    pub result: WilcoxonResult,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub dataset: String,
    pub rows: usize,
    pub features: usize,
    pub runs: usize,
    pub methods: Vec<String>,
    pub finals: Vec<FinalRow>,
    pub generations: Vec<(String, RunRecord)>,
    pub failures: Vec<RunFailure>,
    pub timing: Vec<(String, TimingSummary)>,
    pub wilcoxon: Vec<WilcoxonRow>,
    pub files: Vec<PathBuf>,
}

impl ExperimentReport {
    pub fn all_failed(&self) -> bool {
        self.finals.is_empty()
    }

    /// 0 on full success, 1 when any (run, method) pair failed.
    pub fn exit_code(&self) -> i32 {
        i32::from(!self.failures.is_empty())
    }

    pub fn finals_for(&self, method: &str) -> Vec<&FinalRow> {
        self.finals.iter().filter(|r| r.method == method).collect()
    }
}

fn file_stem(spec: &ExperimentSpec, method: &str) -> String {
    format!("{}_{}_{}", spec.dataset_name(), spec.ablation, method)
}

fn paired_test_rmse(finals: &[FinalRow], a: &str, b: &str, runs: usize) -> (Vec<f64>, Vec<f64>) {
    let lookup = |m: &str, r: usize| finals.iter().find(|f| f.method == m && f.run_id == r).map(|f| f.test_rmse);
    (0..runs)
        .filter_map(|r| Some((lookup(a, r)?, lookup(b, r)?)))
        .unzip()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x}"))
}

fn write_file(path: PathBuf, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, text)?;
    files.push(path);
    Ok(())
}

/// Runs every (run, method) pair of the experiment and writes the result
/// tables under `spec.output_dir`:
///
/// * `<dataset>_<ablation>_<method>_generations.csv` ([`GENERATION_COLUMNS`])
/// * `<dataset>_<ablation>_<method>_final.csv` ([`FINAL_COLUMNS`])
/// * `<dataset>_<ablation>_timing.csv`, `_wilcoxon.csv`, `_errors.csv`
/// * `models/<dataset>_<ablation>_<method>_run<i>.model`
///
/// Runs execute on `spec.jobs` workers; files are written afterwards by the
/// calling thread.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let data = load_dataset(&spec.dataset_path)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| Error::Internal(format!("cannot start worker pool: {e}")))?;
    let per_run: Vec<(Vec<MethodResult>, Vec<RunFailure>)> =
        pool.install(|| (0..spec.runs).into_par_iter().map(|r| execute_run(spec, &data, r)).collect());
    let methods = method_labels(spec);
    let mut results: Vec<MethodResult> = Vec::new();
    let mut failures = Vec::new();
    for (r, f) in per_run {
        results.extend(r);
        failures.extend(f);
    }
    write_outputs(spec, &data, methods, results, failures)
}

fn write_outputs(
    spec: &ExperimentSpec,
    data: &Dataset,
    methods: Vec<String>,
    results: Vec<MethodResult>,
    failures: Vec<RunFailure>,
) -> Result<ExperimentReport> {
    let out = &spec.output_dir;
    let models_dir = out.join("models");
    fs::create_dir_all(&models_dir)?;
    let mut files = Vec::new();
    let mut timing = Vec::new();
    let baseline_epochs: Vec<f64> = results.iter().filter_map(|r| r.epoch_time).collect();

    for method in &methods {
        let mine: Vec<&MethodResult> = results.iter().filter(|r| &r.method == method).collect();
        let stem = file_stem(spec, method);
        if method != BASELINE {
            let mut gens = format!("{GENERATION_COLUMNS}\n");
            for r in &mine {
                for g in &r.log {
                    let _ = writeln!(
                        gens,
                        "{},{},{},{},{},{},{},{}",
                        g.run_id,
                        g.generation,
                        method,
                        g.best_train_rmse,
                        g.best_test_rmse,
                        g.best_node_count,
                        g.gen_wall_time_s,
                        fmt_opt(g.mutation_eval_time_s)
                    );
                }
            }
            write_file(out.join(format!("{stem}_generations.csv")), &gens, &mut files)?;
        }
        let mut fin = format!("{FINAL_COLUMNS}\n");
        for r in &mine {
            let f = &r.row;
            let _ = writeln!(fin, "{},{},{},{},{},{}", f.run_id, f.method, f.train_rmse, f.test_rmse, f.node_count, f.total_time_s);
        }
        write_file(out.join(format!("{stem}_final.csv")), &fin, &mut files)?;
        for r in &mine {
            if let Some(m) = &r.model {
                write_file(models_dir.join(format!("{stem}_run{}.model", r.row.run_id)), m, &mut files)?;
            }
        }
        let log: Vec<RunRecord> = mine.iter().flat_map(|r| r.log.iter().cloned()).collect();
        let totals: Vec<f64> = mine.iter().map(|r| r.row.total_time_s).collect();
        let epochs: &[f64] = if method == BASELINE { &baseline_epochs } else { &[] };
        timing.push((method.clone(), timing_report(&log, &totals, epochs)));
    }

    let stem = format!("{}_{}", spec.dataset_name(), spec.ablation);
    let mut t = String::from("method,quantity,count,mean,std\n");
    for (m, s) in &timing {
        let quantities = [
            ("total_run_s", s.total_run),
            ("per_generation_s", s.per_generation),
            ("per_offspring_mutation_s", s.per_offspring_mutation),
            ("baseline_per_epoch_s", s.baseline_per_epoch),
        ];
        for (q, v) in quantities {
            let (c, mean, std) = v.map_or((0, String::new(), String::new()), |MeanStd { count, mean, std }| {
                (count, mean.to_string(), std.to_string())
            });
            let _ = writeln!(t, "{m},{q},{c},{mean},{std}");
        }
    }
    write_file(out.join(format!("{stem}_timing.csv")), &t, &mut files)?;

    let finals: Vec<FinalRow> = results.iter().map(|r| r.row.clone()).collect();
    let mut wilcoxon = Vec::new();
    for (i, a) in methods.iter().enumerate() {
        for b in &methods[i + 1..] {
            let (xa, xb) = paired_test_rmse(&finals, a, b, spec.runs);
            if xa.len() < 6 {
                continue;
            }
            wilcoxon.push(WilcoxonRow { method_a: a.clone(), method_b: b.clone(), result: wilcoxon_signed_rank(&xa, &xb)? });
        }
    }
    if !wilcoxon.is_empty() {
        let mut w = String::from("method_a,method_b,n_used,statistic,w_plus,p_value,mode,degenerate\n");
        for row in &wilcoxon {
            let r = &row.result;
            let mode = match r.mode {
                WilcoxonMode::Exact => "exact",
                WilcoxonMode::Normal => "normal",
            };
            let _ = writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                row.method_a, row.method_b, r.n_used, r.statistic, r.w_plus, r.p_value, mode, r.degenerate
            );
        }
        write_file(out.join(format!("{stem}_wilcoxon.csv")), &w, &mut files)?;
    }

    if !failures.is_empty() {
        let mut e = String::from("run_id,method,error\n");
        for f in &failures {
            let _ = writeln!(e, "{},{},\"{}\"", f.run_id, f.method, f.message.replace('"', "'"));
        }
        write_file(out.join(format!("{stem}_errors.csv")), &e, &mut files)?;
    }

    let mut generations = Vec::new();
    for r in &results {
        for g in &r.log {
            generations.push((r.method.clone(), g.clone()));
        }
    }
    Ok(ExperimentReport {
        dataset: spec.dataset_name(),
        rows: data.row_count(),
        features: data.feature_count(),
        runs: spec.runs,
        methods,
        finals,
        generations,
        failures,
        timing,
        wilcoxon,
        files,
    })
}

/// Reads back a final-results table written by [`run_experiment`].
pub fn read_final_table(path: &Path) -> Result<Vec<FinalRow>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(FINAL_COLUMNS) {
        return Err(Error::InvalidDataset(format!("{} is not a final-results table", path.display())));
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            let c: Vec<&str> = l.split(',').collect();
            let bad = || Error::Ingestion { row: i + 2, message: format!("malformed row `{l}`") };
            if c.len() != 6 {
                return Err(bad());
            }
            Ok(FinalRow {
                run_id: c[0].parse().map_err(|_| bad())?,
                method: c[1].to_string(),
                train_rmse: c[2].parse().map_err(|_| bad())?,
                test_rmse: c[3].parse().map_err(|_| bad())?,
                node_count: c[4].parse().map_err(|_| bad())?,
                total_time_s: c[5].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}
