use crate::evolution::RunRecord;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single observation.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Self {
            count: values.len(),
            mean,
            std,
        })
    }
}

/// Mean and deviation of the four runtime quantities. `None` marks a
/// quantity with no observations (for example per-generation times of runs
/// without generations).
#[derive(Debug, Clone, PartialEq)]
pub struct TimingSummary {
    pub total_run: Option<MeanStd>,
    pub per_generation: Option<MeanStd>,
    pub per_offspring_mutation: Option<MeanStd>,
    pub baseline_per_epoch: Option<MeanStd>,
}

impl TimingSummary {
    /// Mean per-offspring mutation time over mean baseline epoch time.
    pub fn mutation_to_epoch_ratio(&self) -> Option<f64> {
        let m = self.per_offspring_mutation?;
        let b = self.baseline_per_epoch?;
        (b.mean > 0.0).then(|| m.mean / b.mean)
    }
}

/// `log` holds the per-generation rows of every run; the generation-0 row
/// (initialisation) is excluded from per-generation statistics.
pub fn timing_report(log: &[RunRecord], total_run_times: &[f64], baseline_epoch_times: &[f64]) -> TimingSummary {
    let evolved: Vec<&RunRecord> = log.iter().filter(|r| r.generation > 0).collect();
    let gen_times: Vec<f64> = evolved.iter().map(|r| r.gen_wall_time_s).collect();
    let mut_times: Vec<f64> = evolved.iter().filter_map(|r| r.mutation_eval_time_s).collect();
    TimingSummary {
        total_run: MeanStd::of(total_run_times),
        per_generation: MeanStd::of(&gen_times),
        per_offspring_mutation: MeanStd::of(&mut_times),
        baseline_per_epoch: MeanStd::of(baseline_epoch_times),
    }
}
