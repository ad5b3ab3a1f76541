use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::nn::Dataset;
use crate::rng::{stream, Purpose};

/// Disjoint, exhaustive row indices of one Monte Carlo run, each sorted
/// ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// The split of run `run`, a function of `(master_seed, run)` only.
/// The training part has `round(train_fraction * rows)` rows.
pub fn split_for_run(rows: usize, run: usize, train_fraction: f64, master_seed: u64) -> Result<Split> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::config(format!("train fraction must be in (0, 1), got {train_fraction}")));
    }
    let n_train = (train_fraction * rows as f64).round() as usize;
    if n_train < 2 || rows - n_train < 2 {
        return Err(Error::config(format!(
            "a {train_fraction} split of {rows} rows leaves fewer than two rows on one side"
        )));
    }
    let mut idx: Vec<usize> = (0..rows).collect();
    idx.shuffle(&mut stream(master_seed, Purpose::Split, &[run as u64]));
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

pub fn monte_carlo_splits(data: &Dataset, runs: usize, train_fraction: f64, master_seed: u64) -> Result<Vec<Split>> {
    (0..runs)
        .map(|r| split_for_run(data.row_count(), r, train_fraction, master_seed))
        .collect()
}

/// Train and test subsets, both z-scored with training-split statistics.
pub fn prepare_split(data: &Dataset, split: &Split) -> Result<(Dataset, Dataset)> {
    let train = data.subset(&split.train)?;
    let test = data.subset(&split.test)?;
    let (mean, std) = train.feature_stats();
    Ok((train.standardized(&mean, &std)?, test.standardized(&mean, &std)?))
}

/// Text form used by the `splits` subcommand: `run,set,indices` with
/// space-separated indices.
pub fn format_splits(splits: &[Split]) -> String {
    let mut out = String::from("run,set,indices\n");
    let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
    for (i, s) in splits.iter().enumerate() {
        out.push_str(&format!("{i},train,{}\n", join(&s.train)));
        out.push_str(&format!("{i},test,{}\n", join(&s.test)));
    }
    out
}
