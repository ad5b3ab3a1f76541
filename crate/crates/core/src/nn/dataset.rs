use std::ops::Index;

use crate::error::{Error, Result};

/// Supervised regression data: a row-major `n x d` input matrix and a target
/// per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Vec<f64>,
    targets: Vec<f64>,
    features: usize,
}

impl Dataset {
    /// Builds a dataset from a row-major input buffer.
    ///
    /// Requires at least two rows, at least one feature and finite values.
    pub fn new(inputs: Vec<f64>, targets: Vec<f64>, features: usize) -> Result<Self> {
        if features == 0 {
            return Err(Error::InvalidDataset("at least one feature is required".into()));
        }
        if inputs.len() != targets.len() * features {
            return Err(Error::Shape {
                context: "dataset inputs",
                expected: targets.len() * features,
                actual: inputs.len(),
            });
        }
        if targets.len() < 2 {
            return Err(Error::InvalidDataset(format!(
                "at least two rows are required, got {}",
                targets.len()
            )));
        }
        if let Some(i) = inputs.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite input at row {}, column {}",
                i / features,
                i % features
            )));
        }
        if let Some(i) = targets.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!("non-finite target at row {i}")));
        }
        Ok(Self {
            inputs,
            targets,
            features,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], targets: &[f64]) -> Result<Self> {
        let features = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != features) {
            return Err(Error::InvalidDataset(format!(
                "row {i} has {} features, expected {features}",
                r.len()
            )));
        }
        if rows.len() != targets.len() {
            return Err(Error::Shape {
                context: "dataset targets",
                expected: rows.len(),
                actual: targets.len(),
            });
        }
        Self::new(rows.concat(), targets.to_vec(), features)
    }

    #[inline]
    pub fn row_count(&self) -> usize {
        self.targets.len()
    }

    #[inline]
    pub fn feature_count(&self) -> usize {
        self.features
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.features..(i + 1) * self.features]
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Rows selected by `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut inputs = Vec::with_capacity(indices.len() * self.features);
        let mut targets = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.row_count() {
                return Err(Error::InvalidDataset(format!(
                    "row index {i} out of range for {} rows",
                    self.row_count()
                )));
            }
            inputs.extend_from_slice(self.row(i));
            targets.push(self.targets[i]);
        }
        Self::new(inputs, targets, self.features)
    }

    /// Per-feature mean and standard deviation (population). Constant
    /// columns report a deviation of 1 so that standardising leaves them at 0.
    pub fn feature_stats(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.row_count() as f64;
        let mut mean = vec![0.0; self.features];
        for r in 0..self.row_count() {
            for (m, v) in mean.iter_mut().zip(self.row(r)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; self.features];
        for r in 0..self.row_count() {
            for ((s, v), m) in var.iter_mut().zip(self.row(r)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        (mean, std)
    }

    /// Returns a copy with each feature z-scored using the given statistics.
    pub fn standardized(&self, mean: &[f64], std: &[f64]) -> Result<Self> {
        if mean.len() != self.features || std.len() != self.features {
            return Err(Error::Shape {
                context: "standardization statistics",
                expected: self.features,
                actual: mean.len().min(std.len()),
            });
        }
        let inputs = self
            .inputs
            .chunks_exact(self.features)
            .flat_map(|row| row.iter().zip(mean).zip(std).map(|((v, m), s)| (v - m) / s))
            .collect();
        Self::new(inputs, self.targets.clone(), self.features)
    }
}

/// A model's outputs over every row of a dataset split.
#[derive(Debug, Clone, PartialEq)]
pub struct Semantics(Vec<f64>);

impl Semantics {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Elementwise `self + other`.
    pub fn plus(&self, other: &Semantics) -> Result<Semantics> {
        self.zip_with(other, |a, b| a + b)
    }

    /// Elementwise `self - other`.
    pub fn minus(&self, other: &Semantics) -> Result<Semantics> {
        self.zip_with(other, |a, b| a - b)
    }

    pub(crate) fn add_assign(&mut self, other: &Semantics) -> Result<()> {
        check_len(self.len(), other.len())?;
        self.0.iter_mut().zip(&other.0).for_each(|(a, b)| *a += b);
        Ok(())
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Semantics) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn zip_with(&self, other: &Semantics, f: impl Fn(f64, f64) -> f64) -> Result<Semantics> {
        check_len(self.len(), other.len())?;
        Ok(Semantics(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect()))
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Internal(format!(
            "semantics length mismatch: {expected} vs {actual}"
        )))
    }
}

impl Index<usize> for Semantics {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for Semantics {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Post-activation outputs of one layer over all rows, row-major
/// `rows x width`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerActivations {
    pub width: usize,
    pub values: Vec<f64>,
}

impl LayerActivations {
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.width..(i + 1) * self.width]
    }

    pub fn rows(&self) -> usize {
        if self.width == 0 {
            0
        } else {
            self.values.len() / self.width
        }
    }
}
