//! Train/test splitting and per-channel standardization.
//!
//! Standardization statistics (mean and population stdev per channel) are
//! computed on the training split only and applied to both splits, so the
//! test set never leaks into normalization.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use super::manifest::{DatasetManifest, SplitPolicy};
use super::{DataError, WindowedDataset};
use crate::seed;

/// Split a windowed dataset into standardized train and test sets.
pub fn split(
    ds: &WindowedDataset,
    manifest: &DatasetManifest,
) -> Result<(WindowedDataset, WindowedDataset), DataError> {
    if ds.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    let test_indices = match &manifest.split_policy {
        SplitPolicy::RandomFraction { seed: s, test_fraction } => {
            random_fraction_indices(ds.len(), *s, *test_fraction)
        }
        SplitPolicy::BySubject { seed: s, test_fraction } => {
            by_subject_indices(ds, *s, *test_fraction)?
        }
    };

    let mut in_test = vec![false; ds.len()];
    for idx in &test_indices {
        in_test[*idx] = true;
    }
    let mut train = subset(ds, |i| !in_test[i]);
    let mut test = subset(ds, |i| in_test[i]);
    train.provenance = format!("{}/train", manifest.name);
    test.provenance = format!("{}/test", manifest.name);
    standardize_pair(&mut train, &mut test);
    Ok((train, test))
}

fn random_fraction_indices(n: usize, policy_seed: u64, fraction: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = seed::rng(policy_seed, "split/random_fraction", 0);
    order.shuffle(&mut rng);
    let take = ((n as f64) * fraction).round() as usize;
    order.truncate(take.min(n));
    order
}

fn by_subject_indices(
    ds: &WindowedDataset,
    policy_seed: u64,
    fraction: f64,
) -> Result<Vec<usize>, DataError> {
    // BTreeMap keeps subject order deterministic regardless of input order.
    let mut by_subject: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, subject) in ds.subjects.iter().enumerate() {
        by_subject.entry(subject.as_str()).or_default().push(i);
    }
    if by_subject.len() < 2 {
        return Err(DataError::SingleSubjectWithBySubjectPolicy);
    }
    let mut subjects: Vec<&str> = by_subject.keys().copied().collect();
    let mut rng = seed::rng(policy_seed, "split/by_subject", 0);
    subjects.shuffle(&mut rng);
    let take = (((subjects.len() as f64) * fraction).round() as usize)
        .clamp(1, subjects.len() - 1);
    let mut indices = Vec::new();
    for subject in subjects.into_iter().take(take) {
        indices.extend_from_slice(&by_subject[subject]);
    }
    Ok(indices)
}

fn subset(ds: &WindowedDataset, keep: impl Fn(usize) -> bool) -> WindowedDataset {
    let mut out = WindowedDataset {
        instances: Vec::new(),
        labels: Vec::new(),
        subjects: Vec::new(),
        ..ds.clone()
    };
    for i in 0..ds.len() {
        if keep(i) {
            out.instances.push(ds.instances[i].clone());
            out.labels.push(ds.labels[i]);
            out.subjects.push(ds.subjects[i].clone());
        }
    }
    out
}

/// Standardize both splits with per-channel z-score statistics from `train`.
///
/// Channels with zero variance are left centered but unscaled (divisor
/// floored at 1e-12).
pub fn standardize_pair(train: &mut WindowedDataset, test: &mut WindowedDataset) {
    let channels = train.channel_count;
    if train.is_empty() || channels == 0 {
        return;
    }
    let mut mean = vec![0.0f64; channels];
    let mut count = 0usize;
    for instance in &train.instances {
        for row in instance.chunks_exact(channels) {
            for (c, v) in row.iter().enumerate() {
                mean[c] += v;
            }
        }
        count += instance.len() / channels;
    }
    for m in &mut mean {
        *m /= count as f64;
    }
    let mut var = vec![0.0f64; channels];
    for instance in &train.instances {
        for row in instance.chunks_exact(channels) {
            for (c, v) in row.iter().enumerate() {
                let d = v - mean[c];
                var[c] += d * d;
            }
        }
    }
    let stdev: Vec<f64> = var
        .iter()
        .map(|v| (v / count as f64).sqrt().max(1e-12))
        .collect();

    for ds in [train, test] {
        for instance in &mut ds.instances {
            for row in instance.chunks_exact_mut(channels) {
                for (c, v) in row.iter_mut().enumerate() {
                    *v = (*v - mean[c]) / stdev[c];
                }
            }
        }
    }
}
