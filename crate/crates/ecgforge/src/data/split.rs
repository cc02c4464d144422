//! Class-stratified train/val/test splitting.

use crate::error::{Error, Result};
use crate::tissue::TissueClass;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Disjoint, exhaustive index lists over one corpus.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

impl CorpusSplit {
    pub fn total(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }
}

/// Stratified split of `n` samples: per class, sizes are the rounded ratios
/// with the remainder assigned to train, shuffled by a ChaCha8 RNG seeded
/// from `seed`. Deterministic for fixed inputs.
pub fn split_corpus(
    n: usize,
    ratios: (f64, f64, f64),
    labels: &[TissueClass],
    seed: u64,
) -> Result<CorpusSplit> {
    let (r_train, r_val, r_test) = ratios;
    if (r_train + r_val + r_test - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "split ratios {ratios:?} must sum to 1"
        )));
    }
    if r_train < 0.0 || r_val < 0.0 || r_test < 0.0 {
        return Err(Error::Config(format!(
            "split ratios {ratios:?} must be non-negative"
        )));
    }
    if labels.len() != n {
        return Err(Error::Shape(format!(
            "{} labels for {n} samples",
            labels.len()
        )));
    }

    let mut by_class: BTreeMap<TissueClass, Vec<usize>> = BTreeMap::new();
    for (i, &class) in labels.iter().enumerate() {
        by_class.entry(class).or_default().push(i);
    }

    let buckets = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = CorpusSplit {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
        seed,
    };
    for (class, mut members) in by_class {
        if members.len() < buckets {
            return Err(Error::ClassTooSmall {
                class: class.name().into(),
                members: members.len(),
                buckets,
            });
        }
        members.shuffle(&mut rng);
        let m = members.len();
        let n_val = (m as f64 * r_val).round() as usize;
        let n_test = (m as f64 * r_test).round() as usize;
        if n_val + n_test > m {
            return Err(Error::Config(format!(
                "ratios {ratios:?} leave no training members for class {class}"
            )));
        }
        split.test.extend(&members[..n_test]);
        split.val.extend(&members[n_test..n_test + n_val]);
        split.train.extend(&members[n_test + n_val..]);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}
