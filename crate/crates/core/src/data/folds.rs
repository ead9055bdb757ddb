use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub folds: Vec<Fold>,
}

impl FoldSplit {
    pub fn fold_count(&self) -> usize {
        self.folds.len()
    }
}

/// Stratified k-fold split of `indices`; `classes[i]` is the class of
/// `indices[i]`.
///
/// Rows are grouped by class, shuffled, and dealt round-robin across folds
/// with one running counter, so fold sizes differ by at most one and each
/// class is spread within one row of its proportional share.
pub fn kfold(indices: &[usize], classes: &[usize], k: usize, seed: u64) -> Result<FoldSplit> {
    if indices.len() != classes.len() {
        return Err(Error::Fold(format!(
            "{} indices but {} class labels",
            indices.len(),
            classes.len()
        )));
    }
    if k < 1 {
        return Err(Error::Fold("k must be at least 1".into()));
    }
    if indices.len() < k {
        return Err(Error::Fold(format!("{} rows cannot fill {k} folds", indices.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&i, &c) in indices.iter().zip(classes) {
        groups.entry(c).or_default().push(i);
    }
    let mut tests = vec![Vec::new(); k];
    let mut pos = 0;
    for group in groups.values_mut() {
        group.shuffle(&mut rng);
        for &i in group.iter() {
            tests[pos % k].push(i);
            pos += 1;
        }
    }
    let folds = (0..k)
        .map(|f| {
            let train = tests
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, t)| t.iter().copied())
                .collect();
            Fold { train, test: tests[f].clone() }
        })
        .collect();
    Ok(FoldSplit { folds })
}
