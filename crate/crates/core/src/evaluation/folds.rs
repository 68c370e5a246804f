//! Stratified fold assignment.
//!
//! Within each class, trial indices are shuffled by the seeded generator and
//! dealt round-robin so every fold holds exactly `floor(class_count / k)`
//! holdout trials per class. When a class count is not divisible by `k`,
//! the leftover trials are never held out: they appear in every fold's
//! training split. This keeps each fold's holdout exactly class-balanced
//! (e.g. 55+55 trials over 10 folds give 5+5 holdouts per fold).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::Label;

use super::EvalError;

/// Per-trial fold assignment; `None` marks trials that are in every
/// training split and no holdout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    k: usize,
    assignment: Vec<Option<usize>>,
    seed: u64,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assignment
    }

    /// Indices held out in the given fold, ascending.
    pub fn holdout_indices(&self, fold: usize) -> Vec<usize> {
        assert!(fold < self.k);
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == Some(fold))
            .collect()
    }

    /// Indices trained on in the given fold (everything not held out),
    /// ascending.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        assert!(fold < self.k);
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] != Some(fold))
            .collect()
    }
}

/// Build a stratified `k`-fold plan over the labels. Requires at least `k`
/// trials of each class.
pub fn stratified_folds(labels: &[Label], k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidSettings("fold count must be >= 2".into()));
    }
    let mut assignment = vec![None; labels.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for class in [Label::Faculty, Label::Trainee] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < k {
            return Err(EvalError::TooFewPerClass {
                label: class,
                count: idx.len(),
                folds: k,
            });
        }
        idx.shuffle(&mut rng);
        let per_fold = idx.len() / k;
        for (pos, &trial) in idx.iter().take(per_fold * k).enumerate() {
            assignment[trial] = Some(pos % k);
        }
    }
    Ok(FoldPlan {
        k,
        assignment,
        seed,
    })
}
