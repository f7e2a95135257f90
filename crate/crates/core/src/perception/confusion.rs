//! Confusion-matrix classifier stub standing in for the recognition network.
//!
//! Rows are true classes, columns are the five garbage classes plus an
//! aggregate "non-garbage" prediction. Garbage rows put the published
//! per-class test error uniformly on the five wrong columns; non-garbage
//! rows carry the published garbage-confusion rates with the residual mass
//! on the non-garbage column.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{GarbageClass, NonGarbageClass, ObjectClass, GARBAGE_CLASSES};

/// Predicted label: one of the five garbage classes, or non-garbage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Prediction {
    Garbage(GarbageClass),
    NonGarbage,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub predicted: Prediction,
    pub confidence: f64,
    /// Predicted among the garbage classes and confident enough to act on.
    pub is_garbage: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfusionError {
    #[error("row {0} does not sum to 1 (sum {1})")]
    RowSum(String, f64),
    #[error("row {0} has a negative entry")]
    NegativeEntry(String),
    #[error("threshold must lie in [0, 1], got {0}")]
    BadThreshold(f64),
    #[error("confidence band ({0}, {1}) is not an interval in [0, 1]")]
    BadBand(f64, f64),
}

/// Row-stochastic classifier model plus the acting threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionModel {
    /// True garbage class -> predicted [5 garbage, non-garbage].
    pub garbage_rows: [[f64; 6]; 5],
    /// True non-garbage class -> predicted [5 garbage, non-garbage].
    pub nongarbage_rows: [[f64; 6]; 6],
    /// Probability threshold below which a garbage prediction is not acted on.
    pub threshold: f64,
    /// Confidence band sampled when the prediction matches the truth.
    pub match_confidence: (f64, f64),
    /// Confidence band sampled on a mismatch.
    pub mismatch_confidence: (f64, f64),
}

/// Per-class classification error on the garbage test set, as fractions.
pub const GARBAGE_TEST_ERROR: [f64; 5] = [0.0813, 0.0989, 0.0906, 0.1432, 0.223];

/// Non-garbage confusion rates toward each garbage class
/// (rows: cup, book, shoes, phone, bag, wallet).
pub const NON_GARBAGE_CONFUSION: [[f64; 5]; 6] = [
    [0.153, 0.184, 0.012, 0.009, 0.003],
    [0.002, 0.010, 0.136, 0.005, 0.012],
    [0.005, 0.023, 0.038, 0.009, 0.003],
    [0.007, 0.011, 0.065, 0.004, 0.008],
    [0.007, 0.013, 0.009, 0.032, 0.004],
    [0.010, 0.023, 0.089, 0.012, 0.009],
];

impl Default for ConfusionModel {
    fn default() -> Self {
        let mut garbage_rows = [[0.0; 6]; 5];
        for (i, row) in garbage_rows.iter_mut().enumerate() {
            let err = GARBAGE_TEST_ERROR[i];
            // total error split uniformly over the five wrong predictions
            let off = err / 5.0;
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = if j == i { 1.0 - err } else { off };
            }
        }
        let mut nongarbage_rows = [[0.0; 6]; 6];
        for (i, row) in nongarbage_rows.iter_mut().enumerate() {
            let mut residual = 1.0;
            for j in 0..5 {
                row[j] = NON_GARBAGE_CONFUSION[i][j];
                residual -= row[j];
            }
            row[5] = residual;
        }
        Self {
            garbage_rows,
            nongarbage_rows,
            threshold: 0.5,
            match_confidence: (0.6, 1.0),
            mismatch_confidence: (0.3, 0.9),
        }
    }
}

impl ConfusionModel {
    pub fn validate(&self) -> Result<(), ConfusionError> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(ConfusionError::BadThreshold(self.threshold));
        }
        for (lo, hi) in [self.match_confidence, self.mismatch_confidence] {
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                return Err(ConfusionError::BadBand(lo, hi));
            }
        }
        let check = |name: String, row: &[f64; 6]| -> Result<(), ConfusionError> {
            if row.iter().any(|&p| p < 0.0) {
                return Err(ConfusionError::NegativeEntry(name));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(ConfusionError::RowSum(name, sum));
            }
            Ok(())
        };
        for (i, row) in self.garbage_rows.iter().enumerate() {
            check(ObjectClass::Garbage(GARBAGE_CLASSES[i]).name().to_string(), row)?;
        }
        for (i, row) in self.nongarbage_rows.iter().enumerate() {
            check(
                ObjectClass::NonGarbage(crate::world::NON_GARBAGE_CLASSES[i]).name().to_string(),
                row,
            )?;
        }
        Ok(())
    }

    fn row_for(&self, true_class: ObjectClass) -> &[f64; 6] {
        match true_class {
            ObjectClass::Garbage(g) => &self.garbage_rows[garbage_index(g)],
            ObjectClass::NonGarbage(n) => &self.nongarbage_rows[nongarbage_index(n)],
        }
    }

    /// Samples a prediction and confidence for an object of the given true
    /// class. Deterministic given the rng state.
    pub fn classify<R: Rng>(&self, true_class: ObjectClass, rng: &mut R) -> Classification {
        let row = self.row_for(true_class);
        let draw: f64 = rng.gen_range(0.0..1.0);
        let mut cum = 0.0;
        let mut col = 5usize;
        for (j, &p) in row.iter().enumerate() {
            cum += p;
            if draw < cum {
                col = j;
                break;
            }
        }
        let predicted = if col < 5 {
            Prediction::Garbage(GARBAGE_CLASSES[col])
        } else {
            Prediction::NonGarbage
        };

        let matches_truth = match (true_class, predicted) {
            (ObjectClass::Garbage(g), Prediction::Garbage(p)) => g == p,
            (ObjectClass::NonGarbage(_), Prediction::NonGarbage) => true,
            _ => false,
        };
        let (lo, hi) = if matches_truth {
            self.match_confidence
        } else {
            self.mismatch_confidence
        };
        let confidence = rng.gen_range(lo..=hi);
        let is_garbage = matches!(predicted, Prediction::Garbage(_)) && confidence >= self.threshold;
        Classification {
            predicted,
            confidence,
            is_garbage,
        }
    }
}

pub(crate) fn garbage_index(g: GarbageClass) -> usize {
    GARBAGE_CLASSES.iter().position(|&c| c == g).unwrap()
}

pub(crate) fn nongarbage_index(n: NonGarbageClass) -> usize {
    crate::world::NON_GARBAGE_CLASSES.iter().position(|&c| c == n).unwrap()
}
