//! Language identification toolkit: character/word n-gram features,
//! multinomial naive Bayes, regularized softmax regression, GRU sequence
//! classifiers, and stacked ensembles, with evaluation and failure-diagnosis
//! tooling.

pub mod corpus;
pub mod error;
pub mod features;
pub mod linear;

pub use error::{Error, Result};

/// Anything that maps a sentence to a probability vector over a fixed class
/// list. Implementations must return a vector of length `classes().len()`
/// summing to 1.
pub trait TextClassifier {
    fn classes(&self) -> &[String];

    fn predict_proba(&self, text: &str) -> Vec<f64>;

    /// Predicted class label with its probability vector. Ties break toward
    /// the lowest class index.
    fn predict(&self, text: &str) -> (String, Vec<f64>) {
        let probs = self.predict_proba(text);
        let idx = argmax(&probs);
        (self.classes()[idx].clone(), probs)
    }
}

/// Index of the largest value; ties break toward the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Normalize log-scores into log-probabilities via log-sum-exp.
pub fn log_normalize(log_scores: &[f64]) -> Vec<f64> {
    let max = log_scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max
        + log_scores
            .iter()
            .map(|&s| (s - max).exp())
            .sum::<f64>()
            .ln();
    log_scores.iter().map(|&s| s - lse).collect()
}
