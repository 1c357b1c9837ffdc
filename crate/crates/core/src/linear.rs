//! Multinomial naive Bayes and L2-regularized multinomial logistic
//! regression over sparse n-gram count vectors.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::features::{ngrams_up_to, vectorize_counts, NgramSpec, SparseVector, VocabConfig, Vocabulary};
use crate::{argmax, log_normalize, softmax, TextClassifier};

/// Smoothed count statistics of a multinomial naive Bayes classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnbStats {
    pub alpha: f64,
    /// Log prior per class, proportional to class example counts.
    pub log_priors: Vec<f64>,
    /// `log P(token | class)` rows, one per class, each of vocabulary length.
    pub log_likelihood: Vec<Vec<f64>>,
}

/// Estimate smoothed multinomial statistics:
/// `log P(t|c) = log((count(t,c) + alpha) / (sum_t count(t,c) + alpha * V))`.
pub fn train_mnb(
    rows: &[SparseVector],
    labels: &[usize],
    n_classes: usize,
    vocab_size: usize,
    alpha: f64,
) -> Result<MnbStats> {
    if alpha <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "smoothing alpha must be positive, got {alpha}"
        )));
    }
    if rows.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: rows.len(),
            right: labels.len(),
        });
    }
    let mut class_counts = vec![0usize; n_classes];
    let mut token_counts = vec![vec![0.0f64; vocab_size]; n_classes];
    for (row, &label) in rows.iter().zip(labels) {
        class_counts[label] += 1;
        for &(idx, value) in row.entries() {
            token_counts[label][idx as usize] += value;
        }
    }
    if let Some(empty) = class_counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass(format!("class index {empty}")));
    }

    let total_examples = rows.len() as f64;
    let log_priors = class_counts
        .iter()
        .map(|&c| (c as f64 / total_examples).ln())
        .collect();
    let log_likelihood = token_counts
        .iter()
        .map(|counts| {
            let class_total: f64 = counts.iter().sum();
            let denom = class_total + alpha * vocab_size as f64;
            counts.iter().map(|&c| ((c + alpha) / denom).ln()).collect()
        })
        .collect();
    Ok(MnbStats {
        alpha,
        log_priors,
        log_likelihood,
    })
}

/// Log-normalized class posterior: `log prior + Σ count · log-likelihood`.
pub fn mnb_log_posterior(stats: &MnbStats, x: &SparseVector) -> Vec<f64> {
    let scores: Vec<f64> = stats
        .log_priors
        .iter()
        .zip(&stats.log_likelihood)
        .map(|(&prior, likelihood)| {
            prior
                + x.entries()
                    .iter()
                    .map(|&(idx, value)| value * likelihood[idx as usize])
                    .sum::<f64>()
        })
        .collect();
    log_normalize(&scores)
}

/// Training configuration for mini-batch SGD softmax regression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegConfig {
    /// L2 penalty weight on `W` (the bias is unregularized).
    pub lambda: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            lambda: 1e-4,
            epochs: 30,
            learning_rate: 0.5,
            batch_size: 64,
            seed: 0,
        }
    }
}

/// Weight matrix and bias of a softmax regression classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegParams {
    /// One weight row per class, each of vocabulary length.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl LogRegParams {
    pub fn zeros(n_classes: usize, vocab_size: usize) -> Self {
        LogRegParams {
            weights: vec![vec![0.0; vocab_size]; n_classes],
            bias: vec![0.0; n_classes],
        }
    }

    pub fn weight_norm(&self) -> f64 {
        self.weights
            .iter()
            .flat_map(|row| row.iter())
            .map(|w| w * w)
            .sum::<f64>()
            .sqrt()
    }
}

/// `softmax(Wx + b)`.
pub fn logreg_proba(params: &LogRegParams, x: &SparseVector) -> Vec<f64> {
    let logits: Vec<f64> = params
        .weights
        .iter()
        .zip(&params.bias)
        .map(|(row, &b)| {
            b + x
                .entries()
                .iter()
                .map(|&(idx, value)| value * row[idx as usize])
                .sum::<f64>()
        })
        .collect();
    softmax(&logits)
}

/// Mean softmax cross-entropy over a batch plus `(lambda/2)·‖W‖²`, with its
/// exact gradient. The regularization gradient `lambda·W` is applied to every
/// weight; batch gradients touch only the features present in the batch.
pub fn logreg_loss_grad(
    params: &LogRegParams,
    rows: &[&SparseVector],
    labels: &[usize],
    lambda: f64,
) -> (f64, LogRegParams) {
    let n_classes = params.bias.len();
    let vocab_size = params.weights.first().map_or(0, |r| r.len());
    let mut grad = LogRegParams::zeros(n_classes, vocab_size);
    let batch = rows.len() as f64;
    let mut loss = 0.0;
    for (row, &label) in rows.iter().zip(labels) {
        let probs = logreg_proba(params, row);
        loss -= probs[label].max(f64::MIN_POSITIVE).ln();
        for c in 0..n_classes {
            let delta = (probs[c] - if c == label { 1.0 } else { 0.0 }) / batch;
            grad.bias[c] += delta;
            for &(idx, value) in row.entries() {
                grad.weights[c][idx as usize] += delta * value;
            }
        }
    }
    loss /= batch;
    if lambda > 0.0 {
        let mut penalty = 0.0;
        for (grow, wrow) in grad.weights.iter_mut().zip(&params.weights) {
            for (g, &w) in grow.iter_mut().zip(wrow) {
                *g += lambda * w;
                penalty += w * w;
            }
        }
        loss += 0.5 * lambda * penalty;
    }
    (loss, grad)
}

/// Minimize mean cross-entropy + `(lambda/2)·‖W‖²` by mini-batch SGD with
/// seeded shuffling and zero-initialized weights.
pub fn train_logreg(
    rows: &[SparseVector],
    labels: &[usize],
    n_classes: usize,
    vocab_size: usize,
    config: &LogRegConfig,
) -> Result<LogRegParams> {
    if config.lambda < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "lambda must be nonnegative, got {}",
            config.lambda
        )));
    }
    if config.epochs < 1 {
        return Err(Error::InvalidArgument("epochs must be at least 1".into()));
    }
    if rows.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: rows.len(),
            right: labels.len(),
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let mut params = LogRegParams::zeros(n_classes, vocab_size);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let batch_size = config.batch_size.max(1);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for (batch_no, batch) in order.chunks(batch_size).enumerate() {
            let batch_rows: Vec<&SparseVector> = batch.iter().map(|&i| &rows[i]).collect();
            let batch_labels: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let (loss, grad) =
                logreg_loss_grad(&params, &batch_rows, &batch_labels, config.lambda);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_no,
                });
            }
            for (wrow, grow) in params.weights.iter_mut().zip(&grad.weights) {
                for (w, &g) in wrow.iter_mut().zip(grow) {
                    *w -= config.learning_rate * g;
                }
            }
            for (b, &g) in params.bias.iter_mut().zip(&grad.bias) {
                *b -= config.learning_rate * g;
            }
        }
    }
    Ok(params)
}

/// Multinomial naive Bayes text classifier: smoothed statistics plus the
/// feature spec and vocabulary they were estimated under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnbModel {
    pub classes: Vec<String>,
    pub spec: NgramSpec,
    pub vocab: Vocabulary,
    pub stats: MnbStats,
}

/// Map a known-label corpus onto `(rows, labels)` under a class list.
pub fn count_rows(
    corpus: &Corpus,
    spec: &NgramSpec,
    vocab: &Vocabulary,
    classes: &[String],
) -> Result<(Vec<SparseVector>, Vec<usize>)> {
    let mut rows = Vec::with_capacity(corpus.len());
    let mut labels = Vec::with_capacity(corpus.len());
    for sentence in corpus.sentences() {
        let class = classes
            .iter()
            .position(|c| c == sentence.label.tag())
            .ok_or_else(|| Error::UnknownLabel(sentence.label.tag().to_string()))?;
        let tokens = ngrams_up_to(&sentence.text, spec);
        rows.push(vectorize_counts(&tokens, vocab));
        labels.push(class);
    }
    Ok((rows, labels))
}

/// Build a vocabulary over a corpus' n-gram stream.
pub fn build_corpus_vocab(corpus: &Corpus, spec: &NgramSpec, config: VocabConfig) -> Vocabulary {
    Vocabulary::build(
        corpus
            .sentences()
            .iter()
            .map(|s| ngrams_up_to(&s.text, spec)),
        config,
    )
}

impl MnbModel {
    /// Train on the known-label part of a corpus.
    pub fn fit(train: &Corpus, spec: NgramSpec, alpha: f64, vocab_config: VocabConfig) -> Result<Self> {
        let train = train.known_only();
        if train.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let classes = train.registry().codes();
        let vocab = build_corpus_vocab(&train, &spec, vocab_config);
        let (rows, labels) = count_rows(&train, &spec, &vocab, &classes)?;
        let stats = train_mnb(&rows, &labels, classes.len(), vocab.size(), alpha).map_err(
            |e| match e {
                Error::EmptyClass(idx) => {
                    let name = idx
                        .strip_prefix("class index ")
                        .and_then(|i| i.parse::<usize>().ok())
                        .and_then(|i| classes.get(i).cloned())
                        .unwrap_or(idx);
                    Error::EmptyClass(name)
                }
                other => other,
            },
        )?;
        Ok(MnbModel {
            classes,
            spec,
            vocab,
            stats,
        })
    }

    pub fn vectorize(&self, text: &str) -> SparseVector {
        let tokens = ngrams_up_to(text, &self.spec);
        vectorize_counts(&tokens, &self.vocab)
    }
}

impl TextClassifier for MnbModel {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn predict_proba(&self, text: &str) -> Vec<f64> {
        mnb_log_posterior(&self.stats, &self.vectorize(text))
            .into_iter()
            .map(f64::exp)
            .collect()
    }
}

/// Softmax regression text classifier with its training configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub classes: Vec<String>,
    pub spec: NgramSpec,
    pub vocab: Vocabulary,
    pub config: LogRegConfig,
    pub params: LogRegParams,
}

impl LogRegModel {
    pub fn fit(
        train: &Corpus,
        spec: NgramSpec,
        config: LogRegConfig,
        vocab_config: VocabConfig,
    ) -> Result<Self> {
        let train = train.known_only();
        if train.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let classes = train.registry().codes();
        let vocab = build_corpus_vocab(&train, &spec, vocab_config);
        let (rows, labels) = count_rows(&train, &spec, &vocab, &classes)?;
        let params = train_logreg(&rows, &labels, classes.len(), vocab.size(), &config)?;
        Ok(LogRegModel {
            classes,
            spec,
            vocab,
            config,
            params,
        })
    }

    pub fn vectorize(&self, text: &str) -> SparseVector {
        let tokens = ngrams_up_to(text, &self.spec);
        vectorize_counts(&tokens, &self.vocab)
    }
}

impl TextClassifier for LogRegModel {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn predict_proba(&self, text: &str) -> Vec<f64> {
        logreg_proba(&self.params, &self.vectorize(text))
    }
}

/// Training-set accuracy of a fitted parameter set over prepared rows.
pub fn rows_accuracy<F: Fn(&SparseVector) -> Vec<f64>>(
    predict: F,
    rows: &[SparseVector],
    labels: &[usize],
) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let correct = rows
        .iter()
        .zip(labels)
        .filter(|(row, &label)| argmax(&predict(row)) == label)
        .count();
    correct as f64 / rows.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sv(pairs: &[(u32, f64)]) -> SparseVector {
        SparseVector::from_pairs(pairs.iter().copied())
    }

    /// Brute-force oracle: explicit products over the token multiset, no
    /// log-space, estimated directly from raw document token lists.
    fn mnb_oracle_posterior(
        docs: &[Vec<u32>],
        labels: &[usize],
        n_classes: usize,
        vocab_size: usize,
        alpha: f64,
        query: &[u32],
    ) -> Vec<f64> {
        let mut class_docs = vec![0usize; n_classes];
        let mut counts = vec![vec![0u64; vocab_size]; n_classes];
        for (doc, &label) in docs.iter().zip(labels) {
            class_docs[label] += 1;
            for &t in doc {
                counts[label][t as usize] += 1;
            }
        }
        let mut posterior: Vec<f64> = (0..n_classes)
            .map(|c| {
                let prior = class_docs[c] as f64 / docs.len() as f64;
                let class_total: f64 = counts[c].iter().map(|&x| x as f64).sum();
                let denom = class_total + alpha * vocab_size as f64;
                let mut p = prior;
                for &t in query {
                    p *= (counts[c][t as usize] as f64 + alpha) / denom;
                }
                p
            })
            .collect();
        let total: f64 = posterior.iter().sum();
        for p in posterior.iter_mut() {
            *p /= total;
        }
        posterior
    }

    fn fit_from_docs(
        docs: &[Vec<u32>],
        labels: &[usize],
        n_classes: usize,
        vocab_size: usize,
        alpha: f64,
    ) -> MnbStats {
        let rows: Vec<SparseVector> = docs
            .iter()
            .map(|doc| SparseVector::from_pairs(doc.iter().map(|&t| (t, 1.0))))
            .collect();
        train_mnb(&rows, labels, n_classes, vocab_size, alpha).unwrap()
    }

    #[test]
    fn mirror_symmetric_classes_are_balanced() {
        // class 0 sees token 0, class 1 sees token 1, same shapes
        let rows = vec![sv(&[(0, 2.0)]), sv(&[(1, 2.0)])];
        let stats = train_mnb(&rows, &[0, 1], 2, 2, 1.0).unwrap();
        assert!((stats.log_priors[0] - stats.log_priors[1]).abs() < 1e-12);
        assert!(
            (stats.log_likelihood[0][0] - stats.log_likelihood[1][1]).abs() < 1e-12
        );
        // symmetric input: equal mass on both tokens
        let posterior = mnb_log_posterior(&stats, &sv(&[(0, 1.0), (1, 1.0)]));
        assert!((posterior[0].exp() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn smoothed_likelihood_hand_case() {
        // docs: two ["a"] under c1, one ["b"] under c2; V = {a, b}, alpha = 1
        let docs = vec![vec![0], vec![0], vec![1]];
        let labels = vec![0, 0, 1];
        let stats = fit_from_docs(&docs, &labels, 2, 2, 1.0);
        // P(a|c1) = (2+1)/(2+2) = 0.75
        assert!((stats.log_likelihood[0][0].exp() - 0.75).abs() < 1e-12);
        // P(a|c2) = (0+1)/(1+2) = 1/3
        assert!((stats.log_likelihood[1][0].exp() - 1.0 / 3.0).abs() < 1e-12);

        // posterior for x = {a:1}: (2/3 · 3/4) / (2/3 · 3/4 + 1/3 · 1/3) = 6/7
        let query = vec![0u32];
        let posterior = mnb_log_posterior(&stats, &sv(&[(0, 1.0)]));
        assert!((posterior[0].exp() - 6.0 / 7.0).abs() < 1e-12);
        let oracle = mnb_oracle_posterior(&docs, &labels, 2, 2, 1.0, &query);
        assert!((posterior[0].exp() - oracle[0]).abs() < 1e-12);
    }

    #[test]
    fn likelihood_rows_sum_to_one() {
        let docs = vec![vec![0, 0, 1], vec![2], vec![1, 1]];
        let stats = fit_from_docs(&docs, &[0, 1, 1], 2, 3, 0.5);
        for row in &stats.log_likelihood {
            let total: f64 = row.iter().map(|lp| lp.exp()).sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
        let prior_total: f64 = stats.log_priors.iter().map(|lp| lp.exp()).sum();
        assert!((prior_total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unseen_token_stays_finite() {
        let stats = fit_from_docs(&[vec![0], vec![1]], &[0, 1], 2, 3, 1.0);
        let posterior = mnb_log_posterior(&stats, &sv(&[(2, 5.0)]));
        assert!(posterior.iter().all(|p| p.is_finite()));
    }

    #[test]
    fn empty_input_recovers_priors() {
        let stats = fit_from_docs(&[vec![0], vec![0], vec![1]], &[0, 0, 1], 2, 2, 1.0);
        let posterior = mnb_log_posterior(&stats, &sv(&[]));
        assert!((posterior[0].exp() - 2.0 / 3.0).abs() < 1e-12);
        assert!((posterior[1].exp() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_model_gives_uniform_posterior() {
        let stats = fit_from_docs(&[vec![0], vec![0]], &[0, 1], 2, 1, 1.0);
        let posterior = mnb_log_posterior(&stats, &sv(&[(0, 3.0)]));
        for lp in &posterior {
            assert!((lp.exp() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn class_without_examples_is_an_error() {
        let rows = vec![sv(&[(0, 1.0)])];
        assert!(matches!(
            train_mnb(&rows, &[0], 2, 1, 1.0),
            Err(Error::EmptyClass(_))
        ));
    }

    #[test]
    fn posterior_matches_bruteforce_oracle_on_random_corpora() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..25 {
            let n_classes = rng.gen_range(2..=3);
            let vocab_size = rng.gen_range(2..=8);
            let n_docs = rng.gen_range(n_classes..=10);
            let mut docs = Vec::new();
            let mut labels = Vec::new();
            for i in 0..n_docs {
                let len = rng.gen_range(1..=6);
                docs.push((0..len).map(|_| rng.gen_range(0..vocab_size as u32)).collect());
                labels.push(if i < n_classes { i } else { rng.gen_range(0..n_classes) });
            }
            let alpha = rng.gen_range(0.25..2.0);
            let stats = fit_from_docs(&docs, &labels, n_classes, vocab_size, alpha);
            let query: Vec<u32> =
                (0..rng.gen_range(0..6)).map(|_| rng.gen_range(0..vocab_size as u32)).collect();
            let x = SparseVector::from_pairs(query.iter().map(|&t| (t, 1.0)));
            let ours = mnb_log_posterior(&stats, &x);
            let oracle = mnb_oracle_posterior(&docs, &labels, n_classes, vocab_size, alpha, &query);
            for (lp, p) in ours.iter().zip(&oracle) {
                assert!((lp.exp() - p).abs() < 1e-9, "mismatch {} vs {}", lp.exp(), p);
            }
        }
    }

    #[test]
    fn separable_toy_fits_perfectly() {
        // disjoint features per class
        let rows = vec![
            sv(&[(0, 2.0)]),
            sv(&[(0, 1.0)]),
            sv(&[(1, 2.0)]),
            sv(&[(1, 1.0)]),
        ];
        let labels = vec![0, 0, 1, 1];
        let config = LogRegConfig {
            lambda: 0.0,
            epochs: 50,
            learning_rate: 0.5,
            batch_size: 2,
            seed: 3,
        };
        let params = train_logreg(&rows, &labels, 2, 2, &config).unwrap();
        let acc = rows_accuracy(|r| logreg_proba(&params, r), &rows, &labels);
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn zero_learning_rate_keeps_uniform_predictions() {
        let rows = vec![sv(&[(0, 1.0)]), sv(&[(1, 1.0)])];
        let config = LogRegConfig {
            lambda: 0.0,
            epochs: 1,
            learning_rate: 0.0,
            batch_size: 64,
            seed: 0,
        };
        let params = train_logreg(&rows, &[0, 1], 2, 2, &config).unwrap();
        let probs = logreg_proba(&params, &rows[0]);
        assert!((probs[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn huge_lambda_shrinks_weights_to_prior_predictor() {
        // imbalanced classes: 3 of class 0, 1 of class 1
        let rows = vec![
            sv(&[(0, 1.0)]),
            sv(&[(0, 1.0)]),
            sv(&[(0, 1.0)]),
            sv(&[(1, 1.0)]),
        ];
        let labels = vec![0, 0, 0, 1];
        let config = LogRegConfig {
            lambda: 1e6,
            epochs: 200,
            learning_rate: 1e-6,
            batch_size: 4,
            seed: 0,
        };
        let params = train_logreg(&rows, &labels, 2, 2, &config).unwrap();
        assert!(params.weight_norm() < 1e-3, "norm = {}", params.weight_norm());
        // bias alone should lean toward the majority class prior
        let probs = logreg_proba(&params, &sv(&[]));
        assert!(probs[0] > probs[1]);
    }

    #[test]
    fn softmax_hand_case() {
        let params = LogRegParams {
            weights: vec![vec![2.0f64.ln()], vec![0.0]],
            bias: vec![0.0, 0.0],
        };
        let probs = logreg_proba(&params, &sv(&[(0, 1.0)]));
        assert!((probs[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((probs[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn constant_bias_shift_leaves_probabilities_uniform() {
        let params = LogRegParams {
            weights: vec![vec![0.0], vec![0.0], vec![0.0]],
            bias: vec![1.0, 1.0, 1.0],
        };
        let probs = logreg_proba(&params, &sv(&[(0, 2.0)]));
        for p in &probs {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let n_classes = rng.gen_range(2..=4);
            let vocab_size = rng.gen_range(2..=20);
            let n_rows = rng.gen_range(1..=6);
            let rows_owned: Vec<SparseVector> = (0..n_rows)
                .map(|_| {
                    let nnz = rng.gen_range(1..=vocab_size.min(5));
                    SparseVector::from_pairs(
                        (0..nnz).map(|_| {
                            (rng.gen_range(0..vocab_size as u32), rng.gen_range(0.5..3.0))
                        }),
                    )
                })
                .collect();
            let rows: Vec<&SparseVector> = rows_owned.iter().collect();
            let labels: Vec<usize> =
                (0..n_rows).map(|_| rng.gen_range(0..n_classes)).collect();
            let lambda = rng.gen_range(0.0..0.5);
            let mut params = LogRegParams::zeros(n_classes, vocab_size);
            for row in params.weights.iter_mut() {
                for w in row.iter_mut() {
                    *w = rng.gen_range(-1.0..1.0);
                }
            }
            for b in params.bias.iter_mut() {
                *b = rng.gen_range(-1.0..1.0);
            }

            let (_, grad) = logreg_loss_grad(&params, &rows, &labels, lambda);
            let eps = 1e-6;
            let mut check = |get: &dyn Fn(&LogRegParams) -> f64,
                             set: &dyn Fn(&mut LogRegParams, f64),
                             analytic: f64| {
                let original = get(&params);
                let mut plus = params.clone();
                set(&mut plus, original + eps);
                let mut minus = params.clone();
                set(&mut minus, original - eps);
                let (lp, _) = logreg_loss_grad(&plus, &rows, &labels, lambda);
                let (lm, _) = logreg_loss_grad(&minus, &rows, &labels, lambda);
                let numeric = (lp - lm) / (2.0 * eps);
                let denom = numeric.abs().max(analytic.abs()).max(1e-8);
                assert!(
                    ((numeric - analytic) / denom).abs() < 1e-6,
                    "numeric {numeric} vs analytic {analytic}"
                );
            };
            for c in 0..n_classes {
                for v in 0..vocab_size {
                    check(
                        &move |p: &LogRegParams| p.weights[c][v],
                        &move |p: &mut LogRegParams, x| p.weights[c][v] = x,
                        grad.weights[c][v],
                    );
                }
                check(
                    &move |p: &LogRegParams| p.bias[c],
                    &move |p: &mut LogRegParams, x| p.bias[c] = x,
                    grad.bias[c],
                );
            }
        }
    }

    #[test]
    fn training_is_deterministic() {
        let rows = vec![
            sv(&[(0, 1.0), (2, 2.0)]),
            sv(&[(1, 1.0)]),
            sv(&[(2, 3.0)]),
            sv(&[(0, 1.0)]),
        ];
        let labels = vec![0, 1, 0, 1];
        let config = LogRegConfig {
            epochs: 5,
            batch_size: 2,
            seed: 9,
            ..Default::default()
        };
        let a = train_logreg(&rows, &labels, 2, 3, &config).unwrap();
        let b = train_logreg(&rows, &labels, 2, 3, &config).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn divergence_is_reported_with_location() {
        let rows = vec![sv(&[(0, 1e60)]), sv(&[(1, 1e60)])];
        let config = LogRegConfig {
            lambda: 0.0,
            epochs: 5,
            learning_rate: 1e250,
            batch_size: 2,
            seed: 0,
        };
        match train_logreg(&rows, &[0, 1], 2, 2, &config) {
            Err(Error::NonFiniteLoss { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn softmax_shift_invariance(logits in proptest::collection::vec(-20.0f64..20.0, 2..6), shift in -50.0f64..50.0) {
            let base = softmax(&logits);
            let shifted: Vec<f64> = logits.iter().map(|z| z + shift).collect();
            for (a, b) in base.iter().zip(softmax(&shifted)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
