use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{bucket_of, LabeledDataset, LENGTH_BUCKETS};
use crate::error::{Error, Result};
use crate::nn::{Model, Real};
use crate::seq::Vocabulary;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn record(&mut self, predicted_real: bool, actual_real: bool) {
        match (predicted_real, actual_real) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => (self.tp + self.tn) as f64 / n as f64,
        }
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }
}

/// Confusion counts for samples whose unpadded length falls in one bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketConfusion {
    pub lo: usize,
    pub hi: usize,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    /// Only buckets that received samples.
    pub by_length: Vec<BucketConfusion>,
}

/// Checks that `dataset` was encoded for `model` (and, if given, `vocab`).
pub fn check_compatible(model: &Model, dataset: &LabeledDataset, vocab: Option<&Vocabulary>) -> Result<()> {
    if dataset.max_len != model.config.input_len {
        return Err(Error::VocabularyMismatch(format!(
            "dataset length {} differs from model input length {}",
            dataset.max_len, model.config.input_len
        )));
    }
    if dataset.vocab.len() > model.config.vocab_size {
        return Err(Error::VocabularyMismatch(format!(
            "dataset vocabulary has {} codes, model has {}",
            dataset.vocab.len(),
            model.config.vocab_size
        )));
    }
    if let Some(v) = vocab {
        if *v != dataset.vocab {
            return Err(Error::VocabularyMismatch(
                "dataset and model vocabularies differ".into(),
            ));
        }
    }
    Ok(())
}

/// Per-sample `(loss, probability)` in dataset order.
pub fn score(model: &Model, dataset: &LabeledDataset) -> Result<Vec<(Real, Real)>> {
    dataset
        .samples
        .par_iter()
        .map(|s| model.loss(&s.indices, s.label.as_u8() as Real))
        .collect()
}

/// Thresholded evaluation: a sample is predicted real iff `p >= threshold`.
///
/// Per-sample losses are reduced sequentially in dataset order, so the
/// result does not depend on how the work is scheduled.
pub fn evaluate(model: &Model, dataset: &LabeledDataset, threshold: f64) -> Result<Evaluation> {
    check_compatible(model, dataset, None)?;
    let scores = score(model, dataset)?;
    Ok(summarize(dataset, &scores, threshold))
}

pub(crate) fn summarize(dataset: &LabeledDataset, scores: &[(Real, Real)], threshold: f64) -> Evaluation {
    let mut confusion = ConfusionMatrix::default();
    let mut buckets = [ConfusionMatrix::default(); LENGTH_BUCKETS.len()];
    let mut loss_sum = 0.0f64;
    for (sample, &(loss, p)) in dataset.samples.iter().zip(scores) {
        let predicted = p as f64 >= threshold;
        let actual = sample.label.is_real();
        confusion.record(predicted, actual);
        if let Some(b) = bucket_of(sample.content_len()) {
            buckets[b].record(predicted, actual);
        }
        loss_sum += loss as f64;
    }
    let n = dataset.len().max(1) as f64;
    Evaluation {
        loss: loss_sum / n,
        accuracy: confusion.accuracy(),
        confusion,
        by_length: LENGTH_BUCKETS
            .iter()
            .zip(buckets)
            .filter(|(_, c)| c.total() > 0)
            .map(|(&(lo, hi), confusion)| BucketConfusion { lo, hi, confusion })
            .collect(),
    }
}
