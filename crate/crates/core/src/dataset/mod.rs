//! Balanced, fixed-length, labeled dataset construction.
//!
//! Pipeline: length filter, reversal augmentation, fake generation
//! (homopolymers plus fragment mutants, one fake per real), stratified
//! split, right-padded encoding.

mod histogram;
mod io;
mod negatives;
mod split;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seq::{reverse, EncodedSample, ProteinSequence, Vocabulary, PAD_INDEX};

pub use histogram::{bucket_of, length_histogram, LengthBucket, LengthHistogram, LENGTH_BUCKETS};
pub use io::{read_dataset, read_samples, write_dataset, write_samples, DATASET_HEADER};
pub use negatives::{
    build_balanced, fragment_len, gen_homopolymer_negatives, gen_mutation_negative, mutate,
    sample_fragment, Fragment, HOMOPOLYMER_PREFIX, MUTATION_MARKER,
};
pub use split::split_and_encode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BuildConfig {
    pub max_len: usize,
    /// Add the reversal of every retained sequence as another positive.
    pub augment_reverse: bool,
    pub mutation_frac_lo: f64,
    pub mutation_frac_hi: f64,
    pub train_ratio: f64,
    pub seed: u64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            max_len: 1500,
            augment_reverse: true,
            mutation_frac_lo: 0.05,
            mutation_frac_hi: 0.07,
            train_ratio: 0.8,
            seed: 0,
        }
    }
}

impl BuildConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_len < 1 {
            return Err(Error::InvalidConfig("max_len must be at least 1".into()));
        }
        if !(0.0 < self.mutation_frac_lo
            && self.mutation_frac_lo <= self.mutation_frac_hi
            && self.mutation_frac_hi < 1.0)
        {
            return Err(Error::InvalidConfig(
                "mutation fractions must satisfy 0 < lo <= hi < 1".into(),
            ));
        }
        if !(0.0 < self.train_ratio && self.train_ratio < 1.0) {
            return Err(Error::InvalidConfig("train_ratio must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Test,
}

/// Encoded samples sharing one vocabulary and one fixed length.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub samples: Vec<EncodedSample>,
    pub vocab: Vocabulary,
    pub split: SplitTag,
    pub max_len: usize,
}

impl LabeledDataset {
    /// Checks length, index range and pad-suffix invariants.
    pub fn new(
        samples: Vec<EncodedSample>,
        vocab: Vocabulary,
        split: SplitTag,
        max_len: usize,
    ) -> Result<Self> {
        let v = vocab.len() as u32;
        for s in &samples {
            if s.indices.len() != max_len {
                return Err(Error::VocabularyMismatch(format!(
                    "sample {} has length {}, expected {max_len}",
                    s.id,
                    s.indices.len()
                )));
            }
            if let Some(&bad) = s.indices.iter().find(|&&i| i > v) {
                return Err(Error::VocabularyMismatch(format!(
                    "sample {} uses index {bad} but the vocabulary has {v} codes",
                    s.id
                )));
            }
            let content = s.content_len();
            if s.indices[content..].iter().any(|&i| i != PAD_INDEX) {
                return Err(Error::VocabularyMismatch(format!(
                    "sample {} has tokens after padding",
                    s.id
                )));
            }
        }
        Ok(Self {
            samples,
            vocab,
            split,
            max_len,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.samples.iter().filter(|s| s.label.is_real()).count()
    }

    pub fn negatives(&self) -> usize {
        self.len() - self.positives()
    }
}

/// Keeps sequences of length `<= max_len`, in order.
pub fn filter_by_length(seqs: Vec<ProteinSequence>, max_len: usize) -> Vec<ProteinSequence> {
    seqs.into_iter().filter(|s| s.len() <= max_len).collect()
}

/// Originals followed by their reversals.
pub fn augment_reverse(seqs: Vec<ProteinSequence>) -> Vec<ProteinSequence> {
    let reversed: Vec<_> = seqs.iter().map(reverse).collect();
    let mut out = seqs;
    out.extend(reversed);
    out
}

/// Summary of a dataset build, printed by the CLI as one JSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildStats {
    pub histogram: LengthHistogram,
    pub total: usize,
    pub retained: usize,
    pub retention: f64,
    pub vocab_size: usize,
    pub positives: usize,
    pub negatives: usize,
    pub homopolymers: usize,
    pub mutants: usize,
    pub train: usize,
    pub test: usize,
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub vocab: Vocabulary,
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub stats: BuildStats,
}

/// Runs the whole pipeline on an ingested corpus.
///
/// The vocabulary covers every ingested sequence, including the ones later
/// removed by the length filter.
pub fn build_dataset(corpus: Vec<ProteinSequence>, cfg: &BuildConfig) -> Result<BuildOutput> {
    cfg.validate()?;
    let histogram = length_histogram(&corpus)?;
    let vocab = Vocabulary::build(&corpus);
    let total = corpus.len();
    let retained = filter_by_length(corpus, cfg.max_len);
    let n_retained = retained.len();
    if n_retained == 0 {
        return Err(Error::TooFewPositives {
            needed: vocab.len().max(1),
            got: 0,
        });
    }
    let positives = if cfg.augment_reverse {
        augment_reverse(retained)
    } else {
        retained
    };
    let n_pos = positives.len();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let labeled = build_balanced(positives, &vocab, cfg, &mut rng)?;
    let negatives = labeled.len() - n_pos;
    let (train, test) = split_and_encode(labeled, &vocab, cfg, &mut rng)?;

    let stats = BuildStats {
        histogram,
        total,
        retained: n_retained,
        retention: n_retained as f64 / total as f64,
        vocab_size: vocab.len(),
        positives: n_pos,
        negatives,
        homopolymers: vocab.len(),
        mutants: negatives - vocab.len(),
        train: train.len(),
        test: test.len(),
    };
    Ok(BuildOutput {
        vocab,
        train,
        test,
        stats,
    })
}
