use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::{BuildConfig, LabeledDataset, SplitTag};
use crate::error::Result;
use crate::seq::{encode, EncodedSample, Label, ProteinSequence, Vocabulary};

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Stratified shuffle-split followed by fixed-length encoding.
///
/// `round(train_ratio * N)` samples go to train; the positive share of the
/// train split is `round(n_train * positives / N)` so both splits keep the
/// overall class ratio to within one sample.
pub fn split_and_encode<R: Rng + ?Sized>(
    labeled: Vec<(ProteinSequence, Label)>,
    vocab: &Vocabulary,
    cfg: &BuildConfig,
    rng: &mut R,
) -> Result<(LabeledDataset, LabeledDataset)> {
    cfg.validate()?;
    let n = labeled.len();
    let (mut pos, mut neg): (Vec<_>, Vec<_>) = labeled.into_iter().partition(|(_, l)| l.is_real());
    pos.shuffle(rng);
    neg.shuffle(rng);

    let n_train = round_half_up(cfg.train_ratio * n as f64).min(n);
    let n_train_pos = if n == 0 {
        0
    } else {
        round_half_up(n_train as f64 * pos.len() as f64 / n as f64).min(pos.len())
    };
    let n_train_neg = (n_train - n_train_pos).min(neg.len());

    let test_pos = pos.split_off(n_train_pos);
    let test_neg = neg.split_off(n_train_neg);
    let mut train: Vec<_> = pos.into_iter().chain(neg).collect();
    let mut test: Vec<_> = test_pos.into_iter().chain(test_neg).collect();
    train.shuffle(rng);
    test.shuffle(rng);

    let encode_all = |part: Vec<(ProteinSequence, Label)>| -> Result<Vec<EncodedSample>> {
        part.into_par_iter()
            .map(|(seq, label)| {
                Ok(EncodedSample {
                    indices: encode(&seq, vocab, cfg.max_len)?,
                    id: seq.id().to_string(),
                    label,
                })
            })
            .collect()
    };
    let train = LabeledDataset::new(encode_all(train)?, vocab.clone(), SplitTag::Train, cfg.max_len)?;
    let test = LabeledDataset::new(encode_all(test)?, vocab.clone(), SplitTag::Test, cfg.max_len)?;
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq::MonomerCode;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn labeled(n_pos: usize, n_neg: usize) -> (Vec<(ProteinSequence, Label)>, Vocabulary) {
        let codes: Vec<_> = ["ALA", "GLY", "SER"]
            .iter()
            .map(|c| MonomerCode::new(*c).unwrap())
            .collect();
        let vocab = Vocabulary::from_codes(codes.clone()).unwrap();
        let mk = |i: usize, label| {
            let tokens = (0..(i % 7) + 1).map(|j| codes[(i + j) % 3]).collect();
            (ProteinSequence::new(format!("s{i}"), tokens).unwrap(), label)
        };
        let mut out: Vec<_> = (0..n_pos).map(|i| mk(i, Label::Real)).collect();
        out.extend((n_pos..n_pos + n_neg).map(|i| mk(i, Label::Fake)));
        (out, vocab)
    }

    fn cfg(ratio: f64) -> BuildConfig {
        BuildConfig {
            max_len: 10,
            train_ratio: ratio,
            ..BuildConfig::default()
        }
    }

    #[test]
    fn ten_samples_eight_two() {
        let (data, vocab) = labeled(5, 5);
        let (train, test) =
            split_and_encode(data, &vocab, &cfg(0.8), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        assert_eq!(train.positives(), 4);
        assert!(train.samples.iter().all(|s| s.indices.len() == 10));
    }

    #[test]
    fn same_seed_same_split() {
        let run = || {
            let (data, vocab) = labeled(40, 40);
            split_and_encode(data, &vocab, &cfg(0.7), &mut ChaCha8Rng::seed_from_u64(9)).unwrap()
        };
        let (a_train, a_test) = run();
        let (b_train, b_test) = run();
        assert_eq!(a_train.samples, b_train.samples);
        assert_eq!(a_test.samples, b_test.samples);
    }

    #[test]
    fn stratification_holds_for_unbalanced_input() {
        let (data, vocab) = labeled(300, 700);
        let (train, test) =
            split_and_encode(data, &vocab, &cfg(0.8), &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(train.len(), 800);
        let share = |d: &LabeledDataset| d.positives() as f64 / d.len() as f64;
        assert!((share(&train) - 0.3).abs() <= 0.01);
        assert!((share(&test) - 0.3).abs() <= 0.01);
    }
}
