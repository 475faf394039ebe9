//! Synthetic fake sequences: homopolymers and fragment mutations.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::BuildConfig;
use crate::error::{Error, Result};
use crate::seq::{Label, ProteinSequence, Vocabulary};

pub const HOMOPOLYMER_PREFIX: &str = "HOMO_";
pub const MUTATION_MARKER: &str = "~mut";

/// One full-length run of each vocabulary code.
pub fn gen_homopolymer_negatives(vocab: &Vocabulary, max_len: usize) -> Vec<ProteinSequence> {
    vocab
        .codes()
        .iter()
        .map(|&code| {
            ProteinSequence::new(
                format!("{HOMOPOLYMER_PREFIX}{code}"),
                vec![code; max_len.max(1)],
            )
            .expect("max_len >= 1")
        })
        .collect()
}

/// Placement of a replaced fragment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fragment {
    pub start: usize,
    pub len: usize,
    /// The uniform fraction drawn before rounding.
    pub fraction: f64,
}

/// `max(1, round_half_up(fraction * seq_len))`.
pub fn fragment_len(fraction: f64, seq_len: usize) -> usize {
    let l = (fraction * seq_len as f64 + 0.5).floor() as usize;
    l.clamp(1, seq_len.max(1))
}

pub fn sample_fragment<R: Rng + ?Sized>(seq_len: usize, cfg: &BuildConfig, rng: &mut R) -> Fragment {
    let fraction = rng.gen_range(cfg.mutation_frac_lo..=cfg.mutation_frac_hi);
    let len = fragment_len(fraction, seq_len);
    let start = rng.gen_range(0..=seq_len - len);
    Fragment {
        start,
        len,
        fraction,
    }
}

/// Replaces one random contiguous fragment of `seq` with codes drawn
/// uniformly from `vocab`. Returns the mutant and where it was changed.
pub fn mutate<R: Rng + ?Sized>(
    seq: &ProteinSequence,
    vocab: &Vocabulary,
    cfg: &BuildConfig,
    rng: &mut R,
) -> (ProteinSequence, Fragment) {
    let fragment = sample_fragment(seq.len(), cfg, rng);
    let mut out = seq.clone().with_id(format!("{}{MUTATION_MARKER}", seq.id()));
    let codes = vocab.codes();
    for slot in &mut out.tokens_mut()[fragment.start..fragment.start + fragment.len] {
        *slot = codes[rng.gen_range(0..codes.len())];
    }
    (out, fragment)
}

pub fn gen_mutation_negative<R: Rng + ?Sized>(
    seq: &ProteinSequence,
    vocab: &Vocabulary,
    cfg: &BuildConfig,
    rng: &mut R,
) -> ProteinSequence {
    mutate(seq, vocab, cfg, rng).0
}

/// Per-sample generator: stream `ordinal` of a ChaCha8 seeded with `base`.
pub(crate) fn sample_rng(base: u64, ordinal: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(ordinal);
    rng
}

/// Labels every positive `Real` and adds an equal number of fakes: the `V`
/// homopolymers plus `|reals| - V` mutants, each made from a distinct
/// positive picked through a random permutation.
pub fn build_balanced<R: Rng + ?Sized>(
    reals: Vec<ProteinSequence>,
    vocab: &Vocabulary,
    cfg: &BuildConfig,
    rng: &mut R,
) -> Result<Vec<(ProteinSequence, Label)>> {
    let homopolymers = gen_homopolymer_negatives(vocab, cfg.max_len);
    if vocab.is_empty() || reals.len() < homopolymers.len() {
        return Err(Error::TooFewPositives {
            needed: homopolymers.len().max(1),
            got: reals.len(),
        });
    }
    let n_mutants = reals.len() - homopolymers.len();
    let mut order: Vec<usize> = (0..reals.len()).collect();
    order.shuffle(rng);
    let base = rng.next_u64();

    let mutants: Vec<ProteinSequence> = (0..n_mutants)
        .into_par_iter()
        .map(|k| {
            let source = &reals[order[k % order.len()]];
            let mut local = sample_rng(base, k as u64);
            gen_mutation_negative(source, vocab, cfg, &mut local)
        })
        .collect();

    let mut out = Vec::with_capacity(2 * reals.len());
    out.extend(reals.into_iter().map(|s| (s, Label::Real)));
    out.extend(homopolymers.into_iter().map(|s| (s, Label::Fake)));
    out.extend(mutants.into_iter().map(|s| (s, Label::Fake)));
    Ok(out)
}
