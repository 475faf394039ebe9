//! Synthetic corpora for tests, benchmarks and the bundled toy data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::LENGTH_BUCKETS;
use crate::seq::{MonomerCode, ProteinSequence};

/// The twenty standard residues plus selenomethionine, an unknown residue
/// and pyrrolysine: 23 codes.
pub const TOY_CODES: [&str; 23] = [
    "ALA", "ARG", "ASN", "ASP", "CYS", "GLN", "GLU", "GLY", "HIS", "ILE", "LEU", "LYS", "MET",
    "PHE", "PRO", "SER", "THR", "TRP", "TYR", "VAL", "MSE", "UNK", "PYL",
];

/// Sequence counts per length bucket in the preliminary analysis of the
/// full corpus (105,123 sequences).
pub const TABLE1_COUNTS: [u64; 7] = [96, 3_149, 83_526, 9_107, 9_117, 127, 1];

/// First-order Markov chain in which every code has two preferred
/// successors. Generated sequences follow preferred transitions except
/// with probability `noise` (zero by default), so a fragment of uniformly
/// random codes stands out locally.
#[derive(Debug, Clone)]
pub struct MarkovGenerator {
    codes: Vec<MonomerCode>,
    successors: Vec<[usize; 2]>,
    /// Probability of an arbitrary (uniform) next code.
    pub noise: f64,
    pub min_len: usize,
    pub max_len: usize,
}

impl MarkovGenerator {
    pub fn new(seed: u64, min_len: usize, max_len: usize) -> Self {
        let codes: Vec<MonomerCode> = TOY_CODES
            .iter()
            .map(|c| MonomerCode::new(*c).expect("valid code"))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = codes.len();
        let successors = (0..n)
            .map(|_| {
                let a = rng.gen_range(0..n);
                let mut b = rng.gen_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                [a, b]
            })
            .collect();
        Self {
            codes,
            successors,
            noise: 0.0,
            min_len,
            max_len,
        }
    }

    pub fn codes(&self) -> &[MonomerCode] {
        &self.codes
    }

    pub fn sequence<R: Rng + ?Sized>(&self, id: String, rng: &mut R) -> ProteinSequence {
        let len = rng.gen_range(self.min_len..=self.max_len);
        let n = self.codes.len();
        let mut state = rng.gen_range(0..n);
        let mut tokens = Vec::with_capacity(len);
        for _ in 0..len {
            tokens.push(self.codes[state]);
            state = if rng.gen_bool(self.noise) {
                rng.gen_range(0..n)
            } else {
                self.successors[state][rng.gen_range(0..2)]
            };
        }
        ProteinSequence::new(id, tokens).expect("min_len >= 1")
    }

    /// `count` sequences with ids `SYN{i:05}_1`.
    pub fn corpus(&self, count: usize, seed: u64) -> Vec<ProteinSequence> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|i| self.sequence(format!("SYN{i:05}_1"), &mut rng))
            .collect()
    }
}

/// A corpus whose length histogram reproduces [`TABLE1_COUNTS`] exactly.
///
/// Lengths are spread deterministically over each bucket's range, except in
/// the buckets above 1,500 where the bucket minimum is used to bound memory.
pub fn table1_corpus() -> Vec<ProteinSequence> {
    let codes: Vec<MonomerCode> = TOY_CODES
        .iter()
        .map(|c| MonomerCode::new(*c).expect("valid code"))
        .collect();
    let mut out = Vec::with_capacity(TABLE1_COUNTS.iter().sum::<u64>() as usize);
    for (&(lo, hi), &count) in LENGTH_BUCKETS.iter().zip(&TABLE1_COUNTS) {
        for i in 0..count as usize {
            let len = if hi <= 1_500 {
                lo + (i * 7919) % (hi - lo + 1)
            } else {
                lo
            };
            let tokens = (0..len).map(|j| codes[(i + j) % codes.len()]).collect();
            let seq = ProteinSequence::new(format!("T1_{}", out.len()), tokens)
                .expect("lengths are >= 1");
            out.push(seq);
        }
    }
    out
}
