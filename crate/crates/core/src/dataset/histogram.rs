use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seq::ProteinSequence;

/// Inclusive length intervals of the preliminary corpus analysis.
pub const LENGTH_BUCKETS: [(usize, usize); 7] = [
    (1, 9),
    (10, 99),
    (100, 999),
    (1_000, 1_500),
    (1_501, 9_999),
    (10_000, 99_999),
    (100_000, 1_000_000),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthBucket {
    pub lo: usize,
    pub hi: usize,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthHistogram {
    pub buckets: Vec<LengthBucket>,
}

impl Default for LengthHistogram {
    fn default() -> Self {
        Self {
            buckets: LENGTH_BUCKETS
                .iter()
                .map(|&(lo, hi)| LengthBucket { lo, hi, count: 0 })
                .collect(),
        }
    }
}

impl LengthHistogram {
    pub fn add(&mut self, len: usize) -> Result<()> {
        let bucket = bucket_of(len).ok_or(Error::LengthOutOfRange(len))?;
        self.buckets[bucket].count += 1;
        Ok(())
    }

    pub fn counts(&self) -> Vec<u64> {
        self.buckets.iter().map(|b| b.count).collect()
    }

    pub fn total(&self) -> u64 {
        self.buckets.iter().map(|b| b.count).sum()
    }

    /// Sequences in buckets lying entirely at or below `max_len`.
    pub fn count_at_most(&self, max_len: usize) -> u64 {
        self.buckets
            .iter()
            .filter(|b| b.hi <= max_len)
            .map(|b| b.count)
            .sum()
    }
}

/// Index into [`LENGTH_BUCKETS`], or `None` for 0 and lengths above 10^6.
pub fn bucket_of(len: usize) -> Option<usize> {
    LENGTH_BUCKETS
        .iter()
        .position(|&(lo, hi)| (lo..=hi).contains(&len))
}

pub fn length_histogram<'a, I>(seqs: I) -> Result<LengthHistogram>
where
    I: IntoIterator<Item = &'a ProteinSequence>,
{
    let mut hist = LengthHistogram::default();
    for seq in seqs {
        hist.add(seq.len())?;
    }
    Ok(hist)
}
