//! Sequence domain types and the token vocabulary.
//!
//! Monomer codes are opaque uppercase identifiers taken straight from the
//! corpus. The vocabulary maps them onto `1..=V` in lexicographic order and
//! reserves index `0` for right padding.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index written into padded positions. Never assigned to a code.
pub const PAD_INDEX: u32 = 0;

/// Suffix appended to the id of a reversed sequence.
pub const REVERSED_MARKER: &str = "~rev";

/// Longest monomer code accepted. Chemical component ids are at most five
/// characters.
pub const MAX_CODE_LEN: usize = 7;

/// A short uppercase alphanumeric residue identifier, stored inline.
///
/// Ordering is lexicographic on the code text: unused bytes are zero, which
/// sorts below every valid character.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MonomerCode {
    bytes: [u8; MAX_CODE_LEN],
    len: u8,
}

impl MonomerCode {
    pub fn new(code: impl AsRef<str>) -> Result<Self> {
        let code = code.as_ref();
        let valid = !code.is_empty()
            && code.len() <= MAX_CODE_LEN
            && code
                .bytes()
                .all(|b| b.is_ascii_uppercase() || b.is_ascii_digit());
        if !valid {
            return Err(Error::InvalidCode(code.to_string()));
        }
        let mut bytes = [0u8; MAX_CODE_LEN];
        bytes[..code.len()].copy_from_slice(code.as_bytes());
        Ok(Self {
            bytes,
            len: code.len() as u8,
        })
    }

    pub fn as_str(&self) -> &str {
        std::str::from_utf8(&self.bytes[..self.len as usize]).expect("codes are ASCII")
    }
}

impl fmt::Debug for MonomerCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MonomerCode({})", self.as_str())
    }
}

impl TryFrom<String> for MonomerCode {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        Self::new(value)
    }
}

impl From<MonomerCode> for String {
    fn from(code: MonomerCode) -> Self {
        code.as_str().to_string()
    }
}

impl fmt::Display for MonomerCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An identified, non-empty run of monomer codes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProteinSequence {
    id: String,
    tokens: Vec<MonomerCode>,
}

impl ProteinSequence {
    pub fn new(id: impl Into<String>, tokens: Vec<MonomerCode>) -> Result<Self> {
        let id = id.into();
        if tokens.is_empty() {
            return Err(Error::EmptySequence(id));
        }
        Ok(Self { id, tokens })
    }

    /// Parses a `-`-joined token string such as `MET-ALA-GLY`.
    pub fn from_joined(id: impl Into<String>, joined: &str) -> Result<Self> {
        let tokens = joined
            .split('-')
            .map(|t| MonomerCode::new(t.trim()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(id, tokens)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tokens(&self) -> &[MonomerCode] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn joined(&self) -> String {
        let mut out = String::with_capacity(self.tokens.len() * 4);
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                out.push('-');
            }
            out.push_str(t.as_str());
        }
        out
    }

    pub(crate) fn with_id(mut self, id: String) -> Self {
        self.id = id;
        self
    }

    pub(crate) fn tokens_mut(&mut self) -> &mut [MonomerCode] {
        &mut self.tokens
    }
}

/// Reverses the token order and marks the id.
pub fn reverse(seq: &ProteinSequence) -> ProteinSequence {
    ProteinSequence {
        id: format!("{}{REVERSED_MARKER}", seq.id),
        tokens: seq.tokens.iter().rev().cloned().collect(),
    }
}

/// Bijection between monomer codes and `1..=V`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    // codes[i] has index i + 1
    codes: Vec<MonomerCode>,
    lookup: HashMap<MonomerCode, u32>,
}

impl Vocabulary {
    /// Builds a vocabulary over the distinct codes of `corpus`, indexed in
    /// lexicographic code order.
    pub fn build<'a, I>(corpus: I) -> Self
    where
        I: IntoIterator<Item = &'a ProteinSequence>,
    {
        let mut distinct = BTreeSet::new();
        for seq in corpus {
            distinct.extend(seq.tokens().iter().cloned());
        }
        Self::from_sorted(distinct.into_iter().collect())
    }

    /// Builds from an index-ordered code list (`codes[0]` gets index 1).
    pub fn from_codes(codes: Vec<MonomerCode>) -> Result<Self> {
        let vocab = Self::from_sorted(codes);
        if vocab.lookup.len() != vocab.codes.len() {
            return Err(Error::MalformedVocabulary("duplicate code".into()));
        }
        Ok(vocab)
    }

    fn from_sorted(codes: Vec<MonomerCode>) -> Self {
        let lookup = codes
            .iter()
            .enumerate()
            .map(|(i, c)| (*c, i as u32 + 1))
            .collect();
        Self { codes, lookup }
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn index_of(&self, code: &MonomerCode) -> Option<u32> {
        self.lookup.get(code).copied()
    }

    /// Inverse lookup; `None` for the pad index or anything above `V`.
    pub fn code_of(&self, index: u32) -> Option<&MonomerCode> {
        if index == PAD_INDEX {
            return None;
        }
        self.codes.get(index as usize - 1)
    }

    /// Codes in index order.
    pub fn codes(&self) -> &[MonomerCode] {
        &self.codes
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MonomerCode, u32)> {
        self.codes.iter().enumerate().map(|(i, c)| (c, i as u32 + 1))
    }

    /// Writes `CODE\tINDEX` lines sorted by index.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (code, index) in self.iter() {
            writeln!(out, "{code}\t{index}")?;
        }
        out.flush()
    }

    pub fn read_tsv<R: BufRead>(input: R) -> Result<Self> {
        let mut codes = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (code, index) = line.split_once('\t').ok_or_else(|| {
                Error::MalformedVocabulary(format!("line {}: missing tab", lineno + 1))
            })?;
            let index: usize = index.parse().map_err(|_| {
                Error::MalformedVocabulary(format!("line {}: bad index {index:?}", lineno + 1))
            })?;
            if index != codes.len() + 1 {
                return Err(Error::MalformedVocabulary(format!(
                    "line {}: expected index {}, found {index}",
                    lineno + 1,
                    codes.len() + 1
                )));
            }
            codes.push(MonomerCode::new(code)?);
        }
        Self::from_codes(codes)
    }
}

/// Binary class of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Fake = 0,
    Real = 1,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Label::Fake),
            1 => Some(Label::Real),
            _ => None,
        }
    }

    pub fn is_real(self) -> bool {
        self == Label::Real
    }
}

/// Right-padded index vector of fixed length plus its label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSample {
    pub id: String,
    pub indices: Vec<u32>,
    pub label: Label,
}

impl EncodedSample {
    /// Number of positions before the first pad.
    pub fn content_len(&self) -> usize {
        self.indices
            .iter()
            .position(|&i| i == PAD_INDEX)
            .unwrap_or(self.indices.len())
    }
}

/// Maps tokens through `vocab` and right-pads with [`PAD_INDEX`] to `len`.
pub fn encode(seq: &ProteinSequence, vocab: &Vocabulary, len: usize) -> Result<Vec<u32>> {
    if seq.len() > len {
        return Err(Error::SequenceTooLong {
            len: seq.len(),
            max: len,
        });
    }
    let mut out = Vec::with_capacity(len);
    for token in seq.tokens() {
        let index = vocab
            .index_of(token)
            .ok_or_else(|| Error::UnknownToken(token.to_string()))?;
        out.push(index);
    }
    out.resize(len, PAD_INDEX);
    Ok(out)
}

/// Inverse of [`encode`] over the non-pad prefix.
pub fn decode(indices: &[u32], vocab: &Vocabulary) -> Option<Vec<MonomerCode>> {
    indices
        .iter()
        .take_while(|&&i| i != PAD_INDEX)
        .map(|&i| vocab.code_of(i).cloned())
        .collect()
}
