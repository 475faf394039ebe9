//! Labeled dataset files: gzip CSV with header `id,label,indices`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use super::{LabeledDataset, SplitTag};
use crate::error::{Error, Result};
use crate::seq::{EncodedSample, Label, Vocabulary};

pub const DATASET_HEADER: [&str; 3] = ["id", "label", "indices"];

pub fn write_samples<W: Write>(sink: W, samples: &[EncodedSample]) -> std::io::Result<W> {
    let mut csv = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(GzEncoder::new(sink, Compression::default()));
    csv.write_record(DATASET_HEADER)?;
    let mut indices = String::new();
    for sample in samples {
        indices.clear();
        for (i, v) in sample.indices.iter().enumerate() {
            if i > 0 {
                indices.push(' ');
            }
            indices.push_str(&v.to_string());
        }
        let label = sample.label.as_u8().to_string();
        csv.write_record([sample.id.as_str(), label.as_str(), indices.as_str()])?;
    }
    let encoder = csv.into_inner().map_err(|e| e.into_error())?;
    encoder.finish()
}

pub fn write_dataset(path: &Path, dataset: &LabeledDataset) -> Result<()> {
    let unwritable = |source| Error::OutputUnwritable {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(unwritable)?;
    let mut sink = write_samples(BufWriter::new(file), &dataset.samples).map_err(unwritable)?;
    sink.flush().map_err(unwritable)
}

pub fn read_samples<R: Read>(source: R, path: &Path) -> Result<Vec<EncodedSample>> {
    let bad = |record: u64, message: String| Error::MalformedTable {
        path: path.to_path_buf(),
        record,
        message,
    };
    let mut csv = csv::ReaderBuilder::new().from_reader(MultiGzDecoder::new(source));
    let header = csv.headers().map_err(|e| bad(0, e.to_string()))?;
    if header.iter().ne(DATASET_HEADER) {
        return Err(bad(0, format!("expected header id,label,indices, found {header:?}")));
    }
    let mut samples = Vec::new();
    for (row, record) in csv.into_records().enumerate() {
        let row = row as u64 + 1;
        let record = record.map_err(|e| bad(row, e.to_string()))?;
        if record.len() != 3 {
            return Err(bad(row, "expected 3 fields".into()));
        }
        let label = record[1]
            .parse::<u8>()
            .ok()
            .and_then(Label::from_u8)
            .ok_or_else(|| bad(row, format!("bad label {:?}", &record[1])))?;
        let indices = record[2]
            .split_ascii_whitespace()
            .map(str::parse::<u32>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| bad(row, e.to_string()))?;
        samples.push(EncodedSample {
            id: record[0].to_string(),
            label,
            indices,
        });
    }
    Ok(samples)
}

/// Reads a dataset file and validates it against `vocab`.
pub fn read_dataset(path: &Path, vocab: &Vocabulary, split: SplitTag) -> Result<LabeledDataset> {
    let file = File::open(path)?;
    let samples = read_samples(BufReader::new(file), path)?;
    let max_len = samples.first().map_or(0, |s| s.indices.len());
    LabeledDataset::new(samples, vocab.clone(), split, max_len)
}
