//! The gzip-compressed `id,tokens` sequence table produced by ingestion.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::error::{Error, Result};
use crate::seq::ProteinSequence;

pub const TABLE_HEADER: [&str; 2] = ["id", "tokens"];

/// Streaming writer for the sequence table.
pub struct SequenceTableWriter<W: Write> {
    csv: csv::Writer<GzEncoder<W>>,
    path: PathBuf,
    rows: u64,
}

impl SequenceTableWriter<BufWriter<File>> {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|source| Error::OutputUnwritable {
            path: path.to_path_buf(),
            source,
        })?;
        Self::new(BufWriter::new(file), path)
    }
}

impl<W: Write> SequenceTableWriter<W> {
    pub fn new(sink: W, path: &Path) -> Result<Self> {
        let mut csv = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(GzEncoder::new(sink, Compression::default()));
        let path = path.to_path_buf();
        csv.write_record(TABLE_HEADER)
            .map_err(|e| unwritable(&path, e))?;
        Ok(Self { csv, path, rows: 0 })
    }

    pub fn write(&mut self, id: &str, seq: &ProteinSequence) -> Result<()> {
        self.csv
            .write_record([id, seq.joined().as_str()])
            .map_err(|e| unwritable(&self.path, e))?;
        self.rows += 1;
        Ok(())
    }

    pub fn rows(&self) -> u64 {
        self.rows
    }

    pub fn finish(self) -> Result<W> {
        let path = self.path;
        let encoder = self
            .csv
            .into_inner()
            .map_err(|e| unwritable(&path, e.into_error()))?;
        let mut sink = encoder.finish().map_err(|e| unwritable(&path, e))?;
        sink.flush().map_err(|e| unwritable(&path, e))?;
        Ok(sink)
    }
}

fn unwritable(path: &Path, e: impl Into<std::io::Error>) -> Error {
    Error::OutputUnwritable {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

/// Streaming reader yielding one [`ProteinSequence`] per row.
pub struct SequenceTableReader<R: Read> {
    records: csv::StringRecordsIntoIter<MultiGzDecoder<R>>,
    path: PathBuf,
    row: u64,
}

impl SequenceTableReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        Self::new(BufReader::new(file), path)
    }
}

impl<R: Read> SequenceTableReader<R> {
    pub fn new(source: R, path: &Path) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(MultiGzDecoder::new(source));
        let header = csv.headers().map_err(|e| table_error(path, 0, e))?;
        if header.iter().ne(TABLE_HEADER) {
            return Err(Error::MalformedTable {
                path: path.to_path_buf(),
                record: 0,
                message: format!("expected header id,tokens, found {:?}", header),
            });
        }
        Ok(Self {
            records: csv.into_records(),
            path: path.to_path_buf(),
            row: 0,
        })
    }
}

impl<R: Read> Iterator for SequenceTableReader<R> {
    type Item = Result<ProteinSequence>;

    fn next(&mut self) -> Option<Self::Item> {
        let record = self.records.next()?;
        self.row += 1;
        let parsed = record
            .map_err(|e| table_error(&self.path, self.row, e))
            .and_then(|r| {
                if r.len() != 2 {
                    return Err(table_error(&self.path, self.row, "expected 2 fields"));
                }
                ProteinSequence::from_joined(&r[0], &r[1])
                    .map_err(|e| table_error(&self.path, self.row, e))
            });
        Some(parsed)
    }
}

fn table_error(path: &Path, record: u64, e: impl ToString) -> Error {
    Error::MalformedTable {
        path: path.to_path_buf(),
        record,
        message: e.to_string(),
    }
}

/// Reads a whole sequence table into memory.
pub fn read_sequence_table(path: &Path) -> Result<Vec<ProteinSequence>> {
    SequenceTableReader::open(path)?.collect()
}

/// Writes sequences to `path`, keyed by their own ids.
pub fn write_sequence_table<'a, I>(path: &Path, seqs: I) -> Result<u64>
where
    I: IntoIterator<Item = &'a ProteinSequence>,
{
    let mut writer = SequenceTableWriter::create(path)?;
    for seq in seqs {
        writer.write(seq.id(), seq)?;
    }
    let rows = writer.rows();
    writer.finish()?;
    Ok(rows)
}
