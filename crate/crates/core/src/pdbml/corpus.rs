use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::parser::{IngestRecord, PdbmlParser};
use super::table::SequenceTableWriter;
use crate::error::{Error, Result};
use crate::seq::MonomerCode;

/// Totals for one ingestion run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub files_seen: u64,
    pub files_failed: u64,
    pub sequences_emitted: u64,
    pub distinct_codes: u64,
}

#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    pub parser: PdbmlParser,
    /// Worker cap; `None` uses the ambient rayon pool.
    pub jobs: Option<usize>,
}

/// A corpus input file and the source name its records are keyed by.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CorpusFile {
    pub source_file: String,
    pub path: PathBuf,
    pub gzipped: bool,
}

impl CorpusFile {
    pub fn from_path(path: PathBuf) -> Option<Self> {
        let name = path.file_name()?.to_str()?;
        let (stem, gzipped) = if let Some(stem) = name.strip_suffix(".xml.gz") {
            (stem, true)
        } else {
            (name.strip_suffix(".xml")?, false)
        };
        Some(Self {
            source_file: stem.to_string(),
            path,
            gzipped,
        })
    }
}

/// Lists `.xml` / `.xml.gz` files under `dir` (recursively), sorted by source
/// name then path.
pub fn discover(dir: &Path) -> Result<Vec<CorpusFile>> {
    let mut files = Vec::new();
    for entry in WalkDir::new(dir).follow_links(true) {
        let entry = entry.map_err(|e| {
            e.into_io_error()
                .unwrap_or_else(|| std::io::Error::other("directory walk failed"))
        })?;
        if entry.file_type().is_file() {
            if let Some(file) = CorpusFile::from_path(entry.into_path()) {
                files.push(file);
            }
        }
    }
    files.sort();
    Ok(files)
}

fn parse_file(parser: &PdbmlParser, file: &CorpusFile) -> Result<Vec<IngestRecord>> {
    let handle = File::open(&file.path)?;
    parser.parse(BufReader::new(handle), file.gzipped, &file.source_file)
}

// Files parsed per batch. Bounds the number of completed-but-unwritten
// records held in memory.
const FILES_PER_BATCH: usize = 64;

/// Parses every PDBML file under `input_dir` and writes the sequence table to
/// `output`. Per-file failures are logged and counted; only an unwritable
/// output aborts the run.
pub fn ingest_corpus(input_dir: &Path, output: &Path, opts: &IngestOptions) -> Result<IngestReport> {
    if !input_dir.is_dir() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("input directory {} does not exist", input_dir.display()),
        )));
    }
    let files = discover(input_dir)?;
    let mut writer = SequenceTableWriter::create(output)?;
    let mut report = IngestReport::default();
    let mut codes: BTreeSet<MonomerCode> = BTreeSet::new();

    let pool = match opts.jobs {
        Some(n) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidConfig(e.to_string()))?,
        ),
        None => None,
    };

    for batch in files.chunks(FILES_PER_BATCH) {
        let parse_batch = || -> Vec<Result<Vec<IngestRecord>>> {
            batch
                .par_iter()
                .map(|f| parse_file(&opts.parser, f))
                .collect()
        };
        let results = match &pool {
            Some(pool) => pool.install(parse_batch),
            None => parse_batch(),
        };
        for (file, result) in batch.iter().zip(results) {
            report.files_seen += 1;
            match result {
                Ok(records) => {
                    for record in records {
                        codes.extend(record.tokens.iter().cloned());
                        writer.write(&record.id(), &record.to_sequence())?;
                        report.sequences_emitted += 1;
                    }
                }
                Err(e) => {
                    log::warn!("skipping {}: {e}", file.path.display());
                    report.files_failed += 1;
                }
            }
        }
    }
    writer.finish()?;
    report.distinct_codes = codes.len() as u64;
    log::info!(
        "ingested {} files ({} failed), {} sequences",
        report.files_seen,
        report.files_failed,
        report.sequences_emitted
    );
    Ok(report)
}
