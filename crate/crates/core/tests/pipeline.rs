#![allow(clippy::unnecessary_cast)] // `Real` may be f32

mod common;

use std::fs;

use psc_core::dataset::{build_dataset, read_dataset, write_dataset, BuildConfig, SplitTag};
use psc_core::pdbml::{ingest_corpus, read_sequence_table, IngestOptions};
use psc_core::seq::{Label, Vocabulary};
use psc_core::synth::MarkovGenerator;
use psc_core::Error;

use common::{pdbml_doc, write_gz};

#[test]
fn two_valid_files_emit_two_sequences() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    fs::create_dir(&input).unwrap();
    fs::write(input.join("1AAA.xml"), pdbml_doc("1AAA", &[("1", &["ALA", "GLY", "SER"])])).unwrap();
    write_gz(&input.join("2BBB.xml.gz"), &pdbml_doc("2BBB", &[("1", &["LYS", "LYS"])]));
    let out = dir.path().join("seqs.csv.gz");
    let report = ingest_corpus(&input, &out, &IngestOptions::default()).unwrap();
    assert_eq!((report.files_seen, report.files_failed, report.sequences_emitted), (2, 0, 2));
    assert_eq!(report.distinct_codes, 4);
    let seqs = read_sequence_table(&out).unwrap();
    assert_eq!(seqs[0].id(), "1AAA_1");
    assert_eq!(seqs[0].joined(), "ALA-GLY-SER");
    assert_eq!(seqs[1].id(), "2BBB_1");
}

#[test]
fn malformed_file_is_counted_and_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    fs::create_dir(&input).unwrap();
    fs::write(input.join("1AAA.xml"), pdbml_doc("1AAA", &[("1", &["ALA", "GLY"])])).unwrap();
    fs::write(input.join("9BAD.xml"), "<PDBx:datablock><PDBx:entity_poly_seq").unwrap();
    let out = dir.path().join("seqs.csv.gz");
    let report = ingest_corpus(&input, &out, &IngestOptions::default()).unwrap();
    assert_eq!((report.files_seen, report.files_failed, report.sequences_emitted), (2, 1, 1));
    assert!(report.files_failed <= report.files_seen);
}

#[test]
fn ingest_output_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    fs::create_dir(&input).unwrap();
    let codes = ["ALA", "GLY", "SER", "TRP", "MET"];
    for i in 0..150 {
        let residues: Vec<&str> = (0..(i % 17) + 1).map(|j| codes[(i + j) % codes.len()]).collect();
        let name = format!("{i:04}");
        fs::write(input.join(format!("{name}.xml")), pdbml_doc(&name, &[("1", &residues), ("2", &residues[..1])])).unwrap();
    }
    let a = dir.path().join("a.csv.gz");
    let b = dir.path().join("b.csv.gz");
    ingest_corpus(&input, &a, &IngestOptions { jobs: Some(1), ..IngestOptions::default() }).unwrap();
    ingest_corpus(&input, &b, &IngestOptions { jobs: Some(4), ..IngestOptions::default() }).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(read_sequence_table(&a).unwrap().len(), 300);
}

#[test]
fn build_is_seed_deterministic_and_round_trips() {
    let corpus = MarkovGenerator::new(1, 5, 60).corpus(300, 2);
    let cfg = BuildConfig {
        max_len: 50,
        seed: 42,
        ..BuildConfig::default()
    };
    let a = build_dataset(corpus.clone(), &cfg).unwrap();
    let b = build_dataset(corpus.clone(), &cfg).unwrap();
    assert_eq!(a.train, b.train);
    assert_eq!(a.test, b.test);
    let c = build_dataset(corpus, &BuildConfig { seed: 43, ..cfg.clone() }).unwrap();
    assert_ne!(a.train, c.train);

    let s = &a.stats;
    assert_eq!(s.positives, 2 * s.retained);
    assert_eq!(s.negatives, s.positives);
    assert_eq!(s.homopolymers, a.vocab.len());
    assert_eq!(s.train + s.test, s.positives + s.negatives);
    assert_eq!(s.histogram.total(), 300);

    for ds in [&a.train, &a.test] {
        assert!(ds.samples.iter().all(|x| x.indices.len() == 50));
        // Stratified: both splits stay balanced to within one sample.
        assert!((ds.positives() as i64 - ds.negatives() as i64).abs() <= 1);
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("train.csv");
    write_dataset(&path, &a.train).unwrap();
    let first = fs::read(&path).unwrap();
    write_dataset(&path, &b.train).unwrap();
    assert_eq!(first, fs::read(&path).unwrap());
    assert_eq!(read_dataset(&path, &a.vocab, SplitTag::Train).unwrap(), a.train);

    let mut tsv = Vec::new();
    a.vocab.write_tsv(&mut tsv).unwrap();
    assert_eq!(Vocabulary::read_tsv(&tsv[..]).unwrap(), a.vocab);
}

#[test]
fn dataset_read_with_smaller_vocab_is_rejected() {
    let corpus = MarkovGenerator::new(1, 5, 30).corpus(100, 2);
    let out = build_dataset(corpus, &BuildConfig { max_len: 30, ..BuildConfig::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("test.csv");
    write_dataset(&path, &out.test).unwrap();
    let small = Vocabulary::from_codes(out.vocab.codes()[..3].to_vec()).unwrap();
    assert!(matches!(
        read_dataset(&path, &small, SplitTag::Test),
        Err(Error::VocabularyMismatch(_))
    ));
}

#[test]
fn every_negative_is_vocabulary_valid() {
    let corpus = MarkovGenerator::new(4, 10, 40).corpus(200, 5);
    let out = build_dataset(corpus, &BuildConfig { max_len: 40, ..BuildConfig::default() }).unwrap();
    let v = out.vocab.len() as u32;
    for s in out.train.samples.iter().chain(&out.test.samples) {
        let n = s.content_len();
        assert!(n >= 1);
        assert!(s.indices[..n].iter().all(|&i| (1..=v).contains(&i)));
        if s.label == Label::Fake && s.id.starts_with("HOMO_") {
            assert_eq!(n, 40);
        }
    }
}
