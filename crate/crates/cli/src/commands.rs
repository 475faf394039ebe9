use std::fs::{self, File};
use std::io::{self, BufReader, Read};
use std::path::Path;

use psc_core::dataset::{build_dataset, read_dataset, write_dataset, SplitTag};
use psc_core::nn::{count_parameters, Checkpoint};
use psc_core::pdbml::{ingest_corpus, read_sequence_table, write_sequence_table, IngestOptions};
use psc_core::seq::{ProteinSequence, Vocabulary};
use psc_core::synth::MarkovGenerator;
use psc_core::train::{evaluate as evaluate_model, predict as predict_label, Trainer};
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::CliError;

pub const TRAIN_FILE: &str = "train.csv";
pub const TEST_FILE: &str = "test.csv";
pub const VOCAB_FILE: &str = "vocab.tsv";
pub const CHECKPOINT_FILE: &str = "best.psc";
pub const METRICS_CSV: &str = "metrics.csv";
pub const METRICS_SVG: &str = "metrics.svg";

fn emit<T: Serialize>(value: &T) -> Result<(), CliError> {
    let line = serde_json::to_string(value).expect("results serialize to JSON");
    println!("{line}");
    Ok(())
}

fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Input {
            path: path.to_path_buf(),
            message: "no such file".into(),
        })
    }
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| {
        CliError::Core(psc_core::Error::OutputUnwritable {
            path: path.to_path_buf(),
            source,
        })
    })
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint, CliError> {
    require_file(path)?;
    Ok(Checkpoint::load(path)?)
}

pub fn ingest(input: &Path, output: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    if !input.is_dir() {
        return Err(CliError::Input {
            path: input.to_path_buf(),
            message: "not a directory".into(),
        });
    }
    let opts = IngestOptions {
        jobs: cfg.jobs,
        ..IngestOptions::default()
    };
    let report = ingest_corpus(input, output, &opts)?;
    emit(&report)
}

pub fn build(input: &Path, out_dir: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    require_file(input)?;
    let corpus = read_sequence_table(input)?;
    let build_cfg = cfg.build_config();
    build_cfg.validate()?;
    if !corpus.iter().any(|s| s.len() <= build_cfg.max_len) {
        return Err(CliError::Input {
            path: input.to_path_buf(),
            message: format!(
                "none of the {} sequences has at most {} tokens; nothing to build",
                corpus.len(),
                build_cfg.max_len
            ),
        });
    }
    let out = build_dataset(corpus, &build_cfg)?;
    create_dir(out_dir)?;
    write_dataset(&out_dir.join(TRAIN_FILE), &out.train)?;
    write_dataset(&out_dir.join(TEST_FILE), &out.test)?;
    let vocab_path = out_dir.join(VOCAB_FILE);
    let unwritable = |source| psc_core::Error::OutputUnwritable {
        path: vocab_path.clone(),
        source,
    };
    let file = File::create(&vocab_path).map_err(unwritable)?;
    out.vocab.write_tsv(io::BufWriter::new(file)).map_err(unwritable)?;
    log::info!(
        "kept {} of {} sequences ({:.2}%), {} train / {} test samples",
        out.stats.retained,
        out.stats.total,
        100.0 * out.stats.retention,
        out.stats.train,
        out.stats.test
    );
    emit(&out.stats)
}

fn read_vocab(path: &Path) -> Result<Vocabulary, CliError> {
    require_file(path)?;
    let file = File::open(path).map_err(psc_core::Error::Io)?;
    Ok(Vocabulary::read_tsv(BufReader::new(file))?)
}

pub fn train(data: &Path, out_dir: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    let vocab = read_vocab(&data.join(VOCAB_FILE))?;
    let (train_path, test_path) = (data.join(TRAIN_FILE), data.join(TEST_FILE));
    require_file(&train_path)?;
    require_file(&test_path)?;
    let train_set = read_dataset(&train_path, &vocab, SplitTag::Train)?;
    let test_set = read_dataset(&test_path, &vocab, SplitTag::Test)?;
    if train_set.max_len != test_set.max_len {
        return Err(CliError::Input {
            path: test_path,
            message: format!(
                "encoded length {} differs from the training split's {}",
                test_set.max_len, train_set.max_len
            ),
        });
    }

    create_dir(out_dir)?;
    let model_cfg = cfg.model_config(vocab.len(), train_set.max_len);
    let train_cfg = cfg.train_config(out_dir.join(CHECKPOINT_FILE));
    let epochs = train_cfg.epochs;
    log::info!(
        "training {} parameters on {} samples, validating on {}",
        count_parameters(&model_cfg),
        train_set.len(),
        test_set.len()
    );
    let mut trainer = Trainer::new(model_cfg, vocab, train_cfg)?;
    let mut failure = None;
    for _ in 0..epochs {
        if let Err(e) = trainer.run_epoch(&train_set, &test_set) {
            failure = Some(e);
            break;
        }
    }
    let history = trainer.history();
    if !history.epochs.is_empty() {
        history.export(&out_dir.join(METRICS_CSV), &out_dir.join(METRICS_SVG))?;
    }
    if let Some(e) = failure {
        return Err(e.into());
    }
    let best = history.best().expect("at least one epoch completed");
    let last = history.epochs.last().expect("at least one epoch completed");
    emit(&json!({
        "epochs": history.epochs.len(),
        "best_epoch": best.epoch,
        "val_acc": best.val_acc,
        "val_loss": best.val_loss,
        "confusion": history.confusion,
        "final": last,
        "checkpoint": out_dir.join(CHECKPOINT_FILE),
    }))
}

pub fn evaluate(checkpoint: &Path, dataset: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    let ckpt = load_checkpoint(checkpoint)?;
    let vocab = ckpt.vocabulary()?;
    require_file(dataset)?;
    let data = read_dataset(dataset, &vocab, SplitTag::Test)?;
    let model = ckpt.model()?;
    let result = evaluate_model(&model, &data, cfg.threshold())?;
    emit(&json!({
        "samples": data.len(),
        "loss": result.loss,
        "accuracy": result.accuracy,
        "confusion": result.confusion,
        "by_length": result.by_length,
        "checkpoint_epoch": ckpt.header.epoch,
    }))
}

pub fn predict(checkpoint: &Path, sequence: Option<&str>, cfg: &RunConfig) -> Result<(), CliError> {
    let ckpt = load_checkpoint(checkpoint)?;
    let text = match sequence {
        Some(s) => s.to_string(),
        None => {
            let mut buf = String::new();
            io::stdin()
                .read_to_string(&mut buf)
                .map_err(psc_core::Error::Io)?;
            buf
        }
    };
    let text = text.trim();
    if text.is_empty() {
        return Err(CliError::Usage("no sequence given (argument or stdin)".into()));
    }
    let seq = ProteinSequence::from_joined("query", text)?;
    let (p, label) = predict_label(&ckpt, seq.tokens(), cfg.threshold())?;
    emit(&json!({
        "length": seq.len(),
        "probability": p,
        "label": label,
    }))
}

pub fn inspect(checkpoint: &Path) -> Result<(), CliError> {
    let header = {
        require_file(checkpoint)?;
        Checkpoint::read_header(checkpoint)?
    };
    let lengths = header.config.try_layer_lengths();
    emit(&json!({
        "parameters": count_parameters(&header.config),
        "layer_lengths": lengths,
        "header": header,
    }))
}

pub fn synth(
    output: &Path,
    count: usize,
    min_len: usize,
    max_len: usize,
    noise: f64,
    cfg: &RunConfig,
) -> Result<(), CliError> {
    if count == 0 || min_len == 0 || min_len > max_len || !(0.0..=1.0).contains(&noise) {
        return Err(CliError::Usage(
            "need count >= 1, 1 <= min-len <= max-len and noise in [0, 1]".into(),
        ));
    }
    let seed = cfg.seed.unwrap_or(0);
    let mut gen = MarkovGenerator::new(seed, min_len, max_len);
    gen.noise = noise;
    let corpus = gen.corpus(count, seed.wrapping_add(1));
    let rows = write_sequence_table(output, &corpus)?;
    emit(&json!({ "sequences": rows, "seed": seed, "output": output }))
}
