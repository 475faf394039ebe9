//! Mini-batch training, evaluation and inference.
//!
//! Each batch's per-sample gradients are computed in parallel and then
//! summed in batch order, so results are identical for any thread count.

mod history;
mod metrics;

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use history::{EpochRecord, TrainingHistory, HISTORY_HEADER};
pub use metrics::{check_compatible, evaluate, score, BucketConfusion, ConfusionMatrix, Evaluation};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::nn::{bce_loss, Adadelta, AdadeltaConfig, Checkpoint, Model, ModelConfig, Parameters, Real};
use crate::seq::{encode, EncodedSample, Label, MonomerCode, ProteinSequence, Vocabulary};

/// RNG stream reserved for weight initialisation; epoch `e` shuffles with
/// stream `e`.
const INIT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Probability at or above which a sample is classified real.
    pub threshold: f64,
    pub optimizer: AdadeltaConfig,
    /// Written whenever validation accuracy strictly improves.
    pub checkpoint_path: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 50,
            epochs: 50,
            seed: 0,
            threshold: 0.5,
            optimizer: AdadeltaConfig::default(),
            checkpoint_path: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidConfig(format!(
                "threshold {} is outside [0, 1]",
                self.threshold
            )));
        }
        let o = &self.optimizer;
        if !(o.lr > 0.0 && o.lr.is_finite()) || !(0.0..1.0).contains(&o.rho) || o.epsilon.is_nan()
            || o.epsilon <= 0.0 {
            return Err(Error::InvalidConfig(format!("invalid optimizer settings {o:?}")));
        }
        Ok(())
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mean gradient over `batch`, reduced in batch order, plus each sample's
/// `(loss, probability)` under the pre-update weights.
pub fn batch_gradient(model: &Model, batch: &[&EncodedSample]) -> Result<(Parameters, Vec<(Real, Real)>)> {
    let per_sample: Vec<(Parameters, (Real, Real))> = batch
        .par_iter()
        .map(|s| {
            let y = s.label.as_u8() as Real;
            let (p, cache) = model.forward(&s.indices)?;
            let grads = model.backward(&cache, y)?;
            Ok((grads, (bce_loss(p, y), p)))
        })
        .collect::<Result<_>>()?;
    let mut sum = Parameters::zeros(&model.config);
    let mut scores = Vec::with_capacity(per_sample.len());
    for (g, score) in &per_sample {
        sum.add_assign(g);
        scores.push(*score);
    }
    sum.scale(1.0 / batch.len().max(1) as Real);
    Ok((sum, scores))
}

/// Stateful trainer; its history survives a failed epoch.
#[derive(Debug, Clone)]
pub struct Trainer {
    model: Model,
    optimizer: Adadelta,
    vocab: Vocabulary,
    config: TrainConfig,
    history: TrainingHistory,
    best: Option<Checkpoint>,
    steps: u64,
}

impl Trainer {
    /// Fresh model with Glorot-initialised weights drawn from `config.seed`.
    pub fn new(model_config: ModelConfig, vocab: Vocabulary, config: TrainConfig) -> Result<Self> {
        let mut rng = rng_for(config.seed, INIT_STREAM);
        let model = Model::init(model_config, &mut rng)?;
        Self::from_model(model, vocab, config)
    }

    pub fn from_model(model: Model, vocab: Vocabulary, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        if vocab.len() > model.config.vocab_size {
            return Err(Error::VocabularyMismatch(format!(
                "vocabulary has {} codes, model embeds {}",
                vocab.len(),
                model.config.vocab_size
            )));
        }
        let optimizer = Adadelta::new(config.optimizer, &model.config);
        Ok(Self {
            model,
            optimizer,
            vocab,
            config,
            history: TrainingHistory::default(),
            best: None,
            steps: 0,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn optimizer(&self) -> &Adadelta {
        &self.optimizer
    }

    pub fn history(&self) -> &TrainingHistory {
        &self.history
    }

    pub fn into_history(self) -> TrainingHistory {
        self.history
    }

    /// Snapshot of the best epoch so far.
    pub fn best_checkpoint(&self) -> Option<&Checkpoint> {
        self.best.as_ref()
    }

    /// Optimizer steps taken so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn epochs_done(&self) -> usize {
        self.history.epochs.len()
    }

    /// Runs one epoch of shuffled mini-batches, then evaluates `val`.
    ///
    /// Training loss and accuracy are averaged over the epoch's batches,
    /// each sample scored with the weights in effect before its batch's
    /// update.
    pub fn run_epoch(&mut self, train: &LabeledDataset, val: &LabeledDataset) -> Result<EpochRecord> {
        check_compatible(&self.model, train, Some(&self.vocab))?;
        check_compatible(&self.model, val, Some(&self.vocab))?;
        if train.is_empty() || val.is_empty() {
            return Err(Error::InvalidConfig("training and validation sets must be non-empty".into()));
        }
        let epoch = self.epochs_done() + 1;
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut rng_for(self.config.seed, epoch as u64));

        let threshold = self.config.threshold;
        let mut running = ConfusionMatrix::default();
        let mut loss_sum = 0.0f64;
        for chunk in order.chunks(self.config.batch_size) {
            let batch: Vec<_> = chunk.iter().map(|&i| &train.samples[i]).collect();
            let (grads, scores) = batch_gradient(&self.model, &batch)?;
            for (s, &(loss, p)) in batch.iter().zip(&scores) {
                loss_sum += loss as f64;
                running.record(p as f64 >= threshold, s.label.is_real());
            }
            if !loss_sum.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            self.optimizer.step(&mut self.model.params, &grads)?;
            self.steps += 1;
        }
        let tr_loss = loss_sum / train.len() as f64;

        let va = evaluate(&self.model, val, threshold)?;
        if !va.loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        let record = EpochRecord {
            epoch,
            train_loss: tr_loss,
            train_acc: running.accuracy(),
            val_loss: va.loss,
            val_acc: va.accuracy,
        };
        self.history.epochs.push(record);

        let improved = self.history.best().is_none_or(|b| va.accuracy > b.val_acc);
        if improved {
            let ckpt = Checkpoint::new(
                &self.model,
                &self.optimizer,
                &self.vocab,
                epoch,
                va.accuracy,
                va.loss,
            );
            if let Some(path) = &self.config.checkpoint_path {
                ckpt.save(path)?;
            }
            self.history.best_epoch = Some(epoch);
            self.history.confusion = va.confusion;
            self.best = Some(ckpt);
        }
        log::info!(
            "epoch {epoch}: train loss {:.4} acc {:.4}, val loss {:.4} acc {:.4}{}",
            tr_loss,
            running.accuracy(),
            va.loss,
            va.accuracy,
            if improved { " *" } else { "" }
        );
        Ok(record)
    }
}

/// Result of a full training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub history: TrainingHistory,
    /// Weights of the best validation epoch.
    pub best: Checkpoint,
    /// Weights after the last epoch.
    pub last: Model,
}

/// Trains for `config.epochs` epochs from a seeded initialisation.
pub fn train(
    model_config: ModelConfig,
    train_set: &LabeledDataset,
    val_set: &LabeledDataset,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(model_config, train_set.vocab.clone(), config.clone())?;
    for _ in 0..config.epochs {
        trainer.run_epoch(train_set, val_set)?;
    }
    let best = trainer.best.clone().expect("at least one epoch ran");
    Ok(TrainOutcome {
        history: trainer.history,
        best,
        last: trainer.model,
    })
}

/// Probability and thresholded label for one token sequence.
pub fn predict(checkpoint: &Checkpoint, tokens: &[MonomerCode], threshold: f64) -> Result<(f64, Label)> {
    let model = checkpoint.model()?;
    let vocab = checkpoint.vocabulary()?;
    let seq = ProteinSequence::new("query", tokens.to_vec())?;
    let indices = encode(&seq, &vocab, model.config.input_len)?;
    let p = model.predict_proba(&indices)? as f64;
    let label = if p >= threshold { Label::Real } else { Label::Fake };
    Ok((p, label))
}
