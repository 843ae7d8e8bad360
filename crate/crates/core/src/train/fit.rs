use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{adam_step, cross_entropy, cross_entropy_loss, AdamConfig, AdamState};
use crate::data::{reshape_for_model, Dataset, Standardizer};
use crate::error::{Error, Result};
use crate::layers::Mode;
use crate::model::Model;
use crate::tensor::{Real, Tape, Tensor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: Real,
    pub seed: u64,
    pub validation_fraction: f64,
    pub beta1: Real,
    pub beta2: Real,
    pub epsilon: Real,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        TrainConfig {
            epochs: 15,
            batch_size: 128,
            lr: adam.lr,
            seed: 0,
            validation_fraction: 0.1,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: Real,
    pub train_accuracy: Real,
    pub val_loss: Real,
    pub val_accuracy: Real,
    pub wall_time_seconds: f64,
}

impl EpochRecord {
    /// Equality ignoring wall-clock time.
    pub fn same_metrics(&self, other: &EpochRecord) -> bool {
        (self.epoch, self.train_loss, self.train_accuracy, self.val_loss, self.val_accuracy)
            == (other.epoch, other.train_loss, other.train_accuracy, other.val_loss, other.val_accuracy)
    }
}

pub const EPOCH_CSV_HEADER: &str = "epoch,train_loss,train_acc,val_loss,val_acc,seconds";

pub fn write_epoch_csv(records: &[EpochRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(w, "{EPOCH_CSV_HEADER}").map_err(io)?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{:.3}",
            r.epoch, r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy, r.wall_time_seconds
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Model-ready inputs `[N × T × C]` with their labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Samples {
    pub x: Tensor,
    pub y: Vec<usize>,
}

impl Samples {
    pub fn new(x: Tensor, y: Vec<usize>) -> Result<Self> {
        if x.shape()[0] != y.len() {
            return Err(Error::Contract(format!(
                "{} inputs but {} labels",
                x.shape()[0],
                y.len()
            )));
        }
        Ok(Samples { x, y })
    }

    pub fn from_dataset(d: &Dataset, scaler: &Standardizer) -> Result<Self> {
        Samples::new(reshape_for_model(d, scaler)?, d.labels().to_vec())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Infer-mode predictions over a sample set.
#[derive(Clone, Debug)]
pub struct Evaluation {
    /// `N × K`, row-major.
    pub probs: Vec<Real>,
    pub classes: usize,
    pub predictions: Vec<usize>,
    pub loss: Real,
    pub accuracy: Real,
}

fn argmax(row: &[Real]) -> usize {
    // first maximum wins
    row.iter()
        .enumerate()
        .fold((0, Real::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best })
        .0
}

pub fn argmax_rows(probs: &[Real], classes: usize) -> Vec<usize> {
    probs.chunks(classes).map(argmax).collect()
}

fn accuracy(pred: &[usize], y: &[usize]) -> Real {
    pred.iter().zip(y).filter(|(p, t)| p == t).count() as Real / y.len().max(1) as Real
}

/// Runs the model in infer mode over `s` in chunks of `batch_size`.
pub fn evaluate(model: &Model, s: &Samples, batch_size: usize) -> Result<Evaluation> {
    let classes = model.config().num_classes;
    let mut probs = Vec::with_capacity(s.len() * classes);
    let idx: Vec<usize> = (0..s.len()).collect();
    for chunk in idx.chunks(batch_size.max(1)) {
        let out = model.predict(&s.x.select_rows(chunk))?;
        probs.extend_from_slice(out.data());
    }
    let predictions = argmax_rows(&probs, classes);
    Ok(Evaluation {
        loss: cross_entropy(&probs, classes, &s.y),
        accuracy: accuracy(&predictions, &s.y),
        probs,
        classes,
        predictions,
    })
}

/// Mini-batch Adam over seeded shuffles. `on_epoch` sees each record as it
/// is produced.
pub fn train(
    model: &mut Model,
    train_set: &Samples,
    val_set: &Samples,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<Vec<EpochRecord>> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::Input("training set is empty".into()));
    }
    let trainable: Vec<_> = model
        .params()
        .ids()
        .filter(|&id| model.params().entries()[id.index()].trainable)
        .collect();
    let lengths: Vec<usize> = trainable.iter().map(|&id| model.params().get(id).len()).collect();
    let mut adam = AdamState::new(&lengths, cfg.adam())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut records = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        order.shuffle(&mut rng);
        let (mut loss_sum, mut hits) = (0.0, 0usize);
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let labels: Vec<usize> = batch.iter().map(|&i| train_set.y[i]).collect();
            let mut tape = Tape::new();
            let x = tape.constant(train_set.x.select_rows(batch));
            let pass = model.forward(&mut tape, x, Mode::Train, &mut rng)?;
            let loss = cross_entropy_loss(&mut tape, pass.probs, &labels)?;
            let value = tape.data(loss)[0];
            // a NaN probability would be masked by the floor, so check both
            if !value.is_finite() || tape.data(pass.probs).iter().any(|p| !p.is_finite()) {
                return Err(Error::Numerical(format!(
                    "non-finite loss {value} at epoch {epoch}, batch {}",
                    b + 1
                )));
            }
            loss_sum += value * batch.len() as Real;
            let pred = argmax_rows(tape.data(pass.probs), model.config().num_classes);
            hits += pred.iter().zip(&labels).filter(|(p, t)| p == t).count();
            tape.backward(loss)?;

            let zeros: Vec<Vec<Real>> = lengths.iter().map(|&n| vec![0.0; n]).collect();
            let grads: Vec<&[Real]> = trainable
                .iter()
                .zip(&zeros)
                .map(|(&id, z)| tape.grad(pass.vars[id]).unwrap_or(z))
                .collect();
            let entries = model.params_mut().entries_mut();
            let mut params: Vec<&mut [Real]> = entries
                .iter_mut()
                .filter(|e| e.trainable)
                .map(|e| e.tensor.data_mut())
                .collect();
            adam_step(&mut params, &grads, &mut adam)?;
            model.apply_updates(pass.updates);
        }
        let (val_loss, val_accuracy) = if val_set.is_empty() {
            (0.0, 0.0)
        } else {
            let ev = evaluate(model, val_set, cfg.batch_size)?;
            (ev.loss, ev.accuracy)
        };
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as Real,
            train_accuracy: hits as Real / train_set.len() as Real,
            val_loss,
            val_accuracy,
            wall_time_seconds: start.elapsed().as_secs_f64(),
        };
        log::info!(
            "epoch {epoch}/{}: loss {:.4} acc {:.4} val_loss {:.4} val_acc {:.4} ({:.1}s)",
            cfg.epochs,
            record.train_loss,
            record.train_accuracy,
            record.val_loss,
            record.val_accuracy,
            record.wall_time_seconds
        );
        on_epoch(&record);
        records.push(record);
    }
    Ok(records)
}

/// Median per-instance inference time over `repetitions` timed passes,
/// after one untimed warm-up pass.
pub fn measure_inference(model: &Model, batch: &Tensor, repetitions: usize) -> Result<f64> {
    if repetitions < 10 {
        return Err(Error::Contract(format!(
            "timing needs at least 10 repetitions, got {repetitions}"
        )));
    }
    model.predict(batch)?;
    let mut times: Vec<f64> = (0..repetitions)
        .map(|_| {
            let t = Instant::now();
            model.predict(batch).map(|_| t.elapsed().as_secs_f64())
        })
        .collect::<Result<_>>()?;
    times.sort_by(f64::total_cmp);
    let n = times.len();
    let median = if n % 2 == 1 {
        times[n / 2]
    } else {
        0.5 * (times[n / 2 - 1] + times[n / 2])
    };
    // guard against clock granularity on very fast passes
    Ok(median.max(1e-9) / batch.shape()[0] as f64)
}
