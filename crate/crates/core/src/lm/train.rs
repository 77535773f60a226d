use std::io::{self, Write};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{LmError, Scalar, TransformerLM};
use crate::conllu::{Vocabulary, EOS};
use crate::conllu::Corpus;
use crate::util::{derive_seed, rng};

/// Plain SGD with a warmup epoch and cosine decay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHyperparams {
    /// Peak rate, reached at the end of the first epoch.
    pub learning_rate: f64,
    /// Rate at the very last step.
    pub min_learning_rate: f64,
    pub epochs: usize,
    /// Sentences per step.
    pub batch_size: usize,
    /// Global gradient-norm ceiling.
    pub clip_norm: Option<f64>,
    pub seed: u64,
}

impl Default for TrainHyperparams {
    fn default() -> Self {
        TrainHyperparams {
            learning_rate: 0.3,
            min_learning_rate: 0.0,
            epochs: 6,
            batch_size: 32,
            clip_norm: Some(1.0),
            seed: 0,
        }
    }
}

impl TrainHyperparams {
    pub fn validate(&self) -> Result<(), LmError> {
        if !(self.learning_rate > 0.0) || self.min_learning_rate < 0.0 || self.min_learning_rate > self.learning_rate {
            return Err(LmError::InvalidConfig("need 0 <= min_learning_rate <= learning_rate, learning_rate > 0".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(LmError::InvalidConfig("epochs and batch_size must be positive".into()));
        }
        Ok(())
    }
}

/// Rate at 0-based `step`: linear ramp over the first epoch, then a
/// half-cosine from the peak down to the floor at the final step.
pub fn learning_rate(hp: &TrainHyperparams, step: usize, steps_per_epoch: usize) -> f64 {
    let warm = steps_per_epoch.max(1);
    let total = warm * hp.epochs;
    if step < warm {
        return hp.learning_rate * (step + 1) as f64 / warm as f64;
    }
    if total <= warm {
        return hp.learning_rate;
    }
    let progress = ((step + 1 - warm) as f64 / (total - warm) as f64).min(1.0);
    let cos = 0.5 * (1.0 + (std::f64::consts::PI * progress).cos());
    hp.min_learning_rate + (hp.learning_rate - hp.min_learning_rate) * cos
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Rate used by the epoch's last step.
    pub lr: f64,
    /// Token-weighted mean training cross-entropy.
    pub train_loss: f64,
    pub valid_ppl: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossCurve {
    pub epochs: Vec<EpochStats>,
}

impl LossCurve {
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "lr", "train_loss", "valid_ppl"])?;
        for e in &self.epochs {
            w.write_record([
                e.epoch.to_string(),
                format!("{:.6}", e.lr),
                format!("{:.6}", e.train_loss),
                e.valid_ppl.map(|p| format!("{p:.4}")).unwrap_or_default(),
            ])?;
        }
        w.flush()
    }
}

/// `BOS form… EOS` id sequences.
pub fn encode_corpus(corpus: &Corpus, vocab: &Vocabulary) -> Vec<Vec<u32>> {
    corpus
        .sentences
        .iter()
        .map(|s| {
            let mut ids: Vec<u32> =
                vocab.encode_with_bos(s.tokens.iter().map(|t| t.form.as_str())).into_iter().map(|i| i as u32).collect();
            ids.push(EOS as u32);
            ids
        })
        .collect()
}

/// `exp` of the mean next-token negative log-likelihood over every
/// prediction in `data`.
pub fn perplexity<F: Scalar>(model: &TransformerLM<F>, data: &[Vec<u32>]) -> Result<f64, LmError> {
    let (mut nll, mut n) = (0.0, 0usize);
    for seq in data {
        let (a, b) = model.sequence_nll(seq)?;
        nll += a;
        n += b;
    }
    if n == 0 {
        return Err(LmError::EmptyCorpus);
    }
    Ok((nll / n as f64).exp())
}

pub fn train<F: Scalar>(
    model: &mut TransformerLM<F>,
    data: &[Vec<u32>],
    valid: Option<&[Vec<u32>]>,
    hp: &TrainHyperparams,
) -> Result<LossCurve, LmError> {
    train_with_callback(model, data, valid, hp, |_| {})
}

/// Like [`train`], calling `on_epoch` after each epoch.
pub fn train_with_callback<F: Scalar>(
    model: &mut TransformerLM<F>,
    data: &[Vec<u32>],
    valid: Option<&[Vec<u32>]>,
    hp: &TrainHyperparams,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<LossCurve, LmError> {
    hp.validate()?;
    let data: Vec<&Vec<u32>> = data.iter().filter(|s| s.len() >= 2).collect();
    if data.is_empty() {
        return Err(LmError::EmptyCorpus);
    }
    for s in &data {
        model.check_ids(&s[..s.len() - 1])?;
    }
    let steps_per_epoch = data.len().div_ceil(hp.batch_size);
    let mut dropout_rng = rng(derive_seed(hp.seed, u64::MAX));
    let mut curve = LossCurve::default();
    let mut step = 0;
    for epoch in 1..=hp.epochs {
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut rng(derive_seed(hp.seed, epoch as u64)));
        let (mut loss_sum, mut tokens) = (0.0, 0usize);
        let mut lr = 0.0;
        for chunk in order.chunks(hp.batch_size) {
            let batch: Vec<&[u32]> = chunk.iter().map(|&i| data[i].as_slice()).collect();
            let n_tok: usize = batch.iter().map(|s| s.len() - 1).sum();
            let (loss, mut grad) = model.loss_and_grad(&batch, Some(&mut dropout_rng));
            let loss = loss.to_f64().unwrap_or(f64::NAN);
            if !loss.is_finite() {
                return Err(LmError::DivergenceDetected { epoch, step });
            }
            if let Some(clip) = hp.clip_norm {
                let norm = grad.global_norm().to_f64().unwrap_or(f64::NAN);
                if !norm.is_finite() {
                    return Err(LmError::DivergenceDetected { epoch, step });
                }
                if norm > clip {
                    grad.scale(F::of(clip / norm));
                }
            }
            lr = learning_rate(hp, step, steps_per_epoch);
            model.params.sgd_step(&grad, F::of(lr));
            loss_sum += loss * n_tok as f64;
            tokens += n_tok;
            step += 1;
            if step % 500 == 0 {
                log::debug!("epoch {epoch} step {step} loss {loss:.4} lr {lr:.5}");
            }
        }
        let valid_ppl = match valid {
            Some(v) if !v.is_empty() => Some(perplexity(model, v)?),
            _ => None,
        };
        let stats = EpochStats { epoch, lr, train_loss: loss_sum / tokens as f64, valid_ppl };
        log::info!(
            "epoch {epoch}: train loss {:.4}, valid ppl {}",
            stats.train_loss,
            valid_ppl.map(|p| format!("{p:.3}")).unwrap_or_else(|| "-".into())
        );
        on_epoch(&stats);
        curve.epochs.push(stats);
    }
    Ok(curve)
}
