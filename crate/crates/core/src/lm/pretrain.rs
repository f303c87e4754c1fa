//! Next-token pretraining of the backbone with Adam.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::lm::model::{BackboneLm, Params, TokenTarget};
use crate::{Error, Result, Scalar};

/// One teacher-forced training sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LmExample {
    pub input: Vec<u32>,
    pub targets: Vec<TokenTarget>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 3e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            epochs: 20,
            batch: 16,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PretrainOutcome {
    /// Mean loss over the corpus before any update.
    pub initial_loss: f64,
    /// Mean loss over the corpus after the final epoch.
    pub final_loss: f64,
    /// Mean batch loss for each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Mean per-example loss over `examples`, reduced in order.
pub fn corpus_loss<T: Scalar>(model: &BackboneLm<T>, examples: &[LmExample]) -> Result<f64> {
    let losses: Vec<f64> = examples
        .par_iter()
        .map(|ex| model.loss(&ex.input, &ex.targets, None).map(|l| l.as_f64()))
        .collect::<Result<_>>()?;
    let mean = losses.iter().sum::<f64>() / losses.len().max(1) as f64;
    if !mean.is_finite() {
        return Err(Error::NonFiniteLoss("pretraining corpus loss".into()));
    }
    Ok(mean)
}

/// Trains `model` in place. Example order is reshuffled each epoch from
/// `cfg.seed`; per-batch gradients are computed in parallel and summed in
/// example order, so results do not depend on the worker count.
pub fn pretrain<T: Scalar>(
    model: &mut BackboneLm<T>,
    examples: &[LmExample],
    cfg: &AdamConfig,
) -> Result<PretrainOutcome> {
    if examples.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if cfg.batch == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let initial_loss = corpus_loss(model, examples)?;
    let dims = model.dims();
    let mut m = Params::<T>::zeros(dims);
    let mut v = Params::<T>::zeros(dims);
    let (b1, b2) = (T::of(cfg.beta1), T::of(cfg.beta2));
    let mut step = 0i32;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut batch_losses = Vec::new();
        for chunk in order.chunks(cfg.batch) {
            let results: Vec<(T, Params<T>)> = chunk
                .par_iter()
                .map(|&i| {
                    let ex = &examples[i];
                    model
                        .loss_and_grads(&ex.input, &ex.targets, None)
                        .map(|(l, g, _)| (l, g))
                })
                .collect::<Result<_>>()?;
            let inv = T::one() / T::of(chunk.len() as f64);
            let mut grad = Params::<T>::zeros(dims);
            let mut loss = T::zero();
            for (l, g) in &results {
                loss += *l;
                grad.add_assign(g);
            }
            grad.scale(inv);
            let loss = (loss * inv).as_f64();
            if !loss.is_finite() || !grad.is_finite() {
                return Err(Error::NonFiniteLoss(format!(
                    "pretraining epoch {epoch}, batch loss {loss}"
                )));
            }
            batch_losses.push(loss);

            step += 1;
            let c1 = T::one() - b1.powi(step);
            let c2 = T::one() - b2.powi(step);
            let lr = T::of(cfg.lr);
            let eps = T::of(cfg.eps);
            let groups = model.params.groups_mut();
            let ms = m.groups_mut();
            let vs = v.groups_mut();
            for (((p, g), mg), vg) in groups.into_iter().zip(grad.groups()).zip(ms).zip(vs) {
                for i in 0..p.len() {
                    mg[i] = b1 * mg[i] + (T::one() - b1) * g[i];
                    vg[i] = b2 * vg[i] + (T::one() - b2) * g[i] * g[i];
                    let mhat = mg[i] / c1;
                    let vhat = vg[i] / c2;
                    p[i] -= lr * mhat / (vhat.sqrt() + eps);
                }
            }
        }
        let mean = batch_losses.iter().sum::<f64>() / batch_losses.len() as f64;
        log::info!("pretrain epoch {} loss {:.5}", epoch + 1, mean);
        epoch_losses.push(mean);
    }
    let final_loss = corpus_loss(model, examples)?;
    Ok(PretrainOutcome {
        initial_loss,
        final_loss,
        epoch_losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::model::{teacher_forced, ModelDims};

    fn corpus() -> Vec<LmExample> {
        (0..6u32)
            .map(|i| {
                let (input, targets) = teacher_forced(&[1, 3 + i % 3], &[6 + i % 3, 2]);
                LmExample { input, targets }
            })
            .collect()
    }

    fn dims() -> ModelDims {
        ModelDims {
            vocab: 10,
            d: 6,
            context: 6,
        }
    }

    #[test]
    fn loss_decreases() {
        let mut m = BackboneLm::<f64>::init(dims(), 1);
        let cfg = AdamConfig {
            epochs: 30,
            batch: 3,
            lr: 1e-2,
            ..AdamConfig::default()
        };
        let out = pretrain(&mut m, &corpus(), &cfg).unwrap();
        assert!(out.final_loss < out.initial_loss * 0.5, "{out:?}");
        assert_eq!(out.epoch_losses.len(), 30);
    }

    #[test]
    fn zero_epochs_keeps_weights() {
        let mut m = BackboneLm::<f64>::init(dims(), 1);
        let before = m.clone();
        let cfg = AdamConfig {
            epochs: 0,
            ..AdamConfig::default()
        };
        let out = pretrain(&mut m, &corpus(), &cfg).unwrap();
        assert_eq!(m, before);
        assert!(out.epoch_losses.is_empty());
    }

    #[test]
    fn seeded_runs_identical() {
        let cfg = AdamConfig {
            epochs: 3,
            batch: 4,
            ..AdamConfig::default()
        };
        let run = || {
            let mut m = BackboneLm::<f64>::init(dims(), 2);
            pretrain(&mut m, &corpus(), &cfg).unwrap();
            m
        };
        assert_eq!(run(), run());
    }
}
