//! Teacher-forced training of the steering matrices on a frozen backbone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::CultureId;
use crate::linalg::softmax;
use crate::lm::gradcheck::relative_error;
use crate::lm::{teacher_forced, BackboneLm, SteerSite};
use crate::steer::SteerModel;
use crate::{Error, Result, Scalar};

/// One participant's responses to a cue, encoded for teacher forcing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainExample {
    pub culture: CultureId,
    /// Sort key; examples are processed in (registry index, key) order.
    pub key: String,
    pub prompt: Vec<u32>,
    pub target: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteerTrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
}

impl Default for SteerTrainConfig {
    fn default() -> Self {
        SteerTrainConfig {
            lr: 1e-4,
            epochs: 5,
            batch: 8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LossPoint {
    pub epoch: usize,
    pub batch: usize,
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteerTrainOutcome {
    /// One point per mini-batch.
    pub curve: Vec<LossPoint>,
    /// Mean batch loss per epoch.
    pub epoch_losses: Vec<f64>,
    /// `(key, reason)` for every example that could not be used.
    pub rejected: Vec<(String, String)>,
    pub used: usize,
}

/// Frozen-backbone hidden states at the loss positions of one example.
struct Prepared<T> {
    slice: usize,
    hidden: Vec<T>,
    tokens: Vec<u32>,
}

fn validate<T: Scalar>(
    backbone: &BackboneLm<T>,
    steer: &SteerModel<T>,
    ex: &TrainExample,
) -> std::result::Result<usize, String> {
    let slice = steer
        .registry()
        .iter()
        .position(|c| c == &ex.culture)
        .ok_or_else(|| format!("unknown culture {}", ex.culture))?;
    let dims = backbone.dims();
    if ex.target.is_empty() {
        return Err("empty target".into());
    }
    if ex.prompt.is_empty() {
        return Err("empty prompt".into());
    }
    let needed = ex.prompt.len() + ex.target.len();
    if needed > dims.context {
        return Err(format!("needs {needed} positions but context is {}", dims.context));
    }
    if let Some(t) = ex.prompt.iter().chain(&ex.target).find(|&&t| t as usize >= dims.vocab) {
        return Err(format!("token {t} outside vocabulary of {}", dims.vocab));
    }
    Ok(slice)
}

fn prepare<T: Scalar>(backbone: &BackboneLm<T>, ex: &TrainExample, slice: usize) -> Result<Prepared<T>> {
    let (input, targets) = teacher_forced(&ex.prompt, &ex.target);
    let acts = backbone.forward(&input)?;
    let mut hidden = Vec::with_capacity(targets.len() * backbone.dims().d);
    for t in &targets {
        hidden.extend_from_slice(acts.hidden_row(t.pos));
    }
    Ok(Prepared {
        slice,
        hidden,
        tokens: targets.iter().map(|t| t.token).collect(),
    })
}

/// Mean cross-entropy over the prepared positions and its gradient with
/// respect to the active slice `w`.
fn prepared_loss_grad<T: Scalar>(backbone: &BackboneLm<T>, p: &Prepared<T>, w: &[T], eps: T) -> (T, Vec<T>) {
    let d = backbone.dims().d;
    let v = backbone.dims().vocab;
    let embed = &backbone.params.embed;
    let site = SteerSite {
        matrix: w,
        epsilon: eps,
    };
    let inv = T::one() / T::of(p.tokens.len() as f64);
    let mut grad = vec![T::zero(); d * d];
    let mut loss = T::zero();
    for (pos, &tok) in p.tokens.iter().enumerate() {
        let h = &p.hidden[pos * d..(pos + 1) * d];
        let ht = site.apply(h);
        let mut g = softmax(&backbone.logits(&ht), T::one());
        loss -= g[tok as usize].ln();
        g[tok as usize] -= T::one();
        // dh̃ = Σ_v g_v E[v] / n
        let mut dht = vec![T::zero(); d];
        for (vi, &gv) in g.iter().enumerate().take(v) {
            if gv != T::zero() {
                let erow = &embed[vi * d..(vi + 1) * d];
                for j in 0..d {
                    dht[j] += gv * erow[j];
                }
            }
        }
        for i in 0..d {
            let s = eps * h[i] * inv;
            for j in 0..d {
                grad[i * d + j] += s * dht[j];
            }
        }
    }
    (loss * inv, grad)
}

/// Steered loss of one example through a full forward pass.
pub fn example_loss<T: Scalar>(backbone: &BackboneLm<T>, steer: &SteerModel<T>, ex: &TrainExample) -> Result<T> {
    let c = steer.culture(&ex.culture)?;
    let (input, targets) = teacher_forced(&ex.prompt, &ex.target);
    backbone.loss(&input, &targets, Some(steer.site(&c)?))
}

/// Plain mini-batch gradient descent on the steering matrices. Only the
/// slice of an example's culture receives its gradient; the backbone is not
/// modified. Examples are sorted by (registry index, key) and never shuffled.
pub fn train_steer<T: Scalar>(
    backbone: &BackboneLm<T>,
    steer: &mut SteerModel<T>,
    examples: &[TrainExample],
    cfg: &SteerTrainConfig,
) -> Result<SteerTrainOutcome> {
    if cfg.batch == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    if steer.d() != backbone.dims().d {
        return Err(Error::DimMismatch {
            expected: backbone.dims().d,
            got: steer.d(),
        });
    }
    let mut rejected = Vec::new();
    let mut accepted: Vec<(usize, &TrainExample)> = Vec::new();
    for ex in examples {
        match validate(backbone, steer, ex) {
            Ok(slice) => accepted.push((slice, ex)),
            Err(reason) => {
                log::warn!("rejected steering example {}: {reason}", ex.key);
                rejected.push((ex.key.clone(), reason));
            }
        }
    }
    if accepted.is_empty() {
        return Err(Error::AllExamplesRejected);
    }
    accepted.sort_by(|a, b| (a.0, &a.1.key, &a.1.prompt, &a.1.target).cmp(&(b.0, &b.1.key, &b.1.prompt, &b.1.target)));
    let prepared: Vec<Prepared<T>> = accepted
        .par_iter()
        .map(|&(slice, ex)| prepare(backbone, ex, slice))
        .collect::<Result<_>>()?;

    let d2 = steer.d() * steer.d();
    let lr = T::of(cfg.lr);
    let eps = steer.epsilon;
    let mut curve = Vec::new();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut sum = 0.0;
        let mut batches = 0;
        for (bi, chunk) in prepared.chunks(cfg.batch).enumerate() {
            let w = steer.weights();
            let results: Vec<(T, Vec<T>)> = chunk
                .par_iter()
                .map(|p| prepared_loss_grad(backbone, p, &w[p.slice * d2..(p.slice + 1) * d2], eps))
                .collect();
            let inv = T::one() / T::of(chunk.len() as f64);
            let mut grad = vec![T::zero(); steer.weights().len()];
            let mut loss = T::zero();
            for (p, (l, g)) in chunk.iter().zip(&results) {
                loss += *l;
                for (dst, &src) in grad[p.slice * d2..(p.slice + 1) * d2].iter_mut().zip(g) {
                    *dst += src;
                }
            }
            let loss = (loss * inv).as_f64();
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss(format!("steer epoch {epoch}, batch {bi}")));
            }
            for (x, g) in steer.w.iter_mut().zip(&grad) {
                *x -= lr * *g * inv;
            }
            curve.push(LossPoint { epoch, batch: bi, loss });
            sum += loss;
            batches += 1;
        }
        let mean = sum / batches as f64;
        log::info!("steer epoch {} loss {:.5}", epoch + 1, mean);
        epoch_losses.push(mean);
    }
    Ok(SteerTrainOutcome {
        curve,
        epoch_losses,
        rejected,
        used: prepared.len(),
    })
}

/// Compares the trainer's analytic gradient on `probes` random entries of
/// the example culture's slice with central differences of the full
/// forward loss. Returns the maximum relative error.
pub fn grad_check(
    backbone: &BackboneLm<f64>,
    steer: &SteerModel<f64>,
    ex: &TrainExample,
    probes: usize,
    step: f64,
    seed: u64,
) -> Result<f64> {
    if probes == 0 {
        return Err(Error::NoProbes);
    }
    let slice = validate(backbone, steer, ex).map_err(Error::Invalid)?;
    let c = steer.culture(&ex.culture)?;
    let prepared = prepare(backbone, ex, slice)?;
    let (loss, grad) = prepared_loss_grad(backbone, &prepared, steer.slice(&c)?, steer.epsilon);
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss("steer loss".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut work = steer.clone();
    let mut worst = 0.0f64;
    for _ in 0..probes {
        let i = rng.gen_range(0..grad.len());
        let orig = work.slice(&c)?[i];
        let mut eval = |delta: f64| -> Result<f64> {
            work.slice_mut(&c)?[i] = orig + delta;
            let l = example_loss(backbone, &work, ex);
            work.slice_mut(&c)?[i] = orig;
            l
        };
        let up = eval(step)?;
        let down = eval(-step)?;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFiniteLoss(format!("perturbed W entry {i}")));
        }
        worst = worst.max(relative_error(grad[i], (up - down) / (2.0 * step)));
    }
    Ok(worst)
}

/// Gradient of the full-backward path, used to cross-check the trainer.
#[cfg(test)]
fn full_backward_grad(backbone: &BackboneLm<f64>, steer: &SteerModel<f64>, ex: &TrainExample) -> Vec<f64> {
    let c = steer.culture(&ex.culture).unwrap();
    let (input, targets) = teacher_forced(&ex.prompt, &ex.target);
    let (_, _, dw) = backbone
        .loss_and_grads(&input, &targets, Some(steer.site(&c).unwrap()))
        .unwrap();
    dw.unwrap()
}
