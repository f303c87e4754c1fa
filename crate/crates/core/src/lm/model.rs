//! Single-block causal transformer with tied unembedding.
//!
//! ```text
//! x0 = E[tok] + P[pos]
//! x1 = x0 + softmax_causal((x0 Wq)(x0 Wk)ᵀ / √d) (x0 Wv) Wo
//! h  = x1 + tanh(x1 W1 + b1) W2 + b2
//! logits = h̃ Eᵀ          (h̃ = h, or h + ε·h·W_c when steered)
//! ```
//!
//! Forward and backward passes are written out by hand; the backward pass is
//! checked against central differences in `gradcheck`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{dot, matmul, matmul_a_bt, matmul_at_b_acc, softmax};
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelDims {
    pub vocab: usize,
    pub d: usize,
    pub context: usize,
}

impl ModelDims {
    pub fn hidden(&self) -> usize {
        4 * self.d
    }
}

/// All trainable tensors, row-major. Also used as the gradient container.
#[derive(Clone, Debug, PartialEq)]
pub struct Params<T> {
    pub embed: Vec<T>,
    pub pos: Vec<T>,
    pub wq: Vec<T>,
    pub wk: Vec<T>,
    pub wv: Vec<T>,
    pub wo: Vec<T>,
    pub ff1_w: Vec<T>,
    pub ff1_b: Vec<T>,
    pub ff2_w: Vec<T>,
    pub ff2_b: Vec<T>,
}

impl<T: Scalar> Params<T> {
    /// Group names in checkpoint order.
    pub const GROUPS: [&'static str; 10] = [
        "embed", "pos", "wq", "wk", "wv", "wo", "ff1_w", "ff1_b", "ff2_w", "ff2_b",
    ];

    pub fn zeros(dims: ModelDims) -> Self {
        let d = dims.d;
        let h = dims.hidden();
        let z = |n: usize| vec![T::zero(); n];
        Params {
            embed: z(dims.vocab * d),
            pos: z(dims.context * d),
            wq: z(d * d),
            wk: z(d * d),
            wv: z(d * d),
            wo: z(d * d),
            ff1_w: z(d * h),
            ff1_b: z(h),
            ff2_w: z(h * d),
            ff2_b: z(d),
        }
    }

    pub fn groups(&self) -> [&Vec<T>; 10] {
        [
            &self.embed,
            &self.pos,
            &self.wq,
            &self.wk,
            &self.wv,
            &self.wo,
            &self.ff1_w,
            &self.ff1_b,
            &self.ff2_w,
            &self.ff2_b,
        ]
    }

    pub fn groups_mut(&mut self) -> [&mut Vec<T>; 10] {
        [
            &mut self.embed,
            &mut self.pos,
            &mut self.wq,
            &mut self.wk,
            &mut self.wv,
            &mut self.wo,
            &mut self.ff1_w,
            &mut self.ff1_b,
            &mut self.ff2_w,
            &mut self.ff2_b,
        ]
    }

    pub fn add_assign(&mut self, other: &Params<T>) {
        for (a, b) in self.groups_mut().into_iter().zip(other.groups()) {
            crate::linalg::add_assign(a, b);
        }
    }

    pub fn scale(&mut self, s: T) {
        for g in self.groups_mut() {
            g.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.groups().iter().all(|g| g.iter().all(|v| v.is_finite()))
    }
}

/// Linear steering applied to the final hidden state before unembedding.
#[derive(Clone, Copy, Debug)]
pub struct SteerSite<'a, T> {
    /// d×d matrix of the active culture.
    pub matrix: &'a [T],
    pub epsilon: T,
}

impl<T: Scalar> SteerSite<'_, T> {
    /// `h + ε·h·W`.
    pub fn apply(&self, h: &[T]) -> Vec<T> {
        let d = h.len();
        let delta = matmul(h, self.matrix, 1, d, d);
        h.iter().zip(delta).map(|(&x, dx)| x + self.epsilon * dx).collect()
    }
}

/// Next-token target: the logits at `pos` should predict `token`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TokenTarget {
    pub pos: usize,
    pub token: u32,
}

/// Cached activations of one forward pass.
#[derive(Clone, Debug)]
pub struct Activations<T> {
    pub n: usize,
    ids: Vec<u32>,
    x0: Vec<T>,
    q: Vec<T>,
    k: Vec<T>,
    v: Vec<T>,
    attn: Vec<T>,
    z: Vec<T>,
    x1: Vec<T>,
    f: Vec<T>,
    /// Final hidden states, n×d.
    pub h: Vec<T>,
}

impl<T> Activations<T> {
    pub fn hidden_row(&self, i: usize) -> &[T] {
        let d = self.h.len() / self.n;
        &self.h[i * d..(i + 1) * d]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BackboneLm<T> {
    dims: ModelDims,
    pub params: Params<T>,
}

impl<T: Scalar> BackboneLm<T> {
    pub fn zeros(dims: ModelDims) -> Self {
        BackboneLm {
            dims,
            params: Params::zeros(dims),
        }
    }

    /// Seeded uniform initialization scaled per tensor fan-in.
    pub fn init(dims: ModelDims, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = BackboneLm::zeros(dims);
        let d = dims.d as f64;
        let h = dims.hidden() as f64;
        let scales = [
            0.3,
            0.1,
            1.0 / d.sqrt(),
            1.0 / d.sqrt(),
            1.0 / d.sqrt(),
            0.5 / d.sqrt(),
            1.0 / d.sqrt(),
            0.0,
            0.5 / h.sqrt(),
            0.0,
        ];
        for (g, &s) in m.params.groups_mut().into_iter().zip(&scales) {
            // Uniform(-a, a) has standard deviation a/√3.
            let a = s * 3f64.sqrt();
            for v in g.iter_mut() {
                *v = if a > 0.0 {
                    T::of(rng.gen_range(-a..a))
                } else {
                    T::zero()
                };
            }
        }
        m
    }

    pub fn from_params(dims: ModelDims, params: Params<T>) -> Result<Self> {
        let expect = Params::<T>::zeros(dims);
        for (name, (a, b)) in Params::<T>::GROUPS
            .iter()
            .zip(params.groups().iter().zip(expect.groups()))
        {
            if a.len() != b.len() {
                return Err(Error::Checkpoint(format!(
                    "parameter {name} has {} values, expected {}",
                    a.len(),
                    b.len()
                )));
            }
        }
        Ok(BackboneLm { dims, params })
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    fn check_ids(&self, ids: &[u32]) -> Result<()> {
        if ids.len() > self.dims.context {
            return Err(Error::ContextOverflow {
                needed: ids.len(),
                context: self.dims.context,
            });
        }
        if let Some(&bad) = ids.iter().find(|&&t| t as usize >= self.dims.vocab) {
            return Err(Error::TokenOutOfRange {
                id: bad,
                vocab: self.dims.vocab,
            });
        }
        if ids.is_empty() {
            return Err(Error::Invalid("empty token sequence".into()));
        }
        Ok(())
    }

    pub fn forward(&self, ids: &[u32]) -> Result<Activations<T>> {
        self.check_ids(ids)?;
        let p = &self.params;
        let n = ids.len();
        let d = self.dims.d;
        let hd = self.dims.hidden();

        let mut x0 = vec![T::zero(); n * d];
        for (i, &t) in ids.iter().enumerate() {
            let t = t as usize;
            for j in 0..d {
                x0[i * d + j] = p.embed[t * d + j] + p.pos[i * d + j];
            }
        }
        let q = matmul(&x0, &p.wq, n, d, d);
        let k = matmul(&x0, &p.wk, n, d, d);
        let v = matmul(&x0, &p.wv, n, d, d);
        let scale = T::one() / T::of(d as f64).sqrt();
        let mut attn = vec![T::zero(); n * n];
        for i in 0..n {
            let scores: Vec<T> = (0..=i)
                .map(|j| dot(&q[i * d..(i + 1) * d], &k[j * d..(j + 1) * d]) * scale)
                .collect();
            let a = softmax(&scores, T::one());
            attn[i * n..i * n + i + 1].copy_from_slice(&a);
        }
        let z = matmul(&attn, &v, n, n, d);
        let attn_out = matmul(&z, &p.wo, n, d, d);
        let x1: Vec<T> = x0.iter().zip(&attn_out).map(|(&a, &b)| a + b).collect();

        let mut f = matmul(&x1, &p.ff1_w, n, d, hd);
        for (i, v) in f.iter_mut().enumerate() {
            *v = (*v + p.ff1_b[i % hd]).tanh();
        }
        let ff = matmul(&f, &p.ff2_w, n, hd, d);
        let h: Vec<T> = x1
            .iter()
            .zip(&ff)
            .enumerate()
            .map(|(i, (&a, &b))| a + b + p.ff2_b[i % d])
            .collect();

        Ok(Activations {
            n,
            ids: ids.to_vec(),
            x0,
            q,
            k,
            v,
            attn,
            z,
            x1,
            f,
            h,
        })
    }

    /// Logits `h Eᵀ` for one hidden row.
    pub fn logits(&self, h: &[T]) -> Vec<T> {
        matmul_a_bt(h, &self.params.embed, 1, self.dims.d, self.dims.vocab)
    }

    /// Mean next-token cross-entropy over `targets`.
    pub fn loss(&self, ids: &[u32], targets: &[TokenTarget], steer: Option<SteerSite<'_, T>>) -> Result<T> {
        let acts = self.forward(ids)?;
        self.loss_from_hidden(&acts, targets, steer)
    }

    pub fn loss_from_hidden(
        &self,
        acts: &Activations<T>,
        targets: &[TokenTarget],
        steer: Option<SteerSite<'_, T>>,
    ) -> Result<T> {
        check_targets(targets, acts.n, self.dims.vocab)?;
        let mut total = T::zero();
        for t in targets {
            let mut h = acts.hidden_row(t.pos).to_vec();
            if let Some(s) = &steer {
                h = s.apply(&h);
            }
            let probs = softmax(&self.logits(&h), T::one());
            total -= probs[t.token as usize].ln();
        }
        Ok(total / T::of(targets.len() as f64))
    }

    /// Loss plus gradients for every backbone parameter and, when steered,
    /// for the steering matrix.
    pub fn loss_and_grads(
        &self,
        ids: &[u32],
        targets: &[TokenTarget],
        steer: Option<SteerSite<'_, T>>,
    ) -> Result<(T, Params<T>, Option<Vec<T>>)> {
        let acts = self.forward(ids)?;
        check_targets(targets, acts.n, self.dims.vocab)?;
        let d = self.dims.d;
        let vsz = self.dims.vocab;
        let n = acts.n;
        let inv = T::one() / T::of(targets.len() as f64);

        let mut grads = Params::zeros(self.dims);
        let mut dsteer = steer.map(|_| vec![T::zero(); d * d]);
        let mut dh = vec![T::zero(); n * d];
        let mut total = T::zero();

        for t in targets {
            let h = acts.hidden_row(t.pos);
            let ht = match &steer {
                Some(s) => s.apply(h),
                None => h.to_vec(),
            };
            let mut g = softmax(&self.logits(&ht), T::one());
            total -= g[t.token as usize].ln();
            g[t.token as usize] -= T::one();
            g.iter_mut().for_each(|v| *v *= inv);

            // Tied unembedding: dE[v] += g_v · h̃, dh̃ = Σ_v g_v E[v].
            let mut dht = vec![T::zero(); d];
            for v in 0..vsz {
                let gv = g[v];
                let erow = &self.params.embed[v * d..(v + 1) * d];
                let grow = &mut grads.embed[v * d..(v + 1) * d];
                for j in 0..d {
                    grow[j] += gv * ht[j];
                    dht[j] += gv * erow[j];
                }
            }
            let row = &mut dh[t.pos * d..(t.pos + 1) * d];
            match (&steer, dsteer.as_mut()) {
                (Some(s), Some(dw)) => {
                    // h̃ = h + ε h W  ⇒  dh = dh̃ + ε W dh̃,  dW += ε hᵀ dh̃.
                    for i in 0..d {
                        let wrow = &s.matrix[i * d..(i + 1) * d];
                        row[i] += dht[i] + s.epsilon * dot(wrow, &dht);
                        for j in 0..d {
                            dw[i * d + j] += s.epsilon * h[i] * dht[j];
                        }
                    }
                }
                _ => crate::linalg::add_assign(row, &dht),
            }
        }

        self.backward(&acts, &dh, &mut grads);
        Ok((total * inv, grads, dsteer))
    }

    /// Backpropagates `dh` (gradient w.r.t. final hidden states) into `grads`.
    fn backward(&self, a: &Activations<T>, dh: &[T], grads: &mut Params<T>) {
        let p = &self.params;
        let n = a.n;
        let d = self.dims.d;
        let hd = self.dims.hidden();
        let one = T::one();

        // Feedforward.
        let mut dx1 = dh.to_vec();
        matmul_at_b_acc(&mut grads.ff2_w, &a.f, dh, n, hd, d);
        for i in 0..n {
            for j in 0..d {
                grads.ff2_b[j] += dh[i * d + j];
            }
        }
        let mut dpre = matmul_a_bt(dh, &p.ff2_w, n, d, hd);
        for (g, &f) in dpre.iter_mut().zip(&a.f) {
            *g *= one - f * f;
        }
        matmul_at_b_acc(&mut grads.ff1_w, &a.x1, &dpre, n, d, hd);
        for i in 0..n {
            for j in 0..hd {
                grads.ff1_b[j] += dpre[i * hd + j];
            }
        }
        crate::linalg::add_assign(&mut dx1, &matmul_a_bt(&dpre, &p.ff1_w, n, hd, d));

        // Attention.
        let mut dx0 = dx1.clone();
        matmul_at_b_acc(&mut grads.wo, &a.z, &dx1, n, d, d);
        let dz = matmul_a_bt(&dx1, &p.wo, n, d, d);
        let da = matmul_a_bt(&dz, &a.v, n, d, n);
        let mut dv = vec![T::zero(); n * d];
        matmul_at_b_acc(&mut dv, &a.attn, &dz, n, n, d);
        let scale = one / T::of(d as f64).sqrt();
        let mut ds = vec![T::zero(); n * n];
        for i in 0..n {
            let arow = &a.attn[i * n..i * n + i + 1];
            let darow = &da[i * n..i * n + i + 1];
            let inner = dot(arow, darow);
            for j in 0..=i {
                ds[i * n + j] = arow[j] * (darow[j] - inner) * scale;
            }
        }
        let dq = matmul(&ds, &a.k, n, n, d);
        let mut dk = vec![T::zero(); n * d];
        matmul_at_b_acc(&mut dk, &ds, &a.q, n, n, d);
        matmul_at_b_acc(&mut grads.wq, &a.x0, &dq, n, d, d);
        matmul_at_b_acc(&mut grads.wk, &a.x0, &dk, n, d, d);
        matmul_at_b_acc(&mut grads.wv, &a.x0, &dv, n, d, d);
        crate::linalg::add_assign(&mut dx0, &matmul_a_bt(&dq, &p.wq, n, d, d));
        crate::linalg::add_assign(&mut dx0, &matmul_a_bt(&dk, &p.wk, n, d, d));
        crate::linalg::add_assign(&mut dx0, &matmul_a_bt(&dv, &p.wv, n, d, d));

        // Embeddings.
        for (i, &t) in a.ids.iter().enumerate() {
            let t = t as usize;
            for j in 0..d {
                grads.embed[t * d + j] += dx0[i * d + j];
                grads.pos[i * d + j] += dx0[i * d + j];
            }
        }
    }
}

fn check_targets(targets: &[TokenTarget], n: usize, vocab: usize) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::Invalid("no loss targets".into()));
    }
    for t in targets {
        if t.pos >= n {
            return Err(Error::Invalid(format!(
                "target position {} beyond sequence of {n}",
                t.pos
            )));
        }
        if t.token as usize >= vocab {
            return Err(Error::TokenOutOfRange { id: t.token, vocab });
        }
    }
    Ok(())
}

/// Teacher-forced targets for `prompt ++ target`: the model input is
/// `prompt ++ target[..len-1]` and position `prompt.len()-1+j` predicts
/// `target[j]`. Prompt positions carry no loss.
pub fn teacher_forced(prompt: &[u32], target: &[u32]) -> (Vec<u32>, Vec<TokenTarget>) {
    let mut input = prompt.to_vec();
    input.extend_from_slice(&target[..target.len().saturating_sub(1)]);
    let targets = target
        .iter()
        .enumerate()
        .map(|(j, &token)| TokenTarget {
            pos: prompt.len() - 1 + j,
            token,
        })
        .collect();
    (input, targets)
}
