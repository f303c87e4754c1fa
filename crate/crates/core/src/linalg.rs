//! Row-major dense kernels over [`Scalar`] slices.
//!
//! Shapes are passed explicitly; callers own the buffers. Loop order is fixed
//! so results are bit-reproducible for a given input.

use crate::Scalar;

/// `out = a (n×k) · b (k×m)`.
pub fn matmul<T: Scalar>(a: &[T], b: &[T], n: usize, k: usize, m: usize) -> Vec<T> {
    debug_assert_eq!(a.len(), n * k);
    debug_assert_eq!(b.len(), k * m);
    let mut out = vec![T::zero(); n * m];
    for i in 0..n {
        let row = &mut out[i * m..(i + 1) * m];
        for (p, &av) in a[i * k..(i + 1) * k].iter().enumerate() {
            if av == T::zero() {
                continue;
            }
            for (o, &bv) in row.iter_mut().zip(&b[p * m..(p + 1) * m]) {
                *o += av * bv;
            }
        }
    }
    out
}

/// `out += aᵀ (k×n)ᵀ · b (k×m)`, i.e. `a` is stored k×n.
pub fn matmul_at_b_acc<T: Scalar>(out: &mut [T], a: &[T], b: &[T], k: usize, n: usize, m: usize) {
    debug_assert_eq!(a.len(), k * n);
    debug_assert_eq!(b.len(), k * m);
    debug_assert_eq!(out.len(), n * m);
    for p in 0..k {
        let brow = &b[p * m..(p + 1) * m];
        for (i, &av) in a[p * n..(p + 1) * n].iter().enumerate() {
            if av == T::zero() {
                continue;
            }
            for (o, &bv) in out[i * m..(i + 1) * m].iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
}

/// `out = a (n×k) · bᵀ` where `b` is stored m×k.
pub fn matmul_a_bt<T: Scalar>(a: &[T], b: &[T], n: usize, k: usize, m: usize) -> Vec<T> {
    debug_assert_eq!(a.len(), n * k);
    debug_assert_eq!(b.len(), m * k);
    let mut out = vec![T::zero(); n * m];
    for i in 0..n {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..m {
            out[i * m + j] = dot(arow, &b[j * k..(j + 1) * k]);
        }
    }
    out
}

/// Row vector times matrix: `x (1×n) · w (n×m)`.
pub fn vecmat<T: Scalar>(x: &[T], w: &[T], m: usize) -> Vec<T> {
    matmul(x, w, 1, x.len(), m)
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut s = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

pub fn add_assign<T: Scalar>(dst: &mut [T], src: &[T]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// Numerically stable softmax with temperature.
pub fn softmax<T: Scalar>(logits: &[T], temperature: T) -> Vec<T> {
    let max = logits.iter().fold(T::neg_infinity(), |m, &v| if v > m { v } else { m });
    let mut out: Vec<T> = logits.iter().map(|&v| ((v - max) / temperature).exp()).collect();
    let z: T = out.iter().copied().sum();
    for o in &mut out {
        *o /= z;
    }
    out
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax<T: Scalar>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in xs.iter().enumerate() {
        if v > xs[best] {
            best = i;
        }
    }
    best
}
