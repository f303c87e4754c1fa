//! Top-K recall (R@K) and position-weighted recall (PWR@K).
//!
//! With truth list `A = [a_1, …, a_N]` in frequency-rank order and a ranked
//! prediction `Â`:
//!
//! ```text
//! R@K   = |{ a_i : a_i ∈ Top-K(Â) }| / N
//! PWR@K = Σ_i (1/i)·𝕀(a_i ∈ Top-K(Â)) / Σ_i 1/i
//! ```
//!
//! When `K` exceeds the prediction length, Top-K is the whole prediction.
//! Both metrics are generic over [`MetricValue`], so they can be evaluated in
//! floating point or exactly over rationals.

use std::collections::HashSet;
use std::fmt::Debug;

use num_traits::{FromPrimitive, Num};
use serde::{Deserialize, Serialize};

use crate::data::AssociationNorms;
use crate::{Error, Result};

/// Numeric type a metric can be computed in (`f64`, `Rational64`, ...).
pub trait MetricValue: Num + FromPrimitive + Clone + PartialOrd + Debug {}
impl<T: Num + FromPrimitive + Clone + PartialOrd + Debug> MetricValue for T {}

/// Candidate words sorted by non-increasing score; words are unique.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedPrediction<S> {
    words: Vec<String>,
    scores: Vec<S>,
}

impl<S: PartialOrd + Copy> RankedPrediction<S> {
    pub fn new(words: Vec<String>, scores: Vec<S>) -> Result<Self> {
        if words.len() != scores.len() {
            return Err(Error::ScoreLengthMismatch {
                words: words.len(),
                scores: scores.len(),
            });
        }
        let mut seen = HashSet::with_capacity(words.len());
        for w in &words {
            if !seen.insert(w.as_str()) {
                return Err(Error::DuplicatePrediction(w.clone()));
            }
        }
        for (i, pair) in scores.windows(2).enumerate() {
            if !(pair[0] >= pair[1]) {
                return Err(Error::UnsortedScores(i + 1));
            }
        }
        Ok(RankedPrediction { words, scores })
    }
}

impl<S> RankedPrediction<S> {
    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn scores(&self) -> &[S] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// The first `min(k, len)` words.
    pub fn top_k(&self, k: usize) -> &[String] {
        &self.words[..k.min(self.words.len())]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricResult<T> {
    pub k: usize,
    pub value: T,
}

fn cast<T: MetricValue>(n: usize) -> T {
    T::from_usize(n).expect("count representable in metric type")
}

/// 1-based truth ranks whose word is in `top`.
fn hit_ranks<W: AsRef<str>>(truth: &[W], top: &HashSet<&str>) -> Vec<usize> {
    truth
        .iter()
        .enumerate()
        .filter(|(_, w)| top.contains(w.as_ref()))
        .map(|(i, _)| i + 1)
        .collect()
}

fn check<W>(truth: &[W], k: usize) -> Result<()> {
    if truth.is_empty() {
        return Err(Error::EmptyTruth);
    }
    if k == 0 {
        return Err(Error::ZeroK);
    }
    Ok(())
}

fn top_set<P: AsRef<str>>(pred: &[P], k: usize) -> HashSet<&str> {
    pred.iter().take(k).map(AsRef::as_ref).collect()
}

/// R@K over plain word lists. `truth` must be duplicate-free.
pub fn recall_from_lists<T: MetricValue, W: AsRef<str>, P: AsRef<str>>(
    truth: &[W],
    pred: &[P],
    k: usize,
) -> Result<MetricResult<T>> {
    check(truth, k)?;
    let hits = hit_ranks(truth, &top_set(pred, k)).len();
    Ok(MetricResult {
        k,
        value: cast::<T>(hits) / cast::<T>(truth.len()),
    })
}

/// PWR@K over plain word lists. `truth` must be duplicate-free and in
/// frequency-rank order.
pub fn pwr_from_lists<T: MetricValue, W: AsRef<str>, P: AsRef<str>>(
    truth: &[W],
    pred: &[P],
    k: usize,
) -> Result<MetricResult<T>> {
    check(truth, k)?;
    let mut num = T::zero();
    for i in hit_ranks(truth, &top_set(pred, k)) {
        num = num + T::one() / cast::<T>(i);
    }
    Ok(MetricResult {
        k,
        value: num / harmonic::<T>(truth.len()),
    })
}

/// `H_n = Σ_{i=1..n} 1/i`.
pub fn harmonic<T: MetricValue>(n: usize) -> T {
    (1..=n).fold(T::zero(), |acc, i| acc + T::one() / cast::<T>(i))
}

pub fn recall_at_k<T: MetricValue, S>(
    truth: &AssociationNorms,
    pred: &RankedPrediction<S>,
    k: usize,
) -> Result<MetricResult<T>> {
    let words: Vec<&str> = truth.words().collect();
    recall_from_lists(&words, pred.words(), k)
}

pub fn pwr_at_k<T: MetricValue, S>(
    truth: &AssociationNorms,
    pred: &RankedPrediction<S>,
    k: usize,
) -> Result<MetricResult<T>> {
    let words: Vec<&str> = truth.words().collect();
    pwr_from_lists(&words, pred.words(), k)
}

/// `(R@K, PWR@K)` for each `k` in `ks`, which must be strictly ascending.
pub fn metric_suite<T: MetricValue, S>(
    truth: &AssociationNorms,
    pred: &RankedPrediction<S>,
    ks: &[usize],
) -> Result<Vec<(MetricResult<T>, MetricResult<T>)>> {
    if let Some(w) = ks.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::Invalid(format!(
            "ks must be strictly ascending, got {} then {}",
            w[0], w[1]
        )));
    }
    ks.iter()
        .map(|&k| Ok((recall_at_k(truth, pred, k)?, pwr_at_k(truth, pred, k)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::CultureId;
    use num_rational::Rational64;

    fn norms(words: &[&str]) -> AssociationNorms {
        let n = words.len() as u32;
        let entries = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.to_string(), n - i as u32))
            .collect();
        AssociationNorms::from_entries(CultureId::new("USA").unwrap(), "cue", entries, None).unwrap()
    }

    fn pred(words: &[&str]) -> RankedPrediction<f64> {
        let n = words.len();
        RankedPrediction::new(
            words.iter().map(|s| s.to_string()).collect(),
            (0..n).map(|i| (n - i) as f64).collect(),
        )
        .unwrap()
    }

    #[test]
    fn recall_hand_case() {
        let r: MetricResult<f64> = recall_at_k(&norms(&["a", "b", "c", "d"]), &pred(&["a", "x", "c", "b"]), 3).unwrap();
        assert_eq!(r.value, 0.5);
    }

    #[test]
    fn pwr_hand_case_exact() {
        let r: MetricResult<Rational64> = pwr_at_k(&norms(&["a", "b", "c", "d"]), &pred(&["a", "x", "c"]), 3).unwrap();
        assert_eq!(r.value, Rational64::new(16, 25));
        let f: MetricResult<f64> = pwr_at_k(&norms(&["a", "b", "c", "d"]), &pred(&["a", "x", "c"]), 3).unwrap();
        assert!((f.value - 0.64).abs() < 1e-15);
    }

    #[test]
    fn full_and_zero_coverage() {
        let t = norms(&["a", "b"]);
        let p = pred(&["b", "a", "z"]);
        assert_eq!(recall_at_k::<f64, _>(&t, &p, 5).unwrap().value, 1.0);
        assert_eq!(pwr_at_k::<f64, _>(&t, &p, 2).unwrap().value, 1.0);
        let q = pred(&["x", "y"]);
        assert_eq!(recall_at_k::<f64, _>(&t, &q, 2).unwrap().value, 0.0);
        assert_eq!(pwr_at_k::<f64, _>(&t, &q, 2).unwrap().value, 0.0);
    }

    #[test]
    fn suite_k1_matches_formula() {
        let t = norms(&["a", "b", "c"]);
        let p = pred(&["a", "b"]);
        let s = metric_suite::<Rational64, _>(&t, &p, &[1]).unwrap();
        assert_eq!(s[0].0.value, Rational64::new(1, 3));
        assert_eq!(s[0].1.value, Rational64::new(1, 1) / harmonic::<Rational64>(3));
        assert!(metric_suite::<f64, _>(&t, &p, &[]).unwrap().is_empty());
        assert!(metric_suite::<f64, _>(&t, &p, &[5, 3]).is_err());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            recall_from_lists::<f64, &str, &str>(&[], &["a"], 1),
            Err(Error::EmptyTruth)
        ));
        assert!(matches!(
            pwr_from_lists::<f64, _, _>(&["a"], &["a"], 0),
            Err(Error::ZeroK)
        ));
        assert!(RankedPrediction::new(vec!["a".into(), "a".into()], vec![1.0, 0.5]).is_err());
        assert!(RankedPrediction::new(vec!["a".into(), "b".into()], vec![0.1, 0.5]).is_err());
    }
}
