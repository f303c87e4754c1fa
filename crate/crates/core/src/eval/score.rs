//! Window-based candidate scoring and ranking.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::lm::{DistributionTrace, Tokenizer};
use crate::metrics::RankedPrediction;
use crate::{Error, Result, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CandidateScore<T> {
    pub word: String,
    pub tokens: Vec<u32>,
    pub probability: T,
}

/// Best mean probability of the candidate's sub-tokens over every offset of
/// the window: `max_m (1/t) Σ_j row[m+j][tokens[j]]`.
pub fn score_tokens<T: Scalar>(trace: &DistributionTrace<T>, tokens: &[u32]) -> Result<T> {
    let t = tokens.len();
    if t == 0 {
        return Err(Error::EmptyCandidate);
    }
    if t > trace.k {
        return Err(Error::CandidateExceedsWindow {
            tokens: t,
            window: trace.k,
        });
    }
    if let Some(&bad) = tokens.iter().find(|&&id| id as usize >= trace.vocab()) {
        return Err(Error::TokenOutOfRange {
            id: bad,
            vocab: trace.vocab(),
        });
    }
    let tt = T::of(t as f64);
    let mut best = T::neg_infinity();
    for m in 0..=trace.k - t {
        let mut sum = T::zero();
        for (j, &a) in tokens.iter().enumerate() {
            sum += trace.prob(m + j, a);
        }
        best = best.max(sum / tt);
    }
    Ok(best)
}

pub fn score_candidate<T: Scalar>(
    trace: &DistributionTrace<T>,
    word: &str,
    tokens: &[u32],
) -> Result<CandidateScore<T>> {
    Ok(CandidateScore {
        word: word.to_string(),
        tokens: tokens.to_vec(),
        probability: score_tokens(trace, tokens)?,
    })
}

/// Deduplicated, sorted candidate words for one cue.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidatePool {
    pub cue: String,
    candidates: Vec<String>,
}

impl CandidatePool {
    pub fn new<I, S>(cue: &str, words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = words.into_iter().map(Into::into).collect();
        if set.is_empty() {
            return Err(Error::EmptyPool(cue.to_string()));
        }
        Ok(CandidatePool {
            cue: cue.to_string(),
            candidates: set.into_iter().collect(),
        })
    }

    pub fn candidates(&self) -> &[String] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ranking<T> {
    pub prediction: RankedPrediction<T>,
    /// Scores in ranked order.
    pub scores: Vec<CandidateScore<T>>,
    /// Candidates longer than the window.
    pub dropped: Vec<String>,
}

/// Sorts candidates by score descending, then by word ascending.
pub fn sort_scores<T: Scalar>(scores: &mut [CandidateScore<T>]) {
    scores.sort_by(|a, b| {
        b.probability
            .partial_cmp(&a.probability)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.word.cmp(&b.word))
    });
}

pub fn rank_candidates<T: Scalar>(
    pool: &CandidatePool,
    trace: &DistributionTrace<T>,
    tokenizer: &Tokenizer,
) -> Result<Ranking<T>> {
    let mut scores = Vec::with_capacity(pool.len());
    let mut dropped = Vec::new();
    for word in pool.candidates() {
        let tokens = tokenizer.tokenize(word);
        if tokens.len() > trace.k {
            log::warn!(
                "dropping candidate {word:?} for cue {:?}: {} sub-tokens exceed window {}",
                pool.cue,
                tokens.len(),
                trace.k
            );
            dropped.push(word.clone());
            continue;
        }
        scores.push(score_candidate(trace, word, &tokens)?);
    }
    if scores.is_empty() {
        return Err(Error::EmptyPool(pool.cue.clone()));
    }
    sort_scores(&mut scores);
    let prediction = RankedPrediction::new(
        scores.iter().map(|s| s.word.clone()).collect(),
        scores.iter().map(|s| s.probability).collect(),
    )?;
    Ok(Ranking {
        prediction,
        scores,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Rows over a 3-token vocabulary {x=0, y=1, z=2}.
    fn hand_trace() -> DistributionTrace<f64> {
        DistributionTrace::from_rows(
            vec![1],
            vec![vec![0.5, 0.1, 0.4], vec![0.2, 0.4, 0.4], vec![0.1, 0.6, 0.3]],
        )
        .unwrap()
    }

    #[test]
    fn hand_case() {
        let p = score_tokens(&hand_trace(), &[0, 1]).unwrap();
        assert!((p - 0.45).abs() < 1e-15);
    }

    #[test]
    fn full_window_single_offset() {
        let p = score_tokens(&hand_trace(), &[0, 1, 2]).unwrap();
        assert_eq!(p, (0.5 + 0.4 + 0.3) / 3.0);
    }

    #[test]
    fn certain_token_scores_one() {
        let t = DistributionTrace::from_rows(vec![1], vec![vec![0.0, 1.0], vec![0.5, 0.5]]).unwrap();
        assert_eq!(score_tokens(&t, &[1]).unwrap(), 1.0);
    }

    #[test]
    fn too_long_rejected() {
        assert!(matches!(
            score_tokens(&hand_trace(), &[0, 0, 0, 0]),
            Err(Error::CandidateExceedsWindow { tokens: 4, window: 3 })
        ));
        assert!(matches!(score_tokens(&hand_trace(), &[]), Err(Error::EmptyCandidate)));
    }

    #[test]
    fn ranking_order_and_ties() {
        let mut s = vec![
            CandidateScore {
                word: "a".into(),
                tokens: vec![],
                probability: 0.4,
            },
            CandidateScore {
                word: "b".into(),
                tokens: vec![],
                probability: 0.7,
            },
        ];
        sort_scores(&mut s);
        assert_eq!(s[0].word, "b");
        let mut s = vec![
            CandidateScore {
                word: "b".into(),
                tokens: vec![],
                probability: 0.5,
            },
            CandidateScore {
                word: "a".into(),
                tokens: vec![],
                probability: 0.5,
            },
        ];
        sort_scores(&mut s);
        assert_eq!((s[0].word.as_str(), s[1].word.as_str()), ("a", "b"));
    }

    #[test]
    fn empty_pool_rejected() {
        assert!(CandidatePool::new("c", Vec::<String>::new()).is_err());
        let p = CandidatePool::new("c", ["b", "a", "b"]).unwrap();
        assert_eq!(p.candidates(), ["a", "b"]);
    }
}
