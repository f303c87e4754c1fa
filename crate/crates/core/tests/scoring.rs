mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use watsteer::eval::{rank_candidates, score_tokens, CandidatePool};
use watsteer::lm::{DistributionTrace, Tokenizer};
use watsteer::Error;

use common::{fixture, oracle_window_score, random_rows};

#[test]
fn exhaustive_offsets_on_random_traces() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let k = rng.gen_range(1..=8);
        let v = rng.gen_range(2..=12);
        let t = rng.gen_range(1..=k);
        let rows = random_rows(&mut rng, k, v);
        let tokens: Vec<u32> = (0..t).map(|_| rng.gen_range(0..v as u32)).collect();
        let trace = DistributionTrace::from_rows(vec![], rows.clone()).unwrap();
        assert_eq!(
            score_tokens(&trace, &tokens).unwrap(),
            oracle_window_score(&rows, &tokens)
        );
    }
}

#[test]
fn two_offset_hand_case() {
    // Token 0 is x, token 1 is y; the rest of each row is padding mass.
    let rows = vec![vec![0.5, 0.1, 0.4], vec![0.2, 0.4, 0.4], vec![0.1, 0.6, 0.3]];
    let trace = DistributionTrace::from_rows(vec![], rows).unwrap();
    let p: f64 = score_tokens(&trace, &[0, 1]).unwrap();
    assert!((p - 0.45).abs() < 1e-15);
}

#[test]
fn full_width_and_certain_token() {
    let rows = vec![vec![0.25, 0.75], vec![1.0, 0.0]];
    let trace = DistributionTrace::from_rows(vec![], rows).unwrap();
    assert_eq!(score_tokens(&trace, &[1, 0]).unwrap(), (0.75 + 1.0) / 2.0);
    assert_eq!(score_tokens(&trace, &[0]).unwrap(), 1.0);
    assert!(matches!(
        score_tokens(&trace, &[0, 0, 0]),
        Err(Error::CandidateExceedsWindow { .. })
    ));
}

#[derive(Deserialize)]
struct Golden {
    pieces: Vec<String>,
    rows: Vec<Vec<f64>>,
    pool: Vec<String>,
    expected: Vec<Expected>,
}

#[derive(Deserialize)]
struct Expected {
    word: String,
    tokens: Vec<u32>,
    probability: f64,
}

#[test]
fn golden_ranking_of_ten() {
    let g: Golden = serde_json::from_str(&std::fs::read_to_string(fixture("golden/ranking.json")).unwrap()).unwrap();
    let tok = Tokenizer::from_pieces(g.pieces).unwrap();
    assert_eq!(tok.vocab_size(), g.rows[0].len());
    let trace = DistributionTrace::from_rows(vec![], g.rows).unwrap();
    let pool = CandidatePool::new("sky", g.pool).unwrap();
    assert_eq!(pool.len(), 10);
    let ranking = rank_candidates(&pool, &trace, &tok).unwrap();
    assert!(ranking.dropped.is_empty());
    assert_eq!(ranking.scores.len(), g.expected.len());
    for (got, want) in ranking.scores.iter().zip(&g.expected) {
        assert_eq!(got.word, want.word);
        assert_eq!(got.tokens, want.tokens);
        assert_eq!(got.probability, want.probability);
    }
    let words: Vec<&str> = g.expected.iter().map(|e| e.word.as_str()).collect();
    assert_eq!(ranking.prediction.words(), words.as_slice());
}

#[test]
fn too_long_candidates_are_dropped() {
    let tok = Tokenizer::from_pieces(vec!["a".into()]).unwrap();
    let rows = vec![vec![1.0 / 260.0; 260]; 2];
    let trace = DistributionTrace::from_rows(vec![], rows).unwrap();
    let pool = CandidatePool::new("c", ["a", "aaa"]).unwrap();
    let r = rank_candidates(&pool, &trace, &tok).unwrap();
    assert_eq!(r.dropped, vec!["aaa"]);
    let only_long = CandidatePool::new("c", ["aaa"]).unwrap();
    assert!(matches!(
        rank_candidates(&only_long, &trace, &tok),
        Err(Error::EmptyPool(_))
    ));
}

proptest! {
    #[test]
    fn ranking_is_sorted_permutation(seed in any::<u64>(), n in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pieces: Vec<String> = ["ab", "ba", "a", "b", "bb"].iter().map(|s| s.to_string()).collect();
        let tok = Tokenizer::from_pieces(pieces).unwrap();
        let rows = random_rows(&mut rng, 4, tok.vocab_size());
        let trace = DistributionTrace::from_rows(vec![], rows).unwrap();
        let words: Vec<String> = (0..n)
            .map(|_| (0..rng.gen_range(1..4)).map(|_| if rng.gen() { 'a' } else { 'b' }).collect())
            .collect();
        let pool = CandidatePool::new("c", words.clone()).unwrap();
        let r = rank_candidates(&pool, &trace, &tok).unwrap();
        let mut ranked: Vec<String> = r.prediction.words().to_vec();
        ranked.sort();
        prop_assert_eq!(ranked, pool.candidates().to_vec());
        for w in r.scores.windows(2) {
            prop_assert!(w[0].probability > w[1].probability
                || (w[0].probability == w[1].probability && w[0].word < w[1].word));
        }
        // A word's score does not depend on the rest of the pool.
        for s in &r.scores {
            prop_assert!((0.0..=1.0).contains(&s.probability));
            let alone = CandidatePool::new("c", [s.word.clone()]).unwrap();
            let r1 = rank_candidates(&alone, &trace, &tok).unwrap();
            prop_assert_eq!(r1.scores[0].probability, s.probability);
        }
    }
}
