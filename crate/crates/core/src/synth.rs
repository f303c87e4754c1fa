//! Synthetic word-association data: a shared cue set answered by several
//! cultures whose preferred associations partially differ.
//!
//! Every cue gets one or more shared associations plus, per culture, words drawn
//! from that culture's own lexicon. Culture-specific words take the top
//! ranks of each culture's preference order; participants draw three
//! distinct words with Zipf weights over that order. A small fraction of
//! responses is replaced with placeholder or multi-word noise.

use std::collections::BTreeSet;
use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Chapter, CultureId, ResponseRecord};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub cultures: Vec<CultureId>,
    pub chapters: Vec<Chapter>,
    pub cues_per_chapter: usize,
    /// Associations every culture shares for a cue.
    pub shared_per_cue: usize,
    /// Culture-specific associations per cue.
    pub specific_per_cue: usize,
    /// Words in each culture's private lexicon.
    pub lexicon_size: usize,
    /// Words in the lexicon shared by all cultures.
    pub shared_lexicon_size: usize,
    pub participants: usize,
    /// Zipf exponent of the per-culture preference order.
    pub zipf: f64,
    /// Probability that a response slot is replaced by noise.
    pub noise: f64,
}

impl SynthConfig {
    pub fn two_cultures(a: &str, b: &str) -> Result<Self> {
        Ok(SynthConfig {
            cultures: vec![CultureId::new(a)?, CultureId::new(b)?],
            chapters: vec![
                Chapter::World,
                Chapter::Animals,
                Chapter::Food,
                Chapter::Kinship,
                Chapter::Religion,
            ],
            cues_per_chapter: 10,
            shared_per_cue: 1,
            specific_per_cue: 15,
            lexicon_size: 40,
            shared_lexicon_size: 60,
            participants: 24,
            zipf: 0.7,
            noise: 0.04,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthCue {
    pub concept: String,
    pub cue: String,
    pub chapter: Chapter,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthData {
    pub cues: Vec<SynthCue>,
    pub responses: Vec<ResponseRecord>,
    /// Private lexicon of each culture, in config order.
    pub lexicons: Vec<Vec<String>>,
    pub shared_lexicon: Vec<String>,
}

const ONSETS: [&str; 14] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    let syllables = rng.gen_range(2..=3);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push_str(ONSETS.choose(rng).unwrap());
        w.push_str(VOWELS.choose(rng).unwrap());
    }
    w
}

fn fresh_words(rng: &mut ChaCha8Rng, n: usize, used: &mut BTreeSet<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let w = pseudo_word(rng);
        if used.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

/// Draws `n` distinct indices with probability proportional to `weights`.
fn weighted_distinct(rng: &mut ChaCha8Rng, weights: &[f64], n: usize) -> Vec<usize> {
    let mut left: Vec<usize> = (0..weights.len()).collect();
    let mut out = Vec::with_capacity(n);
    while out.len() < n && !left.is_empty() {
        let total: f64 = left.iter().map(|&i| weights[i]).sum();
        let mut x = rng.gen_range(0.0..total);
        let mut pick = left.len() - 1;
        for (j, &i) in left.iter().enumerate() {
            if x < weights[i] {
                pick = j;
                break;
            }
            x -= weights[i];
        }
        out.push(left.remove(pick));
    }
    out
}

fn noise_response(rng: &mut ChaCha8Rng, word: &str) -> String {
    match rng.gen_range(0..4) {
        0 => "#Missing".into(),
        1 => "?".into(),
        2 => format!("{word} {}", pseudo_word(rng)),
        _ => word.to_uppercase(),
    }
}

pub fn generate(cfg: &SynthConfig, seed: u64) -> Result<SynthData> {
    if cfg.cultures.len() < 2 {
        return Err(Error::Config("synthetic data needs at least two cultures".into()));
    }
    if cfg.specific_per_cue > cfg.lexicon_size || cfg.shared_per_cue > cfg.shared_lexicon_size {
        return Err(Error::Config("per-cue word counts exceed lexicon sizes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = BTreeSet::new();
    let n_cues = cfg.chapters.len() * cfg.cues_per_chapter;
    let cue_words = fresh_words(&mut rng, n_cues, &mut used);
    let shared_lexicon = fresh_words(&mut rng, cfg.shared_lexicon_size, &mut used);
    let lexicons: Vec<Vec<String>> = cfg
        .cultures
        .iter()
        .map(|_| fresh_words(&mut rng, cfg.lexicon_size, &mut used))
        .collect();

    let mut cues = Vec::with_capacity(n_cues);
    for (ci, chapter) in cfg.chapters.iter().enumerate() {
        for j in 0..cfg.cues_per_chapter {
            let idx = ci * cfg.cues_per_chapter + j;
            cues.push(SynthCue {
                concept: format!("c{:03}", idx + 1),
                cue: cue_words[idx].clone(),
                chapter: *chapter,
            });
        }
    }

    let mut responses = Vec::new();
    for (cue_i, cue) in cues.iter().enumerate() {
        let shared: Vec<String> = shared_lexicon
            .choose_multiple(&mut rng, cfg.shared_per_cue)
            .cloned()
            .collect();
        for (k, culture) in cfg.cultures.iter().enumerate() {
            let specific: Vec<String> = lexicons[k]
                .choose_multiple(&mut rng, cfg.specific_per_cue)
                .cloned()
                .collect();
            // Preference order: culture-specific words first, shared words
            // spread through the middle of the list.
            let mut order = specific.clone();
            for (s, w) in shared.iter().enumerate() {
                let at = (2 + 3 * s).min(order.len());
                order.insert(at, w.clone());
            }
            let weights: Vec<f64> = (0..order.len())
                .map(|r| 1.0 / ((r + 1) as f64).powf(cfg.zipf))
                .collect();
            for p in 0..cfg.participants {
                let picks = weighted_distinct(&mut rng, &weights, 3);
                let words = picks
                    .into_iter()
                    .map(|i| {
                        if rng.gen_bool(cfg.noise) {
                            noise_response(&mut rng, &order[i])
                        } else {
                            order[i].clone()
                        }
                    })
                    .collect();
                responses.push(ResponseRecord {
                    participant: format!("{culture}-{:03}-{:02}", cue_i + 1, p + 1),
                    culture: culture.clone(),
                    cue: cue.cue.clone(),
                    responses: words,
                });
            }
        }
    }
    Ok(SynthData {
        cues,
        responses,
        lexicons,
        shared_lexicon,
    })
}

/// Alignment TSV with one English row per concept.
pub fn format_alignment(cues: &[SynthCue]) -> String {
    let mut out = String::from("concept_key\tchapter\tlang\tsurface_form\n");
    for c in cues {
        writeln!(out, "{}\t{}\ten\t{}", c.concept, c.chapter.short(), c.cue).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape() {
        let cfg = SynthConfig::two_cultures("USA", "UK").unwrap();
        let d = generate(&cfg, 1).unwrap();
        assert_eq!(d.cues.len(), 50);
        assert_eq!(d.responses.len(), 50 * 2 * cfg.participants);
        assert!(d.responses.iter().all(|r| r.responses.len() == 3));
        let a: BTreeSet<_> = d.lexicons[0].iter().collect();
        assert!(d.lexicons[1].iter().all(|w| !a.contains(w)));
    }

    #[test]
    fn deterministic() {
        let cfg = SynthConfig::two_cultures("A", "B").unwrap();
        assert_eq!(generate(&cfg, 5).unwrap(), generate(&cfg, 5).unwrap());
        assert_ne!(generate(&cfg, 5).unwrap(), generate(&cfg, 6).unwrap());
    }
}
