//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::Rng;
use watsteer::config::RunConfig;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

/// Loads a fixture config with work and output directories moved under `dir`.
pub fn fixture_config(rel: &str, dir: &Path) -> RunConfig {
    let mut cfg = RunConfig::load(&fixture(rel)).unwrap();
    cfg.paths.work_dir = dir.join("work");
    cfg.paths.output_dir = dir.join("out");
    cfg
}

fn ratio(n: usize, d: usize) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Recall by scanning the prediction prefix and counting members of truth.
pub fn oracle_recall(truth: &[String], pred: &[String], k: usize) -> BigRational {
    let mut hits = 0;
    for (pos, p) in pred.iter().enumerate() {
        if pos >= k {
            break;
        }
        if truth.iter().any(|t| t == p) {
            hits += 1;
        }
    }
    ratio(hits, truth.len())
}

/// Position-weighted recall: each predicted word inside the prefix adds the
/// reciprocal of its truth rank.
pub fn oracle_pwr(truth: &[String], pred: &[String], k: usize) -> BigRational {
    let mut num = ratio(0, 1);
    for p in pred.iter().take(k) {
        if let Some(i) = truth.iter().position(|t| t == p) {
            num += ratio(1, i + 1);
        }
    }
    let mut den = ratio(0, 1);
    for i in 1..=truth.len() {
        den += ratio(1, i);
    }
    num / den
}

pub fn to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap()
}

/// Random truth (1..=12 words) and prediction (0..=20 words) over a small
/// shared alphabet, plus K in 1..=20.
pub fn metric_instance<R: Rng>(rng: &mut R) -> (Vec<String>, Vec<String>, usize) {
    let alphabet: Vec<String> = (0..24).map(|i| format!("w{i:02}")).collect();
    let n = rng.gen_range(1..=12);
    let truth: Vec<String> = alphabet.choose_multiple(rng, n).cloned().collect();
    let m = rng.gen_range(0..=20);
    let pred: Vec<String> = alphabet.choose_multiple(rng, m).cloned().collect();
    let k = rng.gen_range(1..=20);
    (truth, pred, k)
}

/// Window score by listing the mean for every admissible offset and
/// scanning for the largest.
pub fn oracle_window_score(rows: &[Vec<f64>], tokens: &[u32]) -> f64 {
    let t = tokens.len();
    let k = rows.len();
    let mut per_offset = Vec::new();
    let mut m = 0;
    while m + t <= k {
        let mut s = 0.0;
        for j in 0..t {
            s += rows[m + j][tokens[j] as usize];
        }
        per_offset.push(s / t as f64);
        m += 1;
    }
    let mut best = per_offset[0];
    for &v in &per_offset[1..] {
        if v > best {
            best = v;
        }
    }
    best
}

/// `k` normalized random rows over `v` tokens.
pub fn random_rows<R: Rng>(rng: &mut R, k: usize, v: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|_| {
            let raw: Vec<f64> = (0..v).map(|_| rng.gen::<f64>()).collect();
            let z: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / z).collect()
        })
        .collect()
}

/// Files of one pipeline run that must be reproducible byte for byte.
pub fn artifact_paths(cfg: &RunConfig) -> Vec<PathBuf> {
    use watsteer::pipeline::*;
    vec![
        work_path(cfg, NORMS_FILE),
        work_path(cfg, SPLIT_FILE),
        work_path(cfg, BACKBONE_FILE),
        work_path(cfg, "backbone.json"),
        work_path(cfg, STEER_FILE),
        cfg.paths.output_dir.join("eval-base-none").join(REPORT_FILE),
        cfg.paths.output_dir.join("eval-base-matched").join(REPORT_FILE),
        cfg.paths.output_dir.join("compare").join("cross_matrix.json"),
    ]
}

/// The synthetic fixture shrunk until a full run takes a few seconds.
pub fn quick_config(dir: &Path) -> RunConfig {
    let mut cfg = fixture_config("synthetic/config.toml", dir);
    cfg.model.d = 8;
    cfg.model.vocab_size = 320;
    cfg.pretrain.epochs = 1;
    cfg.steer.epochs = 1;
    cfg
}
