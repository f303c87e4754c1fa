use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Chapter;
use crate::{Error, Result};

/// Per-category train/test partition of cue identifiers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub seed: u64,
    pub train: Vec<String>,
    pub test: Vec<String>,
    /// `(train, test)` counts per category.
    pub categories: BTreeMap<Chapter, (usize, usize)>,
    /// Chapters without any cue; excluded from the split.
    #[serde(default)]
    pub empty_categories: Vec<Chapter>,
}

impl DatasetSplit {
    pub fn is_test(&self, cue: &str) -> bool {
        self.test.binary_search_by(|c| c.as_str().cmp(cue)).is_ok()
    }

    pub fn is_train(&self, cue: &str) -> bool {
        self.train.binary_search_by(|c| c.as_str().cmp(cue)).is_ok()
    }
}

/// Train size for a category of `n` cues: `floor(0.7 n)`, computed in integers.
pub fn train_size(n: usize) -> usize {
    n * 7 / 10
}

/// Shuffles each category's cues with a seeded ChaCha8 stream (categories in
/// chapter order, cues pre-sorted) and assigns the first `floor(0.7 n)` to
/// train. The result does not depend on input order.
pub fn split_dataset(cues: &[(String, Chapter)], seed: u64) -> Result<DatasetSplit> {
    let mut by_cat: BTreeMap<Chapter, Vec<&str>> = BTreeMap::new();
    for (cue, cat) in cues {
        by_cat.entry(*cat).or_default().push(cue.as_str());
    }
    let mut all: Vec<&str> = cues.iter().map(|(c, _)| c.as_str()).collect();
    all.sort_unstable();
    if let Some(w) = all.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateConcept(w[0].to_string()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut categories = BTreeMap::new();
    for (cat, mut members) in by_cat {
        members.sort_unstable();
        members.shuffle(&mut rng);
        let k = train_size(members.len());
        train.extend(members[..k].iter().map(|s| s.to_string()));
        test.extend(members[k..].iter().map(|s| s.to_string()));
        categories.insert(cat, (k, members.len() - k));
    }
    let empty_categories: Vec<Chapter> = Chapter::ALL
        .iter()
        .copied()
        .filter(|c| !categories.contains_key(c))
        .collect();
    if !empty_categories.is_empty() && !cues.is_empty() {
        log::warn!(
            "{} chapter(s) have no cues and are excluded from the split",
            empty_categories.len()
        );
    }
    train.sort();
    test.sort();
    Ok(DatasetSplit {
        seed,
        train,
        test,
        categories,
        empty_categories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cues(n: usize, cat: Chapter) -> Vec<(String, Chapter)> {
        (0..n).map(|i| (format!("{cat}-{i}"), cat)).collect()
    }

    #[test]
    fn ten_cues_seven_three() {
        let s = split_dataset(&cues(10, Chapter::Animals), 7).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (7, 3));
        assert_eq!(s.categories[&Chapter::Animals], (7, 3));
    }

    #[test]
    fn single_cue_goes_to_test() {
        let s = split_dataset(&cues(1, Chapter::Law), 7).unwrap();
        assert!(s.train.is_empty());
        assert_eq!(s.test.len(), 1);
    }

    #[test]
    fn deterministic_and_order_independent() {
        let mut c = cues(13, Chapter::Time);
        c.extend(cues(6, Chapter::Law));
        let a = split_dataset(&c, 42).unwrap();
        c.reverse();
        let b = split_dataset(&c, 42).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.empty_categories.len(), 20);
    }

    #[test]
    fn floor_rule_uses_integers() {
        for n in 0..200 {
            assert_eq!(train_size(n), (n as f64 * 0.7 + 1e-9).floor() as usize);
        }
    }
}
