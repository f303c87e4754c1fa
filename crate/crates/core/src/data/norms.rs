use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{Chapter, CultureId, ResponseRecord};
use crate::{Error, Result};

/// Frequency-ranked associations of one culture to one cue.
///
/// Entries are sorted by frequency descending, ties by word ascending
/// (codepoint order); words are unique.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociationNorms {
    pub culture: CultureId,
    pub cue: String,
    entries: Vec<(String, u32)>,
    pub category: Option<Chapter>,
}

impl AssociationNorms {
    /// Builds norms from entries that must already satisfy the ordering and
    /// uniqueness invariants.
    pub fn from_entries(
        culture: CultureId,
        cue: impl Into<String>,
        entries: Vec<(String, u32)>,
        category: Option<Chapter>,
    ) -> Result<Self> {
        for (i, w) in entries.windows(2).enumerate() {
            let ordered = w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0);
            if !ordered {
                return Err(Error::Invalid(format!(
                    "norm entries out of order at position {}",
                    i + 1
                )));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for (w, f) in &entries {
            if *f == 0 {
                return Err(Error::Invalid(format!("zero frequency for {w:?}")));
            }
            if !seen.insert(w.as_str()) {
                return Err(Error::Invalid(format!("duplicate norm word {w:?}")));
            }
        }
        Ok(AssociationNorms {
            culture,
            cue: cue.into(),
            entries,
            category,
        })
    }

    pub fn entries(&self) -> &[(String, u32)] {
        &self.entries
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(w, _)| w.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_frequency(&self) -> u64 {
        self.entries.iter().map(|&(_, f)| u64::from(f)).sum()
    }

    pub fn with_category(mut self, category: Chapter) -> Self {
        self.category = Some(category);
        self
    }

    fn truncated(&self, len: usize) -> Self {
        let mut out = self.clone();
        out.entries.truncate(len);
        out
    }
}

/// Counts every response word of `culture` for `cue` and ranks them.
pub fn aggregate_norms(records: &[ResponseRecord], culture: &CultureId, cue: &str) -> Result<AssociationNorms> {
    let mut counts: HashMap<&str, u32> = HashMap::new();
    let mut any = false;
    for r in records.iter().filter(|r| &r.culture == culture && r.cue == cue) {
        any = true;
        for w in &r.responses {
            *counts.entry(w.as_str()).or_insert(0) += 1;
        }
    }
    if !any || counts.is_empty() {
        return Err(Error::EmptyNorms {
            culture: culture.to_string(),
            cue: cue.to_string(),
        });
    }
    let mut entries: Vec<(String, u32)> = counts.into_iter().map(|(w, f)| (w.to_string(), f)).collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(AssociationNorms {
        culture: culture.clone(),
        cue: cue.to_string(),
        entries,
        category: None,
    })
}

/// Cuts every culture's list for one cue to the shortest list length.
pub fn truncate_norms(
    norms_by_culture: &BTreeMap<CultureId, AssociationNorms>,
    registry: &[CultureId],
    cue: &str,
) -> Result<BTreeMap<CultureId, AssociationNorms>> {
    let mut min_len = usize::MAX;
    for c in registry {
        let n = norms_by_culture.get(c).ok_or_else(|| Error::MissingCultureForCue {
            culture: c.to_string(),
            cue: cue.to_string(),
        })?;
        min_len = min_len.min(n.len());
    }
    Ok(registry
        .iter()
        .map(|c| (c.clone(), norms_by_culture[c].truncated(min_len)))
        .collect())
}

/// Serialized form of one `(culture, concept)` norm list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormsRecord {
    pub concept: String,
    pub culture: CultureId,
    pub cue: String,
    pub category: Chapter,
    pub entries: Vec<(String, u32)>,
}

/// Truncated norms for every retained concept and culture.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NormsTable {
    concepts: BTreeMap<String, (Chapter, BTreeMap<CultureId, AssociationNorms>)>,
}

impl NormsTable {
    pub fn insert(&mut self, concept: &str, category: Chapter, by_culture: BTreeMap<CultureId, AssociationNorms>) {
        self.concepts.insert(concept.to_string(), (category, by_culture));
    }

    pub fn get(&self, concept: &str, culture: &CultureId) -> Option<&AssociationNorms> {
        self.concepts.get(concept).and_then(|(_, m)| m.get(culture))
    }

    pub fn category(&self, concept: &str) -> Option<Chapter> {
        self.concepts.get(concept).map(|(c, _)| *c)
    }

    pub fn cultures_for(&self, concept: &str) -> Option<&BTreeMap<CultureId, AssociationNorms>> {
        self.concepts.get(concept).map(|(_, m)| m)
    }

    pub fn concepts(&self) -> impl Iterator<Item = (&str, Chapter)> {
        self.concepts.iter().map(|(k, (c, _))| (k.as_str(), *c))
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    /// Records in concept order, then culture order.
    pub fn to_records(&self) -> Vec<NormsRecord> {
        let mut out = Vec::new();
        for (concept, (category, by_culture)) in &self.concepts {
            for n in by_culture.values() {
                out.push(NormsRecord {
                    concept: concept.clone(),
                    culture: n.culture.clone(),
                    cue: n.cue.clone(),
                    category: *category,
                    entries: n.entries.clone(),
                });
            }
        }
        out
    }

    pub fn from_records(records: Vec<NormsRecord>) -> Result<Self> {
        let mut table = NormsTable::default();
        for r in records {
            let norms = AssociationNorms::from_entries(r.culture.clone(), r.cue, r.entries, Some(r.category))?;
            let slot = table
                .concepts
                .entry(r.concept.clone())
                .or_insert_with(|| (r.category, BTreeMap::new()));
            if slot.0 != r.category {
                return Err(Error::Invalid(format!("concept {:?} has two categories", r.concept)));
            }
            slot.1.insert(r.culture, norms);
        }
        Ok(table)
    }
}
