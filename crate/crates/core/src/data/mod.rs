//! Word-association response data: cleaning, cue alignment, norms and splits.

mod align;
mod chapter;
mod clean;
pub mod io;
mod norms;
mod split;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use align::{align_cues, parse_alignment, CueAlignment};
pub use chapter::{Chapter, ChapterGroups};
pub use clean::{clean_responses, CleanReport, CleaningRules, DropReason, RawResponse, RejectReason, Rejection};
pub use norms::{aggregate_norms, truncate_norms, AssociationNorms, NormsRecord, NormsTable};
pub use split::{split_dataset, DatasetSplit};

/// Short ASCII identifier of a cultural group, e.g. `USA` or `CN`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CultureId(String);

impl CultureId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        let ok = !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
        if ok {
            Ok(CultureId(id))
        } else {
            Err(Error::InvalidCulture(id))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CultureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for CultureId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        CultureId::new(s)
    }
}

impl From<CultureId> for String {
    fn from(c: CultureId) -> String {
        c.0
    }
}

impl FromStr for CultureId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CultureId::new(s)
    }
}

/// Response language. Latin-script languages are case-folded and must be
/// single words; Chinese responses are length-limited instead.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    Zh,
}

impl Language {
    pub fn tag(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::Zh => "zh",
        }
    }

    pub fn is_latin(self) -> bool {
        matches!(self, Language::En)
    }

    /// Trims, and lowercases Latin-script text.
    pub fn normalize(self, s: &str) -> String {
        let t = s.trim();
        if self.is_latin() {
            t.to_lowercase()
        } else {
            t.to_string()
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Language {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "en" => Ok(Language::En),
            "zh" => Ok(Language::Zh),
            other => Err(Error::Invalid(format!("unsupported language tag {other:?}"))),
        }
    }
}

/// A registered culture and the language its participants answered in.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CultureSpec {
    pub id: CultureId,
    pub lang: Language,
}

/// Fixed, ordered set of cultures. The order defines one-hot indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CultureRegistry {
    cultures: Vec<CultureSpec>,
}

impl CultureRegistry {
    pub fn new(cultures: Vec<CultureSpec>) -> Result<Self> {
        if cultures.is_empty() {
            return Err(Error::Config("culture registry is empty".into()));
        }
        for (i, c) in cultures.iter().enumerate() {
            if cultures[..i].iter().any(|o| o.id == c.id) {
                return Err(Error::DuplicateCulture(c.id.to_string()));
            }
        }
        Ok(CultureRegistry { cultures })
    }

    pub fn specs(&self) -> &[CultureSpec] {
        &self.cultures
    }

    pub fn ids(&self) -> Vec<CultureId> {
        self.cultures.iter().map(|c| c.id.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.cultures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cultures.is_empty()
    }

    pub fn index_of(&self, id: &CultureId) -> Option<usize> {
        self.cultures.iter().position(|c| &c.id == id)
    }

    pub fn lang_of(&self, id: &CultureId) -> Option<Language> {
        self.cultures.iter().find(|c| &c.id == id).map(|c| c.lang)
    }

    /// Distinct languages in registry order.
    pub fn languages(&self) -> Vec<Language> {
        let mut out = Vec::new();
        for c in &self.cultures {
            if !out.contains(&c.lang) {
                out.push(c.lang);
            }
        }
        out
    }
}

/// One participant's cleaned associations to one cue.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub participant: String,
    pub culture: CultureId,
    pub cue: String,
    pub responses: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn culture_id_validation() {
        assert!(CultureId::new("USA").is_ok());
        assert!(CultureId::new("").is_err());
        assert!(CultureId::new("U S").is_err());
        assert!(CultureId::new("中国").is_err());
    }

    #[test]
    fn registry_rejects_duplicates() {
        let spec = |id: &str| CultureSpec {
            id: CultureId::new(id).unwrap(),
            lang: Language::En,
        };
        assert!(CultureRegistry::new(vec![spec("A"), spec("A")]).is_err());
        let r = CultureRegistry::new(vec![spec("A"), spec("B")]).unwrap();
        assert_eq!(r.index_of(&CultureId::new("B").unwrap()), Some(1));
    }

    #[test]
    fn normalization_by_language() {
        assert_eq!(Language::En.normalize("  Hot "), "hot");
        assert_eq!(Language::Zh.normalize(" 火 "), "火");
    }
}
