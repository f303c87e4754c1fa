use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Chapter, Language};
use crate::{Error, Result};

/// A concept with its surface form in each language and its IDS chapter.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CueAlignment {
    pub concept: String,
    pub forms: BTreeMap<Language, String>,
    pub category: Chapter,
}

impl CueAlignment {
    pub fn form(&self, lang: Language) -> Option<&str> {
        self.forms.get(&lang).map(String::as_str)
    }
}

/// First term of a possibly multi-term IDS cell such as `flame, blaze`.
fn first_term(s: &str) -> &str {
    s.split([',', ';', '/', '|'])
        .map(str::trim)
        .find(|t| !t.is_empty())
        .unwrap_or("")
}

/// Parses the alignment TSV (`concept_key, chapter, lang, surface_form` with a
/// header row). Rows sharing a concept key are merged; for one-to-many cells
/// and repeated `(concept, lang)` rows only the first form is kept.
pub fn parse_alignment(text: &str, file: &str) -> Result<Vec<CueAlignment>> {
    let perr = |line: usize, msg: String| Error::Parse {
        file: file.to_string(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.split('\t').next().map(str::trim) == Some("concept_key") => {}
        _ => return Err(perr(1, "missing header row starting with concept_key".into())),
    }
    let mut order: Vec<String> = Vec::new();
    let mut by_key: BTreeMap<String, CueAlignment> = BTreeMap::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 4 {
            return Err(perr(lineno, format!("expected 4 columns, found {}", cols.len())));
        }
        let key = cols[0].trim();
        if key.is_empty() {
            return Err(perr(lineno, "empty concept key".into()));
        }
        let chapter: Chapter = cols[1].parse().map_err(|e: Error| perr(lineno, e.to_string()))?;
        let lang: Language = cols[2].parse().map_err(|e: Error| perr(lineno, e.to_string()))?;
        let form = lang.normalize(first_term(cols[3]));
        let entry = by_key.entry(key.to_string()).or_insert_with(|| {
            order.push(key.to_string());
            CueAlignment {
                concept: key.to_string(),
                forms: BTreeMap::new(),
                category: chapter,
            }
        });
        if entry.category != chapter {
            return Err(perr(
                lineno,
                format!("concept {key:?} listed under {} and {chapter}", entry.category),
            ));
        }
        if !form.is_empty() {
            entry.forms.entry(lang).or_insert(form);
        }
    }
    Ok(order
        .into_iter()
        .map(|k| by_key.remove(&k).expect("key recorded"))
        .collect())
}

/// Keeps concepts that have a surface form in every requested language,
/// preserving table order.
pub fn align_cues(table: &[CueAlignment], languages: &[Language]) -> Result<Vec<CueAlignment>> {
    let mut seen = BTreeSet::new();
    for a in table {
        if !seen.insert(a.concept.as_str()) {
            return Err(Error::DuplicateConcept(a.concept.clone()));
        }
    }
    Ok(table
        .iter()
        .filter(|a| languages.iter().all(|l| a.forms.contains_key(l)))
        .cloned()
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE: &str = "concept_key\tchapter\tlang\tsurface_form\n\
        flame\t1\ten\tFlame, blaze\n\
        flame\t1\tzh\t火焰\n\
        plow\tAgriculture\ten\tplow\n";

    #[test]
    fn intersection_semantics() {
        let t = parse_alignment(TABLE, "t").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].form(Language::En), Some("flame"));
        let out = align_cues(&t, &[Language::En, Language::Zh]).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].concept, "flame");
        assert_eq!(out[0].category, Chapter::World);
    }

    #[test]
    fn empty_table() {
        assert!(align_cues(&[], &[Language::En]).unwrap().is_empty());
    }

    #[test]
    fn duplicate_keys_named() {
        let t = parse_alignment(TABLE, "t").unwrap();
        let dup = vec![t[0].clone(), t[0].clone()];
        match align_cues(&dup, &[Language::En]) {
            Err(Error::DuplicateConcept(k)) => assert_eq!(k, "flame"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn conflicting_chapter_is_an_error() {
        let text = "concept_key\tchapter\tlang\tsurface_form\nx\t1\ten\tx\nx\t2\tzh\t叉\n";
        assert!(parse_alignment(text, "t").is_err());
    }

    #[test]
    fn repeated_rows_keep_first() {
        let text = "concept_key\tchapter\tlang\tsurface_form\nx\t1\ten\tfirst\nx\t1\ten\tsecond\n";
        let t = parse_alignment(text, "t").unwrap();
        assert_eq!(t[0].form(Language::En), Some("first"));
    }
}
