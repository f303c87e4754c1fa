use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CultureId, Language, ResponseRecord};

/// A response row as read from disk, before any validation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawResponse {
    /// 1-based source line, 0 when not read from a file.
    pub line: usize,
    pub participant: String,
    pub culture: String,
    pub cue: String,
    pub responses: Vec<String>,
}

impl From<&ResponseRecord> for RawResponse {
    fn from(r: &ResponseRecord) -> Self {
        RawResponse {
            line: 0,
            participant: r.participant.clone(),
            culture: r.culture.to_string(),
            cue: r.cue.clone(),
            responses: r.responses.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CleaningRules {
    /// Placeholder responses removed outright (compared case-insensitively).
    #[serde(default = "default_drop_list")]
    pub drop_list: Vec<String>,
    /// Maximum characters of a Chinese response.
    #[serde(default = "default_max_zh_chars")]
    pub max_zh_chars: usize,
}

fn default_drop_list() -> Vec<String> {
    vec!["#Missing".into(), "?".into()]
}

fn default_max_zh_chars() -> usize {
    4
}

impl Default for CleaningRules {
    fn default() -> Self {
        CleaningRules {
            drop_list: default_drop_list(),
            max_zh_chars: default_max_zh_chars(),
        }
    }
}

/// Why a single response word was removed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    Empty,
    Placeholder,
    Abnormal,
    MultiWord,
    TooLong,
}

/// Why a whole record was rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    MissingCulture,
    InvalidCulture,
    UnknownCulture,
    MissingCue,
    TooManyResponses,
    NoSurvivingResponses,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub line: usize,
    pub participant: String,
    pub reason: RejectReason,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CleanReport {
    pub records: Vec<ResponseRecord>,
    pub rejected: Vec<Rejection>,
    pub dropped: BTreeMap<DropReason, usize>,
}

impl CleanReport {
    pub fn rejected_counts(&self) -> BTreeMap<RejectReason, usize> {
        let mut m = BTreeMap::new();
        for r in &self.rejected {
            *m.entry(r.reason).or_insert(0) += 1;
        }
        m
    }
}

fn drop_reason(word: &str, language: Language, rules: &CleaningRules) -> Option<DropReason> {
    if word.is_empty() {
        return Some(DropReason::Empty);
    }
    if rules
        .drop_list
        .iter()
        .any(|d| d.trim().to_lowercase() == word.to_lowercase())
    {
        return Some(DropReason::Placeholder);
    }
    let abnormal = word.chars().any(|c| c.is_control() || c == '\u{FFFD}') || !word.chars().any(char::is_alphanumeric);
    if abnormal {
        return Some(DropReason::Abnormal);
    }
    match language {
        Language::En if word.chars().any(char::is_whitespace) => Some(DropReason::MultiWord),
        Language::Zh if word.chars().count() > rules.max_zh_chars => Some(DropReason::TooLong),
        _ => None,
    }
}

/// Normalizes and filters raw responses.
///
/// Malformed records are rejected individually; survivors keep input order.
/// Applying the function to its own output is a no-op.
pub fn clean_responses(raw: &[RawResponse], language: Language, rules: &CleaningRules) -> CleanReport {
    let mut report = CleanReport::default();
    for r in raw {
        let reject = |reason| Rejection {
            line: r.line,
            participant: r.participant.clone(),
            reason,
        };
        let culture = r.culture.trim();
        if culture.is_empty() {
            report.rejected.push(reject(RejectReason::MissingCulture));
            continue;
        }
        let Ok(culture) = CultureId::new(culture) else {
            report.rejected.push(reject(RejectReason::InvalidCulture));
            continue;
        };
        let cue = language.normalize(&r.cue);
        if cue.is_empty() {
            report.rejected.push(reject(RejectReason::MissingCue));
            continue;
        }
        if r.responses.len() > 3 {
            report.rejected.push(reject(RejectReason::TooManyResponses));
            continue;
        }
        let mut kept = Vec::with_capacity(3);
        for resp in &r.responses {
            // Trailing empty columns are absent answers, not drops.
            if resp.trim().is_empty() {
                continue;
            }
            let word = language.normalize(resp);
            match drop_reason(&word, language, rules) {
                Some(reason) => *report.dropped.entry(reason).or_insert(0) += 1,
                None => kept.push(word),
            }
        }
        if kept.is_empty() {
            report.rejected.push(reject(RejectReason::NoSurvivingResponses));
            continue;
        }
        report.records.push(ResponseRecord {
            participant: r.participant.clone(),
            culture,
            cue,
            responses: kept,
        });
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(cue: &str, resp: &[&str]) -> RawResponse {
        RawResponse {
            line: 2,
            participant: "p1".into(),
            culture: "USA".into(),
            cue: cue.into(),
            responses: resp.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn drops_placeholder_keeps_rest() {
        let out = clean_responses(
            &[raw("fire", &["warm", "#Missing", "hot"])],
            Language::En,
            &CleaningRules::default(),
        );
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].cue, "fire");
        assert_eq!(out.records[0].responses, vec!["warm", "hot"]);
        assert_eq!(out.dropped[&DropReason::Placeholder], 1);
    }

    #[test]
    fn multiword_only_record_is_dropped() {
        let out = clean_responses(&[raw("fire", &["very hot"])], Language::En, &CleaningRules::default());
        assert!(out.records.is_empty());
        assert_eq!(out.rejected[0].reason, RejectReason::NoSurvivingResponses);
        assert_eq!(out.dropped[&DropReason::MultiWord], 1);
    }

    #[test]
    fn clean_record_unchanged() {
        let out = clean_responses(&[raw("fire", &["hot"])], Language::En, &CleaningRules::default());
        assert_eq!(out.records[0].responses, vec!["hot"]);
        assert!(out.dropped.is_empty());
    }

    #[test]
    fn chinese_length_rule() {
        let out = clean_responses(
            &[raw("火", &["热", "熊熊燃烧的火", "温暖"])],
            Language::Zh,
            &CleaningRules::default(),
        );
        assert_eq!(out.records[0].responses, vec!["热", "温暖"]);
        assert_eq!(out.dropped[&DropReason::TooLong], 1);
    }

    #[test]
    fn missing_culture_or_cue_rejected_per_record() {
        let mut a = raw("fire", &["hot"]);
        a.culture = String::new();
        let b = raw("  ", &["hot"]);
        let c = raw("ice", &["cold"]);
        let out = clean_responses(&[a, b, c], Language::En, &CleaningRules::default());
        assert_eq!(out.records.len(), 1);
        let reasons: Vec<_> = out.rejected.iter().map(|r| r.reason).collect();
        assert_eq!(reasons, vec![RejectReason::MissingCulture, RejectReason::MissingCue]);
    }

    #[test]
    fn drop_list_is_configurable() {
        let rules = CleaningRules {
            drop_list: vec!["idk".into()],
            ..Default::default()
        };
        let out = clean_responses(&[raw("fire", &["IDK", "hot"])], Language::En, &rules);
        assert_eq!(out.records[0].responses, vec!["hot"]);
    }
}
