//! Text formats for response files.

use std::fmt::Write;

use super::{RawResponse, ResponseRecord};
use crate::{Error, Result};

pub const RESPONSE_HEADER: &str = "participant_id\tculture\tcue\tr1\tr2\tr3";

/// Parses the response TSV. Rows are never rejected here: short rows yield
/// empty fields, which cleaning reports per record.
pub fn parse_responses(text: &str, file: &str) -> Result<Vec<RawResponse>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.split('\t').next().map(str::trim) == Some("participant_id") => {}
        _ => {
            return Err(Error::Parse {
                file: file.to_string(),
                line: 1,
                msg: "missing header row starting with participant_id".into(),
            })
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let col = |j: usize| cols.get(j).copied().unwrap_or("").to_string();
        out.push(RawResponse {
            line: i + 2,
            participant: col(0),
            culture: col(1),
            cue: col(2),
            responses: cols.iter().skip(3).map(|s| s.to_string()).collect(),
        });
    }
    Ok(out)
}

/// Writes records in the response TSV layout (r2/r3 empty when absent).
pub fn format_responses(records: &[ResponseRecord]) -> String {
    let mut s = String::from(RESPONSE_HEADER);
    s.push('\n');
    for r in records {
        let _ = write!(s, "{}\t{}\t{}", r.participant, r.culture, r.cue);
        for j in 0..3 {
            s.push('\t');
            if let Some(w) = r.responses.get(j) {
                s.push_str(w);
            }
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{clean_responses, CleaningRules, Language};

    #[test]
    fn short_rows_survive_parsing() {
        let text = "participant_id\tculture\tcue\tr1\tr2\tr3\np1\tUSA\tfire\thot\t\t\np2\n";
        let rows = parse_responses(text, "x").unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].responses, vec!["hot", "", ""]);
        assert_eq!(rows[1].culture, "");
        assert_eq!(rows[1].line, 3);
    }

    #[test]
    fn header_required() {
        assert!(parse_responses("p1\tUSA\tfire\thot\n", "x").is_err());
    }

    #[test]
    fn format_then_parse_then_clean_is_stable() {
        let text = "participant_id\tculture\tcue\tr1\tr2\tr3\np1\tUSA\tFire\tHot\t?\tsmoke\n";
        let clean = clean_responses(
            &parse_responses(text, "x").unwrap(),
            Language::En,
            &CleaningRules::default(),
        );
        let again = parse_responses(&format_responses(&clean.records), "y").unwrap();
        let clean2 = clean_responses(&again, Language::En, &CleaningRules::default());
        assert_eq!(clean.records, clean2.records);
    }
}
