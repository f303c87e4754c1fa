//! Flat CSV exports of reports, for plotting.

use std::fmt::Write;

use crate::eval::report::{CategoryBreakdown, CrossMatrix, EvalReport, ProbDiff};

/// Quotes a field when it contains a delimiter, quote or newline.
fn field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn metrics_by_culture_csv(report: &EvalReport) -> String {
    let mut out = String::from("config_hash,seed,mode,steer,culture,cues,k,recall,pwr\n");
    let m = &report.meta;
    let mut rows: Vec<(&str, usize, &[crate::eval::KMetric])> = report
        .by_culture
        .iter()
        .map(|s| (s.culture.as_str(), s.cues, s.metrics.as_slice()))
        .collect();
    let total: usize = report.by_culture.iter().map(|s| s.cues).sum();
    rows.push(("average", total, report.average.as_slice()));
    for (culture, cues, metrics) in rows {
        for km in metrics {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                m.config_hash,
                m.seed,
                m.mode,
                field(&m.steer),
                culture,
                cues,
                km.k,
                km.recall,
                km.pwr
            )
            .unwrap();
        }
    }
    out
}

pub fn metrics_by_category_csv(report: &EvalReport) -> String {
    let mut out = String::from("config_hash,seed,mode,steer,culture,category,cues,k,recall,pwr\n");
    let m = &report.meta;
    for s in &report.by_category {
        for km in &s.metrics {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                m.config_hash,
                m.seed,
                m.mode,
                field(&m.steer),
                s.culture,
                s.category.short(),
                s.cues,
                km.k,
                km.recall,
                km.pwr
            )
            .unwrap();
        }
    }
    out
}

pub fn cross_matrix_csv(matrix: &CrossMatrix, config_hash: &str, seed: u64) -> String {
    let mut out = String::from("config_hash,seed,culture,steering,k,recall,pwr\n");
    for row in &matrix.rows {
        for (col, cell) in matrix.columns.iter().zip(&row.cells) {
            for km in cell {
                writeln!(
                    out,
                    "{config_hash},{seed},{},{},{},{},{}",
                    row.culture,
                    field(col),
                    km.k,
                    km.recall,
                    km.pwr
                )
                .unwrap();
            }
        }
    }
    out
}

pub fn prob_diff_csv(rows: &[ProbDiff], config_hash: &str, seed: u64) -> String {
    let mut out = String::from("config_hash,seed,culture,cue,word,p_base,p_steer,delta\n");
    for r in rows {
        writeln!(
            out,
            "{config_hash},{seed},{},{},{},{},{},{}",
            r.culture,
            field(&r.cue),
            field(&r.word),
            r.p_base,
            r.p_steer,
            r.delta
        )
        .unwrap();
    }
    out
}

pub fn category_breakdown_csv(b: &CategoryBreakdown, config_hash: &str, seed: u64) -> String {
    let mut out = String::from("config_hash,seed,culture,level,name,group,cues,k,recall,pwr\n");
    for r in &b.chapters {
        for km in &r.metrics {
            writeln!(
                out,
                "{config_hash},{seed},{},chapter,{},{},{},{},{},{}",
                r.culture,
                r.chapter.short(),
                field(&r.group),
                r.cues,
                km.k,
                km.recall,
                km.pwr
            )
            .unwrap();
        }
    }
    for r in &b.groups {
        for km in &r.metrics {
            writeln!(
                out,
                "{config_hash},{seed},{},group,{},{},{},{},{},{}",
                r.culture,
                field(&r.group),
                field(&r.group),
                r.cues,
                km.k,
                km.recall,
                km.pwr
            )
            .unwrap();
        }
    }
    out
}
