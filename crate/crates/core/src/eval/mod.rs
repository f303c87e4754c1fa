//! Candidate scoring, ranking, evaluation reports and controlled experiments.

mod csv;
mod report;
mod score;

pub use csv::{
    category_breakdown_csv, cross_matrix_csv, metrics_by_category_csv, metrics_by_culture_csv, prob_diff_csv,
};
pub use report::{
    category_breakdown, concept_pool, cross_culture_matrix, evaluate, probability_diff, prompt_ids, BreakdownRow,
    CategoryBreakdown, CategorySummary, CrossMatrix, CrossRow, CueRow, CultureSummary, EvalContext, EvalReport,
    EvalSettings, GroupRow, KMetric, ProbDiff, ReportMeta, SteerChoice, REPORT_SCHEMA,
};
pub use score::{rank_candidates, score_candidate, score_tokens, sort_scores, CandidatePool, CandidateScore, Ranking};
