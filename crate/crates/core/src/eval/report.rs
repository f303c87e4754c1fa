//! Test-split evaluation, controlled experiments and aggregated reports.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Chapter, ChapterGroups, CultureId, CultureRegistry, DatasetSplit, NormsTable};
use crate::eval::score::{rank_candidates, score_tokens, CandidatePool};
use crate::lm::{encode_prompt, trace_window, BackboneLm, PromptTemplate, TemplateMode, Tokenizer};
use crate::metrics::metric_suite;
use crate::steer::SteerModel;
use crate::{Error, Result, Scalar};

pub const REPORT_SCHEMA: &str = "wat-eval/1";

/// Which steering slice, if any, is applied while evaluating a culture.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SteerChoice {
    None,
    /// Each culture is steered with its own slice.
    Matched,
    /// Every culture is steered with the given slice.
    Fixed(CultureId),
}

impl fmt::Display for SteerChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SteerChoice::None => f.write_str("none"),
            SteerChoice::Matched => f.write_str("matched"),
            SteerChoice::Fixed(c) => write!(f, "{c}"),
        }
    }
}

impl FromStr for SteerChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(SteerChoice::None),
            "matched" => Ok(SteerChoice::Matched),
            other => Ok(SteerChoice::Fixed(CultureId::new(other)?)),
        }
    }
}

/// Read-only inputs shared by every evaluation.
#[derive(Clone, Copy)]
pub struct EvalContext<'a, T> {
    pub backbone: &'a BackboneLm<T>,
    pub tokenizer: &'a Tokenizer,
    pub steer: Option<&'a SteerModel<T>>,
    pub registry: &'a CultureRegistry,
    pub norms: &'a NormsTable,
    pub split: &'a DatasetSplit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalSettings {
    pub mode: TemplateMode,
    pub steer: SteerChoice,
    pub ks: Vec<usize>,
    pub window: usize,
    pub temperature: f64,
    /// Keep the full ranked candidate list in every cue row.
    pub keep_rankings: bool,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMetric {
    pub k: usize,
    pub recall: f64,
    pub pwr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CueRow {
    pub concept: String,
    pub culture: CultureId,
    pub cue: String,
    pub category: Chapter,
    pub metrics: Vec<KMetric>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranking: Option<Vec<(String, f64)>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CultureSummary {
    pub culture: CultureId,
    pub cues: usize,
    pub metrics: Vec<KMetric>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategorySummary {
    pub culture: CultureId,
    pub category: Chapter,
    pub cues: usize,
    pub metrics: Vec<KMetric>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub seed: u64,
    pub config_hash: String,
    pub mode: TemplateMode,
    pub steer: String,
    pub epsilon: Option<f64>,
    pub window: usize,
    pub ks: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema: String,
    pub meta: ReportMeta,
    /// Per-culture means over cues.
    pub by_culture: Vec<CultureSummary>,
    /// Per-(culture, chapter) means over cues.
    pub by_category: Vec<CategorySummary>,
    /// Unweighted mean of the per-culture results.
    pub average: Vec<KMetric>,
    pub rows: Vec<CueRow>,
    /// Test concepts skipped because some culture has no norms for them.
    pub skipped: Vec<String>,
}

impl EvalReport {
    pub fn culture(&self, id: &CultureId) -> Option<&CultureSummary> {
        self.by_culture.iter().find(|c| &c.culture == id)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

fn mean_metrics<'a>(ks: &[usize], rows: impl Iterator<Item = &'a [KMetric]>) -> (usize, Vec<KMetric>) {
    let mut acc: Vec<KMetric> = ks
        .iter()
        .map(|&k| KMetric {
            k,
            recall: 0.0,
            pwr: 0.0,
        })
        .collect();
    let mut n = 0;
    for r in rows {
        n += 1;
        for (a, m) in acc.iter_mut().zip(r) {
            a.recall += m.recall;
            a.pwr += m.pwr;
        }
    }
    if n > 0 {
        for a in &mut acc {
            a.recall /= n as f64;
            a.pwr /= n as f64;
        }
    }
    (n, acc)
}

fn others_of(registry: &CultureRegistry, culture: &CultureId) -> Vec<String> {
    registry
        .ids()
        .into_iter()
        .filter(|c| c != culture)
        .map(|c| c.to_string())
        .collect()
}

/// Renders and encodes the prompt a culture sees for a cue.
pub fn prompt_ids(
    tokenizer: &Tokenizer,
    registry: &CultureRegistry,
    mode: TemplateMode,
    culture: &CultureId,
    cue: &str,
) -> Result<Vec<u32>> {
    let lang = registry
        .lang_of(culture)
        .ok_or_else(|| Error::UnknownCulture(culture.to_string()))?;
    let others = others_of(registry, culture);
    let others: Vec<&str> = others.iter().map(String::as_str).collect();
    let text = PromptTemplate::new(mode, lang).render(cue, Some(culture.as_str()), Some(&others))?;
    Ok(encode_prompt(tokenizer, &text))
}

fn steer_slice<'a, T: Scalar>(
    ctx: &EvalContext<'a, T>,
    choice: &SteerChoice,
    culture: &CultureId,
) -> Result<Option<(&'a SteerModel<T>, crate::steer::CultureVector)>> {
    let target = match choice {
        SteerChoice::None => return Ok(None),
        SteerChoice::Matched => culture,
        SteerChoice::Fixed(c) => c,
    };
    let steer = ctx
        .steer
        .ok_or_else(|| Error::Config(format!("steering choice {choice} needs a steer checkpoint")))?;
    Ok(Some((steer, steer.culture(target)?)))
}

/// Candidate pool of a concept: every culture's truncated norms.
pub fn concept_pool(norms: &NormsTable, concept: &str) -> Result<CandidatePool> {
    let by_culture = norms
        .cultures_for(concept)
        .ok_or_else(|| Error::EmptyPool(concept.to_string()))?;
    CandidatePool::new(concept, by_culture.values().flat_map(|n| n.words().map(str::to_string)))
}

fn eval_one<T: Scalar>(
    ctx: &EvalContext<'_, T>,
    settings: &EvalSettings,
    concept: &str,
    culture: &CultureId,
) -> Result<CueRow> {
    let truth = ctx.norms.get(concept, culture).expect("checked by caller");
    let category = ctx.norms.category(concept).expect("checked by caller");
    let ids = prompt_ids(ctx.tokenizer, ctx.registry, settings.mode, culture, &truth.cue)?;
    let steer = steer_slice(ctx, &settings.steer, culture)?;
    let site = match &steer {
        Some((s, c)) => Some(s.site(c)?),
        None => None,
    };
    let trace = trace_window(ctx.backbone, &ids, settings.window, site, T::of(settings.temperature))?;
    let pool = concept_pool(ctx.norms, concept)?;
    let ranking = rank_candidates(&pool, &trace, ctx.tokenizer)?;
    let suite = metric_suite::<f64, T>(truth, &ranking.prediction, &settings.ks)?;
    let metrics = settings
        .ks
        .iter()
        .zip(suite)
        .map(|(&k, (r, p))| KMetric {
            k,
            recall: r.value,
            pwr: p.value,
        })
        .collect();
    Ok(CueRow {
        concept: concept.to_string(),
        culture: culture.clone(),
        cue: truth.cue.clone(),
        category,
        metrics,
        dropped: ranking.dropped,
        ranking: settings.keep_rankings.then(|| {
            ranking
                .scores
                .iter()
                .map(|s| (s.word.clone(), s.probability.as_f64()))
                .collect()
        }),
    })
}

/// Evaluates every test concept for every registered culture.
pub fn evaluate<T: Scalar>(ctx: &EvalContext<'_, T>, settings: &EvalSettings) -> Result<EvalReport> {
    if settings.ks.is_empty() {
        return Err(Error::Config("at least one K is required".into()));
    }
    let cultures = ctx.registry.ids();
    let mut jobs = Vec::new();
    let mut skipped = Vec::new();
    for concept in &ctx.split.test {
        let complete =
            ctx.norms.category(concept).is_some() && cultures.iter().all(|c| ctx.norms.get(concept, c).is_some());
        if !complete {
            log::warn!("skipping test concept {concept:?}: norms missing for some culture");
            skipped.push(concept.clone());
            continue;
        }
        for c in &cultures {
            jobs.push((concept.as_str(), c));
        }
    }
    let mut rows: Vec<CueRow> = jobs
        .par_iter()
        .map(|(concept, c)| eval_one(ctx, settings, concept, c))
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| {
        let ia = ctx.registry.index_of(&a.culture);
        let ib = ctx.registry.index_of(&b.culture);
        (ia, &a.concept).cmp(&(ib, &b.concept))
    });

    let mut by_culture = Vec::new();
    let mut by_category = Vec::new();
    for c in &cultures {
        let mine: Vec<&CueRow> = rows.iter().filter(|r| &r.culture == c).collect();
        let (n, metrics) = mean_metrics(&settings.ks, mine.iter().map(|r| r.metrics.as_slice()));
        by_culture.push(CultureSummary {
            culture: c.clone(),
            cues: n,
            metrics,
        });
        let mut cats: BTreeMap<Chapter, Vec<&CueRow>> = BTreeMap::new();
        for r in &mine {
            cats.entry(r.category).or_default().push(r);
        }
        for (cat, rs) in cats {
            let (n, metrics) = mean_metrics(&settings.ks, rs.iter().map(|r| r.metrics.as_slice()));
            by_category.push(CategorySummary {
                culture: c.clone(),
                category: cat,
                cues: n,
                metrics,
            });
        }
    }
    let (_, average) = mean_metrics(&settings.ks, by_culture.iter().map(|s| s.metrics.as_slice()));
    let epsilon = match (&settings.steer, ctx.steer) {
        (SteerChoice::None, _) | (_, None) => None,
        (_, Some(s)) => Some(s.epsilon.as_f64()),
    };
    Ok(EvalReport {
        schema: REPORT_SCHEMA.to_string(),
        meta: ReportMeta {
            seed: settings.seed,
            config_hash: settings.config_hash.clone(),
            mode: settings.mode,
            steer: settings.steer.to_string(),
            epsilon,
            window: settings.window,
            ks: settings.ks.clone(),
        },
        by_culture,
        by_category,
        average,
        rows,
        skipped,
    })
}

/// |C|×(|C|+1) grid: rows are evaluation cultures, columns are "w/o W"
/// followed by each steering slice in registry order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossMatrix {
    pub ks: Vec<usize>,
    pub columns: Vec<String>,
    pub rows: Vec<CrossRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossRow {
    pub culture: CultureId,
    /// One entry per column.
    pub cells: Vec<Vec<KMetric>>,
}

impl CrossMatrix {
    /// PWR@K of row `r`, column `c`, for the `ki`-th K.
    pub fn pwr(&self, r: usize, c: usize, ki: usize) -> f64 {
        self.rows[r].cells[c][ki].pwr
    }

    /// Whether every row's best steered column (ties allowed) is its own
    /// culture, for every K.
    pub fn diagonal_dominant(&self) -> bool {
        (0..self.rows.len()).all(|r| {
            (0..self.ks.len()).all(|ki| {
                let diag = self.pwr(r, r + 1, ki);
                (0..self.columns.len()).all(|c| self.pwr(r, c, ki) <= diag)
            })
        })
    }
}

pub fn cross_culture_matrix<T: Scalar>(ctx: &EvalContext<'_, T>, settings: &EvalSettings) -> Result<CrossMatrix> {
    let steer = ctx
        .steer
        .ok_or_else(|| Error::Config("cross-culture comparison needs a steer checkpoint".into()))?;
    if steer.registry().len() < 2 {
        return Err(Error::Config(
            "cross-culture comparison needs at least two cultures".into(),
        ));
    }
    let mut choices = vec![SteerChoice::None];
    choices.extend(steer.registry().iter().cloned().map(SteerChoice::Fixed));
    let mut columns = vec!["w/o W".to_string()];
    columns.extend(steer.registry().iter().map(|c| format!("W_{c}")));
    let reports: Vec<EvalReport> = choices
        .into_iter()
        .map(|choice| {
            let s = EvalSettings {
                steer: choice,
                keep_rankings: false,
                ..settings.clone()
            };
            evaluate(ctx, &s)
        })
        .collect::<Result<_>>()?;
    let rows = ctx
        .registry
        .ids()
        .into_iter()
        .map(|c| CrossRow {
            cells: reports
                .iter()
                .map(|r| r.culture(&c).map(|s| s.metrics.clone()).unwrap_or_default())
                .collect(),
            culture: c,
        })
        .collect();
    Ok(CrossMatrix {
        ks: settings.ks.clone(),
        columns,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbDiff {
    pub culture: CultureId,
    pub cue: String,
    pub word: String,
    pub p_base: f64,
    pub p_steer: f64,
    pub delta: f64,
}

/// Steered minus unsteered candidate score for every pool word, sorted by
/// difference descending then word ascending. The culture is steered with
/// its own slice.
pub fn probability_diff<T: Scalar>(
    ctx: &EvalContext<'_, T>,
    settings: &EvalSettings,
    culture: &CultureId,
    concept: &str,
    pool: &CandidatePool,
) -> Result<Vec<ProbDiff>> {
    let steer = ctx
        .steer
        .ok_or_else(|| Error::Config("probability differences need a steer checkpoint".into()))?;
    let cue = ctx
        .norms
        .get(concept, culture)
        .map(|n| n.cue.clone())
        .ok_or_else(|| Error::MissingCultureForCue {
            culture: culture.to_string(),
            cue: concept.to_string(),
        })?;
    let ids = prompt_ids(ctx.tokenizer, ctx.registry, settings.mode, culture, &cue)?;
    let temp = T::of(settings.temperature);
    let c = steer.culture(culture)?;
    let base = trace_window(ctx.backbone, &ids, settings.window, None, temp)?;
    let steered = trace_window(ctx.backbone, &ids, settings.window, Some(steer.site(&c)?), temp)?;
    let mut out = Vec::new();
    for word in pool.candidates() {
        let tokens = ctx.tokenizer.tokenize(word);
        if tokens.len() > settings.window {
            log::warn!("skipping {word:?} in probability differences: longer than window");
            continue;
        }
        let p_base = score_tokens(&base, &tokens)?.as_f64();
        let p_steer = score_tokens(&steered, &tokens)?.as_f64();
        out.push(ProbDiff {
            culture: culture.clone(),
            cue: cue.clone(),
            word: word.clone(),
            p_base,
            p_steer,
            delta: p_steer - p_base,
        });
    }
    out.sort_by(|a, b| {
        b.delta
            .partial_cmp(&a.delta)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.word.cmp(&b.word))
    });
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreakdownRow {
    pub culture: CultureId,
    pub chapter: Chapter,
    pub group: String,
    pub cues: usize,
    pub metrics: Vec<KMetric>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub culture: CultureId,
    pub group: String,
    pub cues: usize,
    pub metrics: Vec<KMetric>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryBreakdown {
    pub ks: Vec<usize>,
    pub chapters: Vec<BreakdownRow>,
    pub groups: Vec<GroupRow>,
    /// Chapters without any test cue.
    pub omitted: Vec<Chapter>,
}

/// Per-chapter and per-group means recomputed from the report's cue rows.
pub fn category_breakdown(report: &EvalReport, groups: &ChapterGroups) -> CategoryBreakdown {
    let ks = &report.meta.ks;
    let mut cultures: Vec<CultureId> = Vec::new();
    for r in &report.rows {
        if !cultures.contains(&r.culture) {
            cultures.push(r.culture.clone());
        }
    }
    let mut chapters = Vec::new();
    let mut group_rows = Vec::new();
    for c in &cultures {
        let mine: Vec<&CueRow> = report.rows.iter().filter(|r| &r.culture == c).collect();
        for ch in Chapter::ALL {
            let rs: Vec<&CueRow> = mine.iter().copied().filter(|r| r.category == ch).collect();
            if rs.is_empty() {
                continue;
            }
            let (n, metrics) = mean_metrics(ks, rs.iter().map(|r| r.metrics.as_slice()));
            chapters.push(BreakdownRow {
                culture: c.clone(),
                chapter: ch,
                group: groups.group_of(ch).to_string(),
                cues: n,
                metrics,
            });
        }
        for g in groups.group_names() {
            let rs: Vec<&CueRow> = mine
                .iter()
                .copied()
                .filter(|r| groups.group_of(r.category) == g)
                .collect();
            if rs.is_empty() {
                continue;
            }
            let (n, metrics) = mean_metrics(ks, rs.iter().map(|r| r.metrics.as_slice()));
            group_rows.push(GroupRow {
                culture: c.clone(),
                group: g.to_string(),
                cues: n,
                metrics,
            });
        }
    }
    let omitted = Chapter::ALL
        .into_iter()
        .filter(|ch| !report.rows.iter().any(|r| r.category == *ch))
        .collect();
    CategoryBreakdown {
        ks: ks.clone(),
        chapters,
        groups: group_rows,
        omitted,
    }
}
