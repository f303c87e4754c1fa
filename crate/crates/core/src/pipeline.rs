//! File-level pipeline stages. Each stage reads upstream artifacts from the
//! work directory, refuses artifacts stamped with a different config hash
//! (unless forced) and writes its own outputs stamped with the current hash
//! and seed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::data::io::{format_responses, parse_responses};
use crate::data::{
    aggregate_norms, align_cues, clean_responses, parse_alignment, split_dataset, truncate_norms, AssociationNorms,
    ChapterGroups, CleanReport, CultureId, CultureRegistry, DatasetSplit, DropReason, NormsRecord, NormsTable,
    RawResponse, RejectReason, Rejection, ResponseRecord,
};
use crate::eval::{
    category_breakdown, category_breakdown_csv, concept_pool, cross_culture_matrix, cross_matrix_csv, evaluate,
    metrics_by_category_csv, metrics_by_culture_csv, prob_diff_csv, probability_diff, prompt_ids, CategoryBreakdown,
    CrossMatrix, EvalContext, EvalReport, EvalSettings, ProbDiff, SteerChoice,
};
use crate::lm::checkpoint::sidecar_path;
use crate::lm::{
    build_vocab, encode_target, load_backbone, pretrain, save_backbone, teacher_forced, AdamConfig, BackboneLm,
    BackboneSidecar, LmExample, ModelDims, PromptTemplate, TemplateMode, Tokenizer,
};
use crate::steer::{load_steer, save_steer, train_steer, SteerModel, SteerTrainConfig, TrainExample};
use crate::{Error, Result};

pub const NORMS_FILE: &str = "norms.json";
pub const SPLIT_FILE: &str = "split.json";
pub const SUMMARY_FILE: &str = "ingest_summary.json";
pub const CLEAN_FILE: &str = "clean_responses.tsv";
pub const BACKBONE_FILE: &str = "backbone.bin";
pub const PRETRAIN_LOSS_FILE: &str = "pretrain_loss.csv";
pub const STEER_FILE: &str = "steer.bin";
pub const STEER_META_FILE: &str = "steer.json";
pub const STEER_LOSS_FILE: &str = "steer_loss.csv";
pub const REPORT_FILE: &str = "report.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormsFile {
    pub config_hash: String,
    pub seed: u64,
    pub norms: Vec<NormsRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitFile {
    pub config_hash: String,
    #[serde(flatten)]
    pub split: DatasetSplit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub config_hash: String,
    pub seed: u64,
    pub records_read: usize,
    pub records_kept: usize,
    pub records_rejected: BTreeMap<RejectReason, usize>,
    pub responses_dropped: BTreeMap<DropReason, usize>,
    pub rejections: Vec<Rejection>,
    pub concepts_in_alignment: usize,
    pub concepts_aligned: usize,
    pub concepts_retained: usize,
    /// Aligned concepts dropped because some culture gave no usable answer.
    pub concepts_without_responses: Vec<String>,
    pub train_cues: usize,
    pub test_cues: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteerMeta {
    pub config_hash: String,
    pub seed: u64,
    pub epsilon: f64,
    pub examples_used: usize,
    pub examples_rejected: usize,
    pub epoch_losses: Vec<f64>,
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn check_hash(artifact: &Path, found: &str, cfg: &RunConfig, force: bool) -> Result<()> {
    let expected = cfg.hash();
    if found == expected {
        return Ok(());
    }
    if force {
        log::warn!(
            "using {} built with config {found} (current {expected})",
            artifact.display()
        );
        return Ok(());
    }
    Err(Error::StaleArtifact {
        artifact: artifact.display().to_string(),
        expected,
        found: found.to_string(),
    })
}

/// Writes all files or none: on the first failure, files already written
/// by this call are removed.
fn write_all(files: &[(PathBuf, String)]) -> Result<()> {
    for (i, (path, contents)) in files.iter().enumerate() {
        if let Err(e) = write(path, contents) {
            for (p, _) in &files[..i] {
                let _ = fs::remove_file(p);
            }
            return Err(e);
        }
    }
    Ok(())
}

pub fn work_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.paths.work_dir.join(name)
}

/// Cleans raw rows with each culture's language. Rows naming a culture
/// outside the registry are rejected individually.
pub fn clean_all(raw: &[RawResponse], cfg: &RunConfig, registry: &CultureRegistry) -> CleanReport {
    let mut by_lang: BTreeMap<crate::data::Language, Vec<RawResponse>> = BTreeMap::new();
    let mut report = CleanReport::default();
    for r in raw {
        let culture = r.culture.trim();
        match CultureId::new(culture).ok().and_then(|c| registry.lang_of(&c)) {
            Some(lang) => by_lang.entry(lang).or_default().push(r.clone()),
            None if !culture.is_empty() && CultureId::new(culture).is_ok() => report.rejected.push(Rejection {
                line: r.line,
                participant: r.participant.clone(),
                reason: RejectReason::UnknownCulture,
            }),
            // Empty or malformed culture: let cleaning report the reason.
            None => by_lang.entry(crate::data::Language::En).or_default().push(r.clone()),
        }
    }
    let mut kept: Vec<(usize, ResponseRecord)> = Vec::new();
    for (lang, rows) in by_lang {
        let part = clean_responses(&rows, lang, &cfg.cleaning);
        // Every row that was not rejected yields exactly one record, in order.
        let mut survivors = part.records.into_iter();
        for row in &rows {
            if part.rejected.iter().any(|x| x.line == row.line) {
                continue;
            }
            kept.push((row.line, survivors.next().expect("one record per surviving row")));
        }
        report.rejected.extend(part.rejected);
        for (reason, n) in part.dropped {
            *report.dropped.entry(reason).or_insert(0) += n;
        }
    }
    kept.sort_by_key(|(line, _)| *line);
    report.records = kept.into_iter().map(|(_, r)| r).collect();
    report.rejected.sort_by_key(|r| r.line);
    report
}

/// Ingest: clean responses, align cues, aggregate and truncate norms, split.
pub fn ingest(cfg: &RunConfig) -> Result<IngestSummary> {
    let registry = cfg.registry();
    let hash = cfg.hash();
    let rpath = &cfg.paths.responses;
    let apath = &cfg.paths.alignment;
    let rtext = fs::read_to_string(rpath).map_err(|e| Error::io(rpath, e))?;
    let atext = fs::read_to_string(apath).map_err(|e| Error::io(apath, e))?;
    let raw = parse_responses(&rtext, &rpath.display().to_string())?;
    let table = parse_alignment(&atext, &apath.display().to_string())?;
    let cleaned = clean_all(&raw, cfg, &registry);
    let aligned = align_cues(&table, &registry.languages())?;

    let mut grouped: BTreeMap<(CultureId, String), Vec<ResponseRecord>> = BTreeMap::new();
    for r in &cleaned.records {
        grouped
            .entry((r.culture.clone(), r.cue.clone()))
            .or_default()
            .push(r.clone());
    }
    let ids = registry.ids();
    let built: Vec<(String, Result<BTreeMap<CultureId, AssociationNorms>>)> = aligned
        .par_iter()
        .map(|a| {
            let norms = (|| {
                let mut by_culture = BTreeMap::new();
                for spec in registry.specs() {
                    let cue = a.form(spec.lang).expect("aligned concept has every language");
                    let recs = grouped
                        .get(&(spec.id.clone(), cue.to_string()))
                        .map(Vec::as_slice)
                        .unwrap_or(&[]);
                    let n = aggregate_norms(recs, &spec.id, cue)?.with_category(a.category);
                    by_culture.insert(spec.id.clone(), n);
                }
                truncate_norms(&by_culture, &ids, &a.concept)
            })();
            (a.concept.clone(), norms)
        })
        .collect();

    let mut table_out = NormsTable::default();
    let mut without = Vec::new();
    for (a, (concept, res)) in aligned.iter().zip(built) {
        match res {
            Ok(by_culture) => table_out.insert(&concept, a.category, by_culture),
            Err(Error::EmptyNorms { culture, cue }) => {
                log::warn!("dropping concept {concept}: no usable responses from {culture} for {cue:?}");
                without.push(concept);
            }
            Err(e) => return Err(e),
        }
    }
    let cues: Vec<(String, crate::data::Chapter)> = table_out.concepts().map(|(k, c)| (k.to_string(), c)).collect();
    let split = split_dataset(&cues, cfg.seed)?;
    for ch in &split.empty_categories {
        log::warn!("category {ch} has no cues");
    }

    let summary = IngestSummary {
        config_hash: hash.clone(),
        seed: cfg.seed,
        records_read: raw.len(),
        records_kept: cleaned.records.len(),
        records_rejected: cleaned.rejected_counts(),
        responses_dropped: cleaned.dropped.clone(),
        rejections: cleaned.rejected.clone(),
        concepts_in_alignment: {
            let mut keys: Vec<&str> = table.iter().map(|a| a.concept.as_str()).collect();
            keys.dedup();
            keys.len()
        },
        concepts_aligned: aligned.len(),
        concepts_retained: table_out.len(),
        concepts_without_responses: without,
        train_cues: split.train.len(),
        test_cues: split.test.len(),
    };
    let norms_file = NormsFile {
        config_hash: hash.clone(),
        seed: cfg.seed,
        norms: table_out.to_records(),
    };
    let split_file = SplitFile {
        config_hash: hash,
        split,
    };
    write_all(&[
        (work_path(cfg, NORMS_FILE), to_json(&norms_file)?),
        (work_path(cfg, SPLIT_FILE), to_json(&split_file)?),
        (work_path(cfg, SUMMARY_FILE), to_json(&summary)?),
        (work_path(cfg, CLEAN_FILE), format_responses(&cleaned.records)),
    ])?;
    Ok(summary)
}

/// Upstream data shared by the later stages.
pub struct Dataset {
    pub registry: CultureRegistry,
    pub norms: NormsTable,
    pub split: DatasetSplit,
    pub records: Vec<ResponseRecord>,
}

pub fn load_dataset(cfg: &RunConfig, force: bool) -> Result<Dataset> {
    let npath = work_path(cfg, NORMS_FILE);
    let nf: NormsFile = read_json(&npath)?;
    check_hash(&npath, &nf.config_hash, cfg, force)?;
    let spath = work_path(cfg, SPLIT_FILE);
    let sf: SplitFile = read_json(&spath)?;
    check_hash(&spath, &sf.config_hash, cfg, force)?;
    let cpath = work_path(cfg, CLEAN_FILE);
    let text = fs::read_to_string(&cpath).map_err(|e| Error::io(&cpath, e))?;
    let records = parse_responses(&text, &cpath.display().to_string())?
        .into_iter()
        .map(|r| {
            Ok(ResponseRecord {
                participant: r.participant,
                culture: CultureId::new(r.culture)?,
                cue: r.cue,
                responses: r.responses.into_iter().filter(|s| !s.is_empty()).collect(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(Dataset {
        registry: cfg.registry(),
        norms: NormsTable::from_records(nf.norms)?,
        split: sf.split,
        records,
    })
}

/// `(concept, culture, record)` for every cleaned record whose cue belongs
/// to a retained concept, in concept then record order.
fn records_by_concept<'a>(data: &'a Dataset) -> Vec<(&'a str, &'a ResponseRecord)> {
    let mut index: BTreeMap<(&CultureId, &str), &str> = BTreeMap::new();
    for (concept, _) in data.norms.concepts() {
        for (c, n) in data.norms.cultures_for(concept).unwrap() {
            index.insert((c, n.cue.as_str()), concept);
        }
    }
    let mut out: Vec<(&str, &ResponseRecord)> = data
        .records
        .iter()
        .filter_map(|r| index.get(&(&r.culture, r.cue.as_str())).map(|&k| (k, r)))
        .collect();
    out.sort_by_key(|(k, _)| *k);
    out
}

/// Texts the vocabulary is built from: every pretraining sequence plus one
/// rendering of each template per culture.
pub fn vocab_corpus(data: &Dataset) -> Result<Vec<String>> {
    let mut corpus = Vec::new();
    let ids = data.registry.ids();
    for spec in data.registry.specs() {
        let others: Vec<&str> = ids.iter().filter(|c| **c != spec.id).map(|c| c.as_str()).collect();
        for mode in [TemplateMode::Base, TemplateMode::Csp, TemplateMode::Cct] {
            corpus.push(PromptTemplate::new(mode, spec.lang).render("", Some(spec.id.as_str()), Some(&others))?);
        }
    }
    for (_, r) in records_by_concept(data) {
        let lang = data.registry.lang_of(&r.culture).unwrap();
        corpus.push(PromptTemplate::new(TemplateMode::Base, lang).render(&r.cue, None, None)?);
        corpus.push(r.responses.join(crate::lm::encode::RESPONSE_SEPARATOR));
    }
    Ok(corpus)
}

fn sequence_fits(prompt: &[u32], target: &[u32], context: usize) -> bool {
    prompt.len() + target.len() <= context
}

#[derive(Clone, Debug, PartialEq)]
pub struct PretrainReport {
    pub initial_loss: f64,
    pub final_loss: f64,
    pub examples: usize,
    pub skipped: usize,
    pub vocab_size: usize,
}

/// Pretrains the backbone on Base prompts followed by each participant's
/// responses, over every retained concept and culture.
pub fn run_pretrain(cfg: &RunConfig, force: bool) -> Result<PretrainReport> {
    let data = load_dataset(cfg, force)?;
    let tok = build_vocab(&vocab_corpus(&data)?, cfg.model.vocab_size)?;
    let mut examples = Vec::new();
    let mut skipped = 0;
    for (_, r) in records_by_concept(&data) {
        let prompt = prompt_ids(&tok, &data.registry, TemplateMode::Base, &r.culture, &r.cue)?;
        let target = encode_target(&tok, &r.responses);
        if !sequence_fits(&prompt, &target, cfg.model.context) {
            skipped += 1;
            continue;
        }
        let (input, targets) = teacher_forced(&prompt, &target);
        examples.push(LmExample { input, targets });
    }
    if skipped > 0 {
        log::warn!("{skipped} pretraining sequences exceed the context and were skipped");
    }
    let dims = ModelDims {
        vocab: tok.vocab_size(),
        d: cfg.model.d,
        context: cfg.model.context,
    };
    let mut model = BackboneLm::<f64>::init(dims, cfg.seed);
    let adam = AdamConfig {
        lr: cfg.pretrain.lr,
        epochs: cfg.pretrain.epochs,
        batch: cfg.pretrain.batch,
        seed: cfg.seed,
        ..AdamConfig::default()
    };
    let out = pretrain(&mut model, &examples, &adam)?;
    if cfg.pretrain.epochs > 0 && !(out.final_loss < out.initial_loss) {
        return Err(Error::NonFiniteLoss(format!(
            "pretraining did not reduce the loss ({} -> {})",
            out.initial_loss, out.final_loss
        )));
    }
    let hash = cfg.hash();
    let mut csv = String::from("config_hash,seed,epoch,loss\n");
    csv.push_str(&format!("{hash},{},0,{}\n", cfg.seed, out.initial_loss));
    for (i, l) in out.epoch_losses.iter().enumerate() {
        csv.push_str(&format!("{hash},{},{},{l}\n", cfg.seed, i + 1));
    }
    let path = work_path(cfg, BACKBONE_FILE);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    save_backbone(&path, &model, &BackboneSidecar::new(dims, &tok, &hash, cfg.seed)?)?;
    write(&work_path(cfg, PRETRAIN_LOSS_FILE), csv)?;
    Ok(PretrainReport {
        initial_loss: out.initial_loss,
        final_loss: out.final_loss,
        examples: examples.len(),
        skipped,
        vocab_size: tok.vocab_size(),
    })
}

pub fn load_checkpoint(cfg: &RunConfig, force: bool) -> Result<(BackboneLm<f64>, Tokenizer)> {
    let path = work_path(cfg, BACKBONE_FILE);
    let (model, side, tok) = load_backbone::<f64>(&path)?;
    check_hash(&sidecar_path(&path), &side.config_hash, cfg, force)?;
    Ok((model, tok))
}

/// Steering examples: one per cleaned record of a training concept.
pub fn steer_examples(data: &Dataset, tok: &Tokenizer) -> Result<Vec<TrainExample>> {
    records_by_concept(data)
        .into_iter()
        .filter(|(k, _)| data.split.is_train(k))
        .map(|(k, r)| {
            Ok(TrainExample {
                culture: r.culture.clone(),
                key: format!("{k}\t{}", r.participant),
                prompt: prompt_ids(tok, &data.registry, TemplateMode::Base, &r.culture, &r.cue)?,
                target: encode_target(tok, &r.responses),
            })
        })
        .collect()
}

pub fn run_train_steer(cfg: &RunConfig, force: bool) -> Result<SteerMeta> {
    let data = load_dataset(cfg, force)?;
    let (backbone, tok) = load_checkpoint(cfg, force)?;
    let examples = steer_examples(&data, &tok)?;
    let mut steer = SteerModel::new(data.registry.ids(), cfg.model.d, cfg.steer.epsilon)?;
    let tcfg = SteerTrainConfig {
        lr: cfg.steer.lr,
        epochs: cfg.steer.epochs,
        batch: cfg.steer.batch,
    };
    let out = train_steer(&backbone, &mut steer, &examples, &tcfg)?;
    let hash = cfg.hash();
    let meta = SteerMeta {
        config_hash: hash.clone(),
        seed: cfg.seed,
        epsilon: cfg.steer.epsilon,
        examples_used: out.used,
        examples_rejected: out.rejected.len(),
        epoch_losses: out.epoch_losses.clone(),
    };
    let mut csv = String::from("config_hash,seed,epoch,batch,loss\n");
    for p in &out.curve {
        csv.push_str(&format!("{hash},{},{},{},{}\n", cfg.seed, p.epoch + 1, p.batch, p.loss));
    }
    let path = work_path(cfg, STEER_FILE);
    save_steer(&path, &steer)?;
    write(&work_path(cfg, STEER_META_FILE), to_json(&meta)?)?;
    write(&work_path(cfg, STEER_LOSS_FILE), csv)?;
    Ok(meta)
}

pub fn load_steer_checkpoint(cfg: &RunConfig, registry: &CultureRegistry, force: bool) -> Result<SteerModel<f64>> {
    let mpath = work_path(cfg, STEER_META_FILE);
    let meta: SteerMeta = read_json(&mpath)?;
    check_hash(&mpath, &meta.config_hash, cfg, force)?;
    load_steer(&work_path(cfg, STEER_FILE), &registry.ids(), cfg.model.d)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalOptions {
    pub mode: Option<TemplateMode>,
    pub steer: SteerChoice,
    pub ks: Option<Vec<usize>>,
    pub keep_rankings: bool,
    pub force: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            mode: None,
            steer: SteerChoice::None,
            ks: None,
            keep_rankings: false,
            force: false,
        }
    }
}

fn settings(cfg: &RunConfig, opts: &EvalOptions) -> EvalSettings {
    EvalSettings {
        mode: opts.mode.unwrap_or(cfg.eval.mode),
        steer: opts.steer.clone(),
        ks: opts.ks.clone().unwrap_or_else(|| cfg.eval.ks.clone()),
        window: cfg.eval.window,
        temperature: cfg.model.temperature,
        keep_rankings: opts.keep_rankings,
        seed: cfg.seed,
        config_hash: cfg.hash(),
    }
}

/// Output directory of one evaluation run, e.g. `eval-base-matched`.
pub fn eval_dir(cfg: &RunConfig, mode: TemplateMode, steer: &SteerChoice) -> PathBuf {
    cfg.paths.output_dir.join(format!("eval-{mode}-{steer}"))
}

pub fn run_eval(cfg: &RunConfig, opts: &EvalOptions) -> Result<(EvalReport, PathBuf)> {
    let data = load_dataset(cfg, opts.force)?;
    let (backbone, tok) = load_checkpoint(cfg, opts.force)?;
    let steer = match opts.steer {
        SteerChoice::None => None,
        _ => Some(load_steer_checkpoint(cfg, &data.registry, opts.force)?),
    };
    let ctx = EvalContext {
        backbone: &backbone,
        tokenizer: &tok,
        steer: steer.as_ref(),
        registry: &data.registry,
        norms: &data.norms,
        split: &data.split,
    };
    let s = settings(cfg, opts);
    let report = evaluate(&ctx, &s)?;
    let dir = eval_dir(cfg, s.mode, &s.steer);
    write_all(&[
        (dir.join(REPORT_FILE), report.to_json()?),
        (dir.join("metrics_by_culture.csv"), metrics_by_culture_csv(&report)),
        (dir.join("metrics_by_category.csv"), metrics_by_category_csv(&report)),
    ])?;
    Ok((report, dir))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareOutput {
    pub matrix: CrossMatrix,
    pub prob_diff: Vec<ProbDiff>,
    pub dir: PathBuf,
}

/// Cross-culture matrix plus matched-steering probability differences for
/// every test concept.
pub fn run_compare(cfg: &RunConfig, opts: &EvalOptions) -> Result<CompareOutput> {
    let data = load_dataset(cfg, opts.force)?;
    let (backbone, tok) = load_checkpoint(cfg, opts.force)?;
    let steer = load_steer_checkpoint(cfg, &data.registry, opts.force)?;
    let ctx = EvalContext {
        backbone: &backbone,
        tokenizer: &tok,
        steer: Some(&steer),
        registry: &data.registry,
        norms: &data.norms,
        split: &data.split,
    };
    let s = settings(cfg, opts);
    let matrix = cross_culture_matrix(&ctx, &s)?;
    let mut jobs = Vec::new();
    for c in data.registry.ids() {
        for concept in &data.split.test {
            if data.norms.get(concept, &c).is_some() {
                jobs.push((c.clone(), concept.clone()));
            }
        }
    }
    let diffs: Vec<Vec<ProbDiff>> = jobs
        .par_iter()
        .map(|(c, concept)| {
            let pool = concept_pool(&data.norms, concept)?;
            probability_diff(&ctx, &s, c, concept, &pool)
        })
        .collect::<Result<_>>()?;
    let prob_diff: Vec<ProbDiff> = diffs.into_iter().flatten().collect();
    let dir = cfg.paths.output_dir.join("compare");
    let hash = cfg.hash();
    write_all(&[
        (
            dir.join("cross_matrix.json"),
            to_json(&CrossMatrixFile {
                config_hash: hash.clone(),
                seed: cfg.seed,
                mode: s.mode,
                matrix: matrix.clone(),
            })?,
        ),
        (dir.join("cross_matrix.csv"), cross_matrix_csv(&matrix, &hash, cfg.seed)),
        (dir.join("prob_diff.csv"), prob_diff_csv(&prob_diff, &hash, cfg.seed)),
    ])?;
    Ok(CompareOutput { matrix, prob_diff, dir })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossMatrixFile {
    pub config_hash: String,
    pub seed: u64,
    pub mode: TemplateMode,
    #[serde(flatten)]
    pub matrix: CrossMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreakdownFile {
    pub config_hash: String,
    pub seed: u64,
    #[serde(flatten)]
    pub breakdown: CategoryBreakdown,
}

pub fn chapter_groups(cfg: &RunConfig) -> Result<ChapterGroups> {
    match &cfg.paths.chapter_groups {
        Some(p) => ChapterGroups::from_toml(&fs::read_to_string(p).map_err(|e| Error::io(p, e))?),
        None => Ok(ChapterGroups::default()),
    }
}

/// Category breakdown of an existing report, written next to it.
pub fn run_report(cfg: &RunConfig, report_path: &Path, force: bool) -> Result<CategoryBreakdown> {
    let report: EvalReport = read_json(report_path)?;
    check_hash(report_path, &report.meta.config_hash, cfg, force)?;
    let b = category_breakdown(&report, &chapter_groups(cfg)?);
    for ch in &b.omitted {
        log::info!("chapter {ch} has no test cues; omitted from the breakdown");
    }
    let dir = report_path.parent().unwrap_or(Path::new("."));
    let hash = &report.meta.config_hash;
    write_all(&[
        (
            dir.join("category_breakdown.json"),
            to_json(&BreakdownFile {
                config_hash: hash.clone(),
                seed: report.meta.seed,
                breakdown: b.clone(),
            })?,
        ),
        (
            dir.join("category_breakdown.csv"),
            category_breakdown_csv(&b, hash, report.meta.seed),
        ),
    ])?;
    Ok(b)
}

/// Outputs of [`run_all`].
pub struct RunAll {
    pub summary: IngestSummary,
    pub pretrain: PretrainReport,
    pub steer: SteerMeta,
    pub baseline: EvalReport,
    pub matched: EvalReport,
    pub compare: CompareOutput,
}

/// Every stage in order with default options: ingest, pretrain, steer
/// training, baseline and matched evaluation, comparison and breakdown.
pub fn run_all(cfg: &RunConfig) -> Result<RunAll> {
    let summary = ingest(cfg)?;
    let pretrain = run_pretrain(cfg, false)?;
    let steer = run_train_steer(cfg, false)?;
    let (baseline, _) = run_eval(cfg, &EvalOptions::default())?;
    let (matched, dir) = run_eval(
        cfg,
        &EvalOptions {
            steer: SteerChoice::Matched,
            ..EvalOptions::default()
        },
    )?;
    let compare = run_compare(cfg, &EvalOptions::default())?;
    run_report(cfg, &dir.join(REPORT_FILE), false)?;
    Ok(RunAll {
        summary,
        pretrain,
        steer,
        baseline,
        matched,
        compare,
    })
}
