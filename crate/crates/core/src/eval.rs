//! Per-class confusion counts, macro-F1, the three-split protocol and the
//! hyper-parameter grid.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{make_splits, LabeledText, SplitPlan};
use crate::error::{Error, Result};
use crate::label::Label;
use crate::learning::{
    check_inclusion_threshold, check_order, collect_stats, learn, score_features, CorpusStats, LearningConfig,
    Normalization, SelectionMetric,
};
use crate::model::Model;
use crate::recognizer::{Backend, Engine, Matcher, RecognitionConfig};
use crate::text::{tokenize, TokenizedText};

/// One-vs-rest counts for one class over a test split.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn record(&mut self, truth: bool, predicted: bool) {
        match (truth, predicted) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// `2TP / (2TP + FP + FN)`, 0 when nothing was expected or predicted.
    pub fn f1(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Classes scored by an evaluation: all ten canonical labels when every
/// label seen is canonical, otherwise the sorted union of what was seen.
pub fn evaluation_labels<'a>(seen: impl IntoIterator<Item = &'a Label>) -> Vec<Label> {
    let seen: BTreeSet<&Label> = seen.into_iter().collect();
    let canonical = Label::canonical();
    if seen.iter().all(|l| canonical.contains(l)) {
        canonical
    } else {
        seen.into_iter().cloned().collect()
    }
}

/// Confusion counts of one test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitScore {
    pub labels: Vec<Label>,
    pub per_label: Vec<Confusion>,
    /// Binary task: any class expected vs any class detected.
    pub any: Confusion,
}

impl SplitScore {
    pub fn new(labels: Vec<Label>) -> Self {
        let per_label = vec![Confusion::default(); labels.len()];
        SplitScore { labels, per_label, any: Confusion::default() }
    }

    /// Records one text; both slices are aligned with `self.labels`.
    pub fn record(&mut self, truth: &[bool], predicted: &[bool]) {
        debug_assert_eq!(truth.len(), self.labels.len());
        debug_assert_eq!(predicted.len(), self.labels.len());
        for ((c, &t), &p) in self.per_label.iter_mut().zip(truth).zip(predicted) {
            c.record(t, p);
        }
        self.any.record(truth.iter().any(|&t| t), predicted.iter().any(|&p| p));
    }

    pub fn texts(&self) -> u64 {
        self.any.total()
    }

    pub fn f1(&self) -> Vec<f64> {
        self.per_label.iter().map(Confusion::f1).collect()
    }

    /// Unweighted mean of the per-class F1.
    pub fn macro_f1(&self) -> f64 {
        if self.per_label.is_empty() {
            return 0.0;
        }
        self.per_label.iter().map(Confusion::f1).sum::<f64>() / self.per_label.len() as f64
    }

    pub fn binary_f1(&self) -> f64 {
        self.any.f1()
    }
}

/// Scores label sets directly. Predicted labels outside `labels` are ignored.
pub fn score_decisions(labels: &[Label], truth: &[BTreeSet<Label>], predicted: &[BTreeSet<Label>]) -> Result<SplitScore> {
    if truth.len() != predicted.len() {
        return Err(Error::InvalidConfig(format!(
            "{} ground-truth sets but {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    let mut score = SplitScore::new(labels.to_vec());
    for (t, p) in truth.iter().zip(predicted) {
        let t: Vec<bool> = labels.iter().map(|l| t.contains(l)).collect();
        let p: Vec<bool> = labels.iter().map(|l| p.contains(l)).collect();
        score.record(&t, &p);
    }
    Ok(score)
}

/// Maps positions of a model's classes onto evaluation positions.
fn alignment(eval: &[Label], model: &[Label]) -> Vec<Option<usize>> {
    model.iter().map(|l| eval.iter().position(|e| e == l)).collect()
}

fn truth_row(eval: &[Label], text: &LabeledText) -> Vec<bool> {
    eval.iter().map(|l| text.labels.contains(l)).collect()
}

fn project(align: &[Option<usize>], decisions: impl IntoIterator<Item = bool>, width: usize) -> Vec<bool> {
    let mut out = vec![false; width];
    for (a, d) in align.iter().zip(decisions) {
        if let Some(i) = a {
            out[*i] |= d;
        }
    }
    out
}

/// Recognizes every test text and counts decisions against the ground truth.
pub fn score_split(model: &Model, test: &[LabeledText], cfg: &RecognitionConfig) -> SplitScore {
    score_split_with(model, test, cfg, Backend::Naive)
}

pub fn score_split_with(model: &Model, test: &[LabeledText], cfg: &RecognitionConfig, backend: Backend) -> SplitScore {
    let model_labels = model.labels();
    let labels = evaluation_labels(model_labels.iter().chain(test.iter().flat_map(|t| &t.labels)));
    score_with_labels(&Engine::new(model, backend), &labels, test.iter(), cfg)
}

fn score_with_labels<'a>(
    engine: &Engine,
    labels: &[Label],
    test: impl Iterator<Item = &'a LabeledText>,
    cfg: &RecognitionConfig,
) -> SplitScore {
    let align = alignment(labels, engine.labels());
    let mut score = SplitScore::new(labels.to_vec());
    for t in test {
        let result = engine.recognize(&tokenize(&t.text), cfg);
        score.record(&truth_row(labels, t), &project(&align, result.decisions, labels.len()));
    }
    score
}

/// Mean, extremes and spread of per-run values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Largest relative deviation of a run from the mean, in percent.
    pub mpe: f64,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Aggregate {
        if values.is_empty() {
            return Aggregate { mean: 0.0, min: 0.0, max: 0.0, mpe: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Aggregate { mean, min, max, mpe: mpe(values) }
    }
}

/// `max_r |v_r - mean| / mean * 100`; 0 for a zero mean.
pub fn mpe(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if mean == 0.0 {
        return 0.0;
    }
    values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max) / mean * 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub shift: usize,
    pub score: SplitScore,
}

/// Per-class figures averaged over runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSummary {
    pub label: Label,
    pub precision: f64,
    pub recall: f64,
    pub f1: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub labels: Vec<Label>,
    pub runs: Vec<RunResult>,
    pub macro_f1: Aggregate,
    pub binary_f1: Aggregate,
    pub per_label: Vec<LabelSummary>,
}

impl EvalReport {
    pub fn from_runs(runs: Vec<RunResult>) -> Result<EvalReport> {
        let labels = runs
            .first()
            .map(|r| r.score.labels.clone())
            .ok_or_else(|| Error::InvalidConfig("a report needs at least one run".into()))?;
        if runs.iter().any(|r| r.score.labels != labels) {
            return Err(Error::LabelMismatch("runs were scored on different label sets".into()));
        }
        let macro_f1 = Aggregate::of(&runs.iter().map(|r| r.score.macro_f1()).collect::<Vec<_>>());
        let binary_f1 = Aggregate::of(&runs.iter().map(|r| r.score.binary_f1()).collect::<Vec<_>>());
        let n = runs.len() as f64;
        let per_label = labels
            .iter()
            .enumerate()
            .map(|(j, label)| LabelSummary {
                label: label.clone(),
                precision: runs.iter().map(|r| r.score.per_label[j].precision()).sum::<f64>() / n,
                recall: runs.iter().map(|r| r.score.per_label[j].recall()).sum::<f64>() / n,
                f1: Aggregate::of(&runs.iter().map(|r| r.score.per_label[j].f1()).collect::<Vec<_>>()),
            })
            .collect();
        Ok(EvalReport { labels, runs, macro_f1, binary_f1, per_label })
    }

    pub fn run_macro_f1(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.score.macro_f1()).collect()
    }

    /// Lowest and highest mean per-class F1.
    pub fn label_f1_range(&self) -> (f64, f64) {
        self.per_label.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.f1.mean), hi.max(s.f1.mean)))
    }
}

/// Trains on each 80% split, evaluates on the held-out 20%, and aggregates
/// the three runs.
pub fn run_protocol(corpus: &[LabeledText], learn_cfg: &LearningConfig, rec_cfg: &RecognitionConfig) -> Result<EvalReport> {
    run_protocol_with(corpus, learn_cfg, rec_cfg, Backend::Naive)
}

pub fn run_protocol_with(
    corpus: &[LabeledText],
    learn_cfg: &LearningConfig,
    rec_cfg: &RecognitionConfig,
    backend: Backend,
) -> Result<EvalReport> {
    learn_cfg.validate()?;
    let labels = evaluation_labels(corpus.iter().flat_map(|t| &t.labels));
    let runs = make_splits(corpus)?
        .into_iter()
        .map(|plan| {
            let model = learn(plan.train.iter().map(|&i| &corpus[i]), learn_cfg)?;
            let engine = Engine::new(&model, backend);
            let score = score_with_labels(&engine, &labels, plan.test.iter().map(|&i| &corpus[i]), rec_cfg);
            Ok(RunResult { shift: plan.shift, score })
        })
        .collect::<Result<Vec<_>>>()?;
    EvalReport::from_runs(runs)
}

/// Axes of the hyper-parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxes {
    pub orders: Vec<usize>,
    pub metrics: Vec<SelectionMetric>,
    pub inclusion_thresholds: Vec<u32>,
    pub detection_thresholds: Vec<u32>,
    pub weighted: Vec<bool>,
    pub log_scaling: bool,
    pub cross_sentence: bool,
    pub normalization: Normalization,
    pub tfidf_log_base: f64,
}

impl GridAxes {
    /// NM 1..=5, all nine metrics, IT 0..=90, DT 10..=90, both weight modes.
    pub fn full() -> Self {
        GridAxes {
            orders: (1..=5).collect(),
            metrics: SelectionMetric::ALL.to_vec(),
            inclusion_thresholds: (0..=90).step_by(10).collect(),
            detection_thresholds: (10..=90).step_by(10).collect(),
            weighted: vec![false, true],
            log_scaling: true,
            cross_sentence: false,
            normalization: Normalization::PerClass,
            tfidf_log_base: std::f64::consts::E,
        }
    }

    /// The one cell described by a learning and a recognition config.
    pub fn single(learn: &LearningConfig, rec: &RecognitionConfig) -> Result<Self> {
        let dt = rec.detection_threshold;
        if dt.fract() != 0.0 || !(0.0..=100.0).contains(&dt) {
            return Err(Error::InvalidConfig(format!("grid DT must be a whole percent, got {dt}")));
        }
        Ok(GridAxes {
            orders: vec![learn.order],
            metrics: vec![learn.metric],
            inclusion_thresholds: vec![learn.inclusion_threshold],
            detection_thresholds: vec![dt as u32],
            weighted: vec![rec.weighted],
            log_scaling: rec.log_scaling,
            cross_sentence: rec.cross_sentence,
            normalization: learn.normalization,
            tfidf_log_base: learn.tfidf_log_base,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("NM", self.orders.is_empty()),
            ("SM", self.metrics.is_empty()),
            ("IT", self.inclusion_thresholds.is_empty()),
            ("DT", self.detection_thresholds.is_empty()),
            ("weighted", self.weighted.is_empty()),
        ];
        if let Some((axis, _)) = empty.iter().find(|e| e.1) {
            return Err(Error::InvalidConfig(format!("grid axis {axis} is empty")));
        }
        for &o in &self.orders {
            check_order(o)?;
        }
        for &it in &self.inclusion_thresholds {
            check_inclusion_threshold(it)?;
        }
        for &dt in &self.detection_thresholds {
            if dt > 100 {
                return Err(Error::InvalidConfig(format!("DT must be in 0..=100, got {dt}")));
            }
        }
        Ok(())
    }

    pub fn training_cells(&self) -> usize {
        self.orders.len() * self.metrics.len() * self.inclusion_thresholds.len()
    }

    pub fn cell_count(&self) -> usize {
        self.training_cells() * self.detection_thresholds.len() * self.weighted.len()
    }

    fn learning_config(&self, order: usize, metric: SelectionMetric, it: u32) -> LearningConfig {
        LearningConfig {
            order,
            metric,
            inclusion_threshold: it,
            normalization: self.normalization,
            tfidf_log_base: self.tfidf_log_base,
        }
    }

    fn recognition_config(&self, dt: u32, weighted: bool) -> RecognitionConfig {
        RecognitionConfig {
            detection_threshold: dt as f64,
            log_scaling: self.log_scaling,
            weighted,
            cross_sentence: self.cross_sentence,
        }
    }
}

/// Hyper-parameters of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub order: usize,
    pub metric: SelectionMetric,
    pub inclusion_threshold: u32,
    pub detection_threshold: u32,
    pub weighted: bool,
}

impl std::fmt::Display for CellKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "NM={} SM={} IT={} DT={} {}",
            self.order,
            self.metric,
            self.inclusion_threshold,
            self.detection_threshold,
            if self.weighted { "weighted" } else { "unweighted" }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub key: CellKey,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    /// Best mean macro-F1 first; ties in key order.
    pub cells: Vec<GridCell>,
    /// Cached-threshold decisions re-checked against full recognition.
    pub cache_checks: usize,
}

impl GridReport {
    pub fn from_cells(mut cells: Vec<GridCell>, cache_checks: usize) -> Self {
        sort_cells(&mut cells);
        GridReport { cells, cache_checks }
    }

    pub fn best(&self, weighted: bool) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.key.weighted == weighted)
    }

    pub fn get(&self, key: &CellKey) -> Option<&GridCell> {
        self.cells.iter().find(|c| &c.key == key)
    }

    /// Best cell among those matching `filter`.
    pub fn best_where(&self, filter: impl Fn(&CellKey) -> bool) -> Option<&GridCell> {
        self.cells.iter().find(|c| filter(&c.key))
    }
}

fn sort_cells(cells: &mut [GridCell]) {
    cells.sort_by(|a, b| b.report.macro_f1.mean.total_cmp(&a.report.macro_f1.mean).then_with(|| a.key.cmp(&b.key)));
}

/// Everything one split contributes to the grid.
struct SplitContext<'a> {
    plan: &'a SplitPlan,
    truth: Vec<Vec<bool>>,
    texts: Vec<&'a TokenizedText>,
}

/// Sweeps the grid. Statistics are collected once per split at the largest
/// order; each `(NM, SM)` pair is scored once and every `IT` is a prefix cut
/// of it; recognition scores are computed once per model and weight mode and
/// thresholded at every `DT`.
pub fn grid_search(corpus: &[LabeledText], axes: &GridAxes) -> Result<GridReport> {
    axes.validate()?;
    let plans = make_splits(corpus)?;
    let labels = evaluation_labels(corpus.iter().flat_map(|t| &t.labels));
    let tokenized: Vec<TokenizedText> = corpus.par_iter().map(|t| tokenize(&t.text)).collect();
    let max_order = *axes.orders.iter().max().expect("validated non-empty");

    let mut runs: BTreeMap<CellKey, Vec<RunResult>> = BTreeMap::new();
    let mut cache_checks = 0;
    for plan in &plans {
        let ctx = SplitContext {
            plan,
            truth: plan.test.iter().map(|&i| truth_row(&labels, &corpus[i])).collect(),
            texts: plan.test.iter().map(|&i| &tokenized[i]).collect(),
        };
        let full = collect_stats(plan.train.iter().map(|&i| &corpus[i]), max_order)?;
        let by_order: Vec<(usize, CorpusStats)> = axes
            .orders
            .iter()
            .map(|&o| Ok((o, if o == max_order { full.clone() } else { full.restrict(o)? })))
            .collect::<Result<_>>()?;
        drop(full);
        let pairs: Vec<(&CorpusStats, usize, SelectionMetric)> = by_order
            .iter()
            .flat_map(|(o, s)| axes.metrics.iter().map(move |&m| (s, *o, m)))
            .collect();
        let results: Vec<(Vec<(CellKey, SplitScore)>, usize)> = pairs
            .par_iter()
            .map(|&(stats, order, metric)| sweep_pair(stats, order, metric, axes, &labels, &ctx))
            .collect::<Result<_>>()?;
        for (cells, checks) in results {
            cache_checks += checks;
            for (key, score) in cells {
                runs.entry(key).or_default().push(RunResult { shift: plan.shift, score });
            }
        }
        log::info!("grid: split {} done", plan.shift);
    }
    let cells = runs
        .into_iter()
        .map(|(key, runs)| Ok(GridCell { key, report: EvalReport::from_runs(runs)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(GridReport::from_cells(cells, cache_checks))
}

fn sweep_pair(
    stats: &CorpusStats,
    order: usize,
    metric: SelectionMetric,
    axes: &GridAxes,
    labels: &[Label],
    ctx: &SplitContext<'_>,
) -> Result<(Vec<(CellKey, SplitScore)>, usize)> {
    let features = score_features(stats, metric, axes.normalization, axes.tfidf_log_base);
    let mut out = Vec::with_capacity(axes.inclusion_thresholds.len() * axes.detection_thresholds.len() * axes.weighted.len());
    let mut checks = 0;
    for &it in &axes.inclusion_thresholds {
        debug_assert_eq!(axes.learning_config(order, metric, it).validate().ok(), Some(()));
        let model = features.model(it);
        let matcher = Matcher::new(&model);
        let align = alignment(labels, matcher.labels());
        let encoded: Vec<_> = ctx.texts.iter().map(|t| matcher.encode(t)).collect();
        for &weighted in &axes.weighted {
            let base = axes.recognition_config(0, weighted);
            let scores: Vec<Vec<f64>> = encoded.iter().map(|e| matcher.scores(e, &base)).collect();
            if !ctx.texts.is_empty() {
                // Spot check: thresholding the cached scores must agree with a full run.
                let probe = (it as usize / 10 + order + ctx.plan.shift) % ctx.texts.len();
                for &dt in &axes.detection_thresholds {
                    let full = matcher.recognize(ctx.texts[probe], &axes.recognition_config(dt, weighted));
                    let cached: Vec<bool> = scores[probe].iter().map(|&s| s * 100.0 > dt as f64).collect();
                    if full.decisions != cached {
                        return Err(Error::InvalidModel(format!(
                            "cached scores disagree with recognition at NM={order} SM={metric} IT={it} DT={dt}"
                        )));
                    }
                    checks += 1;
                }
            }
            for &dt in &axes.detection_thresholds {
                let mut score = SplitScore::new(labels.to_vec());
                for (s, truth) in scores.iter().zip(&ctx.truth) {
                    let predicted = project(&align, s.iter().map(|&s| s * 100.0 > dt as f64), labels.len());
                    score.record(truth, &predicted);
                }
                let key = CellKey { order, metric, inclusion_threshold: it, detection_threshold: dt, weighted };
                out.push((key, score));
            }
        }
    }
    Ok((out, checks))
}

pub const GRID_FILE: &str = "grid.csv";
pub const RUNS_FILE: &str = "runs.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const SUMMARY_TEXT: &str = "summary.txt";

const KEY_COLUMNS: [&str; 5] = ["nm", "sm", "it", "dt", "weighted"];

/// Writes the per-cell table, the per-run table (from which the cells can be
/// re-read exactly), and JSON and text summaries. Returns the written paths.
pub fn emit_report(report: &GridReport, dir: &Path) -> Result<Vec<PathBuf>> {
    if report.cells.is_empty() {
        return Err(Error::InvalidConfig("no grid cells to report".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = [dir.join(GRID_FILE), dir.join(RUNS_FILE), dir.join(SUMMARY_JSON), dir.join(SUMMARY_TEXT)];
    write_file(&paths[0], &grid_table(&report.cells)?)?;
    write_file(&paths[1], &runs_table(&report.cells)?)?;
    let summary = serde_json::to_string_pretty(&summary(report)).expect("plain data serializes");
    write_file(&paths[2], &(summary + "\n"))?;
    write_file(&paths[3], &summary_text(report))?;
    Ok(paths.to_vec())
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))
}

fn key_fields(k: &CellKey) -> [String; 5] {
    [k.order.to_string(), k.metric.to_string(), k.inclusion_threshold.to_string(), k.detection_threshold.to_string(), k.weighted.to_string()]
}

fn csv_string(rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).map_err(|e| Error::Csv { path: PathBuf::from("<memory>"), source: e })?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

/// One row per cell: axes, macro-F1 mean/min/max/MPE, binary F1 mean, and
/// mean F1 per class.
pub fn grid_table(cells: &[GridCell]) -> Result<String> {
    let labels = &cells.first().ok_or_else(|| Error::InvalidConfig("no grid cells".into()))?.report.labels;
    let mut header: Vec<String> = KEY_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(["runs", "macro_f1_mean", "macro_f1_min", "macro_f1_max", "mpe", "binary_f1_mean"].map(String::from));
    header.extend(labels.iter().map(|l| format!("f1:{l}")));
    let mut rows = vec![header];
    for c in cells {
        let r = &c.report;
        let mut row = key_fields(&c.key).to_vec();
        row.push(r.runs.len().to_string());
        row.extend([r.macro_f1.mean, r.macro_f1.min, r.macro_f1.max, r.macro_f1.mpe, r.binary_f1.mean].map(|v| v.to_string()));
        row.extend(r.per_label.iter().map(|s| s.f1.mean.to_string()));
        rows.push(row);
    }
    csv_string(rows)
}

/// One row per cell and run with the raw confusion counts.
pub fn runs_table(cells: &[GridCell]) -> Result<String> {
    let labels = &cells.first().ok_or_else(|| Error::InvalidConfig("no grid cells".into()))?.report.labels;
    let mut header: Vec<String> = KEY_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(["shift", "macro_f1", "binary_f1", "any_tp", "any_fp", "any_fn", "any_tn"].map(String::from));
    for l in labels {
        header.extend(["tp", "fp", "fn", "tn"].map(|c| format!("{c}:{l}")));
    }
    let mut rows = vec![header];
    for c in cells {
        for run in &c.report.runs {
            let s = &run.score;
            let mut row = key_fields(&c.key).to_vec();
            row.push(run.shift.to_string());
            row.push(s.macro_f1().to_string());
            row.push(s.binary_f1().to_string());
            row.extend(counts(&s.any));
            for cf in &s.per_label {
                row.extend(counts(cf));
            }
            rows.push(row);
        }
    }
    csv_string(rows)
}

fn counts(c: &Confusion) -> [String; 4] {
    [c.tp, c.fp, c.fn_, c.tn].map(|v| v.to_string())
}

/// Re-reads cells from a runs table, in table order of first appearance.
pub fn parse_runs_table(src: &str) -> Result<Vec<GridCell>> {
    let path = PathBuf::from(RUNS_FILE);
    let bad = |line: usize, message: String| Error::Parse { path: PathBuf::from(RUNS_FILE), line, message };
    let mut reader = csv::Reader::from_reader(src.as_bytes());
    let header = reader.headers().map_err(|e| Error::Csv { path: path.clone(), source: e })?.clone();
    const FIXED: usize = 12;
    if header.len() < FIXED || !(header.len() - FIXED).is_multiple_of(4) {
        return Err(bad(1, format!("unexpected column count {}", header.len())));
    }
    let labels = (FIXED..header.len())
        .step_by(4)
        .map(|i| {
            let name = header[i].strip_prefix("tp:").ok_or_else(|| bad(1, format!("expected tp:<label>, got {:?}", &header[i])))?;
            Label::new(name)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<CellKey> = Vec::new();
    let mut runs: BTreeMap<CellKey, Vec<RunResult>> = BTreeMap::new();
    for (n, rec) in reader.records().enumerate() {
        let line = n + 2;
        let rec = rec.map_err(|e| Error::Csv { path: path.clone(), source: e })?;
        let field = |i: usize| rec.get(i).ok_or_else(|| bad(line, format!("missing column {i}")));
        let num = |i: usize| -> Result<u64> { field(i)?.parse().map_err(|e| bad(line, format!("column {i}: {e}"))) };
        let key = CellKey {
            order: num(0)? as usize,
            metric: field(1)?.parse().map_err(|e: Error| bad(line, e.to_string()))?,
            inclusion_threshold: num(2)? as u32,
            detection_threshold: num(3)? as u32,
            weighted: field(4)?.parse().map_err(|e| bad(line, format!("weighted: {e}")))?,
        };
        let confusion = |i: usize| -> Result<Confusion> { Ok(Confusion { tp: num(i)?, fp: num(i + 1)?, fn_: num(i + 2)?, tn: num(i + 3)? }) };
        let score = SplitScore {
            labels: labels.clone(),
            per_label: (0..labels.len()).map(|j| confusion(FIXED + 4 * j)).collect::<Result<_>>()?,
            any: confusion(8)?,
        };
        if !runs.contains_key(&key) {
            order.push(key);
        }
        runs.entry(key).or_default().push(RunResult { shift: num(5)? as usize, score });
    }
    order
        .into_iter()
        .map(|key| Ok(GridCell { key, report: EvalReport::from_runs(runs.remove(&key).expect("key recorded"))? }))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub key: CellKey,
    pub macro_f1: Aggregate,
    pub binary_f1: Aggregate,
    pub run_macro_f1: Vec<f64>,
    /// Lowest and highest mean per-class F1.
    pub label_f1_range: (f64, f64),
    pub per_label: Vec<LabelSummary>,
}

impl CellSummary {
    pub fn of(cell: &GridCell) -> Self {
        CellSummary {
            key: cell.key,
            macro_f1: cell.report.macro_f1,
            binary_f1: cell.report.binary_f1,
            run_macro_f1: cell.report.run_macro_f1(),
            label_f1_range: cell.report.label_f1_range(),
            per_label: cell.report.per_label.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub cells: usize,
    pub runs: usize,
    pub cache_checks: usize,
    pub best_unweighted: Option<CellSummary>,
    pub best_weighted: Option<CellSummary>,
    /// Best cell per selection metric.
    pub best_per_metric: BTreeMap<String, CellSummary>,
    /// Best cell per N-gram order.
    pub best_per_order: BTreeMap<usize, CellSummary>,
}

pub fn summary(report: &GridReport) -> GridSummary {
    let mut best_per_metric = BTreeMap::new();
    let mut best_per_order = BTreeMap::new();
    // Cells are sorted best first, so the first hit per group wins.
    for c in &report.cells {
        best_per_metric.entry(c.key.metric.to_string()).or_insert_with(|| CellSummary::of(c));
        best_per_order.entry(c.key.order).or_insert_with(|| CellSummary::of(c));
    }
    GridSummary {
        cells: report.cells.len(),
        runs: report.cells.iter().map(|c| c.report.runs.len()).sum(),
        cache_checks: report.cache_checks,
        best_unweighted: report.best(false).map(CellSummary::of),
        best_weighted: report.best(true).map(CellSummary::of),
        best_per_metric,
        best_per_order,
    }
}

/// Human-readable digest: best cells with min/max error bars and the
/// per-class F1 of each.
pub fn summary_text(report: &GridReport) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let s = summary(report);
    let _ = writeln!(out, "{} cells, {} runs, {} cache spot checks", s.cells, s.runs, s.cache_checks);
    for (title, best) in [("best unweighted", &s.best_unweighted), ("best weighted", &s.best_weighted)] {
        let Some(b) = best else { continue };
        let _ = writeln!(out, "\n{title}: {}", b.key);
        let _ = writeln!(out, "{}", describe(&b.macro_f1));
        let _ = writeln!(out, "  binary F1 {:.4}", b.binary_f1.mean);
        let _ = writeln!(out, "  per-class F1 range {:.4} .. {:.4}", b.label_f1_range.0, b.label_f1_range.1);
        for l in &b.per_label {
            let _ = writeln!(
                out,
                "    {:<24} P {:.4}  R {:.4}  F1 {:.4} [{:.4}, {:.4}]",
                l.label.as_str(),
                l.precision,
                l.recall,
                l.f1.mean,
                l.f1.min,
                l.f1.max
            );
        }
    }
    let _ = writeln!(out, "\nbest per selection metric:");
    let mut metrics: Vec<&CellSummary> = s.best_per_metric.values().collect();
    metrics.sort_by(|a, b| b.macro_f1.mean.total_cmp(&a.macro_f1.mean));
    for b in metrics {
        let _ = writeln!(out, "  {:<5} {:.4} [{:.4}, {:.4}]  {}", b.key.metric.name(), b.macro_f1.mean, b.macro_f1.min, b.macro_f1.max, b.key);
    }
    let _ = writeln!(out, "\nbest per N-gram order:");
    for (o, b) in &s.best_per_order {
        let _ = writeln!(out, "  NM={o} {:.4} [{:.4}, {:.4}]  {}", b.macro_f1.mean, b.macro_f1.min, b.macro_f1.max, b.key);
    }
    out
}

/// `macro-F1 mean [min, max], MPE`.
pub fn describe(a: &Aggregate) -> String {
    format!("  macro-F1 {:.4} [{:.4}, {:.4}]  MPE {:.1}%", a.mean, a.min, a.max, a.mpe)
}
