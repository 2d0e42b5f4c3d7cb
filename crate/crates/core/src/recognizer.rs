//! Priority-on-order recognition.
//!
//! N-gram lengths are visited from the longest to 1. A window is only
//! considered while every token under it is still unclaimed; when the window
//! is an entry of one or more dictionaries, each owning class `j` gains
//! `n * H_gj` and the window's tokens are claimed. A matched N-gram therefore
//! suppresses every shorter N-gram it contains.

use std::collections::{BTreeMap, HashMap};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::convkernel::KernelBank;
use crate::label::Label;
use crate::model::{Model, NGram};
use crate::text::{Span, TokenizedText};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecognitionConfig {
    /// Detection threshold `DT` in percent; a class is detected when its score times 100 exceeds it.
    pub detection_threshold: f64,
    /// `LS`: report `0.5 * log10(1 + 100 * C / l)` instead of `C / l`.
    pub log_scaling: bool,
    /// Use learned weights; otherwise every entry counts with weight 1.
    pub weighted: bool,
    /// Let windows span sentence boundaries.
    pub cross_sentence: bool,
}

impl Default for RecognitionConfig {
    fn default() -> Self {
        Self { detection_threshold: 50.0, log_scaling: true, weighted: true, cross_sentence: false }
    }
}

impl RecognitionConfig {
    pub fn with_threshold(self, dt: f64) -> Self {
        Self { detection_threshold: dt, ..self }
    }

    pub fn with_weighted(self, weighted: bool) -> Self {
        Self { weighted, ..self }
    }
}

/// One accepted match credited to one class.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchSpan {
    pub label: Label,
    pub ngram: NGram,
    pub tokens: Range<usize>,
    pub chars: Span,
    /// Weight used for this match (1.0 when unweighted).
    pub weight: f64,
    /// `n * weight`
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecognitionResult {
    /// Classes in model order (sorted by name).
    pub labels: Vec<Label>,
    /// `C_j`
    pub raw: Vec<f64>,
    /// Normalized `C_j`, in `[0, 1]`.
    pub scores: Vec<f64>,
    pub decisions: Vec<bool>,
    pub matches: Vec<MatchSpan>,
    /// Token count `l`.
    pub length: usize,
}

impl RecognitionResult {
    pub fn score(&self, label: &Label) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.scores[i])
    }

    pub fn raw(&self, label: &Label) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.raw[i])
    }

    pub fn detected(&self) -> Vec<&Label> {
        self.labels.iter().zip(&self.decisions).filter(|(_, &d)| d).map(|(l, _)| l).collect()
    }

    /// Re-thresholds the stored scores.
    pub fn redecide(&mut self, dt: f64) {
        self.decisions = decide(&self.scores, dt);
    }

    pub fn to_wire(&self) -> WireResult {
        WireResult {
            scores: self.labels.iter().map(|l| l.to_string()).zip(self.scores.iter().copied()).collect(),
            decisions: self.labels.iter().map(|l| l.to_string()).zip(self.decisions.iter().copied()).collect(),
            matches: self
                .matches
                .iter()
                .map(|m| WireMatch {
                    distortion: m.label.to_string(),
                    tokens: m.ngram.tokens().to_vec(),
                    char_start: m.chars.start,
                    char_end: m.chars.end,
                    weight: m.weight,
                })
                .collect(),
            length: self.length,
        }
    }

    /// Compact JSON shared by the CLI and the audit server.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_wire()).expect("plain data serializes")
    }
}

/// JSON wire format of a recognition result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireResult {
    pub scores: BTreeMap<String, f64>,
    pub decisions: BTreeMap<String, bool>,
    pub matches: Vec<WireMatch>,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireMatch {
    pub distortion: String,
    pub tokens: Vec<String>,
    pub char_start: usize,
    pub char_end: usize,
    pub weight: f64,
}

/// `C_j / l`, or `0.5 * log10(1 + 100 * C_j / l)` clamped to 1 with log scaling.
pub fn normalize(raw: f64, length: usize, log_scaling: bool) -> f64 {
    if length == 0 {
        return 0.0;
    }
    let ratio = raw / length as f64;
    if log_scaling {
        (0.5 * (1.0 + 100.0 * ratio).log10()).min(1.0)
    } else {
        ratio
    }
}

/// `score * 100 > dt` for every class.
pub fn decide(scores: &[f64], dt: f64) -> Vec<bool> {
    scores.iter().map(|&s| s * 100.0 > dt).collect()
}

/// Token sequence encoded against a matcher's vocabulary.
#[derive(Debug, Clone)]
pub struct Encoded {
    /// Token ids; [`UNKNOWN`] for tokens absent from every dictionary.
    pub ids: Vec<u32>,
    /// Sentence ordinal per token.
    pub sentences: Vec<u32>,
}

pub const UNKNOWN: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Entry {
    label: u32,
    weight: f64,
    ngram: u32,
}

/// A model compiled for lookup: tokens interned, entries keyed by id sequence.
#[derive(Debug, Clone)]
pub struct Matcher {
    labels: Vec<Label>,
    vocab: HashMap<String, u32>,
    table: HashMap<Box<[u32]>, Vec<Entry>>,
    ngrams: Vec<NGram>,
    max_order: usize,
}

impl Matcher {
    pub fn new(model: &Model) -> Self {
        let mut vocab: HashMap<String, u32> = HashMap::new();
        let mut table: HashMap<Box<[u32]>, Vec<Entry>> = HashMap::new();
        let mut ngram_ids: HashMap<&NGram, u32> = HashMap::new();
        let mut ngrams = Vec::new();
        for (j, dict) in model.dictionaries().iter().enumerate() {
            for (g, weight) in dict.entries() {
                let key: Box<[u32]> = g
                    .tokens()
                    .iter()
                    .map(|t| {
                        let next = vocab.len() as u32;
                        *vocab.entry(t.clone()).or_insert(next)
                    })
                    .collect();
                let ngram = *ngram_ids.entry(g).or_insert_with(|| {
                    ngrams.push(g.clone());
                    ngrams.len() as u32 - 1
                });
                // Dictionaries are visited in label order, so each entry list stays sorted by label.
                table.entry(key).or_default().push(Entry { label: j as u32, weight, ngram });
            }
        }
        Matcher { labels: model.labels(), vocab, table, ngrams, max_order: model.max_order() }
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn encode(&self, text: &TokenizedText) -> Encoded {
        Encoded {
            ids: text.tokens.iter().map(|t| self.vocab.get(&t.text).copied().unwrap_or(UNKNOWN)).collect(),
            sentences: text.sentence_ids(),
        }
    }

    /// Runs the masked scan, calling `on_match(label, start, n, weight, ngram)`
    /// for every credited match, and returns `C_j` per class.
    fn scan(&self, text: &Encoded, cfg: &RecognitionConfig, mut on_match: impl FnMut(usize, usize, usize, f64, u32)) -> Vec<f64> {
        let l = text.ids.len();
        let mut raw = vec![0.0; self.labels.len()];
        let mut mask = vec![true; l];
        for n in (1..=self.max_order.min(l)).rev() {
            for i in 0..=l - n {
                let window = i..i + n;
                if !mask[window.clone()].iter().all(|&m| m) {
                    continue;
                }
                if !cfg.cross_sentence && text.sentences[i] != text.sentences[i + n - 1] {
                    continue;
                }
                let Some(entries) = self.table.get(&text.ids[window.clone()]) else {
                    continue;
                };
                for e in entries {
                    let weight = if cfg.weighted { e.weight } else { 1.0 };
                    raw[e.label as usize] += n as f64 * weight;
                    on_match(e.label as usize, i, n, weight, e.ngram);
                }
                mask[window].fill(false);
            }
        }
        raw
    }

    /// `C_j` per class without building spans.
    pub fn raw_counts(&self, text: &Encoded, cfg: &RecognitionConfig) -> Vec<f64> {
        self.scan(text, cfg, |_, _, _, _, _| {})
    }

    /// Normalized scores per class without building spans.
    pub fn scores(&self, text: &Encoded, cfg: &RecognitionConfig) -> Vec<f64> {
        let l = text.ids.len();
        self.raw_counts(text, cfg).into_iter().map(|c| normalize(c, l, cfg.log_scaling)).collect()
    }

    pub fn recognize(&self, text: &TokenizedText, cfg: &RecognitionConfig) -> RecognitionResult {
        let encoded = self.encode(text);
        let mut matches = Vec::new();
        let raw = self.scan(&encoded, cfg, |label, i, n, weight, ngram| {
            matches.push(MatchSpan {
                label: self.labels[label].clone(),
                ngram: self.ngrams[ngram as usize].clone(),
                tokens: i..i + n,
                chars: text.char_span(i..i + n),
                weight,
                contribution: n as f64 * weight,
            });
        });
        finish(self.labels.clone(), raw, matches, text.len(), cfg)
    }
}

pub(crate) fn finish(
    labels: Vec<Label>,
    raw: Vec<f64>,
    matches: Vec<MatchSpan>,
    length: usize,
    cfg: &RecognitionConfig,
) -> RecognitionResult {
    let scores: Vec<f64> = raw.iter().map(|&c| normalize(c, length, cfg.log_scaling)).collect();
    let decisions = decide(&scores, cfg.detection_threshold);
    RecognitionResult { labels, raw, scores, decisions, matches, length }
}

/// Compiles `model` and recognizes one text.
pub fn recognize(text: &TokenizedText, model: &Model, cfg: &RecognitionConfig) -> RecognitionResult {
    Matcher::new(model).recognize(text, cfg)
}

/// Highlighted character intervals of one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Highlight {
    pub label: Label,
    pub score: f64,
    pub detected: bool,
    /// Sorted by start.
    pub spans: Vec<Span>,
}

/// Groups match intervals by class. Classes that were not detected are
/// left out unless `include_undetected` is set.
pub fn highlight(result: &RecognitionResult, include_undetected: bool) -> Vec<Highlight> {
    result
        .labels
        .iter()
        .enumerate()
        .filter(|&(j, _)| include_undetected || result.decisions[j])
        .filter_map(|(j, label)| {
            let mut spans: Vec<Span> = result.matches.iter().filter(|m| &m.label == label).map(|m| m.chars).collect();
            if spans.is_empty() {
                return None;
            }
            spans.sort();
            Some(Highlight { label: label.clone(), score: result.scores[j], detected: result.decisions[j], spans })
        })
        .collect()
}

/// Which implementation runs the masked scan. Both give identical results.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Naive,
    Kernel,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Naive => "naive",
            Backend::Kernel => "kernel",
        }
    }
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "naive" => Ok(Backend::Naive),
            "kernel" => Ok(Backend::Kernel),
            _ => Err(format!("unknown backend {s:?} (expected naive or kernel)")),
        }
    }
}

/// A model compiled for one backend.
#[derive(Debug, Clone)]
pub enum Engine {
    Naive(Matcher),
    Kernel(KernelBank),
}

impl Engine {
    pub fn new(model: &Model, backend: Backend) -> Self {
        match backend {
            Backend::Naive => Engine::Naive(Matcher::new(model)),
            Backend::Kernel => Engine::Kernel(KernelBank::new(model)),
        }
    }

    pub fn labels(&self) -> &[Label] {
        match self {
            Engine::Naive(m) => m.labels(),
            Engine::Kernel(k) => k.labels(),
        }
    }

    pub fn recognize(&self, text: &TokenizedText, cfg: &RecognitionConfig) -> RecognitionResult {
        match self {
            Engine::Naive(m) => m.recognize(text, cfg),
            Engine::Kernel(k) => k.recognize(text, cfg),
        }
    }
}
