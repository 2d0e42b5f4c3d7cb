//! Corpus statistics, feature selection metrics, and dictionary construction.
//!
//! Every N-gram of order `1..=NM` inside a sentence is a candidate feature.
//! Per class `d`, each candidate associated with `d` is scored with one of
//! nine selection metrics, scores are divided by the per-class maximum, and
//! entries whose normalized score exceeds the inclusion threshold `IT` become
//! the dictionary for `d`, the normalized score being the entry weight.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::LabeledText;
use crate::error::{Error, Result};
use crate::label::Label;
use crate::model::{Dictionary, Model, ModelMeta, NGram};
use crate::text::tokenize;

pub const MAX_ORDER: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SelectionMetric {
    /// `F_gd`
    #[serde(rename = "F")]
    F,
    /// `UF_gd`
    #[serde(rename = "UF")]
    Uf,
    /// `F_gd / G_g`
    #[serde(rename = "FN")]
    Fn,
    /// `UF_gd / UG_g`
    #[serde(rename = "UFN")]
    Ufn,
    /// `FN_gd * ln(|D| / D_g)`
    #[serde(rename = "TFIDF")]
    TfIdf,
    /// Feature-category relevance, `UF_gd / sum_d' UF_gd'`
    #[serde(rename = "FCR")]
    Fcr,
    /// Category-feature relevance, `UF_gd / sum_g' UF_g'd`
    #[serde(rename = "CFR")]
    Cfr,
    /// Mutual relevance, `UF_gd^2 / (sum_d' UF_gd' * sum_g' UF_g'd)`
    #[serde(rename = "MR")]
    Mr,
    /// Non-logarithmic mutual information, `UF_gd^2 / (D_d * UG_g)`
    #[serde(rename = "NLMI")]
    Nlmi,
}

impl SelectionMetric {
    pub const ALL: [SelectionMetric; 9] = [
        SelectionMetric::F,
        SelectionMetric::Uf,
        SelectionMetric::Fn,
        SelectionMetric::Ufn,
        SelectionMetric::TfIdf,
        SelectionMetric::Fcr,
        SelectionMetric::Cfr,
        SelectionMetric::Mr,
        SelectionMetric::Nlmi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SelectionMetric::F => "F",
            SelectionMetric::Uf => "UF",
            SelectionMetric::Fn => "FN",
            SelectionMetric::Ufn => "UFN",
            SelectionMetric::TfIdf => "TFIDF",
            SelectionMetric::Fcr => "FCR",
            SelectionMetric::Cfr => "CFR",
            SelectionMetric::Mr => "MR",
            SelectionMetric::Nlmi => "NLMI",
        }
    }
}

impl fmt::Display for SelectionMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SelectionMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_alphanumeric()).collect::<String>().to_uppercase();
        SelectionMetric::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown selection metric {s:?}")))
    }
}

/// What the raw scores of a class are divided by.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    /// Maximum score within the class (max weight 1.0 in every non-empty dictionary).
    #[default]
    PerClass,
    /// Maximum score over all classes.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningConfig {
    /// Maximum N-gram order `NM`, 1..=5.
    pub order: usize,
    pub metric: SelectionMetric,
    /// Inclusion threshold `IT` in percent: 0, 10, ..., 90.
    pub inclusion_threshold: u32,
    pub normalization: Normalization,
    /// Base of the TF-IDF logarithm. Cancels under per-class normalization.
    pub tfidf_log_base: f64,
}

impl LearningConfig {
    pub fn new(order: usize, metric: SelectionMetric, inclusion_threshold: u32) -> Result<Self> {
        let cfg = LearningConfig {
            order,
            metric,
            inclusion_threshold,
            normalization: Normalization::PerClass,
            tfidf_log_base: std::f64::consts::E,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_order(self.order)?;
        check_inclusion_threshold(self.inclusion_threshold)?;
        if !(self.tfidf_log_base > 1.0 && self.tfidf_log_base.is_finite()) {
            return Err(Error::InvalidConfig(format!("bad log base {}", self.tfidf_log_base)));
        }
        Ok(())
    }
}

pub fn check_order(order: usize) -> Result<()> {
    if (1..=MAX_ORDER).contains(&order) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("NM must be in 1..={MAX_ORDER}, got {order}")))
    }
}

pub fn check_inclusion_threshold(it: u32) -> Result<()> {
    if it <= 90 && it.is_multiple_of(10) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("IT must be one of 0, 10, ..., 90, got {it}")))
    }
}

/// Counts of one N-gram for one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelCount {
    /// Index into [`CorpusStats::labels`].
    pub label: usize,
    /// `F_gd`: occurrences in texts labeled `d`.
    pub freq: u64,
    /// `UF_gd`: texts labeled `d` containing the N-gram.
    pub unique: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GramCounts {
    /// `G_g`
    pub total: u64,
    /// `UG_g`
    pub unique: u64,
    /// Non-zero associations sorted by label index.
    pub by_label: Vec<LabelCount>,
}

impl GramCounts {
    fn label(&self, label: usize) -> Option<&LabelCount> {
        self.by_label.binary_search_by_key(&label, |c| c.label).ok().map(|i| &self.by_label[i])
    }

    /// `sum_d UF_gd`
    pub fn unique_over_labels(&self) -> u64 {
        self.by_label.iter().map(|c| c.unique).sum()
    }

    fn absorb(&mut self, other: &GramCounts) {
        self.total += other.total;
        self.unique += other.unique;
        for c in &other.by_label {
            match self.by_label.binary_search_by_key(&c.label, |x| x.label) {
                Ok(i) => {
                    self.by_label[i].freq += c.freq;
                    self.by_label[i].unique += c.unique;
                }
                Err(i) => self.by_label.insert(i, *c),
            }
        }
    }
}

/// Corpus-level counts over a training set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusStats {
    order: usize,
    labels: Vec<Label>,
    texts: usize,
    /// `D_d`
    label_texts: Vec<u64>,
    /// `G_d = sum_g F_gd`
    label_total: Vec<u64>,
    /// `sum_g UF_gd`
    label_unique_total: Vec<u64>,
    grams: HashMap<NGram, GramCounts>,
}

impl CorpusStats {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label_index(&self, label: &Label) -> Option<usize> {
        self.labels.binary_search(label).ok()
    }

    /// `|D|`
    pub fn distortion_count(&self) -> usize {
        self.labels.len()
    }

    pub fn text_count(&self) -> usize {
        self.texts
    }

    pub fn gram_count(&self) -> usize {
        self.grams.len()
    }

    pub fn grams(&self) -> impl Iterator<Item = (&NGram, &GramCounts)> {
        self.grams.iter()
    }

    pub fn counts(&self, g: &NGram) -> Option<&GramCounts> {
        self.grams.get(g)
    }

    /// `G_g`
    pub fn corpus_freq(&self, g: &NGram) -> u64 {
        self.grams.get(g).map_or(0, |c| c.total)
    }

    /// `UG_g`
    pub fn corpus_unique(&self, g: &NGram) -> u64 {
        self.grams.get(g).map_or(0, |c| c.unique)
    }

    /// `D_d`
    pub fn label_texts(&self, d: &Label) -> u64 {
        self.label_index(d).map_or(0, |i| self.label_texts[i])
    }

    /// `G_d`
    pub fn label_total(&self, d: &Label) -> u64 {
        self.label_index(d).map_or(0, |i| self.label_total[i])
    }

    /// `sum_g UF_gd`
    pub fn label_unique_total(&self, d: &Label) -> u64 {
        self.label_index(d).map_or(0, |i| self.label_unique_total[i])
    }

    /// `F_gd`
    pub fn freq(&self, g: &NGram, d: &Label) -> u64 {
        self.lookup(g, d).map_or(0, |c| c.freq)
    }

    /// `UF_gd`
    pub fn unique(&self, g: &NGram, d: &Label) -> u64 {
        self.lookup(g, d).map_or(0, |c| c.unique)
    }

    /// `D_g`: classes with `UF_gd > 0`.
    pub fn gram_distortions(&self, g: &NGram) -> usize {
        self.grams.get(g).map_or(0, |c| c.by_label.iter().filter(|x| x.unique > 0).count())
    }

    fn lookup(&self, g: &NGram, d: &Label) -> Option<&LabelCount> {
        let i = self.label_index(d)?;
        self.grams.get(g)?.label(i)
    }

    /// Statistics of the same corpus for a lower maximum order.
    pub fn restrict(&self, order: usize) -> Result<CorpusStats> {
        check_order(order)?;
        if order > self.order {
            return Err(Error::InvalidConfig(format!("cannot raise order {} to {order}", self.order)));
        }
        let grams: HashMap<_, _> =
            self.grams.iter().filter(|(g, _)| g.len() <= order).map(|(g, c)| (g.clone(), c.clone())).collect();
        let (label_total, label_unique_total) = label_totals(&grams, self.labels.len());
        Ok(CorpusStats {
            order,
            labels: self.labels.clone(),
            texts: self.texts,
            label_texts: self.label_texts.clone(),
            label_total,
            label_unique_total,
            grams,
        })
    }
}

fn label_totals(grams: &HashMap<NGram, GramCounts>, labels: usize) -> (Vec<u64>, Vec<u64>) {
    let mut total = vec![0; labels];
    let mut unique = vec![0; labels];
    for c in grams.values() {
        for lc in &c.by_label {
            total[lc.label] += lc.freq;
            unique[lc.label] += lc.unique;
        }
    }
    (total, unique)
}

/// Enumerates every N-gram of order `1..=order` within each sentence.
pub fn sentence_ngrams(text: &str, order: usize) -> HashMap<Vec<String>, u64> {
    let tokenized = tokenize(text);
    let mut counts: HashMap<Vec<String>, u64> = HashMap::new();
    for sentence in &tokenized.sentences {
        let words = &tokenized.tokens[sentence.clone()];
        for n in 1..=order.min(words.len()) {
            for window in words.windows(n) {
                let key = window.iter().map(|t| t.text.clone()).collect();
                *counts.entry(key).or_default() += 1;
            }
        }
    }
    counts
}

/// Counts N-grams up to `order` over a training set.
///
/// A text labeled with several classes contributes its full counts to each;
/// unlabeled texts only contribute to `G_g` and `UG_g`.
pub fn collect_stats<'a, I>(train: I, order: usize) -> Result<CorpusStats>
where
    I: IntoIterator<Item = &'a LabeledText>,
{
    check_order(order)?;
    let train: Vec<&LabeledText> = train.into_iter().collect();
    if train.is_empty() {
        return Err(Error::InvalidCorpus("empty training set".into()));
    }
    let mut labels: Vec<Label> = train.iter().flat_map(|t| t.labels.iter().cloned()).collect();
    labels.sort();
    labels.dedup();
    let mut label_texts = vec![0u64; labels.len()];
    for t in &train {
        for l in &t.labels {
            label_texts[labels.binary_search(l).expect("collected")] += 1;
        }
    }

    let grams = train
        .par_iter()
        .fold(HashMap::<NGram, GramCounts>::new, |mut acc, text| {
            let idx: Vec<usize> =
                text.labels.iter().map(|l| labels.binary_search(l).expect("collected")).collect();
            for (tokens, count) in sentence_ngrams(&text.text, order) {
                let by_label = idx.iter().map(|&label| LabelCount { label, freq: count, unique: 1 }).collect();
                let local = GramCounts { total: count, unique: 1, by_label };
                acc.entry(NGram::from_tokens_unchecked(tokens)).or_default().absorb(&local);
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            let (mut big, small) = if a.len() >= b.len() { (a, b) } else { (b, std::mem::take(&mut a)) };
            for (g, c) in small {
                big.entry(g).or_default().absorb(&c);
            }
            big
        });

    let (label_total, label_unique_total) = label_totals(&grams, labels.len());
    Ok(CorpusStats { order, labels, texts: train.len(), label_texts, label_total, label_unique_total, grams })
}

/// Raw selection score of `g` for class `d`; zero when they never co-occur.
pub fn score(stats: &CorpusStats, g: &NGram, d: &Label, metric: SelectionMetric) -> f64 {
    let (Some(counts), Some(label)) = (stats.counts(g), stats.label_index(d)) else {
        return 0.0;
    };
    score_counts(stats, counts, label, metric, std::f64::consts::E)
}

fn score_counts(stats: &CorpusStats, counts: &GramCounts, label: usize, metric: SelectionMetric, log_base: f64) -> f64 {
    let Some(lc) = counts.label(label) else {
        return 0.0;
    };
    let uf = lc.unique as f64;
    let fnorm = || lc.freq as f64 / counts.total as f64;
    match metric {
        SelectionMetric::F => lc.freq as f64,
        SelectionMetric::Uf => uf,
        SelectionMetric::Fn => fnorm(),
        SelectionMetric::Ufn => uf / counts.unique as f64,
        SelectionMetric::TfIdf => {
            let dg = counts.by_label.iter().filter(|c| c.unique > 0).count() as f64;
            let idf = (stats.distortion_count() as f64 / dg).ln() / log_base.ln();
            fnorm() * idf
        }
        SelectionMetric::Fcr => uf / counts.unique_over_labels() as f64,
        SelectionMetric::Cfr => uf / stats.label_unique_total[label] as f64,
        SelectionMetric::Mr => {
            uf * uf / (counts.unique_over_labels() as f64 * stats.label_unique_total[label] as f64)
        }
        SelectionMetric::Nlmi => uf * uf / (stats.label_texts[label] as f64 * counts.unique as f64),
    }
}

/// Normalized scores of every candidate, per class, sorted by descending
/// weight. Building a model for any `IT` is then a prefix cut.
#[derive(Debug, Clone)]
pub struct FeatureScores {
    labels: Vec<Label>,
    /// Per label: `(ngram, normalized score)` in descending score order.
    ranked: Vec<Vec<(NGram, f64)>>,
    meta: ModelMeta,
}

pub fn score_features(
    stats: &CorpusStats,
    metric: SelectionMetric,
    normalization: Normalization,
    log_base: f64,
) -> FeatureScores {
    let mut raw: Vec<Vec<(NGram, f64)>> = vec![Vec::new(); stats.labels.len()];
    for (g, counts) in &stats.grams {
        for lc in &counts.by_label {
            if lc.unique > 0 {
                raw[lc.label].push((g.clone(), score_counts(stats, counts, lc.label, metric, log_base)));
            }
        }
    }
    let class_max = |v: &Vec<(NGram, f64)>| v.iter().map(|x| x.1).fold(0.0, f64::max);
    let global = raw.iter().map(class_max).fold(0.0, f64::max);
    let ranked = raw
        .into_iter()
        .map(|mut entries| {
            let max = match normalization {
                Normalization::PerClass => class_max(&entries),
                Normalization::Global => global,
            };
            if max > 0.0 {
                for e in &mut entries {
                    e.1 /= max;
                }
            }
            entries.retain(|e| e.1 > 0.0);
            entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            entries
        })
        .collect();
    FeatureScores {
        labels: stats.labels.clone(),
        ranked,
        meta: ModelMeta {
            learned_order: Some(stats.order),
            metric: Some(metric),
            inclusion_threshold: None,
            created_by: Some(concat!("heterarch ", env!("CARGO_PKG_VERSION")).to_owned()),
        },
    }
}

impl FeatureScores {
    /// Entries of class `label` kept at threshold `it`.
    pub fn kept(&self, label: usize, it: u32) -> &[(NGram, f64)] {
        let cut = it as f64 / 100.0;
        let entries = &self.ranked[label];
        let n = entries.partition_point(|e| e.1 > cut);
        &entries[..n]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn model(&self, it: u32) -> Model {
        let dictionaries = self
            .labels
            .iter()
            .enumerate()
            .map(|(i, label)| {
                let kept = self.kept(i, it).iter().cloned();
                Dictionary::with_entries(label.clone(), kept).expect("normalized weights lie in (0, 1]")
            })
            .collect();
        let meta = ModelMeta { inclusion_threshold: Some(it), ..self.meta.clone() };
        let model = Model::new(dictionaries, meta).expect("labels are unique");
        for l in model.empty_dictionaries() {
            log::warn!("no features selected for {l}");
        }
        model
    }
}

/// Learns a model from precomputed statistics.
pub fn build_model(stats: &CorpusStats, cfg: &LearningConfig) -> Result<Model> {
    cfg.validate()?;
    let stats = if cfg.order < stats.order { std::borrow::Cow::Owned(stats.restrict(cfg.order)?) } else {
        std::borrow::Cow::Borrowed(stats)
    };
    if stats.order != cfg.order {
        return Err(Error::InvalidConfig(format!(
            "statistics collected with NM={} but config asks for NM={}",
            stats.order, cfg.order
        )));
    }
    Ok(score_features(&stats, cfg.metric, cfg.normalization, cfg.tfidf_log_base).model(cfg.inclusion_threshold))
}

/// Collects statistics and builds a model in one step.
pub fn learn<'a, I>(train: I, cfg: &LearningConfig) -> Result<Model>
where
    I: IntoIterator<Item = &'a LabeledText>,
{
    cfg.validate()?;
    build_model(&collect_stats(train, cfg.order)?, cfg)
}

/// Summary rows for reporting: per class `(label, D_d, G_d, sum_g UF_gd, associated N-grams)`.
pub fn stats_summary(stats: &CorpusStats) -> Vec<(Label, u64, u64, u64, usize)> {
    let mut associated: BTreeMap<usize, usize> = BTreeMap::new();
    for c in stats.grams.values() {
        for lc in &c.by_label {
            *associated.entry(lc.label).or_default() += 1;
        }
    }
    stats
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            (l.clone(), stats.label_texts[i], stats.label_total[i], stats.label_unique_total[i], associated.get(&i).copied().unwrap_or(0))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(s: &str) -> Label {
        Label::new(s).unwrap()
    }

    fn g(s: &str) -> NGram {
        NGram::parse(s).unwrap()
    }

    #[test]
    fn metric_names_round_trip() {
        for m in SelectionMetric::ALL {
            assert_eq!(m.name().parse::<SelectionMetric>().unwrap(), m);
        }
        assert_eq!("tf-idf".parse::<SelectionMetric>().unwrap(), SelectionMetric::TfIdf);
        assert!("XYZ".parse::<SelectionMetric>().is_err());
    }

    #[test]
    fn single_text_counts() {
        let corpus = [LabeledText::new(0, "bad thing", [l("Labeling")])];
        let s = collect_stats(&corpus, 2).unwrap();
        assert_eq!(s.corpus_freq(&g("bad")), 1);
        assert_eq!(s.corpus_freq(&g("bad thing")), 1);
        assert_eq!(s.unique(&g("bad thing"), &l("Labeling")), 1);
        assert_eq!(s.gram_distortions(&g("bad thing")), 1);
        assert_eq!(s.gram_count(), 3);
    }

    #[test]
    fn repeated_token_counted_once_per_text() {
        let corpus = [LabeledText::new(0, "bad bad", [l("D")])];
        let s = collect_stats(&corpus, 1).unwrap();
        assert_eq!(s.freq(&g("bad"), &l("D")), 2);
        assert_eq!(s.unique(&g("bad"), &l("D")), 1);
        assert_eq!(s.corpus_unique(&g("bad")), 1);
    }

    #[test]
    fn ngrams_stay_inside_sentences() {
        let corpus = [LabeledText::new(0, "I failed. Everyone hates me.", [l("D")])];
        let s = collect_stats(&corpus, 2).unwrap();
        assert_eq!(s.corpus_freq(&g("failed everyone")), 0);
        assert_eq!(s.corpus_freq(&g("everyone hates")), 1);
    }

    #[test]
    fn unlabeled_texts_only_feed_corpus_counts() {
        let corpus = [LabeledText::new(0, "bad", [l("D")]), LabeledText::new(1, "bad", [])];
        let s = collect_stats(&corpus, 1).unwrap();
        assert_eq!(s.corpus_freq(&g("bad")), 2);
        assert_eq!(s.corpus_unique(&g("bad")), 2);
        assert_eq!(s.freq(&g("bad"), &l("D")), 1);
        assert_eq!(s.label_texts(&l("D")), 1);
    }

    #[test]
    fn order_bounds() {
        let corpus = [LabeledText::new(0, "x", [l("D")])];
        assert!(collect_stats(&corpus, 0).is_err());
        assert!(collect_stats(&corpus, 6).is_err());
        assert!(collect_stats(std::iter::empty(), 2).is_err());
    }

    #[test]
    fn tfidf_zero_when_gram_in_every_class() {
        let names = ["A", "B", "C"];
        let corpus: Vec<_> = names.iter().enumerate().map(|(i, n)| LabeledText::new(i, "same", [l(n)])).collect();
        let s = collect_stats(&corpus, 1).unwrap();
        for n in names {
            assert_eq!(score(&s, &g("same"), &l(n), SelectionMetric::TfIdf), 0.0);
        }
    }

    #[test]
    fn fcr_is_one_for_exclusive_gram() {
        let corpus = [LabeledText::new(0, "only here", [l("A")]), LabeledText::new(1, "elsewhere", [l("B")])];
        let s = collect_stats(&corpus, 1).unwrap();
        assert_eq!(score(&s, &g("only"), &l("A"), SelectionMetric::Fcr), 1.0);
    }

    #[test]
    fn normalization_and_threshold() {
        // UF-based scores 4, 2, 1 for class A.
        let mut corpus = Vec::new();
        for (i, text) in ["x y z", "x y", "x", "x"].iter().enumerate() {
            corpus.push(LabeledText::new(i, *text, [l("A")]));
        }
        let s = collect_stats(&corpus, 1).unwrap();
        let cfg = LearningConfig::new(1, SelectionMetric::Uf, 30).unwrap();
        let m = build_model(&s, &cfg).unwrap();
        let d = m.dictionary(&l("A")).unwrap();
        assert_eq!(d.get(&g("x")), Some(1.0));
        assert_eq!(d.get(&g("y")), Some(0.5));
        assert_eq!(d.get(&g("z")), None);
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn weight_exactly_at_threshold_is_excluded() {
        // UF scores 10 and 3: 0.3 sits exactly on IT=30.
        let mut corpus = Vec::new();
        for i in 0..10 {
            let text = if i < 3 { "top low" } else { "top" };
            corpus.push(LabeledText::new(i, text, [l("A")]));
        }
        let s = collect_stats(&corpus, 1).unwrap();
        let m = build_model(&s, &LearningConfig::new(1, SelectionMetric::Uf, 30).unwrap()).unwrap();
        assert_eq!(m.dictionary(&l("A")).unwrap().get(&g("low")), None);
        let m = build_model(&s, &LearningConfig::new(1, SelectionMetric::Uf, 20).unwrap()).unwrap();
        assert_eq!(m.dictionary(&l("A")).unwrap().get(&g("low")), Some(0.3));
    }

    #[test]
    fn ties_at_maximum_all_get_one() {
        let corpus = [LabeledText::new(0, "a b", [l("A")])];
        let s = collect_stats(&corpus, 1).unwrap();
        let m = build_model(&s, &LearningConfig::new(1, SelectionMetric::Uf, 90).unwrap()).unwrap();
        let d = m.dictionary(&l("A")).unwrap();
        assert_eq!(d.get(&g("a")), Some(1.0));
        assert_eq!(d.get(&g("b")), Some(1.0));
    }

    #[test]
    fn config_validation() {
        assert!(LearningConfig::new(0, SelectionMetric::F, 0).is_err());
        assert!(LearningConfig::new(2, SelectionMetric::F, 15).is_err());
        assert!(LearningConfig::new(2, SelectionMetric::F, 100).is_err());
        assert!(LearningConfig::new(5, SelectionMetric::F, 90).is_ok());
    }

    #[test]
    fn restrict_matches_direct_collection() {
        let corpus = [
            LabeledText::new(0, "I am a total failure. Nobody likes me.", [l("A"), l("B")]),
            LabeledText::new(1, "I am never good enough", [l("B")]),
            LabeledText::new(2, "the weather is nice", []),
        ];
        let five = collect_stats(&corpus, 5).unwrap();
        for n in 1..=5 {
            assert_eq!(five.restrict(n).unwrap(), collect_stats(&corpus, n).unwrap());
        }
        assert!(collect_stats(&corpus, 2).unwrap().restrict(3).is_err());
    }

    #[test]
    fn empty_class_dictionary_when_all_scores_zero() {
        // Every gram of A also occurs in B, so TF-IDF is zero everywhere for A.
        let corpus = [LabeledText::new(0, "same", [l("A"), l("B")])];
        let s = collect_stats(&corpus, 1).unwrap();
        let m = build_model(&s, &LearningConfig::new(1, SelectionMetric::TfIdf, 0).unwrap()).unwrap();
        assert_eq!(m.empty_dictionaries().len(), 2);
    }
}
