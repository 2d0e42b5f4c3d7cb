#![allow(dead_code)]

use std::collections::BTreeMap;

use heterarch::model::ModelMeta;
use heterarch::{Dictionary, Label, LabeledText, Model, NGram, RecognitionConfig, TokenizedText};
use proptest::prelude::*;

pub const VOCAB: [&str; 8] = ["bad", "thing", "not", "very", "ok", "sad", "day", "me"];

pub fn label(i: usize) -> Label {
    Label::new(&format!("class{i}")).unwrap()
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next().map(|f| f.to_ascii_uppercase().to_string() + c.as_str()).unwrap_or_default()
}

/// Sentences of vocabulary indices rendered as text: capitalized sentence
/// starts, terminal punctuation, occasional commas.
pub fn render(sentences: &[Vec<usize>]) -> String {
    sentences
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| {
            let words: Vec<String> = s
                .iter()
                .enumerate()
                .map(|(k, &w)| if k == 0 { capitalize(VOCAB[w]) } else { VOCAB[w].to_string() })
                .collect();
            format!("{}.", words.join(" "))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Text of at most `max_tokens` tokens in 1..=3 sentences.
pub fn text(max_tokens: usize) -> impl Strategy<Value = String> {
    (1usize..=3)
        .prop_flat_map(move |k| prop::collection::vec(prop::collection::vec(0..VOCAB.len(), 0..=max_tokens / k), k))
        .prop_map(|s| render(&s))
}

pub fn ngram(max_order: usize) -> impl Strategy<Value = NGram> {
    prop::collection::vec(0..VOCAB.len(), 1..=max_order).prop_map(|ids| NGram::new(ids.into_iter().map(|i| VOCAB[i])).unwrap())
}

/// Weights on a 1/1000 grid in (0, 1].
pub fn weight() -> impl Strategy<Value = f64> {
    (1u32..=1000).prop_map(|w| w as f64 / 1000.0)
}

pub fn model(classes: usize, max_entries: usize, max_order: usize) -> impl Strategy<Value = Model> {
    prop::collection::vec((0..classes, ngram(max_order), weight()), 0..=max_entries).prop_map(move |entries| {
        let mut dicts: BTreeMap<usize, Dictionary> = (0..classes).map(|j| (j, Dictionary::new(label(j)))).collect();
        for (j, g, w) in entries {
            dicts.get_mut(&j).unwrap().insert(g, w).unwrap();
        }
        Model::new(dicts.into_values().collect(), ModelMeta::default()).unwrap()
    })
}

pub fn recognition_config() -> impl Strategy<Value = RecognitionConfig> {
    (0u32..=9, any::<bool>(), any::<bool>(), any::<bool>()).prop_map(|(dt, ls, weighted, cross)| RecognitionConfig {
        detection_threshold: dt as f64 * 10.0,
        log_scaling: ls,
        weighted,
        cross_sentence: cross,
    })
}

pub fn corpus(classes: usize, max_texts: usize) -> impl Strategy<Value = Vec<LabeledText>> {
    prop::collection::vec((text(12), prop::collection::btree_set(0..classes, 0..=2)), 1..=max_texts).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(id, (t, ls))| LabeledText::new(id, t, ls.into_iter().map(label)))
            .collect()
    })
}

/// One credited match: `(class index, first token, n, weight)`.
pub type OracleMatch = (usize, usize, usize, f64);

/// Line-by-line simulation of the masked scan over plain token strings.
pub fn oracle(text: &TokenizedText, model: &Model, cfg: &RecognitionConfig) -> (Vec<f64>, Vec<OracleMatch>) {
    let s: Vec<&str> = text.token_texts();
    let sentence = text.sentence_ids();
    let l = s.len();
    let k = model.dictionaries().len();
    let mut c = vec![0.0; k];
    let mut matches = Vec::new();
    let mut m = vec![1u8; l];
    let nm = model.max_order();
    let mut n = nm;
    while n >= 1 {
        if n <= l {
            for i in 0..=(l - n) {
                if (i..i + n).any(|p| m[p] == 0) {
                    continue;
                }
                if !cfg.cross_sentence && (i..i + n).any(|p| sentence[p] != sentence[i]) {
                    continue;
                }
                let g = NGram::new(s[i..i + n].iter().copied()).unwrap();
                let mut found = false;
                for (j, dict) in model.dictionaries().iter().enumerate() {
                    if let Some(h) = dict.get(&g) {
                        let h = if cfg.weighted { h } else { 1.0 };
                        c[j] += n as f64 * h;
                        matches.push((j, i, n, h));
                        found = true;
                    }
                }
                if found {
                    m[i..i + n].fill(0);
                }
            }
        }
        n -= 1;
    }
    (c, matches)
}

pub fn result_matches(r: &heterarch::RecognitionResult) -> Vec<OracleMatch> {
    r.matches
        .iter()
        .map(|m| (r.labels.iter().position(|l| l == &m.label).unwrap(), m.tokens.start, m.tokens.len(), m.weight))
        .collect()
}

pub mod checks {
    use std::collections::BTreeSet;

    use heterarch::convkernel::KernelBank;
    use heterarch::learning::{score, score_features, Normalization, SelectionMetric};
    use heterarch::{build_model, collect_stats, tokenize, LabeledText, LearningConfig, Matcher, Model, RecognitionConfig};
    use proptest::prelude::*;

    pub fn metric_identities(corpus: &[LabeledText]) -> Result<(), TestCaseError> {
        let stats = collect_stats(corpus, 3).unwrap();
        for (g, counts) in stats.grams() {
            prop_assert!(counts.unique <= counts.total);
            let mut fcr_sum = 0.0;
            for lc in &counts.by_label {
                let d = &stats.labels()[lc.label];
                prop_assert!(lc.unique <= lc.freq && lc.unique <= counts.unique);
                let fcr = score(&stats, g, d, SelectionMetric::Fcr);
                let cfr = score(&stats, g, d, SelectionMetric::Cfr);
                let mr = score(&stats, g, d, SelectionMetric::Mr);
                let nlmi = score(&stats, g, d, SelectionMetric::Nlmi);
                prop_assert!(fcr > 0.0 && fcr <= 1.0 && cfr > 0.0 && cfr <= 1.0);
                prop_assert!((mr - fcr * cfr).abs() <= 1e-12, "MR {} vs FCR*CFR {}", mr, fcr * cfr);
                prop_assert!(nlmi > 0.0 && nlmi <= 1.0);
                fcr_sum += fcr;
            }
            if !counts.by_label.is_empty() {
                prop_assert!((fcr_sum - 1.0).abs() <= 1e-12);
                prop_assert!(stats.gram_distortions(g) <= stats.distortion_count());
            }
        }
        for d in stats.labels().iter().filter(|d| stats.label_unique_total(d) > 0) {
            let cfr_sum: f64 = stats
                .grams()
                .filter(|(_, c)| c.by_label.iter().any(|lc| &stats.labels()[lc.label] == d))
                .map(|(g, _)| score(&stats, g, d, SelectionMetric::Cfr))
                .sum();
            prop_assert!((cfr_sum - 1.0).abs() <= 1e-12);
            let f_sum: u64 = stats.grams().map(|(g, _)| stats.freq(g, d)).sum();
            prop_assert_eq!(f_sum, stats.label_total(d));
        }
        Ok(())
    }

    /// Raising IT keeps a subset with unchanged weights; max weight stays 1.
    pub fn it_monotonic(corpus: &[LabeledText], order: usize, metric: SelectionMetric) -> Result<(), TestCaseError> {
        let stats = collect_stats(corpus, order).unwrap();
        let mut prev: Option<Model> = None;
        for it in (0..=90).step_by(10) {
            let model = build_model(&stats, &LearningConfig::new(order, metric, it).unwrap()).unwrap();
            for d in model.dictionaries().iter().filter(|d| !d.is_empty()) {
                let max = d.entries().map(|e| e.1).fold(0.0, f64::max);
                prop_assert_eq!(max, 1.0);
                for (_, w) in d.entries() {
                    prop_assert!(w > it as f64 / 100.0 && w <= 1.0);
                }
            }
            if let Some(p) = &prev {
                for d in model.dictionaries() {
                    let lower = p.dictionary(&d.label).unwrap();
                    for (g, w) in d.entries() {
                        prop_assert_eq!(lower.get(g), Some(w));
                    }
                }
            }
            prev = Some(model);
        }
        Ok(())
    }

    fn sorted_weights(model: &Model) -> Vec<Vec<(String, f64)>> {
        model
            .dictionaries()
            .iter()
            .map(|d| {
                let mut v = d.ranked();
                v.sort_by(|a, b| a.0.cmp(&b.0));
                v
            })
            .collect()
    }

    pub fn tfidf_base_cancels(corpus: &[LabeledText], base: f64) -> Result<(), TestCaseError> {
        let stats = collect_stats(corpus, 2).unwrap();
        let a = score_features(&stats, SelectionMetric::TfIdf, Normalization::PerClass, std::f64::consts::E).model(0);
        let b = score_features(&stats, SelectionMetric::TfIdf, Normalization::PerClass, base).model(0);
        let (wa, wb) = (sorted_weights(&a), sorted_weights(&b));
        prop_assert_eq!(wa.len(), wb.len());
        for (da, db) in wa.iter().zip(&wb) {
            prop_assert_eq!(da.len(), db.len());
            for (x, y) in da.iter().zip(db) {
                prop_assert_eq!(&x.0, &y.0);
                prop_assert!((x.1 - y.1).abs() <= 1e-12, "{} vs {}", x.1, y.1);
            }
        }
        Ok(())
    }

    pub fn dt_monotonic(text: &str, model: &Model, cfg: &RecognitionConfig) -> Result<(), TestCaseError> {
        let mut r = Matcher::new(model).recognize(&tokenize(text), cfg);
        let mut prev: Option<Vec<bool>> = None;
        for dt in (0..=100).step_by(5) {
            r.redecide(dt as f64);
            if let Some(p) = &prev {
                for (now, before) in r.decisions.iter().zip(p) {
                    prop_assert!(!now || *before);
                }
            }
            prev = Some(r.decisions.clone());
        }
        Ok(())
    }

    pub fn ls_preserves_ranking(text: &str, model: &Model, cfg: &RecognitionConfig) -> Result<(), TestCaseError> {
        let tok = tokenize(text);
        let mt = Matcher::new(model);
        let on = mt.recognize(&tok, &RecognitionConfig { log_scaling: true, ..*cfg });
        let off = mt.recognize(&tok, &RecognitionConfig { log_scaling: false, ..*cfg });
        for i in 0..on.scores.len() {
            for j in 0..on.scores.len() {
                if off.scores[i] < off.scores[j] {
                    prop_assert!(on.scores[i] <= on.scores[j]);
                    // strictly increasing below the clamp at C/l = 0.99
                    if off.scores[i] < 0.99 {
                        prop_assert!(on.scores[i] < on.scores[j]);
                    }
                }
                if off.scores[i] == off.scores[j] {
                    prop_assert_eq!(on.scores[i], on.scores[j]);
                }
            }
        }
        Ok(())
    }

    /// Claimed windows are disjoint; shorter entries inside a claimed window
    /// are never credited; unweighted linear scores stay within 1.
    pub fn mask_non_overlap(text: &str, model: &Model, cfg: &RecognitionConfig) -> Result<(), TestCaseError> {
        let tok = tokenize(text);
        let r = Matcher::new(model).recognize(&tok, cfg);
        let windows: BTreeSet<(usize, usize)> = r.matches.iter().map(|m| (m.tokens.start, m.tokens.end)).collect();
        let windows: Vec<_> = windows.into_iter().collect();
        for w in windows.windows(2) {
            prop_assert!(w[0].1 <= w[1].0, "{:?} overlaps {:?}", w[0], w[1]);
        }
        for m in &r.matches {
            prop_assert_eq!(m.ngram.len(), m.tokens.len());
        }
        let linear = Matcher::new(model).recognize(&tok, &RecognitionConfig { weighted: false, log_scaling: false, ..*cfg });
        for s in &linear.scores {
            prop_assert!(*s <= 1.0);
        }
        Ok(())
    }

    pub fn backends_agree(text: &str, model: &Model, cfg: &RecognitionConfig) -> Result<(), TestCaseError> {
        let tok = tokenize(text);
        prop_assert_eq!(KernelBank::new(model).recognize(&tok, cfg), Matcher::new(model).recognize(&tok, cfg));
        Ok(())
    }
}
