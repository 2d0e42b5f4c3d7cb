//! Recognition as a convolution of the one-hot text with inverse N-gram kernels.
//!
//! With `x_f` the one-hot vector of token `f` and `h_{g,p}` the one-hot vector
//! of the `p`-th token of N-gram `g`, the response at window start `i` is
//!
//! ```text
//! y_g(i) = sum_{p=1..n} <x_{i+p-1}, h_{g,p}>
//! ```
//!
//! and `g` fully matches at `i` iff `y_g(i) = n`. Kernels are stored reversed
//! so that a classical convolution walks the N-gram in reading order.
//!
//! One-hot inner products are evaluated as integer id comparisons, so `y` is
//! exact. Kernels are bucketed by length; within a bucket each kernel
//! position is a contiguous column of ids, scanned once per window.
//!
//! The plain counter `C_j = sum_n n * sum_i I_{j,n}(i)` ignores containment.
//! [`Masking::PriorityOnOrder`] (the default) replays the accepted indicators
//! through the same length-descending mask as [`crate::recognizer`], which
//! makes both backends produce identical counts and matches.

use std::collections::HashMap;

use crate::label::Label;
use crate::model::{Model, NGram};
use crate::recognizer::{finish, MatchSpan, RecognitionConfig, RecognitionResult, UNKNOWN};
use crate::text::TokenizedText;

/// Dense index over `S ∪ tokens(F_1..F_k)`.
#[derive(Debug, Clone, Default)]
pub struct TokenVocabulary {
    index: HashMap<String, u32>,
    tokens: Vec<String>,
}

impl TokenVocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Vocabulary of a text and a model; dictionary tokens come first.
    pub fn build(text: &TokenizedText, model: &Model) -> Self {
        let mut v = TokenVocabulary::new();
        for d in model.dictionaries() {
            for (g, _) in d.entries() {
                for t in g.tokens() {
                    v.intern(t);
                }
            }
        }
        for t in &text.tokens {
            v.intern(&t.text);
        }
        v
    }

    pub fn intern(&mut self, token: &str) -> u32 {
        if let Some(&i) = self.index.get(token) {
            return i;
        }
        let i = self.tokens.len() as u32;
        self.index.insert(token.to_owned(), i);
        self.tokens.push(token.to_owned());
        i
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, i: u32) -> &str {
        &self.tokens[i as usize]
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// The text matrix `X = (x_1 .. x_l)`, kept as the index of each column's single 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneHotText {
    indices: Vec<u32>,
    dim: usize,
}

impl OneHotText {
    /// Panics if a token of `text` is missing from `vocab`.
    pub fn new(text: &TokenizedText, vocab: &TokenVocabulary) -> Self {
        let indices = text.tokens.iter().map(|t| vocab.get(&t.text).expect("text token in vocabulary")).collect();
        OneHotText { indices, dim: vocab.len() }
    }

    pub fn from_indices(indices: Vec<u32>, dim: usize) -> Self {
        assert!(indices.iter().all(|&i| (i as usize) < dim));
        OneHotText { indices, dim }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    /// Materialized `x_f` (zero-based `f`).
    pub fn column(&self, f: usize) -> Vec<u8> {
        let mut x = vec![0; self.dim];
        x[self.indices[f] as usize] = 1;
        x
    }
}

/// `H_g` stored reversed: `reversed[q]` is the id of token `n - q` (1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Kernel {
    reversed: Vec<u32>,
}

impl Kernel {
    /// Kernel of an N-gram; panics if a token is missing from `vocab`.
    pub fn new(ngram: &NGram, vocab: &TokenVocabulary) -> Self {
        let mut reversed: Vec<u32> = ngram.tokens().iter().map(|t| vocab.get(t).expect("kernel token in vocabulary")).collect();
        reversed.reverse();
        Kernel { reversed }
    }

    pub fn from_reversed(reversed: Vec<u32>) -> Self {
        assert!(!reversed.is_empty());
        Kernel { reversed }
    }

    pub fn len(&self) -> usize {
        self.reversed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reversed.is_empty()
    }

    pub fn reversed(&self) -> &[u32] {
        &self.reversed
    }

    /// Materialized `h_{g,p}` (1-based `p`) over a vocabulary of size `dim`.
    pub fn position(&self, p: usize, dim: usize) -> Vec<u8> {
        let n = self.reversed.len();
        let mut h = vec![0; dim];
        h[self.reversed[n - p] as usize] = 1;
        h
    }
}

/// `y_g(i)` for zero-based `i = 0 ..= l - n`; empty when the kernel is longer than the text.
pub fn correlate(text: &OneHotText, kernel: &Kernel) -> Vec<u32> {
    let n = kernel.len();
    let x = text.indices();
    if n > x.len() {
        return Vec::new();
    }
    (0..=x.len() - n)
        .map(|i| {
            // inverse kernel: reversed[q] pairs with x[i + n - 1 - q]
            kernel.reversed.iter().enumerate().map(|(q, &k)| u32::from(x[i + n - 1 - q] == k)).sum()
        })
        .collect()
}

/// `I_g(i) = [y_g(i) = n]`
pub fn match_indicators(y: &[u32], n: usize) -> Vec<bool> {
    y.iter().map(|&v| v as usize == n).collect()
}

/// `I_{j,n}(i) = max_g I_g(i)` over same-length kernels of one class.
pub fn combine_indicators(per_kernel: &[Vec<bool>]) -> Vec<bool> {
    let len = per_kernel.iter().map(Vec::len).max().unwrap_or(0);
    (0..len).map(|i| per_kernel.iter().any(|v| v.get(i).copied().unwrap_or(false))).collect()
}

/// Whether the containment mask is applied when accumulating.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Masking {
    /// Honor an indicator only if its whole window is unclaimed, then claim it.
    #[default]
    PriorityOnOrder,
    /// Sum every indicator.
    None,
}

/// A set indicator `I_{j,n}(i) = 1`, with the matching kernel's weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub n: usize,
    pub start: usize,
    pub label: usize,
    pub weight: f64,
    pub ngram: u32,
}

/// Accumulates `C_j` from indicator hits sorted by descending `n`, then
/// ascending start, then ascending label. Returns the counts and the hits
/// that were credited.
pub fn accumulate(hits: &[Hit], length: usize, classes: usize, weighted: bool, masking: Masking) -> (Vec<f64>, Vec<Hit>) {
    let order = |h: &Hit| (usize::MAX - h.n, h.start, h.label);
    debug_assert!(hits.windows(2).all(|w| order(&w[0]) <= order(&w[1])));
    let mut raw = vec![0.0; classes];
    let mut accepted = Vec::new();
    let mut mask = vec![true; length];
    let mut k = 0;
    while k < hits.len() {
        let (n, start) = (hits[k].n, hits[k].start);
        let mut end = k;
        while end < hits.len() && hits[end].n == n && hits[end].start == start {
            end += 1;
        }
        let window = start..start + n;
        let free = masking == Masking::None || mask[window.clone()].iter().all(|&m| m);
        if free {
            for h in &hits[k..end] {
                raw[h.label] += n as f64 * if weighted { h.weight } else { 1.0 };
                accepted.push(*h);
            }
            if masking == Masking::PriorityOnOrder {
                mask[window].fill(false);
            }
        }
        k = end;
    }
    (raw, accepted)
}

#[derive(Debug, Clone)]
struct Bucket {
    n: usize,
    labels: Vec<u32>,
    weights: Vec<f64>,
    ngrams: Vec<u32>,
    /// `columns[q][k]` is `reversed[q]` of kernel `k`.
    columns: Vec<Vec<u32>>,
}

/// All kernels of a model, bucketed by length.
#[derive(Debug, Clone)]
pub struct KernelBank {
    labels: Vec<Label>,
    vocab: TokenVocabulary,
    ngrams: Vec<NGram>,
    /// Descending length.
    buckets: Vec<Bucket>,
}

impl KernelBank {
    pub fn new(model: &Model) -> Self {
        let mut vocab = TokenVocabulary::new();
        let mut ngram_ids: HashMap<&NGram, u32> = HashMap::new();
        let mut ngrams = Vec::new();
        // (label, weight, ngram id, reversed token ids) per kernel length
        type Entry = (u32, f64, u32, Vec<u32>);
        let mut by_len: HashMap<usize, Vec<Entry>> = HashMap::new();
        for (j, d) in model.dictionaries().iter().enumerate() {
            for (g, w) in d.entries() {
                let id = *ngram_ids.entry(g).or_insert_with(|| {
                    ngrams.push(g.clone());
                    ngrams.len() as u32 - 1
                });
                let mut reversed: Vec<u32> = g.tokens().iter().map(|t| vocab.intern(t)).collect();
                reversed.reverse();
                by_len.entry(g.len()).or_default().push((j as u32, w, id, reversed));
            }
        }
        let mut buckets: Vec<Bucket> = by_len
            .into_iter()
            .map(|(n, mut kernels)| {
                kernels.sort_by_key(|k| (k.0, k.2));
                let mut columns = vec![Vec::with_capacity(kernels.len()); n];
                for k in &kernels {
                    for (q, &id) in k.3.iter().enumerate() {
                        columns[q].push(id);
                    }
                }
                Bucket {
                    n,
                    labels: kernels.iter().map(|k| k.0).collect(),
                    weights: kernels.iter().map(|k| k.1).collect(),
                    ngrams: kernels.iter().map(|k| k.2).collect(),
                    columns,
                }
            })
            .collect();
        buckets.sort_by_key(|b| std::cmp::Reverse(b.n));
        KernelBank { labels: model.labels(), vocab, ngrams, buckets }
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn kernel_count(&self) -> usize {
        self.buckets.iter().map(|b| b.labels.len()).sum()
    }

    fn encode(&self, text: &TokenizedText) -> Vec<u32> {
        text.tokens.iter().map(|t| self.vocab.get(&t.text).unwrap_or(UNKNOWN)).collect()
    }

    /// All set indicators, ordered for [`accumulate`].
    pub fn indicators(&self, text: &TokenizedText, cross_sentence: bool) -> Vec<Hit> {
        let ids = self.encode(text);
        let sentences = text.sentence_ids();
        let l = ids.len();
        let mut hits = Vec::new();
        let mut acc: Vec<u16> = Vec::new();
        for bucket in &self.buckets {
            let n = bucket.n;
            if n > l {
                continue;
            }
            acc.resize(bucket.labels.len(), 0);
            for i in 0..=l - n {
                if !cross_sentence && sentences[i] != sentences[i + n - 1] {
                    continue;
                }
                let window = &ids[i..i + n];
                // an id outside the kernel vocabulary keeps every y_g(i) below n
                if window.contains(&UNKNOWN) {
                    continue;
                }
                acc.fill(0);
                for (q, column) in bucket.columns.iter().enumerate() {
                    let x = window[n - 1 - q];
                    for (a, &c) in acc.iter_mut().zip(column) {
                        *a += u16::from(c == x);
                    }
                }
                for (k, &y) in acc.iter().enumerate() {
                    if y as usize == n {
                        hits.push(Hit {
                            n,
                            start: i,
                            label: bucket.labels[k] as usize,
                            weight: bucket.weights[k],
                            ngram: bucket.ngrams[k],
                        });
                    }
                }
            }
        }
        hits
    }

    pub fn recognize(&self, text: &TokenizedText, cfg: &RecognitionConfig) -> RecognitionResult {
        self.recognize_with(text, cfg, Masking::PriorityOnOrder)
    }

    pub fn recognize_with(&self, text: &TokenizedText, cfg: &RecognitionConfig, masking: Masking) -> RecognitionResult {
        let hits = self.indicators(text, cfg.cross_sentence);
        let (raw, accepted) = accumulate(&hits, text.len(), self.labels.len(), cfg.weighted, masking);
        let matches = accepted
            .iter()
            .map(|h| {
                let weight = if cfg.weighted { h.weight } else { 1.0 };
                MatchSpan {
                    label: self.labels[h.label].clone(),
                    ngram: self.ngrams[h.ngram as usize].clone(),
                    tokens: h.start..h.start + h.n,
                    chars: text.char_span(h.start..h.start + h.n),
                    weight,
                    contribution: h.n as f64 * weight,
                }
            })
            .collect();
        finish(self.labels.clone(), raw, matches, text.len(), cfg)
    }
}
