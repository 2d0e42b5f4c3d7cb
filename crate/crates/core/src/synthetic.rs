//! Deterministic synthetic labeled corpora for benchmarks and smoke runs.
//!
//! Each class owns a handful of cue phrases built from a shared vocabulary,
//! so single words are ambiguous across classes while longer N-grams are
//! not. Texts are filler sentences with cue phrases of their labels spliced
//! in, plus occasional cues of unrelated classes as noise.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::LabeledText;
use crate::label::Label;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub texts: usize,
    pub labels: Vec<Label>,
    pub seed: u64,
    pub vocabulary: usize,
    pub cues_per_label: usize,
    /// Probability of a text having no label.
    pub none_rate: f64,
    /// Probability of a labeled text carrying a second label.
    pub secondary_rate: f64,
    /// Probability of splicing in a cue from an unrelated class.
    pub noise: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            texts: 2530,
            labels: Label::canonical(),
            seed: 7,
            vocabulary: 400,
            cues_per_label: 12,
            none_rate: 0.15,
            secondary_rate: 0.2,
            noise: 0.25,
        }
    }
}

const ONSETS: [&str; 12] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

fn word(rng: &mut ChaCha8Rng) -> String {
    let syllables = rng.gen_range(1..=3);
    (0..syllables)
        .map(|_| format!("{}{}", ONSETS.choose(rng).unwrap(), VOWELS.choose(rng).unwrap()))
        .collect()
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

pub fn generate(spec: &SyntheticSpec) -> Vec<LabeledText> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut vocab: Vec<String> = Vec::with_capacity(spec.vocabulary);
    while vocab.len() < spec.vocabulary.max(1) {
        let w = word(&mut rng);
        if !vocab.contains(&w) {
            vocab.push(w);
        }
    }
    // Zipf-like filler: low indices are far more common.
    let filler = |rng: &mut ChaCha8Rng| -> String {
        let u: f64 = rng.gen();
        vocab[((u * u * u) * vocab.len() as f64) as usize % vocab.len()].clone()
    };
    let cues: Vec<Vec<Vec<String>>> = spec
        .labels
        .iter()
        .map(|_| {
            (0..spec.cues_per_label)
                .map(|_| {
                    let n = rng.gen_range(1..=4);
                    (0..n).map(|_| vocab[rng.gen_range(0..vocab.len())].clone()).collect()
                })
                .collect()
        })
        .collect();

    (0..spec.texts)
        .map(|id| {
            let mut labels = Vec::new();
            if !spec.labels.is_empty() && !rng.gen_bool(spec.none_rate) {
                labels.push(rng.gen_range(0..spec.labels.len()));
                if spec.labels.len() > 1 && rng.gen_bool(spec.secondary_rate) {
                    let second = rng.gen_range(0..spec.labels.len());
                    if second != labels[0] {
                        labels.push(second);
                    }
                }
            }
            let mut spliced: Vec<&Vec<String>> = labels.iter().map(|&j| cues[j].choose(&mut rng).unwrap()).collect();
            if !spec.labels.is_empty() && rng.gen_bool(spec.noise) {
                spliced.push(cues[rng.gen_range(0..spec.labels.len())].choose(&mut rng).unwrap());
            }
            let sentences = rng.gen_range(1..=3).max(spliced.len().div_ceil(2));
            let mut body: Vec<Vec<String>> =
                (0..sentences).map(|_| (0..rng.gen_range(3..=9)).map(|_| filler(&mut rng)).collect()).collect();
            for cue in spliced {
                let s = rng.gen_range(0..body.len());
                let at = rng.gen_range(0..=body[s].len());
                body[s].splice(at..at, cue.iter().cloned());
            }
            let text = body
                .iter()
                .map(|s| format!("{}{}", capitalize(&s.join(" ")), [".", ".", "!", "?"].choose(&mut rng).unwrap()))
                .collect::<Vec<_>>()
                .join(" ");
            LabeledText::new(id, text, labels.into_iter().map(|j| spec.labels[j].clone()))
        })
        .collect()
}
