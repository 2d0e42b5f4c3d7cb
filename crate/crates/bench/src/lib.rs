//! Shared fixtures for the benchmarks.

use heterarch::synthetic::{generate, SyntheticSpec};
use heterarch::{learn, LabeledText, LearningConfig, Model, SelectionMetric, SplitPlan};

/// A corpus the size of the field dataset.
pub fn corpus() -> Vec<LabeledText> {
    generate(&SyntheticSpec::default())
}

pub fn train_split(corpus: &[LabeledText]) -> Vec<&LabeledText> {
    SplitPlan::new(corpus.len(), 0).train.iter().map(|&i| &corpus[i]).collect()
}

/// The recommended configuration learned on the first training split.
pub fn model(corpus: &[LabeledText], order: usize) -> Model {
    let cfg = LearningConfig::new(order, SelectionMetric::Fcr, 0).expect("valid config");
    learn(train_split(corpus), &cfg).expect("learnable corpus")
}
