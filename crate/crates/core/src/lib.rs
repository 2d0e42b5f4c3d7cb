//! Interpretable multi-label text classification with weighted N-gram
//! dictionaries.
//!
//! A model holds one dictionary of weighted N-grams per class. Learning
//! scores every N-gram of a labeled corpus with a selection metric and keeps
//! the best-scoring ones; recognition scans a text from the longest N-gram
//! order down, letting a matched N-gram claim its tokens so that shorter
//! N-grams inside it are ignored. Every decision can be traced back to the
//! matched text spans.

pub mod convkernel;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod label;
pub mod learning;
pub mod model;
pub mod recognizer;
pub mod render;
pub mod synthetic;
pub mod text;

pub use corpus::{load_dataset, make_splits, ColumnMap, LabeledText, SplitPlan};
pub use error::{Error, Result};
pub use eval::{emit_report, grid_search, run_protocol, EvalReport, GridAxes, GridCell, GridReport};
pub use label::{Label, CANONICAL_LABELS};
pub use learning::{build_model, collect_stats, learn, CorpusStats, LearningConfig, SelectionMetric};
pub use model::{diff_models, load_model, save_model, Dictionary, Model, ModelDiff, NGram};
pub use recognizer::{highlight, recognize, Backend, Engine, Matcher, RecognitionConfig, RecognitionResult};
pub use text::{tokenize, Span, TokenizedText};
