//! The interpretable model: one weighted N-gram dictionary per class.
//!
//! The containment heterarchy between N-grams of different orders is not
//! stored. It is applied at match time by the recognizer's length-descending
//! masked scan, so a model is fully described by its entry sets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;
use crate::learning::SelectionMetric;
use crate::text::{is_normalized_token, tokenize_flat};

pub const DICTIONARY_EXT: &str = "tsv";
pub const METADATA_FILE: &str = "metadata.txt";
pub const FORMAT_VERSION: u32 = 1;
/// Entries lighter than this are refused when saving.
pub const MIN_SAVED_WEIGHT: f64 = 1e-6;
/// Weight differences at or below this are not reported by [`diff_models`].
pub const DIFF_EPSILON: f64 = 1e-9;

/// A token sequence used as a matching feature.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct NGram(Vec<String>);

impl NGram {
    pub fn new<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.is_empty() {
            return Err(Error::InvalidNGram("empty".into()));
        }
        if let Some(bad) = tokens.iter().find(|t| !is_normalized_token(t)) {
            return Err(Error::InvalidNGram(format!("bad token {bad:?}")));
        }
        Ok(NGram(tokens))
    }

    /// Parses space-joined normalized tokens, the dictionary file layout.
    pub fn parse(joined: &str) -> Result<Self> {
        NGram::new(joined.split(' '))
    }

    /// Tokenizes free text into an N-gram.
    pub fn from_phrase(phrase: &str) -> Result<Self> {
        NGram::new(tokenize_flat(phrase).tokens.into_iter().map(|t| t.text))
    }

    pub(crate) fn from_tokens_unchecked(tokens: Vec<String>) -> Self {
        debug_assert!(!tokens.is_empty());
        NGram(tokens)
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for NGram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

impl TryFrom<Vec<String>> for NGram {
    type Error = Error;

    fn try_from(v: Vec<String>) -> Result<Self> {
        NGram::new(v)
    }
}

impl From<NGram> for Vec<String> {
    fn from(g: NGram) -> Self {
        g.0
    }
}

fn check_weight(w: f64) -> Result<f64> {
    if w > 0.0 && w <= 1.0 {
        Ok(w)
    } else {
        Err(Error::WeightOutOfRange(w))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    pub label: Label,
    entries: BTreeMap<NGram, f64>,
}

impl Dictionary {
    pub fn new(label: Label) -> Self {
        Self { label, entries: BTreeMap::new() }
    }

    pub fn with_entries(label: Label, entries: impl IntoIterator<Item = (NGram, f64)>) -> Result<Self> {
        let mut d = Dictionary::new(label);
        for (g, w) in entries {
            d.insert(g, w)?;
        }
        Ok(d)
    }

    /// Inserts or replaces, returning the previous weight.
    pub fn insert(&mut self, ngram: NGram, weight: f64) -> Result<Option<f64>> {
        Ok(self.entries.insert(ngram, check_weight(weight)?))
    }

    pub fn remove(&mut self, ngram: &NGram) -> Option<f64> {
        self.entries.remove(ngram)
    }

    pub fn get(&self, ngram: &NGram) -> Option<f64> {
        self.entries.get(ngram).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&NGram, f64)> {
        self.entries.iter().map(|(g, &w)| (g, w))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_order(&self) -> usize {
        self.entries.keys().map(NGram::len).max().unwrap_or(0)
    }

    /// Entries by descending weight, ties in lexicographic order of the joined text.
    pub fn ranked(&self) -> Vec<(String, f64)> {
        let mut rows: Vec<_> = self.entries.iter().map(|(g, &w)| (g.to_string(), w)).collect();
        rows.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        rows
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelMeta {
    /// Maximum order the model was learned with (may exceed the longest kept entry).
    pub learned_order: Option<usize>,
    pub metric: Option<SelectionMetric>,
    pub inclusion_threshold: Option<u32>,
    pub created_by: Option<String>,
}

/// `k` dictionaries with unique labels, kept sorted by label.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    dictionaries: Vec<Dictionary>,
    pub meta: ModelMeta,
}

impl Model {
    pub fn new(mut dictionaries: Vec<Dictionary>, meta: ModelMeta) -> Result<Self> {
        dictionaries.sort_by(|a, b| a.label.cmp(&b.label));
        if let Some(w) = dictionaries.windows(2).find(|w| w[0].label == w[1].label) {
            return Err(Error::InvalidModel(format!("duplicate dictionary {}", w[0].label)));
        }
        Ok(Model { dictionaries, meta })
    }

    /// A model with an empty dictionary for each label.
    pub fn empty(labels: impl IntoIterator<Item = Label>) -> Result<Self> {
        Model::new(labels.into_iter().map(Dictionary::new).collect(), ModelMeta::default())
    }

    pub fn dictionaries(&self) -> &[Dictionary] {
        &self.dictionaries
    }

    pub fn dictionary(&self, label: &Label) -> Option<&Dictionary> {
        self.position(label).map(|i| &self.dictionaries[i])
    }

    pub fn position(&self, label: &Label) -> Option<usize> {
        self.dictionaries.binary_search_by(|d| d.label.cmp(label)).ok()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.dictionaries.iter().map(|d| d.label.clone()).collect()
    }

    /// Longest N-gram present across all dictionaries.
    pub fn max_order(&self) -> usize {
        self.dictionaries.iter().map(Dictionary::max_order).max().unwrap_or(0)
    }

    pub fn entry_count(&self) -> usize {
        self.dictionaries.iter().map(Dictionary::len).sum()
    }

    pub fn empty_dictionaries(&self) -> Vec<&Label> {
        self.dictionaries.iter().filter(|d| d.is_empty()).map(|d| &d.label).collect()
    }

    /// Sets (`Some`) or deletes (`None`) one entry, leaving `self` untouched.
    pub fn edit_entry(&self, label: &Label, ngram: NGram, weight: Option<f64>) -> Result<Edit> {
        let idx = self.position(label).ok_or_else(|| Error::UnknownDistortion(label.to_string()))?;
        if let Some(w) = weight {
            check_weight(w)?;
        }
        let mut model = self.clone();
        let dict = &mut model.dictionaries[idx];
        let previous = match weight {
            Some(w) => dict.insert(ngram, w)?,
            None => dict.remove(&ngram),
        };
        let missing = weight.is_none() && previous.is_none();
        Ok(Edit { model, previous, missing_entry: missing })
    }
}

/// Result of [`Model::edit_entry`].
#[derive(Debug, Clone)]
pub struct Edit {
    pub model: Model,
    pub previous: Option<f64>,
    /// Set when a delete targeted an entry that did not exist.
    pub missing_entry: bool,
}

/// Formats a weight with six decimals when that is exact, otherwise with the
/// shortest representation that parses back to the same value.
pub fn format_weight(w: f64) -> String {
    let fixed = format!("{w:.6}");
    if fixed.parse::<f64>() == Ok(w) {
        fixed
    } else {
        format!("{w}")
    }
}

pub fn save_model(model: &Model, dir: &Path) -> Result<()> {
    for d in model.dictionaries() {
        if let Some((g, w)) = d.entries().find(|&(_, w)| w < MIN_SAVED_WEIGHT) {
            return Err(Error::InvalidModel(format!(
                "{}: entry {g:?} has weight {w} below {MIN_SAVED_WEIGHT}",
                d.label
            )));
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for d in model.dictionaries() {
        let mut body = String::new();
        for (g, w) in d.ranked() {
            body.push_str(&g);
            body.push('\t');
            body.push_str(&format_weight(w));
            body.push('\n');
        }
        let path = dir.join(format!("{}.{DICTIONARY_EXT}", d.label));
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    let path = dir.join(METADATA_FILE);
    fs::write(&path, render_meta(&model.meta)).map_err(|e| Error::io(&path, e))
}

fn render_meta(meta: &ModelMeta) -> String {
    let mut s = format!("version={FORMAT_VERSION}\n");
    if let Some(nm) = meta.learned_order {
        s += &format!("NM={nm}\n");
    }
    if let Some(sm) = meta.metric {
        s += &format!("SM={sm}\n");
    }
    if let Some(it) = meta.inclusion_threshold {
        s += &format!("IT={it}\n");
    }
    if let Some(by) = &meta.created_by {
        s += &format!("created-by={by}\n");
    }
    s
}

fn parse_meta(src: &str, path: &Path) -> Result<ModelMeta> {
    let mut meta = ModelMeta::default();
    for (n, line) in src.lines().enumerate() {
        let err = |message: String| Error::Parse { path: path.into(), line: n + 1, message };
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| err("expected key=value".into()))?;
        match k {
            "version" => {
                let v: u32 = v.parse().map_err(|_| err(format!("bad version {v:?}")))?;
                if v != FORMAT_VERSION {
                    return Err(err(format!("unsupported version {v}")));
                }
            }
            "NM" => meta.learned_order = Some(v.parse().map_err(|_| err(format!("bad NM {v:?}")))?),
            "SM" => meta.metric = Some(v.parse().map_err(|e: Error| err(e.to_string()))?),
            "IT" => meta.inclusion_threshold = Some(v.parse().map_err(|_| err(format!("bad IT {v:?}")))?),
            "created-by" => meta.created_by = Some(v.to_owned()),
            _ => {}
        }
    }
    Ok(meta)
}

/// Loads every `<label>.tsv` in `dir`. A line without a weight column gets 1.0.
pub fn load_model(dir: &Path) -> Result<Model> {
    let mut dictionaries = Vec::new();
    for path in dictionary_files(dir, DICTIONARY_EXT)? {
        let label = label_from_path(&path)?;
        let src = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut dict = Dictionary::new(label);
        for (n, line) in src.split_terminator('\n').enumerate() {
            let err = |message: String| Error::Parse { path: path.clone(), line: n + 1, message };
            if line.is_empty() {
                continue;
            }
            let (tokens, weight) = match line.split_once('\t') {
                Some((t, w)) => {
                    let w: f64 = w.trim().parse().map_err(|_| err(format!("bad weight {w:?}")))?;
                    (t, w)
                }
                None => (line, 1.0),
            };
            let g = NGram::parse(tokens).map_err(|e| err(e.to_string()))?;
            if dict.get(&g).is_some() {
                return Err(err(format!("duplicate entry {tokens:?}")));
            }
            dict.insert(g, weight).map_err(|e| err(e.to_string()))?;
        }
        dictionaries.push(dict);
    }
    if dictionaries.is_empty() {
        return Err(Error::InvalidModel(format!("no .{DICTIONARY_EXT} dictionaries in {}", dir.display())));
    }
    let meta_path = dir.join(METADATA_FILE);
    let meta = if meta_path.exists() {
        let src = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        parse_meta(&src, &meta_path)?
    } else {
        ModelMeta::default()
    };
    Model::new(dictionaries, meta)
}

/// Imports plain phrase lists (one phrase per line, files named
/// `<label>.<ext>`), tokenizing each phrase and giving every entry weight 1.0.
pub fn import_phrase_lists(dir: &Path, ext: &str) -> Result<Model> {
    let mut dictionaries = Vec::new();
    for path in dictionary_files(dir, ext)? {
        let mut dict = Dictionary::new(label_from_path(&path)?);
        let src = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        for line in src.lines() {
            if let Ok(g) = NGram::from_phrase(line) {
                dict.insert(g, 1.0)?;
            }
        }
        dictionaries.push(dict);
    }
    if dictionaries.is_empty() {
        return Err(Error::InvalidModel(format!("no .{ext} files in {}", dir.display())));
    }
    Model::new(dictionaries, ModelMeta { created_by: Some("import".into()), ..ModelMeta::default() })
}

fn dictionary_files(dir: &Path, ext: &str) -> Result<Vec<std::path::PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == ext) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn label_from_path(path: &Path) -> Result<Label> {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    Label::new(stem)
}

/// Per-class changes from `a` to `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionaryDiff {
    pub label: Label,
    pub added: Vec<(NGram, f64)>,
    pub removed: Vec<(NGram, f64)>,
    /// `(ngram, old, new)`
    pub reweighted: Vec<(NGram, f64, f64)>,
}

impl DictionaryDiff {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty() && self.reweighted.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelDiff {
    /// Only classes with at least one change.
    pub dictionaries: Vec<DictionaryDiff>,
}

impl ModelDiff {
    pub fn is_empty(&self) -> bool {
        self.dictionaries.is_empty()
    }

    pub fn change_count(&self) -> usize {
        self.dictionaries.iter().map(|d| d.added.len() + d.removed.len() + d.reweighted.len()).sum()
    }
}

pub fn diff_models(a: &Model, b: &Model) -> Result<ModelDiff> {
    let la: BTreeSet<_> = a.labels().into_iter().collect();
    let lb: BTreeSet<_> = b.labels().into_iter().collect();
    if la != lb {
        let only: Vec<_> = la.symmetric_difference(&lb).map(Label::as_str).collect();
        return Err(Error::LabelMismatch(only.join(", ")));
    }
    let mut out = ModelDiff::default();
    for (da, db) in a.dictionaries().iter().zip(b.dictionaries()) {
        let mut d = DictionaryDiff {
            label: da.label.clone(),
            added: Vec::new(),
            removed: Vec::new(),
            reweighted: Vec::new(),
        };
        for (g, wa) in da.entries() {
            match db.get(g) {
                None => d.removed.push((g.clone(), wa)),
                Some(wb) if (wa - wb).abs() > DIFF_EPSILON => d.reweighted.push((g.clone(), wa, wb)),
                Some(_) => {}
            }
        }
        for (g, wb) in db.entries() {
            if da.get(g).is_none() {
                d.added.push((g.clone(), wb));
            }
        }
        if !d.is_empty() {
            out.dictionaries.push(d);
        }
    }
    Ok(out)
}
