//! Dataset ingestion and the every-fifth-record train/test splits.

use std::collections::BTreeSet;
use std::fs;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::label::Label;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledText {
    /// Zero-based record position in the source file.
    pub id: usize,
    pub text: String,
    /// Ground truth; empty means no distortion.
    pub labels: BTreeSet<Label>,
    pub distorted_part: Option<String>,
}

impl LabeledText {
    pub fn new(id: usize, text: impl Into<String>, labels: impl IntoIterator<Item = Label>) -> Self {
        Self { id, text: text.into(), labels: labels.into_iter().collect(), distorted_part: None }
    }
}

/// Maps column roles to header names.
///
/// Parsed from `key=value` lines; `#` starts a comment. Keys: `text`,
/// `dominant`, `secondary`, `distorted_part`, and optionally `delimiter`
/// (`comma`, `tab`, or a single character).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub text: String,
    pub dominant: String,
    pub secondary: Option<String>,
    pub distorted_part: Option<String>,
    pub delimiter: Option<u8>,
}

impl ColumnMap {
    pub fn parse(src: &str) -> Result<Self, String> {
        let mut text = None;
        let mut dominant = None;
        let mut secondary = None;
        let mut distorted_part = None;
        let mut delimiter = None;
        for (n, line) in src.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value", n + 1))?;
            let value = value.trim().to_owned();
            match key.trim() {
                "text" => text = Some(value),
                "dominant" => dominant = Some(value),
                "secondary" => secondary = Some(value).filter(|v| !v.is_empty()),
                "distorted_part" => distorted_part = Some(value).filter(|v| !v.is_empty()),
                "delimiter" => {
                    delimiter = Some(match value.as_str() {
                        "comma" | "," => b',',
                        "tab" | "\\t" => b'\t',
                        v if v.len() == 1 => v.as_bytes()[0],
                        v => return Err(format!("line {}: bad delimiter {v:?}", n + 1)),
                    })
                }
                other => return Err(format!("line {}: unknown key {other:?}", n + 1)),
            }
        }
        Ok(ColumnMap {
            text: text.ok_or("missing key `text`")?,
            dominant: dominant.ok_or("missing key `dominant`")?,
            secondary,
            distorted_part,
            delimiter,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ColumnMap::parse(&src).map_err(|message| Error::Parse { path: path.into(), line: 0, message })
    }
}

/// Loads a delimited table into records, one per row, in file order.
pub fn load_dataset(path: &Path, map: &ColumnMap) -> Result<Vec<LabeledText>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file, map, path)
}

pub fn read_dataset<R: Read>(mut reader: R, map: &ColumnMap, path: &Path) -> Result<Vec<LabeledText>> {
    let mut raw = Vec::new();
    reader.read_to_end(&mut raw).map_err(|e| Error::io(path, e))?;
    let raw = raw.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(&raw);
    let delimiter = map.delimiter.unwrap_or_else(|| sniff_delimiter(raw));

    let csv_err = |source| Error::Csv { path: path.into(), source };
    let mut rdr = csv::ReaderBuilder::new().delimiter(delimiter).flexible(false).from_reader(raw);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::Parse {
            path: path.into(),
            line: 1,
            message: format!("missing column {name:?}"),
        })
    };
    let text_col = column(&map.text)?;
    let dominant_col = column(&map.dominant)?;
    let secondary_col = map.secondary.as_deref().map(column).transpose()?;
    let part_col = map.distorted_part.as_deref().map(column).transpose()?;

    let mut out = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let field = |c: usize| record.get(c).unwrap_or("");
        let text = field(text_col).trim();
        if text.is_empty() {
            return Err(Error::InvalidCorpus(format!("row {}: empty text", row + 1)));
        }
        let mut labels = BTreeSet::new();
        for col in std::iter::once(dominant_col).chain(secondary_col) {
            match Label::canonicalize(field(col)) {
                Ok(Some(l)) => {
                    labels.insert(l);
                }
                Ok(None) => {}
                Err(label) => return Err(Error::UnknownLabel { row: row + 1, label }),
            }
        }
        let distorted_part = part_col.map(field).map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned);
        out.push(LabeledText { id: out.len(), text: text.to_owned(), labels, distorted_part });
    }
    Ok(out)
}

fn sniff_delimiter(raw: &[u8]) -> u8 {
    let header = raw.split(|&b| b == b'\n').next().unwrap_or_default();
    let tabs = header.iter().filter(|&&b| b == b'\t').count();
    let commas = header.iter().filter(|&&b| b == b',').count();
    if tabs > commas {
        b'\t'
    } else {
        b','
    }
}

pub const FOLDS: usize = 5;
pub const SHIFTS: [usize; 3] = [0, 1, 2];

/// One train/test partition: records with `index % 5 == shift` are held out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub shift: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitPlan {
    pub fn new(len: usize, shift: usize) -> Self {
        let (test, train) = (0..len).partition(|i| i % FOLDS == shift);
        SplitPlan { shift, train, test }
    }
}

pub fn make_splits<T>(corpus: &[T]) -> Result<Vec<SplitPlan>> {
    if corpus.len() < FOLDS {
        return Err(Error::InvalidCorpus(format!(
            "need at least {FOLDS} records to split, got {}",
            corpus.len()
        )));
    }
    Ok(SHIFTS.iter().map(|&s| SplitPlan::new(corpus.len(), s)).collect())
}
