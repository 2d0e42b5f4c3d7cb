//! Sentence splitting and tokenization with source offsets.
//!
//! Tokens are maximal runs of characters that are neither whitespace nor
//! punctuation/symbols (Unicode `P*`/`S*`), lowercased. Every token keeps the
//! character and byte interval it came from so matches can be mapped back
//! onto the original text for highlighting.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};

/// Half-open interval `[start, end)` measured in Unicode scalar values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Lowercased token text.
    pub text: String,
    /// Character interval in the source.
    pub span: Span,
    /// Byte interval in the source.
    pub bytes: Range<usize>,
}

/// A sentence located in its source string.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sentence<'a> {
    pub text: &'a str,
    /// Byte offset of `text` in the source.
    pub offset: usize,
}

impl Sentence<'_> {
    pub fn byte_range(&self) -> Range<usize> {
        self.offset..self.offset + self.text.len()
    }
}

/// A tokenized document: tokens in reading order, grouped into sentences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedText {
    pub source: String,
    pub tokens: Vec<Token>,
    /// Token index intervals, one per sentence that produced tokens.
    pub sentences: Vec<Range<usize>>,
}

impl TokenizedText {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token_texts(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }

    /// Sentence ordinal of every token.
    pub fn sentence_ids(&self) -> Vec<u32> {
        let mut ids = vec![0u32; self.tokens.len()];
        for (s, range) in self.sentences.iter().enumerate() {
            for id in &mut ids[range.clone()] {
                *id = s as u32;
            }
        }
        ids
    }

    /// Character interval covering tokens `[first, last)`, gaps included.
    pub fn char_span(&self, tokens: Range<usize>) -> Span {
        debug_assert!(tokens.start < tokens.end && tokens.end <= self.tokens.len());
        Span::new(self.tokens[tokens.start].span.start, self.tokens[tokens.end - 1].span.end)
    }
}

/// True for characters that separate tokens.
pub fn is_separator(c: char) -> bool {
    if c.is_whitespace() {
        return true;
    }
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        ConnectorPunctuation
            | DashPunctuation
            | OpenPunctuation
            | ClosePunctuation
            | InitialPunctuation
            | FinalPunctuation
            | OtherPunctuation
            | MathSymbol
            | CurrencySymbol
            | ModifierSymbol
            | OtherSymbol
            | Control
            | Format
            | SpaceSeparator
            | LineSeparator
            | ParagraphSeparator
    )
}

/// Whether `s` is a valid normalized token: non-empty, no separators, already lowercase.
pub fn is_normalized_token(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(is_separator) && s.to_lowercase() == s
}

/// Matched case-sensitively, so ordinary words ("no", "sat") are not guarded.
const ABBREVIATIONS: &[&str] = &[
    "Mr", "Mrs", "Ms", "Dr", "Prof", "Sr", "Jr", "St", "Mt", "vs", "etc", "e.g", "i.e", "Inc",
    "Ltd", "Co", "Corp", "Dept", "Univ", "approx", "Fig", "Vol", "Jan", "Feb", "Mar", "Apr",
    "Jun", "Jul", "Aug", "Sep", "Sept", "Oct", "Nov", "Dec", "Mon", "Tue", "Wed", "Thu", "Fri",
    "Sat", "Sun", "a.m", "p.m", "A.M", "P.M", "U.S", "U.K", "Ph.D", "Gen", "Col", "Lt", "Capt",
    "Sgt", "Rev", "Hon", "Ave", "Blvd", "Rd", "MR", "MRS", "DR", "ST",
];

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '…')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '}' | '”' | '’' | '»')
}

/// Splits text into sentences.
///
/// A boundary follows a run of `.`, `!`, `?` or `…` (plus any closing quotes
/// or brackets) that is followed by whitespace. A lone period is not a
/// boundary after a known abbreviation or a single-letter initial, and no
/// boundary is placed before a word starting in lowercase.
pub fn split_sentences<'a>(text: &'a str) -> Vec<Sentence<'a>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;

    let push = |from: usize, to: usize, out: &mut Vec<Sentence<'a>>| {
        let raw = &text[from..to];
        let trimmed = raw.trim();
        if !trimmed.is_empty() {
            let lead = raw.len() - raw.trim_start().len();
            out.push(Sentence { text: trimmed, offset: from + lead });
        }
    };

    while i < chars.len() {
        let (_, c) = chars[i];
        if !is_terminator(c) {
            i += 1;
            continue;
        }
        let run_start = i;
        while i < chars.len() && is_terminator(chars[i].1) {
            i += 1;
        }
        let single_period = i - run_start == 1 && c == '.';
        while i < chars.len() && is_closer(chars[i].1) {
            i += 1;
        }
        let end_byte = chars.get(i).map_or(text.len(), |&(b, _)| b);
        let at_end = i >= chars.len();
        if !at_end && !chars[i].1.is_whitespace() {
            continue;
        }
        if !at_end {
            if single_period && guarded_abbreviation(text, chars[run_start].0) {
                continue;
            }
            let next = chars[i..].iter().find(|(_, c)| !c.is_whitespace());
            if let Some(&(_, nc)) = next {
                if nc.is_lowercase() {
                    continue;
                }
            }
        }
        push(start, end_byte, &mut out);
        start = end_byte;
    }
    if start < text.len() {
        push(start, text.len(), &mut out);
    }
    out
}

/// Checks the word ending right before the period at byte `period`.
fn guarded_abbreviation(text: &str, period: usize) -> bool {
    let before = &text[..period];
    let word_start = before
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_whitespace() || matches!(c, '(' | '"' | '\'' | '[' | '“' | '‘'))
        .map_or(0, |(b, c)| b + c.len_utf8());
    let word = &before[word_start..];
    if word.is_empty() {
        return false;
    }
    let mut letters = word.chars();
    if let (Some(c), None) = (letters.next(), letters.next()) {
        if c.is_uppercase() {
            return true;
        }
    }
    ABBREVIATIONS.contains(&word)
}

/// Tokenizes a string, treating it as a single sentence.
pub fn tokenize_flat(text: &str) -> TokenizedText {
    let mut tokens = Vec::new();
    push_tokens(text, 0, 0, &mut tokens);
    #[allow(clippy::single_range_in_vec_init)]
    let sentences = if tokens.is_empty() { Vec::new() } else { vec![0..tokens.len()] };
    TokenizedText { source: text.to_owned(), tokens, sentences }
}

/// Splits into sentences, then tokens.
pub fn tokenize(text: &str) -> TokenizedText {
    let mut tokens = Vec::new();
    let mut sentences = Vec::new();
    let mut char_cursor = 0usize;
    let mut byte_cursor = 0usize;
    for sentence in split_sentences(text) {
        char_cursor += text[byte_cursor..sentence.offset].chars().count();
        byte_cursor = sentence.offset;
        let first = tokens.len();
        push_tokens(sentence.text, sentence.offset, char_cursor, &mut tokens);
        if tokens.len() > first {
            sentences.push(first..tokens.len());
        }
    }
    TokenizedText { source: text.to_owned(), tokens, sentences }
}

fn push_tokens(text: &str, byte_base: usize, char_base: usize, out: &mut Vec<Token>) {
    let mut current: Option<(usize, usize)> = None;
    let mut char_idx = char_base;
    let flush = |cur: &mut Option<(usize, usize)>, end_b: usize, end_c: usize, out: &mut Vec<Token>| {
        if let Some((sb, sc)) = cur.take() {
            out.push(Token {
                text: text[sb..end_b].to_lowercase(),
                span: Span::new(sc, end_c),
                bytes: byte_base + sb..byte_base + end_b,
            });
        }
    };
    for (b, c) in text.char_indices() {
        if is_separator(c) {
            flush(&mut current, b, char_idx, out);
        } else if current.is_none() {
            current = Some((b, char_idx));
        }
        char_idx += 1;
    }
    flush(&mut current, text.len(), char_idx, out);
}
