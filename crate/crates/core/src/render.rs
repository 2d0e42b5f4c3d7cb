//! Terminal and HTML rendering of highlighted matches.
//!
//! The text is cut at every span boundary; each piece is wrapped once per
//! class covering it, classes in name order, so identical spans claimed by
//! several classes come out nested deterministically.

use std::fmt::Write as _;

use crate::label::{Label, CANONICAL_LABELS};
use crate::recognizer::Highlight;

/// A run of source text and the classes highlighting it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment<'a> {
    pub text: &'a str,
    /// Sorted by name.
    pub labels: Vec<&'a Label>,
}

/// Splits `text` at every span boundary. Spans are character offsets; parts
/// beyond the end of the text are dropped.
pub fn segments<'a>(text: &'a str, highlights: &'a [Highlight]) -> Vec<Segment<'a>> {
    let byte_at: Vec<usize> = text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len())).collect();
    let chars = byte_at.len() - 1;
    let mut cuts = vec![0, chars];
    for h in highlights {
        for s in &h.spans {
            cuts.push(s.start.min(chars));
            cuts.push(s.end.min(chars));
        }
    }
    cuts.sort_unstable();
    cuts.dedup();
    cuts.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let mut labels: Vec<&Label> = highlights
                .iter()
                .filter(|h| h.spans.iter().any(|s| s.start <= a && b <= s.end))
                .map(|h| &h.label)
                .collect();
            labels.sort();
            labels.dedup();
            Segment { text: &text[byte_at[a]..byte_at[b]], labels }
        })
        .filter(|s| !s.text.is_empty())
        .collect()
}

const ANSI_BACKGROUNDS: [u8; 10] = [41, 42, 43, 44, 45, 46, 101, 102, 103, 104];
const HTML_COLORS: [&str; 10] =
    ["#f8b4b4", "#b4f8c8", "#fbe7a1", "#b4d0f8", "#e4b4f8", "#a8eef0", "#f8cfa8", "#d0f0a8", "#f0a8d8", "#c8c8f0"];

/// Stable palette slot: canonical position, otherwise a hash of the name.
pub fn color_index(label: &Label) -> usize {
    CANONICAL_LABELS
        .iter()
        .position(|c| *c == label.as_str())
        .unwrap_or_else(|| label.as_str().bytes().fold(0usize, |h, b| h.wrapping_mul(31).wrapping_add(b as usize)))
        % ANSI_BACKGROUNDS.len()
}

const RESET: &str = "\x1b[0m";

fn ansi_open(label: &Label) -> String {
    format!("\x1b[{};30m", ANSI_BACKGROUNDS[color_index(label)])
}

/// ANSI-colored text, optionally followed by a legend of highlighted classes.
/// Without highlights the text comes back unchanged.
pub fn render_ansi(text: &str, highlights: &[Highlight], legend: bool) -> String {
    if highlights.iter().all(|h| h.spans.is_empty()) {
        return text.to_owned();
    }
    let mut out = String::with_capacity(text.len() * 2);
    for seg in segments(text, highlights) {
        if seg.labels.is_empty() {
            out.push_str(seg.text);
            continue;
        }
        for l in &seg.labels {
            out.push_str(&ansi_open(l));
        }
        out.push_str(seg.text);
        out.push_str(RESET);
    }
    if legend {
        out.push('\n');
        for h in sorted(highlights) {
            let _ = write!(out, "{} {} {RESET} {:.1}  ", ansi_open(&h.label), h.label, h.score * 100.0);
        }
        out.truncate(out.trim_end().len());
    }
    out
}

fn sorted(highlights: &[Highlight]) -> Vec<&Highlight> {
    let mut v: Vec<&Highlight> = highlights.iter().filter(|h| !h.spans.is_empty()).collect();
    v.sort_by(|a, b| a.label.cmp(&b.label));
    v
}

pub fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

fn mark_open(label: &Label) -> String {
    format!(
        "<mark data-distortion=\"{}\" style=\"background:{}\">",
        escape_html(label.as_str()),
        HTML_COLORS[color_index(label)]
    )
}

/// HTML fragment with `<mark data-distortion=...>` around highlighted text,
/// optionally followed by a legend list.
pub fn render_html(text: &str, highlights: &[Highlight], legend: bool) -> String {
    let mut out = String::from("<p class=\"distortions\">");
    for seg in segments(text, highlights) {
        for l in &seg.labels {
            out.push_str(&mark_open(l));
        }
        out.push_str(&escape_html(seg.text));
        for _ in &seg.labels {
            out.push_str("</mark>");
        }
    }
    out.push_str("</p>");
    if legend {
        let items = sorted(highlights);
        if !items.is_empty() {
            out.push_str("\n<ul class=\"legend\">");
            for h in items {
                let _ = write!(out, "<li>{}{}</mark> {:.1}</li>", mark_open(&h.label), escape_html(h.label.as_str()), h.score * 100.0);
            }
            out.push_str("</ul>");
        }
    }
    out
}
