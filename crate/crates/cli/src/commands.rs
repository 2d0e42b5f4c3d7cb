use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use heterarch::eval::{describe, run_protocol_with, summary_text};
use heterarch::learning::stats_summary;
use heterarch::model::format_weight;
use heterarch::render::{render_ansi, render_html};
use heterarch::synthetic::{generate, SyntheticSpec};
use heterarch::{
    collect_stats, diff_models, emit_report, grid_search, highlight, learn, load_dataset, load_model, save_model,
    tokenize, ColumnMap, Engine, EvalReport, GridAxes, LabeledText, LearningConfig, Model, ModelDiff,
    RecognitionConfig, RecognitionResult,
};

use crate::args::{
    DatasetArgs, DiffArgs, EvaluateArgs, Format, GridArgs, HighlightArgs, InputArgs, LearnArgs, RecognizeArgs,
    StatsArgs, TrainArgs,
};

pub fn load_corpus(args: &DatasetArgs) -> Result<Vec<LabeledText>> {
    let corpus = match (&args.dataset, args.synthetic) {
        (_, Some(texts)) => generate(&SyntheticSpec { texts, seed: args.seed, ..SyntheticSpec::default() }),
        (Some(path), None) => {
            let columns = args.columns.clone().unwrap_or_else(|| path.with_extension("columns"));
            let map = ColumnMap::load(&columns).with_context(|| format!("column map {}", columns.display()))?;
            load_dataset(path, &map)?
        }
        (None, None) => bail!("either --dataset or --synthetic is required"),
    };
    if corpus.is_empty() {
        bail!("the dataset has no records");
    }
    log::info!("loaded {} texts", corpus.len());
    Ok(corpus)
}

fn learning_config(args: &LearnArgs) -> Result<LearningConfig> {
    Ok(LearningConfig::new(args.order as usize, args.metric, args.inclusion_threshold)?)
}

pub fn load_model_dir(dir: &Path) -> Result<Model> {
    if !dir.is_dir() {
        bail!("model directory {} does not exist", dir.display());
    }
    load_model(dir).with_context(|| format!("loading model from {}", dir.display()))
}

/// Texts to process: one per line, or the whole input as one document.
pub fn read_texts(args: &InputArgs, stdin: impl Read) -> Result<Vec<String>> {
    let reader: Box<dyn BufRead> = match &args.input {
        Some(p) if p.as_os_str() != "-" => {
            Box::new(BufReader::new(fs::File::open(p).with_context(|| format!("opening {}", p.display()))?))
        }
        _ => Box::new(BufReader::new(stdin)),
    };
    if args.document {
        let mut all = String::new();
        BufReader::new(reader).read_to_string(&mut all)?;
        return Ok(if all.is_empty() { Vec::new() } else { vec![all] });
    }
    Ok(reader.lines().collect::<io::Result<_>>()?)
}

fn tsv_line(r: &RecognitionResult) -> String {
    let detected: Vec<&str> = r.detected().into_iter().map(|l| l.as_str()).collect();
    let mut line = if detected.is_empty() { "-".to_owned() } else { detected.join(",") };
    for (l, s) in r.labels.iter().zip(&r.scores) {
        let _ = write!(line, "\t{l}={s:.4}");
    }
    line
}

pub fn train(args: &TrainArgs, out: &mut impl Write) -> Result<()> {
    let corpus = load_corpus(&args.data)?;
    let cfg = learning_config(&args.learn)?;
    let stats = collect_stats(&corpus, cfg.order)?;
    let model = learn(&corpus, &cfg)?;
    save_model(&model, &args.out)?;
    writeln!(
        out,
        "saved {} entries in {} dictionaries to {} (NM={} SM={} IT={})",
        model.entry_count(),
        model.dictionaries().len(),
        args.out.display(),
        cfg.order,
        cfg.metric,
        cfg.inclusion_threshold
    )?;
    write_stats_table(&stats, Some(&model), out)?;
    let empty = model.empty_dictionaries();
    if !empty.is_empty() {
        log::warn!("empty dictionaries: {}", empty.iter().map(|l| l.as_str()).collect::<Vec<_>>().join(", "));
    }
    Ok(())
}

fn write_stats_table(stats: &heterarch::CorpusStats, model: Option<&Model>, out: &mut impl Write) -> Result<()> {
    write!(out, "{:<24} {:>7} {:>9} {:>9} {:>9}", "class", "texts", "n-grams", "unique", "distinct")?;
    if model.is_some() {
        write!(out, " {:>9}", "kept")?;
    }
    writeln!(out)?;
    for (label, texts, total, unique, distinct) in stats_summary(stats) {
        write!(out, "{:<24} {texts:>7} {total:>9} {unique:>9} {distinct:>9}", label.as_str())?;
        if let Some(m) = model {
            write!(out, " {:>9}", m.dictionary(&label).map_or(0, |d| d.len()))?;
        }
        writeln!(out)?;
    }
    writeln!(out, "{} texts, {} distinct n-grams up to order {}", stats.text_count(), stats.gram_count(), stats.order())?;
    Ok(())
}

pub fn recognize(args: &RecognizeArgs, stdin: impl Read, out: &mut impl Write) -> Result<()> {
    let model = load_model_dir(&args.model.dir)?;
    let engine = Engine::new(&model, args.backend);
    let cfg = args.rec.config();
    for text in read_texts(&args.input, stdin)? {
        let r = engine.recognize(&tokenize(&text), &cfg);
        let line = if args.json { r.to_json() } else { tsv_line(&r) };
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn highlight_texts(args: &HighlightArgs, stdin: impl Read, out: &mut impl Write) -> Result<()> {
    let model = load_model_dir(&args.model.dir)?;
    let engine = Engine::new(&model, Default::default());
    let cfg = args.rec.config();
    for text in read_texts(&args.input, stdin)? {
        let r = engine.recognize(&tokenize(&text), &cfg);
        let h = highlight(&r, false);
        let rendered = match args.format {
            Format::Ansi => render_ansi(&text, &h, args.legend),
            Format::Html => render_html(&text, &h, args.legend),
            Format::Json => serde_json::to_string(&h)?,
        };
        writeln!(out, "{rendered}")?;
    }
    Ok(())
}

pub fn evaluation_report(args: &EvaluateArgs) -> Result<EvalReport> {
    let corpus = load_corpus(&args.data)?;
    Ok(run_protocol_with(&corpus, &learning_config(&args.learn)?, &args.rec.config(), args.backend)?)
}

pub fn evaluate(args: &EvaluateArgs, out: &mut impl Write) -> Result<()> {
    let report = evaluation_report(args)?;
    if args.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
        return Ok(());
    }
    write_report(&report, out)
}

pub fn write_report(report: &EvalReport, out: &mut impl Write) -> Result<()> {
    let runs: Vec<String> = report.runs.iter().map(|r| format!("shift {}: {:.4}", r.shift, r.score.macro_f1())).collect();
    writeln!(out, "{}", describe(&report.macro_f1).trim_start())?;
    writeln!(out, "runs: {}", runs.join(", "))?;
    writeln!(out, "binary F1 {:.4} [{:.4}, {:.4}]", report.binary_f1.mean, report.binary_f1.min, report.binary_f1.max)?;
    writeln!(out, "{:<24} {:>9} {:>9} {:>9} {:>17}", "class", "precision", "recall", "F1", "F1 range")?;
    for l in &report.per_label {
        writeln!(
            out,
            "{:<24} {:>9.4} {:>9.4} {:>9.4}  [{:.4}, {:.4}]",
            l.label.as_str(),
            l.precision,
            l.recall,
            l.f1.mean,
            l.f1.min,
            l.f1.max
        )?;
    }
    Ok(())
}

pub fn grid_axes(args: &GridArgs) -> GridAxes {
    let mut axes = GridAxes::full();
    if !args.orders.is_empty() {
        axes.orders = args.orders.iter().map(|&o| o as usize).collect();
    }
    if !args.metrics.is_empty() {
        axes.metrics = args.metrics.clone();
    }
    if !args.inclusion_thresholds.is_empty() {
        axes.inclusion_thresholds = args.inclusion_thresholds.clone();
    }
    if !args.detection_thresholds.is_empty() {
        axes.detection_thresholds = args.detection_thresholds.clone();
    }
    axes.weighted = args.weighted.values();
    axes.log_scaling = !args.no_log_scaling;
    axes.cross_sentence = args.cross_sentence;
    axes
}

pub fn grid(args: &GridArgs, out: &mut impl Write) -> Result<Vec<PathBuf>> {
    let corpus = load_corpus(&args.data)?;
    let axes = grid_axes(args);
    axes.validate()?;
    log::info!("{} cells ({} training cells x 3 splits)", axes.cell_count(), axes.training_cells());
    let start = std::time::Instant::now();
    let report = grid_search(&corpus, &axes)?;
    let paths = emit_report(&report, &args.out)?;
    write!(out, "{}", summary_text(&report))?;
    writeln!(out, "\nfinished in {:.1}s; wrote", start.elapsed().as_secs_f64())?;
    for p in &paths {
        writeln!(out, "  {}", p.display())?;
    }
    Ok(paths)
}

pub fn stats(args: &StatsArgs, out: &mut impl Write) -> Result<()> {
    let corpus = load_corpus(&args.data)?;
    let stats = collect_stats(&corpus, args.order as usize)?;
    if args.json {
        let rows: Vec<serde_json::Value> = stats_summary(&stats)
            .into_iter()
            .map(|(label, texts, total, unique, distinct)| {
                serde_json::json!({"distortion": label, "texts": texts, "ngrams": total, "unique_ngrams": unique, "distinct_ngrams": distinct})
            })
            .collect();
        let doc = serde_json::json!({"texts": stats.text_count(), "order": stats.order(), "distinct_ngrams": stats.gram_count(), "classes": rows});
        writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
        return Ok(());
    }
    write_stats_table(&stats, None, out)
}

pub fn diff(args: &DiffArgs, out: &mut impl Write) -> Result<ModelDiff> {
    let a = load_model_dir(&args.from)?;
    let b = load_model_dir(&args.to)?;
    let d = diff_models(&a, &b)?;
    if args.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&d)?)?;
    } else {
        write!(out, "{}", diff_text(&d))?;
    }
    Ok(d)
}

pub fn diff_text(d: &ModelDiff) -> String {
    let mut s = String::new();
    for dd in &d.dictionaries {
        let _ = writeln!(s, "{}", dd.label);
        for (g, w) in &dd.added {
            let _ = writeln!(s, "  + {g}\t{}", format_weight(*w));
        }
        for (g, w) in &dd.removed {
            let _ = writeln!(s, "  - {g}\t{}", format_weight(*w));
        }
        for (g, a, b) in &dd.reweighted {
            let _ = writeln!(s, "  ~ {g}\t{} -> {}", format_weight(*a), format_weight(*b));
        }
    }
    let _ = writeln!(s, "{} changes", d.change_count());
    s
}

/// Recognition with the CLI defaults, for parity checks against the server.
pub fn recognize_json(model: &Model, text: &str, cfg: &RecognitionConfig) -> String {
    Engine::new(model, Default::default()).recognize(&tokenize(text), cfg).to_json()
}
