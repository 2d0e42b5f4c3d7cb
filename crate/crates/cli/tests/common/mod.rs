#![allow(dead_code)]

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use heterarch::model::ModelMeta;
use heterarch::{save_model, Dictionary, Label, Model, NGram};

pub fn l(s: &str) -> Label {
    Label::new(s).unwrap()
}

pub fn g(s: &str) -> NGram {
    NGram::parse(s).unwrap()
}

/// Three classes sharing "bad", with a tetra-gram that swallows the rest.
pub fn fixture_model() -> Model {
    let d = |name: &str, entries: &[(&str, f64)]| {
        Dictionary::with_entries(l(name), entries.iter().map(|&(s, w)| (g(s), w))).unwrap()
    };
    Model::new(
        vec![
            d("Labeling", &[("not a bad thing", 1.0), ("i am a loser", 1.0), ("loser", 0.6)]),
            d("Magnification", &[("bad thing", 1.0), ("bad", 0.5), ("worst", 1.0)]),
            d("Mind_Reading", &[("bad", 0.4), ("they think", 1.0)]),
        ],
        ModelMeta { created_by: Some("fixture".into()), ..ModelMeta::default() },
    )
    .unwrap()
}

pub const FIXTURE_TEXTS: [&str; 6] = [
    "not a bad thing",
    "This is a bad thing. They think I am a loser!",
    "",
    "Nothing to see here.",
    "Worst day; bad, bad, BAD.",
    "I am a loser and they think so too. Not a bad thing though",
];

pub fn save_fixture(dir: &Path) -> PathBuf {
    let path = dir.join("model");
    save_model(&fixture_model(), &path).unwrap();
    path
}

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_heterarch"));
    c.env_remove("HETERARCH_MODEL_DIR").env("RUST_LOG", "off");
    c
}

pub fn run(cmd: &mut Command, stdin: &str) -> Output {
    let mut child = cmd.stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    // The child may exit before reading its input.
    let _ = child.stdin.take().unwrap().write_all(stdin.as_bytes());
    child.wait_with_output().unwrap()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

pub fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schema").join(name);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&doc).unwrap()
}

pub fn assert_valid(v: &jsonschema::Validator, instance: &serde_json::Value) {
    let errors: Vec<String> = v.iter_errors(instance).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{errors:?} in {instance}");
}
