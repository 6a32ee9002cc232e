//! Dataset model: intents with descriptions, labeled utterances, train/test
//! splits with optional out-of-scope test rows, and seeded few-shot sampling.
//!
//! On-disk layout of a dataset directory:
//!
//! ```text
//! <dir>/intents.json   — array of {"name": string, "description": string}
//! <dir>/train.jsonl    — one {"text": string, "label": string} per line
//! <dir>/test.jsonl     — same; label is an intent name or "__oos__"
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::rng::{sample_indices, SplitMix64};

/// Marker used in split files for out-of-scope test utterances.
pub const OOS_MARKER: &str = "__oos__";

/// Label reserved for the "none of the above" prompt option; no intent may
/// use this name.
pub const RESERVED_NONE_LABEL: &str = "none_of_the_above";

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: intents file is not a valid intent array: {message}")]
    MalformedIntents { path: String, message: String },
    #[error("{path}: intents file is empty")]
    EmptyIntents { path: String },
    #[error("invalid intent name {name:?}: {reason}")]
    InvalidIntentName { name: String, reason: String },
    #[error("duplicate intent name {name:?} (names are case-insensitive)")]
    DuplicateIntent { name: String },
    #[error("{file}:{line}: malformed record: {message}")]
    MalformedRecord {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{file}:{line}: label {label:?} does not match any intent")]
    UnknownLabel {
        file: String,
        line: usize,
        label: String,
    },
    #[error("{file}:{line}: train split must not contain out-of-scope rows")]
    OosInTrain { file: String, line: usize },
    #[error("label {label:?} does not match any intent")]
    UnresolvedLabel { label: String },
}

/// An intent name plus the human-written description used for zero-shot
/// prompting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntentSpec {
    pub name: String,
    pub description: String,
}

impl IntentSpec {
    pub fn new(name: impl Into<String>, description: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            description: description.into(),
        }
    }
}

/// Gold or predicted label: an intent name, or the out-of-scope marker.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum Label {
    Intent(String),
    OutOfScope,
}

impl Label {
    pub fn intent(name: impl Into<String>) -> Self {
        Label::Intent(name.into())
    }

    pub fn is_oos(&self) -> bool {
        matches!(self, Label::OutOfScope)
    }

    pub fn as_str(&self) -> &str {
        match self {
            Label::Intent(name) => name,
            Label::OutOfScope => OOS_MARKER,
        }
    }
}

impl From<String> for Label {
    fn from(s: String) -> Self {
        if s == OOS_MARKER {
            Label::OutOfScope
        } else {
            Label::Intent(s)
        }
    }
}

impl From<Label> for String {
    fn from(l: Label) -> Self {
        match l {
            Label::Intent(name) => name,
            Label::OutOfScope => OOS_MARKER.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledUtterance {
    pub text: String,
    pub label: Label,
}

impl LabeledUtterance {
    pub fn new(text: impl Into<String>, label: Label) -> Self {
        Self {
            text: text.into(),
            label,
        }
    }
}

/// A validated dataset. Immutable after construction; `has_oos` is derived
/// from the test split.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub intents: Vec<IntentSpec>,
    pub train: Vec<LabeledUtterance>,
    pub test: Vec<LabeledUtterance>,
    pub has_oos: bool,
}

impl Dataset {
    /// Validate and construct. Checks intent-name rules, case-insensitive
    /// uniqueness, label resolution in both splits, and the no-OOS-in-train
    /// rule; computes `has_oos`.
    pub fn new(
        name: impl Into<String>,
        intents: Vec<IntentSpec>,
        train: Vec<LabeledUtterance>,
        test: Vec<LabeledUtterance>,
    ) -> Result<Self, CorpusError> {
        validate_intents(&intents)?;
        let known: HashMap<String, ()> = intents
            .iter()
            .map(|i| (i.name.to_lowercase(), ()))
            .collect();
        for u in &train {
            match &u.label {
                Label::OutOfScope => {
                    return Err(CorpusError::OosInTrain {
                        file: "train".into(),
                        line: 0,
                    })
                }
                Label::Intent(l) => {
                    if !known.contains_key(&l.to_lowercase()) {
                        return Err(CorpusError::UnresolvedLabel { label: l.clone() });
                    }
                }
            }
        }
        for u in &test {
            if let Label::Intent(l) = &u.label {
                if !known.contains_key(&l.to_lowercase()) {
                    return Err(CorpusError::UnresolvedLabel { label: l.clone() });
                }
            }
        }
        let has_oos = test.iter().any(|u| u.label.is_oos());
        Ok(Self {
            name: name.into(),
            intents,
            train,
            test,
            has_oos,
        })
    }

    pub fn intent_names(&self) -> Vec<String> {
        self.intents.iter().map(|i| i.name.clone()).collect()
    }

    pub fn intent_by_name(&self, name: &str) -> Option<&IntentSpec> {
        let lower = name.to_lowercase();
        self.intents.iter().find(|i| i.name.to_lowercase() == lower)
    }
}

fn validate_intents(intents: &[IntentSpec]) -> Result<(), CorpusError> {
    if intents.is_empty() {
        return Err(CorpusError::EmptyIntents {
            path: "<memory>".into(),
        });
    }
    let mut seen: HashMap<String, ()> = HashMap::new();
    for spec in intents {
        let name = &spec.name;
        if name.is_empty() {
            return Err(CorpusError::InvalidIntentName {
                name: name.clone(),
                reason: "name is empty".into(),
            });
        }
        if name.contains('\n') || name.contains('\r') {
            return Err(CorpusError::InvalidIntentName {
                name: name.clone(),
                reason: "name contains a newline".into(),
            });
        }
        if name.trim() != name {
            return Err(CorpusError::InvalidIntentName {
                name: name.clone(),
                reason: "name has leading or trailing whitespace".into(),
            });
        }
        let lower = name.to_lowercase();
        if lower == RESERVED_NONE_LABEL {
            return Err(CorpusError::InvalidIntentName {
                name: name.clone(),
                reason: format!("{RESERVED_NONE_LABEL:?} is reserved"),
            });
        }
        if seen.insert(lower, ()).is_some() {
            return Err(CorpusError::DuplicateIntent { name: name.clone() });
        }
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct RawUtterance {
    text: String,
    label: String,
}

#[derive(Debug, Serialize)]
struct RawUtteranceRef<'a> {
    text: &'a str,
    label: &'a str,
}

/// Load a dataset directory. The dataset name is the directory's file name.
/// Record order in the split files is preserved.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset, CorpusError> {
    let dir = path.as_ref();
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());

    let intents_path = dir.join("intents.json");
    let intents_text = fs::read_to_string(&intents_path).map_err(|source| CorpusError::Io {
        path: intents_path.display().to_string(),
        source,
    })?;
    let intents: Vec<IntentSpec> =
        serde_json::from_str(&intents_text).map_err(|e| CorpusError::MalformedIntents {
            path: intents_path.display().to_string(),
            message: e.to_string(),
        })?;
    if intents.is_empty() {
        return Err(CorpusError::EmptyIntents {
            path: intents_path.display().to_string(),
        });
    }
    validate_intents(&intents)?;
    let known: HashMap<String, ()> = intents
        .iter()
        .map(|i| (i.name.to_lowercase(), ()))
        .collect();

    let train = read_split(&dir.join("train.jsonl"), &known, false)?;
    let test = read_split(&dir.join("test.jsonl"), &known, true)?;
    Dataset::new(name, intents, train, test)
}

fn read_split(
    path: &Path,
    known: &HashMap<String, ()>,
    allow_oos: bool,
) -> Result<Vec<LabeledUtterance>, CorpusError> {
    let file = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: file.clone(),
        source,
    })?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawUtterance =
            serde_json::from_str(line).map_err(|e| CorpusError::MalformedRecord {
                file: file.clone(),
                line: line_no,
                message: e.to_string(),
            })?;
        if raw.text.is_empty() {
            return Err(CorpusError::MalformedRecord {
                file: file.clone(),
                line: line_no,
                message: "text is empty".into(),
            });
        }
        let label = Label::from(raw.label);
        match &label {
            Label::OutOfScope if !allow_oos => {
                return Err(CorpusError::OosInTrain {
                    file: file.clone(),
                    line: line_no,
                });
            }
            Label::Intent(l) if !known.contains_key(&l.to_lowercase()) => {
                return Err(CorpusError::UnknownLabel {
                    file: file.clone(),
                    line: line_no,
                    label: l.clone(),
                });
            }
            _ => {}
        }
        out.push(LabeledUtterance {
            text: raw.text,
            label,
        });
    }
    Ok(out)
}

/// Write a dataset directory in the standard layout (UTF-8, `\n` newlines).
/// `load_dataset(save_dataset(d))` reproduces `d` when the directory's file
/// name equals `d.name`.
pub fn save_dataset(dataset: &Dataset, dir: impl AsRef<Path>) -> Result<(), CorpusError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| CorpusError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let io_err = |path: &Path| {
        let p = path.display().to_string();
        move |source: std::io::Error| CorpusError::Io { path: p, source }
    };

    let intents_path = dir.join("intents.json");
    let intents_json = serde_json::to_string_pretty(&dataset.intents).expect("serialize intents");
    fs::write(&intents_path, intents_json + "\n").map_err(io_err(&intents_path))?;

    for (file, rows) in [("train.jsonl", &dataset.train), ("test.jsonl", &dataset.test)] {
        let path = dir.join(file);
        let mut body = String::new();
        for u in rows {
            let raw = RawUtteranceRef {
                text: &u.text,
                label: u.label.as_str(),
            };
            body.push_str(&serde_json::to_string(&raw).expect("serialize utterance"));
            body.push('\n');
        }
        fs::write(&path, body).map_err(io_err(&path))?;
    }
    Ok(())
}

/// A per-intent sample of the train split: `min(k, available)` utterances per
/// intent, drawn without replacement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotSample {
    pub k: usize,
    pub seed: u64,
    pub examples: BTreeMap<String, Vec<LabeledUtterance>>,
}

impl FewShotSample {
    pub fn total_examples(&self) -> usize {
        self.examples.values().map(Vec::len).sum()
    }
}

/// Sample `min(k, available)` train utterances per intent, uniformly without
/// replacement.
///
/// Deterministic given `(dataset, k, seed)`: for each intent, candidates are
/// taken in train-split record order and a partial Fisher-Yates shuffle is
/// driven by an independent SplitMix64 stream seeded with
/// `seed XOR fnv1a64(intent name)`, so the draw for one intent does not
/// depend on the others.
pub fn sample_few_shot(dataset: &Dataset, k: usize, seed: u64) -> FewShotSample {
    assert!(k >= 1, "sample_few_shot requires k >= 1");
    let mut examples = BTreeMap::new();
    for intent in &dataset.intents {
        let candidates: Vec<&LabeledUtterance> = dataset
            .train
            .iter()
            .filter(|u| matches!(&u.label, Label::Intent(l) if l == &intent.name))
            .collect();
        let mut rng = SplitMix64::for_label(seed, &intent.name);
        let chosen = sample_indices(&mut rng, candidates.len(), k);
        let picked: Vec<LabeledUtterance> =
            chosen.into_iter().map(|i| candidates[i].clone()).collect();
        examples.insert(intent.name.clone(), picked);
    }
    FewShotSample { k, seed, examples }
}

/// Counts reported by `stats`: split sizes, per-intent counts, OOS rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub intent_count: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub oos_test_count: usize,
    pub per_intent_train: BTreeMap<String, usize>,
    pub per_intent_test: BTreeMap<String, usize>,
}

pub fn dataset_stats(dataset: &Dataset) -> DatasetStats {
    let mut per_intent_train: BTreeMap<String, usize> = BTreeMap::new();
    let mut per_intent_test: BTreeMap<String, usize> = BTreeMap::new();
    for intent in &dataset.intents {
        per_intent_train.insert(intent.name.clone(), 0);
        per_intent_test.insert(intent.name.clone(), 0);
    }
    for u in &dataset.train {
        if let Label::Intent(l) = &u.label {
            *per_intent_train.get_mut(l).expect("validated label") += 1;
        }
    }
    let mut oos = 0;
    for u in &dataset.test {
        match &u.label {
            Label::Intent(l) => *per_intent_test.get_mut(l).expect("validated label") += 1,
            Label::OutOfScope => oos += 1,
        }
    }
    DatasetStats {
        intent_count: dataset.intents.len(),
        train_size: dataset.train.len(),
        test_size: dataset.test.len(),
        oos_test_count: oos,
        per_intent_train,
        per_intent_test,
    }
}
