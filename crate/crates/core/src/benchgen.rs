//! Synthetic long-context benchmark items and external JSONL loading.
//!
//! Needle-in-a-haystack items hide `key -> UUID` facts inside filler
//! essays; passage-count items ask for the number of unique passages in
//! a shuffled sequence with duplicates. Generation is deterministic
//! under the spec seed. Needle insertion snaps to sentence boundaries so
//! no word is ever split.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chunker::{token_capacity_in_words, words_to_tokens};
use crate::tasks;

/// Bundled public-domain-style filler essays used as the default
/// haystack corpus.
pub const FILLER_CORPUS: &str = include_str!("assets/filler_essays.txt");

/// Key words drawn (without replacement per item) for needle facts and
/// passage labels.
pub const WORDLIST: [&str; 64] = [
    "apple", "brook", "candle", "dune", "ember", "fable", "garnet", "harbor", "ivory", "juniper",
    "kestrel", "lantern", "marble", "nectar", "orchid", "pebble", "quill", "raven", "saddle",
    "thimble", "umber", "velvet", "willow", "yarrow", "zephyr", "anvil", "bramble", "cinder",
    "dapple", "elm", "fennel", "gable", "hazel", "ingot", "jasper", "kiln", "loom", "mallow",
    "nimbus", "otter", "plume", "quarry", "rushes", "sorrel", "tansy", "urchin", "vessel",
    "wicker", "yonder", "zenith", "alder", "birch", "cedar", "damson", "elder", "flint", "gorse",
    "heather", "iris", "jute", "knoll", "larch", "moss", "nettle",
];

const NEEDLE_WORDS: u64 = 8;

#[derive(Debug, Error)]
pub enum BenchgenError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("needle offset {offset} exceeds context length {context_tokens}")]
    InvalidOffset { offset: u64, context_tokens: u64 },
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("passage pool too small: need {need}, have {have}")]
    InsufficientPool { need: usize, have: usize },
}

/// Task family of an item; selects the scoring metric and, for the
/// simulators, the generation behavior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    NeedleRetrieval,
    PassageCount,
    PassageRetrieval,
    QuestionAnswering,
    Summarization,
    FewShot,
    CodeGeneration,
}

/// Where needles land in the context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    UniformRandom,
    /// Token offsets measured from the end of the final context; one per
    /// needle.
    OffsetFromEnd(Vec<u64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NiahSpec {
    /// Target context length in estimated tokens.
    pub context_tokens: u64,
    pub num_needles: usize,
    pub placement: Placement,
    /// Filler corpus path; `None` uses the bundled essays.
    pub haystack_path: Option<String>,
    pub seed: u64,
}

impl NiahSpec {
    pub fn new(context_tokens: u64, num_needles: usize, seed: u64) -> Self {
        Self {
            context_tokens,
            num_needles,
            placement: Placement::UniformRandom,
            haystack_path: None,
            seed,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ItemMeta {
    pub seed: u64,
    /// Start of each needle, in estimated tokens from the context start,
    /// in needle order.
    #[serde(default)]
    pub needle_positions: Vec<u64>,
    /// Echo of the generating spec.
    #[serde(default)]
    pub spec: serde_json::Value,
}

/// One evaluation item: a context, a query, and the gold answer(s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalItem {
    pub context: String,
    pub query: String,
    pub gold: Vec<String>,
    pub task: TaskKind,
    #[serde(default)]
    pub meta: ItemMeta,
}

/// Split a corpus into sentence-sized units that keep their trailing
/// separators, so concatenating units reproduces the corpus.
fn sentence_units(corpus: &str) -> Vec<&str> {
    let mut units = Vec::new();
    for para in corpus.split_inclusive("\n\n") {
        for sentence in para.split_inclusive(". ") {
            units.push(sentence);
        }
    }
    units
}

fn count_words(s: &str) -> u64 {
    s.split_whitespace().count() as u64
}

/// Generate a needle-in-a-haystack item.
pub fn gen_niah(spec: &NiahSpec) -> Result<EvalItem, BenchgenError> {
    if spec.num_needles == 0 {
        return Err(BenchgenError::InvalidSpec("num_needles must be >= 1".into()));
    }
    if spec.num_needles > WORDLIST.len() {
        return Err(BenchgenError::InvalidSpec(format!(
            "at most {} needles supported",
            WORDLIST.len()
        )));
    }
    if let Placement::OffsetFromEnd(offsets) = &spec.placement {
        if offsets.len() != spec.num_needles {
            return Err(BenchgenError::InvalidSpec(format!(
                "placement lists {} offsets for {} needles",
                offsets.len(),
                spec.num_needles
            )));
        }
        for &offset in offsets {
            if offset >= spec.context_tokens {
                return Err(BenchgenError::InvalidOffset {
                    offset,
                    context_tokens: spec.context_tokens,
                });
            }
        }
    }

    let corpus_owned;
    let corpus = match &spec.haystack_path {
        Some(path) => {
            corpus_owned = fs::read_to_string(Path::new(path))?;
            corpus_owned.as_str()
        }
        None => FILLER_CORPUS,
    };
    let base_units = sentence_units(corpus);
    if base_units.is_empty() || count_words(corpus) == 0 {
        return Err(BenchgenError::InvalidSpec("haystack corpus is empty".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Fill with cycled corpus sentences up to the word budget, leaving
    // room for the needles themselves.
    let budget_words =
        token_capacity_in_words(spec.context_tokens).saturating_sub(NEEDLE_WORDS * spec.num_needles as u64);
    let mut units: Vec<String> = Vec::new();
    let mut words = 0u64;
    let mut cycles = 0usize;
    'fill: loop {
        for unit in &base_units {
            if words >= budget_words {
                break 'fill;
            }
            units.push((*unit).to_string());
            words += count_words(unit);
        }
        cycles += 1;
        if cycles == 1 && words < budget_words {
            log::warn!(
                "haystack corpus shorter than requested context ({words} of {budget_words} words); cycling"
            );
        }
    }
    // The corpus may end without a separator; keep units cleanly spaced.
    for unit in units.iter_mut() {
        if !unit.ends_with(' ') && !unit.ends_with('\n') {
            unit.push(' ');
        }
    }

    // Draw keys without replacement and distinct UUID values.
    let mut keys: Vec<String> = {
        let mut pool: Vec<&str> = WORDLIST.to_vec();
        pool.shuffle(&mut rng);
        pool[..spec.num_needles].iter().map(|s| s.to_string()).collect()
    };
    keys.sort();
    let uuids: Vec<String> = (0..spec.num_needles).map(|_| random_uuid(&mut rng)).collect();

    // Desired distance, in words, from each needle's start to the end
    // of the final context; `None` means draw uniformly.
    let from_end_words: Vec<Option<u64>> = match &spec.placement {
        Placement::UniformRandom => vec![None; spec.num_needles],
        Placement::OffsetFromEnd(offsets) => offsets
            .iter()
            .map(|&off| Some((off * 2 + 1) / 3))
            .collect(),
    };
    let uniform_targets: Vec<u64> = (0..spec.num_needles)
        .map(|_| rng.gen_range(0..=words))
        .collect();

    // Insert nearest-the-end first: later insertions land strictly
    // earlier in the stream, which leaves the ones already placed at
    // their distance from the end.
    let mut order: Vec<usize> = (0..spec.num_needles).collect();
    order.sort_by_key(|&i| match from_end_words[i] {
        Some(w) => (0, w),
        None => (1, u64::MAX - uniform_targets[i]),
    });
    let needle_units: Vec<String> = (0..spec.num_needles)
        .map(|i| format!("{} ", tasks::format_needle(&keys[i], &uuids[i])))
        .collect();
    for &i in &order {
        let prefix = word_prefix_sums(&units);
        let total = *prefix.last().unwrap();
        let target = match from_end_words[i] {
            // After this insertion the stream grows by the needle's own
            // words, so aim at (total + needle) - from_end.
            Some(w) => (total + NEEDLE_WORDS).saturating_sub(w).min(total),
            None => uniform_targets[i].min(total),
        };
        let at = nearest_boundary(&prefix, target);
        units.insert(at, needle_units[i].clone());
    }

    let context: String = {
        let mut s: String = units.concat();
        while s.ends_with(' ') || s.ends_with('\n') {
            s.pop();
        }
        s
    };
    let query = tasks::format_niah_query(&keys);

    // Realized positions, read back off the final unit sequence.
    let prefix = word_prefix_sums(&units);
    let mut positions = vec![0u64; spec.num_needles];
    for (i, needle) in needle_units.iter().enumerate() {
        if let Some(at) = units.iter().position(|u| u == needle) {
            positions[i] = words_to_tokens(prefix[at]);
        }
    }

    Ok(EvalItem {
        context,
        query,
        gold: uuids,
        task: TaskKind::NeedleRetrieval,
        meta: ItemMeta {
            seed: spec.seed,
            needle_positions: positions,
            spec: serde_json::to_value(spec).unwrap_or_default(),
        },
    })
}

fn word_prefix_sums(units: &[String]) -> Vec<u64> {
    let mut prefix = Vec::with_capacity(units.len() + 1);
    let mut acc = 0u64;
    prefix.push(0);
    for u in units {
        acc += count_words(u);
        prefix.push(acc);
    }
    prefix
}

/// Index of the unit boundary whose word offset is closest to `target`.
fn nearest_boundary(prefix: &[u64], target: u64) -> usize {
    match prefix.binary_search(&target) {
        Ok(i) => i,
        Err(i) => {
            if i == 0 {
                0
            } else if i >= prefix.len() {
                prefix.len() - 1
            } else if target - prefix[i - 1] <= prefix[i] - target {
                i - 1
            } else {
                i
            }
        }
    }
}

fn random_uuid(rng: &mut ChaCha8Rng) -> String {
    let bits: u128 = rng.gen();
    // RFC 4122 version/variant nibbles keep the shape recognizable.
    let bytes = bits.to_be_bytes();
    format!(
        "{:02x}{:02x}{:02x}{:02x}-{:02x}{:02x}-4{:01x}{:02x}-8{:01x}{:02x}-{:02x}{:02x}{:02x}{:02x}{:02x}{:02x}",
        bytes[0], bytes[1], bytes[2], bytes[3],
        bytes[4], bytes[5],
        bytes[6] & 0x0f, bytes[7],
        bytes[8] & 0x0f, bytes[9],
        bytes[10], bytes[11], bytes[12], bytes[13], bytes[14], bytes[15],
    )
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PassageCountSpec {
    pub num_unique: usize,
    /// Extra copies distributed round-robin over the unique passages.
    pub duplicate_copies: usize,
    pub seed: u64,
}

/// Generate a passage-count item: a shuffled sequence of labeled
/// passages with duplicates; the gold answer is the unique count.
pub fn gen_passage_count(spec: &PassageCountSpec) -> Result<EvalItem, BenchgenError> {
    if spec.num_unique == 0 {
        return Err(BenchgenError::InvalidSpec("num_unique must be >= 1".into()));
    }
    if spec.num_unique > WORDLIST.len() {
        return Err(BenchgenError::InsufficientPool {
            need: spec.num_unique,
            have: WORDLIST.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let bodies: Vec<&str> = FILLER_CORPUS
        .split("\n\n")
        .filter(|p| !p.trim().is_empty())
        .collect();

    let mut labels: Vec<&str> = WORDLIST.to_vec();
    labels.shuffle(&mut rng);
    let mut passages: Vec<String> = labels[..spec.num_unique]
        .iter()
        .enumerate()
        .map(|(i, label)| tasks::format_passage(label, bodies[i % bodies.len()].trim()))
        .collect();
    for i in 0..spec.duplicate_copies {
        passages.push(passages[i % spec.num_unique].clone());
    }
    passages.shuffle(&mut rng);

    Ok(EvalItem {
        context: passages.join("\n\n"),
        query: tasks::format_passage_count_query(),
        gold: vec![spec.num_unique.to_string()],
        task: TaskKind::PassageCount,
        meta: ItemMeta {
            seed: spec.seed,
            needle_positions: Vec::new(),
            spec: serde_json::to_value(spec).unwrap_or_default(),
        },
    })
}

/// How external JSONL fields map onto [`EvalItem`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldMap {
    pub context: String,
    pub query: String,
    pub gold: String,
    /// Optional field holding a task name; items fall back to
    /// `default_task`.
    pub task_field: Option<String>,
    pub default_task: TaskKind,
}

impl Default for FieldMap {
    fn default() -> Self {
        Self {
            context: "context".into(),
            query: "input".into(),
            gold: "answers".into(),
            task_field: None,
            default_task: TaskKind::QuestionAnswering,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LoadError {
    /// 1-based line number.
    pub line: usize,
    pub message: String,
}

/// Loader result: parsed items plus an error report for malformed lines.
#[derive(Debug, Default, Serialize)]
pub struct LoadOutcome {
    pub items: Vec<EvalItem>,
    pub errors: Vec<LoadError>,
}

/// Load items from a JSONL file, mapping field names per `map`.
/// Malformed lines are reported, not silently dropped.
pub fn load_jsonl(path: &Path, map: &FieldMap) -> Result<LoadOutcome, BenchgenError> {
    let text = fs::read_to_string(path)?;
    let mut outcome = LoadOutcome::default();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_jsonl_line(line, map) {
            Ok(item) => outcome.items.push(item),
            Err(message) => outcome.errors.push(LoadError {
                line: idx + 1,
                message,
            }),
        }
    }
    Ok(outcome)
}

fn parse_jsonl_line(line: &str, map: &FieldMap) -> Result<EvalItem, String> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    let obj = value.as_object().ok_or("line is not a JSON object")?;

    let context = obj
        .get(&map.context)
        .and_then(|v| v.as_str())
        .ok_or_else(|| format!("missing string field '{}'", map.context))?
        .to_string();
    let query = obj
        .get(&map.query)
        .and_then(|v| v.as_str())
        .ok_or_else(|| format!("missing string field '{}'", map.query))?
        .to_string();
    let gold = match obj.get(&map.gold) {
        Some(serde_json::Value::String(s)) => vec![s.clone()],
        Some(serde_json::Value::Array(a)) => a
            .iter()
            .map(|v| {
                v.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| format!("field '{}' contains a non-string entry", map.gold))
            })
            .collect::<Result<Vec<_>, _>>()?,
        _ => return Err(format!("missing field '{}'", map.gold)),
    };
    let task = match &map.task_field {
        Some(field) => match obj.get(field).and_then(|v| v.as_str()) {
            Some(name) => serde_json::from_value(serde_json::Value::String(name.to_string()))
                .map_err(|_| format!("unknown task name '{name}'"))?,
            None => map.default_task,
        },
        None => map.default_task,
    };

    Ok(EvalItem {
        context,
        query,
        gold,
        task,
        meta: ItemMeta::default(),
    })
}
