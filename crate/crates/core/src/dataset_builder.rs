//! SFT dataset construction in three formats from raw
//! (query, answer, context) items.
//!
//! A teacher (rule-based or remote) walks the chunked context producing
//! per-step summaries and a final answer. The same teacher run is
//! rendered into smooth-reading (SR), unsmooth-reading (UR) and one-step
//! (OS) chat transcripts sharing identical context text and final
//! answers, then cleaned against the gold answer with the task's metric.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{remote_generate, BackendError, ChatMessage, RemoteBackendConfig};
use crate::benchgen::TaskKind;
use crate::chunker::{split_hierarchical, Chunk, ChunkerError, ChunkingConfig};
use crate::engine::prompts;
use crate::metrics::MetricKind;
use crate::protocol::{self, ContextualSummary, Decision, ProtocolError};
use crate::tasks;

/// One raw training item.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawItem {
    pub query: String,
    pub answer: String,
    pub context: String,
    pub task: TaskKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SftFormat {
    Os,
    Ur,
    Sr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TeacherKind {
    Rule,
    Remote,
}

/// One SFT transcript in one format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftItem {
    pub format: SftFormat,
    pub turns: Vec<Turn>,
    pub source_id: String,
    pub teacher: TeacherKind,
    pub kept: bool,
    pub clean_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drop_reason: Option<String>,
}

#[derive(Debug, Error)]
pub enum TeacherError {
    #[error("task {0:?} is not supported by this teacher")]
    Unsupported(TaskKind),
    #[error("teacher protocol failure at step {step}: {message}")]
    Protocol { step: usize, message: String },
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// The result of walking one item's chunks.
#[derive(Debug, Clone)]
pub struct TeacherRun {
    /// One summary per chunk read.
    pub summaries: Vec<ContextualSummary>,
    /// Extra elicited stop-summary when the last chunk still continued.
    pub final_extra: Option<ContextualSummary>,
    pub answer: String,
    pub chunks_read: usize,
}

/// Produces per-chunk summaries and a final answer for raw items.
pub trait Teacher {
    fn kind(&self) -> TeacherKind;
    fn teach(
        &mut self,
        raw: &RawItem,
        chunks: &[Chunk],
        early_stop: bool,
    ) -> Result<TeacherRun, TeacherError>;
}

/// Oracle teacher for the mechanical tasks (needle retrieval, passage
/// count). It sees each chunk in full, so its summaries are exact.
#[derive(Debug, Default)]
pub struct RuleTeacher;

impl Teacher for RuleTeacher {
    fn kind(&self) -> TeacherKind {
        TeacherKind::Rule
    }

    fn teach(
        &mut self,
        raw: &RawItem,
        chunks: &[Chunk],
        early_stop: bool,
    ) -> Result<TeacherRun, TeacherError> {
        match raw.task {
            TaskKind::NeedleRetrieval => teach_needles(raw, chunks, early_stop),
            TaskKind::PassageCount => teach_passage_count(chunks),
            other => Err(TeacherError::Unsupported(other)),
        }
    }
}

fn teach_needles(
    raw: &RawItem,
    chunks: &[Chunk],
    early_stop: bool,
) -> Result<TeacherRun, TeacherError> {
    let query_words: Vec<&str> = raw.query.split_whitespace().collect();
    let keys = tasks::parse_requested_keys(&query_words);
    if keys.is_empty() {
        return Err(TeacherError::Protocol {
            step: 0,
            message: "query names no keys".into(),
        });
    }
    let target = tasks::format_niah_target(&keys);
    let mut found: Vec<(String, String)> = Vec::new();
    let mut summaries = Vec::new();

    for (i, chunk) in chunks.iter().enumerate() {
        let words: Vec<&str> = chunk.text.split_whitespace().collect();
        for (key, uuid) in tasks::find_needles(&words) {
            if keys.contains(&key) && !found.iter().any(|(k, _)| *k == key) {
                found.push((key, uuid));
            }
        }
        found.sort_by_key(|(k, _)| keys.iter().position(|r| r == k).unwrap_or(usize::MAX));
        let clues = found
            .iter()
            .map(|(k, u)| tasks::format_clue(k, u))
            .collect::<Vec<_>>()
            .join("; ");
        let reason = format!("matched {} of {} keys", found.len(), keys.len());
        let complete = found.len() == keys.len();
        let last = i + 1 == chunks.len();

        if (early_stop && complete) || last {
            let answer = if found.is_empty() {
                "unknown".to_string()
            } else {
                found.iter().map(|(_, u)| u.clone()).collect::<Vec<_>>().join(", ")
            };
            summaries.push(ContextualSummary::stopping(&target, clues, reason, &answer));
            return Ok(TeacherRun {
                summaries,
                final_extra: None,
                answer,
                chunks_read: i + 1,
            });
        }
        summaries.push(ContextualSummary::continuing(&target, clues, reason));
    }
    unreachable!("loop returns on the last chunk");
}

fn teach_passage_count(chunks: &[Chunk]) -> Result<TeacherRun, TeacherError> {
    let mut seen: Vec<String> = Vec::new();
    let mut summaries = Vec::new();
    for (i, chunk) in chunks.iter().enumerate() {
        let words: Vec<&str> = chunk.text.split_whitespace().collect();
        for label in tasks::find_passage_labels(&words) {
            if !seen.contains(&label) {
                seen.push(label);
            }
        }
        seen.sort();
        let clues = format!("seen: {}", seen.join(" "));
        let reason = format!("tracked {} unique passages so far", seen.len());
        if i + 1 == chunks.len() {
            let answer = seen.len().to_string();
            summaries.push(ContextualSummary::stopping(
                "count the unique passages",
                clues,
                reason,
                &answer,
            ));
            return Ok(TeacherRun {
                summaries,
                final_extra: None,
                answer,
                chunks_read: i + 1,
            });
        }
        summaries.push(ContextualSummary::continuing(
            "count the unique passages",
            clues,
            reason,
        ));
    }
    Err(TeacherError::Protocol {
        step: 0,
        message: "no chunks to read".into(),
    })
}

/// Remote LLM teacher. Each step is a fresh single-turn request carrying
/// the rendered previous summary, the chunk, and the task reminder (the
/// re-feeding style a stateless chat endpoint requires); the collected
/// summaries are only later laid out in SR shape.
pub struct RemoteTeacher {
    config: RemoteBackendConfig,
}

impl RemoteTeacher {
    pub fn new(mut config: RemoteBackendConfig) -> Self {
        if config.one_shot_example.is_none() {
            config.one_shot_example = Some(prompts::ONE_SHOT_EXAMPLE.to_string());
        }
        Self { config }
    }

    fn system(&self) -> String {
        let mut s = prompts::REMOTE_SYSTEM_PROMPT.to_string();
        if let Some(example) = &self.config.one_shot_example {
            s.push_str("\n\nExample:\n");
            s.push_str(example);
        }
        s
    }

    fn step(&self, user: String, step: usize) -> Result<ContextualSummary, TeacherError> {
        let messages = [ChatMessage::system(self.system()), ChatMessage::user(user)];
        let text = remote_generate(&self.config, &messages)?;
        protocol::parse(&text).map_err(|e: ProtocolError| TeacherError::Protocol {
            step,
            message: e.to_string(),
        })
    }
}

impl Teacher for RemoteTeacher {
    fn kind(&self) -> TeacherKind {
        TeacherKind::Remote
    }

    fn teach(
        &mut self,
        raw: &RawItem,
        chunks: &[Chunk],
        early_stop: bool,
    ) -> Result<TeacherRun, TeacherError> {
        let preamble = prompts::unsmooth_preamble(&raw.query);
        let mut summaries: Vec<ContextualSummary> = Vec::new();
        for (i, chunk) in chunks.iter().enumerate() {
            let user = match summaries.last() {
                Some(prev) => format!(
                    "{}\n\n{}\n\n{preamble}",
                    protocol::render(prev).expect("teacher summaries are valid"),
                    chunk.text
                ),
                None => format!("{}\n\n{preamble}", chunk.text),
            };
            let summary = self.step(user, i)?;
            let stopped = summary.decision == Decision::Stop;
            summaries.push(summary);
            if stopped && (early_stop || i + 1 == chunks.len()) {
                let answer = summaries.last().unwrap().final_answer.clone().unwrap_or_default();
                let chunks_read = summaries.len();
                return Ok(TeacherRun {
                    summaries,
                    final_extra: None,
                    answer,
                    chunks_read,
                });
            }
        }
        // Every chunk read and the reader still wants to continue (or
        // stopped mid-way with early stopping off): elicit the answer.
        if let Some(last) = summaries.last() {
            if last.decision == Decision::Stop {
                let answer = last.final_answer.clone().unwrap_or_default();
                let chunks_read = summaries.len();
                return Ok(TeacherRun {
                    summaries,
                    final_extra: None,
                    answer,
                    chunks_read,
                });
            }
        }
        let user = format!(
            "{}\n\n{}\nOutput the final summary block ending with ANSWER and the stop token.",
            summaries
                .last()
                .map(|s| protocol::render(s).expect("teacher summaries are valid"))
                .unwrap_or_default(),
            prompts::ELICIT_PROMPT
        );
        let final_summary = self.step(user, summaries.len())?;
        if final_summary.decision != Decision::Stop {
            return Err(TeacherError::Protocol {
                step: summaries.len(),
                message: "elicitation did not produce a stop summary".into(),
            });
        }
        let answer = final_summary.final_answer.clone().unwrap_or_default();
        let chunks_read = summaries.len();
        Ok(TeacherRun {
            summaries,
            final_extra: Some(final_summary),
            answer,
            chunks_read,
        })
    }
}

/// Per-metric keep thresholds for cleaning.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CleanThresholds {
    pub exact_match: f64,
    pub token_f1: f64,
    pub rouge_l: f64,
    pub edit_sim: f64,
}

impl Default for CleanThresholds {
    fn default() -> Self {
        Self {
            exact_match: 1.0,
            token_f1: 0.5,
            rouge_l: 0.5,
            edit_sim: 0.75,
        }
    }
}

impl CleanThresholds {
    pub fn uniform(t: f64) -> Self {
        Self {
            exact_match: t,
            token_f1: t,
            rouge_l: t,
            edit_sim: t,
        }
    }

    pub fn threshold_for(&self, metric: MetricKind) -> f64 {
        match metric {
            MetricKind::ExactMatch => self.exact_match,
            MetricKind::TokenF1 => self.token_f1,
            MetricKind::RougeL => self.rouge_l,
            MetricKind::EditSim => self.edit_sim,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub formats: Vec<SftFormat>,
    pub early_stop: bool,
    pub thresholds: CleanThresholds,
    pub seed: u64,
    /// Chunk size for remote teachers (conservative, fixed).
    pub remote_chunk_tokens: u64,
    /// Chunk sizes for rule teachers are sampled per item from this
    /// inclusive range, for generalization across chunk sizes.
    pub rule_chunk_range: (u64, u64),
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            formats: vec![SftFormat::Sr, SftFormat::Ur, SftFormat::Os],
            early_stop: true,
            thresholds: CleanThresholds::default(),
            seed: 0,
            remote_chunk_tokens: 512,
            rule_chunk_range: (128, 4096),
        }
    }
}

#[derive(Debug, Error)]
pub enum BuilderError {
    #[error(transparent)]
    Chunker(#[from] ChunkerError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

#[derive(Debug, Default, Serialize)]
pub struct BuildReport {
    pub total_items: usize,
    pub kept: usize,
    pub dropped: usize,
    pub dropped_source_ids: Vec<String>,
    /// Clean-score histogram over 10 equal buckets of [0, 1].
    pub score_histogram: [u32; 10],
    pub seed: u64,
}

#[derive(Debug)]
pub struct BuildOutput {
    pub items: Vec<SftItem>,
    pub report: BuildReport,
}

/// Run the teacher over every raw item and emit the requested formats.
pub fn build_dataset(
    raws: &[RawItem],
    teacher: &mut dyn Teacher,
    opts: &BuildOptions,
) -> Result<BuildOutput, BuilderError> {
    let mut items = Vec::new();
    let mut report = BuildReport {
        total_items: raws.len(),
        seed: opts.seed,
        ..BuildReport::default()
    };

    for (idx, raw) in raws.iter().enumerate() {
        let source_id = format!("item-{idx:05}");
        let chunk_tokens = match teacher.kind() {
            TeacherKind::Remote => opts.remote_chunk_tokens,
            TeacherKind::Rule => {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    opts.seed ^ (idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                );
                rng.gen_range(opts.rule_chunk_range.0..=opts.rule_chunk_range.1)
            }
        };

        let outcome = if raw.context.is_empty() {
            Err(TeacherError::Protocol {
                step: 0,
                message: "raw item has an empty context".into(),
            })
        } else {
            split_hierarchical(&raw.context, &ChunkingConfig::new(chunk_tokens))
                .map_err(|e| TeacherError::Protocol {
                    step: 0,
                    message: e.to_string(),
                })
                .and_then(|chunks| {
                    teacher
                        .teach(raw, &chunks, opts.early_stop)
                        .map(|run| (chunks, run))
                })
        };

        match outcome {
            Ok((chunks, run)) => {
                let metric = MetricKind::for_task(raw.task);
                let clean_score = metric.score(&run.answer, &raw.answer);
                let kept = clean_score >= opts.thresholds.threshold_for(metric);
                let bucket = ((clean_score * 10.0) as usize).min(9);
                report.score_histogram[bucket] += 1;
                if kept {
                    report.kept += 1;
                } else {
                    report.dropped += 1;
                    report.dropped_source_ids.push(source_id.clone());
                }
                for &format in &opts.formats {
                    let mut item = assemble(format, raw, &source_id, teacher.kind(), &chunks, &run);
                    item.kept = kept;
                    item.clean_score = clean_score;
                    if !kept {
                        item.drop_reason =
                            Some(format!("clean score {clean_score:.3} below threshold"));
                    }
                    items.push(item);
                }
            }
            Err(e) => {
                report.dropped += 1;
                report.dropped_source_ids.push(source_id.clone());
                for &format in &opts.formats {
                    items.push(SftItem {
                        format,
                        turns: Vec::new(),
                        source_id: source_id.clone(),
                        teacher: teacher.kind(),
                        kept: false,
                        clean_score: 0.0,
                        drop_reason: Some(e.to_string()),
                    });
                }
            }
        }
    }
    Ok(BuildOutput { items, report })
}

fn assemble(
    format: SftFormat,
    raw: &RawItem,
    source_id: &str,
    teacher: TeacherKind,
    chunks: &[Chunk],
    run: &TeacherRun,
) -> SftItem {
    let turns = match format {
        SftFormat::Os => vec![
            Turn {
                role: Role::User,
                text: format!("{}\n\n{}", raw.context, raw.query),
            },
            Turn {
                role: Role::Assistant,
                text: run.answer.clone(),
            },
        ],
        SftFormat::Sr => {
            let mut turns = Vec::new();
            for (i, summary) in run.summaries.iter().enumerate() {
                let user = if i == 0 {
                    format!("{}\n\n{}", prompts::smooth_preamble(&raw.query), chunks[i].text)
                } else {
                    chunks[i].text.clone()
                };
                turns.push(Turn {
                    role: Role::User,
                    text: user,
                });
                turns.push(Turn {
                    role: Role::Assistant,
                    text: protocol::render(summary).expect("teacher summaries are valid"),
                });
            }
            if let Some(final_summary) = &run.final_extra {
                turns.push(Turn {
                    role: Role::User,
                    text: prompts::ELICIT_PROMPT.to_string(),
                });
                turns.push(Turn {
                    role: Role::Assistant,
                    text: protocol::render(final_summary).expect("teacher summaries are valid"),
                });
            }
            turns
        }
        SftFormat::Ur => {
            let preamble = prompts::unsmooth_preamble(&raw.query);
            let mut turns = Vec::new();
            for (i, summary) in run.summaries.iter().enumerate() {
                let user = if i == 0 {
                    format!("{}\n\n{preamble}", chunks[i].text)
                } else {
                    format!(
                        "{}\n\n{}\n\n{preamble}",
                        protocol::render(&run.summaries[i - 1]).expect("teacher summaries are valid"),
                        chunks[i].text
                    )
                };
                turns.push(Turn {
                    role: Role::User,
                    text: user,
                });
                turns.push(Turn {
                    role: Role::Assistant,
                    text: protocol::render(summary).expect("teacher summaries are valid"),
                });
            }
            if let Some(final_summary) = &run.final_extra {
                let prev = run
                    .summaries
                    .last()
                    .map(|s| protocol::render(s).expect("teacher summaries are valid"))
                    .unwrap_or_default();
                turns.push(Turn {
                    role: Role::User,
                    text: format!("{prev}\n\n{}", prompts::ELICIT_PROMPT),
                });
                turns.push(Turn {
                    role: Role::Assistant,
                    text: protocol::render(final_summary).expect("teacher summaries are valid"),
                });
            }
            turns
        }
    };
    SftItem {
        format,
        turns,
        source_id: source_id.to_string(),
        teacher,
        kept: true,
        clean_score: 1.0,
        drop_reason: None,
    }
}

/// Context text embedded in an item: the OS user turn before the query,
/// or the concatenation of SR/UR chunk texts.
pub fn embedded_context(item: &SftItem) -> String {
    match item.format {
        SftFormat::Os => {
            let text = &item.turns[0].text;
            match text.rfind("\n\n") {
                Some(at) => text[..at].to_string(),
                None => text.clone(),
            }
        }
        SftFormat::Sr => {
            let mut out = String::new();
            for (i, turn) in item.turns.iter().enumerate().filter(|(_, t)| t.role == Role::User) {
                let text = turn.text.as_str();
                if text == prompts::ELICIT_PROMPT {
                    continue;
                }
                if i == 0 {
                    match text.split_once("\n\n") {
                        Some((_, chunk)) => out.push_str(chunk),
                        None => out.push_str(text),
                    }
                } else {
                    out.push_str(text);
                }
            }
            out
        }
        SftFormat::Ur => {
            let mut out = String::new();
            for (i, turn) in item.turns.iter().enumerate().filter(|(_, t)| t.role == Role::User) {
                let text = turn.text.as_str();
                if text.ends_with(prompts::ELICIT_PROMPT) {
                    continue;
                }
                // Strip the leading rendered summary (first step has none)
                // and the trailing reminder.
                let body = if i == 0 {
                    text
                } else {
                    match text.find("\n\n") {
                        Some(at) => &text[at + 2..],
                        None => text,
                    }
                };
                match body.rfind("\n\n") {
                    Some(at) => out.push_str(&body[..at]),
                    None => out.push_str(body),
                }
            }
            out
        }
    }
}

/// Serialize kept items into one JSONL per format plus `report.json`.
pub fn write_outputs(dir: &Path, output: &BuildOutput) -> Result<(), BuilderError> {
    fs::create_dir_all(dir)?;
    let mut by_format: BTreeMap<&'static str, Vec<&SftItem>> = BTreeMap::new();
    for item in &output.items {
        if !item.kept {
            continue;
        }
        let name = match item.format {
            SftFormat::Os => "os",
            SftFormat::Ur => "ur",
            SftFormat::Sr => "sr",
        };
        by_format.entry(name).or_default().push(item);
    }
    for (name, items) in by_format {
        let mut text = String::new();
        for item in items {
            text.push_str(&serde_json::to_string(item)?);
            text.push('\n');
        }
        fs::write(dir.join(format!("{name}.jsonl")), text)?;
    }
    fs::write(
        dir.join("report.json"),
        serde_json::to_string_pretty(&output.report)?,
    )?;
    Ok(())
}
