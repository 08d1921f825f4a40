//! Strategy execution over any backend, with full per-step audit traces.
//!
//! Three strategies:
//!
//! - one-step: the whole context in a single pass;
//! - unsmooth reading: memory reset every step, the rendered running
//!   summary re-fed in front of each chunk;
//! - smooth reading: memory carried across steps, summaries decoded into
//!   the same session so their tokens live in the backend's memory, and
//!   nothing re-fed.
//!
//! Every step records input tokens, output tokens, and their sum as the
//! step's memory requirement: the sequence length the backend had to
//! handle in that single step.

pub mod prompts;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{Backend, BackendError, CallKind, GenerateMode, SourceTag};
use crate::chunker::{estimate_tokens, split_hierarchical, Chunk, ChunkerError, ChunkingConfig};
use crate::protocol::{self, ContextualSummary, Decision, ProtocolError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    OneStep,
    Unsmooth,
    Smooth,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Strategy::OneStep => "one-step",
            Strategy::Unsmooth => "unsmooth",
            Strategy::Smooth => "smooth",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepDecision {
    Continue,
    Stop,
    NotApplicable,
}

impl From<Decision> for StepDecision {
    fn from(d: Decision) -> Self {
        match d {
            Decision::Continue => StepDecision::Continue,
            Decision::Stop => StepDecision::Stop,
        }
    }
}

/// One executed step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step_index: usize,
    /// Which chunk this step read; `None` for scaffold-only steps such
    /// as final answer elicitation.
    pub chunk_index: Option<usize>,
    pub input_tokens: u64,
    pub output_tokens: u64,
    /// Sequence length handled in this step: input plus output.
    pub mr_tokens: u64,
    pub decision: StepDecision,
    /// The re-fed running summary exceeded the chunk budget and was
    /// truncated (unsmooth reading only).
    #[serde(default)]
    pub summary_overflow: bool,
}

/// Memory requirement of a step: the tokens it forced the model to
/// handle at once.
pub fn memory_requirement(step: &StepRecord) -> u64 {
    step.input_tokens + step.output_tokens
}

/// Full audit of one inference run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceTrace {
    pub strategy: Strategy,
    pub steps: Vec<StepRecord>,
    pub answer: String,
    pub total_prefill_tokens: u64,
    pub total_decode_tokens: u64,
    pub peak_mr_tokens: u64,
    pub virtual_time_seconds: f64,
    pub chunks_read: usize,
    pub chunks_total: usize,
    /// Fixed prompt-scaffold size for this run, in tokens.
    pub scaffold_tokens: u64,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("protocol failure at step {step}: {source}")]
    Protocol {
        step: usize,
        source: ProtocolError,
    },
    #[error("backend session is not fresh (call log non-empty)")]
    BackendNotFresh,
    #[error("no chunks to read")]
    NoChunks,
    #[error("chunk {index} estimates {est} tokens, over the {cap}-token step budget")]
    ChunkOverBudget { index: usize, est: u64, cap: u64 },
    #[error(transparent)]
    Chunker(#[from] ChunkerError),
}

/// Knobs shared by the chunked strategies.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Act on stop decisions before the last chunk.
    pub early_stop: bool,
    /// Fed before every chunk. Whitespace-only separators cost nothing
    /// under word-based token accounting.
    pub separator: String,
    /// Run a final answer-elicitation step when the last chunk still
    /// decided to continue.
    pub elicit_final_answer: bool,
    /// Token budget for the re-fed summary in unsmooth reading; the
    /// largest chunk estimate is used when unset.
    pub summary_cap_tokens: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            early_stop: true,
            separator: "\n\n".to_string(),
            elicit_final_answer: true,
            summary_cap_tokens: None,
        }
    }
}

/// Decode headroom reserved inside the memory window when planning
/// chunks, so the per-step summary block fits next to a full chunk.
pub const DECODE_HEADROOM_TOKENS: u64 = 128;

/// Chunk a context for reading at a declared per-step size: the actual
/// chunk cap leaves [`DECODE_HEADROOM_TOKENS`] of room for the step's
/// generated summary.
pub fn plan_chunks(context: &str, step_tokens: u64) -> Result<Vec<Chunk>, ChunkerError> {
    let floor = step_tokens.min(32).max(1);
    let cap = step_tokens.saturating_sub(DECODE_HEADROOM_TOKENS).max(floor);
    split_hierarchical(context, &ChunkingConfig::new(cap))
}

struct TraceBuilder {
    strategy: Strategy,
    steps: Vec<StepRecord>,
    clock_start: f64,
    scaffold_tokens: u64,
}

impl TraceBuilder {
    fn new(strategy: Strategy, backend: &dyn Backend, scaffold_tokens: u64) -> Self {
        Self {
            strategy,
            steps: Vec::new(),
            clock_start: backend.clock_seconds(),
            scaffold_tokens,
        }
    }

    fn push(
        &mut self,
        chunk_index: Option<usize>,
        input_tokens: u64,
        output_tokens: u64,
        decision: StepDecision,
        summary_overflow: bool,
    ) {
        self.steps.push(StepRecord {
            step_index: self.steps.len(),
            chunk_index,
            input_tokens,
            output_tokens,
            mr_tokens: input_tokens + output_tokens,
            decision,
            summary_overflow,
        });
    }

    fn finish(
        self,
        backend: &dyn Backend,
        answer: String,
        chunks_read: usize,
        chunks_total: usize,
    ) -> InferenceTrace {
        InferenceTrace {
            strategy: self.strategy,
            total_prefill_tokens: self.steps.iter().map(|s| s.input_tokens).sum(),
            total_decode_tokens: self.steps.iter().map(|s| s.output_tokens).sum(),
            peak_mr_tokens: self.steps.iter().map(|s| s.mr_tokens).max().unwrap_or(0),
            virtual_time_seconds: backend.clock_seconds() - self.clock_start,
            steps: self.steps,
            answer,
            chunks_read,
            chunks_total,
            scaffold_tokens: self.scaffold_tokens,
        }
    }
}

/// Process the entire context at once and decode the answer.
pub fn run_one_step(
    backend: &mut dyn Backend,
    context: &str,
    query: &str,
) -> Result<InferenceTrace, EngineError> {
    if !backend.session().calls.is_empty() {
        return Err(EngineError::BackendNotFresh);
    }
    let mut trace = TraceBuilder::new(Strategy::OneStep, backend, 0);

    let mut input_tokens = 0;
    if !context.is_empty() {
        backend.feed(context, SourceTag::Context)?;
        input_tokens += estimate_tokens(context);
        backend.feed("\n\n", SourceTag::Scaffold)?;
    }
    if !query.is_empty() {
        backend.feed(query, SourceTag::Scaffold)?;
        input_tokens += estimate_tokens(query);
    }
    let answer = backend.generate(GenerateMode::Answer)?;
    trace.push(
        None,
        input_tokens,
        estimate_tokens(&answer),
        StepDecision::NotApplicable,
        false,
    );
    Ok(trace.finish(backend, answer, 0, 0))
}

/// Chunked reading with a memory reset before every step; the running
/// summary survives only by being re-fed as text.
pub fn run_unsmooth(
    backend: &mut dyn Backend,
    chunks: &[Chunk],
    query: &str,
    opts: &RunOptions,
) -> Result<InferenceTrace, EngineError> {
    if chunks.is_empty() {
        return Err(EngineError::NoChunks);
    }
    let summary_cap = opts
        .summary_cap_tokens
        .unwrap_or_else(|| chunks.iter().map(|c| c.est_tokens).max().unwrap_or(0).max(1));
    let preamble = prompts::unsmooth_preamble(query);
    let scaffold_tokens = estimate_tokens(&preamble);
    let mut trace = TraceBuilder::new(Strategy::Unsmooth, backend, scaffold_tokens);

    let mut prev_summary: Option<ContextualSummary> = None;
    let mut last_answer: Option<String> = None;
    let mut chunks_read = 0;

    for (i, chunk) in chunks.iter().enumerate() {
        backend.reset()?;
        let mut input_tokens = 0;
        let mut overflow = false;
        if let Some(prev) = &prev_summary {
            let (rendered, truncated) = render_capped(prev, summary_cap);
            overflow = truncated;
            backend.feed(&rendered, SourceTag::Summary)?;
            input_tokens += estimate_tokens(&rendered);
            backend.feed(&opts.separator, SourceTag::Scaffold)?;
            input_tokens += estimate_tokens(&opts.separator);
        }
        backend.feed(&chunk.text, SourceTag::Context)?;
        input_tokens += chunk.est_tokens;
        backend.feed(&opts.separator, SourceTag::Scaffold)?;
        input_tokens += estimate_tokens(&opts.separator);
        backend.feed(&preamble, SourceTag::Scaffold)?;
        input_tokens += scaffold_tokens;

        let output = backend.generate(GenerateMode::Summary)?;
        let summary = protocol::parse(&output)
            .map_err(|source| EngineError::Protocol { step: i, source })?;
        trace.push(
            Some(chunk.index),
            input_tokens,
            estimate_tokens(&output),
            summary.decision.into(),
            overflow,
        );
        chunks_read += 1;
        if summary.decision == Decision::Stop {
            last_answer = summary.final_answer.clone();
            if opts.early_stop || i + 1 == chunks.len() {
                break;
            }
        }
        prev_summary = Some(summary);
    }

    let answer = match last_answer {
        Some(a) => a,
        None if opts.elicit_final_answer => {
            backend.reset()?;
            let mut input_tokens = 0;
            if let Some(prev) = &prev_summary {
                let (rendered, _) = render_capped(prev, summary_cap);
                backend.feed(&rendered, SourceTag::Summary)?;
                input_tokens += estimate_tokens(&rendered);
            }
            backend.feed(&opts.separator, SourceTag::Scaffold)?;
            input_tokens += estimate_tokens(&opts.separator);
            backend.feed(prompts::ELICIT_PROMPT, SourceTag::Scaffold)?;
            input_tokens += estimate_tokens(prompts::ELICIT_PROMPT);
            let answer = backend.generate(GenerateMode::Answer)?;
            trace.push(
                None,
                input_tokens,
                estimate_tokens(&answer),
                StepDecision::NotApplicable,
                false,
            );
            answer
        }
        None => String::new(),
    };
    Ok(trace.finish(backend, answer, chunks_read, chunks.len()))
}

/// Chunked reading with persistent memory: no resets, each step feeds
/// only its chunk, and generated summaries stay in the backend's memory
/// rather than being re-fed.
pub fn run_smooth(
    backend: &mut dyn Backend,
    chunks: &[Chunk],
    query: &str,
    opts: &RunOptions,
) -> Result<InferenceTrace, EngineError> {
    if chunks.is_empty() {
        return Err(EngineError::NoChunks);
    }
    let scaffold = if query.is_empty() {
        String::new()
    } else {
        prompts::smooth_preamble(query)
    };
    let scaffold_tokens = estimate_tokens(&scaffold);
    let mut trace = TraceBuilder::new(Strategy::Smooth, backend, scaffold_tokens);

    let mut last_answer: Option<String> = None;
    let mut last_decision = Decision::Continue;
    let mut chunks_read = 0;

    for (i, chunk) in chunks.iter().enumerate() {
        let mut input_tokens = 0;
        if i == 0 && !scaffold.is_empty() {
            backend.feed(&scaffold, SourceTag::Scaffold)?;
            input_tokens += scaffold_tokens;
        }
        if !opts.separator.is_empty() {
            backend.feed(&opts.separator, SourceTag::Scaffold)?;
            input_tokens += estimate_tokens(&opts.separator);
        }
        backend.feed(&chunk.text, SourceTag::Context)?;
        input_tokens += chunk.est_tokens;

        let output = backend.generate(GenerateMode::Summary)?;
        let summary = protocol::parse(&output)
            .map_err(|source| EngineError::Protocol { step: i, source })?;
        trace.push(
            Some(chunk.index),
            input_tokens,
            estimate_tokens(&output),
            summary.decision.into(),
            false,
        );
        chunks_read += 1;
        last_decision = summary.decision;
        if summary.decision == Decision::Stop {
            last_answer = summary.final_answer;
            if opts.early_stop || i + 1 == chunks.len() {
                break;
            }
        }
    }

    let answer = match (last_decision, last_answer) {
        (Decision::Stop, Some(a)) => a,
        (_, maybe) => {
            if opts.elicit_final_answer {
                backend.feed(&opts.separator, SourceTag::Scaffold)?;
                backend.feed(prompts::ELICIT_PROMPT, SourceTag::Scaffold)?;
                let input_tokens =
                    estimate_tokens(&opts.separator) + estimate_tokens(prompts::ELICIT_PROMPT);
                let answer = backend.generate(GenerateMode::Answer)?;
                trace.push(
                    None,
                    input_tokens,
                    estimate_tokens(&answer),
                    StepDecision::NotApplicable,
                    false,
                );
                answer
            } else {
                maybe.unwrap_or_default()
            }
        }
    };
    Ok(trace.finish(backend, answer, chunks_read, chunks.len()))
}

/// Render a summary, truncating clue text tail-first to fit the token
/// budget. The target is preserved so the reader stays on task.
fn render_capped(summary: &ContextualSummary, cap_tokens: u64) -> (String, bool) {
    let rendered = protocol::render(summary).expect("engine summaries are valid");
    if estimate_tokens(&rendered) <= cap_tokens {
        return (rendered, false);
    }
    let mut clipped = summary.clone();
    let mut clue_words: Vec<&str> = summary.clues.split_whitespace().collect();
    loop {
        let rendered = protocol::render(&clipped).expect("engine summaries are valid");
        if estimate_tokens(&rendered) <= cap_tokens || clue_words.is_empty() {
            return (rendered, true);
        }
        clue_words.pop();
        clipped.clues = clue_words.join(" ");
    }
}

/// Verify every chunk fits a per-step budget before an unsmooth run.
pub fn check_chunk_budget(chunks: &[Chunk], cap: u64) -> Result<(), EngineError> {
    for chunk in chunks {
        if chunk.est_tokens > cap {
            return Err(EngineError::ChunkOverBudget {
                index: chunk.index,
                est: chunk.est_tokens,
                cap,
            });
        }
    }
    Ok(())
}

/// Count resets the backend performed, for reset-discipline assertions.
pub fn reset_count(backend: &dyn Backend) -> usize {
    backend.session().count(CallKind::Reset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{CostConfig, SimBackend, TaskProgram};
    use crate::tasks;

    const UUID_A: &str = "aaaa1111-2222-4333-8444-555566667777";
    const UUID_B: &str = "bbbb1111-2222-4333-8444-555566667777";

    fn filler(n: usize, salt: &str) -> String {
        (0..n).map(|i| format!("pad{salt}{i} ")).collect()
    }

    fn chunk_list(texts: &[String]) -> Vec<Chunk> {
        let mut offset = 0;
        texts
            .iter()
            .enumerate()
            .map(|(index, text)| {
                let span = (offset, offset + text.len());
                offset += text.len();
                Chunk {
                    index,
                    text: text.clone(),
                    est_tokens: estimate_tokens(text),
                    byte_span: span,
                }
            })
            .collect()
    }

    #[test]
    fn one_step_answers_from_query_alone() {
        let mut b = SimBackend::unbounded(TaskProgram::NeedleRetrieval, CostConfig::default());
        let query = tasks::format_niah_query(&["apple".into()]);
        let trace = run_one_step(&mut b, "", &query).unwrap();
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.answer, "unknown");
        let expected = estimate_tokens(&query) + estimate_tokens(&trace.answer);
        assert_eq!(trace.peak_mr_tokens, expected);
    }

    #[test]
    fn one_step_requires_fresh_backend() {
        let mut b = SimBackend::unbounded(TaskProgram::NeedleRetrieval, CostConfig::default());
        b.feed("already used", SourceTag::Context).unwrap();
        assert!(matches!(
            run_one_step(&mut b, "ctx", "q"),
            Err(EngineError::BackendNotFresh)
        ));
    }

    #[test]
    fn one_step_window_eviction_loses_early_needle() {
        let context = format!("{} {}", tasks::format_needle("apple", UUID_A), filler(4000, "x"));
        let query = tasks::format_niah_query(&["apple".into()]);

        let mut swa = SimBackend::sliding_window(512, TaskProgram::NeedleRetrieval, CostConfig::default());
        let trace = run_one_step(&mut swa, &context, &query).unwrap();
        assert!(!trace.answer.contains(UUID_A));

        let mut attn = SimBackend::unbounded(TaskProgram::NeedleRetrieval, CostConfig::default());
        let trace = run_one_step(&mut attn, &context, &query).unwrap();
        assert!(trace.answer.contains(UUID_A));
    }

    #[test]
    fn unsmooth_stops_early_at_needle_chunk() {
        let chunks = chunk_list(&[
            filler(60, "a"),
            format!("{} {}", filler(20, "b"), tasks::format_needle("apple", UUID_A)),
            filler(60, "c"),
        ]);
        let query = tasks::format_niah_query(&["apple".into()]);
        let mut b = SimBackend::unbounded(TaskProgram::NeedleRetrieval, CostConfig::default());
        let trace = run_unsmooth(&mut b, &chunks, &query, &RunOptions::default()).unwrap();

        assert_eq!(trace.chunks_read, 2);
        assert_eq!(trace.chunks_total, 3);
        let decisions: Vec<StepDecision> = trace.steps.iter().map(|s| s.decision).collect();
        assert_eq!(decisions, vec![StepDecision::Continue, StepDecision::Stop]);
        assert_eq!(trace.answer, UUID_A);
        // One reset per step, none after the stop.
        assert_eq!(reset_count(&b), 2);
    }

    #[test]
    fn unsmooth_mr_stays_within_three_chunks_plus_scaffold() {
        let c = 256u64;
        let chunks = chunk_list(&[filler(120, "a"), filler(150, "b"), filler(100, "c")]);
        let query = tasks::format_niah_query(&["apple".into(), "brook".into()]);
        let mut b = SimBackend::unbounded(TaskProgram::NeedleRetrieval, CostConfig::default());
        let mut opts = RunOptions::default();
        opts.summary_cap_tokens = Some(c);
        let trace = run_unsmooth(&mut b, &chunks, &query, &opts).unwrap();
        for step in &trace.steps {
            assert!(step.mr_tokens <= 3 * c + trace.scaffold_tokens + 1);
            assert_eq!(memory_requirement(step), step.mr_tokens);
        }
    }

    #[test]
    fn smooth_never_resets_and_accumulates_clues() {
        let chunks = chunk_list(&[
            format!("{} {}", filler(30, "a"), tasks::format_needle("apple", UUID_A)),
            filler(40, "b"),
            format!("{} {}", tasks::format_needle("brook", UUID_B), filler(30, "c")),
        ]);
        let query = tasks::format_niah_query(&["apple".into(), "brook".into()]);
        let mut b = SimBackend::sliding_window(4096, TaskProgram::NeedleRetrieval, CostConfig::default());
        let trace = run_smooth(&mut b, &chunks, &query, &RunOptions::default()).unwrap();

        assert_eq!(reset_count(&b), 0);
        assert_eq!(trace.chunks_read, 3);
        assert!(trace.answer.contains(UUID_A));
        assert!(trace.answer.contains(UUID_B));
        let decisions: Vec<StepDecision> = trace.steps.iter().map(|s| s.decision).collect();
        assert_eq!(
            decisions,
            vec![StepDecision::Continue, StepDecision::Continue, StepDecision::Stop]
        );
    }

    #[test]
    fn smooth_single_chunk_stop() {
        let chunks = chunk_list(&[format!(
            "{} {}",
            tasks::format_needle("apple", UUID_A),
            filler(10, "z")
        )]);
        let query = tasks::format_niah_query(&["apple".into()]);
        let mut b = SimBackend::sliding_window(2048, TaskProgram::NeedleRetrieval, CostConfig::default());
        let trace = run_smooth(&mut b, &chunks, &query, &RunOptions::default()).unwrap();
        assert_eq!(trace.chunks_read, 1);
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.answer, UUID_A);
    }

    #[test]
    fn smooth_elicits_when_all_chunks_continue() {
        let chunks = chunk_list(&[filler(40, "a"), filler(40, "b")]);
        let query = tasks::format_niah_query(&["apple".into()]);
        let mut b = SimBackend::sliding_window(4096, TaskProgram::NeedleRetrieval, CostConfig::default());
        let trace = run_smooth(&mut b, &chunks, &query, &RunOptions::default()).unwrap();
        assert_eq!(trace.chunks_read, 2);
        assert_eq!(trace.steps.len(), 3);
        let last = trace.steps.last().unwrap();
        assert_eq!(last.chunk_index, None);
        assert_eq!(last.decision, StepDecision::NotApplicable);
        assert_eq!(trace.answer, "unknown");
    }

    #[test]
    fn smooth_per_step_input_bounded_by_chunk_plus_scaffold() {
        let chunks = chunk_list(&[filler(100, "a"), filler(120, "b")]);
        let query = tasks::format_niah_query(&["apple".into()]);
        let mut b = SimBackend::sliding_window(4096, TaskProgram::NeedleRetrieval, CostConfig::default());
        let trace = run_smooth(&mut b, &chunks, &query, &RunOptions::default()).unwrap();
        let c = chunks.iter().map(|c| c.est_tokens).max().unwrap();
        for step in trace.steps.iter().filter(|s| s.chunk_index.is_some()) {
            assert!(step.input_tokens <= c + trace.scaffold_tokens);
        }
    }

    #[test]
    fn trace_totals_are_consistent() {
        let chunks = chunk_list(&[filler(50, "a"), filler(50, "b")]);
        let query = tasks::format_niah_query(&["apple".into()]);
        let mut b = SimBackend::sliding_window(1024, TaskProgram::NeedleRetrieval, CostConfig::default());
        let trace = run_smooth(&mut b, &chunks, &query, &RunOptions::default()).unwrap();
        assert_eq!(
            trace.total_prefill_tokens,
            trace.steps.iter().map(|s| s.input_tokens).sum::<u64>()
        );
        assert_eq!(
            trace.total_decode_tokens,
            trace.steps.iter().map(|s| s.output_tokens).sum::<u64>()
        );
        assert_eq!(
            trace.peak_mr_tokens,
            trace.steps.iter().map(|s| s.mr_tokens).max().unwrap()
        );
        assert!((trace.virtual_time_seconds - b.clock_seconds()).abs() < 1e-12);
    }

    #[test]
    fn summary_truncation_preserves_target() {
        let summary = ContextualSummary::continuing(
            "the target line",
            filler(400, "clue"),
            "reasoning",
        );
        let (rendered, truncated) = render_capped(&summary, 64);
        assert!(truncated);
        assert!(estimate_tokens(&rendered) <= 64);
        assert!(rendered.contains("the target line"));
    }

    #[test]
    fn chunk_budget_check() {
        let chunks = chunk_list(&[filler(100, "a")]);
        assert!(check_chunk_budget(&chunks, 1000).is_ok());
        assert!(matches!(
            check_chunk_budget(&chunks, 10),
            Err(EngineError::ChunkOverBudget { .. })
        ));
    }

    #[test]
    fn plan_chunks_reserves_headroom() {
        let text: String = filler(2000, "w");
        let chunks = plan_chunks(&text, 512).unwrap();
        for c in &chunks {
            assert!(c.est_tokens <= 512 - DECODE_HEADROOM_TOKENS);
        }
        let joined: String = chunks.iter().map(|c| c.text.as_str()).collect();
        assert_eq!(joined, text);
    }
}
