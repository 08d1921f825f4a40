//! Cross-module flows: generated items driven through the engine on the
//! simulated backends.

use smoothread_core::backends::{Backend, CallKind, CostConfig, SimBackend, TaskProgram};
use smoothread_core::benchgen::{gen_niah, gen_passage_count, NiahSpec, PassageCountSpec, Placement};
use smoothread_core::engine::{
    plan_chunks, run_one_step, run_smooth, run_unsmooth, RunOptions, Strategy,
};
use smoothread_core::metrics::score_item;

fn needle_program() -> TaskProgram {
    TaskProgram::NeedleRetrieval
}

/// Generator/solver cross-check: the unbounded backend reading the whole
/// context at once recovers every generated item.
#[test]
fn unbounded_one_step_solves_every_generated_item() {
    for seed in 0..10 {
        let spec = NiahSpec::new(4000, 1 + (seed as usize % 4), seed);
        let item = gen_niah(&spec).unwrap();
        let mut backend = SimBackend::unbounded(needle_program(), CostConfig::default());
        let trace = run_one_step(&mut backend, &item.context, &item.query).unwrap();
        assert_eq!(trace.steps.len(), 1);
        let score = score_item(&item, &trace.answer);
        assert_eq!(score.value, 1.0, "seed {seed}: answer {:?}", trace.answer);
    }
}

#[test]
fn sliding_window_one_step_misses_distant_needle() {
    let mut spec = NiahSpec::new(8000, 1, 3);
    spec.placement = Placement::OffsetFromEnd(vec![4000]);
    let item = gen_niah(&spec).unwrap();
    let mut backend = SimBackend::sliding_window(512, needle_program(), CostConfig::default());
    let trace = run_one_step(&mut backend, &item.context, &item.query).unwrap();
    assert_eq!(score_item(&item, &trace.answer).value, 0.0);
}

#[test]
fn smooth_reading_recovers_all_needles_when_chunks_fit() {
    let item = gen_niah(&NiahSpec::new(32_768, 4, 11)).unwrap();
    let mut backend = SimBackend::sliding_window(4096, needle_program(), CostConfig::default());
    let chunks = plan_chunks(&item.context, 2048).unwrap();
    let trace = run_smooth(&mut backend, &chunks, &item.query, &RunOptions::default()).unwrap();
    assert_eq!(trace.strategy, Strategy::Smooth);
    assert_eq!(score_item(&item, &trace.answer).value, 1.0);
    assert_eq!(backend.session().count(CallKind::Reset), 0);
}

#[test]
fn smooth_reading_collapses_when_chunks_overflow_window() {
    let item = gen_niah(&NiahSpec::new(16_384, 4, 12)).unwrap();
    let mut backend = SimBackend::sliding_window(512, needle_program(), CostConfig::default());
    let chunks = plan_chunks(&item.context, 4096).unwrap();
    let trace = run_smooth(&mut backend, &chunks, &item.query, &RunOptions::default()).unwrap();
    assert_eq!(score_item(&item, &trace.answer).value, 0.0);
}

#[test]
fn reset_discipline_distinguishes_the_strategies() {
    let item = gen_niah(&NiahSpec::new(4000, 2, 13)).unwrap();
    let chunks = plan_chunks(&item.context, 1024).unwrap();
    let opts = RunOptions {
        early_stop: false,
        ..RunOptions::default()
    };

    let mut smooth = SimBackend::sliding_window(8192, needle_program(), CostConfig::default());
    run_smooth(&mut smooth, &chunks, &item.query, &opts).unwrap();
    assert_eq!(smooth.session().count(CallKind::Reset), 0);

    let mut unsmooth = SimBackend::unbounded(needle_program(), CostConfig::default());
    let trace = run_unsmooth(&mut unsmooth, &chunks, &item.query, &opts).unwrap();
    // One reset per chunk step, plus one for the elicitation step if the
    // run ended on a continue decision.
    let elicit_steps = trace.steps.iter().filter(|s| s.chunk_index.is_none()).count();
    assert_eq!(
        unsmooth.session().count(CallKind::Reset),
        trace.chunks_read + elicit_steps
    );
}

#[test]
fn early_stop_halts_backend_traffic() {
    let mut spec = NiahSpec::new(16_000, 1, 14);
    // Pin the needle early so stopping saves most of the read.
    spec.placement = Placement::OffsetFromEnd(vec![14_000]);
    let item = gen_niah(&spec).unwrap();
    let chunks = plan_chunks(&item.context, 1024).unwrap();

    let mut backend = SimBackend::sliding_window(4096, needle_program(), CostConfig::default());
    let trace = run_smooth(&mut backend, &chunks, &item.query, &RunOptions::default()).unwrap();
    assert!(trace.chunks_read < trace.chunks_total);
    // No backend calls happen after the stop decision: the generate that
    // produced the stop is the final call in the log.
    let last_kind = backend.session().calls.last().unwrap().kind;
    assert_eq!(last_kind, CallKind::Generate);
    assert_eq!(score_item(&item, &trace.answer).value, 1.0);
}

#[test]
fn passage_count_flows_end_to_end() {
    let item = gen_passage_count(&PassageCountSpec {
        num_unique: 6,
        duplicate_copies: 4,
        seed: 15,
    })
    .unwrap();
    let mut backend = SimBackend::unbounded(TaskProgram::PassageCount, CostConfig::default());
    let chunks = plan_chunks(&item.context, 1024).unwrap();
    let trace = run_smooth(&mut backend, &chunks, &item.query, &RunOptions::default()).unwrap();
    assert_eq!(trace.answer, "6");
    assert_eq!(score_item(&item, &trace.answer).value, 1.0);
}

#[test]
fn smooth_beats_unsmooth_token_budget_and_matches_answers() {
    let item = gen_niah(&NiahSpec::new(8000, 2, 16)).unwrap();
    let chunks = plan_chunks(&item.context, 1024).unwrap();
    let opts = RunOptions {
        early_stop: false,
        ..RunOptions::default()
    };

    let mut smooth = SimBackend::sliding_window(8192, needle_program(), CostConfig::default());
    let smooth_trace = run_smooth(&mut smooth, &chunks, &item.query, &opts).unwrap();

    let mut unsmooth = SimBackend::unbounded(needle_program(), CostConfig::default());
    let unsmooth_trace = run_unsmooth(&mut unsmooth, &chunks, &item.query, &opts).unwrap();

    assert_eq!(score_item(&item, &smooth_trace.answer).value, 1.0);
    assert_eq!(score_item(&item, &unsmooth_trace.answer).value, 1.0);
    // Re-feeding the summary every step costs strictly more prefill.
    assert!(unsmooth_trace.total_prefill_tokens > smooth_trace.total_prefill_tokens);
}
