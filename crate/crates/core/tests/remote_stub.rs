//! Remote backend behavior against the in-process stub endpoint.

use smoothread_core::backends::stub::{StubResponse, StubServer};
use smoothread_core::backends::{
    remote_generate_with_stats, Backend, BackendError, ChatMessage, GenerateMode, RemoteBackend,
    RemoteBackendConfig, SourceTag,
};
use smoothread_core::benchgen::TaskKind;
use smoothread_core::chunker::{split_hierarchical, ChunkingConfig};
use smoothread_core::dataset_builder::{RawItem, RemoteTeacher, Teacher};
use smoothread_core::protocol::{self, Decision};

fn config_for(server: &StubServer) -> RemoteBackendConfig {
    let mut cfg = RemoteBackendConfig::new(server.url(), "stub-model");
    cfg.request_timeout_seconds = 5;
    cfg
}

fn canned_summary() -> String {
    protocol::render(&protocol::ContextualSummary::stopping(
        "find the answer",
        "stub clue line",
        "the stub always knows",
        "42",
    ))
    .unwrap()
}

#[test]
fn canned_summary_round_trips() {
    let server = StubServer::start(vec![StubResponse::Chat(canned_summary())]).unwrap();
    let mut backend = RemoteBackend::new(config_for(&server), "system prompt");
    backend.feed("some chunk text", SourceTag::Context).unwrap();
    let text = backend.generate(GenerateMode::Summary).unwrap();
    let summary = protocol::parse(&text).unwrap();
    assert_eq!(summary.decision, Decision::Stop);
    assert_eq!(summary.final_answer.as_deref(), Some("42"));
    // The request carried the fed text.
    let requests = server.requests();
    assert_eq!(requests.len(), 1);
    assert!(requests[0].contains("some chunk text"));
}

#[test]
fn transient_failures_are_retried() {
    let server = StubServer::start(vec![
        StubResponse::Status(500),
        StubResponse::Status(503),
        StubResponse::Chat("recovered".into()),
    ])
    .unwrap();
    let cfg = config_for(&server);
    let (text, retries) =
        remote_generate_with_stats(&cfg, &[ChatMessage::user("hello")]).unwrap();
    assert_eq!(text, "recovered");
    assert_eq!(retries, 2);
}

#[test]
fn retries_exhaust_into_unavailable() {
    let server = StubServer::start(vec![StubResponse::Status(500)]).unwrap();
    let mut cfg = config_for(&server);
    cfg.max_retries = 1;
    let err = remote_generate_with_stats(&cfg, &[ChatMessage::user("x")]).unwrap_err();
    match err {
        BackendError::RemoteUnavailable { attempts, .. } => assert_eq!(attempts, 2),
        other => panic!("expected RemoteUnavailable, got {other:?}"),
    }
}

#[test]
fn malformed_body_is_a_protocol_error() {
    let server =
        StubServer::start(vec![StubResponse::RawBody("this is not json".into())]).unwrap();
    let err = remote_generate_with_stats(&config_for(&server), &[ChatMessage::user("x")])
        .unwrap_err();
    assert!(matches!(err, BackendError::RemoteProtocolError(_)));
}

#[test]
fn client_errors_do_not_retry() {
    let server = StubServer::start(vec![
        StubResponse::Status(400),
        StubResponse::Chat("should never be reached".into()),
    ])
    .unwrap();
    let err = remote_generate_with_stats(&config_for(&server), &[ChatMessage::user("x")])
        .unwrap_err();
    match err {
        BackendError::RemoteUnavailable { attempts, message } => {
            assert_eq!(attempts, 1);
            assert!(message.contains("400"));
        }
        other => panic!("expected RemoteUnavailable, got {other:?}"),
    }
    assert_eq!(server.requests().len(), 1);
}

#[test]
fn remote_teacher_collects_stub_summaries_verbatim() {
    let continuing = protocol::render(&protocol::ContextualSummary::continuing(
        "keep reading",
        "stub clue alpha",
        "nothing decisive yet",
    ))
    .unwrap();
    let stopping = protocol::render(&protocol::ContextualSummary::stopping(
        "keep reading",
        "stub clue alpha; stub clue beta",
        "that settles it",
        "beta",
    ))
    .unwrap();
    let server = StubServer::start(vec![
        StubResponse::Chat(continuing),
        StubResponse::Chat(stopping),
    ])
    .unwrap();

    let raw = RawItem {
        query: "which clue settles it?".into(),
        answer: "beta".into(),
        context: "first part of the context here.\n\nsecond part of the context here.".into(),
        task: TaskKind::QuestionAnswering,
    };
    let chunks = split_hierarchical(&raw.context, &ChunkingConfig::new(12)).unwrap();
    assert_eq!(chunks.len(), 2);

    let mut teacher = RemoteTeacher::new(config_for(&server));
    let run = teacher.teach(&raw, &chunks, true).unwrap();
    assert_eq!(run.summaries.len(), 2);
    assert_eq!(run.summaries[0].clues, "stub clue alpha");
    assert_eq!(run.summaries[1].decision, Decision::Stop);
    assert_eq!(run.answer, "beta");
    // Step two re-fed the first summary, unsmooth style.
    let requests = server.requests();
    assert!(requests[1].contains("stub clue alpha"));
}
