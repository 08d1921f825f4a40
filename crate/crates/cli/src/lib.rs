//! Library surface of the smoothread CLI: evaluation presets, the
//! window/chunk sweep harness, and artifact writers. The binary in
//! `main.rs` is a thin argument-parsing layer over these.

pub mod artifacts;
pub mod presets;
pub mod sweep;
