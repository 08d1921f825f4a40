//! Named evaluation presets: the chunk sizes used when reading each
//! benchmark family with each model class.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown preset '{0}'; known presets: longbench-swa, niah-swa, longbench-rwkv, niah-rwkv")]
pub struct UnknownPreset(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preset {
    pub chunk_tokens: u64,
}

/// Look up a preset by name.
///
/// Sliding-window models read with larger chunks than the
/// linear-attention class, and the retrieval suite tolerates larger
/// chunks than the mixed benchmark.
pub fn lookup(name: &str) -> Result<Preset, UnknownPreset> {
    let chunk_tokens = match name {
        "longbench-swa" => 1024,
        "niah-swa" => 2048,
        "longbench-rwkv" => 512,
        "niah-rwkv" => 256,
        other => return Err(UnknownPreset(other.to_string())),
    };
    Ok(Preset { chunk_tokens })
}
