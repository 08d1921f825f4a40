//! Hierarchical delimiter chunking with word-based token estimation.
//!
//! Text is split on a prioritized delimiter list (paragraphs before
//! sentences before clauses before words). Adjacent segments are merged
//! greedily while the estimated token count stays under the limit; a
//! segment that is still too large is re-split at the next delimiter
//! level. Token counts are estimated as 1.5x the whitespace word count,
//! which avoids a tokenizer dependency.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default delimiter priority list, coarsest first. The trailing single
/// space is the last-resort word boundary.
pub const DEFAULT_DELIMITERS: [&str; 12] = [
    "\n\n\n", "\n\n", "\n", ". ", ".", "! ", "? ", ", ", "; ", ": ", " -- ", " ",
];

/// Estimate the token count of `text` as `Int(1.5 * n_words)`, where
/// words are maximal whitespace-separated runs and `Int` truncates.
pub fn estimate_tokens(text: &str) -> u64 {
    words_to_tokens(count_words(text))
}

/// Token estimate for a known word count under the default 3/2 ratio.
pub fn words_to_tokens(n_words: u64) -> u64 {
    n_words * 3 / 2
}

/// Largest word count whose token estimate still fits in `max_tokens`.
pub fn token_capacity_in_words(max_tokens: u64) -> u64 {
    // int(3w/2) <= t  <=>  w <= (2t + 1) / 3
    (2 * max_tokens + 1) / 3
}

fn count_words(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChunkerError {
    #[error("input text is empty")]
    EmptyInput,
    #[error("invalid chunking config: {0}")]
    InvalidConfig(String),
}

/// Splitting policy: delimiter priorities, the size cap, and the
/// word-to-token ratio used for estimates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChunkingConfig {
    /// Delimiters in priority order, coarsest first.
    pub delimiters: Vec<String>,
    /// Upper bound on the estimated token count of a chunk.
    pub max_chunk_tokens: u64,
    /// Tokens-per-word ratio as a rational (numerator, denominator).
    pub token_ratio: (u64, u64),
}

impl ChunkingConfig {
    pub fn new(max_chunk_tokens: u64) -> Self {
        Self {
            delimiters: DEFAULT_DELIMITERS.iter().map(|d| d.to_string()).collect(),
            max_chunk_tokens,
            token_ratio: (3, 2),
        }
    }

    /// Token estimate under this config's ratio.
    pub fn estimate(&self, text: &str) -> u64 {
        self.tokens_for_words(count_words(text))
    }

    fn tokens_for_words(&self, n_words: u64) -> u64 {
        n_words * self.token_ratio.0 / self.token_ratio.1
    }

    fn validate(&self) -> Result<(), ChunkerError> {
        if self.max_chunk_tokens == 0 {
            return Err(ChunkerError::InvalidConfig(
                "max_chunk_tokens must be >= 1".into(),
            ));
        }
        if self.delimiters.is_empty() {
            return Err(ChunkerError::InvalidConfig(
                "delimiter list must be non-empty".into(),
            ));
        }
        if self.delimiters.iter().any(|d| d.is_empty()) {
            return Err(ChunkerError::InvalidConfig(
                "delimiters must be non-empty strings".into(),
            ));
        }
        if self.token_ratio.1 == 0 {
            return Err(ChunkerError::InvalidConfig(
                "token_ratio denominator must be nonzero".into(),
            ));
        }
        Ok(())
    }
}

/// A contiguous slice of the source text with its token estimate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    /// 0-based position in the chunk sequence.
    pub index: usize,
    pub text: String,
    pub est_tokens: u64,
    /// Half-open `[start, end)` byte offsets into the source.
    pub byte_span: (usize, usize),
}

/// Split `text` into size-bounded chunks.
///
/// Splits on the highest-priority delimiter first, merges adjacent
/// segments left to right while they fit, and recursively re-splits any
/// segment that alone exceeds the limit. Delimiters stay attached to the
/// preceding segment, so concatenating the chunks reproduces the source
/// byte for byte. A segment with no occurrence of any delimiter is
/// emitted as-is even when oversized.
pub fn split_hierarchical(text: &str, config: &ChunkingConfig) -> Result<Vec<Chunk>, ChunkerError> {
    config.validate()?;
    if text.is_empty() {
        return Err(ChunkerError::EmptyInput);
    }

    let mut pieces = Vec::new();
    split_level(text, config, 0, &mut pieces);

    let mut chunks = Vec::with_capacity(pieces.len());
    let mut offset = 0usize;
    for (index, piece) in pieces.into_iter().enumerate() {
        let end = offset + piece.len();
        chunks.push(Chunk {
            index,
            est_tokens: config.estimate(piece),
            text: piece.to_string(),
            byte_span: (offset, end),
        });
        offset = end;
    }
    Ok(chunks)
}

/// Split one segment at delimiter `level`, appending result pieces.
fn split_level<'a>(text: &'a str, config: &ChunkingConfig, level: usize, out: &mut Vec<&'a str>) {
    if config.estimate(text) <= config.max_chunk_tokens {
        out.push(text);
        return;
    }
    if level >= config.delimiters.len() {
        // No delimiter left to try; emit oversized.
        out.push(text);
        return;
    }

    let delim = config.delimiters[level].as_str();
    let segments: Vec<&str> = text.split_inclusive(delim).collect();
    if segments.len() <= 1 {
        split_level(text, config, level + 1, out);
        return;
    }

    // Greedy left-to-right merge over an accumulator tracked as a byte
    // range into `text`. Word counts are maintained incrementally:
    // words(a || b) = words(a) + words(b) - 1 when the join glues two
    // non-whitespace runs together.
    let mut acc_start: Option<usize> = None;
    let mut acc_end = 0usize;
    let mut acc_words: u64 = 0;
    let mut acc_ends_in_word = false;
    let mut cursor = 0usize;

    for seg in segments {
        let seg_words = count_words(seg);
        let seg_starts_in_word = seg.chars().next().is_some_and(|c| !c.is_whitespace());
        let seg_ends_in_word = seg.chars().next_back().is_some_and(|c| !c.is_whitespace());

        if acc_start.is_some() {
            let glue = if acc_ends_in_word && seg_starts_in_word {
                1
            } else {
                0
            };
            let merged_words = acc_words + seg_words - glue;
            if config.tokens_for_words(merged_words) <= config.max_chunk_tokens {
                acc_end = cursor + seg.len();
                acc_words = merged_words;
                acc_ends_in_word = seg_ends_in_word;
                cursor += seg.len();
                continue;
            }
            out.push(&text[acc_start.unwrap()..acc_end]);
            acc_start = None;
        }

        if config.tokens_for_words(seg_words) <= config.max_chunk_tokens {
            acc_start = Some(cursor);
            acc_end = cursor + seg.len();
            acc_words = seg_words;
            acc_ends_in_word = seg_ends_in_word;
        } else {
            split_level(seg, config, level + 1, out);
        }
        cursor += seg.len();
    }
    if let Some(start) = acc_start {
        out.push(&text[start..acc_end]);
    }
}


#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    fn arb_text() -> impl Strategy<Value = String> {
        let word = prop::string::string_regex("[a-zA-Z0-9\u{e9}\u{4e16}\u{754c}]{1,8}").unwrap();
        let sep = prop::sample::select(vec![
            " ", ". ", ", ", "\n", "\n\n", "! ", "? ", "; ", ": ", " -- ", ".",
        ]);
        prop::collection::vec((word, sep), 1..120).prop_map(|pairs| {
            let mut s = String::new();
            for (w, sep) in pairs {
                s.push_str(&w);
                s.push_str(sep);
            }
            s
        })
    }

    proptest! {
        #[test]
        fn round_trip_and_bounds(text in arb_text(), max in 1u64..60) {
            let cfg = ChunkingConfig::new(max);
            let chunks = split_hierarchical(&text, &cfg).unwrap();
            let joined: String = chunks.iter().map(|c| c.text.as_str()).collect();
            prop_assert_eq!(&joined, &text);

            let mut offset = 0;
            for c in &chunks {
                prop_assert_eq!(c.byte_span.0, offset);
                offset = c.byte_span.1;
                prop_assert_eq!(c.est_tokens, estimate_tokens(&c.text));
                if c.est_tokens > max {
                    // Only permitted when no listed delimiter occurs inside.
                    let has_delim = cfg.delimiters.iter().any(|d| c.text.contains(d.as_str()));
                    prop_assert!(!has_delim, "oversized chunk contains a delimiter: {:?}", c.text);
                }
            }
            prop_assert_eq!(offset, text.len());
        }
    }
}
