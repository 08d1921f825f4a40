//! Shared text conventions for the synthetic tasks.
//!
//! Needle sentences, retrieval queries, clue lines and passage markers
//! all follow fixed templates so that the generators, the simulated
//! backends and the rule teacher agree on one vocabulary. Everything
//! here works on whitespace word streams, which is how the simulators
//! store their memory.

/// Words that open a needle sentence.
const NEEDLE_PREFIX: [&str; 5] = ["The", "special", "magic", "word", "for"];

/// A hidden fact: `The special magic word for <key> is <uuid>.`
pub fn format_needle(key: &str, uuid: &str) -> String {
    format!("The special magic word for {key} is {uuid}.")
}

/// Retrieval query listing every requested key.
pub fn format_niah_query(keys: &[String]) -> String {
    match keys {
        [one] => format!("What is the special magic word for {one}?"),
        many => {
            let mut list = String::new();
            for (i, k) in many.iter().enumerate() {
                if i > 0 {
                    list.push_str(", ");
                }
                if i + 1 == many.len() {
                    list.push_str("and ");
                }
                list.push_str(k);
            }
            format!("What are the special magic words for {list}?")
        }
    }
}

/// Target line restating a retrieval task.
pub fn format_niah_target(keys: &[String]) -> String {
    format!("find the special magic words for {}", keys.join(", "))
}

/// One resolved clue, `<key>: <uuid>`.
pub fn format_clue(key: &str, uuid: &str) -> String {
    format!("{key}: {uuid}")
}

pub fn format_passage_count_query() -> String {
    "How many unique passages appear in the text?".to_string()
}

pub fn format_passage(label: &str, body: &str) -> String {
    format!("Passage {label}: {body}")
}

/// True when `w` looks like a hyphenated 36-character UUID, ignoring
/// trailing punctuation.
pub fn is_uuid_word(w: &str) -> bool {
    let w = strip_trailing_punct(w);
    let bytes = w.as_bytes();
    if bytes.len() != 36 {
        return false;
    }
    bytes.iter().enumerate().all(|(i, b)| match i {
        8 | 13 | 18 | 23 => *b == b'-',
        _ => b.is_ascii_hexdigit(),
    })
}

pub fn strip_trailing_punct(w: &str) -> &str {
    w.trim_end_matches(['.', ',', ';', '?', '!'])
}

/// Scan a word stream for complete needle sentences, returning
/// `(key, uuid)` pairs in order of appearance.
pub fn find_needles(words: &[&str]) -> Vec<(String, String)> {
    let mut found = Vec::new();
    let mut i = 0;
    while i + NEEDLE_PREFIX.len() + 3 <= words.len() {
        if words[i..i + 5] == NEEDLE_PREFIX
            && words[i + 6] == "is"
            && is_uuid_word(words[i + 7])
        {
            let key = strip_trailing_punct(words[i + 5]).to_string();
            let uuid = strip_trailing_punct(words[i + 7]).to_string();
            found.push((key, uuid));
            i += 8;
        } else {
            i += 1;
        }
    }
    found
}

/// Recover the requested key set from a word stream containing either
/// the query or a TARGET restatement.
///
/// Looks for `magic word(s) for` and collects key words up to a question
/// mark or a following field header. An occurrence followed by `is` is a
/// needle sentence, not a task statement, and is skipped. The most
/// recent successful occurrence wins.
pub fn parse_requested_keys(words: &[&str]) -> Vec<String> {
    let mut best: Option<Vec<String>> = None;
    for i in 0..words.len() {
        if words[i] != "magic" {
            continue;
        }
        if i + 2 >= words.len() || !matches!(words[i + 1], "word" | "words") || words[i + 2] != "for" {
            continue;
        }
        let mut keys = Vec::new();
        let mut ok = false;
        for w in &words[i + 3..] {
            if *w == "is" || is_uuid_word(w) {
                break; // needle sentence, not a task statement
            }
            if matches!(*w, "CLUES:" | "REASON:" | "ANSWER:") {
                ok = !keys.is_empty();
                break;
            }
            if *w == "and" {
                continue;
            }
            let ends_question = w.ends_with('?');
            let key = strip_trailing_punct(w);
            if !key.is_empty() {
                keys.push(key.to_string());
            }
            if ends_question {
                ok = !keys.is_empty();
                break;
            }
            if keys.len() > 16 {
                break;
            }
        }
        if ok {
            best = Some(keys);
        }
    }
    best.unwrap_or_default()
}

/// Collect `<key>: <uuid>` clue pairs present in a word stream.
pub fn find_clues(words: &[&str]) -> Vec<(String, String)> {
    let mut clues = Vec::new();
    for i in 0..words.len().saturating_sub(1) {
        let w = words[i];
        if w.len() > 1 && w.ends_with(':') && is_uuid_word(words[i + 1]) {
            let key = w.trim_end_matches(':').to_string();
            let uuid = strip_trailing_punct(words[i + 1]).to_string();
            clues.push((key, uuid));
        }
    }
    clues
}

/// Passage labels visible in a word stream (`Passage <label>:`).
pub fn find_passage_labels(words: &[&str]) -> Vec<String> {
    let mut labels = Vec::new();
    for i in 0..words.len().saturating_sub(1) {
        if words[i] == "Passage" && words[i + 1].ends_with(':') && words[i + 1].len() > 1 {
            labels.push(words[i + 1].trim_end_matches(':').to_string());
        }
    }
    labels
}

/// Labels recorded in a `seen:` clue line.
pub fn parse_seen_labels(words: &[&str]) -> Vec<String> {
    let mut seen = Vec::new();
    for i in 0..words.len() {
        if words[i] != "seen:" {
            continue;
        }
        for w in &words[i + 1..] {
            if w.ends_with(':') || matches!(*w, "REASON:" | "ANSWER:") {
                break;
            }
            seen.push(strip_trailing_punct(w).to_string());
        }
    }
    seen
}
