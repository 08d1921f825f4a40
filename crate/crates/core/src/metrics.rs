//! Evaluation and data-cleaning metrics: exact match, token F1, ROUGE-L
//! and edit similarity, plus task-to-metric mapping and suite scoring.
//!
//! Normalization follows the usual extractive-QA convention: lowercase,
//! strip punctuation, collapse whitespace, drop English articles. Edit
//! similarity works on raw characters.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchgen::{EvalItem, TaskKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    ExactMatch,
    TokenF1,
    RougeL,
    EditSim,
}

impl MetricKind {
    /// Default metric for a task, mirroring the dataset-construction
    /// configuration this toolkit targets.
    pub fn for_task(task: TaskKind) -> Self {
        match task {
            TaskKind::NeedleRetrieval => MetricKind::ExactMatch,
            TaskKind::PassageCount => MetricKind::ExactMatch,
            TaskKind::PassageRetrieval => MetricKind::ExactMatch,
            TaskKind::QuestionAnswering => MetricKind::TokenF1,
            TaskKind::Summarization => MetricKind::RougeL,
            TaskKind::FewShot => MetricKind::TokenF1,
            TaskKind::CodeGeneration => MetricKind::EditSim,
        }
    }

    pub fn score(self, pred: &str, gold: &str) -> f64 {
        match self {
            MetricKind::ExactMatch => exact_match(pred, gold),
            MetricKind::TokenF1 => token_f1(pred, gold),
            MetricKind::RougeL => rouge_l(pred, gold),
            MetricKind::EditSim => edit_similarity(pred, gold),
        }
    }
}

/// A named score in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub name: MetricKind,
    pub value: f64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("cannot aggregate an empty suite")]
    EmptySuite,
}

const ARTICLES: [&str; 3] = ["a", "an", "the"];

/// Lowercase, replace punctuation with spaces, drop articles, collapse
/// whitespace. Used by exact match.
pub fn normalize(text: &str) -> String {
    normalize_keeping_articles(text)
        .split_whitespace()
        .filter(|w| !ARTICLES.contains(w))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Lowercase, replace punctuation with spaces, collapse whitespace.
/// The token-overlap metrics keep articles: they are ordinary tokens
/// for precision/recall purposes.
pub fn normalize_keeping_articles(text: &str) -> String {
    let lowered = text.to_lowercase();
    let mut cleaned = String::with_capacity(lowered.len());
    for ch in lowered.chars() {
        if ch.is_alphanumeric() {
            cleaned.push(ch);
        } else {
            cleaned.push(' ');
        }
    }
    cleaned.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn normalized_tokens(text: &str) -> Vec<String> {
    normalize_keeping_articles(text)
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

/// 1.0 iff the normalized strings are equal.
pub fn exact_match(pred: &str, gold: &str) -> f64 {
    if normalize(pred) == normalize(gold) {
        1.0
    } else {
        0.0
    }
}

/// Harmonic mean of precision and recall over normalized token
/// multisets. Both sides empty scores 1.0; exactly one empty scores 0.
pub fn token_f1(pred: &str, gold: &str) -> f64 {
    let p = normalized_tokens(pred);
    let g = normalized_tokens(gold);
    if p.is_empty() && g.is_empty() {
        return 1.0;
    }
    if p.is_empty() || g.is_empty() {
        return 0.0;
    }
    let mut counts: HashMap<&str, i64> = HashMap::new();
    for t in &g {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    let mut overlap = 0i64;
    for t in &p {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    // 2PR/(P+R) simplifies to 2*overlap/(|p|+|g|).
    2.0 * overlap as f64 / (p.len() + g.len()) as f64
}

/// LCS-based F-measure over normalized tokens with equal
/// precision/recall weight.
pub fn rouge_l(pred: &str, gold: &str) -> f64 {
    let p = normalized_tokens(pred);
    let g = normalized_tokens(gold);
    if p.is_empty() && g.is_empty() {
        return 1.0;
    }
    if p.is_empty() || g.is_empty() {
        return 0.0;
    }
    let lcs = lcs_length(&p, &g);
    2.0 * lcs as f64 / (p.len() + g.len()) as f64
}

fn lcs_length(a: &[String], b: &[String]) -> usize {
    let n = b.len();
    let mut prev = vec![0usize; n + 1];
    let mut cur = vec![0usize; n + 1];
    for ai in a {
        for (j, bj) in b.iter().enumerate() {
            cur[j + 1] = if ai == bj {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[n]
}

/// `1 - levenshtein(pred, gold) / max(len)` over characters; 1.0 when
/// both strings are empty.
pub fn edit_similarity(pred: &str, gold: &str) -> f64 {
    let a: Vec<char> = pred.chars().collect();
    let b: Vec<char> = gold.chars().collect();
    let max_len = a.len().max(b.len());
    if max_len == 0 {
        return 1.0;
    }
    1.0 - levenshtein(&a, &b) as f64 / max_len as f64
}

fn levenshtein(a: &[char], b: &[char]) -> usize {
    let n = b.len();
    let mut prev: Vec<usize> = (0..=n).collect();
    let mut cur = vec![0usize; n + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[n]
}

/// Score one answer against an item under the task's metric.
///
/// Multi-gold items (several needles) score the mean of per-gold exact
/// matches, where a gold value matches when it appears inside the
/// normalized answer.
pub fn score_item(item: &EvalItem, answer: &str) -> MetricResult {
    let name = MetricKind::for_task(item.task);
    let value = if item.gold.len() > 1 || item.task == TaskKind::NeedleRetrieval {
        let haystack = normalize(answer);
        let mut hit = 0usize;
        for gold in &item.gold {
            if haystack.contains(&normalize(gold)) {
                hit += 1;
            }
        }
        hit as f64 / item.gold.len().max(1) as f64
    } else {
        let gold = item.gold.first().map(String::as_str).unwrap_or("");
        name.score(answer, gold)
    };
    MetricResult { name, value }
}

/// Arithmetic mean of item scores, scaled to 0..100 and rounded to two
/// decimals.
pub fn score_suite(scores: &[f64]) -> Result<f64, MetricsError> {
    if scores.is_empty() {
        return Err(MetricsError::EmptySuite);
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    Ok((mean * 10_000.0).round() / 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchgen::ItemMeta;

    #[test]
    fn exact_match_normalizes() {
        assert_eq!(exact_match("The Answer", "answer"), 1.0);
        assert_eq!(exact_match("42", "43"), 0.0);
        assert_eq!(exact_match("", ""), 1.0);
    }

    #[test]
    fn f1_bounds_and_cases() {
        assert_eq!(token_f1("same words here", "same words here"), 1.0);
        assert_eq!(token_f1("cats dogs", "fish birds"), 0.0);
        assert_eq!(token_f1("", "something"), 0.0);
        assert_eq!(token_f1("something", ""), 0.0);
        assert_eq!(token_f1("", ""), 1.0);
    }

    #[test]
    fn f1_two_thirds_exact() {
        // overlap 2 of 3 tokens each side: 2*2/(3+3) = 2/3 exactly.
        assert_eq!(token_f1("a b c", "a b d"), 2.0 / 3.0);
    }

    #[test]
    fn rouge_cases() {
        assert_eq!(rouge_l("the cat", "the cat"), 1.0);
        // LCS = 2 of lengths 2 and 3: P=1, R=2/3, F=0.8.
        assert_eq!(rouge_l("the cat", "the cat sat"), 0.8);
        assert_eq!(rouge_l("alpha beta", "gamma delta"), 0.0);
        assert_eq!(rouge_l("", ""), 1.0);
    }

    #[test]
    fn edit_similarity_cases() {
        assert!((edit_similarity("kitten", "sitting") - (1.0 - 3.0 / 7.0)).abs() < 1e-12);
        assert_eq!(edit_similarity("same", "same"), 1.0);
        assert_eq!(edit_similarity("", "abc"), 0.0);
        assert_eq!(edit_similarity("", ""), 1.0);
    }

    fn niah_item(gold: Vec<&str>) -> EvalItem {
        EvalItem {
            context: String::new(),
            query: String::new(),
            gold: gold.into_iter().map(String::from).collect(),
            task: TaskKind::NeedleRetrieval,
            meta: ItemMeta::default(),
        }
    }

    #[test]
    fn multi_needle_partial_credit() {
        let item = niah_item(vec!["aaa-1", "bbb-2", "ccc-3", "ddd-4"]);
        let r = score_item(&item, "found aaa-1 and bbb-2, also ccc-3");
        assert_eq!(r.value, 0.75);
    }

    #[test]
    fn suite_scoring() {
        assert_eq!(score_suite(&[1.0, 0.0]).unwrap(), 50.00);
        assert_eq!(score_suite(&[]).unwrap_err(), MetricsError::EmptySuite);
    }
}

#[cfg(test)]
mod oracle_tests {
    //! Independent re-derivations of the sequence metrics: an
    //! enumerate-all-subsequences LCS and a full-matrix edit distance.

    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// LCS by enumerating every subsequence of the shorter side and
    /// testing it against the longer side. Exponential, so callers keep
    /// the shorter side small.
    fn lcs_brute(a: &[String], b: &[String]) -> usize {
        let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
        assert!(short.len() <= 14, "brute-force side too long");
        let mut best = 0;
        for mask in 0u32..(1 << short.len()) {
            let len = mask.count_ones() as usize;
            if len <= best {
                continue;
            }
            let sub: Vec<&String> = short
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, t)| t)
                .collect();
            let mut it = long.iter();
            if sub.iter().all(|t| it.any(|u| &u == t)) {
                best = len;
            }
        }
        best
    }

    /// Full-matrix edit distance, kept separate from the two-row
    /// implementation under test.
    fn levenshtein_matrix(a: &[char], b: &[char]) -> usize {
        let (m, n) = (a.len(), b.len());
        let mut d = vec![vec![0usize; n + 1]; m + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i;
        }
        for j in 0..=n {
            d[0][j] = j;
        }
        for i in 1..=m {
            for j in 1..=n {
                let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
                d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
            }
        }
        d[m][n]
    }

    fn random_tokens(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<String> {
        let vocab = ["red", "blue", "green", "dot", "dash"];
        let len = rng.gen_range(0..=max_len);
        (0..len)
            .map(|_| vocab[rng.gen_range(0..vocab.len())].to_string())
            .collect()
    }

    #[test]
    fn rouge_matches_brute_force_lcs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let a = random_tokens(&mut rng, 12);
            let b = random_tokens(&mut rng, 20);
            let brute = lcs_brute(&a, &b);
            assert_eq!(lcs_length(&a, &b), brute, "a={a:?} b={b:?}");
            let expected = if a.is_empty() && b.is_empty() {
                1.0
            } else if a.is_empty() || b.is_empty() {
                0.0
            } else {
                2.0 * brute as f64 / (a.len() + b.len()) as f64
            };
            assert_eq!(rouge_l(&a.join(" "), &b.join(" ")), expected);
        }
    }

    fn random_chars(rng: &mut ChaCha8Rng, max_len: usize) -> String {
        let vocab = ['x', 'y', 'z', '1', '2'];
        let len = rng.gen_range(0..=max_len);
        (0..len).map(|_| vocab[rng.gen_range(0..vocab.len())]).collect()
    }

    #[test]
    fn edit_similarity_matches_matrix_dp() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let a = random_chars(&mut rng, 30);
            let b = random_chars(&mut rng, 30);
            let ac: Vec<char> = a.chars().collect();
            let bc: Vec<char> = b.chars().collect();
            let d = levenshtein_matrix(&ac, &bc);
            assert_eq!(levenshtein(&ac, &bc), d);
            let max_len = ac.len().max(bc.len());
            let expected = if max_len == 0 {
                1.0
            } else {
                1.0 - d as f64 / max_len as f64
            };
            assert_eq!(edit_similarity(&a, &b), expected);
        }
    }

    #[test]
    fn edit_distance_triangle_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let xs: Vec<Vec<char>> = (0..3)
                .map(|_| random_chars(&mut rng, 15).chars().collect())
                .collect();
            let dab = levenshtein(&xs[0], &xs[1]);
            let dbc = levenshtein(&xs[1], &xs[2]);
            let dac = levenshtein(&xs[0], &xs[2]);
            assert!(dac <= dab + dbc);
        }
    }
}
