//! Candidate filter pipeline shared by the reasoning chains.
//!
//! Applied in order: drop non-alphabetic tokens, drop stopwords, drop the
//! denied terms (an op's subject concept plus its naive plural), drop tokens
//! shorter than two characters. Survivors keep their score order and are
//! re-ranked consecutively from 1.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::backend::Candidate;

/// Fixed stopword list, sorted for binary search.
const STOPWORDS: &[&str] = &[
    "a",
    "about",
    "above",
    "after",
    "again",
    "against",
    "all",
    "am",
    "an",
    "and",
    "any",
    "are",
    "as",
    "at",
    "be",
    "because",
    "been",
    "before",
    "being",
    "below",
    "between",
    "both",
    "but",
    "by",
    "can",
    "cannot",
    "could",
    "did",
    "do",
    "does",
    "doing",
    "down",
    "during",
    "each",
    "few",
    "for",
    "from",
    "further",
    "had",
    "has",
    "have",
    "having",
    "he",
    "her",
    "here",
    "hers",
    "herself",
    "him",
    "himself",
    "his",
    "how",
    "i",
    "if",
    "in",
    "into",
    "is",
    "it",
    "its",
    "itself",
    "just",
    "like",
    "me",
    "more",
    "most",
    "my",
    "myself",
    "no",
    "nor",
    "not",
    "now",
    "of",
    "off",
    "on",
    "once",
    "only",
    "or",
    "other",
    "our",
    "ours",
    "ourselves",
    "out",
    "over",
    "own",
    "same",
    "she",
    "should",
    "so",
    "some",
    "such",
    "than",
    "that",
    "the",
    "their",
    "theirs",
    "them",
    "themselves",
    "then",
    "there",
    "these",
    "they",
    "this",
    "those",
    "through",
    "to",
    "too",
    "under",
    "until",
    "up",
    "very",
    "was",
    "we",
    "were",
    "what",
    "when",
    "where",
    "which",
    "while",
    "who",
    "whom",
    "why",
    "will",
    "with",
    "would",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
];

pub fn is_stopword(token: &str) -> bool {
    let lower = token.to_lowercase();
    STOPWORDS.binary_search(&lower.as_str()).is_ok()
}

/// Naive pluralization used when excluding a concept from its own candidates.
pub fn naive_plural(word: &str) -> String {
    let lower = word.to_lowercase();
    if lower.ends_with('s')
        || lower.ends_with('x')
        || lower.ends_with('z')
        || lower.ends_with("ch")
        || lower.ends_with("sh")
    {
        let mut out = lower;
        out.push_str("es");
        return out;
    }
    if let Some(stem) = lower.strip_suffix('y') {
        let penultimate = stem.chars().last();
        if penultimate.is_some_and(|c| !matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')) {
            let mut out = stem.to_string();
            out.push_str("ies");
            return out;
        }
    }
    let mut out = lower;
    out.push('s');
    out
}

/// Run the filter pipeline and re-rank the survivors.
pub fn filter_candidates(candidates: Vec<Candidate>, deny: &[&str]) -> Vec<Candidate> {
    let mut denied = BTreeSet::new();
    for term in deny {
        let lower = term.trim().to_lowercase();
        if lower.is_empty() {
            continue;
        }
        denied.insert(naive_plural(&lower));
        denied.insert(lower);
    }

    let mut out: Vec<Candidate> = candidates
        .into_iter()
        .filter(|c| {
            let token = c.token.as_str();
            token.chars().all(char::is_alphabetic)
                && !is_stopword(token)
                && !denied.contains(&token.to_lowercase())
                && token.chars().count() >= 2
        })
        .collect();
    for (i, c) in out.iter_mut().enumerate() {
        c.rank = i + 1;
    }
    out
}
