//! Knowledge-base candidate generation, the evaluation baseline.
//!
//! Instead of asking a language model, candidate properties are looked up as
//! the end terms of explicit graph relations (IsA, HasA, HasProperty, ...)
//! starting at the object's root word: "a low budget film" reduces to "film",
//! and film's outgoing edges become the ranked candidate list.
//!
//! The store itself is abstract. [`FixtureKB`] is an in-memory snapshot for
//! deterministic tests; a live HTTP client can implement [`KnowledgeBase`]
//! in a companion crate.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::backend::Candidate;
use crate::filter::is_stopword;

/// Relation names consulted by default.
pub const DEFAULT_RELATIONS: &[&str] = &["IsA", "HasA", "HasProperty", "CapableOf", "UsedFor"];

/// One directed, weighted edge of the knowledge graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KBRelation {
    pub relation: String,
    pub start: String,
    pub end: String,
    pub weight: f64,
}

/// The relation names a query is allowed to follow.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelationAllowlist(BTreeSet<String>);

impl RelationAllowlist {
    pub fn new<I, S>(relations: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self(relations.into_iter().map(Into::into).collect())
    }

    pub fn contains(&self, relation: &str) -> bool {
        self.0.contains(relation)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl Default for RelationAllowlist {
    fn default() -> Self {
        Self::new(DEFAULT_RELATIONS.iter().copied())
    }
}

/// How a phrase root was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootMethod {
    Parser,
    Heuristic,
}

/// A phrase reduced to its root word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootExtraction {
    pub phrase: String,
    pub root: String,
    pub method: RootMethod,
}

/// Pluggable dependency parser. Returning `None` falls back to the
/// heuristic.
pub trait RootParser {
    fn root(&self, phrase: &str) -> Option<String>;
}

/// Reduce a phrase to its root word with the built-in heuristic: the
/// rightmost token that is not a stopword, lowercased with edge punctuation
/// stripped.
pub fn root_of(phrase: &str) -> RootExtraction {
    root_of_with(None, phrase)
}

/// Like [`root_of`] but trying `parser` first when one is supplied.
pub fn root_of_with(parser: Option<&dyn RootParser>, phrase: &str) -> RootExtraction {
    if let Some(parser) = parser {
        if let Some(root) = parser.root(phrase) {
            return RootExtraction {
                phrase: phrase.to_owned(),
                root: root.trim().to_lowercase(),
                method: RootMethod::Parser,
            };
        }
    }
    RootExtraction {
        phrase: phrase.to_owned(),
        root: heuristic_root(phrase),
        method: RootMethod::Heuristic,
    }
}

fn clean_token(token: &str) -> String {
    token
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase()
}

fn heuristic_root(phrase: &str) -> String {
    let tokens: Vec<String> = phrase
        .split_whitespace()
        .map(clean_token)
        .filter(|t| !t.is_empty())
        .collect();
    tokens
        .iter()
        .rev()
        .find(|t| !is_stopword(t))
        .or_else(|| tokens.last())
        .cloned()
        .unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KBError {
    #[error("object {object:?} has no node in the knowledge base")]
    NotFound { object: String },
    /// A network or IO failure; distinct from [`KBError::NotFound`] and
    /// retryable.
    #[error("knowledge-base transport failure: {reason}")]
    Transport { reason: String },
    #[error("limit must be at least 1")]
    ZeroLimit,
    #[error("coverage requires at least one object")]
    EmptyInput,
}

/// One-hop access to a knowledge graph.
///
/// `relations_of` returns `Ok(None)` when the object has no node at all,
/// `Ok(Some(edges))` otherwise (possibly empty), and `Err` only for
/// transport-level failures.
pub trait KnowledgeBase {
    fn relations_of(&self, object: &str) -> Result<Option<Vec<KBRelation>>, KBError>;
}

impl<K: KnowledgeBase + ?Sized> KnowledgeBase for &K {
    fn relations_of(&self, object: &str) -> Result<Option<Vec<KBRelation>>, KBError> {
        (**self).relations_of(object)
    }
}

/// In-memory snapshot keyed by start node; the serialized form is a JSON
/// map `object -> [[relation, end, weight], ...]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FixtureKB {
    entries: BTreeMap<String, Vec<(String, String, f64)>>,
}

impl FixtureKB {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        object: impl Into<String>,
        relation: impl Into<String>,
        end: impl Into<String>,
        weight: f64,
    ) {
        self.entries
            .entry(object.into())
            .or_default()
            .push((relation.into(), end.into(), weight));
    }

    pub fn with_edge(
        mut self,
        object: impl Into<String>,
        relation: impl Into<String>,
        end: impl Into<String>,
        weight: f64,
    ) -> Self {
        self.insert(object, relation, end, weight);
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn objects(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

impl KnowledgeBase for FixtureKB {
    fn relations_of(&self, object: &str) -> Result<Option<Vec<KBRelation>>, KBError> {
        Ok(self.entries.get(object).map(|edges| {
            edges
                .iter()
                .map(|(relation, end, weight)| KBRelation {
                    relation: relation.clone(),
                    start: object.to_owned(),
                    end: end.clone(),
                    weight: *weight,
                })
                .collect()
        }))
    }
}

/// A multi-word end term contributes its head word, lowercased.
fn normalize_end_term(end: &str) -> Option<String> {
    let head = heuristic_root(end);
    if !head.is_empty() && head.chars().all(|c| c.is_alphabetic()) {
        Some(head)
    } else {
        None
    }
}

/// Ranked candidate properties for one object: end terms of allowlisted
/// relations, interleaved by weight descending and deduplicated. The list
/// may be shorter than `limit`; callers record the actual length.
pub fn kb_properties<K: KnowledgeBase + ?Sized>(
    kb: &K,
    allowlist: &RelationAllowlist,
    object: &str,
    limit: usize,
) -> Result<Vec<Candidate>, KBError> {
    if limit == 0 {
        return Err(KBError::ZeroLimit);
    }
    let object = object.trim().to_lowercase();
    let edges = kb.relations_of(&object)?.ok_or_else(|| KBError::NotFound {
        object: object.clone(),
    })?;

    let mut scored: Vec<(String, f64)> = edges
        .iter()
        .filter(|edge| allowlist.contains(&edge.relation))
        .filter_map(|edge| normalize_end_term(&edge.end).map(|term| (term, edge.weight)))
        .collect();
    // weight-descending interleave across relations; token breaks ties so
    // equal weights still rank deterministically
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let mut seen = BTreeSet::new();
    let mut candidates = Vec::new();
    for (token, weight) in scored {
        if candidates.len() == limit {
            break;
        }
        if seen.insert(token.clone()) {
            let rank = candidates.len() + 1;
            candidates.push(Candidate::new(token, weight, rank));
        }
    }
    Ok(candidates)
}

/// Fraction of objects whose root resolves to an existing KB node.
pub fn kb_coverage<K: KnowledgeBase + ?Sized>(kb: &K, objects: &[String]) -> Result<f64, KBError> {
    if objects.is_empty() {
        return Err(KBError::EmptyInput);
    }
    let mut found = 0usize;
    for object in objects {
        let root = root_of(object).root;
        if kb.relations_of(&root)?.is_some() {
            found += 1;
        }
    }
    Ok(found as f64 / objects.len() as f64)
}
