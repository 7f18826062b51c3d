//! Uniform fill-in-the-blank interface over prediction backends.
//!
//! A backend takes a [`MaskSlotPrompt`] and returns ranked vocabulary words.
//! Two querying styles exist: `mask-anywhere` models fill a slot at any
//! position, while `suffix-only` models (next-word predictors) can only rank
//! continuations of the text before the mask, so they reject prompts whose
//! mask is not terminal.
//!
//! [`fill_mask`] is the single entry point: it enforces the mask-position
//! rule, normalizes and deduplicates the raw predictions, and returns
//! [`Candidate`] lists that always satisfy the list invariants (consecutive
//! ranks from 1, non-increasing finite scores, pairwise-distinct tokens).

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::prompt::MaskSlotPrompt;

/// One ranked prediction: a normalized vocabulary word with a score that is a
/// log-probability or any monotone-equivalent unnormalized value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub token: String,
    pub score: f64,
    /// 1-based position within its result list.
    pub rank: usize,
}

impl Candidate {
    pub fn new(token: impl Into<String>, score: f64, rank: usize) -> Self {
        Self {
            token: token.into(),
            score,
            rank,
        }
    }
}

/// Errors raised when a candidate list violates its invariants.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CandidateListError {
    #[error("rank at position {index} is {found}, expected {expected}")]
    NonConsecutiveRank {
        index: usize,
        found: usize,
        expected: usize,
    },
    #[error("score at rank {rank} is not finite")]
    NonFiniteScore { rank: usize },
    #[error("scores increase between ranks {rank} and {next_rank}")]
    ScoreIncreases { rank: usize, next_rank: usize },
    #[error("token {token:?} appears more than once")]
    DuplicateToken { token: String },
}

/// Check the invariants every returned list must satisfy: ranks consecutive
/// from 1, scores finite and non-increasing, tokens pairwise distinct.
pub fn validate_candidates(list: &[Candidate]) -> Result<(), CandidateListError> {
    let mut seen = BTreeSet::new();
    for (i, c) in list.iter().enumerate() {
        if c.rank != i + 1 {
            return Err(CandidateListError::NonConsecutiveRank {
                index: i,
                found: c.rank,
                expected: i + 1,
            });
        }
        if !c.score.is_finite() {
            return Err(CandidateListError::NonFiniteScore { rank: c.rank });
        }
        if i > 0 && list[i - 1].score < c.score {
            return Err(CandidateListError::ScoreIncreases {
                rank: list[i - 1].rank,
                next_rank: c.rank,
            });
        }
        if !seen.insert(c.token.clone()) {
            return Err(CandidateListError::DuplicateToken {
                token: c.token.clone(),
            });
        }
    }
    Ok(())
}

/// How a backend consumes prompts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    /// The mask may sit anywhere in the prompt.
    MaskAnywhere,
    /// Next-word predictors: the mask must be the final token.
    SuffixOnly,
}

/// Identity and querying style of a backend instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub id: String,
    pub kind: BackendKind,
    pub cased: bool,
}

impl BackendDescriptor {
    pub fn new(id: impl Into<String>, kind: BackendKind, cased: bool) -> Self {
        Self {
            id: id.into(),
            kind,
            cased,
        }
    }
}

/// Errors surfaced by backends and the [`fill_mask`] wrapper.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    /// Suffix-only backend asked to fill a non-terminal mask.
    #[error("backend {backend:?} only fills terminal masks, prompt has text after the slot")]
    MaskPosition { backend: String },
    /// The adapter could not load or reach its model.
    #[error("backend {backend:?} unavailable: {reason}")]
    Unavailable { backend: String, reason: String },
    /// A prediction carried a NaN or infinite score.
    #[error("backend {backend:?} returned a non-finite score for token {token:?}")]
    NonFiniteScore { backend: String, token: String },
    #[error("k must be at least 1")]
    ZeroK,
}

/// A fill-in-the-blank prediction backend.
///
/// `predict` returns raw ranked `(token, score)` pairs, best first, at most
/// `k` of them. Adapters are responsible for emitting single vocabulary words
/// (subword continuation fragments filtered out) and for prefix consistency:
/// `predict(p, k')` must be a prefix of `predict(p, k)` for `k' <= k`.
/// [`fill_mask`] layers normalization and invariant enforcement on top.
pub trait MaskBackend {
    fn descriptor(&self) -> &BackendDescriptor;

    fn predict(
        &self,
        prompt: &MaskSlotPrompt,
        k: usize,
    ) -> Result<Vec<(String, f64)>, BackendError>;

    /// Whether concurrent calls against one instance are permitted.
    fn concurrent_ok(&self) -> bool {
        false
    }
}

impl<B: MaskBackend + ?Sized> MaskBackend for &B {
    fn descriptor(&self) -> &BackendDescriptor {
        (**self).descriptor()
    }

    fn predict(
        &self,
        prompt: &MaskSlotPrompt,
        k: usize,
    ) -> Result<Vec<(String, f64)>, BackendError> {
        (**self).predict(prompt, k)
    }

    fn concurrent_ok(&self) -> bool {
        (**self).concurrent_ok()
    }
}

impl<B: MaskBackend + ?Sized> MaskBackend for Box<B> {
    fn descriptor(&self) -> &BackendDescriptor {
        (**self).descriptor()
    }

    fn predict(
        &self,
        prompt: &MaskSlotPrompt,
        k: usize,
    ) -> Result<Vec<(String, f64)>, BackendError> {
        (**self).predict(prompt, k)
    }

    fn concurrent_ok(&self) -> bool {
        (**self).concurrent_ok()
    }
}

/// Query a backend and return at most `k` candidates satisfying the
/// [`Candidate`] list invariants.
///
/// Tokens are whitespace-trimmed, lowercased for uncased backends, and
/// deduplicated keeping the best-scored occurrence. Asking for more
/// candidates than the backend can produce truncates silently.
pub fn fill_mask<B: MaskBackend + ?Sized>(
    backend: &B,
    prompt: &MaskSlotPrompt,
    k: usize,
) -> Result<Vec<Candidate>, BackendError> {
    if k == 0 {
        return Err(BackendError::ZeroK);
    }
    let descriptor = backend.descriptor();
    if descriptor.kind == BackendKind::SuffixOnly && !prompt.mask_is_terminal() {
        return Err(BackendError::MaskPosition {
            backend: descriptor.id.clone(),
        });
    }
    let raw = backend.predict(prompt, k)?;

    let mut out: Vec<Candidate> = Vec::with_capacity(raw.len().min(k));
    let mut seen = BTreeSet::new();
    for (token, score) in raw {
        if !score.is_finite() {
            return Err(BackendError::NonFiniteScore {
                backend: descriptor.id.clone(),
                token,
            });
        }
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        let token = if descriptor.cased {
            token.to_string()
        } else {
            token.to_lowercase()
        };
        if !seen.insert(token.clone()) {
            continue;
        }
        out.push(Candidate::new(token, score, 0));
    }
    // adapters promise descending order; a stable sort repairs any slack
    // without disturbing tie order
    out.sort_by(|a, b| b.score.total_cmp(&a.score));
    out.truncate(k);
    for (i, c) in out.iter_mut().enumerate() {
        c.rank = i + 1;
    }
    debug_assert!(validate_candidates(&out).is_ok());
    Ok(out)
}

/// Error from [`batch_fill`], carrying the index of the failing prompt.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("prompt {index}: {source}")]
pub struct BatchFillError {
    pub index: usize,
    #[source]
    pub source: BackendError,
}

/// Fill every prompt in order; element `i` equals
/// `fill_mask(backend, prompts[i], k)`. The first per-prompt error aborts the
/// batch and reports its index.
pub fn batch_fill<B: MaskBackend + ?Sized>(
    backend: &B,
    prompts: &[MaskSlotPrompt],
    k: usize,
) -> Result<Vec<Vec<Candidate>>, BatchFillError> {
    prompts
        .iter()
        .enumerate()
        .map(|(index, prompt)| {
            fill_mask(backend, prompt, k).map_err(|source| BatchFillError { index, source })
        })
        .collect()
}

/// Deterministic lookup-table backend: maps exact prompt text to a ranked
/// `(token, score)` list. Ships as a first-class implementation so every
/// pipeline stage can be exercised without model downloads. Safe for
/// unrestricted concurrent reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableBackend {
    descriptor: BackendDescriptor,
    table: BTreeMap<String, Vec<(String, f64)>>,
}

impl TableBackend {
    /// An uncased mask-anywhere table.
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            descriptor: BackendDescriptor::new(id, BackendKind::MaskAnywhere, false),
            table: BTreeMap::new(),
        }
    }

    /// A table that behaves like a next-word predictor.
    pub fn suffix_only(id: impl Into<String>) -> Self {
        Self {
            descriptor: BackendDescriptor::new(id, BackendKind::SuffixOnly, false),
            table: BTreeMap::new(),
        }
    }

    pub fn from_parts(
        descriptor: BackendDescriptor,
        table: BTreeMap<String, Vec<(String, f64)>>,
    ) -> Self {
        Self { descriptor, table }
    }

    /// Rename the backend. Lets a deployment register one table file under
    /// several ids without the file's embedded id leaking into reports.
    pub fn set_id(&mut self, id: impl Into<String>) {
        self.descriptor.id = id.into();
    }

    pub fn insert<T: Into<String>>(
        &mut self,
        prompt_text: impl Into<String>,
        entries: Vec<(T, f64)>,
    ) {
        self.table.insert(
            prompt_text.into(),
            entries.into_iter().map(|(t, s)| (t.into(), s)).collect(),
        );
    }

    /// Builder-style [`TableBackend::insert`].
    pub fn with_entry<T: Into<String>>(
        mut self,
        prompt_text: impl Into<String>,
        entries: Vec<(T, f64)>,
    ) -> Self {
        self.insert(prompt_text, entries);
        self
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn prompts(&self) -> impl Iterator<Item = &str> {
        self.table.keys().map(String::as_str)
    }

    /// A copy with `delta` added to every score. Adding a constant to log
    /// scores rescales the underlying distribution without reordering it, so
    /// downstream rankings must not change.
    pub fn shift_scores(&self, delta: f64) -> Self {
        let table = self
            .table
            .iter()
            .map(|(p, entries)| {
                (
                    p.clone(),
                    entries
                        .iter()
                        .map(|(t, s)| (t.clone(), s + delta))
                        .collect(),
                )
            })
            .collect();
        Self {
            descriptor: self.descriptor.clone(),
            table,
        }
    }
}

impl MaskBackend for TableBackend {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn predict(
        &self,
        prompt: &MaskSlotPrompt,
        k: usize,
    ) -> Result<Vec<(String, f64)>, BackendError> {
        // a prompt absent from the table has an empty vocabulary
        let entries = self.table.get(prompt.text()).cloned().unwrap_or_default();
        Ok(entries.into_iter().take(k).collect())
    }

    fn concurrent_ok(&self) -> bool {
        true
    }
}

/// Wrapper that counts `predict` invocations on the inner backend, used to
/// verify that caches really bypass the adapter.
#[derive(Debug)]
pub struct CountingBackend<B> {
    inner: B,
    calls: AtomicUsize,
}

impl<B: MaskBackend> CountingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    /// Number of `predict` calls that reached the inner backend.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn into_inner(self) -> B {
        self.inner
    }
}

impl<B: MaskBackend> MaskBackend for CountingBackend<B> {
    fn descriptor(&self) -> &BackendDescriptor {
        self.inner.descriptor()
    }

    fn predict(
        &self,
        prompt: &MaskSlotPrompt,
        k: usize,
    ) -> Result<Vec<(String, f64)>, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.predict(prompt, k)
    }

    fn concurrent_ok(&self) -> bool {
        self.inner.concurrent_ok()
    }
}
