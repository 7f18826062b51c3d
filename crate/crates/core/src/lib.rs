//! Core primitives for language-driven concept blending.
//!
//! The crate is split along the pipeline stages:
//!
//! - [`prompt`] / [`template`] — slotted mask prompts and the registry of
//!   sentence patterns that drive every language-model query.
//! - [`backend`] — a uniform fill-in-the-blank interface over prediction
//!   backends, including a deterministic [`backend::TableBackend`] for tests.
//! - [`reasoning`] — the simile and pivot prompt chains that turn one input
//!   concept into ranked blend descriptions.
//! - [`kb`] — the knowledge-base candidate generator used as an evaluation
//!   baseline (root extraction plus one-hop relation queries).
//! - [`eval`] — simile-pair extraction and precision-at-k scoring of
//!   candidate systems.
//! - [`latent`] — gradient ascent on a generator latent against a
//!   text–image similarity scorer, with analytic toy instances.
//!
//! Everything here is `no_std` + `alloc`; IO, file formats, and the CLI live
//! in the companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod backend;
pub mod eval;
pub mod filter;
pub mod kb;
pub mod latent;
pub mod prompt;
pub mod reasoning;
pub mod template;

pub use backend::{
    batch_fill, fill_mask, BackendDescriptor, BackendError, BackendKind, Candidate,
    CountingBackend, MaskBackend, TableBackend,
};
pub use eval::{
    evaluate_kb, evaluate_lm, extract_pairs, precision_at, EvalError, Extraction, PrecisionReport,
    PropertyObjectPair, SimilePair, PRECISION_KS,
};
pub use kb::{
    kb_coverage, kb_properties, root_of, FixtureKB, KBError, KBRelation, KnowledgeBase,
    RelationAllowlist, RootExtraction,
};
pub use latent::{
    check_gradients, optimize_latent, Generator, Image, LatentError, LatentState,
    OptimizationConfig, OptimizationTrace, Scorer, TraceRecord,
};
pub use prompt::{MaskSlotPrompt, PromptError, MASK_MARKER};
pub use reasoning::{BlendDescription, ChainKind, Reasoner};
pub use template::{ChainRole, PromptTemplate, TemplateRegistry};
