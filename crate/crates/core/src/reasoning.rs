//! Prompt chains that turn one input concept into ranked blend descriptions.
//!
//! Two chains are implemented. The simile chain asks `"the {x} is like a
//! [MASK]"` to name related concepts, then `"the {c} has the property of
//! [MASK]"` for each. The pivot chain first asks for the value of a bridging
//! attribute (`"the shape of the moon is [MASK]"` -> `spherical`), plugs the
//! value back in (`"the shape of the [MASK] is spherical"`) to name concepts
//! sharing it, and continues with the same property step. Predictions are
//! plugged into a fixed surface pattern, e.g. `"a moon that is dead like a
//! ghost"`.
//!
//! Pairs are ranked by the sum of the two log scores; adding a constant to
//! every backend score leaves the order unchanged.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::backend::{fill_mask, BackendError, Candidate, MaskBackend};
use crate::filter::{filter_candidates, naive_plural};
use crate::template::{self, TemplateError, TemplateRegistry};

/// How many raw predictions the pivot-value step inspects before filtering.
const PIVOT_VALUE_WIDTH: usize = 16;

/// Which chain produced a description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ChainKind {
    Simile,
    Pivot { attribute: String },
}

impl ChainKind {
    /// The shape-guided chain, the default pivot.
    pub fn pivot_default() -> Self {
        ChainKind::Pivot {
            attribute: "shape".to_string(),
        }
    }

    pub fn pivot(attribute: impl Into<String>) -> Self {
        ChainKind::Pivot {
            attribute: attribute.into(),
        }
    }
}

/// The structured result of one reasoning chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlendDescription {
    pub input_concept: String,
    pub related_concept: String,
    pub property: String,
    pub chain: ChainKind,
    pub pivot_value: Option<String>,
    pub surface: String,
    pub concept_score: f64,
    pub property_score: f64,
    pub combined_score: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReasonError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Filtering removed every candidate; k was too small or the input
    /// degenerate.
    #[error("no candidates survived filtering at stage {stage}")]
    EmptyResult { stage: &'static str },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

/// Article chosen by the initial-vowel rule.
pub fn indefinite_article(word: &str) -> &'static str {
    match word.trim().chars().next() {
        Some(c) if matches!(c.to_ascii_lowercase(), 'a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

/// Render the surface sentence `"a/an {x} that is {property} like a/an
/// {concept}"`.
pub fn render_description(x: &str, concept: &str, property: &str) -> String {
    let x = x.trim();
    let concept = concept.trim();
    let property = property.trim();
    alloc::format!(
        "{} {} that is {} like {} {}",
        indefinite_article(x),
        x,
        property,
        indefinite_article(concept),
        concept
    )
}

/// Check a sentence against the surface pattern
/// `^an? \S+ that is \S+ like an? \S+$`, case-insensitively.
pub fn matches_surface_grammar(s: &str) -> bool {
    let tokens: Vec<&str> = s.split(' ').collect();
    if tokens.len() != 8 {
        return false;
    }
    let article = |t: &str| t.eq_ignore_ascii_case("a") || t.eq_ignore_ascii_case("an");
    let word = |t: &str| !t.is_empty() && !t.contains(char::is_whitespace);
    article(tokens[0])
        && word(tokens[1])
        && tokens[2].eq_ignore_ascii_case("that")
        && tokens[3].eq_ignore_ascii_case("is")
        && word(tokens[4])
        && tokens[5].eq_ignore_ascii_case("like")
        && article(tokens[6])
        && word(tokens[7])
}

/// Runs the chains against one backend and template registry.
pub struct Reasoner<'a, B: ?Sized> {
    backend: &'a B,
    templates: &'a TemplateRegistry,
}

impl<'a, B: MaskBackend + ?Sized> Reasoner<'a, B> {
    pub fn new(backend: &'a B, templates: &'a TemplateRegistry) -> Self {
        Self { backend, templates }
    }

    fn single_word(value: &str, what: &str) -> Result<String, ReasonError> {
        let v = value.trim().to_lowercase();
        if v.is_empty() {
            return Err(ReasonError::InvalidInput(alloc::format!(
                "{what} must be non-empty"
            )));
        }
        Ok(v)
    }

    fn require_width(n: usize, what: &str) -> Result<(), ReasonError> {
        if n == 0 {
            return Err(ReasonError::InvalidInput(alloc::format!(
                "{what} must be at least 1"
            )));
        }
        Ok(())
    }

    /// Concepts related to `x` via the simile-inducing prompt, filtered and
    /// re-ranked; `x` itself never appears.
    pub fn related_concepts_simile(
        &self,
        x: &str,
        k: usize,
    ) -> Result<Vec<Candidate>, ReasonError> {
        Self::require_width(k, "k")?;
        let x = Self::single_word(x, "input concept")?;
        let prompt = self
            .templates
            .get_required(template::SIMILE_CONCEPT)?
            .instantiate(&[("x", &x)])?;
        let raw = fill_mask(self.backend, &prompt, k)?;
        let survivors = filter_candidates(raw, &[&x]);
        if survivors.is_empty() {
            return Err(ReasonError::EmptyResult {
                stage: "related-concepts",
            });
        }
        Ok(survivors)
    }

    /// Properties of a concept via the property prompt.
    pub fn properties_of(&self, concept: &str, m: usize) -> Result<Vec<Candidate>, ReasonError> {
        Self::require_width(m, "m")?;
        let concept = Self::single_word(concept, "concept")?;
        let prompt = self
            .templates
            .get_required(template::PROPERTY_OF)?
            .instantiate(&[("x", &concept)])?;
        let raw = fill_mask(self.backend, &prompt, m)?;
        let survivors = filter_candidates(raw, &[&concept]);
        if survivors.is_empty() {
            return Err(ReasonError::EmptyResult {
                stage: "properties",
            });
        }
        Ok(survivors)
    }

    /// Top surviving value of `attribute` for `x`, e.g. shape of the moon ->
    /// spherical.
    pub fn pivot_value(&self, x: &str, attribute: &str) -> Result<Candidate, ReasonError> {
        let x = Self::single_word(x, "input concept")?;
        let attribute = Self::pivot_attribute(attribute)?;
        let prompt = self
            .templates
            .get_required(template::PIVOT_VALUE)?
            .instantiate(&[("attribute", &attribute), ("x", &x)])?;
        let raw = fill_mask(self.backend, &prompt, PIVOT_VALUE_WIDTH)?;
        filter_candidates(raw, &[&x, &attribute])
            .into_iter()
            .next()
            .ok_or(ReasonError::EmptyResult {
                stage: "pivot-value",
            })
    }

    /// Concepts whose `attribute` takes `value`, e.g. spherical-shaped
    /// things.
    pub fn concepts_by_pivot(
        &self,
        attribute: &str,
        value: &str,
        k: usize,
    ) -> Result<Vec<Candidate>, ReasonError> {
        Self::require_width(k, "k")?;
        let attribute = Self::pivot_attribute(attribute)?;
        let value = Self::single_word(value, "pivot value")?;
        let prompt = self
            .templates
            .get_required(template::PIVOT_CONCEPT)?
            .instantiate(&[("attribute", &attribute), ("value", &value)])?;
        let raw = fill_mask(self.backend, &prompt, k)?;
        let survivors = filter_candidates(raw, &[&value, &attribute]);
        if survivors.is_empty() {
            return Err(ReasonError::EmptyResult {
                stage: "pivot-concepts",
            });
        }
        Ok(survivors)
    }

    fn pivot_attribute(attribute: &str) -> Result<String, ReasonError> {
        let attribute = Self::single_word(attribute, "pivot attribute")?;
        if attribute.split_whitespace().count() != 1 {
            return Err(ReasonError::InvalidInput(
                "pivot attribute must be a single word".to_string(),
            ));
        }
        Ok(attribute)
    }

    /// Run a full chain: up to `k` related concepts, up to `m` properties
    /// each, ranked by combined score with ties broken lexicographically by
    /// (related concept, property).
    pub fn blend(
        &self,
        x: &str,
        chain: &ChainKind,
        k: usize,
        m: usize,
    ) -> Result<Vec<BlendDescription>, ReasonError> {
        Self::require_width(k, "k")?;
        Self::require_width(m, "m")?;
        let x = Self::single_word(x, "input concept")?;
        let x_plural = naive_plural(&x);

        let (concepts, pivot_value) = match chain {
            ChainKind::Simile => (self.related_concepts_simile(&x, k)?, None),
            ChainKind::Pivot { attribute } => {
                let value = self.pivot_value(&x, attribute)?;
                let mut concepts = self.concepts_by_pivot(attribute, &value.token, k)?;
                // self-exclusion propagates through the pivot hop
                concepts.retain(|c| c.token != x && c.token != x_plural);
                if concepts.is_empty() {
                    return Err(ReasonError::EmptyResult {
                        stage: "pivot-concepts",
                    });
                }
                (concepts, Some(value.token))
            }
        };

        let mut blends = Vec::new();
        for concept in &concepts {
            let properties = self.properties_of(&concept.token, m)?;
            for property in &properties {
                blends.push(BlendDescription {
                    input_concept: x.clone(),
                    related_concept: concept.token.clone(),
                    property: property.token.clone(),
                    chain: chain.clone(),
                    pivot_value: pivot_value.clone(),
                    surface: render_description(&x, &concept.token, &property.token),
                    concept_score: concept.score,
                    property_score: property.score,
                    combined_score: concept.score + property.score,
                });
            }
        }
        blends.sort_by(|a, b| {
            b.combined_score
                .total_cmp(&a.combined_score)
                .then_with(|| a.related_concept.cmp(&b.related_concept))
                .then_with(|| a.property.cmp(&b.property))
        });
        blends.truncate(k.saturating_mul(m));
        Ok(blends)
    }
}
