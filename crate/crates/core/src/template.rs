//! Versioned registry of prompt patterns.
//!
//! Prompt strings are data, not code: each chain step looks its sentence
//! pattern up by id, so new pivot chains (speed, reflection, ...) need no
//! code change. Patterns carry named slots in braces, e.g.
//! `"the {attribute} of the {x} is [MASK]"`, plus exactly one mask marker.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::prompt::{MaskSlotPrompt, PromptError};

/// Template ids shipped with the registry.
pub const SIMILE_CONCEPT: &str = "simile-concept";
pub const PROPERTY_OF: &str = "property-of";
pub const PIVOT_VALUE: &str = "pivot-value";
pub const PIVOT_CONCEPT: &str = "pivot-concept";
pub const EVAL_PROPERTY: &str = "eval-property";

/// Where a template sits in a reasoning chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainRole {
    /// Names a concept related to the input ("X is like a [MASK]").
    RelatedConcept,
    /// Names a property of a concept.
    Property,
    /// Names the value of a pivot attribute for the input.
    PivotValue,
    /// Names a concept sharing a pivot value.
    PivotConcept,
    /// Evaluation prompt relating an object phrase to a property.
    EvalProperty,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("no template registered under id {id:?}")]
    Missing { id: String },
    #[error("template {id:?} registered twice")]
    Duplicate { id: String },
    #[error("template {id:?} still has unbound slot {{{slot}}} after substitution")]
    UnboundSlot { id: String, slot: String },
    #[error("template {id:?} produced an invalid prompt: {source}")]
    BadPrompt {
        id: String,
        #[source]
        source: PromptError,
    },
}

/// One slotted sentence pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: String,
    pub pattern: String,
    #[serde(default = "default_mask_count")]
    pub mask_count: u32,
    pub chain_role: ChainRole,
}

fn default_mask_count() -> u32 {
    1
}

impl PromptTemplate {
    pub fn new(id: impl Into<String>, pattern: impl Into<String>, chain_role: ChainRole) -> Self {
        Self {
            id: id.into(),
            pattern: pattern.into(),
            mask_count: 1,
            chain_role,
        }
    }

    /// Substitute named slots and validate the resulting prompt.
    pub fn instantiate(&self, bindings: &[(&str, &str)]) -> Result<MaskSlotPrompt, TemplateError> {
        let mut text = self.pattern.clone();
        for (slot, value) in bindings {
            let needle = alloc::format!("{{{slot}}}");
            text = text.replace(&needle, value);
        }
        if let Some(slot) = first_unbound_slot(&text) {
            return Err(TemplateError::UnboundSlot {
                id: self.id.clone(),
                slot,
            });
        }
        MaskSlotPrompt::with_template(text, Some(self.id.as_str())).map_err(|source| {
            TemplateError::BadPrompt {
                id: self.id.clone(),
                source,
            }
        })
    }
}

fn first_unbound_slot(text: &str) -> Option<String> {
    let open = text.find('{')?;
    let close = text[open..].find('}')?;
    Some(text[open + 1..open + close].to_string())
}

/// Registry keyed by template id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateRegistry {
    entries: BTreeMap<String, PromptTemplate>,
}

impl TemplateRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    /// The built-in patterns backing the default chains.
    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        for template in [
            PromptTemplate::new(
                SIMILE_CONCEPT,
                "the {x} is like a [MASK]",
                ChainRole::RelatedConcept,
            ),
            PromptTemplate::new(
                PROPERTY_OF,
                "the {x} has the property of [MASK]",
                ChainRole::Property,
            ),
            PromptTemplate::new(
                PIVOT_VALUE,
                "the {attribute} of the {x} is [MASK]",
                ChainRole::PivotValue,
            ),
            PromptTemplate::new(
                PIVOT_CONCEPT,
                "the {attribute} of the [MASK] is {value}",
                ChainRole::PivotConcept,
            ),
            PromptTemplate::new(EVAL_PROPERTY, "{x} is [MASK]", ChainRole::EvalProperty),
        ] {
            reg.entries.insert(template.id.clone(), template);
        }
        reg
    }

    /// Build a registry from entries, rejecting duplicate ids.
    pub fn from_entries(entries: Vec<PromptTemplate>) -> Result<Self, TemplateError> {
        let mut reg = Self::empty();
        for template in entries {
            let id = template.id.clone();
            if reg.entries.insert(id.clone(), template).is_some() {
                return Err(TemplateError::Duplicate { id });
            }
        }
        Ok(reg)
    }

    pub fn insert(&mut self, template: PromptTemplate) {
        self.entries.insert(template.id.clone(), template);
    }

    pub fn get(&self, id: &str) -> Option<&PromptTemplate> {
        self.entries.get(id)
    }

    pub fn get_required(&self, id: &str) -> Result<&PromptTemplate, TemplateError> {
        self.entries
            .get(id)
            .ok_or_else(|| TemplateError::Missing { id: id.to_string() })
    }

    pub fn entries(&self) -> impl Iterator<Item = &PromptTemplate> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Default for TemplateRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn builtin_patterns_instantiate() {
        let reg = TemplateRegistry::builtin();
        let p = reg
            .get_required(SIMILE_CONCEPT)
            .unwrap()
            .instantiate(&[("x", "moon")])
            .unwrap();
        assert_eq!(p.text(), "the moon is like a [MASK]");
        assert_eq!(p.template_id(), Some(SIMILE_CONCEPT));

        let p = reg
            .get_required(PIVOT_VALUE)
            .unwrap()
            .instantiate(&[("attribute", "shape"), ("x", "moon")])
            .unwrap();
        assert_eq!(p.text(), "the shape of the moon is [MASK]");

        let p = reg
            .get_required(PIVOT_CONCEPT)
            .unwrap()
            .instantiate(&[("attribute", "shape"), ("value", "spherical")])
            .unwrap();
        assert_eq!(p.text(), "the shape of the [MASK] is spherical");

        let p = reg
            .get_required(EVAL_PROPERTY)
            .unwrap()
            .instantiate(&[("x", "a low budget film")])
            .unwrap();
        assert_eq!(p.text(), "a low budget film is [MASK]");
    }

    #[test]
    fn unbound_slot_is_reported() {
        let reg = TemplateRegistry::builtin();
        let err = reg
            .get_required(PIVOT_VALUE)
            .unwrap()
            .instantiate(&[("x", "moon")])
            .unwrap_err();
        assert_eq!(
            err,
            TemplateError::UnboundSlot {
                id: PIVOT_VALUE.into(),
                slot: "attribute".into()
            }
        );
    }

    #[test]
    fn missing_template_is_reported() {
        let reg = TemplateRegistry::builtin();
        assert!(matches!(
            reg.get_required("nope"),
            Err(TemplateError::Missing { .. })
        ));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let t = PromptTemplate::new("dup", "x [MASK]", ChainRole::Property);
        let err = TemplateRegistry::from_entries(vec![t.clone(), t]).unwrap_err();
        assert!(matches!(err, TemplateError::Duplicate { .. }));
    }

    #[test]
    fn mask_count_defaults_to_one() {
        let t = PromptTemplate::new("t", "x [MASK]", ChainRole::Property);
        assert_eq!(t.mask_count, 1);
    }
}
