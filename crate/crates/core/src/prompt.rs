//! Mask-slot prompts: the unit of every language-model query.
//!
//! A prompt is an ordinary sentence containing exactly one occurrence of the
//! literal marker `[MASK]`, e.g. `"the moon is like a [MASK]"`. Backends fill
//! the slot with ranked vocabulary words.

use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};

/// The literal mask marker expected in prompt text.
pub const MASK_MARKER: &str = "[MASK]";

/// Errors raised when constructing or substituting a [`MaskSlotPrompt`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    /// The text did not contain exactly one `[MASK]` marker.
    #[error("prompt must contain exactly one {MASK_MARKER}, found {found}: {text:?}")]
    MarkerCount { found: usize, text: String },
    /// Removing the marker leaves no content.
    #[error("prompt is empty apart from the mask marker")]
    EmptyText,
}

/// A sentence pattern with exactly one `[MASK]` slot.
///
/// Invariants are enforced at construction: exactly one marker occurrence and
/// non-empty text once the marker is removed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskSlotPrompt {
    text: String,
    template_id: Option<String>,
}

impl MaskSlotPrompt {
    /// Build a prompt from raw text, validating the mask invariants.
    pub fn new(text: impl Into<String>) -> Result<Self, PromptError> {
        Self::with_template(text, None::<&str>)
    }

    /// Build a prompt and record the template id that produced it.
    pub fn with_template(
        text: impl Into<String>,
        template_id: Option<impl Into<String>>,
    ) -> Result<Self, PromptError> {
        let text = text.into();
        let found = text.matches(MASK_MARKER).count();
        if found != 1 {
            return Err(PromptError::MarkerCount { found, text });
        }
        if text.replacen(MASK_MARKER, "", 1).trim().is_empty() {
            return Err(PromptError::EmptyText);
        }
        Ok(Self {
            text,
            template_id: template_id.map(Into::into),
        })
    }

    /// The full prompt text including the marker.
    pub fn text(&self) -> &str {
        &self.text
    }

    /// Id of the template that produced this prompt, if any.
    pub fn template_id(&self) -> Option<&str> {
        self.template_id.as_deref()
    }

    /// Text before the mask marker, as consumed by next-word backends.
    pub fn prefix(&self) -> &str {
        // construction guarantees the marker is present
        let idx = self.text.find(MASK_MARKER).expect("marker present");
        &self.text[..idx]
    }

    /// Whether the mask is the final token of the prompt.
    ///
    /// Trailing whitespace and a single terminal punctuation mark are
    /// ignored, so `"x is [MASK]."` still counts as terminal.
    pub fn mask_is_terminal(&self) -> bool {
        let tail = self
            .text
            .trim_end()
            .trim_end_matches(['.', '?', '!'])
            .trim_end();
        tail.ends_with(MASK_MARKER)
    }

    /// Replace the mask slot with a concrete word.
    pub fn substitute(&self, word: &str) -> String {
        self.text.replacen(MASK_MARKER, word, 1)
    }
}

impl core::fmt::Display for MaskSlotPrompt {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&self.text)
    }
}

impl TryFrom<&str> for MaskSlotPrompt {
    type Error = PromptError;

    fn try_from(text: &str) -> Result<Self, Self::Error> {
        Self::new(text.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_single_mask() {
        let p = MaskSlotPrompt::new("the moon is like a [MASK]").unwrap();
        assert_eq!(p.text(), "the moon is like a [MASK]");
        assert!(p.mask_is_terminal());
        assert_eq!(p.prefix(), "the moon is like a ");
    }

    #[test]
    fn rejects_zero_and_double_masks() {
        assert!(matches!(
            MaskSlotPrompt::new("no marker here"),
            Err(PromptError::MarkerCount { found: 0, .. })
        ));
        assert!(matches!(
            MaskSlotPrompt::new("[MASK] and [MASK]"),
            Err(PromptError::MarkerCount { found: 2, .. })
        ));
    }

    #[test]
    fn rejects_marker_only_text() {
        assert_eq!(
            MaskSlotPrompt::new("  [MASK]  "),
            Err(PromptError::EmptyText)
        );
    }

    #[test]
    fn terminal_detection_ignores_trailing_punctuation() {
        let p = MaskSlotPrompt::new("a low budget film is [MASK].").unwrap();
        assert!(p.mask_is_terminal());
        let q = MaskSlotPrompt::new("the shape of the [MASK] is spherical").unwrap();
        assert!(!q.mask_is_terminal());
    }

    #[test]
    fn substitute_fills_the_slot() {
        let p = MaskSlotPrompt::new("the moon is like a [MASK]").unwrap();
        assert_eq!(p.substitute("ghost"), "the moon is like a ghost");
    }
}
