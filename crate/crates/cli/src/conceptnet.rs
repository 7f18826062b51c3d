//! Live knowledge-base client over the public ConceptNet HTTP API.
//!
//! Every successful lookup (including "no such node") is persisted to a disk
//! cache in the same JSON shape `FixtureKB` uses for a single object, so a
//! crawl can be replayed offline and repeated runs stay polite. Requests are
//! rate-limited through a shared timestamp.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use chimera_core::kb::{KBError, KBRelation, KnowledgeBase};
use serde::Deserialize;
use sha2::{Digest, Sha256};

/// API responses parsed into edges rooted at the queried object.
///
/// Kept separate from transport so it can be tested against canned payloads.
pub fn parse_edges(object: &str, term: &str, json: &str) -> Result<Vec<KBRelation>, KBError> {
    #[derive(Deserialize)]
    struct Envelope {
        #[serde(default)]
        edges: Vec<Edge>,
    }
    #[derive(Deserialize)]
    struct Edge {
        rel: Option<Labeled>,
        start: Option<Node>,
        end: Option<Node>,
        weight: Option<f64>,
    }
    #[derive(Deserialize)]
    struct Labeled {
        label: Option<String>,
    }
    #[derive(Deserialize)]
    struct Node {
        label: Option<String>,
        language: Option<String>,
        term: Option<String>,
    }

    let envelope: Envelope = serde_json::from_str(json).map_err(|e| KBError::Transport {
        reason: format!("unparseable api response: {e}"),
    })?;
    let own_prefix = format!("/c/en/{term}");
    let mut out = Vec::new();
    for edge in envelope.edges {
        let (Some(rel), Some(start), Some(end)) = (edge.rel, edge.start, edge.end) else {
            continue;
        };
        let Some(relation) = rel.label else { continue };
        // keep only outgoing english edges: the queried node must be the start
        let start_term = start.term.unwrap_or_default();
        if start_term != own_prefix && !start_term.starts_with(&format!("{own_prefix}/")) {
            continue;
        }
        if end.language.as_deref() != Some("en") {
            continue;
        }
        let Some(end_label) = end.label else { continue };
        let weight = edge.weight.unwrap_or(1.0);
        if !weight.is_finite() {
            continue;
        }
        out.push(KBRelation {
            relation,
            start: object.to_string(),
            end: end_label,
            weight,
        });
    }
    Ok(out)
}

/// An object phrase as a ConceptNet term id segment: lowercased, spaces to
/// underscores, anything outside `[a-z0-9_-]` dropped.
pub fn conceptnet_term(object: &str) -> String {
    object
        .trim()
        .to_lowercase()
        .chars()
        .map(|c| if c.is_whitespace() { '_' } else { c })
        .filter(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || *c == '_' || *c == '-')
        .collect()
}

/// Cached edge lists live under `dir` as `sha256(term).json` holding
/// `Option<Vec<KBRelation>>` (`null` records a confirmed missing node).
fn cache_path(dir: &Path, term: &str) -> PathBuf {
    let digest = Sha256::digest(term.as_bytes());
    let mut name = String::with_capacity(69);
    for byte in digest {
        name.push_str(&format!("{byte:02x}"));
    }
    name.push_str(".json");
    dir.join(name)
}

pub struct LiveConceptNet {
    base_url: String,
    min_interval: Duration,
    cache_dir: PathBuf,
    last_request: Mutex<Option<Instant>>,
}

impl LiveConceptNet {
    /// `cache_dir` is created eagerly; a failure there is a transport error.
    pub fn new(
        base_url: impl Into<String>,
        rate_limit_ms: u64,
        cache_dir: impl Into<PathBuf>,
    ) -> Result<Self, KBError> {
        let cache_dir = cache_dir.into();
        fs::create_dir_all(&cache_dir).map_err(|e| KBError::Transport {
            reason: format!("cannot create kb cache {}: {e}", cache_dir.display()),
        })?;
        Ok(Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            min_interval: Duration::from_millis(rate_limit_ms),
            cache_dir,
            last_request: Mutex::new(None),
        })
    }

    fn cached(&self, term: &str) -> Option<Option<Vec<KBRelation>>> {
        let text = fs::read_to_string(cache_path(&self.cache_dir, term)).ok()?;
        serde_json::from_str(&text).ok()
    }

    fn store(&self, term: &str, edges: &Option<Vec<KBRelation>>) -> Result<(), KBError> {
        let path = cache_path(&self.cache_dir, term);
        let write = || -> std::io::Result<()> {
            let mut tmp = tempfile::NamedTempFile::new_in(&self.cache_dir)?;
            serde_json::to_writer(&mut tmp, edges)?;
            tmp.flush()?;
            tmp.persist(&path).map_err(|e| e.error)?;
            Ok(())
        };
        write().map_err(|e| KBError::Transport {
            reason: format!("kb cache write failed: {e}"),
        })
    }

    fn throttle(&self) {
        let mut last = self.last_request.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(at) = *last {
            let elapsed = at.elapsed();
            if elapsed < self.min_interval {
                std::thread::sleep(self.min_interval - elapsed);
            }
        }
        *last = Some(Instant::now());
    }

    fn fetch(&self, object: &str, term: &str) -> Result<Option<Vec<KBRelation>>, KBError> {
        self.throttle();
        let url = format!("{}/c/en/{}?limit=1000", self.base_url, term);
        match ureq::get(&url).call() {
            Ok(mut response) => {
                let text =
                    response
                        .body_mut()
                        .read_to_string()
                        .map_err(|e| KBError::Transport {
                            reason: format!("body read failed for {url}: {e}"),
                        })?;
                parse_edges(object, term, &text).map(Some)
            }
            Err(ureq::Error::StatusCode(404)) => Ok(None),
            Err(e) => Err(KBError::Transport {
                reason: format!("request failed for {url}: {e}"),
            }),
        }
    }
}

impl KnowledgeBase for LiveConceptNet {
    fn relations_of(&self, object: &str) -> Result<Option<Vec<KBRelation>>, KBError> {
        let term = conceptnet_term(object);
        if term.is_empty() {
            return Ok(None);
        }
        if let Some(hit) = self.cached(&term) {
            return Ok(hit);
        }
        let fresh = self.fetch(object, &term)?;
        self.store(&term, &fresh)?;
        Ok(fresh)
    }
}
