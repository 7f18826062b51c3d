//! Dataset ingestion, property–object pair extraction, and precision@k
//! evaluation of language-model backends against the knowledge-base
//! baseline.
//!
//! Each simile pair contributes one gold item when both heuristics fire:
//! the object phrase is the text after the last "like a"/"like an" in the
//! simile sentence, and the gold property is the last content word of the
//! literal sentence (`<"Felt worthless", "Felt like a low budget film">` ->
//! `(worthless, "a low budget film")`). A system is asked for up to `n`
//! candidates per item and scored by the fraction of items whose gold word
//! appears in its top k.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::backend::{fill_mask, BackendError, Candidate, MaskBackend};
use crate::filter::is_stopword;
use crate::kb::{kb_properties, root_of, KBError, KnowledgeBase, RelationAllowlist};
use crate::template::{self, TemplateError, TemplateRegistry};

/// The cutoffs every report includes.
pub const PRECISION_KS: [usize; 3] = [10, 100, 1000];

/// One dataset row: a literal sentence and its simile rewrite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimilePair {
    pub source: String,
    pub target: String,
}

/// One gold evaluation item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyObjectPair {
    /// Single lowercase alphabetic word.
    pub property: String,
    /// E.g. "a low budget film".
    pub object_phrase: String,
}

/// Extraction output: the items plus how many input pairs were skipped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extraction {
    pub pairs: Vec<PropertyObjectPair>,
    pub skipped: usize,
}

/// Precision@k summary for one system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionReport {
    pub system_id: String,
    pub n_items: usize,
    pub requested_k: usize,
    /// Average candidate-list length actually returned (systems may return
    /// fewer than requested).
    pub mean_returned: f64,
    /// k -> fraction in [0,1], for k in [`PRECISION_KS`].
    pub p_at: BTreeMap<usize, f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("evaluation requires at least one item")]
    EmptyDataset,
    #[error("k must be at least 1")]
    ZeroK,
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Kb(#[from] KBError),
}

/// Pluggable part-of-speech tagger for the property heuristic. Returning
/// `None` falls back to the last-content-word rule.
pub trait PropertyTagger {
    fn last_adjective(&self, source: &str) -> Option<String>;
}

/// Extract gold items with the built-in heuristics only.
pub fn extract_pairs(pairs: &[SimilePair]) -> Extraction {
    extract_pairs_with(None, pairs)
}

/// Like [`extract_pairs`], trying `tagger` first for the property side.
pub fn extract_pairs_with(tagger: Option<&dyn PropertyTagger>, pairs: &[SimilePair]) -> Extraction {
    let mut out = Vec::new();
    let mut skipped = 0usize;
    for pair in pairs {
        let object_phrase = object_phrase_of(&pair.target);
        let property = tagger
            .and_then(|t| t.last_adjective(&pair.source))
            .map(|w| w.trim().to_lowercase())
            .filter(|w| is_clean_property(w))
            .or_else(|| last_content_word(&pair.source));
        match (property, object_phrase) {
            (Some(property), Some(object_phrase)) => out.push(PropertyObjectPair {
                property,
                object_phrase,
            }),
            _ => skipped += 1,
        }
    }
    Extraction {
        pairs: out,
        skipped,
    }
}

fn is_clean_property(word: &str) -> bool {
    !word.is_empty() && word.chars().all(|c| c.is_alphabetic() && c.is_lowercase())
}

/// Rightmost alphabetic non-stopword token of `source`, lowercased.
fn last_content_word(source: &str) -> Option<String> {
    source
        .split_whitespace()
        .rev()
        .map(|t| {
            t.trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase()
        })
        .find(|t| !t.is_empty() && t.chars().all(|c| c.is_alphabetic()) && !is_stopword(t))
}

/// Text after the last "like a"/"like an" of `target`, lowercased, with the
/// article kept and trailing punctuation stripped.
fn object_phrase_of(target: &str) -> Option<String> {
    let lower = target.to_lowercase();
    let hit_a = last_boundary_match(&lower, "like a ");
    let hit_an = last_boundary_match(&lower, "like an ");
    let pos = match (hit_a, hit_an) {
        (Some(a), Some(an)) => a.max(an),
        (one, other) => one.or(other)?,
    };
    // keep the article: skip only "like "
    let phrase = lower[pos + "like ".len()..]
        .trim()
        .trim_end_matches(|c: char| !c.is_alphanumeric())
        .to_string();
    let has_head = phrase
        .split_whitespace()
        .skip(1)
        .any(|t| t.chars().any(char::is_alphanumeric));
    if has_head {
        Some(phrase)
    } else {
        None
    }
}

/// Last occurrence of `needle` in `text` that starts on a word boundary.
fn last_boundary_match(text: &str, needle: &str) -> Option<usize> {
    let mut best = None;
    let mut from = 0;
    while let Some(rel) = text[from..].find(needle) {
        let abs = from + rel;
        if abs == 0 || text[..abs].ends_with(char::is_whitespace) {
            best = Some(abs);
        }
        from = abs + 1;
    }
    best
}

/// The single place gold/candidate equality is decided: case-insensitive
/// exact match after trimming.
pub fn gold_match(gold: &str, token: &str) -> bool {
    gold.trim().eq_ignore_ascii_case(token.trim())
}

/// Candidates for "{object_phrase} is [MASK]", kept to alphabetic lowercase
/// words and re-ranked.
pub fn lm_property_candidates<B: MaskBackend + ?Sized>(
    backend: &B,
    templates: &TemplateRegistry,
    object_phrase: &str,
    n: usize,
) -> Result<Vec<Candidate>, EvalError> {
    if n == 0 {
        return Err(EvalError::ZeroK);
    }
    let prompt = templates
        .get_required(template::EVAL_PROPERTY)?
        .instantiate(&[("x", object_phrase.trim())])?;
    let raw = fill_mask(backend, &prompt, n)?;
    let mut seen = alloc::collections::BTreeSet::new();
    let mut out = Vec::new();
    for c in raw {
        let token = c.token.trim().to_lowercase();
        if token.is_empty() || !token.chars().all(|ch| ch.is_alphabetic()) {
            continue;
        }
        if seen.insert(token.clone()) {
            let rank = out.len() + 1;
            out.push(Candidate::new(token, c.score, rank));
        }
    }
    Ok(out)
}

/// Fraction of items whose gold appears in the first min(k, len) candidates.
pub fn precision_at(k: usize, items: &[(String, Vec<Candidate>)]) -> Result<f64, EvalError> {
    if k == 0 {
        return Err(EvalError::ZeroK);
    }
    if items.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let hits = items
        .iter()
        .filter(|(gold, candidates)| {
            candidates
                .iter()
                .take(k)
                .any(|c| gold_match(gold, &c.token))
        })
        .count();
    Ok(hits as f64 / items.len() as f64)
}

fn report_from_items(
    system_id: &str,
    requested_k: usize,
    items: &[(String, Vec<Candidate>)],
) -> Result<PrecisionReport, EvalError> {
    if items.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let total_returned: usize = items.iter().map(|(_, c)| c.len()).sum();
    let mut p_at = BTreeMap::new();
    for k in PRECISION_KS {
        p_at.insert(k, precision_at(k, items)?);
    }
    Ok(PrecisionReport {
        system_id: system_id.to_string(),
        n_items: items.len(),
        requested_k,
        mean_returned: total_returned as f64 / items.len() as f64,
        p_at,
    })
}

/// Evaluate a language-model backend over the dataset.
pub fn evaluate_lm<B: MaskBackend + ?Sized>(
    backend: &B,
    templates: &TemplateRegistry,
    dataset: &[PropertyObjectPair],
    request_n: usize,
) -> Result<PrecisionReport, EvalError> {
    if dataset.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let mut items = Vec::with_capacity(dataset.len());
    for item in dataset {
        let candidates =
            lm_property_candidates(backend, templates, &item.object_phrase, request_n)?;
        items.push((item.property.clone(), candidates));
    }
    report_from_items(&backend.descriptor().id, request_n, &items)
}

/// Evaluate the knowledge-base baseline over the dataset. Object phrases
/// are first reduced to their root; objects without a KB node contribute an
/// empty candidate list (a miss), so coverage gaps lower precision exactly
/// as they would in a live run.
pub fn evaluate_kb<K: KnowledgeBase + ?Sized>(
    kb: &K,
    system_id: &str,
    allowlist: &RelationAllowlist,
    dataset: &[PropertyObjectPair],
    request_n: usize,
) -> Result<PrecisionReport, EvalError> {
    if dataset.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    if request_n == 0 {
        return Err(EvalError::ZeroK);
    }
    let mut items = Vec::with_capacity(dataset.len());
    for item in dataset {
        let root = root_of(&item.object_phrase).root;
        let candidates = match kb_properties(kb, allowlist, &root, request_n) {
            Ok(candidates) => candidates,
            Err(KBError::NotFound { .. }) => Vec::new(),
            Err(other) => return Err(other.into()),
        };
        items.push((item.property.clone(), candidates));
    }
    report_from_items(system_id, request_n, &items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::TableBackend;
    use crate::kb::FixtureKB;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pair(source: &str, target: &str) -> SimilePair {
        SimilePair {
            source: source.to_string(),
            target: target.to_string(),
        }
    }

    #[test]
    fn extraction_examples() {
        let got = extract_pairs(&[
            pair("The city was beautiful", "The city was like a painting"),
            pair("Felt worthless", "Felt like a low budget film"),
            pair("Hello", "No simile here"),
        ]);
        assert_eq!(
            got.pairs,
            vec![
                PropertyObjectPair {
                    property: "beautiful".to_string(),
                    object_phrase: "a painting".to_string(),
                },
                PropertyObjectPair {
                    property: "worthless".to_string(),
                    object_phrase: "a low budget film".to_string(),
                },
            ]
        );
        assert_eq!(got.skipped, 1);
    }

    #[test]
    fn object_phrase_uses_the_last_simile_marker() {
        let got = extract_pairs(&[pair(
            "It felt endless",
            "It was like a dream and then like an ocean",
        )]);
        assert_eq!(got.pairs[0].object_phrase, "an ocean");
    }

    #[test]
    fn unlike_is_not_a_marker() {
        let got = extract_pairs(&[pair("It was odd", "It was unlike a snake")]);
        assert!(got.pairs.is_empty());
        assert_eq!(got.skipped, 1);
    }

    #[test]
    fn trailing_punctuation_is_stripped() {
        let got = extract_pairs(&[pair("He ran fast", "He ran like a cheetah.")]);
        assert_eq!(got.pairs[0].object_phrase, "a cheetah");
        assert_eq!(got.pairs[0].property, "fast");
    }

    #[test]
    fn article_only_object_is_skipped() {
        let got = extract_pairs(&[pair("It was odd", "It looked like a ...")]);
        assert_eq!(got.skipped, 1);
    }

    #[test]
    fn property_is_always_clean() {
        let got = extract_pairs(&[
            pair("Felt 100% worthless2", "Felt like a low budget film"),
            pair("It was the", "It was like a stone"),
        ]);
        // first: both digit-bearing tokens rejected, "felt" survives;
        // second: no content word at all -> skipped
        assert_eq!(got.pairs.len(), 1);
        assert_eq!(got.pairs[0].property, "felt");
        assert_eq!(got.skipped, 1);
        for p in &got.pairs {
            assert!(!p.property.contains(char::is_whitespace));
            assert!(!p.property.contains(|c: char| c.is_ascii_digit()));
        }
    }

    struct FixedTagger;
    impl PropertyTagger for FixedTagger {
        fn last_adjective(&self, _source: &str) -> Option<String> {
            Some(" Gorgeous ".to_string())
        }
    }

    #[test]
    fn tagger_seam_wins_when_it_answers() {
        let got = extract_pairs_with(
            Some(&FixedTagger),
            &[pair(
                "The city was beautiful",
                "The city was like a painting",
            )],
        );
        assert_eq!(got.pairs[0].property, "gorgeous");
    }

    fn cands(tokens: &[&str]) -> Vec<Candidate> {
        tokens
            .iter()
            .enumerate()
            .map(|(i, t)| Candidate::new(t.to_string(), -(i as f64), i + 1))
            .collect()
    }

    #[test]
    fn precision_membership_and_bounds() {
        let items = vec![(
            "worthless".to_string(),
            cands(&["cheap", "worthless", "bad"]),
        )];
        assert_eq!(precision_at(10, &items).unwrap(), 1.0);
        assert_eq!(precision_at(1, &items).unwrap(), 0.0);
        assert_eq!(precision_at(2, &items).unwrap(), 1.0);

        let empty_lists = vec![("a".to_string(), Vec::new()), ("b".to_string(), Vec::new())];
        assert_eq!(precision_at(10, &empty_lists).unwrap(), 0.0);

        assert_eq!(precision_at(0, &items).unwrap_err(), EvalError::ZeroK);
        assert_eq!(precision_at(10, &[]).unwrap_err(), EvalError::EmptyDataset);
    }

    #[test]
    fn gold_match_is_case_insensitive() {
        assert!(gold_match("Worthless", "worthless"));
        assert!(gold_match(" worthless ", "WORTHLESS"));
        assert!(!gold_match("worth", "worthless"));
    }

    /// Independent brute-force membership scan, written before the main
    /// implementation.
    fn brute_force_precision(k: usize, items: &[(String, Vec<Candidate>)]) -> f64 {
        let mut hits = 0usize;
        for (gold, candidates) in items {
            let top = if candidates.len() < k {
                candidates.len()
            } else {
                k
            };
            let mut found = false;
            for c in candidates.iter().take(top) {
                if c.token.to_lowercase() == gold.trim().to_lowercase() {
                    found = true;
                }
            }
            if found {
                hits += 1;
            }
        }
        hits as f64 / items.len() as f64
    }

    #[test]
    fn precision_matches_brute_force_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let vocab: Vec<String> = (0..60).map(|i| alloc::format!("w{i}")).collect();
        for _ in 0..200 {
            let n_items = rng.random_range(1..=20);
            let items: Vec<(String, Vec<Candidate>)> = (0..n_items)
                .map(|_| {
                    let gold = vocab[rng.random_range(0..vocab.len())].clone();
                    let len = rng.random_range(0..=40);
                    let mut pool = vocab.clone();
                    let mut list = Vec::new();
                    for r in 0..len {
                        let pick = rng.random_range(0..pool.len());
                        list.push(Candidate::new(pool.swap_remove(pick), -(r as f64), r + 1));
                    }
                    (gold, list)
                })
                .collect();
            for k in [1, 3, 10, 50] {
                assert_eq!(
                    precision_at(k, &items).unwrap(),
                    brute_force_precision(k, &items)
                );
            }
        }
    }

    #[test]
    fn precision_is_monotone_in_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let items: Vec<(String, Vec<Candidate>)> = (0..10)
                .map(|_| {
                    let list: Vec<&str> = ["red", "blue", "green", "old", "flat"]
                        .into_iter()
                        .take(rng.random_range(0..=5))
                        .collect();
                    (
                        ["red", "flat", "missing"][rng.random_range(0..3)].to_string(),
                        cands(&list),
                    )
                })
                .collect();
            let p10 = precision_at(10, &items).unwrap();
            let p100 = precision_at(100, &items).unwrap();
            let p1000 = precision_at(1000, &items).unwrap();
            assert!(p10 <= p100 && p100 <= p1000);
        }
    }

    /// "filler" plus the rank spelled with letters, so the alphabetic-word
    /// filter keeps it.
    fn alpha_filler(r: usize) -> String {
        let suffix: String = alloc::format!("{r}")
            .chars()
            .map(|d| (b'a' + d.to_digit(10).unwrap() as u8) as char)
            .collect();
        alloc::format!("filler{suffix}")
    }

    fn eval_backend() -> TableBackend {
        let filler = |n: usize, hit: Option<(&str, usize)>| -> Vec<(String, f64)> {
            (1..=n)
                .map(|r| {
                    let token = match hit {
                        Some((word, rank)) if rank == r => word.to_string(),
                        _ => alpha_filler(r),
                    };
                    (token, -(r as f64))
                })
                .collect()
        };
        TableBackend::new("table")
            .with_entry("a painting is [MASK]", filler(20, Some(("beautiful", 15))))
            .with_entry("a low budget film is [MASK]", filler(20, None))
            .with_entry("a balloon is [MASK]", filler(5, Some(("red", 2))))
    }

    fn eval_dataset() -> Vec<PropertyObjectPair> {
        vec![
            PropertyObjectPair {
                property: "beautiful".to_string(),
                object_phrase: "a painting".to_string(),
            },
            PropertyObjectPair {
                property: "worthless".to_string(),
                object_phrase: "a low budget film".to_string(),
            },
            PropertyObjectPair {
                property: "red".to_string(),
                object_phrase: "a balloon".to_string(),
            },
        ]
    }

    #[test]
    fn lm_report_matches_hand_computation() {
        // beautiful @ rank 15 of 20; worthless absent of 20; red @ rank 2
        // of 5 -> p@10 = 1/3, p@100 = p@1000 = 2/3, mean length 15
        let backend = eval_backend();
        let templates = TemplateRegistry::builtin();
        let report = evaluate_lm(&backend, &templates, &eval_dataset(), 1000).unwrap();
        assert_eq!(report.system_id, "table");
        assert_eq!(report.n_items, 3);
        assert_eq!(report.requested_k, 1000);
        assert_eq!(report.mean_returned, 15.0);
        assert_eq!(report.p_at[&10], 1.0 / 3.0);
        assert_eq!(report.p_at[&100], 2.0 / 3.0);
        assert_eq!(report.p_at[&1000], 2.0 / 3.0);
    }

    #[test]
    fn kb_report_counts_not_found_as_miss() {
        // painting has 4 edges with beautiful ranked 1; film has 2 edges,
        // gold absent; balloon has no node -> empty list
        let kb = FixtureKB::new()
            .with_edge("painting", "HasProperty", "beautiful", 2.5)
            .with_edge("painting", "HasProperty", "framed", 1.5)
            .with_edge("painting", "IsA", "art", 1.0)
            .with_edge("painting", "UsedFor", "decoration", 0.5)
            .with_edge("film", "HasProperty", "long", 2.0)
            .with_edge("film", "IsA", "art", 1.0);
        let report = evaluate_kb(
            &kb,
            "fixture-kb",
            &RelationAllowlist::default(),
            &eval_dataset(),
            1000,
        )
        .unwrap();
        assert_eq!(report.n_items, 3);
        assert_eq!(report.mean_returned, 2.0);
        assert_eq!(report.p_at[&10], 1.0 / 3.0);
        assert_eq!(report.p_at[&100], 1.0 / 3.0);
        assert_eq!(report.p_at[&1000], 1.0 / 3.0);
    }

    #[test]
    fn lm_candidates_are_clean_and_prefix_consistent() {
        let backend = TableBackend::new("t").with_entry(
            "a robot is [MASK]",
            vec![
                ("Useful", -0.1),
                ("##ful", -0.2),
                ("12", -0.3),
                ("useful", -0.4),
                ("strong", -0.5),
            ],
        );
        let templates = TemplateRegistry::builtin();
        let all = lm_property_candidates(&backend, &templates, "a robot", 10).unwrap();
        let tokens: Vec<&str> = all.iter().map(|c| c.token.as_str()).collect();
        assert_eq!(tokens, vec!["useful", "strong"]);

        let head = lm_property_candidates(&backend, &templates, "a robot", 1).unwrap();
        assert_eq!(head.len(), 1);
        assert_eq!(head[0], all[0]);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let backend = eval_backend();
        let templates = TemplateRegistry::builtin();
        assert_eq!(
            evaluate_lm(&backend, &templates, &[], 10).unwrap_err(),
            EvalError::EmptyDataset
        );
        let kb = FixtureKB::new();
        assert_eq!(
            evaluate_kb(&kb, "kb", &RelationAllowlist::default(), &[], 10).unwrap_err(),
            EvalError::EmptyDataset
        );
    }

    #[test]
    fn reports_are_deterministic() {
        let backend = eval_backend();
        let templates = TemplateRegistry::builtin();
        let a = evaluate_lm(&backend, &templates, &eval_dataset(), 100).unwrap();
        let b = evaluate_lm(&backend, &templates, &eval_dataset(), 100).unwrap();
        assert_eq!(a, b);
    }
}
