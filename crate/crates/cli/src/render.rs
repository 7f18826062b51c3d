//! The visualize pipeline: resolve a generator/scorer adapter pair, run the
//! latent ascent, and persist a PNG of the final image plus a JSONL trace.
//!
//! Only toy adapter pairs ship in-tree; real diffusion or CLIP-style stacks
//! plug in behind the same [`Generator`]/[`Scorer`] traits. Output filenames
//! embed a content hash of (text, seed, adapter ids) so distinct runs never
//! collide and identical runs are idempotent.

use std::io::Write as _;
use std::path::Path;

use chimera_core::latent::toy::{IdentityGenerator, LinearGenerator, TargetScorer};
use chimera_core::latent::{optimize_latent, Generator, Image, OptimizationConfig, Scorer};
use rand_chacha::rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::split_seed;
use crate::errors::CliError;

/// A generator/scorer pairing with stable ids for hashing and reporting.
pub struct AdapterPair {
    pub generator_id: String,
    pub scorer_id: String,
    pub generator: Box<dyn Generator>,
    pub scorer: Box<dyn Scorer>,
}

impl std::fmt::Debug for AdapterPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdapterPair")
            .field("generator_id", &self.generator_id)
            .field("scorer_id", &self.scorer_id)
            .finish_non_exhaustive()
    }
}

/// Adapter pairs known to this binary.
pub const KNOWN_PAIRS: &[&str] = &["toy-identity", "toy-linear"];

/// A deterministic pseudo-embedding of `text`: `dim` values in `(0, 1)`
/// seeded from the text alone, standing in for a real text encoder.
fn target_from_text(text: &str, dim: usize) -> Vec<f64> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(split_seed(0, text));
    (0..dim)
        .map(|_| {
            let n: f64 = StandardNormal.sample(&mut rng);
            f64::clamp(0.5 + 0.25 * n, 0.05, 0.95)
        })
        .collect()
}

/// Build the named adapter pair. The scorer's target is derived from `text`,
/// which is what makes the ascent text-guided.
pub fn build_pair(name: &str, text: &str) -> Result<AdapterPair, CliError> {
    match name {
        "toy-identity" => {
            let generator = IdentityGenerator::new(4);
            let target = target_from_text(text, 4);
            Ok(AdapterPair {
                generator_id: "identity-4".to_string(),
                scorer_id: "text-target".to_string(),
                generator: Box::new(generator),
                scorer: Box::new(TargetScorer::new(target)),
            })
        }
        "toy-linear" => {
            let generator = LinearGenerator::random(17, 4, 8);
            let target = target_from_text(text, 8);
            Ok(AdapterPair {
                generator_id: "linear-17-4x8".to_string(),
                scorer_id: "text-target".to_string(),
                generator: Box::new(generator),
                scorer: Box::new(TargetScorer::new(target)),
            })
        }
        other => Err(CliError::missing_adapter(format!(
            "unknown adapter pair {other:?}; available: {}",
            KNOWN_PAIRS.join(", ")
        ))),
    }
}

/// First 16 hex chars of sha256(text, seed, generator id, scorer id).
pub fn run_hash(text: &str, seed: u64, generator_id: &str, scorer_id: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    hasher.update([0]);
    hasher.update(seed.to_le_bytes());
    hasher.update([0]);
    hasher.update(generator_id.as_bytes());
    hasher.update([0]);
    hasher.update(scorer_id.as_bytes());
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// What a visualize run produced; serialized to stdout as the command result.
#[derive(Debug, Serialize)]
pub struct VisualizeOutcome {
    pub text: String,
    pub pair: String,
    pub generator_id: String,
    pub scorer_id: String,
    pub seed: u64,
    pub steps: usize,
    pub final_score: f64,
    pub final_objective: f64,
    pub png: String,
    pub trace: String,
}

fn atomic_write(out_dir: &Path, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp = tempfile::NamedTempFile::new_in(out_dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| {
        CliError::internal(format!("cannot persist {}: {}", path.display(), e.error))
    })?;
    Ok(())
}

/// Encode a single-channel image as PNG bytes, mapping values through a
/// clamp to [0, 1] and an 8-bit quantization.
fn png_bytes(image: &Image) -> Result<Vec<u8>, CliError> {
    if image.channels != 1 {
        return Err(CliError::internal(format!(
            "png output supports single-channel images, got {} channels",
            image.channels
        )));
    }
    let width = image.width.max(1) as u32;
    let height = image.height.max(1) as u32;
    let buffer = image::GrayImage::from_fn(width, height, |x, y| {
        let value = image
            .data
            .get(y as usize * image.width + x as usize)
            .copied()
            .unwrap_or(0.0);
        image::Luma([(value.clamp(0.0, 1.0) * 255.0).round() as u8])
    });
    let mut bytes = std::io::Cursor::new(Vec::new());
    buffer
        .write_to(&mut bytes, image::ImageFormat::Png)
        .map_err(|e| CliError::internal(format!("png encoding failed: {e}")))?;
    Ok(bytes.into_inner())
}

/// Run the ascent and write `blend_{hash}.png` + `blend_{hash}.trace.jsonl`
/// into `out_dir` (created if missing). Both writes are atomic: no partial
/// files are left behind on failure.
pub fn visualize(
    pair_name: &str,
    text: &str,
    cfg: &OptimizationConfig,
    out_dir: &Path,
) -> Result<VisualizeOutcome, CliError> {
    let pair = build_pair(pair_name, text)?;
    let (state, image, trace) =
        optimize_latent(pair.generator.as_ref(), pair.scorer.as_ref(), text, cfg)?;

    std::fs::create_dir_all(out_dir)?;
    let hash = run_hash(text, cfg.seed, &pair.generator_id, &pair.scorer_id);
    let png_path = out_dir.join(format!("blend_{hash}.png"));
    let trace_path = out_dir.join(format!("blend_{hash}.trace.jsonl"));

    atomic_write(out_dir, &png_path, &png_bytes(&image)?)?;

    let mut jsonl = String::new();
    for record in &trace.records {
        jsonl.push_str(
            &serde_json::to_string(record)
                .map_err(|e| CliError::internal(format!("trace serialization failed: {e}")))?,
        );
        jsonl.push('\n');
    }
    atomic_write(out_dir, &trace_path, jsonl.as_bytes())?;

    let last = trace.records.last();
    Ok(VisualizeOutcome {
        text: text.to_string(),
        pair: pair_name.to_string(),
        generator_id: pair.generator_id,
        scorer_id: pair.scorer_id,
        seed: cfg.seed,
        steps: state.step,
        final_score: last.map(|r| r.score).unwrap_or(f64::NAN),
        final_objective: last.map(|r| r.penalized_objective).unwrap_or(f64::NAN),
        png: png_path.display().to_string(),
        trace: trace_path.display().to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(seed: u64) -> OptimizationConfig {
        OptimizationConfig {
            step_size: 0.25,
            max_iters: 100,
            prior_weight: 0.0,
            stop_tol: 1e-9,
            seed,
        }
    }

    #[test]
    fn unknown_pair_is_adapter_unavailable() {
        let err = build_pair("stable-diffusion-xl", "a moon").unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn outputs_are_deterministic_for_text_and_seed() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let a = visualize(
            "toy-identity",
            "a moon that is dead like a ghost",
            &cfg(9),
            dir_a.path(),
        )
        .unwrap();
        let b = visualize(
            "toy-identity",
            "a moon that is dead like a ghost",
            &cfg(9),
            dir_b.path(),
        )
        .unwrap();
        let png_a = std::fs::read(&a.png).unwrap();
        let png_b = std::fs::read(&b.png).unwrap();
        assert_eq!(png_a, png_b);
        assert_eq!(
            std::fs::read(&a.trace).unwrap(),
            std::fs::read(&b.trace).unwrap()
        );
        // different text moves the target, so the artifacts differ
        let c = visualize(
            "toy-identity",
            "a sun that is bright like a lamp",
            &cfg(9),
            dir_a.path(),
        )
        .unwrap();
        assert_ne!(std::fs::read(&c.png).unwrap(), png_a);
        assert_ne!(c.png, a.png, "hash must separate distinct texts");
    }

    #[test]
    fn ascent_approaches_the_text_target() {
        let dir = tempfile::tempdir().unwrap();
        let text = "a balloon that is red like a sunset";
        let out = visualize("toy-identity", text, &cfg(3), dir.path()).unwrap();
        // identity generator: optimum is score 0 at image == target
        assert!(out.final_score > -1e-4, "final score {}", out.final_score);
        let trace_text = std::fs::read_to_string(&out.trace).unwrap();
        let lines: Vec<&str> = trace_text.lines().collect();
        assert_eq!(lines.len(), out.steps + 1);
        // every line parses back into a trace record
        for line in lines {
            let _: chimera_core::latent::TraceRecord = serde_json::from_str(line).unwrap();
        }
    }

    #[test]
    fn linear_pair_runs_and_hash_separates_pairs() {
        let dir = tempfile::tempdir().unwrap();
        let text = "a tree that is tall like a tower";
        let small = OptimizationConfig {
            step_size: 0.01,
            max_iters: 50,
            prior_weight: 0.1,
            stop_tol: 0.0,
            seed: 5,
        };
        let linear = visualize("toy-linear", text, &small, dir.path()).unwrap();
        let identity = visualize("toy-identity", text, &small, dir.path()).unwrap();
        assert_ne!(linear.png, identity.png);
        assert!(Path::new(&linear.png).exists());
        assert!(Path::new(&linear.trace).exists());
    }

    #[test]
    fn png_is_decodable_grayscale() {
        let image = Image::new(1, 4, 1, vec![0.0, 0.25, 0.5, 2.0]);
        let bytes = png_bytes(&image).unwrap();
        let decoded = image::load_from_memory(&bytes).unwrap().to_luma8();
        assert_eq!(decoded.width(), 4);
        assert_eq!(decoded.height(), 1);
        assert_eq!(decoded.get_pixel(0, 0).0[0], 0);
        assert_eq!(decoded.get_pixel(1, 0).0[0], 64);
        assert_eq!(decoded.get_pixel(3, 0).0[0], 255, "clamped to 1.0");
    }
}
