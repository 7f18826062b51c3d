//! Text-guided latent ascent.
//!
//! A latent vector z is drawn from a standard Gaussian and gradient-ascended
//! so a generator's output maximizes a text–image similarity scorer:
//!
//! ```text
//! J(z) = f(g(z), text) − λ‖z‖²
//! ```
//!
//! Plain fixed-step ascent; the optional λ term keeps z near the Gaussian
//! prior. Generators and scorers are abstract capabilities so the same loop
//! drives both the analytic toy instances shipped in [`toy`] and adapters
//! around real pretrained models.

pub mod toy;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Largest dimension the finite-difference fallback accepts.
pub const FD_MAX_DIM: usize = 64;

/// Step used by the internal finite-difference fallback during
/// optimization (gradient checking takes its eps explicitly).
const FD_EPS: f64 = 1e-5;

/// A real-valued image in [0,1], row-major (height, width, channels).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Image {
    /// Panics if `data` does not match the shape.
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            height * width * channels,
            "image data length must equal height*width*channels"
        );
        Self {
            height,
            width,
            channels,
            data,
        }
    }

    /// A 1 x n x 1 image, the shape every toy instance uses.
    pub fn row(data: Vec<f64>) -> Self {
        let width = data.len();
        Self::new(1, width, 1, data)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Latent-to-image generator capability. `g` must be deterministic given z.
pub trait Generator {
    fn latent_dim(&self) -> usize;
    /// (height, width, channels) of every generated image.
    fn output_shape(&self) -> (usize, usize, usize);
    fn generate(&self, z: &[f64]) -> Image;
    /// Vector–Jacobian product: `cotangentᵀ · ∂g/∂z`, length
    /// [`Generator::latent_dim`]. `None` requests the finite-difference
    /// fallback (only valid for latent_dim ≤ [`FD_MAX_DIM`]).
    fn vjp(&self, z: &[f64], cotangent: &[f64]) -> Option<Vec<f64>> {
        let _ = (z, cotangent);
        None
    }
}

/// Text–image similarity capability. `f` must be deterministic given
/// (image, text).
pub trait Scorer {
    fn score(&self, image: &Image, text: &str) -> f64;
    /// ∂f/∂image flattened to the image's data layout. `None` requests the
    /// finite-difference fallback.
    fn image_gradient(&self, image: &Image, text: &str) -> Option<Vec<f64>> {
        let _ = (image, text);
        None
    }
}

impl<G: Generator + ?Sized> Generator for &G {
    fn latent_dim(&self) -> usize {
        (**self).latent_dim()
    }
    fn output_shape(&self) -> (usize, usize, usize) {
        (**self).output_shape()
    }
    fn generate(&self, z: &[f64]) -> Image {
        (**self).generate(z)
    }
    fn vjp(&self, z: &[f64], cotangent: &[f64]) -> Option<Vec<f64>> {
        (**self).vjp(z, cotangent)
    }
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn score(&self, image: &Image, text: &str) -> f64 {
        (**self).score(image, text)
    }
    fn image_gradient(&self, image: &Image, text: &str) -> Option<Vec<f64>> {
        (**self).image_gradient(image, text)
    }
}

/// Hyperparameters of one ascent run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizationConfig {
    pub step_size: f64,
    pub max_iters: usize,
    /// λ, the Gaussian-prior penalty weight.
    pub prior_weight: f64,
    /// Stop when |J(z_{t+1}) − J(z_t)| falls below this; 0 disables early
    /// stopping.
    pub stop_tol: f64,
    pub seed: u64,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        Self {
            step_size: 0.1,
            max_iters: 500,
            prior_weight: 0.0,
            stop_tol: 1e-6,
            seed: 0,
        }
    }
}

impl OptimizationConfig {
    fn validate(&self) -> Result<(), LatentError> {
        let bad = |reason: &str| {
            Err(LatentError::InvalidConfig {
                reason: String::from(reason),
            })
        };
        if !self.step_size.is_finite() || self.step_size <= 0.0 {
            return bad("step_size must be finite and > 0");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        if !self.prior_weight.is_finite() || self.prior_weight < 0.0 {
            return bad("prior_weight must be finite and >= 0");
        }
        if !self.stop_tol.is_finite() || self.stop_tol < 0.0 {
            return bad("stop_tol must be finite and >= 0");
        }
        Ok(())
    }
}

/// The latent vector plus where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentState {
    pub z: Vec<f64>,
    pub step: usize,
    pub rng_seed: u64,
}

/// One trace row, recorded before each update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    /// Raw similarity f(g(z), text).
    pub score: f64,
    /// J(z) = score − λ‖z‖².
    pub penalized_objective: f64,
    pub gradient_norm: f64,
}

/// Per-iteration history of one run; at most max_iters + 1 rows with
/// strictly increasing step numbers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OptimizationTrace {
    pub records: Vec<TraceRecord>,
}

impl OptimizationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.records.last().map(|r| r.penalized_objective)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LatentError {
    #[error("guidance text must be non-empty")]
    EmptyText,
    #[error("invalid optimization config: {reason}")]
    InvalidConfig { reason: String },
    #[error("non-finite {what} at step {step}; optimization diverged")]
    Diverged {
        what: &'static str,
        step: usize,
        trace: OptimizationTrace,
    },
    #[error(
        "no analytic gradient and dimension {dim} exceeds the finite-difference limit {FD_MAX_DIM}"
    )]
    DimensionTooLarge { dim: usize },
    #[error("gradient checking requires an analytic gradient path")]
    MissingAnalyticGradient,
    #[error("eps must be finite and > 0")]
    BadEps,
}

fn l2_norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

fn squared_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn similarity<G: Generator + ?Sized, S: Scorer + ?Sized>(
    g: &G,
    f: &S,
    text: &str,
    z: &[f64],
) -> f64 {
    f.score(&g.generate(z), text)
}

/// Analytic ∂f(g(z))/∂z via scorer image-gradient + generator VJP, when
/// both are available.
fn analytic_similarity_gradient<G: Generator + ?Sized, S: Scorer + ?Sized>(
    g: &G,
    f: &S,
    text: &str,
    z: &[f64],
    image: &Image,
) -> Option<Vec<f64>> {
    let cotangent = f.image_gradient(image, text)?;
    g.vjp(z, &cotangent)
}

/// Central-difference gradient of the similarity part.
fn fd_similarity_gradient<G: Generator + ?Sized, S: Scorer + ?Sized>(
    g: &G,
    f: &S,
    text: &str,
    z: &[f64],
    eps: f64,
) -> Result<Vec<f64>, LatentError> {
    if z.len() > FD_MAX_DIM {
        return Err(LatentError::DimensionTooLarge { dim: z.len() });
    }
    let mut grad = vec![0.0; z.len()];
    let mut probe = z.to_vec();
    for i in 0..z.len() {
        probe[i] = z[i] + eps;
        let plus = similarity(g, f, text, &probe);
        probe[i] = z[i] - eps;
        let minus = similarity(g, f, text, &probe);
        probe[i] = z[i];
        grad[i] = (plus - minus) / (2.0 * eps);
    }
    Ok(grad)
}

/// Gradient ascent on J(z) = f(g(z), text) − λ‖z‖².
///
/// z₀ is standard Gaussian under `cfg.seed`; the run stops after
/// `cfg.max_iters` updates or as soon as the objective changes by less than
/// `cfg.stop_tol` between consecutive recorded steps. Fully deterministic
/// given the seed and the instance.
pub fn optimize_latent<G: Generator + ?Sized, S: Scorer + ?Sized>(
    g: &G,
    f: &S,
    text: &str,
    cfg: &OptimizationConfig,
) -> Result<(LatentState, Image, OptimizationTrace), LatentError> {
    if text.trim().is_empty() {
        return Err(LatentError::EmptyText);
    }
    cfg.validate()?;

    let dim = g.latent_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut z: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();

    let mut trace = OptimizationTrace::default();
    let mut prev_objective: Option<f64> = None;
    let mut step = 0usize;
    let mut image = g.generate(&z);

    loop {
        let score = f.score(&image, text);
        let penalized = score - cfg.prior_weight * squared_norm(&z);
        if !penalized.is_finite() {
            return Err(LatentError::Diverged {
                what: "objective",
                step,
                trace,
            });
        }

        let mut grad = match analytic_similarity_gradient(g, f, text, &z, &image) {
            Some(grad) => grad,
            None => fd_similarity_gradient(g, f, text, &z, FD_EPS)?,
        };
        for (gi, zi) in grad.iter_mut().zip(&z) {
            *gi -= 2.0 * cfg.prior_weight * zi;
        }
        let gradient_norm = l2_norm(&grad);
        if !gradient_norm.is_finite() {
            return Err(LatentError::Diverged {
                what: "gradient",
                step,
                trace,
            });
        }

        trace.records.push(TraceRecord {
            step,
            score,
            penalized_objective: penalized,
            gradient_norm,
        });

        let converged = prev_objective
            .map(|p| libm::fabs(penalized - p) < cfg.stop_tol)
            .unwrap_or(false);
        prev_objective = Some(penalized);
        if converged || step == cfg.max_iters {
            break;
        }

        for (zi, gi) in z.iter_mut().zip(&grad) {
            *zi += cfg.step_size * gi;
        }
        step += 1;
        image = g.generate(&z);
    }

    let state = LatentState {
        z,
        step,
        rng_seed: cfg.seed,
    };
    Ok((state, image, trace))
}

/// Compare the analytic gradient of J at `z` (λ = 0) against a central
/// finite difference with step `eps`; returns the max per-element relative
/// error, with the denominator floored at 1 so zero gradients compare
/// exactly.
pub fn check_gradients<G: Generator + ?Sized, S: Scorer + ?Sized>(
    g: &G,
    f: &S,
    text: &str,
    z: &[f64],
    eps: f64,
) -> Result<f64, LatentError> {
    if !eps.is_finite() || eps <= 0.0 {
        return Err(LatentError::BadEps);
    }
    if z.len() > FD_MAX_DIM {
        return Err(LatentError::DimensionTooLarge { dim: z.len() });
    }
    let image = g.generate(z);
    let analytic = analytic_similarity_gradient(g, f, text, z, &image)
        .ok_or(LatentError::MissingAnalyticGradient)?;
    let numeric = fd_similarity_gradient(g, f, text, z, eps)?;

    let mut worst = 0.0f64;
    for (a, n) in analytic.iter().zip(&numeric) {
        if !a.is_finite() || !n.is_finite() {
            return Err(LatentError::Diverged {
                what: "gradient",
                step: 0,
                trace: OptimizationTrace::default(),
            });
        }
        let denom = libm::fabs(*a).max(libm::fabs(*n)).max(1.0);
        let rel = libm::fabs(a - n) / denom;
        if rel > worst {
            worst = rel;
        }
    }
    Ok(worst)
}
