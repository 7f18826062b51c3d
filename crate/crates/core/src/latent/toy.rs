//! Analytic toy generator/scorer instances.
//!
//! These make the optimizer verifiable: optima are closed-form and every
//! gradient is exact, so ascent runs can be checked against direct linear
//! algebra instead of eyeballing images.
//!
//! Curvature bounds (the L with ascent monotone for step_size ≤ 1/L):
//! - [`IdentityGenerator`] + [`TargetScorer`] + prior λ: J(z) = −‖z−t‖² −
//!   λ‖z‖², so L = 2 + 2λ.
//! - [`LinearGenerator`] + [`TargetScorer`] + prior λ: J(z) = −‖Az−t‖² −
//!   λ‖z‖², so L = 2σ²ₘₐₓ(A) + 2λ ≤ 2‖A‖²_F + 2λ (use
//!   [`LinearGenerator::frobenius_norm_sq`]).

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Generator, Image, Scorer};

/// g(z) = z, as a 1 x d x 1 image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityGenerator {
    dim: usize,
}

impl IdentityGenerator {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "latent dimension must be positive");
        Self { dim }
    }
}

impl Generator for IdentityGenerator {
    fn latent_dim(&self) -> usize {
        self.dim
    }

    fn output_shape(&self) -> (usize, usize, usize) {
        (1, self.dim, 1)
    }

    fn generate(&self, z: &[f64]) -> Image {
        assert_eq!(z.len(), self.dim, "latent length mismatch");
        Image::row(z.to_vec())
    }

    fn vjp(&self, _z: &[f64], cotangent: &[f64]) -> Option<Vec<f64>> {
        Some(cotangent.to_vec())
    }
}

/// g(z) = A·z, as a 1 x m x 1 image.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGenerator {
    /// m rows of length d.
    rows: Vec<Vec<f64>>,
    dim: usize,
}

impl LinearGenerator {
    /// Panics on an empty or ragged matrix.
    pub fn new(rows: Vec<Vec<f64>>) -> Self {
        assert!(!rows.is_empty(), "matrix must have at least one row");
        let dim = rows[0].len();
        assert!(dim > 0, "matrix must have at least one column");
        assert!(
            rows.iter().all(|r| r.len() == dim),
            "all matrix rows must have equal length"
        );
        Self { rows, dim }
    }

    /// A reproducible random instance with entries N(0, 1/(d·m)), keeping
    /// the spectral norm O(1) so moderate step sizes stay stable.
    pub fn random(seed: u64, latent_dim: usize, image_dim: usize) -> Self {
        assert!(latent_dim > 0 && image_dim > 0);
        let scale = 1.0 / libm::sqrt((latent_dim * image_dim) as f64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..image_dim)
            .map(|_| {
                (0..latent_dim)
                    .map(|_| {
                        let v: f64 = StandardNormal.sample(&mut rng);
                        v * scale
                    })
                    .collect()
            })
            .collect();
        Self::new(rows)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// ‖A‖²_F, an upper bound on σ²ₘₐₓ(A) for curvature estimates.
    pub fn frobenius_norm_sq(&self) -> f64 {
        self.rows.iter().flat_map(|r| r.iter()).map(|x| x * x).sum()
    }
}

impl Generator for LinearGenerator {
    fn latent_dim(&self) -> usize {
        self.dim
    }

    fn output_shape(&self) -> (usize, usize, usize) {
        (1, self.rows.len(), 1)
    }

    fn generate(&self, z: &[f64]) -> Image {
        assert_eq!(z.len(), self.dim, "latent length mismatch");
        let data = self
            .rows
            .iter()
            .map(|row| row.iter().zip(z).map(|(a, b)| a * b).sum())
            .collect();
        Image::row(data)
    }

    fn vjp(&self, _z: &[f64], cotangent: &[f64]) -> Option<Vec<f64>> {
        assert_eq!(
            cotangent.len(),
            self.rows.len(),
            "cotangent length mismatch"
        );
        let mut out = vec![0.0; self.dim];
        for (row, w) in self.rows.iter().zip(cotangent) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * w;
            }
        }
        Some(out)
    }
}

/// f(img, _) = −‖img − target‖², maximal exactly when the image hits the
/// target.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetScorer {
    target: Vec<f64>,
}

impl TargetScorer {
    pub fn new(target: Vec<f64>) -> Self {
        assert!(!target.is_empty(), "target must be non-empty");
        Self { target }
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }
}

impl Scorer for TargetScorer {
    fn score(&self, image: &Image, _text: &str) -> f64 {
        assert_eq!(image.len(), self.target.len(), "image length mismatch");
        -image
            .data
            .iter()
            .zip(&self.target)
            .map(|(x, t)| (x - t) * (x - t))
            .sum::<f64>()
    }

    fn image_gradient(&self, image: &Image, _text: &str) -> Option<Vec<f64>> {
        assert_eq!(image.len(), self.target.len(), "image length mismatch");
        Some(
            image
                .data
                .iter()
                .zip(&self.target)
                .map(|(x, t)| -2.0 * (x - t))
                .collect(),
        )
    }
}

/// f(img, _) = c; its gradient is identically zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantScorer {
    value: f64,
}

impl ConstantScorer {
    pub fn new(value: f64) -> Self {
        Self { value }
    }
}

impl Scorer for ConstantScorer {
    fn score(&self, _image: &Image, _text: &str) -> f64 {
        self.value
    }

    fn image_gradient(&self, image: &Image, _text: &str) -> Option<Vec<f64>> {
        Some(vec![0.0; image.len()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_round_trip() {
        let g = IdentityGenerator::new(3);
        assert_eq!(g.latent_dim(), 3);
        assert_eq!(g.output_shape(), (1, 3, 1));
        let img = g.generate(&[0.5, -1.0, 2.0]);
        assert_eq!(img.data, vec![0.5, -1.0, 2.0]);
        assert_eq!(
            g.vjp(&[0.0; 3], &[1.0, 2.0, 3.0]).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
    }

    #[test]
    fn linear_generate_and_vjp_by_hand() {
        // A = [[1,2],[3,4],[0,1]]
        let g = LinearGenerator::new(vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![0.0, 1.0]]);
        assert_eq!(g.latent_dim(), 2);
        assert_eq!(g.output_shape(), (1, 3, 1));
        assert_eq!(g.generate(&[1.0, 1.0]).data, vec![3.0, 7.0, 1.0]);
        // Aᵀ·[1,1,1] = [4, 7]
        assert_eq!(
            g.vjp(&[0.0, 0.0], &[1.0, 1.0, 1.0]).unwrap(),
            vec![4.0, 7.0]
        );
        assert_eq!(g.frobenius_norm_sq(), 1.0 + 4.0 + 9.0 + 16.0 + 1.0);
    }

    #[test]
    #[should_panic(expected = "equal length")]
    fn ragged_matrix_is_rejected() {
        LinearGenerator::new(vec![vec![1.0, 2.0], vec![3.0]]);
    }

    #[test]
    fn random_matrices_are_reproducible_and_modest() {
        let a = LinearGenerator::random(42, 4, 8);
        let b = LinearGenerator::random(42, 4, 8);
        assert_eq!(a, b);
        let c = LinearGenerator::random(43, 4, 8);
        assert_ne!(a, c);
        // scaled entries: expected Frobenius norm² is 1, allow slack
        assert!(a.frobenius_norm_sq() < 4.0);
    }

    #[test]
    fn target_scorer_by_hand() {
        let f = TargetScorer::new(vec![1.0, 2.0]);
        let img = Image::row(vec![0.0, 0.0]);
        assert_eq!(f.score(&img, "t"), -5.0);
        assert_eq!(f.image_gradient(&img, "t").unwrap(), vec![2.0, 4.0]);
        let at_target = Image::row(vec![1.0, 2.0]);
        assert_eq!(f.score(&at_target, "t"), 0.0);
        assert_eq!(f.image_gradient(&at_target, "t").unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn constant_scorer_is_flat() {
        let f = ConstantScorer::new(0.75);
        let img = Image::row(vec![9.0, -9.0]);
        assert_eq!(f.score(&img, "anything"), 0.75);
        assert_eq!(f.image_gradient(&img, "anything").unwrap(), vec![0.0, 0.0]);
    }
}
