//! Synthetic problem generation: random low-rank matrices, uniform entry
//! masks, and Gaussian measurement noise, all from seeded streams.

use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::rng::{mix_seed, stream};

/// Parameters of one synthetic completion problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub n1: usize,
    pub n2: usize,
    pub rank: usize,
    /// Fraction of entries observed, in (0, 1].
    pub sample_ratio: f64,
    /// Standard deviation of the additive measurement noise.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 {
            return Err(Error::InvalidInput("dimensions must be positive".into()));
        }
        if self.rank == 0 || self.rank > self.n1.min(self.n2) {
            return Err(Error::InvalidRank {
                rank: self.rank,
                max: self.n1.min(self.n2),
            });
        }
        if !(self.sample_ratio > 0.0 && self.sample_ratio <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "sample ratio {} outside (0, 1]",
                self.sample_ratio
            )));
        }
        if self.mask_size() == 0 {
            return Err(Error::InvalidInput("sample ratio keeps no entries".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "noise sigma {} must be nonnegative",
                self.noise_sigma
            )));
        }
        Ok(())
    }

    /// Number of observed entries, `floor(ratio * n1 * n2)`.
    pub fn mask_size(&self) -> usize {
        (self.sample_ratio * (self.n1 * self.n2) as f64).floor() as usize
    }
}

// Sub-stream labels so the matrix, the mask and the noise never share a stream.
const STREAM_MATRIX: u64 = 1;
const STREAM_MASK: u64 = 2;
const STREAM_NOISE: u64 = 3;

/// Rank-r matrix as a product of `n1 x r` and `r x n2` standard normal
/// factors. The factors are filled row-major from the seeded stream, left
/// factor first.
pub fn gen_low_rank(spec: &SyntheticSpec) -> Result<DenseMatrix> {
    spec.validate()?;
    let mut rng = stream(mix_seed(spec.seed, &[STREAM_MATRIX]));
    let mut fill = |rows: usize, cols: usize| {
        let mut m = DenseMatrix::zeros(rows, cols);
        for v in m.entries_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        m
    };
    let left = fill(spec.n1, spec.rank);
    let right = fill(spec.rank, spec.n2);
    left.matmul(&right)
}

/// Uniformly random mask of `floor(ratio * n1 * n2)` distinct entries,
/// returned sorted in row-major order.
pub fn gen_mask(spec: &SyntheticSpec) -> Result<Vec<(usize, usize)>> {
    spec.validate()?;
    let total = spec.n1 * spec.n2;
    let count = spec.mask_size();
    let mut rng = stream(mix_seed(spec.seed, &[STREAM_MASK]));
    let mut linear = rand::seq::index::sample(&mut rng, total, count).into_vec();
    linear.sort_unstable();
    Ok(linear.into_iter().map(|k| (k / spec.n2, k % spec.n2)).collect())
}

/// Add independent `N(0, sigma^2)` noise to each measurement.
/// `sigma = 0` returns the input unchanged.
pub fn add_noise(y: &[f64], sigma: f64, seed: u64) -> Result<Vec<f64>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidInput(format!("noise sigma {sigma} must be nonnegative")));
    }
    if sigma == 0.0 {
        return Ok(y.to_vec());
    }
    let normal = Normal::new(0.0, sigma).expect("sigma checked above");
    let mut rng = stream(mix_seed(seed, &[STREAM_NOISE]));
    Ok(y.iter().map(|v| v + normal.sample(&mut rng)).collect())
}
