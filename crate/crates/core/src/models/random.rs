//! Seeded random pairs for validation ensembles.

use faer::Mat;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{BasisIndex, HamiltonianPair};
use crate::error::Result;

/// Shape of a random pair: jittered unit-spaced levels and a Gaussian
/// symmetric coupling confined to a band around the diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomPairSpec {
    pub dim: usize,
    /// Couplings with `|i − j| > bandwidth` vanish; `None` is a full matrix.
    pub bandwidth: Option<usize>,
    /// Level jitter, uniform in `[−jitter, jitter]` around `E0_k = k`.
    pub jitter: f64,
    /// Standard deviation of the diagonal of `V` before regularization.
    pub diagonal_sigma: f64,
    pub lambda: f64,
}

impl RandomPairSpec {
    pub fn new(dim: usize, lambda: f64) -> Self {
        RandomPairSpec { dim, bandwidth: None, jitter: 0.3, diagonal_sigma: 1.0, lambda }
    }

    pub fn banded(mut self, bandwidth: usize) -> Self {
        self.bandwidth = Some(bandwidth);
        self
    }
}

/// Unregularized `(E0, V)` draw; `V` may carry a diagonal.
pub fn random_raw<R: Rng + ?Sized>(spec: &RandomPairSpec, rng: &mut R) -> (Vec<f64>, Mat<f64>) {
    let n = spec.dim;
    let e0: Vec<f64> = (0..n).map(|k| k as f64 + spec.jitter * (2.0 * rng.random::<f64>() - 1.0)).collect();
    let mut v = Mat::<f64>::zeros(n, n);
    let band = spec.bandwidth.unwrap_or(n);
    for j in 0..n {
        let g: f64 = StandardNormal.sample(rng);
        v[(j, j)] = spec.diagonal_sigma * g;
        for i in (j + 1)..n.min(j + band + 1) {
            let g: f64 = StandardNormal.sample(rng);
            v[(i, j)] = g;
            v[(j, i)] = g;
        }
    }
    (e0, v)
}

/// Regularized random pair.
pub fn random_pair<R: Rng + ?Sized>(spec: &RandomPairSpec, rng: &mut R) -> Result<HamiltonianPair> {
    let (e0, v) = random_raw(spec, rng);
    let basis = (0..spec.dim).map(|k| BasisIndex { m: vec![k as u32], k }).collect();
    HamiltonianPair::new(e0, v, spec.lambda, basis)
}
