//! Samplers for uniform ring elements and the discrete Gaussian error distribution.

use rand::Rng;

use super::{RingElement, RingParams};

/// Truncated discrete Gaussian over `[-B, B]` with `B = floor(tail_bound * sigma)`,
/// sampled by inverting a cumulative table.
#[derive(Clone, Debug)]
pub struct DiscreteGaussian {
    bound: i64,
    cdt: Vec<f64>,
}

impl DiscreteGaussian {
    pub fn new(sigma: f64, tail_bound: u32) -> Self {
        let bound = (tail_bound as f64 * sigma).floor() as i64;
        let weights: Vec<f64> = (-bound..=bound)
            .map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp())
            .collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let mut cdt: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        // Guard against rounding leaving the last entry just below 1.
        *cdt.last_mut().expect("support is never empty") = 1.0;
        Self { bound, cdt }
    }

    pub fn support_bound(&self) -> i64 {
        self.bound
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let u: f64 = rng.gen();
        let idx = self.cdt.partition_point(|&c| c <= u);
        idx.min(self.cdt.len() - 1) as i64 - self.bound
    }
}

/// Element with independent uniform coefficients over the centered range.
pub fn sample_uniform<R: Rng + ?Sized>(params: &RingParams, rng: &mut R) -> RingElement {
    let q = params.q();
    let offset = ((q - 1) / 2) as i64;
    let coeffs = (0..params.n()).map(|_| rng.gen_range(0..q) as i64 - offset).collect();
    RingElement { q, coeffs }
}

/// Element with independent discrete Gaussian coefficients drawn from `chi`.
pub fn sample_gaussian<R: Rng + ?Sized>(params: &RingParams, rng: &mut R) -> RingElement {
    let g = params.gaussian();
    let coeffs = (0..params.n()).map(|_| g.sample(rng)).collect();
    RingElement { q: params.q(), coeffs }
}
