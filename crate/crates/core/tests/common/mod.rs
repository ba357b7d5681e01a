#![allow(dead_code)]

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Significance level for every uniformity test in the suite.
pub const ALPHA: f64 = 1e-4;

/// Pearson chi-square p-value of `observed` against `expected` probabilities.
pub fn chi_square_p(observed: &[u64], expected: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected.len());
    let total: u64 = observed.iter().sum();
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &p)| {
            let e = p * total as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dist = ChiSquared::new((observed.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

/// Bucket of a centered residue mod `modulus`, splitting `[0, modulus)` into `k` ranges.
pub fn bucket(v: i64, modulus: u64, k: usize) -> usize {
    let u = v.rem_euclid(modulus as i64) as u128;
    (u * k as u128 / modulus as u128) as usize
}

/// Exact probability of each bucket under the uniform distribution on `Z_modulus`.
pub fn bucket_probs(modulus: u64, k: usize) -> Vec<f64> {
    // Bucket i holds u with floor(u k / m) = i, i.e. ceil(i m / k) <= u < ceil((i+1) m / k).
    let edge = |i: u128| (i * modulus as u128).div_ceil(k as u128);
    (0..k as u128).map(|i| (edge(i + 1) - edge(i)) as f64 / modulus as f64).collect()
}

/// p-value for "`values` are uniform mod `modulus`" over `k` buckets.
pub fn uniform_p(values: impl IntoIterator<Item = i64>, modulus: u64, k: usize) -> f64 {
    let mut counts = vec![0u64; k];
    for v in values {
        counts[bucket(v, modulus, k)] += 1;
    }
    chi_square_p(&counts, &bucket_probs(modulus, k))
}

/// p-value for "pairs are jointly uniform" over a `k x k` grid.
pub fn joint_uniform_p(pairs: impl IntoIterator<Item = (i64, i64)>, modulus: u64, k: usize) -> f64 {
    let probs = bucket_probs(modulus, k);
    let mut counts = vec![0u64; k * k];
    for (a, b) in pairs {
        counts[bucket(a, modulus, k) * k + bucket(b, modulus, k)] += 1;
    }
    let expected: Vec<f64> = (0..k * k).map(|i| probs[i / k] * probs[i % k]).collect();
    chi_square_p(&counts, &expected)
}
