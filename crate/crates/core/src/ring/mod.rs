//! Arithmetic in `R_q = Z_q[x]/(x^n + 1)` with centered coefficients.
//!
//! Every coefficient is stored as its centered representative in `(-q/2, q/2]`.
//! Elements carry their modulus so that mixing elements from different rings is
//! reported as an error instead of silently producing garbage.

mod sampler;

pub use sampler::{sample_gaussian, sample_uniform, DiscreteGaussian};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default standard deviation of the error distribution.
pub const DEFAULT_SIGMA: f64 = 3.2;
/// Default Gaussian cutoff, in multiples of sigma.
pub const DEFAULT_TAIL_BOUND: u32 = 6;

/// Maps `a` to the unique integer in `(-q/2, q/2]` congruent to it mod `q`.
pub fn reduce_centered(a: i128, q: u64) -> Result<i64> {
    if q <= 2 || q.is_multiple_of(2) {
        return Err(Error::Params(format!("modulus {q} must be odd and greater than 2")));
    }
    if q > i64::MAX as u64 {
        return Err(Error::Params(format!("modulus {q} exceeds 63 bits")));
    }
    Ok(center(a, q))
}

/// Unchecked centered reduction; `q` must be odd and below 2^63.
#[inline]
pub(crate) fn center(a: i128, q: u64) -> i64 {
    let q = q as i128;
    let mut r = a % q;
    if r < 0 {
        r += q;
    }
    if r > q / 2 {
        r -= q;
    }
    r as i64
}

/// Centered reduction of a sum of two already-centered values.
#[inline]
fn center_small(a: i64, q: u64) -> i64 {
    let half = (q / 2) as i64;
    let q = q as i64;
    if a > half {
        a - q
    } else if a < -half {
        a + q
    } else {
        a
    }
}

/// Ring dimension, ciphertext modulus and error distribution.
#[derive(Clone, Debug)]
pub struct RingParams {
    n: usize,
    q: u64,
    sigma: f64,
    tail_bound: u32,
    gaussian: Arc<DiscreteGaussian>,
}

impl PartialEq for RingParams {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.q == other.q
            && self.sigma == other.sigma
            && self.tail_bound == other.tail_bound
    }
}

impl RingParams {
    pub fn new(n: usize, q: u64, sigma: f64, tail_bound: u32) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Params(format!("ring degree n = {n} must be a power of two >= 2")));
        }
        if q <= 2 || q.is_multiple_of(2) {
            return Err(Error::Params(format!("ciphertext modulus q = {q} must be odd and > 2")));
        }
        if q > i64::MAX as u64 {
            return Err(Error::Params(format!("ciphertext modulus q = {q} exceeds 63 bits")));
        }
        if !is_prime(q) {
            return Err(Error::Params(format!("ciphertext modulus q = {q} is not prime")));
        }
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::Params(format!("sigma = {sigma} must be positive")));
        }
        if tail_bound < 1 {
            return Err(Error::Params("tail_bound must be at least 1".into()));
        }
        let gaussian = Arc::new(DiscreteGaussian::new(sigma, tail_bound));
        Ok(Self { n, q, sigma, tail_bound, gaussian })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn tail_bound(&self) -> u32 {
        self.tail_bound
    }

    /// Largest magnitude the Gaussian sampler can emit, `floor(tail_bound * sigma)`.
    pub fn error_bound(&self) -> u64 {
        self.gaussian.support_bound() as u64
    }

    pub(crate) fn gaussian(&self) -> &DiscreteGaussian {
        &self.gaussian
    }
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in SMALL {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mul = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let pow = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul(acc, b);
            }
            b = mul(b, b);
            e >>= 1;
        }
        acc
    };
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in SMALL {
        let mut x = pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A polynomial of degree `< n` with centered coefficients mod `q`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RingElement {
    q: u64,
    coeffs: Vec<i64>,
}

impl RingElement {
    pub fn zero(params: &RingParams) -> Self {
        Self { q: params.q, coeffs: vec![0; params.n] }
    }

    /// The constant polynomial `c`, reduced mod `q`.
    pub fn constant(params: &RingParams, c: i64) -> Self {
        let mut e = Self::zero(params);
        e.coeffs[0] = center(c as i128, params.q);
        e
    }

    /// Builds an element from coefficients that must already be centered.
    pub fn from_coeffs(params: &RingParams, coeffs: Vec<i64>) -> Result<Self> {
        Self::from_raw(params.n, params.q, coeffs)
    }

    /// Builds an element from arbitrary integers, reducing each one.
    pub fn from_integers(params: &RingParams, coeffs: &[i128]) -> Result<Self> {
        if coeffs.len() != params.n {
            return Err(Error::Mismatch(format!(
                "expected {} coefficients, got {}",
                params.n,
                coeffs.len()
            )));
        }
        Ok(Self { q: params.q, coeffs: coeffs.iter().map(|&c| center(c, params.q)).collect() })
    }

    pub(crate) fn from_raw(n: usize, q: u64, coeffs: Vec<i64>) -> Result<Self> {
        if coeffs.len() != n {
            return Err(Error::Mismatch(format!("expected {n} coefficients, got {}", coeffs.len())));
        }
        let half = (q / 2) as i64;
        if let Some(&bad) = coeffs.iter().find(|&&c| c > half || c < -half) {
            return Err(Error::OutOfRange { value: bad, modulus: q });
        }
        Ok(Self { q, coeffs })
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.q != other.q || self.coeffs.len() != other.coeffs.len() {
            return Err(Error::Mismatch(format!(
                "ring elements over (n={}, q={}) and (n={}, q={})",
                self.n(),
                self.q,
                other.n(),
                other.q
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.add_unchecked(other))
    }

    pub(crate) fn add_unchecked(&self, other: &Self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| center_small(a + b, self.q))
            .collect();
        Self { q: self.q, coeffs }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| center_small(a - b, self.q))
            .collect();
        Ok(Self { q: self.q, coeffs })
    }

    pub fn neg(&self) -> Self {
        // -c stays in range except for the +q/2 endpoint, which cannot occur for odd q.
        Self { q: self.q, coeffs: self.coeffs.iter().map(|&c| -c).collect() }
    }

    /// Negacyclic product: `a * b mod (x^n + 1, q)`.
    pub fn negacyclic_mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        let n = self.n();
        let q = self.q;
        let half = (q / 2) as u128;
        let mut acc = vec![0i128; n];
        // Lazy reduction whenever n products of two centered values fit below 2^126.
        if half * half * (n as u128) < (1u128 << 126) {
            for (i, &a) in self.coeffs.iter().enumerate() {
                if a == 0 {
                    continue;
                }
                let a = a as i128;
                for (j, &b) in other.coeffs.iter().enumerate() {
                    let p = a * b as i128;
                    let k = i + j;
                    if k < n {
                        acc[k] += p;
                    } else {
                        acc[k - n] -= p;
                    }
                }
            }
        } else {
            for (i, &a) in self.coeffs.iter().enumerate() {
                for (j, &b) in other.coeffs.iter().enumerate() {
                    let p = center(a as i128 * b as i128, q) as i128;
                    let k = i + j;
                    if k < n {
                        acc[k] += p;
                    } else {
                        acc[k - n] -= p;
                    }
                }
            }
        }
        Self { q, coeffs: acc.into_iter().map(|c| center(c, q)).collect() }
    }

    /// Multiplies every coefficient by the integer `k`.
    pub fn scalar_mul(&self, k: i64) -> Self {
        let q = self.q;
        Self { q, coeffs: self.coeffs.iter().map(|&c| center(c as i128 * k as i128, q)).collect() }
    }

    /// `max_i |a_i|`.
    pub fn inf_norm(&self) -> u64 {
        self.coeffs.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }

    /// Appends the coefficients as little-endian `i64` values.
    pub fn write_coeffs(&self, out: &mut Vec<u8>) {
        for c in &self.coeffs {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }

    /// Reads `n` little-endian `i64` coefficients from the front of `bytes`.
    pub fn read_coeffs(n: usize, q: u64, bytes: &[u8]) -> Result<(Self, &[u8])> {
        let need = n * 8;
        if bytes.len() < need {
            return Err(Error::Decode(format!(
                "ring element needs {need} bytes, {} available",
                bytes.len()
            )));
        }
        let (head, rest) = bytes.split_at(need);
        let coeffs = head
            .chunks_exact(8)
            .map(|c| i64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok((Self::from_raw(n, q, coeffs)?, rest))
    }

    /// Debug text form: a JSON array of the centered coefficients.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.coeffs).expect("integer arrays always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    const DEFAULT_Q: u64 = 140737488356903;

    fn small() -> RingParams {
        RingParams::new(4, 17, 3.2, 6).unwrap()
    }

    fn standard() -> RingParams {
        RingParams::new(16, DEFAULT_Q, DEFAULT_SIGMA, DEFAULT_TAIL_BOUND).unwrap()
    }

    #[test]
    fn reduce_centered_examples() {
        assert_eq!(reduce_centered(8, 5).unwrap(), -2);
        assert_eq!(reduce_centered(2, 5).unwrap(), 2);
        assert_eq!(reduce_centered(DEFAULT_Q as i128, DEFAULT_Q).unwrap(), 0);
        assert_eq!(reduce_centered(-3, 5).unwrap(), 2);
    }

    #[test]
    fn reduce_centered_rejects_bad_modulus() {
        assert!(matches!(reduce_centered(1, 2), Err(Error::Params(_))));
        assert!(matches!(reduce_centered(1, 8), Err(Error::Params(_))));
        assert!(matches!(reduce_centered(1, 1), Err(Error::Params(_))));
    }

    #[test]
    fn params_validation() {
        assert!(RingParams::new(12, 17, 3.2, 6).is_err());
        assert!(RingParams::new(1, 17, 3.2, 6).is_err());
        assert!(RingParams::new(4, 16, 3.2, 6).is_err());
        assert!(RingParams::new(4, 21, 3.2, 6).is_err());
        assert!(RingParams::new(4, 17, 0.0, 6).is_err());
        assert!(RingParams::new(4, 17, 3.2, 0).is_err());
        assert!(is_prime(DEFAULT_Q));
        assert!(is_prime(32843));
        assert!(!is_prime(32843 * 3));
    }

    #[test]
    fn add_examples() {
        let p = RingParams::new(4, 17, 3.2, 6).unwrap();
        let a = RingElement::from_coeffs(&p, vec![8, 0, 0, 0]).unwrap();
        assert_eq!(a.add(&a).unwrap().coeffs(), &[-1, 0, 0, 0]);
        let b = RingElement::from_coeffs(&p, vec![3, -8, 5, 1]).unwrap();
        assert_eq!(RingElement::zero(&p).add(&b).unwrap(), b);
        assert_eq!(b.add(&b.neg()).unwrap(), RingElement::zero(&p));
    }

    #[test]
    fn mismatched_params_rejected() {
        let a = RingElement::zero(&small());
        let b = RingElement::zero(&standard());
        assert!(matches!(a.add(&b), Err(Error::Mismatch(_))));
        assert!(matches!(a.negacyclic_mul(&b), Err(Error::Mismatch(_))));
        assert!(matches!(a.sub(&b), Err(Error::Mismatch(_))));
    }

    #[test]
    fn out_of_range_coefficients_rejected() {
        let p = small();
        assert!(matches!(
            RingElement::from_coeffs(&p, vec![9, 0, 0, 0]),
            Err(Error::OutOfRange { value: 9, modulus: 17 })
        ));
        assert!(RingElement::from_coeffs(&p, vec![0, 0, 0]).is_err());
    }

    #[test]
    fn negacyclic_examples() {
        let p = small();
        let x = RingElement::from_coeffs(&p, vec![0, 1, 0, 0]).unwrap();
        let x3 = RingElement::from_coeffs(&p, vec![0, 0, 0, 1]).unwrap();
        assert_eq!(x.negacyclic_mul(&x3).unwrap().coeffs(), &[-1, 0, 0, 0]);
        let one_plus_x = RingElement::from_coeffs(&p, vec![1, 1, 0, 0]).unwrap();
        assert_eq!(one_plus_x.negacyclic_mul(&one_plus_x).unwrap().coeffs(), &[1, 2, 1, 0]);
    }

    #[test]
    fn scalar_mul_examples() {
        let p = standard();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let a = sample_uniform(&p, &mut rng);
        assert_eq!(a.scalar_mul(1), a);
        assert_eq!(a.scalar_mul(0), RingElement::zero(&p));
        let mut acc = a.clone();
        for k in 2..=50 {
            acc = acc.add(&a).unwrap();
            assert_eq!(a.scalar_mul(k), acc, "k = {k}");
        }
    }

    #[test]
    fn inf_norm_examples() {
        let p = RingParams::new(4, 17, 3.2, 6).unwrap();
        assert_eq!(RingElement::zero(&p).inf_norm(), 0);
        let a = RingElement::from_coeffs(&p, vec![-3, 2, 0, 1]).unwrap();
        assert_eq!(a.inf_norm(), 3);
        assert_eq!(a.scalar_mul(-1).inf_norm(), 3);
    }

    #[test]
    fn coefficient_bytes_round_trip() {
        let p = standard();
        let a = sample_uniform(&p, &mut ChaCha20Rng::seed_from_u64(9));
        let mut buf = Vec::new();
        a.write_coeffs(&mut buf);
        buf.push(0xAA);
        let (b, rest) = RingElement::read_coeffs(16, DEFAULT_Q, &buf).unwrap();
        assert_eq!(a, b);
        assert_eq!(rest, &[0xAA]);
        assert!(RingElement::read_coeffs(16, DEFAULT_Q, &buf[..100]).is_err());
        assert!(a.to_json().starts_with('['));
    }

    fn arb_elem(p: RingParams) -> impl Strategy<Value = RingElement> {
        let half = (p.q() / 2) as i64;
        proptest::collection::vec(-half..=half, p.n())
            .prop_map(move |c| RingElement::from_coeffs(&p, c).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(512))]

        #[test]
        fn ring_axioms_standard(a in arb_elem(standard()), b in arb_elem(standard()), c in arb_elem(standard())) {
            prop_assert_eq!(a.add(&b)?, b.add(&a)?);
            prop_assert_eq!(a.add(&b)?.add(&c)?, a.add(&b.add(&c)?)?);
            prop_assert_eq!(a.negacyclic_mul(&b)?, b.negacyclic_mul(&a)?);
            prop_assert_eq!(a.negacyclic_mul(&b)?.negacyclic_mul(&c)?, a.negacyclic_mul(&b.negacyclic_mul(&c)?)?);
            prop_assert_eq!(a.negacyclic_mul(&b.add(&c)?)?, a.negacyclic_mul(&b)?.add(&a.negacyclic_mul(&c)?)?);
            prop_assert_eq!(a.sub(&b)?.add(&b)?, a.clone());
        }

        #[test]
        fn ring_axioms_small(a in arb_elem(small()), b in arb_elem(small()), c in arb_elem(small())) {
            prop_assert_eq!(a.negacyclic_mul(&b)?, b.negacyclic_mul(&a)?);
            prop_assert_eq!(a.negacyclic_mul(&b.add(&c)?)?, a.negacyclic_mul(&b)?.add(&a.negacyclic_mul(&c)?)?);
        }

        #[test]
        fn reduce_centered_is_homomorphic(x in -(1i128 << 100)..(1i128 << 100), y in -(1i128 << 100)..(1i128 << 100)) {
            let q = DEFAULT_Q;
            let r = reduce_centered(x, q)?;
            prop_assert!((r as i128 - x) % q as i128 == 0);
            prop_assert!(r.unsigned_abs() <= q / 2);
            prop_assert_eq!(reduce_centered(r as i128, q)?, r);
            let rx = reduce_centered(x, q)? as i128;
            let ry = reduce_centered(y, q)? as i128;
            prop_assert_eq!(reduce_centered(x + y, q)?, reduce_centered(rx + ry, q)?);
            prop_assert_eq!(reduce_centered((x % (1 << 60)) * (y % (1 << 60)), q)?,
                reduce_centered(reduce_centered(x % (1 << 60), q)? as i128 * reduce_centered(y % (1 << 60), q)? as i128, q)?);
        }

        #[test]
        fn expansion_factor_bound(a in proptest::collection::vec(-1000i64..=1000, 16), b in proptest::collection::vec(-1000i64..=1000, 16)) {
            // Small inputs never wrap mod q, so the product norm obeys delta_R = n.
            let p = standard();
            let a = RingElement::from_coeffs(&p, a)?;
            let b = RingElement::from_coeffs(&p, b)?;
            let prod = a.negacyclic_mul(&b)?;
            prop_assert!(prod.inf_norm() <= 16 * a.inf_norm() * b.inf_norm());
        }
    }

    #[test]
    fn wide_modulus_takes_reducing_path() {
        // q close to 2^62 forces per-product reduction.
        let q = (1u64 << 62) - 57;
        assert!(is_prime(q));
        let p = RingParams::new(8, q, 3.2, 6).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let a = sample_uniform(&p, &mut rng);
        let b = sample_uniform(&p, &mut rng);
        let c = sample_uniform(&p, &mut rng);
        assert_eq!(a.negacyclic_mul(&b).unwrap(), b.negacyclic_mul(&a).unwrap());
        assert_eq!(
            a.negacyclic_mul(&b.add(&c).unwrap()).unwrap(),
            a.negacyclic_mul(&b).unwrap().add(&a.negacyclic_mul(&c).unwrap()).unwrap()
        );
    }
}
