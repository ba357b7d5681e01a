//! Additive-only homomorphic encryption over `R_q`.
//!
//! Key generation publishes `pk = ([-a*s + t*e]_q, a)` with `s, e` drawn from the
//! error distribution. Encryption of `m` returns
//! `([p0*u + t*e0 + m]_q, [p1*u + t*e1]_q)`, and decryption reads the constant
//! coefficient of `[[c0 + c1*s]_q]_t`. Since `[c0 + c1*s]_q = m + t*(e*u + e0 + e1*s)`
//! as long as that value stays below `q/2`, ciphertexts can be added and scaled by
//! plaintext integers, but never multiplied with each other.
//!
//! Messages are scalars in centered `Z_t`, placed in the constant coefficient of
//! the message polynomial.

use rand::Rng;

use crate::error::{Error, Result};
use crate::ring::{center, sample_gaussian, sample_uniform, RingElement, RingParams};
use crate::ring::{DEFAULT_SIGMA, DEFAULT_TAIL_BOUND};

/// Ring degree used by the reference experiment.
pub const DEFAULT_N: usize = 16;
/// 48-bit ciphertext modulus used by the reference experiment.
pub const DEFAULT_Q: u64 = 140_737_488_356_903;
/// 16-bit plaintext modulus used by the reference experiment.
pub const DEFAULT_T: u64 = 32_843;

const CT_MAGIC: &[u8; 4] = b"AHE1";
const PK_MAGIC: &[u8; 4] = b"APK1";
const SK_MAGIC: &[u8; 4] = b"ASK1";
const HEADER_LEN: usize = 4 + 4 + 8 + 8;

/// A plaintext: an integer in the centered range of `Z_t`.
pub type Plaintext = i64;

/// Ring parameters plus the plaintext modulus `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct AheParams {
    ring: RingParams,
    t: u64,
}

impl AheParams {
    pub fn new(ring: RingParams, t: u64) -> Result<Self> {
        let q = ring.q();
        if t < 2 {
            return Err(Error::Params(format!("plaintext modulus t = {t} must be at least 2")));
        }
        if t >= q {
            return Err(Error::Params(format!("plaintext modulus t = {t} must be below q = {q}")));
        }
        if gcd(t, q) != 1 {
            return Err(Error::Params(format!("t = {t} and q = {q} must be coprime")));
        }
        if q <= 2 * t {
            return Err(Error::Params(format!("q = {q} must exceed 2t = {}", 2 * t)));
        }
        let params = Self { ring, t };
        let bound = params.fresh_noise_bound();
        if bound >= (q / 2) as u128 {
            return Err(Error::Params(format!(
                "fresh noise bound B_fresh = {bound} is not below q/2 = {}",
                q / 2
            )));
        }
        Ok(params)
    }

    /// `n = 16`, `q = 140737488356903`, `t = 32843` with the default error distribution.
    pub fn standard() -> Self {
        let ring = RingParams::new(DEFAULT_N, DEFAULT_Q, DEFAULT_SIGMA, DEFAULT_TAIL_BOUND)
            .expect("reference ring parameters are valid");
        Self::new(ring, DEFAULT_T).expect("reference parameters are valid")
    }

    pub fn ring(&self) -> &RingParams {
        &self.ring
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn q(&self) -> u64 {
        self.ring.q()
    }

    pub fn n(&self) -> usize {
        self.ring.n()
    }

    /// Largest plaintext magnitude, `(t - 1) / 2` for odd `t`.
    pub fn plain_half(&self) -> i64 {
        ((self.t - 1) / 2) as i64
    }

    /// Worst-case `||m + t*(e*u + e0 + e1*s)||` for a fresh ciphertext:
    /// `t*(2*n*B^2 + B) + t/2` with `B` the Gaussian cutoff.
    pub fn fresh_noise_bound(&self) -> u128 {
        let b = self.ring.error_bound() as u128;
        let n = self.n() as u128;
        let t = self.t as u128;
        t * (2 * n * b * b + b) + t / 2
    }

    /// Worst-case magnitude of `[c0 + c1*s]_q` for `sum_i k_i * Enc(m_i) + Enc(r)` with `l`
    /// terms and every `|k_i|, |m_i|, |r|` at most `(t-1)/2`.
    pub fn worst_case_noise_bound(&self, l: usize) -> u128 {
        let b = self.ring.error_bound() as u128;
        let n = self.n() as u128;
        let t = self.t as u128;
        let h = self.plain_half() as u128;
        let per_ct = t * (2 * n * b * b + b);
        let l = l as u128;
        l * h * h + h + (l * h + 1) * per_ct
    }

    /// High-probability magnitude of `[c0 + c1*s]_q` for the same aggregate as
    /// [`worst_case_noise_bound`](Self::worst_case_noise_bound): the message part is
    /// bounded exactly, the error part by `tail_bound` standard deviations of its
    /// coefficient distribution (variance `t^2 * (l*h^2 + 1) * (2*n*sigma^4 + sigma^2)`).
    pub fn likely_noise_bound(&self, l: usize) -> f64 {
        let sigma = self.ring.sigma();
        let n = self.n() as f64;
        let t = self.t as f64;
        let h = self.plain_half() as f64;
        let l = l as f64;
        let per_ct_var = 2.0 * n * sigma.powi(4) + sigma * sigma;
        let std = t * ((l * h * h + 1.0) * per_ct_var).sqrt();
        l * h * h + h + self.ring.tail_bound() as f64 * std
    }

    /// Longest inner product one shared-scalar-product run supports before the
    /// likely noise bound reaches `q/2`.
    pub fn max_inner_product_len(&self) -> usize {
        let limit = (self.q() / 2) as f64;
        if self.likely_noise_bound(1) >= limit {
            return 0;
        }
        let (mut lo, mut hi) = (1usize, 2usize);
        while hi < (1 << 24) && self.likely_noise_bound(hi) < limit {
            lo = hi;
            hi *= 2;
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.likely_noise_bound(mid) < limit {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// `[v]_t`.
    pub fn reduce_plain(&self, v: i128) -> Plaintext {
        center(v, self.t)
    }

    pub fn check_plain(&self, v: i64) -> Result<Plaintext> {
        let h = self.plain_half();
        if v < -h || v > h {
            return Err(Error::OutOfRange { value: v, modulus: self.t });
        }
        Ok(v)
    }

    /// Uniform element of centered `Z_t`.
    pub fn sample_plain<R: Rng + ?Sized>(&self, rng: &mut R) -> Plaintext {
        rng.gen_range(0..self.t) as i64 - self.plain_half()
    }

    fn write_header(&self, magic: &[u8; 4], out: &mut Vec<u8>) {
        out.extend_from_slice(magic);
        out.extend_from_slice(&(self.n() as u32).to_le_bytes());
        out.extend_from_slice(&self.q().to_le_bytes());
        out.extend_from_slice(&self.t.to_le_bytes());
    }

    fn check_header<'a>(&self, magic: &[u8; 4], bytes: &'a [u8]) -> Result<&'a [u8]> {
        let (n, q, t, rest) = read_header(magic, bytes)?;
        if n != self.n() || q != self.q() || t != self.t {
            return Err(Error::Mismatch(format!(
                "encoded (n={n}, q={q}, t={t}) does not match (n={}, q={}, t={})",
                self.n(),
                self.q(),
                self.t
            )));
        }
        Ok(rest)
    }
}

fn read_header<'a>(magic: &[u8; 4], bytes: &'a [u8]) -> Result<(usize, u64, u64, &'a [u8])> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Decode("truncated header".into()));
    }
    if &bytes[..4] != magic {
        return Err(Error::Decode(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&bytes[..4]),
            String::from_utf8_lossy(magic)
        )));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let q = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let t = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    if n == 0 || n > 1 << 20 || q <= 2 || q > i64::MAX as u64 || t < 2 {
        return Err(Error::Decode(format!("implausible header n={n} q={q} t={t}")));
    }
    Ok((n, q, t, &bytes[HEADER_LEN..]))
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `(p0, p1) = ([-a*s + t*e]_q, a)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PublicKey {
    params: AheParams,
    p0: RingElement,
    p1: RingElement,
}

/// The secret polynomial `s`, drawn from the error distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct SecretKey {
    params: AheParams,
    s: RingElement,
}

impl PublicKey {
    pub fn params(&self) -> &AheParams {
        &self.params
    }

    pub fn p0(&self) -> &RingElement {
        &self.p0
    }

    pub fn p1(&self) -> &RingElement {
        &self.p1
    }

    /// `"APK1"`, `u32 n`, `u64 q`, `u64 t`, then `p0` and `p1` coefficients.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 16 * self.params.n());
        self.params.write_header(PK_MAGIC, &mut out);
        self.p0.write_coeffs(&mut out);
        self.p1.write_coeffs(&mut out);
        out
    }

    pub fn from_bytes(params: &AheParams, bytes: &[u8]) -> Result<Self> {
        let rest = params.check_header(PK_MAGIC, bytes)?;
        let (p0, rest) = RingElement::read_coeffs(params.n(), params.q(), rest)?;
        let (p1, rest) = RingElement::read_coeffs(params.n(), params.q(), rest)?;
        if !rest.is_empty() {
            return Err(Error::Decode(format!("{} trailing bytes after public key", rest.len())));
        }
        Ok(Self { params: params.clone(), p0, p1 })
    }
}

impl SecretKey {
    pub fn params(&self) -> &AheParams {
        &self.params
    }

    pub fn s(&self) -> &RingElement {
        &self.s
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.params.n());
        self.params.write_header(SK_MAGIC, &mut out);
        self.s.write_coeffs(&mut out);
        out
    }

    pub fn from_bytes(params: &AheParams, bytes: &[u8]) -> Result<Self> {
        let rest = params.check_header(SK_MAGIC, bytes)?;
        let (s, rest) = RingElement::read_coeffs(params.n(), params.q(), rest)?;
        if !rest.is_empty() {
            return Err(Error::Decode(format!("{} trailing bytes after secret key", rest.len())));
        }
        Ok(Self { params: params.clone(), s })
    }
}

/// A ciphertext `(c0, c1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ciphertext {
    c0: RingElement,
    c1: RingElement,
    t: u64,
    level: u32,
}

impl Ciphertext {
    /// Assembles a ciphertext from raw components; used by white-box tests.
    pub fn from_parts(params: &AheParams, c0: RingElement, c1: RingElement) -> Result<Self> {
        let ct = Self { c0, c1, t: params.t(), level: 0 };
        ct.check_params(params)?;
        Ok(ct)
    }

    pub fn c0(&self) -> &RingElement {
        &self.c0
    }

    pub fn c1(&self) -> &RingElement {
        &self.c1
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    /// Number of homomorphic operations applied since encryption. Advisory only.
    pub fn level(&self) -> u32 {
        self.level
    }

    /// Confirms the ciphertext lives in the ring and plaintext space of `params`.
    pub fn check_params(&self, params: &AheParams) -> Result<()> {
        let ok = self.t == params.t()
            && self.c0.modulus() == params.q()
            && self.c1.modulus() == params.q()
            && self.c0.n() == params.n()
            && self.c1.n() == params.n();
        if ok {
            Ok(())
        } else {
            Err(Error::Mismatch(format!(
                "ciphertext over (n={}, q={}, t={}) used with (n={}, q={}, t={})",
                self.c0.n(),
                self.c0.modulus(),
                self.t,
                params.n(),
                params.q(),
                params.t()
            )))
        }
    }

    /// `"AHE1"`, `u32 n`, `u64 q`, `u64 t` (little-endian), then `c0` and `c1` coefficients.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.write_to(&mut out);
        out
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + 16 * self.c0.n()
    }

    pub fn write_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(CT_MAGIC);
        out.extend_from_slice(&(self.c0.n() as u32).to_le_bytes());
        out.extend_from_slice(&self.c0.modulus().to_le_bytes());
        out.extend_from_slice(&self.t.to_le_bytes());
        self.c0.write_coeffs(out);
        self.c1.write_coeffs(out);
    }

    /// Decodes one ciphertext from the front of `bytes`, returning the remainder.
    /// The header alone determines the ring; callers check it with [`check_params`](Self::check_params).
    pub fn read_from(bytes: &[u8]) -> Result<(Self, &[u8])> {
        let (n, q, t, rest) = read_header(CT_MAGIC, bytes)?;
        let (c0, rest) = RingElement::read_coeffs(n, q, rest)?;
        let (c1, rest) = RingElement::read_coeffs(n, q, rest)?;
        Ok((Self { c0, c1, t, level: 0 }, rest))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (ct, rest) = Self::read_from(bytes)?;
        if !rest.is_empty() {
            return Err(Error::Decode(format!("{} trailing bytes after ciphertext", rest.len())));
        }
        Ok(ct)
    }
}

pub fn keygen<R: Rng + ?Sized>(params: &AheParams, rng: &mut R) -> (PublicKey, SecretKey) {
    let ring = params.ring();
    let a = sample_uniform(ring, rng);
    let s = sample_gaussian(ring, rng);
    let e = sample_gaussian(ring, rng);
    let t = params.t() as i64;
    let p0 = a.mul_unchecked(&s).neg().add_unchecked(&e.scalar_mul(t));
    let pk = PublicKey { params: params.clone(), p0, p1: a };
    let sk = SecretKey { params: params.clone(), s };
    (pk, sk)
}

pub fn encrypt<R: Rng + ?Sized>(pk: &PublicKey, m: Plaintext, rng: &mut R) -> Result<Ciphertext> {
    let params = &pk.params;
    params.check_plain(m)?;
    let ring = params.ring();
    let t = params.t() as i64;
    let u = sample_gaussian(ring, rng);
    let e0 = sample_gaussian(ring, rng);
    let e1 = sample_gaussian(ring, rng);
    let mut c0 = pk.p0.mul_unchecked(&u).add_unchecked(&e0.scalar_mul(t));
    c0 = c0.add_unchecked(&RingElement::constant(ring, m));
    let c1 = pk.p1.mul_unchecked(&u).add_unchecked(&e1.scalar_mul(t));
    Ok(Ciphertext { c0, c1, t: params.t(), level: 0 })
}

/// Result of a decryption together with an encoding check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decryption {
    pub value: Plaintext,
    /// Set when some non-constant coefficient of `[[c0 + c1*s]_q]_t` is nonzero,
    /// which a scalar-encoded ciphertext within budget never produces.
    pub stray_coefficients: bool,
}

fn phase(sk: &SecretKey, ct: &Ciphertext) -> Result<RingElement> {
    ct.check_params(&sk.params)?;
    Ok(ct.c0.add_unchecked(&ct.c1.mul_unchecked(&sk.s)))
}

pub fn decrypt(sk: &SecretKey, ct: &Ciphertext) -> Result<Plaintext> {
    let w = phase(sk, ct)?;
    Ok(sk.params.reduce_plain(w.coeffs()[0] as i128))
}

pub fn decrypt_with_diagnostics(sk: &SecretKey, ct: &Ciphertext) -> Result<Decryption> {
    let w = phase(sk, ct)?;
    let value = sk.params.reduce_plain(w.coeffs()[0] as i128);
    let stray_coefficients = w.coeffs()[1..].iter().any(|&c| sk.params.reduce_plain(c as i128) != 0);
    Ok(Decryption { value, stray_coefficients })
}

/// Component-wise sum; decrypts to `[m1 + m2]_t` while the noise budget lasts.
pub fn add_ct(a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
    if a.t != b.t {
        return Err(Error::Mismatch(format!("plaintext moduli {} and {}", a.t, b.t)));
    }
    Ok(Ciphertext {
        c0: a.c0.add(&b.c0)?,
        c1: a.c1.add(&b.c1)?,
        t: a.t,
        level: a.level.max(b.level) + 1,
    })
}

/// Scales both components by the plaintext integer `k`, `|k| <= (t-1)/2`.
pub fn scalar_mul_plain(k: i64, ct: &Ciphertext) -> Result<Ciphertext> {
    let h = ((ct.t - 1) / 2) as i64;
    if k < -h || k > h {
        return Err(Error::OutOfRange { value: k, modulus: ct.t });
    }
    Ok(Ciphertext {
        c0: ct.c0.scalar_mul(k),
        c1: ct.c1.scalar_mul(k),
        t: ct.t,
        level: ct.level + 1,
    })
}

/// Exact error vector `[c0 + c1*s]_q - m`, where `m` is `claimed` or, if absent,
/// the decrypted value. Coefficients are not re-centered after the subtraction.
pub fn noise(sk: &SecretKey, ct: &Ciphertext, claimed: Option<Plaintext>) -> Result<Vec<i128>> {
    let w = phase(sk, ct)?;
    let m = match claimed {
        Some(m) => m,
        None => sk.params.reduce_plain(w.coeffs()[0] as i128),
    };
    let mut v: Vec<i128> = w.coeffs().iter().map(|&c| c as i128).collect();
    v[0] -= m as i128;
    Ok(v)
}

/// `floor(log2(q/2)) - ceil(log2(max(1, ||v||)))` for the exact error vector `v`.
/// A positive budget guarantees correct decryption; negative means unreliable.
pub fn noise_budget(sk: &SecretKey, ct: &Ciphertext, claimed: Option<Plaintext>) -> Result<i64> {
    let v = noise(sk, ct, claimed)?;
    let norm = v.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0).max(1);
    let half = (sk.params.q() / 2) as u128;
    let floor_half = 127 - half.leading_zeros() as i64;
    let ceil_norm = if norm.is_power_of_two() {
        127 - norm.leading_zeros() as i64
    } else {
        128 - norm.leading_zeros() as i64
    };
    Ok(floor_half - ceil_norm)
}
