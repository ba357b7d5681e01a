//! Two-party shared scalar product and Beaver triple generation.
//!
//! Alice owns the key pair. In one run:
//!
//! 1. Alice encrypts her inputs `x_A` and sends `c_A` to Bob.
//! 2. Bob picks a mask `r_B`, computes `c_B = sum_i x_{B,i} * c_{A,i} + Enc(r_B)` and
//!    outputs `s_B = -r_B`.
//! 3. Alice decrypts `c_B` to `s_A = <x_A, x_B> + r_B`.
//!
//! With `l = 1` and random inputs the outputs form a Beaver triple
//! `(a, b, c) = (x_A, x_B, x_A * x_B)` held as Alice `(x_A, 0, s_A)` and Bob `(0, x_B, s_B)`.
//! [`ideal_ssp`] and [`ideal_btg`] are the trusted-party versions used as oracles.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ahe::{add_ct, decrypt, encrypt, keygen, scalar_mul_plain, AheParams, Ciphertext, PublicKey, SecretKey};
use crate::error::{Error, Result};
use crate::seed::MasterSeed;
use crate::transport::{Bus, Payload};

pub type TripleId = u64;

/// The two roles of the shared scalar product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn tag(self) -> u8 {
        match self {
            Party::Alice => 0,
            Party::Bob => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Party::Alice),
            1 => Ok(Party::Bob),
            _ => Err(Error::Decode(format!("unknown party tag {tag}"))),
        }
    }

    /// Bus endpoint name.
    pub fn endpoint(self) -> &'static str {
        match self {
            Party::Alice => "alice",
            Party::Bob => "bob",
        }
    }
}

/// One party's additive shares of a Beaver triple over centered `Z_t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleShare {
    pub triple_id: TripleId,
    pub party: Party,
    pub a_share: i64,
    pub b_share: i64,
    pub c_share: i64,
    pub t: u64,
}

/// Sums shares component-wise mod `t`.
pub fn reconstruct_triple(params: &AheParams, shares: &[TripleShare]) -> (i64, i64, i64) {
    let sum = |f: fn(&TripleShare) -> i64| params.reduce_plain(shares.iter().map(|s| f(s) as i128).sum());
    (sum(|s| s.a_share), sum(|s| s.b_share), sum(|s| s.c_share))
}

/// Whether `a * b == c (mod t)` after reconstruction.
pub fn triple_is_valid(params: &AheParams, shares: &[TripleShare]) -> bool {
    let (a, b, c) = reconstruct_triple(params, shares);
    params.reduce_plain(a as i128 * b as i128) == c
}

/// Equal-length input vectors of centered `Z_t` elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SspInputs {
    inp_a: Vec<i64>,
    inp_b: Vec<i64>,
}

impl SspInputs {
    /// Out-of-range inputs are rejected; they are never silently replaced.
    pub fn new(params: &AheParams, inp_a: Vec<i64>, inp_b: Vec<i64>) -> Result<Self> {
        if inp_a.is_empty() || inp_a.len() != inp_b.len() {
            return Err(Error::Params(format!(
                "input vectors must be non-empty and of equal length ({} vs {})",
                inp_a.len(),
                inp_b.len()
            )));
        }
        for &v in inp_a.iter().chain(&inp_b) {
            params.check_plain(v)?;
        }
        Ok(Self { inp_a, inp_b })
    }

    pub fn inp_a(&self) -> &[i64] {
        &self.inp_a
    }

    pub fn inp_b(&self) -> &[i64] {
        &self.inp_b
    }

    pub fn len(&self) -> usize {
        self.inp_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inp_a.is_empty()
    }

    /// `[sum_i x_i * y_i]_t`.
    pub fn inner_product(&self, params: &AheParams) -> i64 {
        params.reduce_plain(
            self.inp_a.iter().zip(&self.inp_b).map(|(&x, &y)| x as i128 * y as i128).sum(),
        )
    }
}

/// Trusted-party shared scalar product: `s_A` uniform, `s_B = [<x, y> - s_A]_t`.
pub fn ideal_ssp<R: Rng + ?Sized>(params: &AheParams, inputs: &SspInputs, rng: &mut R) -> (i64, i64) {
    let s_a = params.sample_plain(rng);
    let s_b = params.reduce_plain(inputs.inner_product(params) as i128 - s_a as i128);
    (s_a, s_b)
}

/// A triple dealt by the trusted party.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdealTriple {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    /// One `(a_i, b_i, c_i)` per party.
    pub shares: Vec<[i64; 3]>,
}

/// Samples `a, b` uniformly, sets `c = [a*b]_t` and deals uniform additive shares to `parties` parties.
pub fn ideal_btg<R: Rng + ?Sized>(params: &AheParams, parties: usize, rng: &mut R) -> IdealTriple {
    let a = params.sample_plain(rng);
    let b = params.sample_plain(rng);
    ideal_btg_with(params, parties, a, b, rng)
}

/// As [`ideal_btg`] with caller-chosen `a` and `b`.
pub fn ideal_btg_with<R: Rng + ?Sized>(
    params: &AheParams,
    parties: usize,
    a: i64,
    b: i64,
    rng: &mut R,
) -> IdealTriple {
    assert!(parties >= 1, "at least one party");
    let c = params.reduce_plain(a as i128 * b as i128);
    let mut shares = vec![[0i64; 3]; parties];
    for (k, value) in [a, b, c].into_iter().enumerate() {
        let mut acc = 0i128;
        for share in shares.iter_mut().skip(1) {
            share[k] = params.sample_plain(rng);
            acc += share[k] as i128;
        }
        shares[0][k] = params.reduce_plain(value as i128 - acc);
    }
    IdealTriple { a, b, c, shares }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Fresh,
    AwaitingReply,
    Done,
}

/// Alice's inputs for a run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AliceInput {
    /// Sample `l` uniform values in round 1 (triple generation).
    Random(usize),
    /// Use these values (general shared scalar product).
    Given(Vec<i64>),
}

fn check_len(params: &AheParams, len: usize) -> Result<()> {
    if len == 0 {
        return Err(Error::Params("inner product length must be at least 1".into()));
    }
    let max = params.max_inner_product_len();
    if len > max {
        return Err(Error::InnerProductTooLong { len, max });
    }
    Ok(())
}

/// Alice's side of one run: key holder and decryptor.
#[derive(Clone, Debug)]
pub struct Alice {
    pk: PublicKey,
    sk: SecretKey,
    input: AliceInput,
    x_a: Vec<i64>,
    phase: Phase,
    s_a: Option<i64>,
}

impl Alice {
    pub fn new(pk: PublicKey, sk: SecretKey, input: AliceInput) -> Result<Self> {
        let params = pk.params();
        match &input {
            AliceInput::Random(l) => check_len(params, *l)?,
            AliceInput::Given(xs) => {
                check_len(params, xs.len())?;
                for &x in xs {
                    params.check_plain(x)?;
                }
            }
        }
        Ok(Self { pk, sk, input, x_a: Vec::new(), phase: Phase::Fresh, s_a: None })
    }

    /// Step 1: fix `x_A` and encrypt it element-wise.
    pub fn round1<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<Ciphertext>> {
        if self.phase != Phase::Fresh {
            return Err(Error::State("alice round 1 already ran".into()));
        }
        let params = self.pk.params();
        let x_a = match &self.input {
            AliceInput::Random(l) => (0..*l).map(|_| params.sample_plain(rng)).collect(),
            AliceInput::Given(xs) => xs.clone(),
        };
        let c_a = x_a.iter().map(|&x| encrypt(&self.pk, x, rng)).collect::<Result<Vec<_>>>()?;
        self.x_a = x_a;
        self.phase = Phase::AwaitingReply;
        Ok(c_a)
    }

    /// Step 3: decrypt Bob's reply to `s_A`.
    pub fn round3(&mut self, c_b: &Ciphertext) -> Result<i64> {
        if self.phase != Phase::AwaitingReply {
            return Err(Error::State(format!("alice cannot accept c_B in phase {:?}", self.phase)));
        }
        c_b.check_params(self.pk.params())?;
        let s_a = decrypt(&self.sk, c_b)?;
        self.s_a = Some(s_a);
        self.phase = Phase::Done;
        Ok(s_a)
    }

    pub fn x_a(&self) -> &[i64] {
        &self.x_a
    }

    pub fn output(&self) -> Option<i64> {
        self.s_a
    }

    pub fn is_done(&self) -> bool {
        self.phase == Phase::Done
    }

    pub fn public_key(&self) -> &PublicKey {
        &self.pk
    }
}

/// Bob's side of one run.
#[derive(Clone, Debug)]
pub struct Bob {
    pk: PublicKey,
    x_b: Vec<i64>,
    phase: Phase,
    r_b: Option<i64>,
}

impl Bob {
    pub fn new(pk: PublicKey, x_b: Vec<i64>) -> Result<Self> {
        let params = pk.params();
        check_len(params, x_b.len())?;
        for &x in &x_b {
            params.check_plain(x)?;
        }
        Ok(Self { pk, x_b, phase: Phase::Fresh, r_b: None })
    }

    /// Bob with `l` uniform inputs (triple generation).
    pub fn random<R: Rng + ?Sized>(pk: PublicKey, l: usize, rng: &mut R) -> Result<Self> {
        let x_b = (0..l).map(|_| pk.params().sample_plain(rng)).collect();
        Self::new(pk, x_b)
    }

    /// Steps 2 and 4 with a fresh uniform mask. Returns `(c_B, s_B)`.
    pub fn round2<R: Rng + ?Sized>(&mut self, c_a: &[Ciphertext], rng: &mut R) -> Result<(Ciphertext, i64)> {
        let r_b = self.pk.params().sample_plain(rng);
        self.round2_with_mask(c_a, r_b, rng)
    }

    /// Steps 2 and 4 with a caller-chosen mask `r_B`.
    pub fn round2_with_mask<R: Rng + ?Sized>(
        &mut self,
        c_a: &[Ciphertext],
        r_b: i64,
        rng: &mut R,
    ) -> Result<(Ciphertext, i64)> {
        if self.phase != Phase::Fresh {
            return Err(Error::State("bob round 2 already ran".into()));
        }
        let params = self.pk.params();
        params.check_plain(r_b)?;
        if c_a.len() != self.x_b.len() {
            return Err(Error::Mismatch(format!(
                "c_A carries {} ciphertexts, bob holds {} inputs",
                c_a.len(),
                self.x_b.len()
            )));
        }
        for ct in c_a {
            ct.check_params(params)?;
        }
        let mut c_b = encrypt(&self.pk, r_b, rng)?;
        for (&x, ct) in self.x_b.iter().zip(c_a) {
            c_b = add_ct(&c_b, &scalar_mul_plain(x, ct)?)?;
        }
        self.r_b = Some(r_b);
        self.phase = Phase::Done;
        Ok((c_b, params.reduce_plain(-(r_b as i128))))
    }

    pub fn x_b(&self) -> &[i64] {
        &self.x_b
    }

    pub fn output(&self) -> Option<i64> {
        let t = self.pk.params();
        self.r_b.map(|r| t.reduce_plain(-(r as i128)))
    }

    pub fn is_done(&self) -> bool {
        self.phase == Phase::Done
    }
}

/// Turns a completed `l = 1` run into the two parties' triple shares.
pub fn make_triple(alice: &Alice, bob: &Bob, triple_id: TripleId) -> Result<(TripleShare, TripleShare)> {
    let (Some(s_a), Some(s_b)) = (alice.output(), bob.output()) else {
        return Err(Error::Abort(format!("triple {triple_id}: protocol run incomplete")));
    };
    if alice.x_a.len() != 1 || bob.x_b.len() != 1 {
        return Err(Error::Params("triples come from runs of length 1".into()));
    }
    let t = alice.pk.params().t();
    Ok((
        TripleShare { triple_id, party: Party::Alice, a_share: alice.x_a[0], b_share: 0, c_share: s_a, t },
        TripleShare { triple_id, party: Party::Bob, a_share: 0, b_share: bob.x_b[0], c_share: s_b, t },
    ))
}

/// Result of a shared scalar product over the bus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SspOutcome {
    pub x_a: Vec<i64>,
    pub s_a: i64,
    pub s_b: i64,
}

/// Runs the protocol between the `alice` and `bob` endpoints of a [`Bus`].
pub struct SspSession<'a> {
    bus: &'a mut Bus,
    pk: PublicKey,
    sk: SecretKey,
    bob_pk: PublicKey,
}

impl<'a> SspSession<'a> {
    /// Registers both endpoints and ships Alice's public key to Bob.
    pub fn new(bus: &'a mut Bus, pk: PublicKey, sk: SecretKey) -> Result<Self> {
        let (a, b) = (Party::Alice.endpoint(), Party::Bob.endpoint());
        bus.register(a);
        bus.register(b);
        bus.send(a, b, &Payload::PublicKey(pk.to_bytes()))?;
        let bob_pk = match bus.recv(b, a)?.payload()? {
            Payload::PublicKey(bytes) => PublicKey::from_bytes(pk.params(), &bytes)?,
            other => return Err(Error::Abort(format!("bob expected a public key, got {:?}", other.kind()))),
        };
        Ok(Self { bus, pk, sk, bob_pk })
    }

    pub fn params(&self) -> &AheParams {
        self.pk.params()
    }

    /// One run of length `<= max_inner_product_len`, returning both parties' state.
    pub fn run_once<RA: Rng + ?Sized, RB: Rng + ?Sized>(
        &mut self,
        x_a: AliceInput,
        x_b: Vec<i64>,
        alice_rng: &mut RA,
        bob_rng: &mut RB,
    ) -> Result<(Alice, Bob)> {
        let (a, b) = (Party::Alice.endpoint(), Party::Bob.endpoint());
        let mut alice = Alice::new(self.pk.clone(), self.sk.clone(), x_a)?;
        let mut bob = Bob::new(self.bob_pk.clone(), x_b)?;

        let c_a = alice.round1(alice_rng)?;
        self.bus.send(a, b, &Payload::Ciphertexts(c_a))?;

        let c_a = expect_ciphertexts(self.bus.recv(b, a)?.payload()?)?;
        let (c_b, _) = bob.round2(&c_a, bob_rng)?;
        self.bus.send(b, a, &Payload::Ciphertexts(vec![c_b]))?;

        let reply = self.bus.recv(a, b).map_err(|e| Error::Abort(format!("alice: {e}")))?;
        let c_b = expect_ciphertexts(reply.payload()?)?;
        let [c_b] = c_b.as_slice() else {
            return Err(Error::Abort(format!("alice expected one c_B, got {}", c_b.len())));
        };
        alice.round3(c_b)?;
        Ok((alice, bob))
    }

    /// Shared scalar product of arbitrary length; vectors longer than the noise
    /// budget allows are split into chunks whose shares are summed.
    pub fn run<RA: Rng + ?Sized, RB: Rng + ?Sized>(
        &mut self,
        inputs: &SspInputs,
        alice_rng: &mut RA,
        bob_rng: &mut RB,
    ) -> Result<SspOutcome> {
        let params = self.params().clone();
        let chunk = params.max_inner_product_len().max(1);
        let (mut s_a, mut s_b) = (0i128, 0i128);
        for (xa, xb) in inputs.inp_a.chunks(chunk).zip(inputs.inp_b.chunks(chunk)) {
            let (alice, bob) = self.run_once(AliceInput::Given(xa.to_vec()), xb.to_vec(), alice_rng, bob_rng)?;
            s_a += alice.output().expect("completed") as i128;
            s_b += bob.output().expect("completed") as i128;
        }
        Ok(SspOutcome {
            x_a: inputs.inp_a.clone(),
            s_a: params.reduce_plain(s_a),
            s_b: params.reduce_plain(s_b),
        })
    }

    /// One triple over the bus.
    pub fn triple<RA: Rng + ?Sized, RB: Rng + ?Sized>(
        &mut self,
        triple_id: TripleId,
        alice_rng: &mut RA,
        bob_rng: &mut RB,
    ) -> Result<(TripleShare, TripleShare)> {
        let x_b = self.params().sample_plain(bob_rng);
        let (alice, bob) = self.run_once(AliceInput::Random(1), vec![x_b], alice_rng, bob_rng)?;
        make_triple(&alice, &bob, triple_id)
    }
}

fn expect_ciphertexts(p: Payload) -> Result<Vec<Ciphertext>> {
    match p {
        Payload::Ciphertexts(cts) => Ok(cts),
        other => Err(Error::Abort(format!("expected ciphertexts, got {:?}", other.kind()))),
    }
}

/// Offline-phase batch generator. Alice's key pair and every run's randomness
/// derive from one master seed, so output is independent of worker scheduling.
#[derive(Clone, Debug)]
pub struct TripleGenerator {
    seed: MasterSeed,
    pk: PublicKey,
    sk: SecretKey,
}

impl TripleGenerator {
    pub fn new(params: &AheParams, seed: MasterSeed) -> Self {
        let (pk, sk) = keygen(params, &mut seed.derive("alice-keygen", 0));
        Self { seed, pk, sk }
    }

    /// Uses an existing key pair; per-run randomness still derives from `seed`.
    pub fn with_keys(seed: MasterSeed, pk: PublicKey, sk: SecretKey) -> Result<Self> {
        if pk.params() != sk.params() {
            return Err(Error::Mismatch("public and secret keys use different parameters".into()));
        }
        Ok(Self { seed, pk, sk })
    }

    pub fn params(&self) -> &AheParams {
        self.pk.params()
    }

    pub fn public_key(&self) -> &PublicKey {
        &self.pk
    }

    pub fn secret_key(&self) -> &SecretKey {
        &self.sk
    }

    /// A single in-memory protocol run for `triple_id`.
    pub fn generate_one(&self, triple_id: TripleId) -> Result<(TripleShare, TripleShare)> {
        let mut ra = self.seed.derive("triple-alice", triple_id);
        let mut rb = self.seed.derive("triple-bob", triple_id);
        let mut alice = Alice::new(self.pk.clone(), self.sk.clone(), AliceInput::Random(1))?;
        let mut bob = Bob::random(self.pk.clone(), 1, &mut rb)?;
        let c_a = alice.round1(&mut ra)?;
        let (c_b, _) = bob.round2(&c_a, &mut rb)?;
        alice.round3(&c_b)?;
        make_triple(&alice, &bob, triple_id)
    }

    /// `count` triples with ids `first_id..first_id + count`, generated in parallel.
    pub fn batch_generate(&self, first_id: TripleId, count: usize) -> Result<Vec<(TripleShare, TripleShare)>> {
        (0..count as u64)
            .into_par_iter()
            .map(|i| self.generate_one(first_id + i))
            .collect()
    }
}

/// SHA-256 over the JSON-lines encoding of the triple stream, hex encoded.
pub fn stream_digest(triples: &[(TripleShare, TripleShare)]) -> String {
    let mut h = Sha256::new();
    for (a, b) in triples {
        h.update(to_json_line(a));
        h.update(to_json_line(b));
    }
    hex::encode(h.finalize())
}

/// `{"triple_id":..,"party":..,"a_share":..,"b_share":..,"c_share":..,"t":..}` plus newline.
pub fn to_json_line(share: &TripleShare) -> String {
    let mut s = serde_json::to_string(share).expect("plain struct serializes");
    s.push('\n');
    s
}

pub fn read_jsonl(text: &str) -> Result<Vec<TripleShare>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::Decode(format!("triple record: {e}"))))
        .collect()
}

const BTR_MAGIC: &[u8; 4] = b"BTR1";
const BTR_RECORD: usize = 8 + 1 + 24;

/// `"BTR1"`, `u64 t`, `u64 count`, then per share `u64 id`, `u8 party`, `i64 a, b, c` (little-endian).
pub fn write_btr(t: u64, shares: &[TripleShare]) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + shares.len() * BTR_RECORD);
    out.extend_from_slice(BTR_MAGIC);
    out.extend_from_slice(&t.to_le_bytes());
    out.extend_from_slice(&(shares.len() as u64).to_le_bytes());
    for s in shares {
        out.extend_from_slice(&s.triple_id.to_le_bytes());
        out.push(s.party.tag());
        for v in [s.a_share, s.b_share, s.c_share] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn read_btr(bytes: &[u8]) -> Result<Vec<TripleShare>> {
    if bytes.len() < 20 || &bytes[..4] != BTR_MAGIC {
        return Err(Error::Decode("missing BTR1 header".into()));
    }
    let t = u64::from_le_bytes(bytes[4..12].try_into().unwrap());
    let count = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let body = &bytes[20..];
    if body.len() != count.saturating_mul(BTR_RECORD) {
        return Err(Error::Decode(format!("BTR1 body holds {} bytes, expected {count} records", body.len())));
    }
    body.chunks_exact(BTR_RECORD)
        .map(|r| {
            let i = |o: usize| i64::from_le_bytes(r[o..o + 8].try_into().unwrap());
            Ok(TripleShare {
                triple_id: u64::from_le_bytes(r[..8].try_into().unwrap()),
                party: Party::from_tag(r[8])?,
                a_share: i(9),
                b_share: i(17),
                c_share: i(25),
                t,
            })
        })
        .collect()
}
