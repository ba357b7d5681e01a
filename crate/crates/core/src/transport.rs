//! Deterministic in-process message bus.
//!
//! Every ordered pair of registered endpoints is a confidential, authenticated
//! FIFO channel. Messages travel as length-prefixed frames (`u32` body length,
//! `u8` kind, body) and every delivered frame is appended to the [`Transcript`].
//! Drop rules inject faults; a receiver waiting on an empty channel gets
//! [`Error::Timeout`].

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ahe::Ciphertext;
use crate::error::{Error, Result};
use crate::seed::MasterSeed;
use crate::triplegen::Party;

/// Frame kind tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PayloadKind {
    Ciphertext = 1,
    Share = 2,
    Opening = 3,
    Receipt = 4,
    PublicKey = 5,
    Input = 6,
}

impl PayloadKind {
    pub fn from_tag(tag: u8) -> Result<Self> {
        Ok(match tag {
            1 => Self::Ciphertext,
            2 => Self::Share,
            3 => Self::Opening,
            4 => Self::Receipt,
            5 => Self::PublicKey,
            6 => Self::Input,
            other => return Err(Error::Decode(format!("unknown payload kind {other}"))),
        })
    }
}

/// A typed protocol message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    /// A batch of ciphertexts (`c_A` or `c_B`).
    Ciphertexts(Vec<Ciphertext>),
    /// One sub-share of a dispensed triple.
    Share { triple_id: u64, origin: Party, a: i64, b: i64, c: i64 },
    /// A party's share of a value being opened.
    Opening { value_id: String, share: i64 },
    /// Acknowledgement from a server vault.
    Receipt { triple_id: u64, server: u32, accepted: bool },
    /// Serialized public key (`APK1`).
    PublicKey(Vec<u8>),
    /// An input-sharing message from a value's owner.
    Input { value_id: String, share: i64 },
}

impl Payload {
    pub fn kind(&self) -> PayloadKind {
        match self {
            Payload::Ciphertexts(_) => PayloadKind::Ciphertext,
            Payload::Share { .. } => PayloadKind::Share,
            Payload::Opening { .. } => PayloadKind::Opening,
            Payload::Receipt { .. } => PayloadKind::Receipt,
            Payload::PublicKey(_) => PayloadKind::PublicKey,
            Payload::Input { .. } => PayloadKind::Input,
        }
    }

    fn encode_body(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            Payload::Ciphertexts(cts) => {
                out.extend_from_slice(&(cts.len() as u32).to_le_bytes());
                for ct in cts {
                    ct.write_to(&mut out);
                }
            }
            Payload::Share { triple_id, origin, a, b, c } => {
                out.extend_from_slice(&triple_id.to_le_bytes());
                out.push(origin.tag());
                for v in [a, b, c] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
            Payload::Opening { value_id, share } | Payload::Input { value_id, share } => {
                out.extend_from_slice(&(value_id.len() as u16).to_le_bytes());
                out.extend_from_slice(value_id.as_bytes());
                out.extend_from_slice(&share.to_le_bytes());
            }
            Payload::Receipt { triple_id, server, accepted } => {
                out.extend_from_slice(&triple_id.to_le_bytes());
                out.extend_from_slice(&server.to_le_bytes());
                out.push(*accepted as u8);
            }
            Payload::PublicKey(bytes) => out.extend_from_slice(bytes),
        }
        out
    }

    fn decode_body(kind: PayloadKind, body: &[u8]) -> Result<Self> {
        let mut r = Reader(body);
        let payload = match kind {
            PayloadKind::Ciphertext => {
                let count = r.u32()? as usize;
                let mut cts = Vec::with_capacity(count.min(1 << 16));
                for _ in 0..count {
                    let (ct, rest) = Ciphertext::read_from(r.0)?;
                    r.0 = rest;
                    cts.push(ct);
                }
                Payload::Ciphertexts(cts)
            }
            PayloadKind::Share => Payload::Share {
                triple_id: r.u64()?,
                origin: Party::from_tag(r.u8()?)?,
                a: r.i64()?,
                b: r.i64()?,
                c: r.i64()?,
            },
            PayloadKind::Opening | PayloadKind::Input => {
                let len = r.u16()? as usize;
                let value_id = String::from_utf8(r.take(len)?.to_vec())
                    .map_err(|_| Error::Decode("value id is not UTF-8".into()))?;
                let share = r.i64()?;
                if kind == PayloadKind::Opening {
                    Payload::Opening { value_id, share }
                } else {
                    Payload::Input { value_id, share }
                }
            }
            PayloadKind::Receipt => Payload::Receipt {
                triple_id: r.u64()?,
                server: r.u32()?,
                accepted: match r.u8()? {
                    0 => false,
                    1 => true,
                    b => return Err(Error::Decode(format!("bad receipt flag {b}"))),
                },
            },
            PayloadKind::PublicKey => {
                if body.len() < 24 || &body[..4] != b"APK1" {
                    return Err(Error::Decode("public key payload lacks APK1 header".into()));
                }
                r.0 = &[];
                Payload::PublicKey(body.to_vec())
            }
        };
        if !r.0.is_empty() {
            return Err(Error::Decode(format!(
                "length mismatch: {} unparsed bytes in {kind:?} body",
                r.0.len()
            )));
        }
        Ok(payload)
    }
}

struct Reader<'a>(&'a [u8]);

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.0.len() < n {
            return Err(Error::Decode(format!("truncated body: need {n}, have {}", self.0.len())));
        }
        let (head, rest) = self.0.split_at(n);
        self.0 = rest;
        Ok(head)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// `u32` body length (little-endian), `u8` kind, body.
pub fn frame(payload: &Payload) -> Vec<u8> {
    let body = payload.encode_body();
    let mut out = Vec::with_capacity(5 + body.len());
    out.extend_from_slice(&(body.len() as u32).to_le_bytes());
    out.push(payload.kind() as u8);
    out.extend_from_slice(&body);
    out
}

/// Parses one frame from the front of `bytes`, returning the payload and the remainder.
pub fn unframe(bytes: &[u8]) -> Result<(Payload, &[u8])> {
    if bytes.len() < 5 {
        return Err(Error::Decode(format!("truncated frame header ({} bytes)", bytes.len())));
    }
    let len = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
    let kind = PayloadKind::from_tag(bytes[4])?;
    let rest = &bytes[5..];
    if rest.len() < len {
        return Err(Error::Decode(format!("truncated frame: body {len}, have {}", rest.len())));
    }
    let (body, rest) = rest.split_at(len);
    Ok((Payload::decode_body(kind, body)?, rest))
}

/// One delivered message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Envelope {
    pub from: String,
    pub to: String,
    /// Strictly increasing per `(from, to)` pair, starting at 0.
    pub seq: u64,
    pub kind: PayloadKind,
    /// The full frame.
    pub frame: Vec<u8>,
}

impl Envelope {
    pub fn payload(&self) -> Result<Payload> {
        let (p, rest) = unframe(&self.frame)?;
        if !rest.is_empty() {
            return Err(Error::Decode("trailing bytes after frame".into()));
        }
        Ok(p)
    }

    fn write_canonical(&self, out: &mut impl Digest) {
        out.update((self.from.len() as u32).to_le_bytes());
        out.update(self.from.as_bytes());
        out.update((self.to.len() as u32).to_le_bytes());
        out.update(self.to.as_bytes());
        out.update(self.seq.to_le_bytes());
        out.update(&self.frame);
    }
}

#[derive(Serialize, Deserialize)]
struct EnvelopeRecord {
    seq: u64,
    from: String,
    to: String,
    kind: PayloadKind,
    payload: String,
}

#[derive(Serialize, Deserialize)]
struct TranscriptHeader {
    transcript: u32,
    seed: Option<String>,
}

/// Ordered log of every delivered envelope.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Transcript {
    pub seed: Option<MasterSeed>,
    pub envelopes: Vec<Envelope>,
}

impl Transcript {
    /// SHA-256 over the canonical byte stream of all envelopes, hex encoded.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for env in &self.envelopes {
            env.write_canonical(&mut h);
        }
        hex::encode(h.finalize())
    }

    /// A header line with the seed, then one JSON object per envelope with a hex payload.
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&TranscriptHeader {
            transcript: 1,
            seed: self.seed.map(|s| s.to_hex()),
        })
        .unwrap();
        out.push('\n');
        for env in &self.envelopes {
            let rec = EnvelopeRecord {
                seq: env.seq,
                from: env.from.clone(),
                to: env.to.clone(),
                kind: env.kind,
                payload: hex::encode(&env.frame),
            };
            out.push_str(&serde_json::to_string(&rec).unwrap());
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: TranscriptHeader = lines
            .next()
            .ok_or_else(|| Error::Decode("empty transcript".into()))
            .and_then(|l| serde_json::from_str(l).map_err(|e| Error::Decode(e.to_string())))?;
        let seed = header.seed.map(|s| s.parse()).transpose()?;
        let mut envelopes = Vec::new();
        for line in lines {
            let rec: EnvelopeRecord =
                serde_json::from_str(line).map_err(|e| Error::Decode(e.to_string()))?;
            let frame = hex::decode(&rec.payload).map_err(|e| Error::Decode(e.to_string()))?;
            let env = Envelope { from: rec.from, to: rec.to, seq: rec.seq, kind: rec.kind, frame };
            let p = env.payload()?;
            if p.kind() != env.kind {
                return Err(Error::Decode(format!("envelope {} declares {:?}", env.seq, env.kind)));
            }
            envelopes.push(env);
        }
        Ok(Self { seed, envelopes })
    }
}

/// Per-endpoint traffic counters (frame bytes).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TrafficStats {
    pub messages_sent: u64,
    pub messages_received: u64,
    pub bytes_sent: u64,
    pub bytes_received: u64,
}

/// Drops the `nth` (0-based) message matching `from -> to` and, if set, `kind`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DropRule {
    pub from: String,
    pub to: String,
    pub kind: Option<PayloadKind>,
    pub nth: usize,
    seen: usize,
}

impl DropRule {
    pub fn new(from: impl Into<String>, to: impl Into<String>, kind: Option<PayloadKind>, nth: usize) -> Self {
        Self { from: from.into(), to: to.into(), kind, nth, seen: 0 }
    }
}

type Channel = (String, String);

/// The message bus.
pub struct Bus {
    endpoints: Vec<String>,
    queues: BTreeMap<Channel, VecDeque<Envelope>>,
    next_seq: BTreeMap<Channel, u64>,
    stats: BTreeMap<String, TrafficStats>,
    faults: Vec<DropRule>,
    dropped: u64,
    transcript: Transcript,
    recording: bool,
    running: Sha256,
    delivered: u64,
    scheduler: ChaCha20Rng,
}

impl fmt::Debug for Bus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Bus")
            .field("endpoints", &self.endpoints)
            .field("delivered", &self.delivered)
            .field("dropped", &self.dropped)
            .finish()
    }
}

impl Bus {
    pub fn new(seed: MasterSeed) -> Self {
        Self {
            endpoints: Vec::new(),
            queues: BTreeMap::new(),
            next_seq: BTreeMap::new(),
            stats: BTreeMap::new(),
            faults: Vec::new(),
            dropped: 0,
            transcript: Transcript { seed: Some(seed), envelopes: Vec::new() },
            recording: true,
            running: Sha256::new(),
            delivered: 0,
            scheduler: seed.derive("bus-scheduler", 0),
        }
    }

    pub fn register(&mut self, endpoint: impl Into<String>) {
        let e = endpoint.into();
        if !self.endpoints.contains(&e) {
            self.stats.insert(e.clone(), TrafficStats::default());
            self.endpoints.push(e);
        }
    }

    pub fn is_registered(&self, endpoint: &str) -> bool {
        self.endpoints.iter().any(|e| e == endpoint)
    }

    fn require(&self, endpoint: &str) -> Result<()> {
        if self.is_registered(endpoint) {
            Ok(())
        } else {
            Err(Error::Abort(format!("unregistered endpoint {endpoint:?}")))
        }
    }

    pub fn inject_fault(&mut self, rule: DropRule) {
        self.faults.push(rule);
    }

    /// Frames and enqueues `payload`; returns the envelope's sequence number.
    /// A message hit by a drop rule still consumes its sequence number.
    pub fn send(&mut self, from: &str, to: &str, payload: &Payload) -> Result<u64> {
        self.require(from)?;
        self.require(to)?;
        let key = (from.to_string(), to.to_string());
        let seq = {
            let s = self.next_seq.entry(key.clone()).or_insert(0);
            let cur = *s;
            *s += 1;
            cur
        };
        let kind = payload.kind();
        let frame = frame(payload);
        let st = self.stats.get_mut(from).expect("registered");
        st.messages_sent += 1;
        st.bytes_sent += frame.len() as u64;

        for rule in &mut self.faults {
            if rule.from == from && rule.to == to && rule.kind.is_none_or(|k| k == kind) {
                let hit = rule.seen == rule.nth;
                rule.seen += 1;
                if hit {
                    self.dropped += 1;
                    return Ok(seq);
                }
            }
        }
        let env = Envelope { from: from.to_string(), to: to.to_string(), seq, kind, frame };
        env.write_canonical(&mut self.running);
        self.delivered += 1;
        if self.recording {
            self.transcript.envelopes.push(env.clone());
        }
        self.queues.entry(key).or_default().push_back(env);
        Ok(seq)
    }

    /// Next message on the `from -> to` channel.
    pub fn recv(&mut self, to: &str, from: &str) -> Result<Envelope> {
        self.require(from)?;
        self.require(to)?;
        let env = self
            .queues
            .get_mut(&(from.to_string(), to.to_string()))
            .and_then(|q| q.pop_front())
            .ok_or_else(|| Error::Timeout { from: from.to_string(), to: to.to_string() })?;
        let st = self.stats.get_mut(to).expect("registered");
        st.messages_received += 1;
        st.bytes_received += env.frame.len() as u64;
        Ok(env)
    }

    /// Next message addressed to `to` from any sender. Among non-empty channels
    /// the scheduler picks one by a seeded rotation over registration order.
    pub fn recv_any(&mut self, to: &str) -> Result<Envelope> {
        self.require(to)?;
        let ready: Vec<String> = self
            .endpoints
            .iter()
            .filter(|from| {
                self.queues
                    .get(&((*from).clone(), to.to_string()))
                    .is_some_and(|q| !q.is_empty())
            })
            .cloned()
            .collect();
        if ready.is_empty() {
            return Err(Error::Timeout { from: "*".into(), to: to.to_string() });
        }
        let pick = self.scheduler.gen_range(0..ready.len());
        self.recv(to, &ready[pick])
    }

    /// Number of undelivered messages waiting for `to`.
    pub fn pending(&self, to: &str) -> usize {
        self.queues.iter().filter(|((_, t), _)| t == to).map(|(_, q)| q.len()).sum()
    }

    pub fn stats(&self, endpoint: &str) -> TrafficStats {
        self.stats.get(endpoint).copied().unwrap_or_default()
    }

    pub fn all_stats(&self) -> &BTreeMap<String, TrafficStats> {
        &self.stats
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    /// Whether delivered envelopes are kept in the transcript. Long runs can
    /// turn this off; [`Bus::digest`] still covers every envelope.
    pub fn set_recording(&mut self, on: bool) {
        self.recording = on;
    }

    /// Digest of every envelope delivered so far, recorded or not. Equals
    /// `transcript().digest()` while recording has stayed on.
    pub fn digest(&self) -> String {
        hex::encode(self.running.clone().finalize())
    }

    /// Number of envelopes delivered so far, recorded or not.
    pub fn delivered(&self) -> u64 {
        self.delivered
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }
}
