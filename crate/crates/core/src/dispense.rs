//! Dispensing two-party triple shares to `l` MPC servers.
//!
//! Each origin party (Alice, Bob) splits every component of its share into `l`
//! fresh additive sub-shares and sends sub-share `j` to server `j` over their
//! pairwise channel. A server's vault entry for a triple becomes ready once both
//! origins' sub-shares have arrived; the ready entry is that server's share of
//! the full triple.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use zeroize::Zeroize;

use crate::ahe::AheParams;
use crate::error::{Error, Result};
use crate::transport::{Bus, Payload};
use crate::triplegen::{Party, TripleId, TripleShare};

/// Bus endpoint of server `j` (1-based).
pub fn server_endpoint(j: u32) -> String {
    format!("server-{j}")
}

/// Splits `value` into `l` additive shares mod `t`: the first `l - 1` uniform,
/// the last completing the sum. A share equal to zero is kept as is.
pub fn split_additive<R: Rng + ?Sized>(params: &AheParams, value: i64, l: usize, rng: &mut R) -> Result<Vec<i64>> {
    if l < 2 {
        return Err(Error::Params(format!("need at least 2 servers, got {l}")));
    }
    params.check_plain(value)?;
    let mut out: Vec<i64> = (0..l - 1).map(|_| params.sample_plain(rng)).collect();
    let acc: i128 = out.iter().map(|&v| v as i128).sum();
    out.push(params.reduce_plain(value as i128 - acc));
    Ok(out)
}

/// `[sum of shares]_t`.
pub fn combine(params: &AheParams, shares: &[i64]) -> i64 {
    params.reduce_plain(shares.iter().map(|&v| v as i128).sum())
}

/// One origin's sub-share of one triple, destined for one server.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShareSplit {
    pub origin: Party,
    pub triple_id: TripleId,
    /// 1-based server index.
    pub server_index: u32,
    pub sub_shares: [i64; 3],
}

impl Drop for ShareSplit {
    fn drop(&mut self) {
        self.sub_shares.zeroize();
    }
}

/// Splits a party's triple share for `l` servers, with independent randomness per component.
pub fn split_triple_share<R: Rng + ?Sized>(
    params: &AheParams,
    share: &TripleShare,
    l: usize,
    rng: &mut R,
) -> Result<Vec<ShareSplit>> {
    let mut a = split_additive(params, share.a_share, l, rng)?;
    let mut b = split_additive(params, share.b_share, l, rng)?;
    let mut c = split_additive(params, share.c_share, l, rng)?;
    let splits = (0..l)
        .map(|j| ShareSplit {
            origin: share.party,
            triple_id: share.triple_id,
            server_index: j as u32 + 1,
            sub_shares: [a[j], b[j], c[j]],
        })
        .collect();
    a.zeroize();
    b.zeroize();
    c.zeroize();
    Ok(splits)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct VaultEntry {
    alice: Option<[i64; 3]>,
    bob: Option<[i64; 3]>,
}

impl VaultEntry {
    fn ready(&self) -> bool {
        self.alice.is_some() && self.bob.is_some()
    }
}

#[derive(Serialize, Deserialize)]
struct VaultRecord {
    triple_id: TripleId,
    from: Party,
    a_j: i64,
    b_j: i64,
    c_j: i64,
}

/// A server's store of received sub-shares.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ServerVault {
    server_id: u32,
    t: u64,
    entries: BTreeMap<TripleId, VaultEntry>,
    log: Vec<(TripleId, Party, [i64; 3])>,
}

impl ServerVault {
    pub fn new(server_id: u32, t: u64) -> Self {
        Self { server_id, t, entries: BTreeMap::new(), log: Vec::new() }
    }

    pub fn server_id(&self) -> u32 {
        self.server_id
    }

    /// Records a sub-share. A second delivery for the same `(triple_id, origin)` is rejected.
    pub fn deliver(&mut self, triple_id: TripleId, origin: Party, sub: [i64; 3]) -> Result<()> {
        let entry = self.entries.entry(triple_id).or_default();
        let slot = match origin {
            Party::Alice => &mut entry.alice,
            Party::Bob => &mut entry.bob,
        };
        if slot.is_some() {
            return Err(Error::TripleReused(triple_id));
        }
        *slot = Some(sub);
        self.log.push((triple_id, origin, sub));
        Ok(())
    }

    pub fn is_ready(&self, triple_id: TripleId) -> bool {
        self.entries.get(&triple_id).is_some_and(VaultEntry::ready)
    }

    pub fn ready_ids(&self) -> Vec<TripleId> {
        self.entries.iter().filter(|(_, e)| e.ready()).map(|(&id, _)| id).collect()
    }

    pub fn pending_ids(&self) -> Vec<TripleId> {
        self.entries.iter().filter(|(_, e)| !e.ready()).map(|(&id, _)| id).collect()
    }

    /// This server's share `(a_j, b_j, c_j)` of a ready triple.
    pub fn share(&self, triple_id: TripleId) -> Option<[i64; 3]> {
        let e = self.entries.get(&triple_id)?;
        let (Some(x), Some(y)) = (e.alice, e.bob) else {
            return None;
        };
        let t = self.t as i128;
        let h = t / 2;
        let add = |u: i64, v: i64| {
            let s = u as i128 + v as i128;
            (if s > h { s - t } else if s < -h { s + t } else { s }) as i64
        };
        Some([add(x[0], y[0]), add(x[1], y[1]), add(x[2], y[2])])
    }

    /// Removes a ready triple, returning this server's share of it.
    pub fn take(&mut self, triple_id: TripleId) -> Option<[i64; 3]> {
        let s = self.share(triple_id)?;
        self.entries.remove(&triple_id);
        Some(s)
    }

    /// Append-only delivery log, one `{triple_id, from, a_j, b_j, c_j}` object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for &(triple_id, from, [a_j, b_j, c_j]) in &self.log {
            out.push_str(&serde_json::to_string(&VaultRecord { triple_id, from, a_j, b_j, c_j }).unwrap());
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(server_id: u32, t: u64, text: &str) -> Result<Self> {
        let mut v = Self::new(server_id, t);
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let r: VaultRecord = serde_json::from_str(line).map_err(|e| Error::Decode(format!("vault record: {e}")))?;
            v.deliver(r.triple_id, r.from, [r.a_j, r.b_j, r.c_j])?;
        }
        Ok(v)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_jsonl().as_bytes())?;
        Ok(())
    }

    pub fn load(server_id: u32, t: u64, path: &Path) -> Result<Self> {
        Self::from_jsonl(server_id, t, &std::fs::read_to_string(path)?)
    }
}

/// Outcome of one delivery attempt to one server.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeliveryStatus {
    Delivered,
    /// The vault refused the sub-share (duplicate).
    Rejected,
    /// The message was lost; the sub-share is kept for another attempt.
    Retry,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeliveryReceipt {
    pub triple_id: TripleId,
    pub server: u32,
    pub status: DeliveryStatus,
}

/// Receipts for one dispatch plus the sub-shares that still need delivery.
#[derive(Debug, Default)]
pub struct Dispatch {
    pub receipts: Vec<DeliveryReceipt>,
    pub retry: Vec<ShareSplit>,
}

impl Dispatch {
    pub fn all_delivered(&self) -> bool {
        self.retry.is_empty() && self.receipts.iter().all(|r| r.status == DeliveryStatus::Delivered)
    }
}

/// Registers the origin and all `vaults.len()` server endpoints on the bus.
pub fn register_servers(bus: &mut Bus, servers: usize) {
    bus.register(Party::Alice.endpoint());
    bus.register(Party::Bob.endpoint());
    for j in 1..=servers as u32 {
        bus.register(server_endpoint(j));
    }
}

/// Splits `share` and delivers sub-share `j` to `vaults[j - 1]` through the bus.
pub fn dispense_triple<R: Rng + ?Sized>(
    params: &AheParams,
    share: &TripleShare,
    bus: &mut Bus,
    vaults: &mut [ServerVault],
    rng: &mut R,
) -> Result<Dispatch> {
    let splits = split_triple_share(params, share, vaults.len(), rng)?;
    redeliver(bus, vaults, splits)
}

/// Sends each split to its server and collects receipts. Delivered splits are
/// dropped (and zeroized); lost ones come back in [`Dispatch::retry`].
pub fn redeliver(bus: &mut Bus, vaults: &mut [ServerVault], splits: Vec<ShareSplit>) -> Result<Dispatch> {
    let mut dispatch = Dispatch::default();
    for split in splits {
        let j = split.server_index;
        let vault = vaults
            .iter_mut()
            .find(|v| v.server_id == j)
            .ok_or_else(|| Error::Params(format!("no vault for server {j}")))?;
        let origin = split.origin.endpoint();
        let server = server_endpoint(j);
        let [a, b, c] = split.sub_shares;
        bus.send(origin, &server, &Payload::Share { triple_id: split.triple_id, origin: split.origin, a, b, c })?;

        let env = match bus.recv(&server, origin) {
            Ok(env) => env,
            Err(Error::Timeout { .. }) => {
                dispatch.receipts.push(DeliveryReceipt {
                    triple_id: split.triple_id,
                    server: j,
                    status: DeliveryStatus::Retry,
                });
                dispatch.retry.push(split);
                continue;
            }
            Err(e) => return Err(e),
        };
        let Payload::Share { triple_id, origin: from, a, b, c } = env.payload()? else {
            return Err(Error::Abort(format!("server {j} expected a share")));
        };
        let accepted = vault.deliver(triple_id, from, [a, b, c]).is_ok();
        bus.send(&server, origin, &Payload::Receipt { triple_id, server: j, accepted })?;
        let status = match bus.recv(origin, &server) {
            Ok(env) => match env.payload()? {
                Payload::Receipt { accepted: true, .. } => DeliveryStatus::Delivered,
                Payload::Receipt { accepted: false, .. } => DeliveryStatus::Rejected,
                _ => return Err(Error::Abort("expected a receipt".into())),
            },
            // The share landed; only the acknowledgement was lost.
            Err(Error::Timeout { .. }) if accepted => DeliveryStatus::Delivered,
            Err(Error::Timeout { .. }) => DeliveryStatus::Rejected,
            Err(e) => return Err(e),
        };
        dispatch.receipts.push(DeliveryReceipt { triple_id, server: j, status });
    }
    Ok(dispatch)
}

/// Dispenses both parties' shares of every triple to `servers` fresh vaults.
pub fn dispense_batch<R: Rng + ?Sized>(
    params: &AheParams,
    triples: &[(TripleShare, TripleShare)],
    servers: usize,
    bus: &mut Bus,
    rng: &mut R,
) -> Result<Vec<ServerVault>> {
    if servers < 2 {
        return Err(Error::Params(format!("need at least 2 servers, got {servers}")));
    }
    register_servers(bus, servers);
    let mut vaults: Vec<ServerVault> = (1..=servers as u32).map(|j| ServerVault::new(j, params.t())).collect();
    for (sa, sb) in triples {
        for share in [sa, sb] {
            let d = dispense_triple(params, share, bus, &mut vaults, rng)?;
            if !d.all_delivered() {
                return Err(Error::Abort(format!("triple {} not fully delivered", share.triple_id)));
            }
        }
    }
    Ok(vaults)
}

/// Rebuilds `(a, b, c)` from every server's share of a ready triple.
pub fn reconstruct(params: &AheParams, triple_id: TripleId, vaults: &[ServerVault]) -> Result<(i64, i64, i64)> {
    let mut acc = [0i128; 3];
    for v in vaults {
        let s = v
            .share(triple_id)
            .ok_or_else(|| Error::Abort(format!("incomplete: server {} lacks triple {triple_id}", v.server_id)))?;
        for k in 0..3 {
            acc[k] += s[k] as i128;
        }
    }
    Ok((params.reduce_plain(acc[0]), params.reduce_plain(acc[1]), params.reduce_plain(acc[2])))
}
