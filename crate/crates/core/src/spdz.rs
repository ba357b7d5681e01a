//! SPDZ-style online phase over additive shares.
//!
//! `m` parties hold additive shares of every value in a [`ShareDict`]. Linear
//! operations are local. Multiplication spends one Beaver triple `(a, b, c)`:
//! the parties open `rho = x - a` and `eps = y - b`, then each computes
//! `[xy] = [c] + eps*[a] + rho*[b]`, with party 1 alone adding the public `rho*eps`.
//! Openings are broadcast so that every party learns the opened value.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::Serialize;

use crate::ahe::AheParams;
use crate::dispense::ServerVault;
use crate::error::{Error, Result};
use crate::seed::MasterSeed;
use crate::transport::{Bus, Payload, TrafficStats};
use crate::triplegen::TripleId;

/// Bus endpoint of online party `i` (0-based index, 1-based name).
pub fn party_endpoint(i: usize) -> String {
    format!("party-{}", i + 1)
}

/// One party's shares, keyed by value id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ShareDict {
    pub party_id: usize,
    shares: BTreeMap<String, i64>,
}

impl ShareDict {
    pub fn new(party_id: usize) -> Self {
        Self { party_id, shares: BTreeMap::new() }
    }

    pub fn get(&self, id: &str) -> Option<i64> {
        self.shares.get(id).copied()
    }

    pub fn insert(&mut self, id: impl Into<String>, share: i64) {
        self.shares.insert(id.into(), share);
    }

    pub fn contains(&self, id: &str) -> bool {
        self.shares.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.shares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }
}

/// A value made public by an opening.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OpenedValue {
    pub value_id: String,
    pub value: i64,
    pub parties: usize,
}

#[derive(Clone, Debug, Default)]
struct PartyState {
    dict: ShareDict,
    triples: BTreeMap<TripleId, [i64; 3]>,
}

/// The online phase simulator.
#[derive(Debug)]
pub struct OnlineSession {
    params: AheParams,
    parties: Vec<PartyState>,
    bus: Bus,
    rounds: u64,
    consumed: BTreeSet<TripleId>,
    temp: u64,
}

impl OnlineSession {
    pub fn new(params: &AheParams, parties: usize, seed: MasterSeed) -> Result<Self> {
        Self::with_bus(params, parties, Bus::new(seed))
    }

    /// Runs the online phase on an existing bus, e.g. the one the offline phase used.
    pub fn with_bus(params: &AheParams, parties: usize, mut bus: Bus) -> Result<Self> {
        if parties < 2 {
            return Err(Error::Params(format!("online phase needs at least 2 parties, got {parties}")));
        }
        for i in 0..parties {
            bus.register(party_endpoint(i));
        }
        let parties = (0..parties)
            .map(|i| PartyState { dict: ShareDict::new(i), triples: BTreeMap::new() })
            .collect();
        Ok(Self { params: params.clone(), parties, bus, rounds: 0, consumed: BTreeSet::new(), temp: 0 })
    }

    pub fn parties(&self) -> usize {
        self.parties.len()
    }

    pub fn params(&self) -> &AheParams {
        &self.params
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn bus(&self) -> &Bus {
        &self.bus
    }

    /// Mutable bus access, for fault injection.
    pub fn bus_mut(&mut self) -> &mut Bus {
        &mut self.bus
    }

    pub fn into_bus(self) -> Bus {
        self.bus
    }

    pub fn traffic(&self) -> Vec<TrafficStats> {
        (0..self.parties.len()).map(|i| self.bus.stats(&party_endpoint(i))).collect()
    }

    pub fn dict(&self, party: usize) -> &ShareDict {
        &self.parties[party].dict
    }

    /// Loads every triple that is ready in all vaults; vault `j` feeds party `j`.
    /// Returns the number of triples loaded.
    pub fn load_triples(&mut self, vaults: &mut [ServerVault]) -> Result<usize> {
        if vaults.len() != self.parties.len() {
            return Err(Error::Mismatch(format!(
                "{} vaults for {} online parties",
                vaults.len(),
                self.parties.len()
            )));
        }
        let ready: Vec<TripleId> = vaults[0]
            .ready_ids()
            .into_iter()
            .filter(|id| vaults.iter().all(|v| v.is_ready(*id)))
            .collect();
        let mut loaded = 0;
        for id in ready {
            if self.consumed.contains(&id) || self.parties[0].triples.contains_key(&id) {
                return Err(Error::TripleReused(id));
            }
            for (party, vault) in self.parties.iter_mut().zip(vaults.iter_mut()) {
                party.triples.insert(id, vault.take(id).expect("checked ready"));
            }
            loaded += 1;
        }
        Ok(loaded)
    }

    /// Gives every party its share of one triple directly.
    pub fn add_triple(&mut self, id: TripleId, shares: &[[i64; 3]]) -> Result<()> {
        if shares.len() != self.parties.len() {
            return Err(Error::Mismatch(format!("{} triple shares for {} parties", shares.len(), self.parties.len())));
        }
        if self.consumed.contains(&id) || self.parties[0].triples.contains_key(&id) {
            return Err(Error::TripleReused(id));
        }
        for (p, s) in self.parties.iter_mut().zip(shares) {
            for &v in s {
                self.params.check_plain(v)?;
            }
            p.triples.insert(id, *s);
        }
        Ok(())
    }

    pub fn available_triples(&self) -> usize {
        self.parties[0].triples.len()
    }

    pub fn is_consumed(&self, id: TripleId) -> bool {
        self.consumed.contains(&id)
    }

    fn share_of(&self, party: usize, id: &str) -> Result<i64> {
        self.parties[party]
            .dict
            .get(id)
            .ok_or_else(|| Error::Abort(format!("party {} holds no share of {id:?}", party + 1)))
    }

    fn fresh_id(&mut self, tag: &str) -> String {
        self.temp += 1;
        format!("_{tag}#{}", self.temp)
    }

    /// The owner splits `value` into uniform shares and sends one to every other party.
    pub fn share_input<R: Rng + ?Sized>(&mut self, owner: usize, id: &str, value: i64, rng: &mut R) -> Result<()> {
        if owner >= self.parties.len() {
            return Err(Error::Params(format!("no party {owner}")));
        }
        self.params.check_plain(value)?;
        let from = party_endpoint(owner);
        let mut acc = 0i128;
        for j in (0..self.parties.len()).filter(|&j| j != owner) {
            let share = self.params.sample_plain(rng);
            acc += share as i128;
            self.bus.send(&from, &party_endpoint(j), &Payload::Input { value_id: id.to_string(), share })?;
        }
        let own = self.params.reduce_plain(value as i128 - acc);
        self.parties[owner].dict.insert(id, own);
        for j in (0..self.parties.len()).filter(|&j| j != owner) {
            let env = self.bus.recv(&party_endpoint(j), &from).map_err(|e| Error::Abort(e.to_string()))?;
            match env.payload()? {
                Payload::Input { value_id, share } if value_id == id => self.parties[j].dict.insert(value_id, share),
                other => return Err(Error::Abort(format!("party {} expected input {id:?}, got {other:?}", j + 1))),
            }
        }
        self.rounds += 1;
        Ok(())
    }

    /// `[c]` for a public constant: party 1 holds `c`, the rest hold 0.
    pub fn constant(&mut self, id: &str, c: i64) -> Result<()> {
        let c = self.params.check_plain(c)?;
        for (i, p) in self.parties.iter_mut().enumerate() {
            p.dict.insert(id, if i == 0 { c } else { 0 });
        }
        Ok(())
    }

    fn local<F: Fn(usize, &[i64]) -> i128>(&mut self, inputs: &[&str], out: &str, f: F) -> Result<()> {
        let mut results = Vec::with_capacity(self.parties.len());
        for i in 0..self.parties.len() {
            let xs = inputs.iter().map(|id| self.share_of(i, id)).collect::<Result<Vec<_>>>()?;
            results.push(self.params.reduce_plain(f(i, &xs)));
        }
        for (p, r) in self.parties.iter_mut().zip(results) {
            p.dict.insert(out, r);
        }
        Ok(())
    }

    /// `[out] = [x] + [y]`.
    pub fn add_shares(&mut self, x: &str, y: &str, out: &str) -> Result<()> {
        self.local(&[x, y], out, |_, v| v[0] as i128 + v[1] as i128)
    }

    /// `[out] = [x] - [y]`.
    pub fn sub_shares(&mut self, x: &str, y: &str, out: &str) -> Result<()> {
        self.local(&[x, y], out, |_, v| v[0] as i128 - v[1] as i128)
    }

    /// `[out] = k * [x]`.
    pub fn scalar_mul_shares(&mut self, k: i64, x: &str, out: &str) -> Result<()> {
        let k = self.params.reduce_plain(k as i128);
        self.local(&[x], out, |_, v| k as i128 * v[0] as i128)
    }

    /// `[out] = [x] + c`; only party 1 offsets its share.
    pub fn add_const(&mut self, x: &str, c: i64, out: &str) -> Result<()> {
        let c = self.params.reduce_plain(c as i128);
        self.local(&[x], out, |i, v| v[0] as i128 + if i == 0 { c as i128 } else { 0 })
    }

    /// Every party broadcasts its share of `id`; each sums what it receives.
    pub fn open(&mut self, id: &str) -> Result<OpenedValue> {
        let m = self.parties.len();
        let own = (0..m).map(|i| self.share_of(i, id)).collect::<Result<Vec<_>>>()?;
        for (i, &share) in own.iter().enumerate() {
            for j in (0..m).filter(|&j| j != i) {
                self.bus.send(&party_endpoint(i), &party_endpoint(j), &Payload::Opening { value_id: id.to_string(), share })?;
            }
        }
        let mut views = Vec::with_capacity(m);
        for (j, &mine) in own.iter().enumerate() {
            let mut acc = mine as i128;
            for i in (0..m).filter(|&i| i != j) {
                let env = self
                    .bus
                    .recv(&party_endpoint(j), &party_endpoint(i))
                    .map_err(|e| Error::Abort(format!("opening {id:?}: {e}")))?;
                match env.payload()? {
                    Payload::Opening { value_id, share } if value_id == id => acc += share as i128,
                    other => return Err(Error::Abort(format!("opening {id:?}: unexpected {other:?}"))),
                }
            }
            views.push(self.params.reduce_plain(acc));
        }
        if views.iter().any(|&v| v != views[0]) {
            return Err(Error::Abort(format!("parties disagree on opening of {id:?}")));
        }
        self.rounds += 1;
        Ok(OpenedValue { value_id: id.to_string(), value: views[0], parties: m })
    }

    /// Multiplies with the lowest-numbered fresh triple. Returns the triple used.
    pub fn beaver_mul(&mut self, x: &str, y: &str, out: &str) -> Result<TripleId> {
        let id = *self.parties[0]
            .triples
            .keys()
            .next()
            .ok_or(Error::Depleted { needed: 1, available: 0 })?;
        self.beaver_mul_with(id, x, y, out)?;
        Ok(id)
    }

    /// Multiplies using triple `triple_id`, which is consumed.
    pub fn beaver_mul_with(&mut self, triple_id: TripleId, x: &str, y: &str, out: &str) -> Result<()> {
        if self.consumed.contains(&triple_id) {
            return Err(Error::TripleReused(triple_id));
        }
        if !self.parties.iter().all(|p| p.triples.contains_key(&triple_id)) {
            return Err(Error::Abort(format!("triple {triple_id} is not held by every party")));
        }
        // Mark first: an aborted multiplication must not leave the triple reusable.
        self.consumed.insert(triple_id);
        let shares: Vec<[i64; 3]> =
            self.parties.iter_mut().map(|p| p.triples.remove(&triple_id).expect("checked")).collect();
        let (a_id, b_id, c_id) = (self.fresh_id("a"), self.fresh_id("b"), self.fresh_id("c"));
        for (p, s) in self.parties.iter_mut().zip(&shares) {
            p.dict.insert(a_id.clone(), s[0]);
            p.dict.insert(b_id.clone(), s[1]);
            p.dict.insert(c_id.clone(), s[2]);
        }
        let (rho_id, eps_id) = (self.fresh_id("rho"), self.fresh_id("eps"));
        self.sub_shares(x, &a_id, &rho_id)?;
        self.sub_shares(y, &b_id, &eps_id)?;
        let rho = self.open(&rho_id)?.value as i128;
        let eps = self.open(&eps_id)?.value as i128;
        self.local(&[&c_id, &a_id, &b_id], out, |i, v| {
            v[0] as i128 + eps * v[1] as i128 + rho * v[2] as i128 + if i == 0 { rho * eps } else { 0 }
        })?;
        for p in &mut self.parties {
            for id in [&a_id, &b_id, &c_id, &rho_id, &eps_id] {
                p.dict.shares.remove(id.as_str());
            }
        }
        Ok(())
    }

    /// Secure `(b, w) . (1, x)^T` with `(b, w)` owned by party 1 and `x` by party 2.
    /// The leading 1 is the public constant `[1]`; every one of the `len(x) + 1`
    /// products, the bias term included, spends one triple.
    pub fn dot_product<R: Rng + ?Sized>(
        &mut self,
        bias: i64,
        weights: &[i64],
        x: &[i64],
        rng: &mut R,
    ) -> Result<DotProduct> {
        if weights.len() != x.len() {
            return Err(Error::Params(format!("{} weights for {} inputs", weights.len(), x.len())));
        }
        let needed = x.len() + 1;
        if self.available_triples() < needed {
            return Err(Error::Depleted { needed, available: self.available_triples() });
        }
        let rounds_before = self.rounds;
        let ns = self.fresh_id("dot");
        self.share_input(0, &format!("{ns}/b"), bias, rng)?;
        for (i, &w) in weights.iter().enumerate() {
            self.share_input(0, &format!("{ns}/w{i}"), w, rng)?;
        }
        for (i, &v) in x.iter().enumerate() {
            self.share_input(1, &format!("{ns}/x{i}"), v, rng)?;
        }
        self.constant(&format!("{ns}/one"), 0)?;
        self.add_const(&format!("{ns}/one"), 1, &format!("{ns}/one"))?;

        let acc = format!("{ns}/acc");
        let mut triples = vec![self.beaver_mul(&format!("{ns}/b"), &format!("{ns}/one"), &acc)?];
        for i in 0..x.len() {
            let prod = format!("{ns}/p{i}");
            triples.push(self.beaver_mul(&format!("{ns}/w{i}"), &format!("{ns}/x{i}"), &prod)?);
            self.add_shares(&acc, &prod, &acc)?;
        }
        let opened = self.open(&acc)?;
        Ok(DotProduct { value: opened.value, triples, rounds: self.rounds - rounds_before })
    }
}

/// Result of [`OnlineSession::dot_product`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DotProduct {
    pub value: i64,
    pub triples: Vec<TripleId>,
    pub rounds: u64,
}
