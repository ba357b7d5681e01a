//! The whole flow on one bus: Alice and Bob generate triples, dispense them to
//! `l` servers, and the servers run the online phase as `m = l` parties.

use std::collections::BTreeMap;

use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::ahe::{keygen, AheParams, PublicKey, SecretKey};
use crate::dispense::dispense_batch;
use crate::error::{Error, Result};
use crate::seed::MasterSeed;
use crate::spdz::{DotProduct, OnlineSession};
use crate::transport::{Bus, TrafficStats};
use crate::triplegen::{triple_is_valid, SspSession, TripleId};

/// Outcome of one secure multiplication.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MulOutcome {
    pub value: i64,
    pub triple_id: TripleId,
    pub rounds: u64,
}

/// Summary counters for a pipeline run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PipelineStats {
    pub parties: usize,
    pub triples_generated: u64,
    pub triples_consumed: u64,
    pub triples_available: usize,
    pub rounds: u64,
    pub messages: u64,
    pub traffic: BTreeMap<String, TrafficStats>,
    pub transcript_digest: String,
}

#[derive(Debug)]
pub struct Pipeline {
    params: AheParams,
    seed: MasterSeed,
    pk: PublicKey,
    sk: SecretKey,
    online: OnlineSession,
    next_id: TripleId,
    batches: u64,
    consumed: u64,
    values: u64,
    input_rng: ChaCha20Rng,
}

impl Pipeline {
    /// `parties` online parties fed by `servers` vaults; the two must agree.
    pub fn new(params: &AheParams, parties: usize, servers: usize, seed: MasterSeed) -> Result<Self> {
        if parties != servers {
            return Err(Error::Mismatch(format!(
                "offline phase dispenses to {servers} servers but the online phase has {parties} parties"
            )));
        }
        if params.max_inner_product_len() < 1 {
            return Err(Error::Params("noise budget does not allow even a single-term product".into()));
        }
        let (pk, sk) = keygen(params, &mut seed.derive("alice-keygen", 0));
        let online = OnlineSession::with_bus(params, parties, Bus::new(seed))?;
        Ok(Self {
            params: params.clone(),
            seed,
            pk,
            sk,
            online,
            next_id: 0,
            batches: 0,
            consumed: 0,
            values: 0,
            input_rng: seed.derive("online-inputs", 0),
        })
    }

    pub fn params(&self) -> &AheParams {
        &self.params
    }

    pub fn public_key(&self) -> &PublicKey {
        &self.pk
    }

    pub fn session(&self) -> &OnlineSession {
        &self.online
    }

    pub fn session_mut(&mut self) -> &mut OnlineSession {
        &mut self.online
    }

    /// Stops keeping envelopes in memory; the digest still covers them.
    pub fn set_recording(&mut self, on: bool) {
        self.online.bus_mut().set_recording(on);
    }

    /// Generates `count` triples over the bus, dispenses both shares of each to
    /// the servers, and loads the ready ones into the online parties.
    pub fn provision(&mut self, count: usize) -> Result<Vec<TripleId>> {
        let first = self.next_id;
        let mut triples = Vec::with_capacity(count);
        {
            let mut ssp = SspSession::new(self.online.bus_mut(), self.pk.clone(), self.sk.clone())?;
            for id in first..first + count as u64 {
                let mut ra = self.seed.derive("triple-alice", id);
                let mut rb = self.seed.derive("triple-bob", id);
                triples.push(ssp.triple(id, &mut ra, &mut rb)?);
            }
        }
        if let Some((a, _)) = triples.iter().find(|(a, b)| !triple_is_valid(&self.params, &[*a, *b])) {
            return Err(Error::Abort(format!("generated triple {} is invalid", a.triple_id)));
        }
        let mut rng = self.seed.derive("dispense", self.batches);
        self.batches += 1;
        let servers = self.online.parties();
        let mut vaults = dispense_batch(&self.params, &triples, servers, self.online.bus_mut(), &mut rng)?;
        self.online.load_triples(&mut vaults)?;
        self.next_id += count as u64;
        Ok((first..self.next_id).collect())
    }

    fn value_ns(&mut self) -> String {
        self.values += 1;
        format!("v{}", self.values)
    }

    /// Party 1 inputs `x`, party 2 inputs `y`; returns the opened product.
    pub fn mul(&mut self, x: i64, y: i64) -> Result<MulOutcome> {
        let ns = self.value_ns();
        let (xi, yi, out) = (format!("{ns}/x"), format!("{ns}/y"), format!("{ns}/xy"));
        let before = self.online.rounds();
        self.online.share_input(0, &xi, x, &mut self.input_rng)?;
        self.online.share_input(1, &yi, y, &mut self.input_rng)?;
        let triple_id = self.online.beaver_mul(&xi, &yi, &out)?;
        self.consumed += 1;
        let value = self.online.open(&out)?.value;
        Ok(MulOutcome { value, triple_id, rounds: self.online.rounds() - before })
    }

    /// `(b, w) . (1, x)^T` with `(b, w)` from party 1 and `x` from party 2.
    pub fn dot_product(&mut self, bias: i64, weights: &[i64], x: &[i64]) -> Result<DotProduct> {
        let r = self.online.dot_product(bias, weights, x, &mut self.input_rng)?;
        self.consumed += r.triples.len() as u64;
        Ok(r)
    }

    pub fn stats(&self) -> PipelineStats {
        let bus = self.online.bus();
        PipelineStats {
            parties: self.online.parties(),
            triples_generated: self.next_id,
            triples_consumed: self.consumed,
            triples_available: self.online.available_triples(),
            rounds: self.online.rounds(),
            messages: bus.delivered(),
            traffic: bus.all_stats().clone(),
            transcript_digest: bus.digest(),
        }
    }

    pub fn into_bus(self) -> Bus {
        self.online.into_bus()
    }
}
