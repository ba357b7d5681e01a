//! Encryption and triple-generation throughput.

use std::time::Instant;

use serde::Serialize;

use crate::ahe::{encrypt, keygen, AheParams};
use crate::error::Result;
use crate::seed::MasterSeed;
use crate::triplegen::TripleGenerator;

/// Reference rate of a pure-Python implementation at the default parameters:
/// one million encryptions in about 300 seconds.
pub const REFERENCE_ENC_PER_SEC: f64 = 1_000_000.0 / 300.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EncBench {
    pub count: u64,
    pub seconds: f64,
    pub enc_per_sec: f64,
    pub reference_enc_per_sec: f64,
    /// `enc_per_sec / reference_enc_per_sec`; informational only.
    pub ratio_to_reference: f64,
    /// Sum of all constant coefficients, so the work cannot be optimised away.
    pub checksum: i64,
}

fn rate(count: u64, seconds: f64) -> f64 {
    if count == 0 || seconds <= 0.0 {
        0.0
    } else {
        count as f64 / seconds
    }
}

/// Encrypts `count` uniform plaintexts on one thread.
pub fn bench_encryption(params: &AheParams, count: u64, seed: MasterSeed) -> Result<EncBench> {
    let (pk, _) = keygen(params, &mut seed.derive("bench-keygen", 0));
    let mut rng = seed.derive("bench-enc", 0);
    let mut checksum = 0i64;
    let start = Instant::now();
    for _ in 0..count {
        let m = params.sample_plain(&mut rng);
        let ct = encrypt(&pk, m, &mut rng)?;
        checksum = checksum.wrapping_add(ct.c0().coeffs()[0]);
    }
    let seconds = start.elapsed().as_secs_f64();
    let enc_per_sec = rate(count, seconds);
    Ok(EncBench {
        count,
        seconds,
        enc_per_sec,
        reference_enc_per_sec: REFERENCE_ENC_PER_SEC,
        ratio_to_reference: enc_per_sec / REFERENCE_ENC_PER_SEC,
        checksum,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TripleBench {
    pub count: u64,
    pub seconds: f64,
    pub triples_per_sec: f64,
    pub digest: String,
}

/// Generates `count` triples with the parallel batch generator.
pub fn bench_triples(params: &AheParams, count: u64, seed: MasterSeed) -> Result<TripleBench> {
    let generator = TripleGenerator::new(params, seed);
    let start = Instant::now();
    let triples = generator.batch_generate(0, count as usize)?;
    let seconds = start.elapsed().as_secs_f64();
    Ok(TripleBench {
        count,
        seconds,
        triples_per_sec: rate(count, seconds),
        digest: crate::triplegen::stream_digest(&triples),
    })
}
