//! Encryption throughput at the default parameters.
//!
//! cargo run --release --example bench_encryption -- 1000000

use beaver_forge::bench::{bench_encryption, bench_triples};
use beaver_forge::{AheParams, MasterSeed};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let count: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1_000_000);
    let params = AheParams::standard();
    let seed = MasterSeed::from_u64(8);

    let enc = bench_encryption(&params, count, seed)?;
    println!("{} encryptions in {:.3} s: {:.0} enc/s", enc.count, enc.seconds, enc.enc_per_sec);
    println!("reference pure-Python rate: {:.0} enc/s ({:.0}x)", enc.reference_enc_per_sec, enc.ratio_to_reference);

    let triples = bench_triples(&params, count / 10, seed)?;
    println!("{} triples in {:.3} s: {:.0} triples/s", triples.count, triples.seconds, triples.triples_per_sec);
    Ok(())
}
