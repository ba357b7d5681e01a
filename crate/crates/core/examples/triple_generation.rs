//! Generate a batch of Beaver triples and check every one of them.
//!
//! cargo run --release --example triple_generation -- 100000

use std::time::Instant;

use beaver_forge::triplegen::{reconstruct_triple, stream_digest, triple_is_valid, TripleGenerator};
use beaver_forge::{AheParams, MasterSeed};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let count: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(10_000);
    let params = AheParams::standard();
    let generator = TripleGenerator::new(&params, MasterSeed::from_u64(1));

    let start = Instant::now();
    let triples = generator.batch_generate(0, count)?;
    let secs = start.elapsed().as_secs_f64();
    let valid = triples.iter().filter(|(a, b)| triple_is_valid(&params, &[*a, *b])).count();

    let (alice, bob) = &triples[0];
    let (a, b, c) = reconstruct_triple(&params, &[*alice, *bob]);
    println!("triple 0: alice {alice:?}");
    println!("          bob   {bob:?}");
    println!("          a = {a}, b = {b}, c = {c}, a*b mod t = {}", params.reduce_plain(a as i128 * b as i128));
    println!("{valid}/{count} valid, {secs:.3} s, {:.0} triples/s", count as f64 / secs);
    println!("stream digest {}", stream_digest(&triples));
    Ok(())
}
