//! Full pipeline: generate triples, dispense to three servers, and multiply
//! secret inputs in a three-party online phase.
//!
//! cargo run --example spdz_multiply -- 3 4

use beaver_forge::pipeline::Pipeline;
use beaver_forge::{AheParams, MasterSeed};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<i64> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let (x, y) = match args[..] {
        [x, y] => (x, y),
        _ => (3, 4),
    };
    let params = AheParams::standard();
    let mut pipe = Pipeline::new(&params, 3, 3, MasterSeed::from_u64(11))?;
    pipe.provision(4)?;

    let r = pipe.mul(x, y)?;
    println!("[{x}] * [{y}] opens to {} using triple {} in {} rounds", r.value, r.triple_id, r.rounds);

    let stats = pipe.stats();
    println!("triples: {} generated, {} consumed, {} left", stats.triples_generated, stats.triples_consumed, stats.triples_available);
    for (endpoint, t) in &stats.traffic {
        println!("{endpoint:>9}: {:5} messages, {:7} bytes sent", t.messages_sent, t.bytes_sent);
    }
    println!("transcript digest {}", stats.transcript_digest);
    Ok(())
}
