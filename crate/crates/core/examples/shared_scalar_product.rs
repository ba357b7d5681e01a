//! Two parties compute additive shares of an inner product over the message bus.
//! Alice holds one vector and the secret key, Bob holds the other vector.
//!
//! cargo run --example shared_scalar_product

use beaver_forge::ahe::keygen;
use beaver_forge::transport::Bus;
use beaver_forge::triplegen::{ideal_ssp, SspInputs, SspSession};
use beaver_forge::{AheParams, MasterSeed};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = AheParams::standard();
    let seed = MasterSeed::from_u64(7);
    let (pk, sk) = keygen(&params, &mut seed.derive("keygen", 0));

    let alice_vec: Vec<i64> = (1..=8).collect();
    let bob_vec: Vec<i64> = (1..=8).map(|i| 100 * i - 450).collect();
    let inputs = SspInputs::new(&params, alice_vec, bob_vec)?;

    let mut bus = Bus::new(seed);
    let outcome = {
        let mut session = SspSession::new(&mut bus, pk, sk)?;
        session.run(&inputs, &mut seed.derive("alice", 0), &mut seed.derive("bob", 0))?
    };
    let combined = params.reduce_plain(outcome.s_a as i128 + outcome.s_b as i128);
    println!("s_A = {}, s_B = {}", outcome.s_a, outcome.s_b);
    println!("s_A + s_B = {combined}, inner product mod t = {}", inputs.inner_product(&params));

    let (ia, ib) = ideal_ssp(&params, &inputs, &mut seed.derive("ideal", 0));
    println!("ideal functionality reconstructs to {}", params.reduce_plain(ia as i128 + ib as i128));

    for (name, stats) in bus.all_stats() {
        println!("{name}: sent {} messages, {} bytes", stats.messages_sent, stats.bytes_sent);
    }
    Ok(())
}
