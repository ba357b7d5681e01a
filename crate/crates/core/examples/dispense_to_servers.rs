//! Split triple shares across servers, persist the vaults, and reconstruct.
//!
//! cargo run --example dispense_to_servers

use beaver_forge::dispense::{dispense_batch, reconstruct, ServerVault};
use beaver_forge::transport::Bus;
use beaver_forge::triplegen::TripleGenerator;
use beaver_forge::{AheParams, MasterSeed};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = AheParams::standard();
    let seed = MasterSeed::from_u64(3);
    let triples = TripleGenerator::new(&params, seed).batch_generate(0, 5)?;

    let servers = 4;
    let mut bus = Bus::new(seed);
    let vaults = dispense_batch(&params, &triples, servers, &mut bus, &mut seed.derive("dispense", 0))?;

    let dir = std::env::temp_dir().join("beaver-forge-dispense-example");
    std::fs::create_dir_all(&dir)?;
    let mut reloaded = Vec::new();
    for v in &vaults {
        let path = dir.join(format!("vault-{}.jsonl", v.server_id()));
        v.save(&path)?;
        reloaded.push(ServerVault::load(v.server_id(), params.t(), &path)?);
        println!("server {}: {} ready triples -> {}", v.server_id(), v.ready_ids().len(), path.display());
    }
    for id in reloaded[0].ready_ids() {
        let (a, b, c) = reconstruct(&params, id, &reloaded)?;
        println!("triple {id}: a = {a:6}, b = {b:6}, c = {c:6}, ok = {}", params.reduce_plain(a as i128 * b as i128) == c);
    }
    println!("{} messages on the bus", bus.delivered());
    Ok(())
}
