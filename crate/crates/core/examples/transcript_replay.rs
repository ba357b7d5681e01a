//! Determinism and fault handling: two runs with one seed give identical
//! transcripts, the transcript survives a JSON-lines round trip, and a dropped
//! message makes the protocol abort instead of producing a triple.
//!
//! cargo run --example transcript_replay

use beaver_forge::ahe::keygen;
use beaver_forge::pipeline::Pipeline;
use beaver_forge::transport::{Bus, DropRule, PayloadKind, Transcript};
use beaver_forge::triplegen::SspSession;
use beaver_forge::{AheParams, MasterSeed};

fn run(seed: MasterSeed) -> Result<Transcript, Box<dyn std::error::Error>> {
    let mut pipe = Pipeline::new(&AheParams::standard(), 3, 3, seed)?;
    pipe.provision(2)?;
    pipe.mul(6, 7)?;
    Ok(pipe.into_bus().into_transcript())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: MasterSeed = "c0ffee".parse()?;
    let (t1, t2) = (run(seed)?, run(seed)?);
    println!("run 1: {} envelopes, digest {}", t1.envelopes.len(), t1.digest());
    println!("run 2: {} envelopes, digest {}", t2.envelopes.len(), t2.digest());

    let text = t1.to_jsonl();
    let back = Transcript::from_jsonl(&text)?;
    println!("JSON-lines round trip ({} bytes) preserves digest: {}", text.len(), back.digest() == t1.digest());
    println!("first record: {}", text.lines().nth(1).unwrap_or(""));

    let params = AheParams::standard();
    let (pk, sk) = keygen(&params, &mut seed.derive("keygen", 0));
    let mut bus = Bus::new(seed);
    bus.register("alice");
    bus.register("bob");
    bus.inject_fault(DropRule::new("bob", "alice", Some(PayloadKind::Ciphertext), 0));
    let mut session = SspSession::new(&mut bus, pk, sk)?;
    match session.triple(0, &mut seed.derive("a", 0), &mut seed.derive("b", 0)) {
        Ok(_) => println!("unexpected: triple produced despite the dropped reply"),
        Err(e) => println!("dropped reply: {e}"),
    }
    Ok(())
}
