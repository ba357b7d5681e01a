//! Secure affine layer `(b, w) . (1, x)`: party 1 holds the bias and weights,
//! party 2 holds the input vector.
//!
//! cargo run --example dot_product

use beaver_forge::pipeline::Pipeline;
use beaver_forge::{AheParams, MasterSeed};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = AheParams::standard();
    let (bias, w, x) = (4, vec![1, 2, 3], vec![5, 6, 7]);

    let mut pipe = Pipeline::new(&params, 2, 2, MasterSeed::from_u64(5))?;
    pipe.provision(w.len() + 1)?;
    let r = pipe.dot_product(bias, &w, &x)?;
    println!("({bias}, {w:?}) . (1, {x:?}) = {} using triples {:?}", r.value, r.triples);

    // A longer random instance, checked against the cleartext result.
    let len = 64;
    let mut rng = MasterSeed::from_u64(6).derive("inputs", 0);
    let w: Vec<i64> = (0..len).map(|_| params.sample_plain(&mut rng) % 100).collect();
    let x: Vec<i64> = (0..len).map(|_| params.sample_plain(&mut rng) % 100).collect();
    pipe.provision(len + 1)?;
    let r = pipe.dot_product(-17, &w, &x)?;
    let clear = params.reduce_plain(-17 + w.iter().zip(&x).map(|(&a, &b)| a as i128 * b as i128).sum::<i128>());
    println!("length {len}: secure {} vs cleartext {clear}, {} rounds", r.value, r.rounds);
    Ok(())
}
