//! Encrypt, add, scale by a plaintext, decrypt, and watch the noise budget.
//!
//! cargo run --example ahe_roundtrip

use beaver_forge::ahe::{add_ct, decrypt, encrypt, keygen, noise_budget, scalar_mul_plain};
use beaver_forge::AheParams;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = AheParams::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let (pk, sk) = keygen(&params, &mut rng);
    println!("n = {}, q = {}, t = {}", params.n(), params.q(), params.t());

    let (m1, m2) = (1200, -345);
    let c1 = encrypt(&pk, m1, &mut rng)?;
    let c2 = encrypt(&pk, m2, &mut rng)?;
    println!("Dec(Enc({m1})) = {}, budget {} bits", decrypt(&sk, &c1)?, noise_budget(&sk, &c1, Some(m1))?);

    let sum = add_ct(&c1, &c2)?;
    println!("Dec(c1 + c2) = {}", decrypt(&sk, &sum)?);

    let k = params.plain_half();
    let scaled = scalar_mul_plain(k, &c1)?;
    let expected = params.reduce_plain(k as i128 * m1 as i128);
    println!(
        "Dec({k} * c1) = {} (expected {expected}), budget {} bits",
        decrypt(&sk, &scaled)?,
        noise_budget(&sk, &scaled, Some(expected))?
    );

    let mut acc = encrypt(&pk, 1, &mut rng)?;
    for _ in 1..100 {
        acc = add_ct(&acc, &encrypt(&pk, 1, &mut rng)?)?;
    }
    println!("sum of 100 encryptions of 1 = {}, budget {} bits", decrypt(&sk, &acc)?, noise_budget(&sk, &acc, Some(100))?);

    println!("wire size of one ciphertext: {} bytes", c1.encoded_len());
    println!("longest safe inner product: {}", params.max_inner_product_len());
    Ok(())
}
