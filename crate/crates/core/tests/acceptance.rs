//! Acceptance criteria, one PASS/FAIL line each. Run with
//! `cargo test --release --test acceptance`.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use beaver_forge::ahe::{add_ct, decrypt, encrypt, keygen, noise, noise_budget, scalar_mul_plain};
use beaver_forge::bench::{bench_encryption, REFERENCE_ENC_PER_SEC};
use beaver_forge::pipeline::Pipeline;
use beaver_forge::spdz::OnlineSession;
use beaver_forge::transport::{Payload, PayloadKind};
use beaver_forge::triplegen::{
    ideal_btg_with, ideal_ssp, stream_digest, triple_is_valid, Alice, AliceInput, Bob, SspInputs, TripleGenerator,
};
use beaver_forge::{AheParams, Ciphertext, MasterSeed, RingElement, SecretKey};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    ensure(elapsed <= limit, || format!("{what} took {elapsed:.1?}, limit {limit:?}"))
}

fn e<T: std::fmt::Display>(err: T) -> String {
    err.to_string()
}

/// Criterion 1: Dec(Enc(m)) = m for 10^4 uniform m, in under 10 s.
fn ahe_correctness() -> Check {
    let start = Instant::now();
    let params = AheParams::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let (pk, sk) = keygen(&params, &mut rng);
    let mut failures = 0;
    for _ in 0..10_000 {
        let m = params.sample_plain(&mut rng);
        if decrypt(&sk, &encrypt(&pk, m, &mut rng).map_err(e)?).map_err(e)? != m {
            failures += 1;
        }
    }
    ensure(failures == 0, || format!("{failures} of 10000 decryptions wrong"))?;
    within(start.elapsed(), Duration::from_secs(10), "10^4 round trips")?;
    Ok(format!("10000/10000 exact in {:.2?}", start.elapsed()))
}

/// Criterion 2: Ciphertext addition and plaintext scaling, 10^4 cases including k = +-(t-1)/2, under 30 s.
fn homomorphism() -> Check {
    let start = Instant::now();
    let params = AheParams::standard();
    let h = params.plain_half();
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let (pk, sk) = keygen(&params, &mut rng);
    let mut extreme = 0;
    for i in 0..10_000 {
        let (m1, m2) = (params.sample_plain(&mut rng), params.sample_plain(&mut rng));
        let k = match i % 4 {
            0 => h,
            1 => -h,
            _ => params.sample_plain(&mut rng),
        };
        extreme += (k.abs() == h) as u32;
        let (c1, c2) = (encrypt(&pk, m1, &mut rng).map_err(e)?, encrypt(&pk, m2, &mut rng).map_err(e)?);
        let sum = decrypt(&sk, &add_ct(&c1, &c2).map_err(e)?).map_err(e)?;
        ensure(sum == params.reduce_plain(m1 as i128 + m2 as i128), || format!("add: {m1} + {m2} gave {sum}"))?;
        let prod = decrypt(&sk, &scalar_mul_plain(k, &c1).map_err(e)?).map_err(e)?;
        ensure(prod == params.reduce_plain(k as i128 * m1 as i128), || format!("scale: {k} * {m1} gave {prod}"))?;
    }
    within(start.elapsed(), Duration::from_secs(30), "10^4 homomorphism cases")?;
    Ok(format!("10000 sums and 10000 scalings exact ({extreme} with |k| = {h}) in {:.2?}", start.elapsed()))
}

/// Exact `c0 + c1 * s - m` in arbitrary precision, centered mod q.
fn bigint_noise(sk: &SecretKey, ct: &Ciphertext, m: i64) -> Vec<BigInt> {
    let (c0, c1, s) = (ct.c0().coeffs(), ct.c1().coeffs(), sk.s().coeffs());
    let n = c0.len();
    let q = BigInt::from(sk.params().q());
    let half = &q / 2;
    (0..n)
        .map(|k| {
            let mut acc = BigInt::from(c0[k]) - if k == 0 { BigInt::from(m) } else { BigInt::from(0) };
            for (i, &ci) in c1.iter().enumerate() {
                let term = BigInt::from(ci) * BigInt::from(s[(k + n - i) % n]);
                if i <= k {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
            let mut r = ((acc % &q) + &q) % &q;
            if r > half {
                r -= &q;
            }
            r
        })
        .collect()
}

fn budget_bits(v: &[BigInt], q: u64) -> i64 {
    let max = v.iter().map(|c| c.magnitude().clone()).max().unwrap();
    let bits_q = (q / 2).ilog2() as i64;
    let bits_v = if max <= 1u32.into() { 0 } else { (max - 1u32).bits() as i64 };
    bits_q - bits_v
}

/// Criterion 3: Exact noise of fresh, worst-case scaled and 100-term sums stays inside the budget;
/// an over-noised ciphertext decrypts wrongly.
fn noise_oracle() -> Check {
    let params = AheParams::standard();
    let h = params.plain_half();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let (pk, sk) = keygen(&params, &mut rng);
    let q = params.q();
    let mut report = Vec::new();
    let mut check = |name: &str, ct: &Ciphertext, m: i64| -> Result<(), String> {
        let oracle = bigint_noise(&sk, ct, m);
        let lib: Vec<BigInt> = noise(&sk, ct, Some(m)).map_err(e)?.into_iter().map(BigInt::from).collect();
        ensure(oracle == lib, || format!("{name}: library noise differs from the big-integer oracle"))?;
        let bits = budget_bits(&oracle, q);
        ensure(bits == noise_budget(&sk, ct, Some(m)).map_err(e)?, || format!("{name}: budget mismatch"))?;
        ensure(bits > 0, || format!("{name}: budget {bits}"))?;
        ensure(decrypt(&sk, ct).map_err(e)? == m, || format!("{name}: wrong decryption"))?;
        report.push(format!("{name} {bits} bits"));
        Ok(())
    };

    let fresh = encrypt(&pk, h, &mut rng).map_err(e)?;
    check("fresh", &fresh, h)?;
    let scaled = scalar_mul_plain(h, &fresh).map_err(e)?;
    check("worst scalar", &scaled, params.reduce_plain(h as i128 * h as i128))?;
    let mut total = 0i128;
    let mut acc: Option<Ciphertext> = None;
    for _ in 0..100 {
        let m = params.sample_plain(&mut rng);
        total += m as i128;
        let c = encrypt(&pk, m, &mut rng).map_err(e)?;
        acc = Some(match acc {
            None => c,
            Some(a) => add_ct(&a, &c).map_err(e)?,
        });
    }
    check("100-term sum", acc.as_ref().unwrap(), params.reduce_plain(total))?;

    // Push the constant coefficient past q/2 in steps of t so only the wraparound breaks decryption.
    let m = 777;
    let ct = encrypt(&pk, m, &mut rng).map_err(e)?;
    let v0 = bigint_noise(&sk, &ct, m)[0].clone();
    let t = params.t() as i128;
    let target = (q / 2) as i128 + t;
    let shift = (target - i128::try_from(v0).unwrap()) / t * t;
    let mut c0 = ct.c0().coeffs().to_vec();
    let (qi, shifted) = (q as i128, c0[0] as i128 + shift);
    let r = shifted.rem_euclid(qi);
    c0[0] = (if r > qi / 2 { r - qi } else { r }) as i64;
    let bad = Ciphertext::from_parts(&params, RingElement::from_coeffs(params.ring(), c0).map_err(e)?, ct.c1().clone())
        .map_err(e)?;
    let got = decrypt(&sk, &bad).map_err(e)?;
    let budget = noise_budget(&sk, &bad, Some(m)).map_err(e)?;
    ensure(got != m, || "over-noised ciphertext still decrypted correctly".into())?;
    ensure(budget <= 0, || format!("over-noised budget reported as {budget}"))?;
    report.push(format!("negative control decrypts to {got} (budget {budget})"));
    Ok(report.join(", "))
}

/// Criterion 4: 10^5 generated triples reconstruct to c = ab mod t, in under 5 minutes.
fn triple_validity() -> Check {
    let start = Instant::now();
    let params = AheParams::standard();
    let triples = TripleGenerator::new(&params, MasterSeed::from_u64(4)).batch_generate(0, 100_000).map_err(e)?;
    let bad = triples.iter().filter(|(a, b)| !triple_is_valid(&params, &[*a, *b])).count();
    ensure(bad == 0, || format!("{bad} invalid triples"))?;
    within(start.elapsed(), Duration::from_secs(300), "10^5 triples")?;
    let secs = start.elapsed().as_secs_f64();
    Ok(format!("100000/100000 valid in {secs:.2} s ({:.0} triples/s)", 1e5 / secs))
}

/// Criterion 5: Real protocol and ideal functionality agree on 10^4 inputs; s_A is uniform
/// for fixed inputs over 10^5 runs.
fn ideal_real() -> Check {
    let params = AheParams::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let (pk, sk) = keygen(&params, &mut rng);
    let lengths = [1usize, 8, 64];
    for i in 0..10_000 {
        let l = lengths[i % 3];
        let xa: Vec<i64> = (0..l).map(|_| params.sample_plain(&mut rng)).collect();
        let xb: Vec<i64> = (0..l).map(|_| params.sample_plain(&mut rng)).collect();
        let inputs = SspInputs::new(&params, xa.clone(), xb.clone()).map_err(e)?;
        let mut alice = Alice::new(pk.clone(), sk.clone(), AliceInput::Given(xa)).map_err(e)?;
        let mut bob = Bob::new(pk.clone(), xb).map_err(e)?;
        let c_a = alice.round1(&mut rng).map_err(e)?;
        let (c_b, s_b) = bob.round2(&c_a, &mut rng).map_err(e)?;
        let s_a = alice.round3(&c_b).map_err(e)?;
        let (ia, ib) = ideal_ssp(&params, &inputs, &mut rng);
        let real = params.reduce_plain(s_a as i128 + s_b as i128);
        let ideal = params.reduce_plain(ia as i128 + ib as i128);
        ensure(real == ideal && real == inputs.inner_product(&params), || {
            format!("run {i} (l = {l}): real {real}, ideal {ideal}")
        })?;
    }

    let (xa, xb) = (params.sample_plain(&mut rng), params.sample_plain(&mut rng));
    let mut counts = vec![0u64; 16];
    for _ in 0..100_000 {
        let mut alice = Alice::new(pk.clone(), sk.clone(), AliceInput::Given(vec![xa])).map_err(e)?;
        let mut bob = Bob::new(pk.clone(), vec![xb]).map_err(e)?;
        let c_a = alice.round1(&mut rng).map_err(e)?;
        let (c_b, _) = bob.round2(&c_a, &mut rng).map_err(e)?;
        counts[common::bucket(alice.round3(&c_b).map_err(e)?, params.t(), 16)] += 1;
    }
    let p = common::chi_square_p(&counts, &common::bucket_probs(params.t(), 16));
    ensure(p > common::ALPHA, || format!("s_A chi-square p = {p:.2e}"))?;
    Ok(format!("10000 runs agree (l in {lengths:?}); s_A uniform, p = {p:.3}"))
}

/// Criterion 6: generate -> dispense -> multiply for l in {2, 3, 5, 10}, 10^4 products each;
/// 10^3 dot products up to length 64.
fn end_to_end() -> Check {
    let start = Instant::now();
    let params = AheParams::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let mut parts = Vec::new();
    for l in [2usize, 3, 5, 10] {
        let mut pipe = Pipeline::new(&params, l, l, MasterSeed::from_u64(60 + l as u64)).map_err(e)?;
        pipe.set_recording(false);
        pipe.provision(10_000).map_err(e)?;
        for _ in 0..10_000 {
            let (x, y) = (params.sample_plain(&mut rng), params.sample_plain(&mut rng));
            let got = pipe.mul(x, y).map_err(e)?.value;
            ensure(got == params.reduce_plain(x as i128 * y as i128), || format!("l = {l}: {x} * {y} opened {got}"))?;
        }
        parts.push(format!("l={l}: 10000/10000"));
    }

    let mut pipe = Pipeline::new(&params, 3, 3, MasterSeed::from_u64(66)).map_err(e)?;
    pipe.set_recording(false);
    let mut longest = 0;
    for i in 0..1000 {
        let len = if i == 0 { 64 } else { rng.gen_range(1..=64) };
        longest = longest.max(len);
        let bias = params.sample_plain(&mut rng);
        let w: Vec<i64> = (0..len).map(|_| params.sample_plain(&mut rng)).collect();
        let x: Vec<i64> = (0..len).map(|_| params.sample_plain(&mut rng)).collect();
        pipe.provision(len + 1).map_err(e)?;
        let got = pipe.dot_product(bias, &w, &x).map_err(e)?.value;
        let clear = params.reduce_plain(bias as i128 + w.iter().zip(&x).map(|(&a, &b)| a as i128 * b as i128).sum::<i128>());
        ensure(got == clear, || format!("dot product {i} (len {len}): {got} vs {clear}"))?;
    }
    parts.push(format!("1000/1000 dot products up to length {longest}"));
    Ok(format!("{} in {:.1?}", parts.join(", "), start.elapsed()))
}

/// Criterion 7: x = 3, y = 4 with triple (1, 2, 2) opens rho = 2, eps = 2 and xy = 12.
fn worked_identity() -> Check {
    let params = AheParams::standard();
    let (x, y, a, b, c) = (3i64, 4i64, 1i64, 2i64, 2i64);
    let (rho, eps) = (x - a, y - b);
    let direct = c + eps * a + rho * b + rho * eps;
    ensure((rho, eps, direct) == (2, 2, 12), || format!("algebra gives rho {rho}, eps {eps}, xy {direct}"))?;

    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let mut s = OnlineSession::new(&params, 3, MasterSeed::from_u64(7)).map_err(e)?;
    let triple = ideal_btg_with(&params, 3, a, b, &mut rng);
    ensure(triple.c == c, || format!("ideal triple has c = {}", triple.c))?;
    s.add_triple(0, &triple.shares).map_err(e)?;
    s.share_input(0, "x", x, &mut rng).map_err(e)?;
    s.share_input(1, "y", y, &mut rng).map_err(e)?;
    s.beaver_mul("x", "y", "xy").map_err(e)?;
    let opened = s.open("xy").map_err(e)?.value;

    // Recover every opened value from the broadcast shares on the wire.
    let mut shares: BTreeMap<String, BTreeMap<String, i64>> = BTreeMap::new();
    for env in s.bus().transcript().envelopes.iter().filter(|e| e.kind == PayloadKind::Opening) {
        if let Payload::Opening { value_id, share } = env.payload().map_err(e)? {
            shares.entry(value_id).or_default().insert(env.from.clone(), share);
        }
    }
    let opened_on_wire: Vec<i64> =
        shares.values().map(|m| params.reduce_plain(m.values().map(|&v| v as i128).sum())).collect();
    ensure(opened_on_wire.iter().filter(|&&v| v == 2).count() == 2, || {
        format!("openings on the wire: {opened_on_wire:?}")
    })?;
    ensure(opened == 12, || format!("session opened {opened}"))?;
    Ok(format!("rho = {rho}, eps = {eps}, [xy] opens to {opened}"))
}

/// Criterion 8: 10^6 encryptions, twice; both rates within 3x of each other.
fn benchmark() -> Check {
    let params = AheParams::standard();
    let r1 = bench_encryption(&params, 1_000_000, MasterSeed::from_u64(81)).map_err(e)?;
    let r2 = bench_encryption(&params, 1_000_000, MasterSeed::from_u64(82)).map_err(e)?;
    let ratio = r1.enc_per_sec.max(r2.enc_per_sec) / r1.enc_per_sec.min(r2.enc_per_sec);
    ensure(r1.count == 1_000_000 && r2.count == 1_000_000, || "incomplete run".into())?;
    ensure(ratio <= 3.0, || format!("rates {:.0} and {:.0} enc/s differ by {ratio:.2}x", r1.enc_per_sec, r2.enc_per_sec))?;
    Ok(format!(
        "{:.0} and {:.0} enc/s ({:.2} s, {:.2} s; spread {ratio:.2}x); reference {REFERENCE_ENC_PER_SEC:.0} enc/s, informational",
        r1.enc_per_sec, r2.enc_per_sec, r1.seconds, r2.seconds
    ))
}

/// Criterion 9: Fixed seed gives identical transcript and triple-stream digests.
fn determinism() -> Check {
    let params = AheParams::standard();
    let transcript = |seed: u64| -> Result<String, String> {
        let mut p = Pipeline::new(&params, 3, 3, MasterSeed::from_u64(seed)).map_err(e)?;
        p.provision(20).map_err(e)?;
        for i in 0..10 {
            p.mul(i, i + 1).map_err(e)?;
        }
        p.dot_product(1, &[2, 3, 4], &[5, 6, 7]).map_err(e)?;
        let bus = p.into_bus();
        ensure(bus.digest() == bus.transcript().digest(), || "running digest differs from transcript".into())?;
        Ok(bus.digest())
    };
    let stream = |seed: u64| -> Result<String, String> {
        Ok(stream_digest(&TripleGenerator::new(&params, MasterSeed::from_u64(seed)).batch_generate(0, 1000).map_err(e)?))
    };
    let (t1, t2, t3) = (transcript(9)?, transcript(9)?, transcript(10)?);
    let (s1, s2, s3) = (stream(9)?, stream(9)?, stream(10)?);
    ensure(t1 == t2, || format!("transcripts differ: {t1} vs {t2}"))?;
    ensure(s1 == s2, || format!("triple streams differ: {s1} vs {s2}"))?;
    ensure(t1 != t3 && s1 != s3, || "a different seed produced the same digest".into())?;
    Ok(format!("transcript {}.., triples {}..", &t1[..16], &s1[..16]))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("AHE correctness", ahe_correctness),
        ("homomorphism suite", homomorphism),
        ("noise-budget oracle", noise_oracle),
        ("triple validity", triple_validity),
        ("ideal/real equivalence", ideal_real),
        ("end-to-end pipeline", end_to_end),
        ("worked identity", worked_identity),
        ("benchmark reproduction", benchmark),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
