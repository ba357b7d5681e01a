//! Distribution checks: everything a party sees that should look uniform does.

mod common;

use beaver_forge::ahe::keygen;
use beaver_forge::dispense::split_additive;
use beaver_forge::ring::{sample_gaussian, sample_uniform, DiscreteGaussian};
use beaver_forge::spdz::OnlineSession;
use beaver_forge::transport::{Bus, Payload, PayloadKind};
use beaver_forge::triplegen::{ideal_btg, Alice, AliceInput, Bob, SspSession};
use beaver_forge::{AheParams, MasterSeed};
use common::{chi_square_p, joint_uniform_p, uniform_p, ALPHA};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

const BUCKETS: usize = 16;

#[test]
fn bucket_probabilities_sum_to_one() {
    let p = common::bucket_probs(32843, BUCKETS);
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn ring_uniform_sampler() {
    let params = AheParams::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(100);
    let values: Vec<i64> = (0..4000).flat_map(|_| sample_uniform(params.ring(), &mut rng).coeffs().to_vec()).collect();
    let p = uniform_p(values, params.q(), BUCKETS);
    assert!(p > ALPHA, "p = {p}");
}

#[test]
fn plaintext_sampler() {
    let params = AheParams::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(101);
    let p = uniform_p((0..50_000).map(|_| params.sample_plain(&mut rng)), params.t(), BUCKETS);
    assert!(p > ALPHA, "p = {p}");
}

#[test]
fn gaussian_matches_its_table() {
    let params = AheParams::standard();
    let sigma = params.ring().sigma();
    let bound = params.ring().error_bound() as i64;
    let mut rng = ChaCha20Rng::seed_from_u64(102);
    let mut counts = vec![0u64; (2 * bound + 1) as usize];
    for _ in 0..5000 {
        for &c in sample_gaussian(params.ring(), &mut rng).coeffs() {
            counts[(c + bound) as usize] += 1;
        }
    }
    let weights: Vec<f64> = (-bound..=bound).map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let z: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|w| w / z).collect();
    // Merge the sparse tails so each cell expects a reasonable count.
    let (mut obs, mut exp) = (Vec::new(), Vec::new());
    let (mut o_acc, mut e_acc) = (0u64, 0.0);
    for (o, e) in counts.iter().zip(&probs) {
        o_acc += o;
        e_acc += e;
        if e_acc * 80_000.0 >= 50.0 {
            obs.push(o_acc);
            exp.push(e_acc);
            o_acc = 0;
            e_acc = 0.0;
        }
    }
    *obs.last_mut().unwrap() += o_acc;
    *exp.last_mut().unwrap() += e_acc;
    let p = chi_square_p(&obs, &exp);
    assert!(p > ALPHA, "p = {p}");
    assert_eq!(DiscreteGaussian::new(sigma, params.ring().tail_bound()).support_bound(), bound);
}

#[test]
fn ideal_triple_shares_are_uniform() {
    let params = AheParams::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(103);
    let triples: Vec<_> = (0..30_000).map(|_| ideal_btg(&params, 3, &mut rng)).collect();
    for k in 0..3 {
        let p = uniform_p(triples.iter().map(|t| t.shares[0][k]), params.t(), BUCKETS);
        assert!(p > ALPHA, "component {k}: p = {p}");
    }
    let p = uniform_p(triples.iter().map(|t| t.c), params.t(), BUCKETS);
    assert!(p > ALPHA, "c: p = {p}");
}

#[test]
fn any_two_of_three_splits_look_uniform() {
    let params = AheParams::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(104);
    let splits: Vec<Vec<i64>> = (0..40_000).map(|_| split_additive(&params, 12345, 3, &mut rng).unwrap()).collect();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let p = joint_uniform_p(splits.iter().map(|s| (s[i], s[j])), params.t(), 4);
        assert!(p > ALPHA, "pair ({i}, {j}): p = {p}");
    }
}

#[test]
fn input_shares_are_uniform() {
    let params = AheParams::standard();
    let mut session = OnlineSession::new(&params, 3, MasterSeed::from_u64(105)).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(105);
    let runs = 20_000;
    for k in 0..runs {
        session.share_input(0, &format!("v{k}"), 7, &mut rng).unwrap();
    }
    for party in 0..3 {
        let p = uniform_p((0..runs).map(|k| session.dict(party).get(&format!("v{k}")).unwrap()), params.t(), BUCKETS);
        assert!(p > ALPHA, "party {party}: p = {p}");
    }
}

#[test]
fn alice_output_is_masked() {
    // Fixed inputs: only Bob's mask varies, and Alice's share must cover Z_t.
    let params = AheParams::standard();
    let mut rng = ChaCha20Rng::seed_from_u64(106);
    let (pk, sk) = keygen(&params, &mut rng);
    let s_a: Vec<i64> = (0..20_000)
        .map(|_| {
            let mut alice = Alice::new(pk.clone(), sk.clone(), AliceInput::Given(vec![1234])).unwrap();
            let mut bob = Bob::new(pk.clone(), vec![-4321]).unwrap();
            let c_a = alice.round1(&mut rng).unwrap();
            let (c_b, _) = bob.round2(&c_a, &mut rng).unwrap();
            alice.round3(&c_b).unwrap()
        })
        .collect();
    let p = uniform_p(s_a, params.t(), BUCKETS);
    assert!(p > ALPHA, "p = {p}");
}

#[test]
fn ciphertexts_on_the_wire_look_uniform() {
    let params = AheParams::standard();
    let seed = MasterSeed::from_u64(107);
    let (pk, sk) = keygen(&params, &mut seed.derive("keygen", 0));
    let mut bus = Bus::new(seed);
    {
        let mut session = SspSession::new(&mut bus, pk, sk).unwrap();
        for id in 0..3000 {
            session.triple(id, &mut seed.derive("a", id), &mut seed.derive("b", id)).unwrap();
        }
    }
    // Per coefficient position, per component, for each direction of travel.
    for from in ["alice", "bob"] {
        let cts: Vec<_> = bus
            .transcript()
            .envelopes
            .iter()
            .filter(|e| e.kind == PayloadKind::Ciphertext && e.from == from)
            .flat_map(|e| match e.payload().unwrap() {
                Payload::Ciphertexts(v) => v,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(cts.len(), 3000);
        for pos in 0..params.n() {
            for (name, pick) in [("c0", 0), ("c1", 1)] {
                let values = cts.iter().map(|c| if pick == 0 { c.c0().coeffs()[pos] } else { c.c1().coeffs()[pos] });
                let p = uniform_p(values, params.q(), BUCKETS);
                assert!(p > ALPHA, "{from} {name}[{pos}]: p = {p}");
            }
        }
    }
}
