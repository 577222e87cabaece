use std::collections::HashSet;

use deaddrop_core::suite::DetRng;
use deaddrop_sim::ledger::{mixer_chunk, MIXER_POOL};
use deaddrop_sim::session::{run_scenario, Scenario};
use deaddrop_sim::spawn::{factory_spawn, SpawnRequest};
use deaddrop_sim::ids::{ActorId, CodeHashes, Role};
use deaddrop_sim::trace::Trace;
use ed25519_dalek::SigningKey;
use proptest::prelude::*;

fn small(seed: &str) -> Scenario {
    Scenario { seed: seed.as_bytes().to_vec(), dim: 4, bit_length: 48, ..Scenario::default() }
}

#[test]
fn identical_seeds_identical_traces() {
    let a = run_scenario(&small("replay")).unwrap();
    let b = run_scenario(&small("replay")).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.noticeboard, b.noticeboard);
    let c = run_scenario(&small("replay-2")).unwrap();
    assert_ne!(a.trace, c.trace);
}

#[test]
fn trace_text_round_trips() {
    let out = run_scenario(&small("text")).unwrap();
    assert_eq!(Trace::parse(&out.trace).unwrap().to_text(), out.trace);
}

#[test]
fn ledger_conserved_and_mixer_drained() {
    let mut s = deaddrop_sim::session::Session::new(small("conserve")).unwrap();
    s.open_deposit().unwrap();
    s.deposit().unwrap();
    let amount = s.scenario.amount;
    assert_eq!(s.world.ledger().balance(MIXER_POOL), amount);
    let hint = s.hint().unwrap();
    let (_, route) = s.discover(&hint).unwrap();
    s.fetch_capsule(&route, &hint).unwrap();
    let h = s.bob_h().unwrap();
    s.retrieve(&hint, h).unwrap();
    let l = s.world.ledger();
    assert!(l.conserved());
    assert_eq!(l.balance(MIXER_POOL), 0);
    assert_eq!(l.balance(&s.bob_payout), amount);
    let into: Vec<u64> = l.log().iter().filter(|t| t.to == MIXER_POOL).map(|t| t.amount).collect();
    let out: Vec<u64> = l.log().iter().filter(|t| t.from == MIXER_POOL).map(|t| t.amount).collect();
    assert_eq!(into.iter().sum::<u64>(), amount);
    assert_eq!(out.iter().sum::<u64>(), amount);
    assert!((3..=8).contains(&into.len()) && (3..=8).contains(&out.len()));
}

#[test]
fn mixer_chunk_multisets_rarely_collide() {
    let mut seen = HashSet::new();
    let mut collisions = 0;
    for i in 0..1000u32 {
        let mut c = mixer_chunk(1_000_000, &i.to_be_bytes());
        c.sort_unstable();
        if !seen.insert(c) {
            collisions += 1;
        }
    }
    assert!(collisions as f64 / 1000.0 <= 0.01, "{collisions}");
}

/// W lands on one of the subnets the other roles left unused; an observer
/// who knows every other placement does no better than a uniform pick.
#[test]
fn witness_placement_unpredictable() {
    let subnets: Vec<String> = (0..8).map(|i| format!("subnet-{i}")).collect();
    let root = SigningKey::from_bytes(&[3; 32]);
    let code = CodeHashes::default();
    let mut guess_rng = DetRng::new("observer", b"");
    let (mut subnet_hits, mut id_hits) = (0u32, 0u32);
    const RUNS: u32 = 1000;
    for i in 0..RUNS {
        let mut rng = DetRng::new("witness-mc", &i.to_be_bytes());
        let req = SpawnRequest {
            deposit_id: format!("d{i}"),
            factory_txid: format!("tx{i}"),
            n: 2,
            t: 2,
            ttl: 100,
            now: 0,
            params_digest: [0; 32],
            client_nonce: [0; 32],
        };
        let proof = factory_spawn(&mut rng, &subnets, 64, &code, &root, &req).unwrap();
        let ctx = &proof.context;
        let w = ctx.entry(ctx.witness()).unwrap();
        let used: HashSet<&String> =
            ctx.entries.iter().filter(|e| e.role != Role::W).map(|e| &e.subnet).collect();
        let free: Vec<&String> = subnets.iter().filter(|s| !used.contains(s)).collect();
        assert_eq!(free.len(), 4);
        let guess = free[guess_rng.below(free.len() as u64) as usize];
        subnet_hits += u32::from(guess == &w.subnet);
        id_hits += u32::from(ActorId::random(&mut guess_rng) == w.id);
    }
    let rate = f64::from(subnet_hits) / f64::from(RUNS);
    assert!(rate <= 0.25 + 0.05, "subnet guess rate {rate}");
    assert_eq!(id_hits, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn mixer_chunks_sum_exactly(amount in 1u64..u64::MAX / 2, seed in any::<[u8; 8]>()) {
        let c = mixer_chunk(amount, &seed);
        prop_assert_eq!(c.iter().sum::<u64>(), amount);
        prop_assert!(c.iter().all(|&x| x > 0));
        prop_assert!(c.len() as u64 == amount.min(c.len() as u64));
        prop_assert!(c.len() <= 8 && (c.len() >= 3 || amount < 3));
    }
}
