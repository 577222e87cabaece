use std::collections::BTreeMap;

use deaddrop_sim::ids::{ActorId, Role};
use deaddrop_sim::ledger::MIXER_POOL;
use deaddrop_sim::msg::{Msg, Reject};
use deaddrop_sim::session::{run_scenario, Scenario, Session, Stage, StepError, Verdict};
use deaddrop_sim::trace::Trace;
use deaddrop_sim::world::{DepositState, Faults};

fn small() -> Scenario {
    Scenario { dim: 4, bit_length: 48, payload: b"meet at the usual place".to_vec(), ..Scenario::default() }
}

fn ephemerals(trace: &Trace) -> Vec<(ActorId, Role)> {
    trace.actors.iter().filter(|a| a.role.is_ephemeral()).map(|a| (a.id.clone(), a.role)).collect()
}

#[test]
fn happy_path_finalizes() {
    let out = run_scenario(&small()).unwrap();
    assert_eq!(out.verdict(), Verdict::Success);
    assert_eq!(out.state, Some(DepositState::Finalized));
    assert_eq!(out.received_payload.as_deref(), Some(&b"meet at the usual place"[..]));
    assert!(out.alice_csrn.is_some());
    assert_eq!(out.alice_csrn, out.bob_csrn);
    assert_eq!(out.finalize, Some(Ok(())));
    assert!(out.observation.is_clean());
    assert!(out.conserved);

    let trace = Trace::parse(&out.trace).unwrap();
    let eph = ephemerals(&trace);
    assert_eq!(eph.len(), 5);
    for (id, role) in &eph {
        let n = trace.events_of("tombstone").filter(|e| &e.actor == id).count();
        assert_eq!(n, 1, "{role} tombstoned {n} times");
    }
}

#[test]
fn deposit_announces_after_all_stores() {
    let mut s = Session::new(small()).unwrap();
    s.open_deposit().unwrap();
    let idx = s.deposit().unwrap();
    assert_eq!(idx, 0);
    let now = s.world.tick();
    s.world.advance_to(now + 3);
    let hint = s.hint().unwrap();
    assert!(s.world.noticeboard().announce_for(&hint).is_some());

    let ctx = s.sender.as_ref().unwrap().proof.context.clone();
    let trace = s.world.trace();
    let commits = trace.events_of("witness").filter(|e| e.field("event") == Some("commit")).count();
    assert_eq!(commits, ctx.n);
    assert!(s.world.is_tombstoned(ctx.i1()));
    assert!(s.world.is_alive(ctx.i2()));

    let saw: Vec<&str> = trace
        .events
        .iter()
        .filter(|e| &e.actor == ctx.i1() && e.kind == "recv")
        .filter_map(|e| e.field("from"))
        .collect();
    assert!(saw.contains(&s.alice.as_str()));
    assert!(!saw.contains(&s.bob.as_str()));
    assert_eq!(s.state(), Some(DepositState::Sealed));
}

#[test]
fn crashed_storage_aborts_before_announce() {
    let sc = Scenario { faults: Faults { kill_c: Some(2), ..Faults::default() }, ..small() };
    let mut s = Session::new(sc).unwrap();
    s.open_deposit().unwrap();
    assert_eq!(s.deposit().unwrap_err(), StepError::Rejected(Reject::StoreFailed));
    s.world.run_until_idle();
    assert!(s.world.noticeboard().records().is_empty());
    assert_eq!(s.world.ledger().balance(MIXER_POOL), 0);
    assert_eq!(s.state(), Some(DepositState::Created));
    assert!(s.world.ledger().conserved());
}

#[test]
fn corrupt_replica_breaks_quorum() {
    let sc = Scenario { faults: Faults { corrupt_c: Some(1), ..Faults::default() }, ..small() };
    let out = run_scenario(&sc).unwrap();
    assert!(matches!(out.failure, Some((Stage::Fetch, StepError::Rejected(Reject::Quorum)))), "{:?}", out.failure);
    assert_eq!(out.verdict(), Verdict::RetrievalRejected);
}

#[test]
fn corrupt_replica_tolerated_below_threshold() {
    let sc = Scenario { n: 3, t: 2, faults: Faults { corrupt_c: Some(3), ..Faults::default() }, ..small() };
    let out = run_scenario(&sc).unwrap();
    assert_eq!(out.verdict(), Verdict::Success, "{:?}", out.failure);
}

fn ready(sc: Scenario) -> (Session, [u8; 32]) {
    let mut s = Session::new(sc).unwrap();
    s.open_deposit().unwrap();
    s.deposit().unwrap();
    let hint = s.hint().unwrap();
    let (_, route) = s.discover(&hint).unwrap();
    s.fetch_capsule(&route, &hint).unwrap();
    (s, hint)
}

#[test]
fn wrong_h_rejected_then_honest_succeeds() {
    let (mut s, hint) = ready(small());
    let i2 = s.sender.as_ref().unwrap().proof.context.i2().clone();
    let err = s.retrieve(&hint, [0xab; 32]).unwrap_err();
    assert_eq!(err, StepError::Rejected(Reject::BadProof));
    assert!(s.world.trace().events.iter().any(|e| e.actor == s.bob && e.field("msg") == Some("rejected")));
    assert!(s.world.is_alive(&i2));
    let h = s.bob_h().unwrap();
    assert_eq!(s.retrieve(&hint, h).unwrap(), s.scenario.payload);
}

#[test]
fn random_guesses_never_accepted_and_success_is_single_use() {
    let (mut s, hint) = ready(Scenario { ttl: 200_000, ..small() });
    let mut rng = deaddrop_core::suite::DetRng::new("guesses", b"");
    let mut accepted = 0;
    for _ in 0..10_000 {
        match s.retrieve(&hint, rng.bytes()) {
            Ok(_) => accepted += 1,
            Err(e) => assert_eq!(e, StepError::Rejected(Reject::BadProof)),
        }
    }
    assert_eq!(accepted, 0);
    let h = s.bob_h().unwrap();
    s.retrieve(&hint, h).unwrap();
    assert!(s.retrieve(&hint, h).is_err());
    assert_eq!(s.state(), Some(DepositState::Finalized));
}

#[test]
fn unknown_hint_not_found_and_discovery_is_silent() {
    let mut s = Session::new(small()).unwrap();
    s.open_deposit().unwrap();
    s.deposit().unwrap();
    let before = s.world.trace().events.len();
    assert_eq!(s.discover(&[9; 32]).unwrap_err(), StepError::NotFound);
    s.discover(&s.hint().unwrap()).unwrap();
    assert_eq!(s.world.trace().events.len(), before);
}

#[test]
fn fetch_for_unknown_hint_rejected() {
    let (mut s, hint) = ready(small());
    let route = s.recipient.as_ref().unwrap().route.clone();
    assert_eq!(s.fetch_capsule(&route, &[1; 32]).unwrap_err(), StepError::Rejected(Reject::NotFound));
    s.fetch_capsule(&route, &hint).unwrap();
}

#[test]
fn double_deposit_rejected() {
    let mut s = Session::new(small()).unwrap();
    s.open_deposit().unwrap();
    let (i1, m) = s.prepare_deposit().unwrap();
    s.world.post(&s.alice.clone(), &i1, m.clone());
    s.world.post(&s.alice.clone(), &i1, m);
    s.world.run_until_idle();
    let replies: Vec<Msg> = s.world.take_inbox(&s.alice.clone()).into_iter().map(|(_, m)| m).collect();
    let kinds: BTreeMap<&str, usize> = replies.iter().fold(BTreeMap::new(), |mut acc, m| {
        *acc.entry(m.kind()).or_default() += 1;
        acc
    });
    assert_eq!(kinds.get("deposit-receipt"), Some(&1), "{kinds:?}");
    assert!(replies.iter().any(|m| matches!(m, Msg::Rejected { reason: Reject::DoubleDeposit })));
    assert_eq!(s.world.noticeboard().records().len(), 1);
}

#[test]
fn ttl_expiry_tears_down_without_finalize() {
    let mut s = Session::new(small()).unwrap();
    s.open_deposit().unwrap();
    s.deposit().unwrap();
    s.expire();
    let ctx = s.sender.as_ref().unwrap().proof.context.clone();
    let trace = s.world.trace();
    for e in &ctx.entries {
        assert!(s.world.is_tombstoned(&e.id), "{} alive at deadline", e.role);
        let t = trace.events_of("tombstone").find(|ev| ev.actor == e.id).unwrap().tick;
        assert!(t <= ctx.deadline);
    }
    assert!(s.world.noticeboard().records().iter().all(|r| r.body.kind() == "announce"));
    assert_eq!(s.state(), Some(DepositState::Sealed));
}

#[test]
fn storage_only_talks_to_intermediaries() {
    let (mut s, hint) = ready(small());
    let h = s.bob_h().unwrap();
    s.retrieve(&hint, h).unwrap();
    s.world.run_until_idle();
    let ctx = s.sender.as_ref().unwrap().proof.context.clone();
    let allowed = [ctx.i1().clone(), ctx.i2().clone(), ctx.witness().clone(), ActorId::new("factory")];
    for c in ctx.storage() {
        for e in s.world.trace().events.iter().filter(|e| e.actor == c && e.kind == "recv") {
            let from = ActorId::new(e.field("from").unwrap());
            assert!(allowed.contains(&from), "{c} heard from {from}");
        }
    }
}

#[test]
fn csrn_receipt_matches_and_replay_is_refused() {
    let (mut s, hint) = ready(small());
    let h = s.bob_h().unwrap();
    s.retrieve(&hint, h).unwrap();
    let alice = s.sender.as_ref().unwrap().csrn.unwrap();
    assert_eq!(s.recipient.as_ref().unwrap().csrn, Some(alice));
    // a replayed deposit after teardown finds no intake actor
    let (i1, m) = s.prepare_deposit().unwrap();
    let reply = s.world.request(&s.alice.clone(), &i1, m).map(|(_, m)| m);
    assert!(matches!(reply, Some(Msg::Undeliverable { .. })));
}

#[test]
fn outsider_cannot_retrieve_without_h() {
    let (mut s, hint) = ready(small());
    let route = s.recipient.as_ref().unwrap().route.clone();
    let m = Msg::Retrieve { hint, h: [0; 32], payout: "mallory".into() };
    let reply = s.world.request(&s.mallory.clone(), &route, m).map(|(_, m)| m);
    assert!(matches!(reply, Some(Msg::Rejected { reason: Reject::BadProof })));
    assert_eq!(s.world.ledger().balance("mallory"), 0);
}
