//! Ephemeral actors: I1, I2, the storage actors and the Witness.

use std::collections::{BTreeMap, BTreeSet};

use deaddrop_core::kem::ReclaimCommitment;
use deaddrop_core::suite::{sha3_256, DetRng, Digest32, KeyMaterial, KeyRole};

use crate::ids::{ActorId, Role, NOTICEBOARD, ROUTER};
use crate::msg::{Msg, Reject};
use crate::noticeboard::RecordBody;
use crate::spawn::SpawnProof;
use crate::tuple::{csrn_seal, open_unseal_token, split_blob, SealedTuple};
use crate::world::{commit_digest, destruct_intent_digest, witness_chain, Faults, World};

pub(crate) enum Ephemeral {
    I1(Box<Intake>),
    I2(Box<Retrieval>),
    C(Box<Storage>),
    W(Box<Witness>),
}

impl Ephemeral {
    pub(crate) fn new(role: Role, proof: SpawnProof, mut rng: DetRng, unseal: &KeyMaterial, faults: &Faults) -> Self {
        match role {
            Role::I1 => {
                let serves = faults
                    .shared_intermediary
                    .then(|| Box::new(Retrieval::new(proof.clone(), rng.fork("retrieval"), unseal.clone())));
                Ephemeral::I1(Box::new(Intake { proof, rng, pending: None, also_retrieval: serves }))
            }
            Role::I2 => Ephemeral::I2(Box::new(Retrieval::new(proof, rng, unseal.clone()))),
            Role::C(index) => Ephemeral::C(Box::new(Storage {
                proof,
                rng,
                index,
                blob: None,
                csrn: None,
                corrupt: faults.corrupt_c == Some(index),
            })),
            Role::W => {
                let omit = faults.omit_proof.and_then(|k| proof.context.id_of(Role::C(k)).cloned());
                Ephemeral::W(Box::new(Witness {
                    proof,
                    rng,
                    hint: None,
                    log: Vec::new(),
                    head: [0; 32],
                    intents: BTreeMap::new(),
                    proofs: BTreeMap::new(),
                    finalized: false,
                    omit,
                }))
            }
            other => unreachable!("{other} is not ephemeral"),
        }
    }
}

pub(crate) struct Intake {
    proof: SpawnProof,
    rng: DetRng,
    pending: Option<PendingDeposit>,
    /// Set only by the misrouting fixture.
    also_retrieval: Option<Box<Retrieval>>,
}

struct PendingDeposit {
    alice: ActorId,
    hint: Digest32,
    commitment: ReclaimCommitment,
    acks: BTreeSet<ActorId>,
    csrn_ct: Option<Vec<u8>>,
    aborted: bool,
    idx: Option<u64>,
}

enum Gather {
    Idle,
    Running { order: Vec<ActorId>, next: usize, tallies: BTreeMap<Vec<u8>, usize> },
    Done(Vec<u8>),
    Failed,
}

pub(crate) struct Retrieval {
    proof: SpawnProof,
    rng: DetRng,
    unseal: KeyMaterial,
    gather: Gather,
    waiting: Vec<(ActorId, Msg)>,
    active: Option<ActiveRetrieve>,
}

struct ActiveRetrieve {
    bob: ActorId,
    payout: String,
    envelope: Vec<u8>,
    csrn: Option<Option<Digest32>>,
    paid: Option<Result<(), Reject>>,
}

impl Retrieval {
    fn new(proof: SpawnProof, rng: DetRng, unseal: KeyMaterial) -> Self {
        Self { proof, rng, unseal, gather: Gather::Idle, waiting: Vec::new(), active: None }
    }
}

pub(crate) struct Storage {
    proof: SpawnProof,
    rng: DetRng,
    index: usize,
    blob: Option<Vec<u8>>,
    csrn: Option<Digest32>,
    corrupt: bool,
}

/// One entry of W's hash-chained log.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessEvent {
    pub kind: &'static str,
    pub subject: ActorId,
    pub digest: Digest32,
    pub chain: Digest32,
}

pub(crate) struct Witness {
    proof: SpawnProof,
    rng: DetRng,
    hint: Option<Digest32>,
    log: Vec<WitnessEvent>,
    head: Digest32,
    /// subject -> (intent digest, retrieval teardown)
    intents: BTreeMap<ActorId, (Digest32, bool)>,
    proofs: BTreeMap<ActorId, Digest32>,
    finalized: bool,
    omit: Option<ActorId>,
}

impl Witness {
    fn record(&mut self, kind: &'static str, subject: &ActorId, digest: Digest32) -> Digest32 {
        self.head = witness_chain(&self.head, &digest);
        self.log.push(WitnessEvent { kind, subject: subject.clone(), digest, chain: self.head });
        self.head
    }
}

enum Next {
    Keep,
    Destroy { teardown: bool },
}

impl World {
    pub(crate) fn on_ephemeral(&mut self, me: &ActorId, from: &ActorId, msg: Msg) {
        let Some(mut actor) = self.ephemerals.remove(me) else { return };
        let next = match &mut actor {
            Ephemeral::I1(st) => self.on_i1(me, st, from, msg),
            Ephemeral::I2(st) => self.on_retrieval(me, st, from, msg),
            Ephemeral::C(st) => self.on_storage(me, st, from, msg),
            Ephemeral::W(st) => self.on_witness(me, st, from, msg),
        };
        if let Next::Destroy { teardown } = next {
            let (proof, nonce) = match &mut actor {
                Ephemeral::I1(s) => (s.proof.clone(), s.rng.bytes()),
                Ephemeral::I2(s) => (s.proof.clone(), s.rng.bytes()),
                Ephemeral::C(s) => (s.proof.clone(), s.rng.bytes()),
                Ephemeral::W(s) => (s.proof.clone(), s.rng.bytes()),
            };
            self.request_destruction(me, &proof, nonce, teardown);
        }
        self.ephemerals.insert(me.clone(), actor);
    }

    fn on_i1(&mut self, me: &ActorId, st: &mut Intake, from: &ActorId, msg: Msg) -> Next {
        let ctx = st.proof.context.clone();
        match msg {
            Msg::Timer => return Next::Destroy { teardown: false },
            Msg::Deposit { deposit_id, tuple, unseal_token, fee_proof: _, k_transit, csrn_nonce } => {
                if st.pending.is_some() {
                    self.reject(me, from, Reject::DoubleDeposit);
                    return Next::Keep;
                }
                if deposit_id != ctx.deposit_id {
                    self.reject(me, from, Reject::Unauthorized);
                    return Next::Keep;
                }
                let Ok(parsed) = SealedTuple::from_bytes(&tuple) else {
                    self.reject(me, from, Reject::Malformed);
                    return Next::Keep;
                };
                let blob = crate::tuple::storage_blob(&tuple, &unseal_token);
                st.pending = Some(PendingDeposit {
                    alice: from.clone(),
                    hint: parsed.hint,
                    commitment: ReclaimCommitment { reclaim_tag: parsed.reclaim_tag, c: parsed.c },
                    acks: BTreeSet::new(),
                    csrn_ct: None,
                    aborted: false,
                    idx: None,
                });
                for (i, c) in ctx.storage().iter().enumerate() {
                    let csrn = (i == 0).then_some((k_transit, csrn_nonce));
                    self.send(me, c, Msg::Store { deposit_id: deposit_id.clone(), hint: parsed.hint, blob: blob.clone(), csrn });
                }
            }
            Msg::StoreAck { csrn_ct } => {
                let Some(p) = st.pending.as_mut() else { return Next::Keep };
                if p.aborted || !ctx.storage().contains(from) {
                    return Next::Keep;
                }
                p.acks.insert(from.clone());
                if csrn_ct.is_some() {
                    p.csrn_ct = csrn_ct;
                }
                if p.acks.len() == ctx.n {
                    let route_to = if st.also_retrieval.is_some() { me.clone() } else { ctx.i2().clone() };
                    let code_hash_i1 = self.code.i1;
                    self.send(me, &ActorId::new(NOTICEBOARD), Msg::Announce { hint: p.hint, code_hash_i1, route_to });
                }
            }
            Msg::Undeliverable { kind: "store" } => {
                let Some(p) = st.pending.as_mut() else { return Next::Keep };
                if !p.aborted {
                    p.aborted = true;
                    let alice = p.alice.clone();
                    self.reject(me, &alice, Reject::StoreFailed);
                    return Next::Destroy { teardown: false };
                }
            }
            Msg::Posted { seq } if from.as_str() == NOTICEBOARD => {
                let Some(p) = st.pending.as_mut() else { return Next::Keep };
                p.idx = Some(seq);
                let m = Msg::Sealed { deposit_id: ctx.deposit_id.clone(), idx: seq, commitment: p.commitment };
                self.send(me, &ActorId::new(ROUTER), m);
            }
            Msg::SealAck if from.as_str() == ROUTER => {
                let Some(p) = st.pending.as_ref() else { return Next::Keep };
                let receipt = Msg::DepositReceipt {
                    idx: p.idx.expect("sealed after announce"),
                    csrn_ct: p.csrn_ct.clone().unwrap_or_default(),
                };
                let alice = p.alice.clone();
                self.send(me, &alice, receipt);
                if st.also_retrieval.is_none() {
                    return Next::Destroy { teardown: false };
                }
            }
            other => {
                if let Some(r) = st.also_retrieval.as_mut() {
                    return self.on_retrieval(me, r, from, other);
                }
                self.trace.push(self.now(), me, "ignored", vec![("msg", other.kind().into())]);
            }
        }
        Next::Keep
    }

    fn on_retrieval(&mut self, me: &ActorId, st: &mut Retrieval, from: &ActorId, msg: Msg) -> Next {
        let storage = st.proof.context.storage();
        match msg {
            Msg::Timer => return Next::Destroy { teardown: false },
            m @ (Msg::FetchCapsule { .. } | Msg::Retrieve { .. }) => {
                match st.gather {
                    Gather::Done(_) => return self.serve(me, st, from, m),
                    Gather::Failed => self.reject(me, from, Reject::Quorum),
                    Gather::Running { .. } => st.waiting.push((from.clone(), m)),
                    Gather::Idle => {
                        st.waiting.push((from.clone(), m));
                        let mut order = storage;
                        st.rng.shuffle(&mut order);
                        self.send(me, &order[0], Msg::Fetch);
                        st.gather = Gather::Running { order, next: 0, tallies: BTreeMap::new() };
                    }
                }
            }
            Msg::FetchReply { blob } if storage.contains(from) => {
                let t = st.proof.context.t;
                let Gather::Running { tallies, .. } = &mut st.gather else { return Next::Keep };
                let count = tallies.entry(blob.clone()).or_default();
                *count += 1;
                if *count >= t {
                    st.gather = Gather::Done(blob);
                    return self.flush_waiting(me, st);
                }
                return self.advance_gather(me, st);
            }
            Msg::Undeliverable { kind: "fetch" } => return self.advance_gather(me, st),
            Msg::CsrnReply { csrn } => {
                if let Some(a) = st.active.as_mut() {
                    a.csrn = Some(csrn);
                }
                return self.try_complete(me, st);
            }
            Msg::Undeliverable { kind: "fetch-csrn" } => {
                if let Some(a) = st.active.as_mut() {
                    a.csrn = Some(None);
                }
                return self.try_complete(me, st);
            }
            Msg::PayoutDone { result } if from.as_str() == ROUTER => {
                if let Some(a) = st.active.as_mut() {
                    a.paid = Some(result);
                }
                return self.try_complete(me, st);
            }
            other => self.trace.push(self.now(), me, "ignored", vec![("msg", other.kind().into())]),
        }
        Next::Keep
    }

    fn advance_gather(&mut self, me: &ActorId, st: &mut Retrieval) -> Next {
        let Gather::Running { order, next, .. } = &mut st.gather else { return Next::Keep };
        *next += 1;
        if let Some(c) = order.get(*next).cloned() {
            self.send(me, &c, Msg::Fetch);
            return Next::Keep;
        }
        st.gather = Gather::Failed;
        for (client, _) in std::mem::take(&mut st.waiting) {
            self.reject(me, &client, Reject::Quorum);
        }
        Next::Keep
    }

    fn flush_waiting(&mut self, me: &ActorId, st: &mut Retrieval) -> Next {
        let mut next = Next::Keep;
        for (client, m) in std::mem::take(&mut st.waiting) {
            if let Next::Destroy { teardown } = self.serve(me, st, &client, m) {
                next = Next::Destroy { teardown };
            }
        }
        next
    }

    /// Handles a client request once the tuple quorum is in hand.
    fn serve(&mut self, me: &ActorId, st: &mut Retrieval, from: &ActorId, msg: Msg) -> Next {
        let Gather::Done(blob) = &st.gather else { unreachable!("serve after gather") };
        let Ok((tuple, token)) = split_blob(blob) else {
            self.reject(me, from, Reject::Malformed);
            return Next::Keep;
        };
        match msg {
            Msg::FetchCapsule { hint } if hint == tuple.hint => {
                let proof = Box::new(st.proof.clone());
                self.send(me, from, Msg::CapsuleReply { capsule: tuple.capsule, proof });
            }
            Msg::Retrieve { hint, h, payout } if hint == tuple.hint => {
                if st.active.is_some() {
                    self.reject(me, from, Reject::Spent);
                    return Next::Keep;
                }
                let Ok(embedded) = open_unseal_token(&st.unseal, &tuple.hint, &token) else {
                    self.reject(me, from, Reject::Malformed);
                    return Next::Keep;
                };
                if sha3_256(&h) != sha3_256(&embedded) {
                    self.reject(me, from, Reject::BadProof);
                    return Next::Keep;
                }
                st.active = Some(ActiveRetrieve {
                    bob: from.clone(),
                    payout: payout.clone(),
                    envelope: tuple.envelope,
                    csrn: None,
                    paid: None,
                });
                let c1 = st.proof.context.storage()[0].clone();
                self.send(me, &c1, Msg::FetchCsrn);
                let deposit_id = st.proof.context.deposit_id.clone();
                self.send(me, &ActorId::new(ROUTER), Msg::Payout { deposit_id, to: payout });
            }
            _ => self.reject(me, from, Reject::NotFound),
        }
        Next::Keep
    }

    fn try_complete(&mut self, me: &ActorId, st: &mut Retrieval) -> Next {
        let Some(a) = st.active.as_ref() else { return Next::Keep };
        let (Some(csrn), Some(paid)) = (a.csrn, a.paid) else { return Next::Keep };
        let a = st.active.take().expect("checked");
        match paid {
            Err(reason) => {
                self.reject(me, &a.bob, reason);
                Next::Keep
            }
            Ok(()) => {
                self.trace.push(self.now(), me, "deliver", vec![("to", a.bob.to_string()), ("payout", a.payout.clone())]);
                self.send(me, &a.bob, Msg::Delivered { envelope: a.envelope, csrn });
                for c in st.proof.context.storage() {
                    self.send(me, &c, Msg::TriggerDestruct);
                }
                Next::Destroy { teardown: true }
            }
        }
    }

    fn on_storage(&mut self, me: &ActorId, st: &mut Storage, from: &ActorId, msg: Msg) -> Next {
        let ctx = &st.proof.context;
        let (i1, i2, w) = (ctx.i1().clone(), ctx.i2().clone(), ctx.witness().clone());
        let intermediary = from == &i1 || from == &i2;
        match msg {
            Msg::Timer => return Next::Destroy { teardown: false },
            Msg::Store { deposit_id, hint, mut blob, csrn } if from == &i1 && st.blob.is_none() => {
                if st.corrupt {
                    *blob.last_mut().expect("nonempty blob") ^= 0xff;
                }
                st.blob = Some(blob);
                let csrn_ct = csrn.map(|(k, nonce)| {
                    let value: Digest32 = st.rng.bytes();
                    st.csrn = Some(value);
                    csrn_seal(&KeyMaterial::new(k, KeyRole::Transit), &nonce, &deposit_id, &value)
                });
                self.trace.push(self.now(), me, "store", vec![("index", st.index.to_string()), ("hint", hex::encode(hint))]);
                self.send(me, &w, Msg::Commit { hint });
                self.send(me, from, Msg::StoreAck { csrn_ct });
            }
            Msg::Fetch if intermediary => {
                if let Some(blob) = st.blob.clone() {
                    self.send(me, from, Msg::FetchReply { blob });
                }
            }
            Msg::FetchCsrn if intermediary => self.send(me, from, Msg::CsrnReply { csrn: st.csrn }),
            Msg::TriggerDestruct if intermediary => return Next::Destroy { teardown: true },
            other => self.trace.push(self.now(), me, "ignored", vec![("msg", other.kind().into())]),
        }
        Next::Keep
    }

    fn on_witness(&mut self, me: &ActorId, st: &mut Witness, from: &ActorId, msg: Msg) -> Next {
        let commit = st.proof.commit;
        let in_transfer = st.proof.context.entry(from).is_some();
        match msg {
            Msg::Timer if !st.finalized => {
                let nonce = st.rng.bytes();
                let d = destruct_intent_digest(&commit, me, &nonce, st.proof.context.deadline);
                st.record("destruct-intent", me, d);
                return Next::Destroy { teardown: false };
            }
            Msg::Commit { hint } if in_transfer => {
                st.hint = Some(hint);
                let d = commit_digest(&commit, &hint, from);
                let chain = st.record("commit", from, d);
                self.trace.push(self.now(), me, "witness", vec![("event", "commit".into()), ("subject", from.to_string()), ("chain", hex::encode(chain))]);
            }
            Msg::DestructIntent { nonce, deadline, teardown } if in_transfer => {
                let d = destruct_intent_digest(&commit, from, &nonce, deadline);
                st.intents.insert(from.clone(), (d, teardown));
                let chain = st.record("destruct-intent", from, d);
                self.trace.push(self.now(), me, "witness", vec![("event", "destruct-intent".into()), ("subject", from.to_string()), ("chain", hex::encode(chain))]);
            }
            Msg::DestructProof { subject, digest } if from.as_str() == crate::ids::FACTORY => {
                if !st.intents.contains_key(&subject) {
                    self.trace.push(self.now(), me, "witness-anomaly", vec![("subject", subject.to_string()), ("issue", "proof-without-intent".into())]);
                    return Next::Keep;
                }
                st.proofs.insert(subject.clone(), digest);
                let chain = st.record("destruct-proof", &subject, digest);
                self.trace.push(self.now(), me, "witness", vec![("event", "destruct-proof".into()), ("subject", subject.to_string()), ("chain", hex::encode(chain))]);
                return self.maybe_finalize(me, st);
            }
            other => self.trace.push(self.now(), me, "ignored", vec![("msg", other.kind().into())]),
        }
        Next::Keep
    }

    /// Finalize once every expected ephemeral has an intent and a proof and
    /// I2 left through retrieval teardown.
    fn maybe_finalize(&mut self, me: &ActorId, st: &mut Witness) -> Next {
        if st.finalized {
            return Next::Keep;
        }
        let ctx = &st.proof.context;
        let expected = ctx.teardown_set();
        let complete = expected.iter().all(|x| st.intents.contains_key(x) && st.proofs.contains_key(x));
        let retrieved = st.intents.get(ctx.i2()).is_some_and(|&(_, teardown)| teardown);
        if !complete || !retrieved {
            return Next::Keep;
        }
        let Some(idx) = st.hint.and_then(|h| self.noticeboard.announce_for(&h)).map(|r| r.seq) else {
            return Next::Keep;
        };
        let proofs: Vec<(ActorId, Digest32)> = expected
            .iter()
            .filter(|x| st.omit.as_ref() != Some(*x))
            .map(|x| (x.clone(), st.proofs[x]))
            .collect();
        let nonce = st.rng.bytes();
        let intent = destruct_intent_digest(&st.proof.commit, me, &nonce, ctx.deadline);
        st.record("destruct-intent", me, intent);
        st.finalized = true;
        let body = RecordBody::Finalize { idx, proofs, witness_intent: (me.clone(), intent) };
        self.send(me, &ActorId::new(NOTICEBOARD), Msg::Post { body });
        Next::Destroy { teardown: true }
    }
}
