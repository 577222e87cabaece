//! Event loop, permanent actors (Factory, Router, Noticeboard) and client plumbing.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};

use deaddrop_core::kem::{verify_reclaim, ReclaimCommitment, ReclaimReject};
use deaddrop_core::math::PublicParams;
use deaddrop_core::suite::{blake2s_event, length_prefixed, DetRng, Digest32, DomainTag};
use ed25519_dalek::{SigningKey, VerifyingKey};

use crate::actors::Ephemeral;
use crate::ids::{ActorId, CodeHashes, Role, FACTORY, NOTICEBOARD, ROUTER};
use crate::ledger::{mixer_chunk, subaccount, Ledger, MIXER_POOL};
use crate::msg::{Msg, Reject};
use crate::noticeboard::{Noticeboard, RecordBody};
use crate::spawn::{factory_spawn, SpawnProof, SpawnRequest};
use crate::trace::{ActorInfo, Trace};
use crate::tuple::unseal_key;

/// Faults injected on the actor side. Client-side faults live in the scenario.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Faults {
    /// `C_k` crashes right after spawn.
    pub kill_c: Option<usize>,
    /// `C_k` stores a tuple that differs from the one I1 sent.
    pub corrupt_c: Option<usize>,
    /// W leaves `C_k`'s proof out of its Finalize.
    pub omit_proof: Option<usize>,
    /// Misrouting fixture: I1 also serves retrieval and the Router pays it out.
    pub shared_intermediary: bool,
}

#[derive(Clone, Debug)]
pub struct WorldConfig {
    pub seed: Vec<u8>,
    pub subnets: Vec<String>,
    /// Most ephemeral actors alive at once.
    pub capacity: usize,
    pub faults: Faults,
}

impl WorldConfig {
    pub fn new(seed: &[u8], subnet_count: usize) -> Self {
        Self {
            seed: seed.to_vec(),
            subnets: (0..subnet_count).map(|i| format!("subnet-{i}")).collect(),
            capacity: 1024,
            faults: Faults::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum DepositState {
    Allocated,
    Created,
    Sealed,
    Finalized,
    Reclaimed,
}

impl DepositState {
    pub fn can_move_to(self, to: DepositState) -> bool {
        use DepositState::*;
        matches!((self, to), (Allocated, Created) | (Created, Sealed) | (Sealed, Finalized) | (Sealed, Reclaimed))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DepositState::Allocated => "Allocated",
            DepositState::Created => "Created",
            DepositState::Sealed => "Sealed",
            DepositState::Finalized => "Finalized",
            DepositState::Reclaimed => "Reclaimed",
        }
    }
}

#[derive(Clone, Debug)]
pub struct DepositRecord {
    pub deposit_id: String,
    pub depositor: ActorId,
    pub state: DepositState,
    pub history: Vec<DepositState>,
    pub subaccount: String,
    pub amount: u64,
    pub refund_output: String,
    pub proof: Option<SpawnProof>,
    pub commitment: Option<ReclaimCommitment>,
    pub idx: Option<u64>,
    challenge: Option<[u8; 32]>,
}

impl DepositRecord {
    pub fn deadline(&self) -> Option<u64> {
        self.proof.as_ref().map(|p| p.context.deadline)
    }
}

struct Queued {
    tick: u64,
    seq: u64,
    from: ActorId,
    to: ActorId,
    msg: Msg,
}

impl PartialEq for Queued {
    fn eq(&self, o: &Self) -> bool {
        (self.tick, self.seq) == (o.tick, o.seq)
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Queued {
    fn cmp(&self, o: &Self) -> Ordering {
        (self.tick, self.seq).cmp(&(o.tick, o.seq))
    }
}

/// Destruction-proof digest recomputable from the certified context.
pub fn destruct_proof_digest(context_commit: &Digest32, subject: &ActorId) -> Digest32 {
    blake2s_event(DomainTag::WitnessEvent, &[b"destruct-proof", context_commit, subject.as_str().as_bytes()])
        .expect("witness-event is a BLAKE2s tag")
}

/// `blake2s_event("context-commit", idx || id(I2))`.
pub fn rendezvous_token(idx: u64, i2: &ActorId) -> Digest32 {
    blake2s_event(DomainTag::ContextCommit, &[&idx.to_be_bytes(), i2.as_str().as_bytes()])
        .expect("context-commit is a BLAKE2s tag")
}

pub struct World {
    pub(crate) params: PublicParams,
    pub(crate) cfg: WorldConfig,
    pub(crate) code: CodeHashes,
    pub(crate) root: SigningKey,
    factory_secret: Digest32,
    pub(crate) rng: DetRng,
    tick: u64,
    seq: u64,
    queue: BinaryHeap<Reverse<Queued>>,
    pub(crate) ephemerals: BTreeMap<ActorId, Ephemeral>,
    tombstones: BTreeSet<ActorId>,
    clients: BTreeMap<ActorId, Role>,
    inboxes: BTreeMap<ActorId, VecDeque<(ActorId, Msg)>>,
    pub(crate) noticeboard: Noticeboard,
    ledger: Ledger,
    deposits: BTreeMap<String, DepositRecord>,
    certified: Vec<SpawnProof>,
    children: BTreeMap<ActorId, usize>,
    pub(crate) trace: Trace,
}

impl World {
    pub fn new(params: PublicParams, cfg: WorldConfig) -> Self {
        let mut rng = DetRng::new("world", &cfg.seed);
        let root = SigningKey::from_bytes(&rng.bytes());
        let factory_secret = rng.bytes();
        let mut trace = Trace::default();
        trace.meta.push(("seed".into(), hex::encode(&cfg.seed)));
        trace.meta.push(("root-vk".into(), hex::encode(root.verifying_key().as_bytes())));
        trace.meta.push(("params".into(), hex::encode(params.digest())));
        for (id, role) in [(FACTORY, Role::Factory), (ROUTER, Role::Router), (NOTICEBOARD, Role::Noticeboard)] {
            trace.actors.push(ActorInfo { id: ActorId::new(id), role, subnet: "system".into() });
        }
        Self {
            params,
            cfg,
            code: CodeHashes::default(),
            root,
            factory_secret,
            rng,
            tick: 0,
            seq: 0,
            queue: BinaryHeap::new(),
            ephemerals: BTreeMap::new(),
            tombstones: BTreeSet::new(),
            clients: BTreeMap::new(),
            inboxes: BTreeMap::new(),
            noticeboard: Noticeboard::default(),
            ledger: Ledger::default(),
            deposits: BTreeMap::new(),
            certified: Vec::new(),
            children: BTreeMap::new(),
            trace,
        }
    }

    // ---- accessors ----

    pub fn params(&self) -> &PublicParams {
        &self.params
    }

    pub fn root_key(&self) -> VerifyingKey {
        self.root.verifying_key()
    }

    pub fn code_hashes(&self) -> &CodeHashes {
        &self.code
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn noticeboard(&self) -> &Noticeboard {
        &self.noticeboard
    }

    pub fn export_noticeboard(&self) -> String {
        self.noticeboard.export(&self.root)
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn deposit(&self, deposit_id: &str) -> Option<&DepositRecord> {
        self.deposits.get(deposit_id)
    }

    /// Factory certified state: every spawn proof issued so far.
    pub fn certified(&self) -> &[SpawnProof] {
        &self.certified
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn is_alive(&self, id: &ActorId) -> bool {
        self.ephemerals.contains_key(id)
    }

    pub fn is_tombstoned(&self, id: &ActorId) -> bool {
        self.tombstones.contains(id)
    }

    pub fn pending_events(&self) -> usize {
        self.queue.len()
    }

    // ---- clients and money ----

    pub fn add_client(&mut self, role: Role) -> ActorId {
        assert!(role.is_client(), "{role} is not a client role");
        let id = ActorId::random(&mut self.rng);
        self.clients.insert(id.clone(), role);
        self.inboxes.insert(id.clone(), VecDeque::new());
        self.trace.actors.push(ActorInfo { id: id.clone(), role, subnet: "-".into() });
        id
    }

    pub fn fund(&mut self, account: &str, amount: u64) {
        self.ledger.mint(account, amount);
        self.trace.push(self.tick, &ActorId::new("ledger"), "mint", vec![("to", account.into()), ("amount", amount.to_string())]);
    }

    fn ledger_move(&mut self, from: &str, to: &str, amount: u64) -> bool {
        let ok = self.ledger.transfer(self.tick, from, to, amount).is_ok();
        if ok {
            self.trace.push(
                self.tick,
                &ActorId::new("ledger"),
                "transfer",
                vec![("from", from.into()), ("to", to.into()), ("amount", amount.to_string())],
            );
        }
        ok
    }

    /// Moves `amount` in randomized mixer chunks.
    fn chunked_move(&mut self, from: &str, to: &str, amount: u64) -> bool {
        let seed: [u8; 32] = self.rng.bytes();
        let chunks = mixer_chunk(amount, &seed);
        if self.ledger.balance(from) < amount {
            return false;
        }
        for c in chunks {
            let ok = self.ledger_move(from, to, c);
            debug_assert!(ok, "balance checked above");
        }
        true
    }

    // ---- scheduling ----

    pub(crate) fn send(&mut self, from: &ActorId, to: &ActorId, msg: Msg) {
        self.schedule(self.tick + 1, from, to, msg);
    }

    pub(crate) fn schedule(&mut self, at: u64, from: &ActorId, to: &ActorId, msg: Msg) {
        self.seq += 1;
        self.queue.push(Reverse(Queued { tick: at.max(self.tick + 1), seq: self.seq, from: from.clone(), to: to.clone(), msg }));
    }

    /// Client entry point: enqueue a message.
    pub fn post(&mut self, from: &ActorId, to: &ActorId, msg: Msg) {
        self.send(from, to, msg);
    }

    /// Enqueue, then run until the sender's inbox receives something.
    pub fn request(&mut self, from: &ActorId, to: &ActorId, msg: Msg) -> Option<(ActorId, Msg)> {
        if let Some(inbox) = self.inboxes.get_mut(from) {
            inbox.clear();
        }
        self.post(from, to, msg);
        loop {
            if let Some(m) = self.inboxes.get_mut(from).and_then(VecDeque::pop_front) {
                return Some(m);
            }
            if !self.step() {
                return None;
            }
        }
    }

    /// Everything delivered to a client so far, oldest first.
    pub fn take_inbox(&mut self, id: &ActorId) -> Vec<(ActorId, Msg)> {
        self.inboxes.get_mut(id).map(|q| q.drain(..).collect()).unwrap_or_default()
    }

    pub fn step(&mut self) -> bool {
        let Some(Reverse(q)) = self.queue.pop() else {
            return false;
        };
        self.tick = self.tick.max(q.tick);
        self.deliver(q);
        true
    }

    pub fn run_until_idle(&mut self) {
        while self.step() {}
    }

    /// Run queued events due at or before `tick`, then move the clock there.
    pub fn advance_to(&mut self, tick: u64) {
        while self.queue.peek().is_some_and(|Reverse(q)| q.tick <= tick) {
            self.step();
        }
        self.tick = self.tick.max(tick);
    }

    fn deliver(&mut self, q: Queued) {
        let Queued { from, to, msg, .. } = q;
        if matches!(msg, Msg::Timer) {
            if self.ephemerals.contains_key(&to) {
                self.trace.push(self.tick, &to, "timer", vec![]);
                self.on_ephemeral(&to, &from, msg);
            }
            return;
        }
        let known = self.clients.contains_key(&to)
            || self.ephemerals.contains_key(&to)
            || [FACTORY, ROUTER, NOTICEBOARD].contains(&to.as_str());
        if !known {
            self.trace.push(self.tick, &to, "undeliverable", vec![("from", from.to_string()), ("msg", msg.kind().into())]);
            if !matches!(msg, Msg::Undeliverable { .. }) {
                self.send(&to, &from, Msg::Undeliverable { kind: msg.kind() });
            }
            return;
        }
        self.trace.push(self.tick, &to, "recv", vec![("from", from.to_string()), ("msg", msg.kind().into())]);
        match to.as_str() {
            FACTORY => self.on_factory(&from, msg),
            ROUTER => self.on_router(&from, msg),
            NOTICEBOARD => self.on_noticeboard(&from, msg),
            _ if self.clients.contains_key(&to) => {
                self.inboxes.get_mut(&to).expect("client inbox").push_back((from, msg));
            }
            _ => self.on_ephemeral(&to, &from, msg),
        }
    }

    pub(crate) fn reject(&mut self, me: &ActorId, to: &ActorId, reason: Reject) {
        self.trace.push(self.tick, me, "reject", vec![("to", to.to_string()), ("reason", reason.to_string())]);
        self.send(me, to, Msg::Rejected { reason });
    }

    // ---- Factory ----

    fn on_factory(&mut self, from: &ActorId, msg: Msg) {
        let me = ActorId::new(FACTORY);
        match msg {
            Msg::SpawnRequest { deposit_id, factory_txid, n, t, ttl, client_nonce } if from.as_str() == ROUTER => {
                let req = SpawnRequest {
                    deposit_id: deposit_id.clone(),
                    factory_txid,
                    n,
                    t,
                    ttl,
                    now: self.tick,
                    params_digest: self.params.digest(),
                    client_nonce,
                };
                let available = self.cfg.capacity.saturating_sub(self.ephemerals.len());
                let mut rng = self.rng.fork("factory-spawn");
                let result = factory_spawn(&mut rng, &self.cfg.subnets, available, &self.code, &self.root, &req);
                let result = match result {
                    Ok(proof) => {
                        self.install(&proof);
                        let key = unseal_key(&self.factory_secret, &proof.commit);
                        Ok((Box::new(proof), *key.as_bytes()))
                    }
                    Err(e) => {
                        self.trace.push(self.tick, &me, "spawn-failed", vec![("reason", e.to_string().replace(' ', "_"))]);
                        Err(e.to_string())
                    }
                };
                self.send(&me, from, Msg::Spawned { deposit_id, result });
            }
            Msg::Cleanup if self.children.contains_key(from) && self.ephemerals.contains_key(from) => {
                self.ephemerals.remove(from);
                self.tombstones.insert(from.clone());
                self.trace.push(self.tick, from, "tombstone", vec![]);
                let proof = &self.certified[self.children[from]];
                let (commit, w) = (proof.commit, proof.context.witness().clone());
                if from != &w {
                    let digest = destruct_proof_digest(&commit, from);
                    self.send(&me, &w, Msg::DestructProof { subject: from.clone(), digest });
                }
            }
            other => self.trace.push(self.tick, &me, "ignored", vec![("msg", other.kind().into())]),
        }
    }

    /// Creates the actors named in a fresh spawn proof and arms their timers.
    fn install(&mut self, proof: &SpawnProof) {
        let idx = self.certified.len();
        self.certified.push(proof.clone());
        self.trace.spawns.push((proof.context.deposit_id.clone(), hex::encode(proof.to_bytes())));
        let deadline = proof.context.deadline;
        let key = unseal_key(&self.factory_secret, &proof.commit);
        for e in &proof.context.entries {
            self.children.insert(e.id.clone(), idx);
            self.trace.actors.push(ActorInfo { id: e.id.clone(), role: e.role, subnet: e.subnet.clone() });
            self.trace.push(self.tick, &e.id, "spawn", vec![("role", e.role.to_string()), ("subnet", e.subnet.clone())]);
            let rng = self.rng.fork(&format!("actor/{}", e.id));
            let actor = Ephemeral::new(e.role, proof.clone(), rng, &key, &self.cfg.faults);
            self.ephemerals.insert(e.id.clone(), actor);
            let at = if e.role == Role::W { deadline.saturating_sub(1) } else { deadline.saturating_sub(4) };
            self.schedule(at, &e.id, &e.id, Msg::Timer);
        }
        if let Some(k) = self.cfg.faults.kill_c {
            if let Some(id) = proof.context.id_of(Role::C(k)).cloned() {
                self.ephemerals.remove(&id);
                self.tombstones.insert(id.clone());
                self.trace.push(self.tick, &id, "crash", vec![]);
            }
        }
    }

    // ---- Noticeboard ----

    fn on_noticeboard(&mut self, from: &ActorId, msg: Msg) {
        let me = ActorId::new(NOTICEBOARD);
        let body = match msg {
            Msg::Announce { hint, code_hash_i1, route_to } => RecordBody::Announce {
                hint,
                rendezvous_token: rendezvous_token(self.noticeboard.next_seq(), &route_to),
                code_hash_i1,
            },
            Msg::Post { body: body @ RecordBody::Finalize { .. } } => body,
            other => {
                self.trace.push(self.tick, &me, "ignored", vec![("msg", other.kind().into())]);
                return;
            }
        };
        let kind = body.kind();
        let seq = self.noticeboard.append(&self.root, self.tick, from.clone(), body);
        let chain = self.noticeboard.records()[seq as usize].chain;
        self.trace.push(
            self.tick,
            &me,
            kind,
            vec![("seq", seq.to_string()), ("author", from.to_string()), ("chain", hex::encode(chain))],
        );
        self.send(&me, from, Msg::Posted { seq });
    }

    // ---- Router ----

    fn set_state(&mut self, deposit_id: &str, to: DepositState) {
        let rec = self.deposits.get_mut(deposit_id).expect("known deposit");
        assert!(rec.state.can_move_to(to), "illegal transition {:?} -> {:?}", rec.state, to);
        rec.state = to;
        rec.history.push(to);
        self.trace.push(self.tick, &ActorId::new(ROUTER), "state", vec![("deposit", deposit_id.into()), ("state", to.as_str().into())]);
    }

    fn on_router(&mut self, from: &ActorId, msg: Msg) {
        let me = ActorId::new(ROUTER);
        match msg {
            Msg::OpenDeposit { amount, refund_output, n, t, ttl, client_nonce } => {
                if amount == 0 || self.ledger.balance(from.as_str()) < amount {
                    return self.reject(&me, from, Reject::InsufficientFunds);
                }
                let deposit_id = hex::encode(self.rng.bytes::<16>());
                let sub = subaccount(&deposit_id);
                let moved = self.ledger_move(from.as_str(), &sub, amount);
                debug_assert!(moved);
                self.deposits.insert(deposit_id.clone(), DepositRecord {
                    deposit_id: deposit_id.clone(),
                    depositor: from.clone(),
                    state: DepositState::Allocated,
                    history: vec![DepositState::Allocated],
                    subaccount: sub,
                    amount,
                    refund_output,
                    proof: None,
                    commitment: None,
                    idx: None,
                    challenge: None,
                });
                self.trace.push(self.tick, &me, "state", vec![("deposit", deposit_id.clone()), ("state", "Allocated".into())]);
                let factory_txid = format!("tx-{}", hex::encode(self.rng.bytes::<8>()));
                self.send(&me, &ActorId::new(FACTORY), Msg::SpawnRequest { deposit_id, factory_txid, n, t, ttl, client_nonce });
            }
            Msg::Spawned { deposit_id, result } if from.as_str() == FACTORY => {
                let Some(rec) = self.deposits.get(&deposit_id) else { return };
                let client = rec.depositor.clone();
                match result {
                    Ok((proof, unseal_key)) => {
                        self.deposits.get_mut(&deposit_id).expect("known").proof = Some((*proof).clone());
                        self.set_state(&deposit_id, DepositState::Created);
                        self.send(&me, &client, Msg::DepositOpened { deposit_id, proof, unseal_key });
                    }
                    Err(_) => {
                        let (sub, amount) = (rec.subaccount.clone(), rec.amount);
                        self.ledger_move(&sub, client.as_str(), amount);
                        self.reject(&me, &client, Reject::SpawnFailed);
                    }
                }
            }
            Msg::Sealed { deposit_id, idx, commitment } => {
                let Some(rec) = self.deposits.get(&deposit_id) else {
                    return self.reject(&me, from, Reject::UnknownDeposit);
                };
                let authorized = rec.proof.as_ref().is_some_and(|p| p.context.i1() == from);
                if !authorized {
                    return self.reject(&me, from, Reject::Unauthorized);
                }
                if rec.state != DepositState::Created {
                    return self.reject(&me, from, Reject::BadState);
                }
                let (sub, amount) = (rec.subaccount.clone(), rec.amount);
                let rec = self.deposits.get_mut(&deposit_id).expect("known");
                rec.idx = Some(idx);
                rec.commitment = Some(commitment);
                self.set_state(&deposit_id, DepositState::Sealed);
                let moved = self.chunked_move(&sub, MIXER_POOL, amount);
                debug_assert!(moved);
                self.send(&me, from, Msg::SealAck);
            }
            Msg::Payout { deposit_id, to } => {
                let Some(rec) = self.deposits.get(&deposit_id) else {
                    return self.send(&me, from, Msg::PayoutDone { result: Err(Reject::UnknownDeposit) });
                };
                let shared = self.cfg.faults.shared_intermediary;
                let payer = |p: &SpawnProof| p.context.i2() == from || (shared && p.context.i1() == from);
                let result = if !rec.proof.as_ref().is_some_and(payer) {
                    Err(Reject::Unauthorized)
                } else if rec.state != DepositState::Sealed {
                    Err(if rec.state == DepositState::Reclaimed { Reject::BadState } else { Reject::Spent })
                } else if rec.deadline().is_some_and(|d| self.tick >= d) {
                    Err(Reject::Expired)
                } else {
                    Ok(rec.amount)
                };
                let result = result.map(|amount| {
                    self.set_state(&deposit_id, DepositState::Finalized);
                    let moved = self.chunked_move(MIXER_POOL, &to, amount);
                    debug_assert!(moved);
                });
                if let Err(r) = result {
                    self.trace.push(self.tick, &me, "reject", vec![("to", from.to_string()), ("reason", r.to_string())]);
                }
                self.send(&me, from, Msg::PayoutDone { result });
            }
            Msg::ReclaimRequest { deposit_id } => match self.reclaim_gate(from, &deposit_id) {
                Err(r) => self.reject(&me, from, r),
                Ok(()) => {
                    let n = self.rng.bytes();
                    self.deposits.get_mut(&deposit_id).expect("gated").challenge = Some(n);
                    self.send(&me, from, Msg::ReclaimChallenge { n });
                }
            },
            Msg::ReclaimClaim { deposit_id, r, alpha, n: _, resp } => {
                if let Err(reason) = self.reclaim_gate(from, &deposit_id) {
                    return self.reject(&me, from, reason);
                }
                let rec = self.deposits.get_mut(&deposit_id).expect("gated");
                let Some(challenge) = rec.challenge.take() else {
                    return self.reject(&me, from, Reject::NoChallenge);
                };
                let proof = rec.proof.as_ref().expect("sealed deposits have a proof");
                let ctx = proof.context.transfer_context();
                let verdict = verify_reclaim(
                    &r,
                    &alpha,
                    &challenge,
                    rec.idx.expect("sealed"),
                    &ctx,
                    &resp,
                    rec.commitment.as_ref().expect("sealed"),
                );
                match verdict {
                    Err(e) => self.reject(&me, from, match e {
                        ReclaimReject::BadR => Reject::BadR,
                        ReclaimReject::BadAlpha => Reject::BadAlpha,
                        ReclaimReject::BadMac => Reject::BadMac,
                    }),
                    Ok(()) => {
                        let (amount, to) = (rec.amount, rec.refund_output.clone());
                        self.set_state(&deposit_id, DepositState::Reclaimed);
                        let moved = self.chunked_move(MIXER_POOL, &to, amount);
                        debug_assert!(moved);
                        self.send(&me, from, Msg::Reclaimed { amount, to });
                    }
                }
            }
            other => self.trace.push(self.tick, &me, "ignored", vec![("msg", other.kind().into())]),
        }
    }

    /// Checks shared by challenge and claim, in this order.
    fn reclaim_gate(&self, from: &ActorId, deposit_id: &str) -> Result<(), Reject> {
        let rec = self.deposits.get(deposit_id).ok_or(Reject::UnknownDeposit)?;
        if &rec.depositor != from {
            return Err(Reject::WrongPrincipal);
        }
        if rec.deadline().is_none_or(|d| self.tick < d) {
            return Err(Reject::TooEarly);
        }
        if rec.state == DepositState::Finalized {
            return Err(Reject::Finalized);
        }
        if rec.state != DepositState::Sealed {
            return Err(Reject::BadState);
        }
        Ok(())
    }

    // ---- helpers for actors ----

    pub(crate) fn now(&self) -> u64 {
        self.tick
    }

    /// Sends `DestructIntent` to W (unless `me` is W) and `Cleanup` to the Factory.
    pub(crate) fn request_destruction(&mut self, me: &ActorId, proof: &SpawnProof, nonce: [u8; 16], teardown: bool) {
        let w = proof.context.witness().clone();
        let deadline = proof.context.deadline;
        self.trace.push(self.tick, me, "destruct-intent", vec![("teardown", teardown.to_string())]);
        if &w != me {
            self.send(me, &w, Msg::DestructIntent { nonce, deadline, teardown });
        }
        self.send(me, &ActorId::new(FACTORY), Msg::Cleanup);
    }
}

/// Intent digest as W records it.
pub fn destruct_intent_digest(commit: &Digest32, subject: &ActorId, nonce: &[u8; 16], deadline: u64) -> Digest32 {
    blake2s_event(
        DomainTag::WitnessEvent,
        &[b"destruct-intent", commit, subject.as_str().as_bytes(), nonce, &deadline.to_be_bytes()],
    )
    .expect("witness-event is a BLAKE2s tag")
}

/// Commit digest as W records it.
pub fn commit_digest(commit: &Digest32, hint: &Digest32, subject: &ActorId) -> Digest32 {
    blake2s_event(DomainTag::WitnessEvent, &[b"commit", commit, hint, subject.as_str().as_bytes()])
        .expect("witness-event is a BLAKE2s tag")
}

/// Chains W's log entries.
pub(crate) fn witness_chain(prev: &Digest32, digest: &Digest32) -> Digest32 {
    blake2s_event(DomainTag::WitnessEvent, &[b"witness-log", &length_prefixed(&[prev, digest])])
        .expect("witness-event is a BLAKE2s tag")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_graph() {
        use DepositState::*;
        let all = [Allocated, Created, Sealed, Finalized, Reclaimed];
        let allowed: Vec<_> =
            all.iter().flat_map(|&a| all.iter().map(move |&b| (a, b))).filter(|&(a, b)| a.can_move_to(b)).collect();
        assert_eq!(allowed, vec![(Allocated, Created), (Created, Sealed), (Sealed, Finalized), (Sealed, Reclaimed)]);
    }

    #[test]
    fn token_depends_on_idx_and_route() {
        let a = ActorId::new("a");
        assert_ne!(rendezvous_token(0, &a), rendezvous_token(1, &a));
        assert_ne!(rendezvous_token(0, &a), rendezvous_token(0, &ActorId::new("b")));
    }
}
