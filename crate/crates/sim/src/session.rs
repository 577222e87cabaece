//! Client drivers for Alice (sender), Bob (recipient) and Mallory, plus the
//! end-to-end scenario runner.

use deaddrop_core::kem::{
    auth_proof, decapsulate_counted, encapsulate_counted, hint, open_envelope, reclaim_response, Capsule,
    InnerEnvelope, ReclaimSecrets, TransportKeys,
};
use deaddrop_core::math::{gen_params, KeyPair, OpCounter, Profile};
use deaddrop_core::suite::{DetRng, Digest32, KeyMaterial, KeyRole};

use crate::audit::{audit_observation_logs, finalize_check, FinalizeReject, ObservationReport};
use crate::ids::{ActorId, Role, NOTICEBOARD, ROUTER};
use crate::msg::{Msg, Reject};
use crate::noticeboard::RecordBody;
use crate::spawn::{client_verify_spawn, client_verify_witness, PlacementPolicy, SpawnProof, SpawnReject};
use crate::tuple::{csrn_unwrap, seal_unseal_token, transit_key, SealedTuple};
use crate::world::{destruct_proof_digest, rendezvous_token, DepositState, Faults, World, WorldConfig};
use crate::SimError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub seed: Vec<u8>,
    pub bit_length: u64,
    pub dim: usize,
    /// When set, the generated parameters must land in this profile.
    pub profile: Option<Profile>,
    pub n: usize,
    pub t: usize,
    pub ttl: u64,
    pub amount: u64,
    pub payload: Vec<u8>,
    pub subnets: usize,
    pub placement: PlacementPolicy,
    pub strict_witness: bool,
    pub faults: Faults,
    pub wrong_h: bool,
    pub skip_retrieve: bool,
    pub forge_finalize: bool,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            seed: b"deaddrop-default".to_vec(),
            bit_length: 64,
            dim: 8,
            profile: None,
            n: 2,
            t: 2,
            ttl: 400,
            amount: 1_000_000,
            payload: b"meet at the usual place".to_vec(),
            subnets: 8,
            placement: PlacementPolicy::Distinct,
            strict_witness: true,
            faults: Faults::default(),
            wrong_h: false,
            skip_retrieve: false,
            forge_finalize: false,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Scenario(m));
        if self.n == 0 || self.t == 0 || self.t > self.n {
            return bad(format!("need 1 <= t <= n, got n={} t={}", self.n, self.t));
        }
        if self.ttl < 16 {
            return bad(format!("ttl must be at least 16 ticks, got {}", self.ttl));
        }
        if self.amount == 0 {
            return bad("amount must be positive".into());
        }
        if self.subnets == 0 {
            return bad("need at least one subnet".into());
        }
        if self.seed.is_empty() {
            return bad("seed must be nonempty".into());
        }
        let f = &self.faults;
        for (name, k) in [("kill_c", f.kill_c), ("corrupt_c", f.corrupt_c), ("omit_proof", f.omit_proof)] {
            if k.is_some_and(|k| k == 0 || k > self.n) {
                return bad(format!("{name} must name a storage actor in 1..={}", self.n));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StepError {
    #[error("rejected: {0}")]
    Rejected(Reject),
    #[error("recipient no longer exists")]
    Undeliverable,
    #[error("no reply before the event queue drained")]
    NoReply,
    #[error("spawn proof rejected: {0}")]
    Verify(SpawnReject),
    #[error("kem: {0}")]
    Kem(String),
    #[error("HINT not announced")]
    NotFound,
    #[error("unexpected reply: {0}")]
    Unexpected(&'static str),
    #[error("step out of order: {0}")]
    Order(&'static str),
}

fn expect(reply: Option<(ActorId, Msg)>) -> Result<Msg, StepError> {
    match reply {
        None => Err(StepError::NoReply),
        Some((_, Msg::Rejected { reason })) => Err(StepError::Rejected(reason)),
        Some((_, Msg::Undeliverable { .. })) => Err(StepError::Undeliverable),
        Some((_, m)) => Ok(m),
    }
}

/// Alice's view of her transfer.
pub struct SenderState {
    pub deposit_id: String,
    pub proof: SpawnProof,
    unseal_key: [u8; 32],
    pub hint: Option<Digest32>,
    pub idx: Option<u64>,
    secrets: Option<ReclaimSecrets>,
    pub h: Option<Digest32>,
    pub csrn: Option<Digest32>,
    csrn_nonce: [u8; 12],
}

/// Bob's view after fetching the capsule.
pub struct RecipientState {
    pub route: ActorId,
    pub proof: SpawnProof,
    keys: TransportKeys,
    pub payload: Option<Vec<u8>>,
    pub csrn: Option<Digest32>,
}

/// Tampering applied to an otherwise honest reclaim claim.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClaimTamper {
    None,
    R,
    Alpha,
    Idx,
    N,
}

pub struct Session {
    pub world: World,
    pub scenario: Scenario,
    pub alice: ActorId,
    pub bob: ActorId,
    pub mallory: ActorId,
    pub alice_refund: String,
    pub bob_payout: String,
    bob_keys: KeyPair,
    rng: DetRng,
    pub counters: OpCounter,
    pub sender: Option<SenderState>,
    pub recipient: Option<RecipientState>,
    last_reclaim: Option<Result<u64, StepError>>,
}

impl Session {
    pub fn new(scenario: Scenario) -> Result<Self, SimError> {
        scenario.validate()?;
        let params = gen_params(scenario.bit_length, scenario.dim, &scenario.seed)?;
        if let Some(want) = scenario.profile {
            if params.profile() != want {
                return Err(SimError::Scenario(format!(
                    "bit_length={} dim={} gives profile {}, not {}",
                    scenario.bit_length,
                    scenario.dim,
                    params.profile(),
                    want
                )));
            }
        }
        let mut cfg = WorldConfig::new(&scenario.seed, scenario.subnets);
        cfg.faults = scenario.faults.clone();
        let mut world = World::new(params, cfg);
        let alice = world.add_client(Role::Sender);
        let bob = world.add_client(Role::Recipient);
        let mallory = world.add_client(Role::Outsider);
        world.fund(alice.as_str(), scenario.amount);
        let mut rng = DetRng::new("clients", &scenario.seed);
        let bob_keys = KeyPair::generate(world.params(), &mut rng);
        Ok(Self {
            alice_refund: format!("refund-{}", hex::encode(rng.bytes::<6>())),
            bob_payout: format!("payout-{}", hex::encode(rng.bytes::<6>())),
            world,
            scenario,
            alice,
            bob,
            mallory,
            bob_keys,
            rng,
            counters: OpCounter::default(),
            sender: None,
            recipient: None,
            last_reclaim: None,
        })
    }

    /// Alice opens a deposit and checks the returned spawn proof.
    pub fn open_deposit(&mut self) -> Result<(), StepError> {
        let s = &self.scenario;
        let client_nonce = self.rng.bytes();
        let m = Msg::OpenDeposit {
            amount: s.amount,
            refund_output: self.alice_refund.clone(),
            n: s.n,
            t: s.t,
            ttl: s.ttl,
            client_nonce,
        };
        let reply = expect(self.world.request(&self.alice, &ActorId::new(ROUTER), m))?;
        let Msg::DepositOpened { deposit_id, proof, unseal_key } = reply else {
            return Err(StepError::Unexpected(reply.kind()));
        };
        let vk = self.world.root_key();
        let code = self.world.code_hashes();
        client_verify_spawn(&proof, &vk, code, s.n, Some(&client_nonce), s.placement).map_err(StepError::Verify)?;
        client_verify_witness(&proof, &vk, code, s.n, s.strict_witness).map_err(StepError::Verify)?;
        self.sender = Some(SenderState {
            deposit_id,
            proof: *proof,
            unseal_key,
            hint: None,
            idx: None,
            secrets: None,
            h: None,
            csrn: None,
            csrn_nonce: [0; 12],
        });
        Ok(())
    }

    /// Alice encapsulates to Bob and builds the deposit message for I1.
    pub fn prepare_deposit(&mut self) -> Result<(ActorId, Msg), StepError> {
        let params = self.world.params().clone();
        let st = self.sender.as_mut().ok_or(StepError::Order("deposit before open"))?;
        let ctx = st.proof.context.transfer_context();
        let eph = KeyPair::generate(&params, &mut self.rng);
        let alpha = self.rng.bytes();
        let enc = encapsulate_counted(
            &params,
            &eph,
            self.bob_keys.public(),
            &ctx,
            &self.scenario.payload,
            alpha,
            &mut self.rng,
            &mut self.counters,
        )
        .map_err(|e| StepError::Kem(e.to_string()))?;
        let h = auth_proof(&enc.keys.k_auth);
        let tuple = SealedTuple {
            hint: enc.hint,
            capsule: enc.capsule_bytes.clone(),
            envelope: enc.envelope.encode(),
            reclaim_tag: enc.secrets.reclaim_tag(),
            c: enc.secrets.c,
        };
        let unseal = KeyMaterial::new(st.unseal_key, KeyRole::Enc);
        let unseal_token = seal_unseal_token(&unseal, &enc.hint, &h, &mut self.rng);
        let csrn_nonce: [u8; 12] = self.rng.bytes();
        let k_transit = transit_key(&st.deposit_id, self.alice.as_str(), &csrn_nonce);
        st.hint = Some(enc.hint);
        st.h = Some(h);
        st.secrets = Some(enc.secrets.clone());
        st.csrn_nonce = csrn_nonce;
        let m = Msg::Deposit {
            deposit_id: st.deposit_id.clone(),
            tuple: tuple.to_bytes(),
            unseal_token,
            fee_proof: b"fee-paid".to_vec(),
            k_transit: *k_transit.as_bytes(),
            csrn_nonce,
        };
        Ok((st.proof.context.i1().clone(), m))
    }

    /// Deposits with I1 and unwraps the CSRN receipt. Returns the Announce idx.
    pub fn deposit(&mut self) -> Result<u64, StepError> {
        let (i1, m) = self.prepare_deposit()?;
        let reply = expect(self.world.request(&self.alice, &i1, m))?;
        let Msg::DepositReceipt { idx, csrn_ct } = reply else {
            return Err(StepError::Unexpected(reply.kind()));
        };
        let st = self.sender.as_mut().expect("prepared above");
        st.idx = Some(idx);
        st.csrn = csrn_unwrap(&st.deposit_id, self.alice.as_str(), &st.csrn_nonce, &csrn_ct).ok();
        Ok(idx)
    }

    /// The HINT Alice hands Bob out of band.
    pub fn hint(&self) -> Option<Digest32> {
        self.sender.as_ref().and_then(|s| s.hint)
    }

    /// Bob's local noticeboard scan and route resolution against the
    /// Factory's certified state. No actor sees this.
    pub fn discover(&self, hint: &Digest32) -> Result<(u64, ActorId), StepError> {
        let rec = self.world.noticeboard().announce_for(hint).ok_or(StepError::NotFound)?;
        let RecordBody::Announce { rendezvous_token: token, .. } = &rec.body else { unreachable!() };
        self.world
            .certified()
            .iter()
            .flat_map(|p| p.context.entries.iter())
            .find(|e| &rendezvous_token(rec.seq, &e.id) == token)
            .map(|e| (rec.seq, e.id.clone()))
            .ok_or(StepError::NotFound)
    }

    /// Bob fetches the capsule, checks it against HINT and the spawn proof,
    /// and decapsulates.
    pub fn fetch_capsule(&mut self, route: &ActorId, want: &Digest32) -> Result<(), StepError> {
        let reply = expect(self.world.request(&self.bob, route, Msg::FetchCapsule { hint: *want }))?;
        let Msg::CapsuleReply { capsule, proof } = reply else {
            return Err(StepError::Unexpected(reply.kind()));
        };
        if &hint(&capsule) != want {
            return Err(StepError::Unexpected("capsule does not hash to HINT"));
        }
        let vk = self.world.root_key();
        client_verify_spawn(&proof, &vk, self.world.code_hashes(), self.scenario.n, None, PlacementPolicy::Any)
            .map_err(StepError::Verify)?;
        let params = self.world.params();
        let capsule = Capsule::decode(params, &capsule).map_err(|e| StepError::Kem(e.to_string()))?;
        let keys = decapsulate_counted(params, &self.bob_keys, &capsule, &proof.context.transfer_context(), &mut self.counters)
            .map_err(|e| StepError::Kem(e.to_string()))?;
        self.recipient = Some(RecipientState { route: route.clone(), proof: *proof, keys, payload: None, csrn: None });
        Ok(())
    }

    /// Bob's authorization proof `h = SHA3(K_auth)`.
    pub fn bob_h(&self) -> Option<Digest32> {
        self.recipient.as_ref().map(|r| auth_proof(&r.keys.k_auth))
    }

    /// Submit `h` to the route; on success Bob opens the envelope.
    pub fn retrieve(&mut self, want: &Digest32, h: Digest32) -> Result<Vec<u8>, StepError> {
        let r = self.recipient.as_ref().ok_or(StepError::Order("retrieve before fetch"))?;
        let route = r.route.clone();
        let m = Msg::Retrieve { hint: *want, h, payout: self.bob_payout.clone() };
        let reply = expect(self.world.request(&self.bob, &route, m))?;
        let Msg::Delivered { envelope, csrn } = reply else {
            return Err(StepError::Unexpected(reply.kind()));
        };
        let r = self.recipient.as_mut().expect("checked above");
        let env = InnerEnvelope::decode(&envelope).map_err(|e| StepError::Kem(e.to_string()))?;
        let pt = open_envelope(&r.keys.k_enc, &env, want).map_err(|e| StepError::Kem(e.to_string()))?;
        if pt.h != auth_proof(&r.keys.k_auth) {
            return Err(StepError::Kem("embedded h does not match K_auth".into()));
        }
        r.payload = Some(pt.payload.clone());
        r.csrn = csrn;
        Ok(pt.payload)
    }

    /// Mallory posts a Finalize for `idx` with publicly recomputable proofs.
    pub fn forge_finalize(&mut self, idx: u64) {
        let Some(st) = self.sender.as_ref() else { return };
        let ctx = &st.proof.context;
        let proofs = ctx.teardown_set().into_iter().map(|id| {
            let d = destruct_proof_digest(&st.proof.commit, &id);
            (id, d)
        });
        let body = RecordBody::Finalize {
            idx,
            proofs: proofs.collect(),
            witness_intent: (ctx.witness().clone(), self.rng.bytes()),
        };
        self.world.request(&self.mallory, &ActorId::new(NOTICEBOARD), Msg::Post { body });
    }

    /// Drain all pending work, then move the clock to the deadline.
    pub fn expire(&mut self) {
        self.world.run_until_idle();
        if let Some(st) = &self.sender {
            self.world.advance_to(st.proof.context.deadline);
        }
    }

    /// Challenge-response reclaim from `principal`, optionally tampered.
    pub fn reclaim(&mut self, principal: &ActorId, tamper: ClaimTamper) -> Result<u64, StepError> {
        let st = self.sender.as_ref().ok_or(StepError::Order("reclaim before open"))?;
        let deposit_id = st.deposit_id.clone();
        let router = ActorId::new(ROUTER);
        let reply = expect(self.world.request(principal, &router, Msg::ReclaimRequest { deposit_id: deposit_id.clone() }))?;
        let Msg::ReclaimChallenge { mut n } = reply else {
            return Err(StepError::Unexpected(reply.kind()));
        };
        let st = self.sender.as_ref().expect("checked above");
        let honest = st.secrets.clone().ok_or(StepError::Order("reclaim before deposit"))?;
        let mut idx = st.idx.unwrap_or_default();
        let (mut r, mut alpha) = (honest.r, honest.alpha);
        match tamper {
            ClaimTamper::None => {}
            ClaimTamper::R => r[0] ^= 1,
            ClaimTamper::Alpha => alpha[0] ^= 1,
            ClaimTamper::Idx => idx += 1,
            ClaimTamper::N => n[0] ^= 1,
        }
        let claimed = ReclaimSecrets::new(r, alpha);
        let resp = reclaim_response(&claimed, &n, idx, &st.proof.context.transfer_context());
        let m = Msg::ReclaimClaim { deposit_id, r, alpha, n, resp };
        match expect(self.world.request(principal, &router, m))? {
            Msg::Reclaimed { amount, .. } => Ok(amount),
            other => Err(StepError::Unexpected(other.kind())),
        }
    }

    pub fn state(&self) -> Option<DepositState> {
        let st = self.sender.as_ref()?;
        self.world.deposit(&st.deposit_id).map(|r| r.state)
    }

    pub fn finalize_check(&self) -> Option<Result<(), FinalizeReject>> {
        let st = self.sender.as_ref()?;
        let idx = st.idx?;
        let nb = self.world.noticeboard();
        let head = nb.head(&self.world.root);
        Some(finalize_check(nb.records(), Some(&head), idx, &st.proof, &self.world.root_key()))
    }

    pub fn finish(mut self) -> Outcome {
        self.world.run_until_idle();
        let finalize = self.finalize_check();
        Outcome {
            state: self.state(),
            deposit_id: self.sender.as_ref().map(|s| s.deposit_id.clone()),
            idx: self.sender.as_ref().and_then(|s| s.idx),
            sent_payload: self.scenario.payload.clone(),
            received_payload: self.recipient.as_ref().and_then(|r| r.payload.clone()),
            alice_csrn: self.sender.as_ref().and_then(|s| s.csrn),
            bob_csrn: self.recipient.as_ref().and_then(|r| r.csrn),
            failure: None,
            reclaim: None,
            finalize,
            observation: audit_observation_logs(self.world.trace()),
            conserved: self.world.ledger().conserved(),
            counters: self.counters,
            trace: self.world.trace().to_text(),
            noticeboard: self.world.export_noticeboard(),
            skip_retrieve: self.scenario.skip_retrieve,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Spawn,
    Deposit,
    Discover,
    Fetch,
    Retrieve,
    Reclaim,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Success,
    SpawnRejected,
    DepositFailed,
    RetrievalRejected,
    ReclaimRejected,
    FinalizeRejected,
    IntegrityMismatch,
    AuditViolation,
    ConservationBroken,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub trace: String,
    pub noticeboard: String,
    pub deposit_id: Option<String>,
    pub idx: Option<u64>,
    pub state: Option<DepositState>,
    pub sent_payload: Vec<u8>,
    pub received_payload: Option<Vec<u8>>,
    pub alice_csrn: Option<Digest32>,
    pub bob_csrn: Option<Digest32>,
    pub failure: Option<(Stage, StepError)>,
    pub reclaim: Option<Result<u64, StepError>>,
    pub finalize: Option<Result<(), FinalizeReject>>,
    pub observation: ObservationReport,
    pub conserved: bool,
    pub counters: OpCounter,
    skip_retrieve: bool,
}

impl Outcome {
    pub fn verdict(&self) -> Verdict {
        if let Some((stage, _)) = &self.failure {
            return match stage {
                Stage::Spawn => Verdict::SpawnRejected,
                Stage::Deposit => Verdict::DepositFailed,
                Stage::Discover | Stage::Fetch | Stage::Retrieve => Verdict::RetrievalRejected,
                Stage::Reclaim => Verdict::ReclaimRejected,
            };
        }
        if !self.observation.is_clean() {
            return Verdict::AuditViolation;
        }
        if self.skip_retrieve {
            if !matches!(self.reclaim, Some(Ok(_))) || self.state != Some(DepositState::Reclaimed) {
                return Verdict::ReclaimRejected;
            }
        } else {
            if !matches!(self.finalize, Some(Ok(()))) {
                return Verdict::FinalizeRejected;
            }
            let csrn_ok = self.alice_csrn.is_some() && self.alice_csrn == self.bob_csrn;
            if self.received_payload.as_deref() != Some(self.sent_payload.as_slice()) || !csrn_ok {
                return Verdict::IntegrityMismatch;
            }
        }
        if !self.conserved {
            return Verdict::ConservationBroken;
        }
        Verdict::Success
    }
}

/// Runs one scenario end to end.
pub fn run_scenario(scenario: &Scenario) -> Result<Outcome, SimError> {
    let mut s = Session::new(scenario.clone())?;
    let failure = drive(&mut s);
    let reclaim = s.scenario.skip_retrieve.then(|| s.last_reclaim.take()).flatten();
    let mut out = s.finish();
    out.failure = failure;
    out.reclaim = reclaim;
    Ok(out)
}

fn drive(s: &mut Session) -> Option<(Stage, StepError)> {
    if let Err(e) = s.open_deposit() {
        return Some((Stage::Spawn, e));
    }
    let idx = match s.deposit() {
        Ok(idx) => idx,
        Err(e) => return Some((Stage::Deposit, e)),
    };
    if s.scenario.forge_finalize {
        s.forge_finalize(idx);
    }
    if s.scenario.skip_retrieve {
        s.expire();
        let alice = s.alice.clone();
        let r = s.reclaim(&alice, ClaimTamper::None);
        let failed = r.as_ref().err().cloned();
        s.last_reclaim = Some(r);
        return failed.map(|e| (Stage::Reclaim, e));
    }
    let want = s.hint().expect("deposit sets HINT");
    let route = match s.discover(&want) {
        Ok((_, route)) => route,
        Err(e) => return Some((Stage::Discover, e)),
    };
    if let Err(e) = s.fetch_capsule(&route, &want) {
        return Some((Stage::Fetch, e));
    }
    let mut h = s.bob_h().expect("fetched");
    if s.scenario.wrong_h {
        h = s.rng.bytes();
    }
    s.retrieve(&want, h).err().map(|e| (Stage::Retrieve, e))
}
