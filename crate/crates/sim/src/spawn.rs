//! Factory spawn, certified spawn proofs and the client-side checks on them.

use std::collections::BTreeSet;
use std::fmt;

use deaddrop_core::kem::TransferContext;
use deaddrop_core::suite::{blake2s_event, length_prefixed, DetRng, Digest32, DomainTag};
use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};

use crate::ids::{ActorId, CodeHashes, Role};
use crate::wire::{fixed, split_fields, u64_field, utf8};
use crate::SimError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContextEntry {
    pub id: ActorId,
    pub role: Role,
    pub subnet: String,
    pub code_hash: Digest32,
    pub blackholed: bool,
}

impl ContextEntry {
    fn to_bytes(&self) -> Vec<u8> {
        length_prefixed(&[
            self.id.as_str().as_bytes(),
            self.role.to_string().as_bytes(),
            self.subnet.as_bytes(),
            &self.code_hash,
            &[u8::from(self.blackholed)],
        ])
    }

    fn from_bytes(b: &[u8]) -> Result<Self, SimError> {
        let f = split_fields(b)?;
        let [id, role, subnet, code_hash, bh] = f[..] else {
            return Err(SimError::Decode("context entry arity".into()));
        };
        Ok(Self {
            id: ActorId(utf8(id)?),
            role: utf8(role)?.parse()?,
            subnet: utf8(subnet)?,
            code_hash: fixed(code_hash)?,
            blackholed: fixed::<1>(bh)?[0] == 1,
        })
    }
}

/// Everything the Factory certifies about one transfer's ephemeral actors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpawnContext {
    pub factory_txid: String,
    pub deposit_id: String,
    pub entries: Vec<ContextEntry>,
    pub n: usize,
    pub t: usize,
    pub ttl: u64,
    pub deadline: u64,
    pub params_digest: Digest32,
    /// Achieved placement: every subnet label distinct.
    pub distinct_placement: bool,
}

impl SpawnContext {
    pub fn to_bytes(&self) -> Vec<u8> {
        let entries: Vec<Vec<u8>> = self.entries.iter().map(ContextEntry::to_bytes).collect();
        let refs: Vec<&[u8]> = entries.iter().map(Vec::as_slice).collect();
        length_prefixed(&[
            self.factory_txid.as_bytes(),
            self.deposit_id.as_bytes(),
            &(self.n as u64).to_be_bytes(),
            &(self.t as u64).to_be_bytes(),
            &self.ttl.to_be_bytes(),
            &self.deadline.to_be_bytes(),
            &self.params_digest,
            &[u8::from(self.distinct_placement)],
            &length_prefixed(&refs),
        ])
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, SimError> {
        let f = split_fields(b)?;
        let [txid, dep, n, t, ttl, deadline, pd, distinct, entries] = f[..] else {
            return Err(SimError::Decode("spawn context arity".into()));
        };
        Ok(Self {
            factory_txid: utf8(txid)?,
            deposit_id: utf8(dep)?,
            entries: split_fields(entries)?.into_iter().map(ContextEntry::from_bytes).collect::<Result<_, _>>()?,
            n: u64_field(n)? as usize,
            t: u64_field(t)? as usize,
            ttl: u64_field(ttl)?,
            deadline: u64_field(deadline)?,
            params_digest: fixed(pd)?,
            distinct_placement: fixed::<1>(distinct)?[0] == 1,
        })
    }

    pub fn commit(&self) -> Digest32 {
        blake2s_event(DomainTag::ContextCommit, &[b"spawn-context", &self.to_bytes()])
            .expect("context-commit is a BLAKE2s tag")
    }

    pub fn entry(&self, id: &ActorId) -> Option<&ContextEntry> {
        self.entries.iter().find(|e| &e.id == id)
    }

    pub fn id_of(&self, role: Role) -> Option<&ActorId> {
        self.entries.iter().find(|e| e.role == role).map(|e| &e.id)
    }

    pub fn i1(&self) -> &ActorId {
        self.id_of(Role::I1).expect("context has I1")
    }

    pub fn i2(&self) -> &ActorId {
        self.id_of(Role::I2).expect("context has I2")
    }

    pub fn witness(&self) -> &ActorId {
        self.id_of(Role::W).expect("context has W")
    }

    /// `C_1..C_n` in index order.
    pub fn storage(&self) -> Vec<ActorId> {
        let mut cs: Vec<_> = self
            .entries
            .iter()
            .filter_map(|e| match e.role {
                Role::C(i) => Some((i, e.id.clone())),
                _ => None,
            })
            .collect();
        cs.sort();
        cs.into_iter().map(|(_, id)| id).collect()
    }

    /// Ephemerals whose destruction proofs a Finalize must carry.
    pub fn teardown_set(&self) -> BTreeSet<ActorId> {
        self.entries.iter().filter(|e| e.role != Role::W).map(|e| e.id.clone()).collect()
    }

    /// The binding context fed to the KEM and the reclaim MAC.
    pub fn transfer_context(&self) -> TransferContext {
        TransferContext::new()
            .with("context_commit", self.commit())
            .with("deadline", self.deadline.to_be_bytes())
            .with("factory_txid", self.factory_txid.as_bytes())
            .with("params_digest", self.params_digest)
            .with("ttl", self.ttl.to_be_bytes())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpawnProof {
    pub context: SpawnContext,
    pub commit: Digest32,
    pub client_nonce: [u8; 32],
    pub signature: [u8; 64],
}

fn proof_message(commit: &Digest32, nonce: &[u8; 32]) -> Vec<u8> {
    length_prefixed(&[b"spawn-proof", commit, nonce])
}

impl SpawnProof {
    pub fn to_bytes(&self) -> Vec<u8> {
        length_prefixed(&[&self.context.to_bytes(), &self.commit, &self.client_nonce, &self.signature])
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, SimError> {
        let f = split_fields(b)?;
        let [ctx, commit, nonce, sig] = f[..] else {
            return Err(SimError::Decode("spawn proof arity".into()));
        };
        Ok(Self {
            context: SpawnContext::from_bytes(ctx)?,
            commit: fixed(commit)?,
            client_nonce: fixed(nonce)?,
            signature: fixed(sig)?,
        })
    }

    pub fn signature_valid(&self, root: &VerifyingKey) -> bool {
        root.verify(&proof_message(&self.commit, &self.client_nonce), &Signature::from_bytes(&self.signature))
            .is_ok()
    }
}

#[derive(Clone, Debug)]
pub struct SpawnRequest {
    pub deposit_id: String,
    pub factory_txid: String,
    pub n: usize,
    pub t: usize,
    pub ttl: u64,
    pub now: u64,
    pub params_digest: Digest32,
    pub client_nonce: [u8; 32],
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpawnError {
    #[error("pool-exhausted: {needed} actors requested, {available} available")]
    PoolExhausted { needed: usize, available: usize },
    #[error("no subnets configured")]
    NoSubnets,
    #[error("invalid policy: n={n}, t={t}")]
    InvalidPolicy { n: usize, t: usize },
}

/// Spawn order I1, I2, C_1..C_n, W. Each pick prefers a subnet not yet used
/// by this transfer and falls back to any subnet.
pub fn factory_spawn(
    rng: &mut DetRng,
    subnets: &[String],
    available: usize,
    code: &CodeHashes,
    root: &SigningKey,
    req: &SpawnRequest,
) -> Result<SpawnProof, SpawnError> {
    if req.n == 0 || req.t == 0 || req.t > req.n {
        return Err(SpawnError::InvalidPolicy { n: req.n, t: req.t });
    }
    if subnets.is_empty() {
        return Err(SpawnError::NoSubnets);
    }
    let needed = req.n + 3;
    if needed > available {
        return Err(SpawnError::PoolExhausted { needed, available });
    }
    let roles: Vec<Role> = [Role::I1, Role::I2]
        .into_iter()
        .chain((1..=req.n).map(Role::C))
        .chain([Role::W])
        .collect();
    let mut used = BTreeSet::new();
    let mut entries = Vec::with_capacity(roles.len());
    for role in roles {
        let fresh: Vec<&String> = subnets.iter().filter(|s| !used.contains(*s)).collect();
        let subnet = if fresh.is_empty() {
            subnets[rng.below(subnets.len() as u64) as usize].clone()
        } else {
            fresh[rng.below(fresh.len() as u64) as usize].clone()
        };
        used.insert(subnet.clone());
        entries.push(ContextEntry {
            id: ActorId::random(rng),
            role,
            subnet,
            code_hash: code.get(role).expect("ephemeral role"),
            blackholed: true,
        });
    }
    let distinct_placement = used.len() == entries.len();
    let context = SpawnContext {
        factory_txid: req.factory_txid.clone(),
        deposit_id: req.deposit_id.clone(),
        entries,
        n: req.n,
        t: req.t,
        ttl: req.ttl,
        deadline: req.now + req.ttl,
        params_digest: req.params_digest,
        distinct_placement,
    };
    let commit = context.commit();
    let signature = root.sign(&proof_message(&commit, &req.client_nonce)).to_bytes();
    Ok(SpawnProof { context, commit, client_nonce: req.client_nonce, signature })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SpawnReject {
    #[error("signature")]
    Signature,
    #[error("commit")]
    Commit,
    #[error("client-nonce")]
    ClientNonce,
    #[error("role-count")]
    RoleCount,
    #[error("code-hash")]
    CodeHash,
    #[error("controller")]
    Controller,
    #[error("placement")]
    Placement,
    #[error("witness-placement")]
    WitnessPlacement,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PlacementPolicy {
    #[default]
    Any,
    Distinct,
}

impl fmt::Display for PlacementPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlacementPolicy::Any => "any",
            PlacementPolicy::Distinct => "distinct",
        })
    }
}

/// Checks run in this order; the first failure is reported.
pub fn client_verify_spawn(
    proof: &SpawnProof,
    root: &VerifyingKey,
    expected: &CodeHashes,
    n: usize,
    client_nonce: Option<&[u8; 32]>,
    policy: PlacementPolicy,
) -> Result<(), SpawnReject> {
    if !proof.signature_valid(root) {
        return Err(SpawnReject::Signature);
    }
    if proof.context.commit() != proof.commit {
        return Err(SpawnReject::Commit);
    }
    if client_nonce.is_some_and(|nonce| nonce != &proof.client_nonce) {
        return Err(SpawnReject::ClientNonce);
    }
    let ctx = &proof.context;
    let count = |r: Role| ctx.entries.iter().filter(|e| e.role == r).count();
    let ids: BTreeSet<_> = ctx.entries.iter().map(|e| &e.id).collect();
    let roles_ok = [Role::I1, Role::I2, Role::W].into_iter().all(|r| count(r) == 1)
        && (1..=n).all(|i| count(Role::C(i)) == 1)
        && ctx.entries.len() == n + 3
        && ids.len() == ctx.entries.len()
        && ctx.n == n;
    if !roles_ok {
        return Err(SpawnReject::RoleCount);
    }
    if ctx.entries.iter().any(|e| expected.get(e.role) != Some(e.code_hash)) {
        return Err(SpawnReject::CodeHash);
    }
    if ctx.entries.iter().any(|e| !e.blackholed) {
        return Err(SpawnReject::Controller);
    }
    if policy == PlacementPolicy::Distinct {
        let subnets: BTreeSet<_> = ctx.entries.iter().map(|e| &e.subnet).collect();
        if subnets.len() != ctx.entries.len() {
            return Err(SpawnReject::Placement);
        }
    }
    Ok(())
}

/// [`client_verify_spawn`] plus, under the strict policy, W on a subnet no
/// other ephemeral of the transfer uses.
pub fn client_verify_witness(
    proof: &SpawnProof,
    root: &VerifyingKey,
    expected: &CodeHashes,
    n: usize,
    strict: bool,
) -> Result<(), SpawnReject> {
    client_verify_spawn(proof, root, expected, n, None, PlacementPolicy::Any)?;
    if strict {
        let ctx = &proof.context;
        let w = ctx.entry(ctx.witness()).expect("role-count checked");
        if ctx.entries.iter().any(|e| e.role != Role::W && e.subnet == w.subnet) {
            return Err(SpawnReject::WitnessPlacement);
        }
    }
    Ok(())
}
