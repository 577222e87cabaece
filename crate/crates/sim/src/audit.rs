//! Offline checks over traces and noticeboard exports.

use std::collections::{BTreeMap, BTreeSet};

use ed25519_dalek::VerifyingKey;

use crate::ids::{ActorId, Role};
use crate::noticeboard::{verify_board, ChainError, Head, NoticeboardRecord, RecordBody};
use crate::spawn::SpawnProof;
use crate::trace::Trace;
use crate::world::destruct_proof_digest;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ObservationReport {
    /// Per ephemeral actor: client principals it received messages from.
    pub endpoints: BTreeMap<ActorId, BTreeSet<ActorId>>,
    /// Ephemerals that saw both a sender-side and a recipient-side principal.
    pub violations: Vec<ActorId>,
    /// Storage actors contacted by anything other than their I1/I2/Factory/W.
    pub storage_contacts: Vec<(ActorId, ActorId)>,
}

impl ObservationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty() && self.storage_contacts.is_empty()
    }
}

/// Builds observation logs from `recv` events and flags any ephemeral that
/// observed both client sides.
pub fn audit_observation_logs(trace: &Trace) -> ObservationReport {
    let roles: BTreeMap<&ActorId, Role> = trace.actors.iter().map(|a| (&a.id, a.role)).collect();
    let mut peers: BTreeMap<ActorId, BTreeSet<ActorId>> = BTreeMap::new();
    for e in trace.events_of("recv") {
        if roles.get(&e.actor).is_some_and(|r| r.is_ephemeral()) {
            let from = ActorId::new(e.field("from").unwrap_or_default());
            peers.entry(e.actor.clone()).or_default().insert(from);
        }
    }
    let mut report = ObservationReport::default();
    // Allowed storage peers, from the certified contexts.
    let mut allowed: BTreeMap<ActorId, BTreeSet<ActorId>> = BTreeMap::new();
    for (_, hexproof) in &trace.spawns {
        let Some(p) = hex::decode(hexproof).ok().and_then(|b| SpawnProof::from_bytes(&b).ok()) else { continue };
        let ctx = &p.context;
        let ok: BTreeSet<ActorId> =
            [ctx.i1().clone(), ctx.i2().clone(), ctx.witness().clone(), ActorId::new(crate::ids::FACTORY)].into();
        for c in ctx.storage() {
            allowed.insert(c, ok.clone());
        }
    }
    for (actor, seen) in peers {
        let clients: BTreeSet<ActorId> =
            seen.iter().filter(|p| roles.get(p).is_some_and(|r| r.is_client())).cloned().collect();
        let sender = clients.iter().any(|c| roles[c] == Role::Sender);
        let recipient = clients.iter().any(|c| roles[c] == Role::Recipient);
        if sender && recipient {
            report.violations.push(actor.clone());
        }
        if matches!(roles[&actor], Role::C(_)) {
            let ok = allowed.get(&actor);
            for p in &seen {
                if ok.is_none_or(|ok| !ok.contains(p)) && p != &actor {
                    report.storage_contacts.push((actor.clone(), p.clone()));
                }
            }
        }
        report.endpoints.insert(actor, clients);
    }
    report
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum FinalizeReject {
    #[error("spawn proof signature or commit invalid")]
    SpawnProof,
    #[error("chain: {0}")]
    Chain(#[from] ChainError),
    #[error("no Announce at idx {0}")]
    MissingAnnounce(u64),
    #[error("Announce at idx {0} was not posted by this transfer's I1")]
    AnnounceMismatch(u64),
    #[error("no Finalize for idx {0}")]
    MissingFinalize(u64),
    #[error("Finalize record {seq} authored by {author}, not the Witness")]
    ForgedAuthor { seq: u64, author: ActorId },
    #[error("Finalize record {0} lacks the Witness intent")]
    MissingWitnessIntent(u64),
    #[error("Finalize record {seq}: proof set differs (missing {missing:?}, extra {extra:?})")]
    ProofSet { seq: u64, missing: Vec<ActorId>, extra: Vec<ActorId> },
    #[error("Finalize record {seq}: proof digest for {subject} does not recompute")]
    ProofDigest { seq: u64, subject: ActorId },
}

/// Accepts iff the log verifies, `Announce(idx)` came from this transfer's
/// I1, and every `Finalize(idx)` is W's and carries exactly the expected
/// destruction proofs plus W's intent.
pub fn finalize_check(
    records: &[NoticeboardRecord],
    head: Option<&Head>,
    idx: u64,
    proof: &SpawnProof,
    root: &VerifyingKey,
) -> Result<(), FinalizeReject> {
    if !proof.signature_valid(root) || proof.context.commit() != proof.commit {
        return Err(FinalizeReject::SpawnProof);
    }
    verify_board(records, head, root)?;
    let ctx = &proof.context;
    let announce = records.get(idx as usize).ok_or(FinalizeReject::MissingAnnounce(idx))?;
    match &announce.body {
        RecordBody::Announce { code_hash_i1, .. } => {
            let i1 = ctx.entry(ctx.i1()).expect("context has I1");
            if &announce.author != ctx.i1() || code_hash_i1 != &i1.code_hash {
                return Err(FinalizeReject::AnnounceMismatch(idx));
            }
        }
        RecordBody::Finalize { .. } => return Err(FinalizeReject::MissingAnnounce(idx)),
    }
    let finals: Vec<&NoticeboardRecord> = records
        .iter()
        .filter(|r| matches!(r.body, RecordBody::Finalize { idx: i, .. } if i == idx))
        .collect();
    if finals.is_empty() {
        return Err(FinalizeReject::MissingFinalize(idx));
    }
    let expected = ctx.teardown_set();
    for r in finals {
        let RecordBody::Finalize { proofs, witness_intent, .. } = &r.body else { unreachable!() };
        if &r.author != ctx.witness() {
            return Err(FinalizeReject::ForgedAuthor { seq: r.seq, author: r.author.clone() });
        }
        if &witness_intent.0 != ctx.witness() {
            return Err(FinalizeReject::MissingWitnessIntent(r.seq));
        }
        let got: BTreeSet<ActorId> = proofs.iter().map(|(id, _)| id.clone()).collect();
        if got != expected || got.len() != proofs.len() {
            return Err(FinalizeReject::ProofSet {
                seq: r.seq,
                missing: expected.difference(&got).cloned().collect(),
                extra: got.difference(&expected).cloned().collect(),
            });
        }
        for (subject, digest) in proofs {
            if digest != &destruct_proof_digest(&proof.commit, subject) {
                return Err(FinalizeReject::ProofDigest { seq: r.seq, subject: subject.clone() });
            }
        }
    }
    Ok(())
}
