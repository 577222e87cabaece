//! Messages exchanged between actors.

use deaddrop_core::kem::ReclaimCommitment;
use deaddrop_core::suite::Digest32;

use crate::noticeboard::RecordBody;
use crate::spawn::SpawnProof;

/// Rejection reasons, named as they appear in the trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum Reject {
    #[error("bad-proof")]
    BadProof,
    #[error("quorum")]
    Quorum,
    #[error("not-found")]
    NotFound,
    #[error("spent")]
    Spent,
    #[error("double-deposit")]
    DoubleDeposit,
    #[error("store-failed")]
    StoreFailed,
    #[error("malformed")]
    Malformed,
    #[error("unauthorized")]
    Unauthorized,
    #[error("insufficient-funds")]
    InsufficientFunds,
    #[error("spawn-failed")]
    SpawnFailed,
    #[error("unknown-deposit")]
    UnknownDeposit,
    #[error("expired")]
    Expired,
    #[error("wrong-principal")]
    WrongPrincipal,
    #[error("too-early")]
    TooEarly,
    #[error("finalized")]
    Finalized,
    #[error("bad-state")]
    BadState,
    #[error("no-challenge")]
    NoChallenge,
    #[error("bad-R")]
    BadR,
    #[error("bad-alpha")]
    BadAlpha,
    #[error("bad-mac")]
    BadMac,
}

#[derive(Clone, Debug)]
pub enum Msg {
    // client -> Router
    OpenDeposit { amount: u64, refund_output: String, n: usize, t: usize, ttl: u64, client_nonce: [u8; 32] },
    DepositOpened { deposit_id: String, proof: Box<SpawnProof>, unseal_key: [u8; 32] },
    // Router <-> Factory
    SpawnRequest { deposit_id: String, factory_txid: String, n: usize, t: usize, ttl: u64, client_nonce: [u8; 32] },
    Spawned { deposit_id: String, result: Result<(Box<SpawnProof>, [u8; 32]), String> },
    // deposit path
    Deposit {
        deposit_id: String,
        tuple: Vec<u8>,
        unseal_token: Vec<u8>,
        fee_proof: Vec<u8>,
        k_transit: [u8; 32],
        csrn_nonce: [u8; 12],
    },
    Store { deposit_id: String, hint: Digest32, blob: Vec<u8>, csrn: Option<([u8; 32], [u8; 12])> },
    StoreAck { csrn_ct: Option<Vec<u8>> },
    Commit { hint: Digest32 },
    Announce { hint: Digest32, code_hash_i1: Digest32, route_to: crate::ids::ActorId },
    Post { body: RecordBody },
    Posted { seq: u64 },
    Sealed { deposit_id: String, idx: u64, commitment: ReclaimCommitment },
    SealAck,
    DepositReceipt { idx: u64, csrn_ct: Vec<u8> },
    // retrieval path
    FetchCapsule { hint: Digest32 },
    CapsuleReply { capsule: Vec<u8>, proof: Box<SpawnProof> },
    Retrieve { hint: Digest32, h: Digest32, payout: String },
    Fetch,
    FetchReply { blob: Vec<u8> },
    FetchCsrn,
    CsrnReply { csrn: Option<Digest32> },
    Payout { deposit_id: String, to: String },
    PayoutDone { result: Result<(), Reject> },
    Delivered { envelope: Vec<u8>, csrn: Option<Digest32> },
    // teardown
    TriggerDestruct,
    DestructIntent { nonce: [u8; 16], deadline: u64, teardown: bool },
    Cleanup,
    DestructProof { subject: crate::ids::ActorId, digest: Digest32 },
    // reclaim
    ReclaimRequest { deposit_id: String },
    ReclaimChallenge { n: [u8; 32] },
    ReclaimClaim { deposit_id: String, r: Digest32, alpha: Digest32, n: [u8; 32], resp: Digest32 },
    Reclaimed { amount: u64, to: String },
    // runtime
    Rejected { reason: Reject },
    Timer,
    Undeliverable { kind: &'static str },
}

impl Msg {
    pub fn kind(&self) -> &'static str {
        match self {
            Msg::OpenDeposit { .. } => "open-deposit",
            Msg::DepositOpened { .. } => "deposit-opened",
            Msg::SpawnRequest { .. } => "spawn-request",
            Msg::Spawned { .. } => "spawned",
            Msg::Deposit { .. } => "deposit",
            Msg::Store { .. } => "store",
            Msg::StoreAck { .. } => "store-ack",
            Msg::Commit { .. } => "commit",
            Msg::Announce { .. } => "announce",
            Msg::Post { .. } => "post",
            Msg::Posted { .. } => "posted",
            Msg::Sealed { .. } => "sealed",
            Msg::SealAck => "seal-ack",
            Msg::DepositReceipt { .. } => "deposit-receipt",
            Msg::FetchCapsule { .. } => "fetch-capsule",
            Msg::CapsuleReply { .. } => "capsule-reply",
            Msg::Retrieve { .. } => "retrieve",
            Msg::Fetch => "fetch",
            Msg::FetchReply { .. } => "fetch-reply",
            Msg::FetchCsrn => "fetch-csrn",
            Msg::CsrnReply { .. } => "csrn-reply",
            Msg::Payout { .. } => "payout",
            Msg::PayoutDone { .. } => "payout-done",
            Msg::Delivered { .. } => "delivered",
            Msg::TriggerDestruct => "trigger-destruct",
            Msg::DestructIntent { .. } => "destruct-intent",
            Msg::Cleanup => "cleanup",
            Msg::DestructProof { .. } => "destruct-proof",
            Msg::ReclaimRequest { .. } => "reclaim-request",
            Msg::ReclaimChallenge { .. } => "reclaim-challenge",
            Msg::ReclaimClaim { .. } => "reclaim-claim",
            Msg::Reclaimed { .. } => "reclaimed",
            Msg::Rejected { .. } => "rejected",
            Msg::Timer => "timer",
            Msg::Undeliverable { .. } => "undeliverable",
        }
    }
}
