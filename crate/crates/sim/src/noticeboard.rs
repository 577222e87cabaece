//! Certified append-only log of Announce and Finalize records.

use std::fmt::Write as _;

use deaddrop_core::suite::{blake2s_event, length_prefixed, Digest32, DomainTag};
use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};

use crate::ids::ActorId;
use crate::wire::{fixed, split_fields, u64_field, utf8};
use crate::SimError;

pub const GENESIS: Digest32 = [0; 32];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RecordBody {
    Announce { hint: Digest32, rendezvous_token: Digest32, code_hash_i1: Digest32 },
    Finalize { idx: u64, proofs: Vec<(ActorId, Digest32)>, witness_intent: (ActorId, Digest32) },
}

fn pair_bytes(id: &ActorId, d: &Digest32) -> Vec<u8> {
    length_prefixed(&[id.as_str().as_bytes(), d])
}

fn pair_from(b: &[u8]) -> Result<(ActorId, Digest32), SimError> {
    let f = split_fields(b)?;
    let [id, d] = f[..] else {
        return Err(SimError::Decode("pair arity".into()));
    };
    Ok((ActorId(utf8(id)?), fixed(d)?))
}

impl RecordBody {
    pub fn kind(&self) -> &'static str {
        match self {
            RecordBody::Announce { .. } => "announce",
            RecordBody::Finalize { .. } => "finalize",
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            RecordBody::Announce { hint, rendezvous_token, code_hash_i1 } => {
                length_prefixed(&[b"announce", hint, rendezvous_token, code_hash_i1])
            }
            RecordBody::Finalize { idx, proofs, witness_intent } => {
                let ps: Vec<Vec<u8>> = proofs.iter().map(|(id, d)| pair_bytes(id, d)).collect();
                let refs: Vec<&[u8]> = ps.iter().map(Vec::as_slice).collect();
                length_prefixed(&[
                    b"finalize",
                    &idx.to_be_bytes(),
                    &length_prefixed(&refs),
                    &pair_bytes(&witness_intent.0, &witness_intent.1),
                ])
            }
        }
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, SimError> {
        let f = split_fields(b)?;
        match f[..] {
            [b"announce", hint, token, code] => Ok(RecordBody::Announce {
                hint: fixed(hint)?,
                rendezvous_token: fixed(token)?,
                code_hash_i1: fixed(code)?,
            }),
            [b"finalize", idx, proofs, wi] => Ok(RecordBody::Finalize {
                idx: u64_field(idx)?,
                proofs: split_fields(proofs)?.into_iter().map(pair_from).collect::<Result<_, _>>()?,
                witness_intent: pair_from(wi)?,
            }),
            _ => Err(SimError::Decode("unknown record body".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NoticeboardRecord {
    pub seq: u64,
    pub tick: u64,
    pub author: ActorId,
    pub body: RecordBody,
    pub prev: Digest32,
    pub chain: Digest32,
    pub signature: [u8; 64],
}

pub fn chain_hash(prev: &Digest32, seq: u64, tick: u64, author: &ActorId, body: &RecordBody) -> Digest32 {
    blake2s_event(
        DomainTag::WitnessEvent,
        &[b"noticeboard", prev, &seq.to_be_bytes(), &tick.to_be_bytes(), author.as_str().as_bytes(), &body.to_bytes()],
    )
    .expect("witness-event is a BLAKE2s tag")
}

fn head_message(count: u64, chain: &Digest32) -> Vec<u8> {
    length_prefixed(&[b"noticeboard-head", &count.to_be_bytes(), chain])
}

/// Signed summary of the log length and last chain hash, so a truncated
/// export is detectable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Head {
    pub count: u64,
    pub chain: Digest32,
    pub signature: [u8; 64],
}

#[derive(Clone, Debug, Default)]
pub struct Noticeboard {
    records: Vec<NoticeboardRecord>,
}

impl Noticeboard {
    pub fn append(&mut self, root: &SigningKey, tick: u64, author: ActorId, body: RecordBody) -> u64 {
        let seq = self.records.len() as u64;
        let prev = self.records.last().map_or(GENESIS, |r| r.chain);
        let chain = chain_hash(&prev, seq, tick, &author, &body);
        let signature = root.sign(&chain).to_bytes();
        self.records.push(NoticeboardRecord { seq, tick, author, body, prev, chain, signature });
        seq
    }

    pub fn records(&self) -> &[NoticeboardRecord] {
        &self.records
    }

    /// Next sequence number, which an Announce appended now would receive.
    pub fn next_seq(&self) -> u64 {
        self.records.len() as u64
    }

    /// Linear scan for the Announce carrying `hint`.
    pub fn announce_for(&self, hint: &Digest32) -> Option<&NoticeboardRecord> {
        self.records
            .iter()
            .find(|r| matches!(&r.body, RecordBody::Announce { hint: h, .. } if h == hint))
    }

    pub fn head(&self, root: &SigningKey) -> Head {
        let count = self.records.len() as u64;
        let chain = self.records.last().map_or(GENESIS, |r| r.chain);
        Head { count, chain, signature: root.sign(&head_message(count, &chain)).to_bytes() }
    }

    pub fn export(&self, root: &SigningKey) -> String {
        let mut out = String::from("#deaddrop-noticeboard v1\n");
        for r in &self.records {
            writeln!(
                out,
                "record\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.seq,
                r.tick,
                r.author,
                r.body.kind(),
                hex::encode(r.body.to_bytes()),
                hex::encode(r.prev),
                hex::encode(r.chain),
                hex::encode(r.signature)
            )
            .expect("write to String");
        }
        let h = self.head(root);
        writeln!(out, "head\t{}\t{}\t{}", h.count, hex::encode(h.chain), hex::encode(h.signature)).expect("write to String");
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BoardExport {
    pub records: Vec<NoticeboardRecord>,
    pub head: Option<Head>,
}

fn hex_fixed<const N: usize>(s: &str) -> Result<[u8; N], SimError> {
    fixed(&hex::decode(s).map_err(|e| SimError::Decode(e.to_string()))?)
}

fn num(s: &str) -> Result<u64, SimError> {
    s.parse().map_err(|_| SimError::Decode(format!("bad number {s:?}")))
}

pub fn parse_export(text: &str) -> Result<BoardExport, SimError> {
    let mut ex = BoardExport::default();
    for line in text.lines().filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let cols: Vec<&str> = line.split('\t').collect();
        match cols[..] {
            ["record", seq, tick, author, kind, body, prev, chain, sig] => {
                let body = RecordBody::from_bytes(&hex::decode(body).map_err(|e| SimError::Decode(e.to_string()))?)?;
                if body.kind() != kind {
                    return Err(SimError::Decode(format!("record kind {kind} does not match body")));
                }
                ex.records.push(NoticeboardRecord {
                    seq: num(seq)?,
                    tick: num(tick)?,
                    author: ActorId::new(author),
                    body,
                    prev: hex_fixed(prev)?,
                    chain: hex_fixed(chain)?,
                    signature: hex_fixed(sig)?,
                });
            }
            ["head", count, chain, sig] => {
                ex.head = Some(Head { count: num(count)?, chain: hex_fixed(chain)?, signature: hex_fixed(sig)? });
            }
            _ => return Err(SimError::Decode(format!("bad noticeboard line {line:?}"))),
        }
    }
    Ok(ex)
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ChainError {
    #[error("record {0}: sequence number out of order")]
    Sequence(u64),
    #[error("record {0}: prev does not match the preceding chain hash")]
    Link(u64),
    #[error("record {0}: chain hash does not recompute")]
    Hash(u64),
    #[error("record {0}: root signature invalid")]
    Signature(u64),
    #[error("record {0}: Finalize references no earlier Announce")]
    DanglingFinalize(u64),
    #[error("signed head missing")]
    MissingHead,
    #[error("signed head does not match the records (truncated or extended log)")]
    HeadMismatch,
}

pub fn verify_board(records: &[NoticeboardRecord], head: Option<&Head>, root: &VerifyingKey) -> Result<(), ChainError> {
    let mut prev = GENESIS;
    for (i, r) in records.iter().enumerate() {
        if r.seq != i as u64 {
            return Err(ChainError::Sequence(r.seq));
        }
        if r.prev != prev {
            return Err(ChainError::Link(r.seq));
        }
        if chain_hash(&r.prev, r.seq, r.tick, &r.author, &r.body) != r.chain {
            return Err(ChainError::Hash(r.seq));
        }
        if root.verify(&r.chain, &Signature::from_bytes(&r.signature)).is_err() {
            return Err(ChainError::Signature(r.seq));
        }
        if let RecordBody::Finalize { idx, .. } = r.body {
            let ok = idx < r.seq && matches!(records[idx as usize].body, RecordBody::Announce { .. });
            if !ok {
                return Err(ChainError::DanglingFinalize(r.seq));
            }
        }
        prev = r.chain;
    }
    let head = head.ok_or(ChainError::MissingHead)?;
    if head.count != records.len() as u64
        || head.chain != prev
        || root.verify(&head_message(head.count, &head.chain), &Signature::from_bytes(&head.signature)).is_err()
    {
        return Err(ChainError::HeadMismatch);
    }
    Ok(())
}
