//! Offline audit of a trace plus noticeboard export.
//!
//! Every transfer the trace certified is checked against the board. A
//! transfer that reached `Finalized`, or that has any `Finalize` record at
//! its index, must pass `finalize_check`; a reclaimed transfer must have
//! none.

use std::fmt;

use deaddrop_sim::audit::{audit_observation_logs, finalize_check, ObservationReport};
use deaddrop_sim::noticeboard::{parse_export, verify_board, ChainError, RecordBody};
use deaddrop_sim::spawn::SpawnProof;
use deaddrop_sim::trace::Trace;
use deaddrop_sim::SimError;
use ed25519_dalek::VerifyingKey;

use crate::{CliError, Status};

#[derive(Debug)]
pub struct TransferAudit {
    pub deposit_id: String,
    pub state: String,
    pub idx: Option<u64>,
    pub finding: Result<(), String>,
}

#[derive(Debug)]
pub struct AuditReport {
    pub chain: Result<(), ChainError>,
    pub transfers: Vec<TransferAudit>,
    pub observation: ObservationReport,
}

impl AuditReport {
    pub fn status(&self) -> Status {
        if self.chain.is_err() || self.transfers.iter().any(|t| t.finding.is_err()) {
            Status::Finalize
        } else if !self.observation.is_clean() {
            Status::Audit
        } else {
            Status::Success
        }
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.chain {
            Ok(()) => writeln!(f, "chain        ok")?,
            Err(e) => writeln!(f, "chain        FAIL {e}")?,
        }
        for t in &self.transfers {
            let idx = t.idx.map_or("-".into(), |i| i.to_string());
            match &t.finding {
                Ok(()) => writeln!(f, "transfer     {} idx={idx} state={} ok", t.deposit_id, t.state)?,
                Err(e) => writeln!(f, "transfer     {} idx={idx} state={} FAIL {e}", t.deposit_id, t.state)?,
            }
        }
        for v in &self.observation.violations {
            writeln!(f, "observation  FAIL {v} saw both sender and recipient")?;
        }
        for (c, p) in &self.observation.storage_contacts {
            writeln!(f, "observation  FAIL storage {c} contacted by {p}")?;
        }
        write!(f, "status       {:?}", self.status())
    }
}

fn last_state(trace: &Trace, deposit_id: &str) -> String {
    trace
        .events_of("state")
        .filter(|e| e.field("deposit") == Some(deposit_id))
        .filter_map(|e| e.field("state"))
        .last()
        .unwrap_or("-")
        .to_owned()
}

pub fn cmd_audit(trace_text: &str, board_text: &str) -> Result<AuditReport, CliError> {
    let trace = Trace::parse(trace_text)?;
    let board = parse_export(board_text)?;
    let vk_hex = trace
        .meta
        .iter()
        .find_map(|(k, v)| (k == "root-vk").then_some(v))
        .ok_or_else(|| CliError::Config("trace has no root-vk".into()))?;
    let vk_bytes: [u8; 32] = hex::decode(vk_hex)
        .ok()
        .and_then(|b| b.try_into().ok())
        .ok_or_else(|| CliError::Config("root-vk is not 32 hex bytes".into()))?;
    let root = VerifyingKey::from_bytes(&vk_bytes).map_err(|e| CliError::Config(format!("root-vk: {e}")))?;
    let chain = verify_board(&board.records, board.head.as_ref(), &root);

    let mut transfers = Vec::new();
    for (deposit_id, hexproof) in &trace.spawns {
        let proof = hex::decode(hexproof)
            .map_err(|e| SimError::Decode(e.to_string()))
            .and_then(|b| SpawnProof::from_bytes(&b))?;
        let state = last_state(&trace, deposit_id);
        let idx = board
            .records
            .iter()
            .find(|r| &r.author == proof.context.i1() && matches!(r.body, RecordBody::Announce { .. }))
            .map(|r| r.seq);
        let has_finalize = |i: u64| {
            board.records.iter().any(|r| matches!(r.body, RecordBody::Finalize { idx, .. } if idx == i))
        };
        let finding = match idx {
            None if state == "Finalized" => Err("finalized without an Announce".to_owned()),
            None => Ok(()),
            Some(i) if state == "Reclaimed" && has_finalize(i) => Err("reclaimed transfer has a Finalize".to_owned()),
            Some(i) if state == "Finalized" || has_finalize(i) => {
                finalize_check(&board.records, board.head.as_ref(), i, &proof, &root).map_err(|e| e.to_string())
            }
            Some(_) => Ok(()),
        };
        transfers.push(TransferAudit { deposit_id: deposit_id.clone(), state, idx, finding });
    }
    Ok(AuditReport { chain, transfers, observation: audit_observation_logs(&trace) })
}
