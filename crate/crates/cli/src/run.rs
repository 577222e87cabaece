use std::fmt::Write as _;
use std::path::Path;

use deaddrop_sim::session::{run_scenario, Outcome, Scenario};

use crate::{create_dir, write, CliError, Status};

pub const TRACE_FILE: &str = "trace.txt";
pub const NOTICEBOARD_FILE: &str = "noticeboard.txt";

pub struct RunReport {
    pub outcome: Outcome,
    pub status: Status,
}

impl RunReport {
    pub fn summary(&self) -> String {
        let o = &self.outcome;
        let mut s = String::new();
        let state = o.state.map_or("-", |st| st.as_str());
        writeln!(s, "verdict   {:?} (exit {})", o.verdict(), self.status.code()).unwrap();
        writeln!(s, "deposit   {}", o.deposit_id.as_deref().unwrap_or("-")).unwrap();
        writeln!(s, "state     {state}").unwrap();
        if let Some((stage, err)) = &o.failure {
            writeln!(s, "failure   {stage:?}: {err}").unwrap();
        }
        if let Some(r) = &o.reclaim {
            writeln!(s, "reclaim   {}", r.as_ref().map_or_else(|e| e.to_string(), |a| format!("refunded {a}"))).unwrap();
        }
        let fin = match &o.finalize {
            Some(Ok(())) => "accepted".to_owned(),
            Some(Err(e)) => format!("rejected: {e}"),
            None => "-".to_owned(),
        };
        writeln!(s, "finalize  {fin}").unwrap();
        writeln!(s, "payload   {}", if o.received_payload.as_deref() == Some(&o.sent_payload[..]) { "match" } else { "absent or different" })
            .unwrap();
        writeln!(s, "audit     {} violation(s)", o.observation.violations.len() + o.observation.storage_contacts.len())
            .unwrap();
        writeln!(s, "ledger    {}", if o.conserved { "conserved" } else { "NOT conserved" }).unwrap();
        write!(s, "rdmpf     {} call(s), {} modexp(s) at the clients", o.counters.rdmpf_calls, o.counters.modexps).unwrap();
        s
    }
}

/// Runs the scenario and, with `out`, writes the trace and the noticeboard
/// export there.
pub fn cmd_run(scenario: &Scenario, out: Option<&Path>) -> Result<RunReport, CliError> {
    let outcome = run_scenario(scenario)?;
    if let Some(dir) = out {
        create_dir(dir)?;
        write(dir.join(TRACE_FILE), &outcome.trace)?;
        write(dir.join(NOTICEBOARD_FILE), &outcome.noticeboard)?;
    }
    let status = outcome.verdict().into();
    Ok(RunReport { outcome, status })
}
