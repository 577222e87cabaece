use std::fmt::Write as _;

use deaddrop_core::math::gen_params;
use deaddrop_sim::bench::{run_bench, BenchReport, TokenMode};

use crate::{CliError, Status};

pub struct BenchTable {
    pub rows: Vec<BenchReport>,
}

impl BenchTable {
    pub fn status(&self) -> Status {
        if self.rows.iter().all(BenchReport::matches_prediction) {
            Status::Success
        } else {
            Status::BenchMismatch
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "{:>4} {:>5} {:>3} {:>9} {:>6} {:>9} {:>11} {:>8} {:>8} {:>8} {:>8}",
            "dim", "bits", "n", "mode", "rdmpf", "predicted", "modexp/call", "protocol", "matrix", "pubkey", "capsule"
        )
        .unwrap();
        for r in &self.rows {
            let per_call = r.modexp_per_call.map_or("mixed".to_owned(), |m| m.to_string());
            writeln!(
                s,
                "{:>4} {:>5} {:>3} {:>9} {:>6} {:>9} {:>11} {:>8} {:>8} {:>8} {:>8}",
                r.dim,
                r.bits,
                r.n,
                r.mode.to_string(),
                r.total.rdmpf_calls,
                r.predicted,
                per_call,
                r.protocol_path.rdmpf_calls,
                r.wire.matrix,
                r.wire.public_key,
                r.wire.capsule
            )
            .unwrap();
            let split: Vec<String> = r.per_actor.iter().map(|(a, c)| format!("{a}={}", c.rdmpf_calls)).collect();
            writeln!(s, "{:>4} by actor: {}", "", split.join(" ")).unwrap();
        }
        write!(s, "envelope overhead {} bytes beyond the payload", self.rows.first().map_or(0, |r| r.wire.envelope_overhead))
            .unwrap();
        s
    }
}

/// One row per `(dim, mode)`. Parameters are derived from `seed`.
pub fn cmd_bench(dims: &[usize], bits: u64, n: usize, modes: &[TokenMode], seed: &[u8]) -> Result<BenchTable, CliError> {
    if n == 0 {
        return Err(CliError::Config("n must be positive".into()));
    }
    let mut rows = Vec::with_capacity(dims.len() * modes.len());
    for &dim in dims {
        let params = gen_params(bits, dim, seed).map_err(deaddrop_sim::SimError::from)?;
        for &mode in modes {
            rows.push(run_bench(&params, n, mode, seed)?);
        }
    }
    Ok(BenchTable { rows })
}
