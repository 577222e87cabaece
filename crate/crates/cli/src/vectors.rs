//! Transfer vectors in the golden-record format: per transfer, a `hint`
//! record over the capsule, a `chacha20poly1305` record for the envelope and
//! a `reclaim-response` record, plus the parameter fixture they were made
//! under.

use std::path::{Path, PathBuf};

use deaddrop_core::golden::{self, GoldenRecord};
use deaddrop_core::kem::{
    auth_proof, encapsulate, reclaim_response, EnvelopePlaintext, TransferContext,
};
use deaddrop_core::math::{gen_params, KeyPair, PublicParams};
use deaddrop_core::suite::DetRng;
use deaddrop_sim::SimError;

use crate::config::read;
use crate::{create_dir, write, CliError};

pub const VECTOR_FILE: &str = "transfer_vectors.txt";
pub const PARAMS_FILE: &str = "params.txt";

const BITS: u64 = 64;
const DIM: usize = 4;

fn context(i: usize) -> TransferContext {
    TransferContext::new()
        .with("context_commit", [i as u8; 32])
        .with("deadline", 400u64.to_be_bytes())
        .with("factory_txid", format!("tx-{i}"))
        .with("ttl", 400u64.to_be_bytes())
}

pub fn transfer_vectors(seed: &[u8], count: usize) -> Result<(PublicParams, Vec<GoldenRecord>), CliError> {
    let params = gen_params(BITS, DIM, seed).map_err(SimError::from)?;
    let mut rng = DetRng::new("cli-vectors", seed);
    let bob = KeyPair::generate(&params, &mut rng);
    let mut out = Vec::with_capacity(3 * count);
    for i in 0..count {
        let alice = KeyPair::generate(&params, &mut rng);
        let ctx = context(i);
        let payload = format!("vector {i}").into_bytes();
        let enc = encapsulate(&params, &alice, bob.public(), &ctx, &payload, rng.bytes(), &mut rng)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let plaintext = EnvelopePlaintext {
            h: auth_proof(&enc.keys.k_auth),
            reclaim_tag: enc.secrets.reclaim_tag(),
            payload,
        }
        .to_bytes();
        let n: [u8; 32] = rng.bytes();
        let idx = i as u64;
        let resp = reclaim_response(&enc.secrets, &n, idx, &ctx);
        out.push(GoldenRecord::new("hint", &[&enc.capsule_bytes], &enc.hint));
        out.push(GoldenRecord::new(
            "chacha20poly1305",
            &[enc.keys.k_enc.as_bytes(), &enc.envelope.iv, &enc.hint, &plaintext],
            &enc.envelope.ciphertext,
        ));
        out.push(GoldenRecord::new(
            "reclaim-response",
            &[&enc.secrets.r, &enc.secrets.alpha, &n, &idx.to_be_bytes(), &ctx.to_bytes()],
            &resp,
        ));
    }
    Ok((params, out))
}

pub fn cmd_vectors(out: &Path, seed: &[u8], count: usize) -> Result<Vec<PathBuf>, CliError> {
    let (params, records) = transfer_vectors(seed, count)?;
    create_dir(out)?;
    let mut text = format!("# capsule/HINT, envelope and reclaim vectors, seed {}\n", hex::encode(seed));
    text.push_str(&golden::render(&records));
    let files = vec![out.join(PARAMS_FILE), out.join(VECTOR_FILE)];
    write(files[0].clone(), &params.to_fixture_string())?;
    write(files[1].clone(), &text)?;
    Ok(files)
}

/// Parses a vector directory back and rechecks every record.
pub fn check_vectors(dir: &Path) -> Result<usize, CliError> {
    PublicParams::from_fixture_str(&read(&dir.join(PARAMS_FILE))?).map_err(SimError::from)?;
    let records = golden::parse(&read(&dir.join(VECTOR_FILE))?).map_err(|e| CliError::Config(e.to_string()))?;
    for r in &records {
        if !r.check().map_err(|e| CliError::Config(e.to_string()))? {
            return Err(CliError::Config(format!("{} record does not recompute", r.primitive)));
        }
    }
    Ok(records.len())
}
