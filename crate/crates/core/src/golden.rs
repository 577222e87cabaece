//! Golden-vector files.
//!
//! One record per line: the primitive name, its hex inputs and the hex
//! expected output, separated by whitespace. `-` stands for an empty
//! string and `#` starts a comment line.

use std::fmt;

use crate::kem::{verify_reclaim_bytes, ReclaimCommitment};
use crate::suite::{
    aead_seal, blake2s_plain, hkdf_raw, hmac_sha3, sha3_256, KeyMaterial, KeyRole, AEAD_IV_LEN,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoldenRecord {
    pub primitive: String,
    pub inputs: Vec<Vec<u8>>,
    pub expected: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GoldenError {
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("{primitive}: expected {want} inputs, got {got}")]
    Arity { primitive: String, want: usize, got: usize },
    #[error("unknown primitive {0:?}")]
    Unknown(String),
    #[error("{0}: malformed input")]
    Input(String),
}

fn hex_field(b: &[u8]) -> String {
    if b.is_empty() {
        "-".into()
    } else {
        hex::encode(b)
    }
}

impl fmt::Display for GoldenRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.primitive)?;
        for i in &self.inputs {
            write!(f, " {}", hex_field(i))?;
        }
        write!(f, " {}", hex_field(&self.expected))
    }
}

impl GoldenRecord {
    pub fn new(primitive: &str, inputs: &[&[u8]], expected: &[u8]) -> Self {
        Self {
            primitive: primitive.to_owned(),
            inputs: inputs.iter().map(|i| i.to_vec()).collect(),
            expected: expected.to_vec(),
        }
    }

    /// Recomputes the primitive and compares against `expected`.
    pub fn check(&self) -> Result<bool, GoldenError> {
        let arity = |want: usize| {
            if self.inputs.len() == want {
                Ok(())
            } else {
                Err(GoldenError::Arity { primitive: self.primitive.clone(), want, got: self.inputs.len() })
            }
        };
        let bad = || GoldenError::Input(self.primitive.clone());
        let a32 = |b: &[u8]| -> Result<[u8; 32], GoldenError> { b.try_into().map_err(|_| bad()) };
        let inp = &self.inputs;
        let got: Vec<u8> = match self.primitive.as_str() {
            "sha3-256" | "hint" | "reclaim-tag" | "auth-proof" | "commitment" => {
                arity(1)?;
                sha3_256(&inp[0]).to_vec()
            }
            "hmac-sha3-256" => {
                arity(2)?;
                hmac_sha3(&inp[0], &inp[1]).to_vec()
            }
            "hkdf-sha3-256" => {
                arity(3)?;
                hkdf_raw(&inp[0], &inp[1], &inp[2], self.expected.len()).map_err(|_| bad())?
            }
            "chacha20poly1305" => {
                arity(4)?;
                let key = KeyMaterial::new(a32(&inp[0])?, KeyRole::Enc);
                let iv: [u8; AEAD_IV_LEN] = inp[1].as_slice().try_into().map_err(|_| bad())?;
                aead_seal(&key, &iv, &inp[2], &inp[3])
            }
            "blake2s-256" => {
                arity(1)?;
                blake2s_plain(&inp[0]).to_vec()
            }
            // inputs: R, alpha, n, idx (8 bytes BE), serialized context; expected: resp
            "reclaim-response" => {
                arity(5)?;
                let (r, alpha, n) = (a32(&inp[0])?, a32(&inp[1])?, a32(&inp[2])?);
                let idx = u64::from_be_bytes(inp[3].as_slice().try_into().map_err(|_| bad())?);
                let commitment = ReclaimCommitment { reclaim_tag: sha3_256(&r), c: sha3_256(&alpha) };
                return Ok(verify_reclaim_bytes(&r, &alpha, &n, idx, &inp[4], &self.expected, &commitment).is_ok());
            }
            other => return Err(GoldenError::Unknown(other.to_owned())),
        };
        Ok(got == self.expected)
    }
}

pub fn parse(text: &str) -> Result<Vec<GoldenRecord>, GoldenError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() < 2 {
            return Err(GoldenError::Parse { line: n + 1, detail: "need a name and an expected value".into() });
        }
        let decode = |s: &str| -> Result<Vec<u8>, GoldenError> {
            if s == "-" {
                Ok(Vec::new())
            } else {
                hex::decode(s).map_err(|e| GoldenError::Parse { line: n + 1, detail: e.to_string() })
            }
        };
        let inputs = parts[1..parts.len() - 1].iter().map(|s| decode(s)).collect::<Result<_, _>>()?;
        out.push(GoldenRecord {
            primitive: parts[0].to_owned(),
            inputs,
            expected: decode(parts[parts.len() - 1])?,
        });
    }
    Ok(out)
}

pub fn render(records: &[GoldenRecord]) -> String {
    records.iter().map(|r| format!("{r}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_check() {
        let recs = vec![
            GoldenRecord::new("sha3-256", &[b""], &sha3_256(b"")),
            GoldenRecord::new("hmac-sha3-256", &[b"k", b"m"], &hmac_sha3(b"k", b"m")),
        ];
        let text = render(&recs);
        assert!(text.starts_with("sha3-256 - a7ffc6f8"));
        let parsed = parse(&text).unwrap();
        assert_eq!(parsed, recs);
        assert!(parsed.iter().all(|r| r.check().unwrap()));
    }

    #[test]
    fn detects_mismatch_and_unknown() {
        let mut r = GoldenRecord::new("sha3-256", &[b"abc"], &sha3_256(b"abc"));
        r.expected[0] ^= 1;
        assert!(!r.check().unwrap());
        assert!(matches!(GoldenRecord::new("md5", &[], b"x").check(), Err(GoldenError::Unknown(_))));
        assert!(parse("sha3-256 zz 00").is_err());
    }
}
