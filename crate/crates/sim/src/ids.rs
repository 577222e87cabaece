use std::fmt;
use std::str::FromStr;

use deaddrop_core::suite::{sha3_256, DetRng, Digest32};

use crate::SimError;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActorId(pub String);

impl ActorId {
    pub fn new(s: impl Into<String>) -> Self {
        Self(s.into())
    }

    /// A fresh principal: 10 random bytes in hex.
    pub fn random(rng: &mut DetRng) -> Self {
        Self(hex::encode(rng.bytes::<10>()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ActorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub const FACTORY: &str = "factory";
pub const ROUTER: &str = "router";
pub const NOTICEBOARD: &str = "noticeboard";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Factory,
    Router,
    Noticeboard,
    Ledger,
    I1,
    I2,
    /// Storage actor `C_i`, 1-based.
    C(usize),
    W,
    Sender,
    Recipient,
    Outsider,
}

impl Role {
    pub fn is_ephemeral(self) -> bool {
        matches!(self, Role::I1 | Role::I2 | Role::C(_) | Role::W)
    }

    pub fn is_client(self) -> bool {
        matches!(self, Role::Sender | Role::Recipient | Role::Outsider)
    }

    /// The code identity: all storage actors share one.
    pub fn code_kind(self) -> &'static str {
        match self {
            Role::I1 => "I1",
            Role::I2 => "I2",
            Role::C(_) => "C",
            Role::W => "W",
            Role::Factory => "Factory",
            Role::Router => "Router",
            Role::Noticeboard => "Noticeboard",
            Role::Ledger => "Ledger",
            Role::Sender | Role::Recipient | Role::Outsider => "Client",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::C(i) => write!(f, "C{i}"),
            Role::Sender => f.write_str("Client:sender"),
            Role::Recipient => f.write_str("Client:recipient"),
            Role::Outsider => f.write_str("Client:outsider"),
            other => f.write_str(other.code_kind()),
        }
    }
}

impl FromStr for Role {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        Ok(match s {
            "Factory" => Role::Factory,
            "Router" => Role::Router,
            "Noticeboard" => Role::Noticeboard,
            "Ledger" => Role::Ledger,
            "I1" => Role::I1,
            "I2" => Role::I2,
            "W" => Role::W,
            "Client:sender" => Role::Sender,
            "Client:recipient" => Role::Recipient,
            "Client:outsider" => Role::Outsider,
            c if c.starts_with('C') => Role::C(
                c[1..].parse().map_err(|_| SimError::Decode(format!("bad role {s:?}")))?,
            ),
            _ => return Err(SimError::Decode(format!("bad role {s:?}"))),
        })
    }
}

/// Expected code hashes per ephemeral role. Fixture constants stand in for Wasm hashes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeHashes {
    pub i1: Digest32,
    pub i2: Digest32,
    pub c: Digest32,
    pub w: Digest32,
}

impl Default for CodeHashes {
    fn default() -> Self {
        let h = |k: &str| sha3_256(format!("deaddrop-wasm/{k}/v1").as_bytes());
        Self { i1: h("I1"), i2: h("I2"), c: h("C"), w: h("W") }
    }
}

impl CodeHashes {
    pub fn get(&self, role: Role) -> Option<Digest32> {
        match role {
            Role::I1 => Some(self.i1),
            Role::I2 => Some(self.i2),
            Role::C(_) => Some(self.c),
            Role::W => Some(self.w),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn role_round_trip() {
        for r in [Role::I1, Role::I2, Role::C(3), Role::W, Role::Sender, Role::Recipient, Role::Router] {
            assert_eq!(r.to_string().parse::<Role>().unwrap(), r);
        }
        assert!("C".parse::<Role>().is_err());
        assert!("Z".parse::<Role>().is_err());
    }

    #[test]
    fn code_hashes_distinct() {
        let h = CodeHashes::default();
        let all = [h.i1, h.i2, h.c, h.w];
        for i in 0..4 {
            for j in i + 1..4 {
                assert_ne!(all[i], all[j]);
            }
        }
        assert_eq!(h.get(Role::C(1)), h.get(Role::C(2)));
    }
}
