//! Stored tuple, CSRN sealing and the unseal token handed to I2.

use deaddrop_core::suite::{
    aead_open, aead_seal, length_prefixed, sha3_256_fields, CryptoError, DetRng, Digest32, KeyMaterial, KeyRole,
    AEAD_IV_LEN,
};

use crate::wire::{fixed, split_fields};
use crate::SimError;

/// `{HINT, ct_kem, E_inner, reclaim_tag, c}`, stored byte-identically at every `C_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SealedTuple {
    pub hint: Digest32,
    pub capsule: Vec<u8>,
    pub envelope: Vec<u8>,
    pub reclaim_tag: Digest32,
    pub c: Digest32,
}

impl SealedTuple {
    pub fn to_bytes(&self) -> Vec<u8> {
        length_prefixed(&[&self.hint, &self.capsule, &self.envelope, &self.reclaim_tag, &self.c])
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, SimError> {
        let f = split_fields(b)?;
        let [hint, capsule, envelope, tag, c] = f[..] else {
            return Err(SimError::Decode("tuple arity".into()));
        };
        Ok(Self {
            hint: fixed(hint)?,
            capsule: capsule.to_vec(),
            envelope: envelope.to_vec(),
            reclaim_tag: fixed(tag)?,
            c: fixed(c)?,
        })
    }
}

/// What a storage actor holds: the tuple plus I2's unseal token.
pub fn storage_blob(tuple: &[u8], unseal_token: &[u8]) -> Vec<u8> {
    length_prefixed(&[tuple, unseal_token])
}

pub fn split_blob(blob: &[u8]) -> Result<(SealedTuple, Vec<u8>), SimError> {
    let f = split_fields(blob)?;
    let [tuple, token] = f[..] else {
        return Err(SimError::Decode("storage blob arity".into()));
    };
    Ok((SealedTuple::from_bytes(tuple)?, token.to_vec()))
}

/// `K_transit = SHA3-256(deposit_id, alice_principal, nonce)`, fields length-prefixed.
pub fn transit_key(deposit_id: &str, alice: &str, nonce: &[u8; AEAD_IV_LEN]) -> KeyMaterial {
    KeyMaterial::new(sha3_256_fields(&[deposit_id.as_bytes(), alice.as_bytes(), nonce]), KeyRole::Transit)
}

pub fn csrn_seal(k_transit: &KeyMaterial, nonce: &[u8; AEAD_IV_LEN], deposit_id: &str, csrn: &Digest32) -> Vec<u8> {
    aead_seal(k_transit, nonce, deposit_id.as_bytes(), csrn)
}

pub fn csrn_unwrap(
    deposit_id: &str,
    alice: &str,
    nonce: &[u8; AEAD_IV_LEN],
    ct: &[u8],
) -> Result<Digest32, CryptoError> {
    let pt = aead_open(&transit_key(deposit_id, alice, nonce), nonce, deposit_id.as_bytes(), ct)?;
    pt.try_into().map_err(|_| CryptoError::AuthenticationFailure)
}

/// `K_unseal` for one transfer: a Factory secret bound to the context commit.
pub fn unseal_key(factory_secret: &Digest32, context_commit: &Digest32) -> KeyMaterial {
    KeyMaterial::new(sha3_256_fields(&[b"unseal", factory_secret, context_commit]), KeyRole::Enc)
}

/// `iv || AEAD(K_unseal, aad = HINT, h)`.
pub fn seal_unseal_token(key: &KeyMaterial, hint: &Digest32, h: &Digest32, rng: &mut DetRng) -> Vec<u8> {
    let iv: [u8; AEAD_IV_LEN] = rng.bytes();
    let mut out = iv.to_vec();
    out.extend(aead_seal(key, &iv, hint, h));
    out
}

pub fn open_unseal_token(key: &KeyMaterial, hint: &Digest32, token: &[u8]) -> Result<Digest32, CryptoError> {
    if token.len() < AEAD_IV_LEN {
        return Err(CryptoError::AuthenticationFailure);
    }
    let iv: [u8; AEAD_IV_LEN] = token[..AEAD_IV_LEN].try_into().expect("length checked");
    let pt = aead_open(key, &iv, hint, &token[AEAD_IV_LEN..])?;
    pt.try_into().map_err(|_| CryptoError::AuthenticationFailure)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csrn_round_trip_and_binding() {
        let nonce = [7; 12];
        let csrn = [42; 32];
        let ct = csrn_seal(&transit_key("dep-1", "alice", &nonce), &nonce, "dep-1", &csrn);
        assert_eq!(csrn_unwrap("dep-1", "alice", &nonce, &ct), Ok(csrn));
        assert!(csrn_unwrap("dep-1", "mallory", &nonce, &ct).is_err());
        assert!(csrn_unwrap("dep-2", "alice", &nonce, &ct).is_err());
    }

    #[test]
    fn unseal_token_round_trip() {
        let k = unseal_key(&[1; 32], &[2; 32]);
        let mut rng = DetRng::new("t", b"");
        let tok = seal_unseal_token(&k, &[3; 32], &[4; 32], &mut rng);
        assert_eq!(open_unseal_token(&k, &[3; 32], &tok), Ok([4; 32]));
        assert!(open_unseal_token(&k, &[5; 32], &tok).is_err());
        assert!(open_unseal_token(&unseal_key(&[1; 32], &[9; 32]), &[3; 32], &tok).is_err());
        assert!(open_unseal_token(&k, &[3; 32], &tok[..5]).is_err());
    }

    #[test]
    fn tuple_and_blob_round_trip() {
        let t = SealedTuple { hint: [1; 32], capsule: vec![2; 7], envelope: vec![], reclaim_tag: [3; 32], c: [4; 32] };
        assert_eq!(SealedTuple::from_bytes(&t.to_bytes()).unwrap(), t);
        let (t2, tok) = split_blob(&storage_blob(&t.to_bytes(), b"tok")).unwrap();
        assert_eq!((t2, tok.as_slice()), (t, &b"tok"[..]));
    }
}
