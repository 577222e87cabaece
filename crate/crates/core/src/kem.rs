//! Non-interactive KEM over the matrix-power key agreement.
//!
//! The sender derives `Z` from a one-time key pair and the recipient's
//! public key, expands it into `(K_enc, K_auth)`, and publishes a capsule
//! `epk_S || nonce || tag` whose SHA3 digest is the discovery HINT. The
//! payload travels in an AEAD envelope that also carries `h = SHA3(K_auth)`
//! and the reclaim tag.

use std::collections::BTreeMap;
use std::fmt;

use zeroize::{Zeroize, ZeroizeOnDrop};

use crate::math::{
    encode_matrix, nika_shared_key_counted, KeyPair, MathError, NikaMode, OpCounter, PublicKey,
    PublicParams,
};
use crate::suite::{
    aead_open, aead_seal, hkdf, hmac_sha3, hmac_sha3_verify, length_prefixed, sha3_256, CryptoError,
    DetRng, Digest32, DomainTag, KeyMaterial, KeyRole, AEAD_IV_LEN, AEAD_TAG_LEN, DIGEST_LEN,
};

pub const NONCE_LEN: usize = 32;
pub const ENVELOPE_HEADER_LEN: usize = 2 * DIGEST_LEN;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum KemError {
    #[error(transparent)]
    Math(#[from] MathError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error("malformed {what}: {detail}")]
    Parse { what: &'static str, detail: String },
    #[error("capsule tag mismatch")]
    TagMismatch,
}

/// The transfer context MAC'd into the capsule and the reclaim response.
///
/// Fields are kept sorted by name and serialized as length-prefixed
/// `name, value` pairs, so insertion order does not matter.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TransferContext {
    fields: BTreeMap<String, Vec<u8>>,
}

impl TransferContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: impl AsRef<[u8]>) -> Self {
        self.insert(name, value);
        self
    }

    pub fn insert(&mut self, name: &str, value: impl AsRef<[u8]>) {
        self.fields.insert(name.to_owned(), value.as_ref().to_vec());
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.fields.get(name).map(Vec::as_slice)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let flat: Vec<&[u8]> = self
            .fields
            .iter()
            .flat_map(|(k, v)| [k.as_bytes(), v.as_slice()])
            .collect();
        length_prefixed(&flat)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Capsule {
    pub epk: PublicKey,
    pub nonce: [u8; NONCE_LEN],
    pub tag: Digest32,
}

impl Capsule {
    pub fn encoded_len(params: &PublicParams) -> usize {
        PublicKey::encoded_len(params) + NONCE_LEN + DIGEST_LEN
    }

    pub fn encode(&self, params: &PublicParams) -> Vec<u8> {
        let mut out = self.epk.encode(params);
        out.extend_from_slice(&self.nonce);
        out.extend_from_slice(&self.tag);
        out
    }

    pub fn decode(params: &PublicParams, bytes: &[u8]) -> Result<Self, KemError> {
        let want = Self::encoded_len(params);
        if bytes.len() != want {
            return Err(KemError::Parse {
                what: "capsule",
                detail: format!("expected {want} bytes, got {}", bytes.len()),
            });
        }
        let (epk, rest) = bytes.split_at(PublicKey::encoded_len(params));
        let (nonce, tag) = rest.split_at(NONCE_LEN);
        Ok(Self {
            epk: PublicKey::decode(params, epk)?,
            nonce: nonce.try_into().expect("split at NONCE_LEN"),
            tag: tag.try_into().expect("remaining DIGEST_LEN bytes"),
        })
    }
}

/// `SHA3-256(capsule bytes)`. Needs nothing but the serialized capsule.
pub fn hint(capsule_bytes: &[u8]) -> Digest32 {
    sha3_256(capsule_bytes)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InnerEnvelope {
    pub iv: [u8; AEAD_IV_LEN],
    pub ciphertext: Vec<u8>,
}

impl InnerEnvelope {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = self.iv.to_vec();
        out.extend_from_slice(&self.ciphertext);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, KemError> {
        if bytes.len() < AEAD_IV_LEN + AEAD_TAG_LEN + ENVELOPE_HEADER_LEN {
            return Err(KemError::Parse { what: "envelope", detail: format!("{} bytes is too short", bytes.len()) });
        }
        let (iv, ct) = bytes.split_at(AEAD_IV_LEN);
        Ok(Self { iv: iv.try_into().expect("split at AEAD_IV_LEN"), ciphertext: ct.to_vec() })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvelopePlaintext {
    pub h: Digest32,
    pub reclaim_tag: Digest32,
    pub payload: Vec<u8>,
}

impl EnvelopePlaintext {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(ENVELOPE_HEADER_LEN + self.payload.len());
        out.extend_from_slice(&self.h);
        out.extend_from_slice(&self.reclaim_tag);
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, KemError> {
        if bytes.len() < ENVELOPE_HEADER_LEN {
            return Err(KemError::Parse { what: "envelope plaintext", detail: format!("{} bytes", bytes.len()) });
        }
        Ok(Self {
            h: bytes[..DIGEST_LEN].try_into().expect("32 bytes"),
            reclaim_tag: bytes[DIGEST_LEN..ENVELOPE_HEADER_LEN].try_into().expect("32 bytes"),
            payload: bytes[ENVELOPE_HEADER_LEN..].to_vec(),
        })
    }
}

pub struct TransportKeys {
    pub k_enc: KeyMaterial,
    pub k_auth: KeyMaterial,
}

impl fmt::Debug for TransportKeys {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("TransportKeys(..)")
    }
}

/// The sender's reclaim material: `R`, the salt `alpha` and `c = SHA3(alpha)`.
#[derive(Clone, Zeroize, ZeroizeOnDrop)]
pub struct ReclaimSecrets {
    pub r: Digest32,
    pub alpha: Digest32,
    pub c: Digest32,
}

impl ReclaimSecrets {
    pub fn new(r: Digest32, alpha: Digest32) -> Self {
        Self { r, alpha, c: sha3_256(&alpha) }
    }

    pub fn reclaim_tag(&self) -> Digest32 {
        sha3_256(&self.r)
    }

    pub fn commitment(&self) -> ReclaimCommitment {
        ReclaimCommitment { reclaim_tag: self.reclaim_tag(), c: self.c }
    }
}

impl fmt::Debug for ReclaimSecrets {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReclaimSecrets").field("c", &hex::encode(self.c)).finish_non_exhaustive()
    }
}

/// What the verifier holds: `reclaim_tag = SHA3(R)` and `c = SHA3(alpha)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReclaimCommitment {
    pub reclaim_tag: Digest32,
    pub c: Digest32,
}

#[derive(Debug)]
pub struct Encapsulation {
    pub capsule: Capsule,
    pub capsule_bytes: Vec<u8>,
    pub hint: Digest32,
    pub envelope: InnerEnvelope,
    pub secrets: ReclaimSecrets,
    pub keys: TransportKeys,
}

/// `Z = SHA3-256(enc(K))` with `K` the nested shared matrix.
pub fn shared_secret(
    params: &PublicParams,
    mine: &KeyPair,
    peer: &PublicKey,
    counter: &mut OpCounter,
) -> Result<Digest32, KemError> {
    let k = nika_shared_key_counted(params, mine, peer, NikaMode::Nested, counter)?;
    Ok(sha3_256(&encode_matrix(k.matrix(), params.field())))
}

/// `(K_enc, K_auth)`: the two 32-byte halves of `HKDF(Z, nonce, "rdmpf-kem", 64)`.
pub fn transport_keys(z: &Digest32, nonce: &[u8; NONCE_LEN]) -> TransportKeys {
    let mut okm = hkdf(z, nonce, DomainTag::RdmpfKem, 64).expect("64 bytes is within the HKDF limit");
    let keys = TransportKeys {
        k_enc: KeyMaterial::from_slice(&okm[..32], KeyRole::Enc).expect("32 bytes"),
        k_auth: KeyMaterial::from_slice(&okm[32..], KeyRole::Auth).expect("32 bytes"),
    };
    okm.zeroize();
    keys
}

/// `R = HKDF(Z, "", "reclaim", 32)`.
pub fn reclaim_root(z: &Digest32) -> Digest32 {
    let okm = hkdf(z, b"", DomainTag::Reclaim, 32).expect("32 bytes is within the HKDF limit");
    okm.try_into().expect("32 bytes")
}

pub fn auth_proof(k_auth: &KeyMaterial) -> Digest32 {
    sha3_256(k_auth.as_bytes())
}

pub fn encapsulate(
    params: &PublicParams,
    sender: &KeyPair,
    recipient: &PublicKey,
    context: &TransferContext,
    payload: &[u8],
    alpha: Digest32,
    rng: &mut DetRng,
) -> Result<Encapsulation, KemError> {
    encapsulate_counted(params, sender, recipient, context, payload, alpha, rng, &mut OpCounter::default())
}

#[allow(clippy::too_many_arguments)]
pub fn encapsulate_counted(
    params: &PublicParams,
    sender: &KeyPair,
    recipient: &PublicKey,
    context: &TransferContext,
    payload: &[u8],
    alpha: Digest32,
    rng: &mut DetRng,
    counter: &mut OpCounter,
) -> Result<Encapsulation, KemError> {
    let mut z = shared_secret(params, sender, recipient, counter)?;
    let nonce: [u8; NONCE_LEN] = rng.bytes();
    let keys = transport_keys(&z, &nonce);
    let secrets = ReclaimSecrets::new(reclaim_root(&z), alpha);
    z.zeroize();

    let capsule = Capsule {
        epk: sender.public().clone(),
        nonce,
        tag: hmac_sha3(keys.k_auth.as_bytes(), &context.to_bytes()),
    };
    let capsule_bytes = capsule.encode(params);
    let hint = hint(&capsule_bytes);

    let mut plaintext = EnvelopePlaintext {
        h: auth_proof(&keys.k_auth),
        reclaim_tag: secrets.reclaim_tag(),
        payload: payload.to_vec(),
    }
    .to_bytes();
    let iv: [u8; AEAD_IV_LEN] = rng.bytes();
    let envelope = InnerEnvelope { iv, ciphertext: aead_seal(&keys.k_enc, &iv, &hint, &plaintext) };
    plaintext.zeroize();

    Ok(Encapsulation { capsule, capsule_bytes, hint, envelope, secrets, keys })
}

pub fn decapsulate(
    params: &PublicParams,
    recipient: &KeyPair,
    capsule: &Capsule,
    context: &TransferContext,
) -> Result<TransportKeys, KemError> {
    decapsulate_counted(params, recipient, capsule, context, &mut OpCounter::default())
}

pub fn decapsulate_counted(
    params: &PublicParams,
    recipient: &KeyPair,
    capsule: &Capsule,
    context: &TransferContext,
    counter: &mut OpCounter,
) -> Result<TransportKeys, KemError> {
    let mut z = shared_secret(params, recipient, &capsule.epk, counter)?;
    let keys = transport_keys(&z, &capsule.nonce);
    z.zeroize();
    if !hmac_sha3_verify(keys.k_auth.as_bytes(), &context.to_bytes(), &capsule.tag) {
        return Err(KemError::TagMismatch);
    }
    Ok(keys)
}

/// Opens the envelope with `aad = HINT`.
pub fn open_envelope(
    k_enc: &KeyMaterial,
    envelope: &InnerEnvelope,
    hint: &Digest32,
) -> Result<EnvelopePlaintext, KemError> {
    let mut pt = aead_open(k_enc, &envelope.iv, hint, &envelope.ciphertext)?;
    let out = EnvelopePlaintext::from_bytes(&pt);
    pt.zeroize();
    out
}

fn reclaim_key(r: &Digest32, alpha: &Digest32) -> KeyMaterial {
    let mut ikm = [0u8; 64];
    ikm[..32].copy_from_slice(r);
    ikm[32..].copy_from_slice(alpha);
    let okm = hkdf(&ikm, b"", DomainTag::ReclaimMac, 32).expect("32 bytes is within the HKDF limit");
    ikm.zeroize();
    KeyMaterial::from_slice(&okm, KeyRole::Rec).expect("32 bytes")
}

fn reclaim_message(n: &[u8; 32], idx: u64, context: &[u8]) -> Vec<u8> {
    length_prefixed(&[n, &idx.to_be_bytes(), context, b"reclaim"])
}

/// `HMAC(K_rec, n || idx || context || "reclaim")` with `K_rec = HKDF(R || alpha, "", "reclaim-mac", 32)`.
pub fn reclaim_response(secrets: &ReclaimSecrets, n: &[u8; 32], idx: u64, context: &TransferContext) -> Digest32 {
    let k_rec = reclaim_key(&secrets.r, &secrets.alpha);
    hmac_sha3(k_rec.as_bytes(), &reclaim_message(n, idx, &context.to_bytes()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ReclaimReject {
    #[error("bad-R")]
    BadR,
    #[error("bad-alpha")]
    BadAlpha,
    #[error("bad-mac")]
    BadMac,
}

/// Checks `SHA3(R) = reclaim_tag`, `SHA3(alpha) = c` and the response MAC, in that order.
pub fn verify_reclaim(
    r: &Digest32,
    alpha: &Digest32,
    n: &[u8; 32],
    idx: u64,
    context: &TransferContext,
    resp: &[u8],
    committed: &ReclaimCommitment,
) -> Result<(), ReclaimReject> {
    verify_reclaim_bytes(r, alpha, n, idx, &context.to_bytes(), resp, committed)
}

pub(crate) fn verify_reclaim_bytes(
    r: &Digest32,
    alpha: &Digest32,
    n: &[u8; 32],
    idx: u64,
    context: &[u8],
    resp: &[u8],
    committed: &ReclaimCommitment,
) -> Result<(), ReclaimReject> {
    if sha3_256(r) != committed.reclaim_tag {
        return Err(ReclaimReject::BadR);
    }
    if sha3_256(alpha) != committed.c {
        return Err(ReclaimReject::BadAlpha);
    }
    let k_rec = reclaim_key(r, alpha);
    if !hmac_sha3_verify(k_rec.as_bytes(), &reclaim_message(n, idx, context), resp) {
        return Err(ReclaimReject::BadMac);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::gen_params;

    struct Fixture {
        params: PublicParams,
        recipient: KeyPair,
        sender: KeyPair,
        ctx: TransferContext,
        rng: DetRng,
    }

    fn fixture(bits: u64, dim: usize) -> Fixture {
        let params = gen_params(bits, dim, b"kem-unit").unwrap();
        let mut rng = DetRng::new("kem-unit", &[dim as u8]);
        let recipient = KeyPair::generate(&params, &mut rng);
        let sender = KeyPair::generate(&params, &mut rng);
        let ctx = TransferContext::new().with("factory_txid", b"tx-1").with("ttl", 40u64.to_be_bytes());
        Fixture { params, recipient, sender, ctx, rng }
    }

    #[test]
    fn round_trip() {
        let mut fx = fixture(64, 3);
        let enc = encapsulate(&fx.params, &fx.sender, fx.recipient.public(), &fx.ctx, b"hello", [9; 32], &mut fx.rng)
            .unwrap();
        let capsule = Capsule::decode(&fx.params, &enc.capsule_bytes).unwrap();
        assert_eq!(capsule, enc.capsule);
        let keys = decapsulate(&fx.params, &fx.recipient, &capsule, &fx.ctx).unwrap();
        assert_eq!(keys.k_enc, enc.keys.k_enc);
        assert_eq!(keys.k_auth, enc.keys.k_auth);
        let opened = open_envelope(&keys.k_enc, &enc.envelope, &enc.hint).unwrap();
        assert_eq!(opened.payload, b"hello");
        assert_eq!(opened.h, auth_proof(&keys.k_auth));
        assert_eq!(opened.reclaim_tag, enc.secrets.reclaim_tag());
    }

    #[test]
    fn empty_payload_header_only() {
        let mut fx = fixture(32, 2);
        let enc = encapsulate(&fx.params, &fx.sender, fx.recipient.public(), &fx.ctx, b"", [1; 32], &mut fx.rng)
            .unwrap();
        assert_eq!(enc.envelope.ciphertext.len(), ENVELOPE_HEADER_LEN + AEAD_TAG_LEN);
        let pt = open_envelope(&enc.keys.k_enc, &enc.envelope, &enc.hint).unwrap();
        assert_eq!(pt.to_bytes().len(), 64);
    }

    #[test]
    fn rejects_flipped_tag_and_wrong_context() {
        let mut fx = fixture(32, 2);
        let enc = encapsulate(&fx.params, &fx.sender, fx.recipient.public(), &fx.ctx, b"x", [1; 32], &mut fx.rng)
            .unwrap();
        for bit in 0..256 {
            let mut c = enc.capsule.clone();
            c.tag[bit / 8] ^= 1 << (bit % 8);
            assert_eq!(decapsulate(&fx.params, &fx.recipient, &c, &fx.ctx).unwrap_err(), KemError::TagMismatch);
        }
        let other = fx.ctx.clone().with("ttl", 41u64.to_be_bytes());
        assert_eq!(
            decapsulate(&fx.params, &fx.recipient, &enc.capsule, &other).unwrap_err(),
            KemError::TagMismatch
        );
    }

    #[test]
    fn envelope_bound_to_hint() {
        let mut fx = fixture(32, 2);
        let enc = encapsulate(&fx.params, &fx.sender, fx.recipient.public(), &fx.ctx, b"x", [1; 32], &mut fx.rng)
            .unwrap();
        let mut other = enc.hint;
        other[0] ^= 1;
        assert!(open_envelope(&enc.keys.k_enc, &enc.envelope, &other).is_err());
        let wrong = KeyMaterial::new([0; 32], KeyRole::Enc);
        assert!(open_envelope(&wrong, &enc.envelope, &enc.hint).is_err());
    }

    #[test]
    fn context_is_order_independent() {
        let a = TransferContext::new().with("b", b"2").with("a", b"1");
        let b = TransferContext::new().with("a", b"1").with("b", b"2");
        assert_eq!(a.to_bytes(), b.to_bytes());
        assert_ne!(a.to_bytes(), TransferContext::new().with("a", b"12").to_bytes());
    }

    #[test]
    fn reclaim_checks() {
        let s = ReclaimSecrets::new([3; 32], [4; 32]);
        let ctx = TransferContext::new().with("k", b"v");
        let n = [5u8; 32];
        let resp = reclaim_response(&s, &n, 7, &ctx);
        let com = s.commitment();
        assert_eq!(verify_reclaim(&s.r, &s.alpha, &n, 7, &ctx, &resp, &com), Ok(()));
        assert_eq!(verify_reclaim(&[0; 32], &s.alpha, &n, 7, &ctx, &resp, &com), Err(ReclaimReject::BadR));
        assert_eq!(verify_reclaim(&s.r, &[0; 32], &n, 7, &ctx, &resp, &com), Err(ReclaimReject::BadAlpha));
        assert_eq!(verify_reclaim(&s.r, &s.alpha, &n, 8, &ctx, &resp, &com), Err(ReclaimReject::BadMac));
        assert_ne!(reclaim_response(&s, &n, 8, &ctx), resp);
    }
}
