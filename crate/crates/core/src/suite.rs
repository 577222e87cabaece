//! Domain-separated wrappers over the symmetric primitives.
//!
//! Every hash, MAC, KDF and AEAD call in the protocol goes through this
//! module. The primitives themselves come from the RustCrypto crates; what
//! lives here is the closed set of domain labels, the key schedule glue and
//! the deterministic randomness used by the simulator.

use std::fmt;
use std::str::FromStr;

use blake2::{Blake2s256, Digest as _};
use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::ChaCha20Poly1305;
use hkdf::Hkdf;
use hmac::{Hmac, Mac};
use sha3::digest::{ExtendableOutput, Update, XofReader};
use sha3::{Sha3_256, Shake256};
use subtle::ConstantTimeEq;
use zeroize::{Zeroize, ZeroizeOnDrop};

pub const DIGEST_LEN: usize = 32;
pub const AEAD_IV_LEN: usize = 12;
pub const AEAD_TAG_LEN: usize = 16;
pub const HKDF_MAX_OUTPUT: usize = 255 * DIGEST_LEN;

pub type Digest32 = [u8; DIGEST_LEN];

type HmacSha3 = Hmac<Sha3_256>;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CryptoError {
    #[error("unknown domain tag {0:?}")]
    UnknownTag(String),
    #[error("domain tag {0} is not valid for this operation")]
    WrongTag(DomainTag),
    #[error("requested {0} bytes of HKDF output, at most {HKDF_MAX_OUTPUT} allowed")]
    OutputTooLong(usize),
    #[error("authentication failure")]
    AuthenticationFailure,
    #[error("key material must be exactly 32 bytes, got {0}")]
    BadKeyLength(usize),
}

/// The closed set of domain-separation labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DomainTag {
    RdmpfKem,
    Reclaim,
    ReclaimMac,
    CsrnTransit,
    WitnessEvent,
    ContextCommit,
    Subaccount,
    Hint,
}

impl DomainTag {
    pub const ALL: [DomainTag; 8] = [
        DomainTag::RdmpfKem,
        DomainTag::Reclaim,
        DomainTag::ReclaimMac,
        DomainTag::CsrnTransit,
        DomainTag::WitnessEvent,
        DomainTag::ContextCommit,
        DomainTag::Subaccount,
        DomainTag::Hint,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DomainTag::RdmpfKem => "rdmpf-kem",
            DomainTag::Reclaim => "reclaim",
            DomainTag::ReclaimMac => "reclaim-mac",
            DomainTag::CsrnTransit => "csrn-transit",
            DomainTag::WitnessEvent => "witness-event",
            DomainTag::ContextCommit => "context-commit",
            DomainTag::Subaccount => "subaccount",
            DomainTag::Hint => "hint",
        }
    }
}

impl fmt::Display for DomainTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DomainTag {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DomainTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| CryptoError::UnknownTag(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyRole {
    Enc,
    Auth,
    Rec,
    Transit,
}

/// A 32-byte secret tagged with the role it may be used for.
///
/// The bytes are wiped when the value is dropped.
#[derive(Clone, Zeroize, ZeroizeOnDrop)]
pub struct KeyMaterial {
    bytes: [u8; 32],
    #[zeroize(skip)]
    role: KeyRole,
}

impl KeyMaterial {
    pub fn new(bytes: [u8; 32], role: KeyRole) -> Self {
        Self { bytes, role }
    }

    pub fn from_slice(bytes: &[u8], role: KeyRole) -> Result<Self, CryptoError> {
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| CryptoError::BadKeyLength(bytes.len()))?;
        Ok(Self::new(arr, role))
    }

    pub fn role(&self) -> KeyRole {
        self.role
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.bytes
    }
}

impl PartialEq for KeyMaterial {
    fn eq(&self, other: &Self) -> bool {
        self.role == other.role && bool::from(self.bytes.ct_eq(&other.bytes))
    }
}

impl Eq for KeyMaterial {}

impl fmt::Debug for KeyMaterial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyMaterial")
            .field("role", &self.role)
            .finish_non_exhaustive()
    }
}

pub fn sha3_256(data: &[u8]) -> Digest32 {
    let mut h = Sha3_256::default();
    sha3::Digest::update(&mut h, data);
    sha3::Digest::finalize(h).into()
}

/// SHA3-256 over the length-prefixed concatenation of `fields`.
pub fn sha3_256_fields(fields: &[&[u8]]) -> Digest32 {
    sha3_256(&length_prefixed(fields))
}

pub fn hmac_sha3(key: &[u8], msg: &[u8]) -> Digest32 {
    let mut mac = <HmacSha3 as Mac>::new_from_slice(key).expect("HMAC accepts any key length");
    Mac::update(&mut mac, msg);
    mac.finalize().into_bytes().into()
}

/// Constant-time tag check.
pub fn hmac_sha3_verify(key: &[u8], msg: &[u8], tag: &[u8]) -> bool {
    let mut mac = <HmacSha3 as Mac>::new_from_slice(key).expect("HMAC accepts any key length");
    Mac::update(&mut mac, msg);
    mac.verify_slice(tag).is_ok()
}

/// RFC 5869 extract-then-expand over HMAC-SHA3-256, with the domain tag as `info`.
pub fn hkdf(ikm: &[u8], salt: &[u8], info: DomainTag, out_len: usize) -> Result<Vec<u8>, CryptoError> {
    hkdf_raw(ikm, salt, info.as_str().as_bytes(), out_len)
}

pub(crate) fn hkdf_raw(ikm: &[u8], salt: &[u8], info: &[u8], out_len: usize) -> Result<Vec<u8>, CryptoError> {
    if out_len > HKDF_MAX_OUTPUT {
        return Err(CryptoError::OutputTooLong(out_len));
    }
    let hk = Hkdf::<Sha3_256>::new(Some(salt), ikm);
    let mut okm = vec![0u8; out_len];
    hk.expand(info, &mut okm)
        .map_err(|_| CryptoError::OutputTooLong(out_len))?;
    Ok(okm)
}

fn aead_key_ok(key: &KeyMaterial) -> bool {
    matches!(key.role(), KeyRole::Enc | KeyRole::Transit)
}

/// ChaCha20-Poly1305 seal. Returns `ciphertext || tag`.
///
/// Only `enc` and `transit` keys may be used for sealing.
pub fn aead_seal(key: &KeyMaterial, iv: &[u8; AEAD_IV_LEN], aad: &[u8], plaintext: &[u8]) -> Vec<u8> {
    assert!(aead_key_ok(key), "AEAD requires an enc or transit key, got {:?}", key.role());
    let cipher = ChaCha20Poly1305::new(key.as_bytes().into());
    cipher
        .encrypt(iv.into(), Payload { msg: plaintext, aad })
        .expect("ChaCha20-Poly1305 encryption is infallible for in-range lengths")
}

pub fn aead_open(
    key: &KeyMaterial,
    iv: &[u8; AEAD_IV_LEN],
    aad: &[u8],
    ciphertext: &[u8],
) -> Result<Vec<u8>, CryptoError> {
    if !aead_key_ok(key) {
        return Err(CryptoError::AuthenticationFailure);
    }
    let cipher = ChaCha20Poly1305::new(key.as_bytes().into());
    cipher
        .decrypt(iv.into(), Payload { msg: ciphertext, aad })
        .map_err(|_| CryptoError::AuthenticationFailure)
}

/// BLAKE2s-256 over the length-prefixed tag followed by the length-prefixed fields.
pub fn blake2s_event(tag: DomainTag, fields: &[&[u8]]) -> Result<Digest32, CryptoError> {
    match tag {
        DomainTag::WitnessEvent | DomainTag::ContextCommit | DomainTag::Subaccount => {}
        other => return Err(CryptoError::WrongTag(other)),
    }
    let mut h = Blake2s256::new();
    blake2::Digest::update(&mut h, length_prefixed(&[tag.as_str().as_bytes()]));
    blake2::Digest::update(&mut h, length_prefixed(fields));
    Ok(h.finalize().into())
}

pub fn blake2s_plain(data: &[u8]) -> Digest32 {
    Blake2s256::digest(data).into()
}

/// Concatenate fields, each preceded by its length as a 4-byte big-endian integer.
pub fn length_prefixed(fields: &[&[u8]]) -> Vec<u8> {
    let total = fields.iter().map(|f| f.len() + 4).sum();
    let mut out = Vec::with_capacity(total);
    for f in fields {
        out.extend_from_slice(&(f.len() as u32).to_be_bytes());
        out.extend_from_slice(f);
    }
    out
}

/// `n` bytes from the deterministic stream named by `(stream_label, seed)`.
pub fn det_random(stream_label: &str, seed: &[u8], n: usize) -> Vec<u8> {
    let mut out = vec![0u8; n];
    DetRng::new(stream_label, seed).fill(&mut out);
    out
}

/// A seedable SHAKE256 byte stream.
///
/// Streams with different labels or seeds are independent.
pub struct DetRng {
    reader: <Shake256 as ExtendableOutput>::Reader,
}

impl DetRng {
    pub fn new(stream_label: &str, seed: &[u8]) -> Self {
        let mut xof = Shake256::default();
        xof.update(&length_prefixed(&[b"det-random", stream_label.as_bytes(), seed]));
        Self { reader: xof.finalize_xof() }
    }

    /// A child stream seeded from 32 bytes of this one.
    pub fn fork(&mut self, stream_label: &str) -> DetRng {
        let seed: [u8; 32] = self.bytes();
        DetRng::new(stream_label, &seed)
    }

    pub fn fill(&mut self, buf: &mut [u8]) {
        self.reader.read(buf);
    }

    pub fn bytes<const N: usize>(&mut self) -> [u8; N] {
        let mut out = [0u8; N];
        self.fill(&mut out);
        out
    }

    pub fn next_u64(&mut self) -> u64 {
        u64::from_be_bytes(self.bytes())
    }

    /// Uniform integer in `[0, bound)`.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % bound;
            }
        }
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn range_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo <= hi);
        if lo == 0 && hi == u64::MAX {
            return self.next_u64();
        }
        lo + self.below(hi - lo + 1)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

impl rand_core::RngCore for DetRng {
    fn next_u32(&mut self) -> u32 {
        u32::from_be_bytes(self.bytes())
    }

    fn next_u64(&mut self) -> u64 {
        DetRng::next_u64(self)
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.fill(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand_core::Error> {
        self.fill(dest);
        Ok(())
    }
}

impl rand_core::CryptoRng for DetRng {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha3_fips202_vectors() {
        assert_eq!(
            hex::encode(sha3_256(b"")),
            "a7ffc6f8bf1ed76651c14756a061d662f580ff4de43b49fa82d80a4b80f8434a"
        );
        assert_eq!(
            hex::encode(sha3_256(b"abc")),
            "3a985da74fe225b2045c172d6bd390bd855f086e3e9d525b46bfe24511431532"
        );
    }

    #[test]
    fn hmac_cavp_sample() {
        let key: Vec<u8> = (0u8..32).collect();
        let tag = hmac_sha3(&key, b"Sample message for keylen<blocklen");
        assert_eq!(
            hex::encode(tag),
            "4fe8e202c4f058e8dddc23d8c34e467343e23555e24fc2f025d598f558f67205"
        );
        assert!(hmac_sha3_verify(&key, b"Sample message for keylen<blocklen", &tag));
    }

    #[test]
    fn hmac_bit_flip_changes_tag() {
        let key = [7u8; 32];
        let msg = b"context bytes".to_vec();
        let base = hmac_sha3(&key, &msg);
        for bit in 0..msg.len() * 8 {
            let mut m = msg.clone();
            m[bit / 8] ^= 1 << (bit % 8);
            assert_ne!(hmac_sha3(&key, &m), base);
            assert!(!hmac_sha3_verify(&key, &m, &base));
        }
    }

    #[test]
    fn hkdf_prefix_property_and_limits() {
        let short = hkdf(b"ikm", b"salt", DomainTag::RdmpfKem, 32).unwrap();
        let long = hkdf(b"ikm", b"salt", DomainTag::RdmpfKem, 64).unwrap();
        assert_eq!(&long[..32], &short[..]);
        assert_eq!(
            hkdf(b"ikm", b"", DomainTag::Reclaim, HKDF_MAX_OUTPUT + 1),
            Err(CryptoError::OutputTooLong(HKDF_MAX_OUTPUT + 1))
        );
        assert_eq!(hkdf(b"ikm", b"", DomainTag::Reclaim, HKDF_MAX_OUTPUT).unwrap().len(), HKDF_MAX_OUTPUT);
    }

    #[test]
    fn hkdf_matches_reference_sha3_instantiation() {
        // RFC 5869 case 1 inputs, output computed with an independent HMAC-SHA3 HKDF.
        let ikm = [0x0bu8; 22];
        let salt: Vec<u8> = (0u8..13).collect();
        let info: Vec<u8> = (0xf0u8..=0xf9).collect();
        let okm = hkdf_raw(&ikm, &salt, &info, 42).unwrap();
        assert_eq!(
            hex::encode(okm),
            "0c5160501d65021deaf2c14f5abce04c5bd2635abceeba61c2edb6e8ed72674900557728f2c9f2c4c179"
        );
    }

    #[test]
    fn domain_tags_closed_set() {
        for t in DomainTag::ALL {
            assert_eq!(t.as_str().parse::<DomainTag>().unwrap(), t);
        }
        assert!(matches!("rdmpf".parse::<DomainTag>(), Err(CryptoError::UnknownTag(_))));
    }

    #[test]
    fn hkdf_distinct_tags_distinct_output() {
        let ikm = det_random("hkdf-tags", b"seed", 32);
        let mut outs: Vec<Vec<u8>> = DomainTag::ALL
            .iter()
            .map(|t| hkdf(&ikm, b"", *t, 32).unwrap())
            .collect();
        outs.sort();
        outs.dedup();
        assert_eq!(outs.len(), DomainTag::ALL.len());
    }

    #[test]
    fn aead_rfc8439_vector() {
        let key = KeyMaterial::new(core::array::from_fn(|i| 0x80 + i as u8), KeyRole::Enc);
        let iv: [u8; 12] = hex::decode("070000004041424344454647").unwrap().try_into().unwrap();
        let aad = hex::decode("50515253c0c1c2c3c4c5c6c7").unwrap();
        let pt = b"Ladies and Gentlemen of the class of '99: If I could offer you only one tip for the future, sunscreen would be it.";
        let ct = aead_seal(&key, &iv, &aad, pt);
        assert_eq!(
            hex::encode(&ct),
            "d31a8d34648e60db7b86afbc53ef7ec2a4aded51296e08fea9e2b5a736ee62d63dbea45e8ca9671282fafb69da92728b1a71de0a9e060b2905d6a5b67ecd3b3692ddbd7f2d778b8c9803aee328091b58fab324e4fad675945585808b4831d7bc3ff4def08e4b7a9de576d26586cec64b6116\
             1ae10b594f09e26a7e902ecbd0600691"
        );
        assert_eq!(aead_open(&key, &iv, &aad, &ct).unwrap(), pt);
    }

    #[test]
    fn aead_rejects_wrong_role_on_open() {
        let key = KeyMaterial::new([1; 32], KeyRole::Auth);
        assert_eq!(
            aead_open(&key, &[0; 12], b"", &[0; 16]),
            Err(CryptoError::AuthenticationFailure)
        );
    }

    #[test]
    fn blake2s_reference_and_separation() {
        assert_eq!(
            hex::encode(blake2s_plain(b"")),
            "69217a3079908094e11121d042354a7c1f55b6482ca1a51e1b250dfd1ed0eef9"
        );
        let a = blake2s_event(DomainTag::WitnessEvent, &[b"x", b"y"]).unwrap();
        let b = blake2s_event(DomainTag::ContextCommit, &[b"x", b"y"]).unwrap();
        let c = blake2s_event(DomainTag::WitnessEvent, &[b"y", b"x"]).unwrap();
        let d = blake2s_event(DomainTag::WitnessEvent, &[b"xy"]).unwrap();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
        assert_eq!(
            blake2s_event(DomainTag::Hint, &[b"x"]),
            Err(CryptoError::WrongTag(DomainTag::Hint))
        );
    }

    #[test]
    fn det_random_streams() {
        assert_eq!(det_random("a", b"s", 48), det_random("a", b"s", 48));
        assert!(det_random("a", b"s", 0).is_empty());
        assert_ne!(det_random("a", b"s", 32), det_random("b", b"s", 32));
        assert_ne!(det_random("a", b"s", 32), det_random("a", b"t", 32));
        // prefix-stable
        assert_eq!(det_random("a", b"s", 16)[..], det_random("a", b"s", 64)[..16]);
    }

    #[test]
    fn det_rng_below_is_in_range() {
        let mut rng = DetRng::new("below", b"1");
        for bound in [1u64, 2, 3, 7, 1000, u64::MAX] {
            for _ in 0..200 {
                assert!(rng.below(bound) < bound);
            }
        }
        let mut v: Vec<u32> = (0..50).collect();
        rng.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
    }
}
