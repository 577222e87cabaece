//! Idealized two-input functional encryption with a trusted dealer.
//!
//! Encodings are matrices sealed under a dealer-only AEAD key. Evaluation
//! keys are anchored to one side and one owner; `eval` reveals a single
//! product `P[i][l] * Q[m][k] mod (p-1)` and nothing else.

use std::fmt;
use std::str::FromStr;

use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use num_bigint::BigUint;

use crate::math::{
    decode_exponent_matrix, encode_matrix, ExponentMatrix, GroupMatrix, Matrix, MathError, PublicParams,
};
use crate::suite::{
    aead_open, aead_seal, det_random, length_prefixed, DetRng, Digest32, KeyMaterial, KeyRole, AEAD_IV_LEN,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "L",
            Side::Right => "R",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Side {
    type Err = FeError;

    fn from_str(s: &str) -> Result<Self, FeError> {
        match s {
            "L" => Ok(Side::Left),
            "R" => Ok(Side::Right),
            _ => Err(FeError::Registry(format!("unknown side {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FeError {
    #[error("invalid key")]
    InvalidKey,
    #[error("anchoring violation: {side} slot owned by {owner:?}, key anchored to {anchor:?}")]
    AnchoringViolation { side: Side, owner: String, anchor: String },
    #[error("encoding in the wrong slot")]
    WrongSide,
    #[error("index out of range")]
    IndexOutOfRange,
    #[error("encoding failed authentication")]
    InvalidEncoding,
    #[error("registry: {0}")]
    Registry(String),
    #[error(transparent)]
    Math(#[from] MathError),
}

/// Public handle: the parameter digest and the dealer's verification key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FePublicParams {
    pub params_digest: Digest32,
    pub dealer_vk: VerifyingKey,
}

impl FePublicParams {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.params_digest.to_vec();
        out.extend_from_slice(self.dealer_vk.as_bytes());
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Encoding {
    pub side: Side,
    pub owner: String,
    pub blob: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnchoredKey {
    pub side: Side,
    pub anchor: String,
    signature: Signature,
}

impl AnchoredKey {
    fn message(pp: &FePublicParams, side: Side, anchor: &str) -> Vec<u8> {
        length_prefixed(&[b"fe-key", &pp.params_digest, side.as_str().as_bytes(), anchor.as_bytes()])
    }

    pub fn verify(&self, pp: &FePublicParams) -> bool {
        pp.dealer_vk
            .verify(&Self::message(pp, self.side, &self.anchor), &self.signature)
            .is_ok()
    }

    /// Same fields, different anchor, original signature.
    pub fn with_forged_anchor(&self, anchor: &str) -> Self {
        Self { anchor: anchor.to_owned(), ..self.clone() }
    }
}

/// The trusted dealer. Holds the master secret and serves `Enc`, `KeyGen` and `Eval`.
pub struct Dealer {
    params: PublicParams,
    pp: FePublicParams,
    seal_key: KeyMaterial,
    signing: SigningKey,
    iv_rng: DetRng,
    pub evals: u64,
}

impl fmt::Debug for Dealer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dealer").field("pp", &self.pp).finish_non_exhaustive()
    }
}

pub fn fe_setup(params: &PublicParams, seed: &[u8]) -> Dealer {
    let seal: [u8; 32] = det_random("fe-msk-seal", seed, 32).try_into().expect("32 bytes");
    let sign: [u8; 32] = det_random("fe-msk-sign", seed, 32).try_into().expect("32 bytes");
    let signing = SigningKey::from_bytes(&sign);
    Dealer {
        params: params.clone(),
        pp: FePublicParams { params_digest: params.digest(), dealer_vk: signing.verifying_key() },
        seal_key: KeyMaterial::new(seal, KeyRole::Enc),
        signing,
        iv_rng: DetRng::new("fe-iv", seed),
        evals: 0,
    }
}

impl Dealer {
    pub fn public_params(&self) -> &FePublicParams {
        &self.pp
    }

    fn aad(&self, side: Side, owner: &str) -> Vec<u8> {
        length_prefixed(&[&self.pp.params_digest, side.as_str().as_bytes(), owner.as_bytes()])
    }

    /// `EncL` / `EncR`. The matrix is sealed with a fresh IV.
    pub fn enc(&mut self, side: Side, m: &ExponentMatrix, owner: &str) -> Encoding {
        let iv: [u8; AEAD_IV_LEN] = self.iv_rng.bytes();
        let pt = encode_matrix(m.matrix(), self.params.field());
        let mut blob = iv.to_vec();
        blob.extend(aead_seal(&self.seal_key, &iv, &self.aad(side, owner), &pt));
        Encoding { side, owner: owner.to_owned(), blob }
    }

    /// Dealer-side decryption of an encoding.
    pub fn open(&self, enc: &Encoding) -> Result<ExponentMatrix, FeError> {
        if enc.blob.len() < AEAD_IV_LEN {
            return Err(FeError::InvalidEncoding);
        }
        let (iv, ct) = enc.blob.split_at(AEAD_IV_LEN);
        let iv: [u8; AEAD_IV_LEN] = iv.try_into().expect("split at AEAD_IV_LEN");
        let pt = aead_open(&self.seal_key, &iv, &self.aad(enc.side, &enc.owner), ct)
            .map_err(|_| FeError::InvalidEncoding)?;
        Ok(decode_exponent_matrix(&pt, self.params.field(), self.params.dim())?)
    }

    pub fn keygen(&self, side: Side, anchor: &str) -> AnchoredKey {
        let signature = self.signing.sign(&AnchoredKey::message(&self.pp, side, anchor));
        AnchoredKey { side, anchor: anchor.to_owned(), signature }
    }

    fn check(&self, key: &AnchoredKey, enc_l: &Encoding, enc_r: &Encoding) -> Result<(), FeError> {
        if !key.verify(&self.pp) {
            return Err(FeError::InvalidKey);
        }
        if enc_l.side != Side::Left || enc_r.side != Side::Right {
            return Err(FeError::WrongSide);
        }
        let slot = match key.side {
            Side::Left => enc_l,
            Side::Right => enc_r,
        };
        if slot.owner != key.anchor {
            return Err(FeError::AnchoringViolation {
                side: key.side,
                owner: slot.owner.clone(),
                anchor: key.anchor.clone(),
            });
        }
        Ok(())
    }

    /// `P[i][l] * Q[m][k] mod (p-1)`.
    #[allow(clippy::too_many_arguments)]
    pub fn eval(
        &mut self,
        key: &AnchoredKey,
        enc_l: &Encoding,
        enc_r: &Encoding,
        i: usize,
        l: usize,
        m: usize,
        k: usize,
    ) -> Result<BigUint, FeError> {
        self.check(key, enc_l, enc_r)?;
        let d = self.params.dim();
        if [i, l, m, k].iter().any(|&x| x >= d) {
            return Err(FeError::IndexOutOfRange);
        }
        let p = self.open(enc_l)?;
        let q = self.open(enc_r)?;
        self.evals += 1;
        Ok(self.params.field().mul_exp(p.get(i, l), q.get(m, k)))
    }

    /// `RDMPF(P, W, Q)` with every exponent obtained through `eval`.
    pub fn rdmpf_via_fe(
        &mut self,
        key: &AnchoredKey,
        enc_l: &Encoding,
        enc_r: &Encoding,
        w: &GroupMatrix,
    ) -> Result<GroupMatrix, FeError> {
        let d = self.params.dim();
        if w.dim() != d {
            return Err(MathError::DimensionMismatch { expected: d, got: w.dim() }.into());
        }
        let field = self.params.field().clone();
        let mut out = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut acc = BigUint::from(1u32);
                for l in 0..d {
                    for m in 0..d {
                        let e = self.eval(key, enc_l, enc_r, i, l, m, j)?;
                        acc = field.mul(&acc, &field.pow(w.get(l, m), &e));
                    }
                }
                out.push(acc);
            }
        }
        Ok(GroupMatrix::new(&field, Matrix::new(d, out)?))
    }
}

/// Public registry of encodings. One line per record: `owner<TAB>side<TAB>blob-hex`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Registry {
    pub records: Vec<Encoding>,
}

impl Registry {
    pub fn to_text(&self) -> String {
        self.records
            .iter()
            .map(|e| format!("{}\t{}\t{}\n", e.owner, e.side, hex::encode(&e.blob)))
            .collect()
    }

    pub fn from_text(text: &str) -> Result<Self, FeError> {
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|line| {
                let parts: Vec<&str> = line.split('\t').collect();
                let [owner, side, blob] = parts[..] else {
                    return Err(FeError::Registry(format!("expected 3 fields: {line:?}")));
                };
                Ok(Encoding {
                    side: side.parse()?,
                    owner: owner.to_owned(),
                    blob: hex::decode(blob).map_err(|e| FeError::Registry(e.to_string()))?,
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { records })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{gen_params, rdmpf, PrimeField, Profile};

    fn small() -> PublicParams {
        let bx = Matrix::from_rows(&[[1, 2], [2, 4]]).unwrap();
        let by = Matrix::from_rows(&[[1, 3], [3, 2]]).unwrap();
        let w = Matrix::from_rows(&[[2, 3], [4, 5]]).unwrap();
        PublicParams::new(BigUint::from(7u32), bx, by, w, Profile::Test).unwrap()
    }

    #[test]
    fn setup_is_deterministic_and_omits_msk() {
        let params = small();
        let a = fe_setup(&params, b"s1");
        let b = fe_setup(&params, b"s1");
        let c = fe_setup(&params, b"s2");
        assert_eq!(a.public_params(), b.public_params());
        assert_ne!(a.public_params(), c.public_params());
        let bytes = a.public_params().to_bytes();
        assert!(!bytes.windows(32).any(|w| w == a.seal_key.as_bytes()));
        assert!(!bytes.windows(32).any(|w| w == a.signing.to_bytes()));
    }

    #[test]
    fn enc_open_and_fresh_ivs() {
        let params = small();
        let mut dealer = fe_setup(&params, b"s");
        let f = params.field();
        let m = ExponentMatrix::from_rows(f, &[[5, 4], [3, 0]]).unwrap();
        let e1 = dealer.enc(Side::Left, &m, "alice");
        let e2 = dealer.enc(Side::Left, &m, "alice");
        assert_ne!(e1.blob, e2.blob);
        assert_eq!(dealer.open(&e1).unwrap(), m);
        let outsider = fe_setup(&params, b"other");
        assert_eq!(outsider.open(&e1), Err(FeError::InvalidEncoding));
        let relabeled = Encoding { owner: "bob".into(), ..e1 };
        assert_eq!(dealer.open(&relabeled), Err(FeError::InvalidEncoding));
    }

    #[test]
    fn eval_single_product() {
        let params = small();
        let f = params.field();
        let mut dealer = fe_setup(&params, b"s");
        // 3*I and 5*I, so Eval(0,0,0,0) = 15 mod 6 = 3
        let p = ExponentMatrix::from_rows(f, &[[3, 0], [0, 3]]).unwrap();
        let q = ExponentMatrix::from_rows(f, &[[5, 0], [0, 5]]).unwrap();
        let el = dealer.enc(Side::Left, &p, "alice");
        let er = dealer.enc(Side::Right, &q, "bob");
        let key = dealer.keygen(Side::Left, "alice");
        assert_eq!(dealer.eval(&key, &el, &er, 0, 0, 0, 0).unwrap(), BigUint::from(3u32));
        assert_eq!(dealer.eval(&key, &el, &er, 0, 1, 0, 0).unwrap(), BigUint::ZERO);
        assert_eq!(dealer.eval(&key, &el, &er, 2, 0, 0, 0), Err(FeError::IndexOutOfRange));
    }

    #[test]
    fn forged_key_rejected() {
        let params = small();
        let mut dealer = fe_setup(&params, b"s");
        let key = dealer.keygen(Side::Left, "alice");
        assert!(key.verify(dealer.public_params()));
        let forged = key.with_forged_anchor("mallory");
        assert!(!forged.verify(dealer.public_params()));
        let m = ExponentMatrix::new(params.field(), Matrix::identity(2));
        let el = dealer.enc(Side::Left, &m, "mallory");
        let er = dealer.enc(Side::Right, &m, "bob");
        assert_eq!(dealer.eval(&forged, &el, &er, 0, 0, 0, 0), Err(FeError::InvalidKey));
    }

    #[test]
    fn via_fe_matches_plain_rdmpf() {
        let params = gen_params(32, 3, b"fe").unwrap();
        let f: &PrimeField = params.field();
        let mut dealer = fe_setup(&params, b"fe");
        let mut rng = DetRng::new("fe-test", b"");
        for _ in 0..4 {
            let p = params.base_x().scale(f, &PrimeField::uniform_below(&mut rng, f.order()));
            let q = params.base_y().scale(f, &PrimeField::uniform_below(&mut rng, f.order()));
            let el = dealer.enc(Side::Left, &p, "s");
            let er = dealer.enc(Side::Right, &q, "r");
            let key = dealer.keygen(Side::Left, "s");
            let got = dealer.rdmpf_via_fe(&key, &el, &er, params.w()).unwrap();
            assert_eq!(got, rdmpf(f, &p, params.w(), &q).unwrap());
        }
    }

    #[test]
    fn registry_round_trip() {
        let params = small();
        let mut dealer = fe_setup(&params, b"s");
        let m = ExponentMatrix::new(params.field(), Matrix::identity(2));
        let reg = Registry { records: vec![dealer.enc(Side::Left, &m, "a"), dealer.enc(Side::Right, &m, "b")] };
        assert_eq!(Registry::from_text(&reg.to_text()).unwrap(), reg);
        assert!(Registry::from_text("a\tX\t00\n").is_err());
    }
}
