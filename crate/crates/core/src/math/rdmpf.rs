use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::field::{mul_u64, pow_u64};
use super::matrix::{check_dims, encode_matrix, decode_exponent_matrix, encoded_matrix_len};
use super::{ExponentMatrix, GroupMatrix, Matrix, MathError, PrimeField, Profile, PublicParams};
use crate::suite::{Digest32, DetRng};

/// Per-call-context operation counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounter {
    pub rdmpf_calls: u64,
    pub modexps: u64,
}

impl OpCounter {
    pub fn absorb(&mut self, other: OpCounter) {
        self.rdmpf_calls += other.rdmpf_calls;
        self.modexps += other.modexps;
    }
}

/// `RDMPF(X, W, Y)[j][k] = prod_{l,m} W[l][m]^(X[j][l] * Y[m][k] mod (p-1)) mod p`.
pub fn rdmpf(field: &PrimeField, x: &ExponentMatrix, w: &GroupMatrix, y: &ExponentMatrix) -> Result<GroupMatrix, MathError> {
    rdmpf_counted(field, x, w, y, &mut OpCounter::default())
}

pub fn rdmpf_counted(
    field: &PrimeField,
    x: &ExponentMatrix,
    w: &GroupMatrix,
    y: &ExponentMatrix,
    counter: &mut OpCounter,
) -> Result<GroupMatrix, MathError> {
    check_dims(x.dim(), w.dim())?;
    check_dims(x.dim(), y.dim())?;
    let d = x.dim();
    counter.rdmpf_calls += 1;
    counter.modexps += (d * d * d * d) as u64;

    if let (Some(p), Some(xs), Some(ws), Some(ys)) =
        (field.small(), x.matrix().to_u64(), w.matrix().to_u64(), y.matrix().to_u64())
    {
        let q = p - 1;
        let mut out = Vec::with_capacity(d * d);
        for j in 0..d {
            for k in 0..d {
                let mut acc = 1u64 % p;
                for l in 0..d {
                    let xjl = xs[j * d + l];
                    for m in 0..d {
                        let e = mul_u64(xjl, ys[m * d + k], q);
                        acc = mul_u64(acc, pow_u64(ws[l * d + m], e, p), p);
                    }
                }
                out.push(BigUint::from(acc));
            }
        }
        return Ok(GroupMatrix::new(field, Matrix::new(d, out)?));
    }

    let mut out = Vec::with_capacity(d * d);
    for j in 0..d {
        for k in 0..d {
            let mut acc = BigUint::one();
            for l in 0..d {
                for m in 0..d {
                    let e = field.mul_exp(x.get(j, l), y.get(m, k));
                    acc = field.mul(&acc, &field.pow(w.get(l, m), &e));
                }
            }
            out.push(acc);
        }
    }
    Ok(GroupMatrix::new(field, Matrix::new(d, out)?))
}

/// `(T1 |> T2)[i][j] = prod_k T2[k][j]^(T1[i][k] mod (p-1)) mod p`.
pub fn compose(field: &PrimeField, t1: &GroupMatrix, t2: &GroupMatrix) -> Result<GroupMatrix, MathError> {
    check_dims(t1.dim(), t2.dim())?;
    let d = t1.dim();
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let mut acc = BigUint::one();
            for k in 0..d {
                let e = field.reduce_exp(t1.get(i, k));
                acc = field.mul(&acc, &field.pow(t2.get(k, j), &e));
            }
            out.push(acc);
        }
    }
    Ok(GroupMatrix::new(field, Matrix::new(d, out)?))
}

/// Secret scalars `(lambda, omega)` in `Z_{p-1}`.
#[derive(Clone, PartialEq, Eq)]
pub struct ScalarSecret {
    lambda: BigUint,
    omega: BigUint,
}

impl std::fmt::Debug for ScalarSecret {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("ScalarSecret(..)")
    }
}

impl ScalarSecret {
    pub fn new(params: &PublicParams, lambda: BigUint, omega: BigUint) -> Result<Self, MathError> {
        let order = params.field().order();
        if &lambda >= order || &omega >= order {
            return Err(MathError::InvalidArgument("scalar not canonical mod p-1".into()));
        }
        if params.profile() == Profile::Production && (lambda.is_zero() || omega.is_zero()) {
            return Err(MathError::DegenerateScalar);
        }
        Ok(Self { lambda, omega })
    }

    pub fn from_u64(params: &PublicParams, lambda: u64, omega: u64) -> Result<Self, MathError> {
        Self::new(params, BigUint::from(lambda), BigUint::from(omega))
    }

    /// Uniform over `[1, p-2]`.
    pub fn random(params: &PublicParams, rng: &mut DetRng) -> Self {
        let order = params.field().order();
        let one = BigUint::one();
        if order <= &one {
            return Self { lambda: BigUint::zero(), omega: BigUint::zero() };
        }
        let lambda = PrimeField::uniform_range(rng, &one, order);
        let omega = PrimeField::uniform_range(rng, &one, order);
        Self { lambda, omega }
    }

    pub fn lambda(&self) -> &BigUint {
        &self.lambda
    }

    pub fn omega(&self) -> &BigUint {
        &self.omega
    }
}

/// Public key `(P, Q) = (lambda * BaseX, omega * BaseY) mod (p-1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicKey {
    pub p: ExponentMatrix,
    pub q: ExponentMatrix,
    params_id: Digest32,
}

impl PublicKey {
    pub fn params_id(&self) -> &Digest32 {
        &self.params_id
    }

    /// `enc(P) || enc(Q)`.
    pub fn encode(&self, params: &PublicParams) -> Vec<u8> {
        let mut out = encode_matrix(self.p.matrix(), params.field());
        out.extend(encode_matrix(self.q.matrix(), params.field()));
        out
    }

    pub fn decode(params: &PublicParams, bytes: &[u8]) -> Result<Self, MathError> {
        let half = encoded_matrix_len(params.field(), params.dim());
        if bytes.len() != 2 * half {
            return Err(MathError::Encoding(format!(
                "public key must be {} bytes, got {}",
                2 * half,
                bytes.len()
            )));
        }
        Ok(Self {
            p: decode_exponent_matrix(&bytes[..half], params.field(), params.dim())?,
            q: decode_exponent_matrix(&bytes[half..], params.field(), params.dim())?,
            params_id: params.digest(),
        })
    }

    pub fn encoded_len(params: &PublicParams) -> usize {
        2 * encoded_matrix_len(params.field(), params.dim())
    }
}

pub fn keygen(params: &PublicParams, secret: &ScalarSecret) -> PublicKey {
    let f = params.field();
    PublicKey {
        p: params.base_x().scale(f, &secret.lambda),
        q: params.base_y().scale(f, &secret.omega),
        params_id: params.digest(),
    }
}

#[derive(Clone, Debug)]
pub struct KeyPair {
    secret: ScalarSecret,
    public: PublicKey,
}

impl KeyPair {
    pub fn from_secret(params: &PublicParams, secret: ScalarSecret) -> Self {
        let public = keygen(params, &secret);
        Self { secret, public }
    }

    pub fn generate(params: &PublicParams, rng: &mut DetRng) -> Self {
        Self::from_secret(params, ScalarSecret::random(params, rng))
    }

    pub fn public(&self) -> &PublicKey {
        &self.public
    }

    pub fn secret(&self) -> &ScalarSecret {
        &self.secret
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NikaMode {
    /// `RDMPF(P_mine, RDMPF(P_peer, W, Q_peer), Q_mine)`; symmetric for honest keys.
    #[default]
    Nested,
    /// `RDMPF(P_mine, W, Q_peer) |> RDMPF(P_peer, W, Q_mine)`.
    Compose,
}

pub fn nika_shared_key(
    params: &PublicParams,
    mine: &KeyPair,
    peer: &PublicKey,
    mode: NikaMode,
) -> Result<GroupMatrix, MathError> {
    nika_shared_key_counted(params, mine, peer, mode, &mut OpCounter::default())
}

pub fn nika_shared_key_counted(
    params: &PublicParams,
    mine: &KeyPair,
    peer: &PublicKey,
    mode: NikaMode,
    counter: &mut OpCounter,
) -> Result<GroupMatrix, MathError> {
    let id = params.digest();
    if mine.public.params_id != id || peer.params_id != id {
        return Err(MathError::ParamsMismatch);
    }
    let f = params.field();
    let me = &mine.public;
    match mode {
        NikaMode::Nested => {
            let inner = rdmpf_counted(f, &peer.p, params.w(), &peer.q, counter)?;
            rdmpf_counted(f, &me.p, &inner, &me.q, counter)
        }
        NikaMode::Compose => {
            let t1 = rdmpf_counted(f, &me.p, params.w(), &peer.q, counter)?;
            let t2 = rdmpf_counted(f, &peer.p, params.w(), &me.q, counter)?;
            compose(f, &t1, &t2)
        }
    }
}
