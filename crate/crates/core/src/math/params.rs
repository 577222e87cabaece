use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::Num;

use super::field::random_prime;
use super::matrix::{decode_exponent_matrix, decode_group_matrix, encode_matrix, rank_over_zp};
use super::{ExponentMatrix, GroupMatrix, Matrix, MathError, PrimeField};
use crate::suite::{sha3_256, DetRng, Digest32};

const PRIME_ATTEMPTS_PER_BIT: usize = 200;
const MATRIX_ATTEMPTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    Production,
    Test,
}

impl Profile {
    pub fn as_str(self) -> &'static str {
        match self {
            Profile::Production => "production",
            Profile::Test => "test",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Profile {
    type Err = MathError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "production" => Ok(Profile::Production),
            "test" => Ok(Profile::Test),
            other => Err(MathError::Fixture(format!("unknown profile {other:?}"))),
        }
    }
}

/// `(p, dim, BaseX, BaseY, W)` plus the profile label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicParams {
    field: PrimeField,
    dim: usize,
    base_x: ExponentMatrix,
    base_y: ExponentMatrix,
    w: GroupMatrix,
    profile: Profile,
    digest: Digest32,
}

impl PublicParams {
    /// Validates primality, the rank conditions and that `W` has unit entries.
    pub fn new(
        p: BigUint,
        base_x: Matrix,
        base_y: Matrix,
        w: Matrix,
        profile: Profile,
    ) -> Result<Self, MathError> {
        let field = PrimeField::new(p)?;
        let dim = base_x.dim();
        for m in [&base_y, &w] {
            if m.dim() != dim {
                return Err(MathError::DimensionMismatch { expected: dim, got: m.dim() });
            }
        }
        if dim < 2 {
            return Err(MathError::InvalidArgument("dim must be at least 2".into()));
        }
        if profile == Profile::Production {
            if !(8..=24).contains(&dim) {
                return Err(MathError::InvalidArgument(format!("production dim must be in 8..=24, got {dim}")));
            }
            if field.bits() < 192 {
                return Err(MathError::InvalidArgument(format!(
                    "production prime must have at least 192 bits, got {}",
                    field.bits()
                )));
            }
        }
        if w.entries().iter().any(|v| v == &BigUint::ZERO || v >= field.modulus()) {
            return Err(MathError::NonUnit);
        }
        let base_x = ExponentMatrix::new(&field, base_x);
        let base_y = ExponentMatrix::new(&field, base_y);
        let w = GroupMatrix::new(&field, w);
        for (name, m, want) in [
            ("BaseX", base_x.matrix(), dim - 1),
            ("BaseY", base_y.matrix(), dim - 1),
            ("W", w.matrix(), dim),
        ] {
            let got = rank_over_zp(m, &field);
            if got != want {
                return Err(MathError::RankCondition { which: name, expected: want, got });
            }
        }
        let mut params = Self { field, dim, base_x, base_y, w, profile, digest: [0; 32] };
        params.digest = sha3_256(params.to_fixture_string().as_bytes());
        Ok(params)
    }

    pub fn field(&self) -> &PrimeField {
        &self.field
    }

    pub fn p(&self) -> &BigUint {
        self.field.modulus()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn base_x(&self) -> &ExponentMatrix {
        &self.base_x
    }

    pub fn base_y(&self) -> &ExponentMatrix {
        &self.base_y
    }

    pub fn w(&self) -> &GroupMatrix {
        &self.w
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    /// SHA3-256 of the fixture serialization.
    pub fn digest(&self) -> Digest32 {
        self.digest
    }

    /// Flat `key=value` text: p as big-endian hex, matrices in the wire encoding.
    pub fn to_fixture_string(&self) -> String {
        format!(
            "profile={}\np={}\ndim={}\nbase_x={}\nbase_y={}\nw={}\n",
            self.profile,
            self.p().to_str_radix(16),
            self.dim,
            hex::encode(encode_matrix(self.base_x.matrix(), &self.field)),
            hex::encode(encode_matrix(self.base_y.matrix(), &self.field)),
            hex::encode(encode_matrix(self.w.matrix(), &self.field)),
        )
    }

    pub fn from_fixture_str(text: &str) -> Result<Self, MathError> {
        let get = |key: &str| -> Result<String, MathError> {
            text.lines()
                .filter_map(|l| l.split_once('='))
                .find(|(k, _)| k.trim() == key)
                .map(|(_, v)| v.trim().to_owned())
                .ok_or_else(|| MathError::Fixture(format!("missing key {key:?}")))
        };
        let profile: Profile = get("profile")?.parse()?;
        let p = BigUint::from_str_radix(&get("p")?, 16)
            .map_err(|e| MathError::Fixture(format!("bad p: {e}")))?;
        let dim: usize = get("dim")?
            .parse()
            .map_err(|e| MathError::Fixture(format!("bad dim: {e}")))?;
        let field = PrimeField::new(p.clone())?;
        let hexm = |s: String| hex::decode(s).map_err(|e| MathError::Fixture(format!("bad hex: {e}")));
        let bx = decode_exponent_matrix(&hexm(get("base_x")?)?, &field, dim)?;
        let by = decode_exponent_matrix(&hexm(get("base_y")?)?, &field, dim)?;
        let w = decode_group_matrix(&hexm(get("w")?)?, &field, dim)?;
        Self::new(p, bx.matrix().clone(), by.matrix().clone(), w.matrix().clone(), profile)
    }
}

/// Deterministic parameter generation.
///
/// The profile is `production` when `bit_length >= 192` and `dim` is in
/// `8..=24`, `test` otherwise.
pub fn gen_params(bit_length: u64, dim: usize, seed: &[u8]) -> Result<PublicParams, MathError> {
    if bit_length < 8 {
        return Err(MathError::InvalidArgument(format!("bit_length must be >= 8, got {bit_length}")));
    }
    if dim < 2 {
        return Err(MathError::InvalidArgument(format!("dim must be >= 2, got {dim}")));
    }
    if seed.is_empty() {
        return Err(MathError::InvalidArgument("seed must be nonempty".into()));
    }
    let profile = if bit_length >= 192 && (8..=24).contains(&dim) {
        Profile::Production
    } else {
        Profile::Test
    };
    let mut stream_seed = seed.to_vec();
    stream_seed.extend_from_slice(&bit_length.to_be_bytes());
    stream_seed.extend_from_slice(&(dim as u64).to_be_bytes());
    let mut rng = DetRng::new("gen-params", &stream_seed);

    let p = random_prime(&mut rng, bit_length, PRIME_ATTEMPTS_PER_BIT * bit_length as usize)
        .ok_or(MathError::GenerationFailed("no prime found"))?;
    let field = PrimeField::new(p.clone())?;

    let base_x = rank_deficient_base(&field, dim, &mut rng)?;
    let base_y = rank_deficient_base(&field, dim, &mut rng)?;
    let w = full_rank_units(&field, dim, &mut rng)?;
    PublicParams::new(p, base_x, base_y, w, profile)
}

/// `dim - 1` random rows of full row rank plus one random linear combination of them.
fn rank_deficient_base(field: &PrimeField, dim: usize, rng: &mut DetRng) -> Result<Matrix, MathError> {
    let p = field.modulus();
    for _ in 0..MATRIX_ATTEMPTS {
        let rows: Vec<Vec<BigUint>> = (0..dim - 1)
            .map(|_| (0..dim).map(|_| PrimeField::uniform_below(rng, field.order())).collect())
            .collect();
        let mut padded = rows.concat();
        padded.extend(std::iter::repeat_n(BigUint::ZERO, dim));
        if rank_over_zp(&Matrix::new(dim, padded)?, field) != dim - 1 {
            continue;
        }
        let coeffs: Vec<BigUint> = (0..dim - 1).map(|_| PrimeField::uniform_below(rng, p)).collect();
        let last: Vec<BigUint> = (0..dim)
            .map(|c| {
                let s: BigUint = rows.iter().zip(&coeffs).map(|(r, k)| &r[c] * k).sum();
                field.reduce_exp(&field.reduce(&s))
            })
            .collect();
        let mut entries = rows.concat();
        entries.extend(last);
        let m = Matrix::new(dim, entries)?;
        // reducing the appended row mod p-1 can perturb it; keep only exact rank dim-1
        if rank_over_zp(&m, field) == dim - 1 {
            return Ok(m);
        }
    }
    Err(MathError::GenerationFailed("rank-deficient base"))
}

fn full_rank_units(field: &PrimeField, dim: usize, rng: &mut DetRng) -> Result<Matrix, MathError> {
    let one = BigUint::from(1u32);
    for _ in 0..MATRIX_ATTEMPTS {
        let entries = (0..dim * dim)
            .map(|_| PrimeField::uniform_range(rng, &one, field.modulus()))
            .collect();
        let m = Matrix::new(dim, entries)?;
        if rank_over_zp(&m, field) == dim {
            return Ok(m);
        }
    }
    Err(MathError::GenerationFailed("full-rank W"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_test_profile() {
        let params = gen_params(8, 2, b"seed").unwrap();
        assert_eq!(params.profile(), Profile::Test);
        assert_eq!(params.p().bits(), 8);
        assert_eq!(rank_over_zp(params.base_x().matrix(), params.field()), 1);
        assert_eq!(rank_over_zp(params.base_y().matrix(), params.field()), 1);
        assert_eq!(rank_over_zp(params.w().matrix(), params.field()), 2);
    }

    #[test]
    fn deterministic() {
        let a = gen_params(64, 4, b"fixture").unwrap();
        let b = gen_params(64, 4, b"fixture").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_fixture_string(), b.to_fixture_string());
        assert_ne!(a, gen_params(64, 4, b"other").unwrap());
    }

    #[test]
    fn precondition_errors() {
        assert!(matches!(gen_params(7, 4, b"s"), Err(MathError::InvalidArgument(_))));
        assert!(matches!(gen_params(16, 1, b"s"), Err(MathError::InvalidArgument(_))));
        assert!(matches!(gen_params(16, 4, b""), Err(MathError::InvalidArgument(_))));
    }

    #[test]
    fn fixture_round_trip() {
        let params = gen_params(64, 3, b"fx").unwrap();
        let text = params.to_fixture_string();
        assert_eq!(PublicParams::from_fixture_str(&text).unwrap(), params);
        assert!(PublicParams::from_fixture_str(&text.replace("dim=3", "dim=4")).is_err());
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let p = BigUint::from(7u32);
        let bx = Matrix::from_rows(&[[1, 2], [2, 4]]).unwrap();
        let w = Matrix::from_rows(&[[2, 3], [4, 5]]).unwrap();
        assert!(PublicParams::new(p.clone(), bx.clone(), bx.clone(), w.clone(), Profile::Test).is_ok());
        // full-rank base
        let full = Matrix::identity(2);
        assert!(matches!(
            PublicParams::new(p.clone(), full, bx.clone(), w.clone(), Profile::Test),
            Err(MathError::RankCondition { which: "BaseX", .. })
        ));
        // W with a zero entry
        let wz = Matrix::from_rows(&[[0, 3], [4, 5]]).unwrap();
        assert!(matches!(
            PublicParams::new(p.clone(), bx.clone(), bx.clone(), wz, Profile::Test),
            Err(MathError::NonUnit)
        ));
        // singular W
        let ws = Matrix::from_rows(&[[1, 2], [2, 4]]).unwrap();
        assert!(matches!(
            PublicParams::new(p.clone(), bx.clone(), bx.clone(), ws, Profile::Test),
            Err(MathError::RankCondition { which: "W", .. })
        ));
        assert!(matches!(
            PublicParams::new(BigUint::from(8u32), bx.clone(), bx, w, Profile::Test),
            Err(MathError::NotPrime(_))
        ));
    }
}
