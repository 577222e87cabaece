//! Finite-field matrix arithmetic, the RDMPF map and the matrix-power NIKA.

mod field;
mod matrix;
mod params;
mod rdmpf;

pub use field::{is_probable_prime, PrimeField};
pub use matrix::{
    decode_exponent_matrix, decode_group_matrix, encode_matrix, encoded_matrix_len, rank_over_zp,
    ExponentMatrix, GroupMatrix, Matrix,
};
pub use params::{gen_params, Profile, PublicParams};
pub use rdmpf::{
    compose, keygen, nika_shared_key, nika_shared_key_counted, rdmpf, rdmpf_counted, KeyPair,
    NikaMode, OpCounter, PublicKey, ScalarSecret,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MathError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("modulus is not prime: 0x{0}")]
    NotPrime(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parameter generation failed: {0}")]
    GenerationFailed(&'static str),
    #[error("public key was generated under different parameters")]
    ParamsMismatch,
    #[error("zero scalar rejected by the production profile")]
    DegenerateScalar,
    #[error("{which} has rank {got}, expected {expected}")]
    RankCondition { which: &'static str, expected: usize, got: usize },
    #[error("W contains a non-unit entry")]
    NonUnit,
    #[error("encoding: {0}")]
    Encoding(String),
    #[error("fixture: {0}")]
    Fixture(String),
}
