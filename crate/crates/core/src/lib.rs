//! Matrix-power key agreement, the KEM capsule built on it, an idealized
//! functional-encryption front end and the symmetric suite they share.

pub mod fe;
pub mod golden;
pub mod kem;
pub mod math;
pub mod suite;
