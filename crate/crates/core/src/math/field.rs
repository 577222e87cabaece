use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::MathError;
use crate::suite::DetRng;

/// Arithmetic context for a prime `p`: values live in `Z_p`, exponents in `Z_{p-1}`.
///
/// Moduli below 2^64 take a `u128` fast path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimeField {
    p: BigUint,
    order: BigUint,
    small: Option<u64>,
    width: usize,
}

impl PrimeField {
    pub fn new(p: BigUint) -> Result<Self, MathError> {
        if !is_probable_prime(&p) {
            return Err(MathError::NotPrime(p.to_str_radix(16)));
        }
        Ok(Self::new_trusted(p))
    }

    pub fn from_u64(p: u64) -> Result<Self, MathError> {
        Self::new(BigUint::from(p))
    }

    fn new_trusted(p: BigUint) -> Self {
        let order = &p - 1u32;
        let small = p.to_u64();
        let width = (p.bits() as usize).div_ceil(8);
        Self { p, order, small, width }
    }

    pub fn modulus(&self) -> &BigUint {
        &self.p
    }

    /// `p - 1`, the modulus of the exponent ring.
    pub fn order(&self) -> &BigUint {
        &self.order
    }

    pub fn bits(&self) -> u64 {
        self.p.bits()
    }

    /// Bytes per encoded element: `ceil(bitlen(p) / 8)`.
    pub fn element_width(&self) -> usize {
        self.width
    }

    pub(crate) fn small(&self) -> Option<u64> {
        self.small
    }

    pub fn reduce(&self, v: &BigUint) -> BigUint {
        v % &self.p
    }

    pub fn reduce_exp(&self, v: &BigUint) -> BigUint {
        v % &self.order
    }

    pub fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) % &self.p
    }

    pub fn mul_exp(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) % &self.order
    }

    /// `base^exp mod p`, with `0^0 = 1`.
    pub fn pow(&self, base: &BigUint, exp: &BigUint) -> BigUint {
        match (self.small, base.to_u64(), exp.to_u64()) {
            (Some(p), Some(b), Some(e)) => BigUint::from(pow_u64(b % p, e, p)),
            _ => base.modpow(exp, &self.p),
        }
    }

    pub fn inv(&self, a: &BigUint) -> Option<BigUint> {
        let a = a % &self.p;
        if a.is_zero() {
            return None;
        }
        Some(a.modpow(&(&self.p - 2u32), &self.p))
    }

    /// Uniform value in `[0, bound)`.
    pub fn uniform_below(rng: &mut DetRng, bound: &BigUint) -> BigUint {
        assert!(!bound.is_zero(), "empty range");
        let bits = bound.bits();
        let nbytes = bits.div_ceil(8) as usize;
        let excess = (nbytes as u64) * 8 - bits;
        let mut buf = vec![0u8; nbytes];
        loop {
            rng.fill(&mut buf);
            buf[0] &= 0xffu8 >> excess;
            let v = BigUint::from_bytes_be(&buf);
            if &v < bound {
                return v;
            }
        }
    }

    /// Uniform value in `[lo, bound)`.
    pub fn uniform_range(rng: &mut DetRng, lo: &BigUint, bound: &BigUint) -> BigUint {
        assert!(lo < bound, "empty range");
        lo + Self::uniform_below(rng, &(bound - lo))
    }
}

#[inline]
pub(crate) fn mul_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

#[inline]
pub(crate) fn pow_u64(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_u64(acc, base, m);
        }
        base = mul_u64(base, base, m);
        exp >>= 1;
    }
    acc
}

const SMALL_PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Miller-Rabin with the first twelve prime bases (exact below 3.3e24)
/// plus 24 bases derived from the candidate for larger inputs.
pub fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    for sp in SMALL_PRIMES {
        let sp = BigUint::from(sp);
        if n == &sp {
            return true;
        }
        if (n % &sp).is_zero() {
            return false;
        }
    }
    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;

    let witness = |a: &BigUint| -> bool {
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            return true;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_1 {
                return true;
            }
        }
        false
    };

    if !SMALL_PRIMES.iter().all(|&b| witness(&BigUint::from(b))) {
        return false;
    }
    if n.bits() <= 80 {
        return true;
    }
    let mut rng = DetRng::new("miller-rabin", &n.to_bytes_be());
    let upper = n - 2u32;
    (0..24).all(|_| witness(&PrimeField::uniform_range(&mut rng, &two, &upper)))
}

/// A random prime with exactly `bits` bits.
pub(crate) fn random_prime(rng: &mut DetRng, bits: u64, max_attempts: usize) -> Option<BigUint> {
    let nbytes = bits.div_ceil(8) as usize;
    let excess = nbytes as u64 * 8 - bits;
    let mut buf = vec![0u8; nbytes];
    for _ in 0..max_attempts {
        rng.fill(&mut buf);
        buf[0] &= 0xffu8 >> excess;
        let mut v = BigUint::from_bytes_be(&buf);
        v.set_bit(bits - 1, true);
        v.set_bit(0, true);
        if v.is_odd() && is_probable_prime(&v) {
            return Some(v);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality_small_numbers_match_trial_division() {
        let trial = |n: u64| n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d));
        for n in 0u64..3000 {
            assert_eq!(is_probable_prime(&BigUint::from(n)), trial(n), "n = {n}");
        }
    }

    #[test]
    fn primality_known_large() {
        // 2^127 - 1 is prime, 2^128 + 1 is not.
        let m127 = (BigUint::one() << 127u32) - 1u32;
        assert!(is_probable_prime(&m127));
        assert!(!is_probable_prime(&((BigUint::one() << 128u32) + 1u32)));
        // Carmichael number
        assert!(!is_probable_prime(&BigUint::from(561u32)));
    }

    #[test]
    fn fast_path_agrees_with_bigint() {
        let f = PrimeField::from_u64(18446744073709551557).unwrap();
        let mut rng = DetRng::new("pow-check", b"");
        for _ in 0..200 {
            let b = PrimeField::uniform_below(&mut rng, f.modulus());
            let e = PrimeField::uniform_below(&mut rng, f.order());
            assert_eq!(f.pow(&b, &e), b.modpow(&e, f.modulus()));
        }
    }

    #[test]
    fn zero_to_zero_is_one() {
        let f = PrimeField::from_u64(7).unwrap();
        assert_eq!(f.pow(&BigUint::zero(), &BigUint::zero()), BigUint::one());
    }

    #[test]
    fn element_width() {
        assert_eq!(PrimeField::from_u64(7).unwrap().element_width(), 1);
        assert_eq!(PrimeField::from_u64(257).unwrap().element_width(), 2);
        assert!(PrimeField::from_u64(9).is_err());
    }

    #[test]
    fn random_prime_has_requested_bits() {
        let mut rng = DetRng::new("rp", b"x");
        for bits in [8u64, 17, 64, 130] {
            let p = random_prime(&mut rng, bits, 10_000).unwrap();
            assert_eq!(p.bits(), bits);
            assert!(is_probable_prime(&p));
        }
    }
}
