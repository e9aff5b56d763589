//! Arithmetic in GF(2^k) for 1 <= k <= 32, elements held in the low `k`
//! bits of a `u64`.

use crate::error::{Error, Result};

/// Irreducible polynomials over GF(2), indexed by degree. Bit `i` is the
/// coefficient of `x^i`; the leading term is included.
const MODULI: [u64; 33] = [
    0,
    0b11,
    0b111,
    0b1011,
    0b1_0011,
    0b10_0101,
    0b100_0011,
    0b1000_0011,
    0x11d,
    (1 << 9) | (1 << 4) | 1,
    (1 << 10) | (1 << 3) | 1,
    (1 << 11) | (1 << 2) | 1,
    (1 << 12) | (1 << 6) | (1 << 4) | (1 << 1) | 1,
    (1 << 13) | (1 << 4) | (1 << 3) | (1 << 1) | 1,
    (1 << 14) | (1 << 10) | (1 << 6) | (1 << 1) | 1,
    (1 << 15) | (1 << 1) | 1,
    (1 << 16) | (1 << 12) | (1 << 3) | (1 << 1) | 1,
    (1 << 17) | (1 << 3) | 1,
    (1 << 18) | (1 << 7) | 1,
    (1 << 19) | (1 << 5) | (1 << 2) | (1 << 1) | 1,
    (1 << 20) | (1 << 3) | 1,
    (1 << 21) | (1 << 2) | 1,
    (1 << 22) | (1 << 1) | 1,
    (1 << 23) | (1 << 5) | 1,
    (1 << 24) | (1 << 7) | (1 << 2) | (1 << 1) | 1,
    (1 << 25) | (1 << 3) | 1,
    (1 << 26) | (1 << 6) | (1 << 2) | (1 << 1) | 1,
    (1 << 27) | (1 << 5) | (1 << 2) | (1 << 1) | 1,
    (1 << 28) | (1 << 3) | 1,
    (1 << 29) | (1 << 2) | 1,
    (1 << 30) | (1 << 23) | (1 << 2) | (1 << 1) | 1,
    (1 << 31) | (1 << 3) | 1,
    (1 << 32) | (1 << 22) | (1 << 2) | (1 << 1) | 1,
];

pub const MAX_FIELD_BITS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gf2k {
    bits: usize,
    modulus: u64,
}

impl Gf2k {
    pub fn new(bits: usize) -> Result<Self> {
        if !(1..=MAX_FIELD_BITS).contains(&bits) {
            return Err(Error::invalid(format!(
                "field size 2^{bits} unsupported, need 1 <= k <= {MAX_FIELD_BITS}"
            )));
        }
        Ok(Gf2k {
            bits,
            modulus: MODULI[bits],
        })
    }

    /// Smallest field with at least `n` elements (and at least 2).
    pub fn with_at_least(n: u64) -> Result<Self> {
        let bits = (64 - n.saturating_sub(1).leading_zeros() as usize).max(1);
        Gf2k::new(bits)
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn order(&self) -> u64 {
        1u64 << self.bits
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        // carry-less multiply, then reduce from the top
        let mut prod: u64 = 0;
        let mut a = a;
        let mut b = b;
        while b != 0 {
            if b & 1 == 1 {
                prod ^= a;
            }
            b >>= 1;
            a <<= 1;
        }
        self.reduce(prod)
    }

    #[inline]
    fn reduce(&self, mut v: u64) -> u64 {
        let k = self.bits;
        while v >> k != 0 {
            let top = 63 - v.leading_zeros() as usize;
            v ^= self.modulus << (top - k);
        }
        v
    }

    /// Horner evaluation of `sum_i coeffs[i] * x^i`.
    pub fn eval_poly(&self, coeffs: &[u64], x: u64) -> u64 {
        coeffs.iter().rev().fold(0, |acc, &c| self.mul(acc, x) ^ c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Polynomial multiplication mod `p`, independent of `Gf2k::mul`.
    fn mulmod(a: u64, b: u64, p: u64) -> u64 {
        let deg = 63 - p.leading_zeros();
        let mut r: u128 = 0;
        for i in 0..64 {
            if (b >> i) & 1 == 1 {
                r ^= (a as u128) << i;
            }
        }
        for i in (deg as usize..128).rev() {
            if (r >> i) & 1 == 1 {
                r ^= (p as u128) << (i - deg as usize);
            }
        }
        r as u64
    }

    fn poly_gcd(mut a: u64, mut b: u64) -> u64 {
        let deg = |v: u64| 63 - v.leading_zeros() as i32;
        while b != 0 {
            while a != 0 && deg(a) >= deg(b) {
                a ^= b << (deg(a) - deg(b));
            }
            std::mem::swap(&mut a, &mut b);
        }
        a
    }

    /// x^(2^j) mod p by repeated squaring.
    fn frobenius(p: u64, j: usize) -> u64 {
        let mut v = mulmod(0b10, 1, p);
        for _ in 0..j {
            v = mulmod(v, v, p);
        }
        v
    }

    #[test]
    fn every_modulus_is_irreducible() {
        // Rabin: p of degree k is irreducible iff x^(2^k) = x mod p and
        // gcd(x^(2^(k/l)) - x, p) = 1 for every prime l dividing k.
        for k in 1..=MAX_FIELD_BITS {
            let p = MODULI[k];
            assert_eq!(63 - p.leading_zeros() as usize, k, "degree of modulus {k}");
            let x = mulmod(0b10, 1, p);
            assert_eq!(frobenius(p, k), x, "x^(2^{k}) != x for k={k}");
            for l in 2..=k {
                let prime = (2..l).all(|d| l % d != 0);
                if prime && k % l == 0 {
                    let h = frobenius(p, k / l) ^ mulmod(0b10, 1, p);
                    assert_eq!(poly_gcd(p, h), 1, "k={k} has a factor via prime {l}");
                }
            }
        }
    }

    #[test]
    fn multiplication_matches_reference() {
        for k in [1usize, 3, 4, 8, 13, 32] {
            let f = Gf2k::new(k).unwrap();
            let mask = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
            let mut s = 0x9e3779b97f4a7c15u64;
            for _ in 0..500 {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                let a = (s >> 7) & mask;
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                let b = (s >> 11) & mask;
                assert_eq!(f.mul(a, b), mulmod(a, b, f.modulus()));
            }
        }
    }

    #[test]
    fn nonzero_elements_have_inverses_gf16() {
        let f = Gf2k::new(4).unwrap();
        for a in 1..16 {
            assert!((1..16).any(|b| f.mul(a, b) == 1), "{a} has no inverse");
        }
    }

    #[test]
    fn field_sizing() {
        assert_eq!(Gf2k::with_at_least(1).unwrap().bits(), 1);
        assert_eq!(Gf2k::with_at_least(2).unwrap().bits(), 1);
        assert_eq!(Gf2k::with_at_least(3).unwrap().bits(), 2);
        assert_eq!(Gf2k::with_at_least(16).unwrap().bits(), 4);
        assert_eq!(Gf2k::with_at_least(17).unwrap().bits(), 5);
        assert!(Gf2k::new(0).is_err());
        assert!(Gf2k::new(33).is_err());
    }
}
