//! Arithmetic in cyclotomic rings `Z[zeta_r]/(n)` for prime-power `r`.
//!
//! For `r = l^k` the ring is represented as `(Z/nZ)[X] / Phi_r(X)` with
//! `Phi_r(X) = 1 + X^m + X^{2m} + ... + X^{(l-1)m}`, `m = l^{k-1}`. Elements
//! are coefficient vectors of length `d = phi(r) = m(l-1)`, always reduced
//! modulo both `Phi_r` and `n`.
//!
//! Reduction from a degree `< 2r` scratch polynomial happens in two stages:
//! a cyclic fold modulo `X^r - 1` (legitimate because `Phi_r` divides it),
//! then the relation `X^{(l-1)m+u} = -(X^u + X^{m+u} + ... + X^{(l-2)m+u})`
//! clears the top `m` coefficient slots.

use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::arith::factor_u64;
use crate::error::Error;

/// Shared description of one ring `Z[zeta_r]/(n)`.
#[derive(Debug, PartialEq, Eq)]
struct RingInner {
    /// Prime power `r = l^k`.
    r: u64,
    /// The prime below `r`.
    l: u64,
    /// `l^{k-1}`, the fold stride of `Phi_r`.
    m: u64,
    /// `phi(r) = m (l - 1)`, the rank of the ring over `Z/nZ`.
    d: u64,
    /// Coefficient modulus.
    n: BigUint,
}

/// A cyclotomic ring `Z[zeta_r]/(n)`, cheaply cloneable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycloRing {
    inner: Arc<RingInner>,
}

/// An element of a [`CycloRing`], stored in canonical reduced form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycloElement {
    ring: CycloRing,
    /// Length `d`, each entry in `[0, n)`.
    coeffs: Vec<BigUint>,
}

impl CycloRing {
    /// Builds the ring `Z[zeta_r]/(n)`. Requires `r = l^k` a prime power
    /// with `r >= 2`, and `n >= 2`.
    pub fn new(r: u64, n: BigUint) -> Result<CycloRing, Error> {
        if n < BigUint::from(2u32) {
            return Err(Error::Domain("cyclotomic ring requires modulus >= 2"));
        }
        if r < 2 {
            return Err(Error::Domain("cyclotomic ring requires r >= 2"));
        }
        let factors = factor_u64(r);
        if factors.len() != 1 {
            return Err(Error::Domain("cyclotomic ring requires prime-power r"));
        }
        let (l, k) = factors[0];
        let m = l.pow(k - 1);
        let d = m * (l - 1);
        if d > (1 << 24) {
            return Err(Error::Capacity("cyclotomic ring rank over 2^24"));
        }
        Ok(CycloRing {
            inner: Arc::new(RingInner { r, l, m, d, n }),
        })
    }

    /// The prime-power conductor `r`.
    pub fn r(&self) -> u64 {
        self.inner.r
    }

    /// The prime `l` with `r = l^k`.
    pub fn prime(&self) -> u64 {
        self.inner.l
    }

    /// The rank `phi(r)` of the ring over `Z/nZ`.
    pub fn degree(&self) -> u64 {
        self.inner.d
    }

    /// The coefficient modulus `n`.
    pub fn modulus(&self) -> &BigUint {
        &self.inner.n
    }

    /// The zero element.
    pub fn zero(&self) -> CycloElement {
        CycloElement {
            ring: self.clone(),
            coeffs: vec![BigUint::zero(); self.inner.d as usize],
        }
    }

    /// The multiplicative identity.
    pub fn one(&self) -> CycloElement {
        self.scalar(BigUint::one())
    }

    /// Embeds an integer as a constant.
    pub fn scalar(&self, value: BigUint) -> CycloElement {
        let mut coeffs = vec![BigUint::zero(); self.inner.d as usize];
        coeffs[0] = value % &self.inner.n;
        CycloElement {
            ring: self.clone(),
            coeffs,
        }
    }

    /// `zeta^t` in canonical form, for any exponent `t` (reduced mod `r`).
    pub fn zeta_pow(&self, t: u64) -> CycloElement {
        let mut scratch = vec![BigUint::zero(); self.inner.r as usize];
        scratch[(t % self.inner.r) as usize] = BigUint::one();
        self.reduce_scratch(scratch)
    }

    /// Builds an element from coefficients for `X^0, X^1, ...` (length at
    /// most `r`), reducing into canonical form.
    pub fn from_coeffs(&self, coeffs: &[BigUint]) -> Result<CycloElement, Error> {
        if coeffs.len() > self.inner.r as usize {
            return Err(Error::Domain("coefficient vector longer than r"));
        }
        let mut scratch = vec![BigUint::zero(); self.inner.r as usize];
        for (i, c) in coeffs.iter().enumerate() {
            scratch[i] = c % &self.inner.n;
        }
        Ok(self.reduce_scratch(scratch))
    }

    /// Reduces a length-`r` scratch vector (entries already `< n`) modulo
    /// `Phi_r`, producing a canonical element.
    fn reduce_scratch(&self, mut scratch: Vec<BigUint>) -> CycloElement {
        let RingInner { l, m, d, ref n, .. } = *self.inner;
        debug_assert_eq!(scratch.len() as u64, self.inner.r);
        let (d, m) = (d as usize, m as usize);
        for u in 0..m {
            let top = std::mem::take(&mut scratch[d + u]);
            if top.is_zero() {
                continue;
            }
            // X^{d+u} = -(X^u + X^{m+u} + ... + X^{(l-2)m+u}).
            let neg = n - &top;
            for j in 0..(l - 1) as usize {
                let slot = j * m + u;
                scratch[slot] += &neg;
                if scratch[slot] >= *n {
                    scratch[slot] -= n;
                }
            }
        }
        scratch.truncate(d);
        CycloElement {
            ring: self.clone(),
            coeffs: scratch,
        }
    }

    fn check_same(&self, other: &CycloRing) -> Result<(), Error> {
        if Arc::ptr_eq(&self.inner, &other.inner) || self.inner == other.inner {
            Ok(())
        } else {
            Err(Error::RingMismatch)
        }
    }
}

impl CycloElement {
    /// The ring this element belongs to.
    pub fn ring(&self) -> &CycloRing {
        &self.ring
    }

    /// Canonical coefficients for `1, X, ..., X^{d-1}`.
    pub fn coeffs(&self) -> &[BigUint] {
        &self.coeffs
    }

    /// Whether this is the zero element.
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, other: &CycloElement) -> Result<CycloElement, Error> {
        self.ring.check_same(&other.ring)?;
        let n = &self.ring.inner.n;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| {
                let s = a + b;
                if s >= *n {
                    s - n
                } else {
                    s
                }
            })
            .collect();
        Ok(CycloElement {
            ring: self.ring.clone(),
            coeffs,
        })
    }

    pub fn sub(&self, other: &CycloElement) -> Result<CycloElement, Error> {
        self.ring.check_same(&other.ring)?;
        let n = &self.ring.inner.n;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| if a >= b { a - b } else { a + n - b })
            .collect();
        Ok(CycloElement {
            ring: self.ring.clone(),
            coeffs,
        })
    }

    pub fn neg(&self) -> CycloElement {
        let n = &self.ring.inner.n;
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| if c.is_zero() { c.clone() } else { n - c })
            .collect();
        CycloElement {
            ring: self.ring.clone(),
            coeffs,
        }
    }

    pub fn mul_scalar(&self, s: &BigUint) -> CycloElement {
        let n = &self.ring.inner.n;
        let s = s % n;
        let coeffs = self.coeffs.iter().map(|c| c * &s % n).collect();
        CycloElement {
            ring: self.ring.clone(),
            coeffs,
        }
    }

    pub fn mul(&self, other: &CycloElement) -> Result<CycloElement, Error> {
        self.ring.check_same(&other.ring)?;
        let RingInner { r, ref n, .. } = *self.ring.inner;
        let r = r as usize;
        // Schoolbook product, folded cyclically mod X^r - 1 on the fly.
        // Degree <= 2d - 2 < 2r, so indices wrap at most once.
        let mut acc = vec![BigUint::zero(); r];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let mut idx = i + j;
                if idx >= r {
                    idx -= r;
                }
                acc[idx] += a * b;
            }
        }
        for c in &mut acc {
            *c %= n;
        }
        Ok(self.ring.reduce_scratch(acc))
    }

    /// Raises to a nonnegative big-integer power by square-and-multiply.
    pub fn pow(&self, e: &BigUint) -> Result<CycloElement, Error> {
        if e.is_zero() {
            return Ok(self.ring.one());
        }
        let mut acc = self.clone();
        let top = e.bits() - 1;
        for i in (0..top).rev() {
            acc = acc.mul(&acc)?;
            if e.bit(i) {
                acc = acc.mul(self)?;
            }
        }
        Ok(acc)
    }

    /// Applies the ring automorphism `sigma_i : zeta -> zeta^i`.
    /// Requires `gcd(i, r) = 1`.
    pub fn galois_apply(&self, i: u64) -> Result<CycloElement, Error> {
        let r = self.ring.inner.r;
        let i = i % r;
        if num_integer::gcd(i, r) != 1 {
            return Err(Error::Domain("galois_apply requires gcd(i, r) = 1"));
        }
        let mut scratch = vec![BigUint::zero(); r as usize];
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let target = (i as u128 * j as u128 % r as u128) as usize;
            scratch[target] = c.clone();
        }
        Ok(self.ring.reduce_scratch(scratch))
    }

    /// If this element equals `zeta^t` for some `t`, returns the least
    /// such `t` in `[0, r)`; otherwise `None`.
    pub fn root_of_unity_index(&self) -> Option<u64> {
        (0..self.ring.inner.r).find(|&t| self.ring.zeta_pow(t) == *self)
    }

    /// The multiplicative order of this element inside `<zeta>`, if it
    /// lies there: `Some(r / gcd(t, r))` for `self = zeta^t`.
    pub fn order_in_zeta(&self) -> Option<u64> {
        let r = self.ring.inner.r;
        self.root_of_unity_index().map(|t| r / num_integer::gcd(t, r))
    }
}

/// Total degree view used by tests: evaluates the element at an integer
/// point modulo `n` (substituting `X = x`).
pub fn evaluate_at(elem: &CycloElement, x: &BigUint) -> BigUint {
    let n = elem.ring().modulus();
    let mut acc = BigUint::zero();
    for c in elem.coeffs().iter().rev() {
        acc = (acc * x + c) % n;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::RandBigInt;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn b(n: u64) -> BigUint {
        BigUint::from(n)
    }

    fn ring(r: u64, n: u64) -> CycloRing {
        CycloRing::new(r, b(n)).unwrap()
    }

    #[test]
    fn construction_validates_prime_powers() {
        for r in [2u64, 3, 4, 5, 8, 9, 16, 25, 27, 343] {
            let rg = ring(r, 101);
            let (l, _) = factor_u64(r)[0];
            assert_eq!(rg.prime(), l, "r={r}");
            assert_eq!(rg.degree(), r / l * (l - 1), "r={r}");
        }
        assert!(CycloRing::new(6, b(101)).is_err(), "6 is not a prime power");
        assert!(CycloRing::new(12, b(101)).is_err());
        assert!(CycloRing::new(1, b(101)).is_err());
        assert!(CycloRing::new(5, b(1)).is_err(), "modulus 1 rejected");
    }

    #[test]
    fn zeta_satisfies_its_cyclotomic_relation() {
        // In Z[zeta_9]/(n): 1 + zeta^3 + zeta^6 = Phi_9(zeta) = 0.
        let rg = ring(9, 97);
        let sum = rg
            .zeta_pow(0)
            .add(&rg.zeta_pow(3))
            .unwrap()
            .add(&rg.zeta_pow(6))
            .unwrap();
        assert!(sum.is_zero(), "Phi_9(zeta) must vanish");
        // And zeta^9 = 1.
        let z = rg.zeta_pow(1);
        assert_eq!(z.pow(&b(9)).unwrap(), rg.one());
        assert_ne!(z.pow(&b(3)).unwrap(), rg.one(), "zeta has exact order 9");
    }

    #[test]
    fn frozen_square_in_the_seventh_cyclotomic_ring() {
        // (zeta + 2)^2 = zeta^2 + 4 zeta + 4 in Z[zeta_7]/(7); no folding
        // occurs because the degree stays below phi(7) = 6.
        let rg = ring(7, 7);
        let e = rg.from_coeffs(&[b(2), b(1)]).unwrap();
        let sq = e.mul(&e).unwrap();
        let expect = rg.from_coeffs(&[b(4), b(4), b(1)]).unwrap();
        assert_eq!(sq, expect);
    }

    #[test]
    fn high_powers_fold_through_phi() {
        // In Z[zeta_4]/(13): zeta^2 = -1, so (zeta + 1)^2 = 2 zeta.
        let rg = ring(4, 13);
        let e = rg.from_coeffs(&[b(1), b(1)]).unwrap();
        let sq = e.mul(&e).unwrap();
        assert_eq!(sq, rg.zeta_pow(1).mul_scalar(&b(2)));
        // zeta^2 in canonical coordinates is n - 1 times X^0 ... for r = 4,
        // d = 2 and zeta^2 = -1.
        assert_eq!(rg.zeta_pow(2), rg.scalar(b(12)));
    }

    #[test]
    fn ring_mismatch_is_reported() {
        let r1 = ring(5, 13);
        let r2 = ring(5, 17);
        let r3 = ring(7, 13);
        let a = r1.one();
        assert!(matches!(a.add(&r2.one()), Err(Error::RingMismatch)));
        assert!(matches!(a.mul(&r3.one()), Err(Error::RingMismatch)));
        // Structurally identical rings interoperate even when the Arc differs.
        let r1b = ring(5, 13);
        assert_eq!(a.add(&r1b.one()).unwrap(), r1.scalar(b(2)));
    }

    #[test]
    fn galois_action_is_multiplicative_on_zeta() {
        let rg = ring(9, 101);
        for i in [1u64, 2, 4, 5, 7, 8] {
            for t in 0..9 {
                let lhs = rg.zeta_pow(t).galois_apply(i).unwrap();
                let rhs = rg.zeta_pow(t * i % 9);
                assert_eq!(lhs, rhs, "sigma_{i} on zeta^{t}");
            }
        }
        assert!(rg.zeta_pow(1).galois_apply(3).is_err(), "3 divides 9");
        assert!(rg.zeta_pow(1).galois_apply(0).is_err());
    }

    #[test]
    fn galois_is_a_ring_homomorphism_on_random_elements() {
        let mut rng = ChaCha20Rng::seed_from_u64(0xc1c1_0101);
        let rg = ring(25, 91);
        for _ in 0..60 {
            let a = random_elem(&rg, &mut rng);
            let c = random_elem(&rg, &mut rng);
            for i in [2u64, 3, 7, 24] {
                let lhs = a.mul(&c).unwrap().galois_apply(i).unwrap();
                let rhs = a.galois_apply(i).unwrap().mul(&c.galois_apply(i).unwrap()).unwrap();
                assert_eq!(lhs, rhs, "sigma_{i} respects products");
                let lhs = a.add(&c).unwrap().galois_apply(i).unwrap();
                let rhs = a.galois_apply(i).unwrap().add(&c.galois_apply(i).unwrap()).unwrap();
                assert_eq!(lhs, rhs, "sigma_{i} respects sums");
            }
        }
    }

    fn random_elem(rg: &CycloRing, rng: &mut ChaCha20Rng) -> CycloElement {
        let coeffs: Vec<BigUint> = (0..rg.degree())
            .map(|_| rng.gen_biguint_below(rg.modulus()))
            .collect();
        rg.from_coeffs(&coeffs).unwrap()
    }

    #[test]
    fn multiplication_is_commutative_and_associative() {
        let mut rng = ChaCha20Rng::seed_from_u64(0xabcd_ef01);
        for r in [4u64, 8, 9, 27] {
            let rg = ring(r, 1_000_003);
            for _ in 0..25 {
                let a = random_elem(&rg, &mut rng);
                let c = random_elem(&rg, &mut rng);
                let e = random_elem(&rg, &mut rng);
                assert_eq!(a.mul(&c).unwrap(), c.mul(&a).unwrap());
                assert_eq!(
                    a.mul(&c).unwrap().mul(&e).unwrap(),
                    a.mul(&c.mul(&e).unwrap()).unwrap()
                );
                let dist = a.add(&c).unwrap().mul(&e).unwrap();
                assert_eq!(dist, a.mul(&e).unwrap().add(&c.mul(&e).unwrap()).unwrap());
            }
        }
    }

    #[test]
    fn pow_matches_repeated_multiplication() {
        let mut rng = ChaCha20Rng::seed_from_u64(0x1234_5678);
        let rg = ring(8, 10_007);
        for _ in 0..20 {
            let a = random_elem(&rg, &mut rng);
            let e = rng.gen_range(0u64..40);
            let mut expect = rg.one();
            for _ in 0..e {
                expect = expect.mul(&a).unwrap();
            }
            assert_eq!(a.pow(&b(e)).unwrap(), expect, "exponent {e}");
        }
    }

    #[test]
    fn frobenius_matches_pth_power_modulo_a_prime() {
        // For prime modulus p coprime to r, x -> x^p agrees with sigma_p.
        let mut rng = ChaCha20Rng::seed_from_u64(0x0f0f_0f0f);
        for (r, p) in [(9u64, 13u64), (4, 19), (25, 7), (8, 5)] {
            let rg = ring(r, p);
            for _ in 0..15 {
                let a = random_elem(&rg, &mut rng);
                let frob = a.pow(&b(p)).unwrap();
                let gal = a.galois_apply(p % r).unwrap();
                assert_eq!(frob, gal, "Frobenius vs sigma_p for r={r}, p={p}");
            }
        }
    }

    #[test]
    fn root_of_unity_index_finds_exactly_the_powers_of_zeta() {
        let rg = ring(9, 31);
        for t in 0..9 {
            let e = rg.zeta_pow(t);
            assert_eq!(e.root_of_unity_index(), Some(t), "zeta^{t}");
        }
        let not_root = rg.from_coeffs(&[b(2), b(1)]).unwrap();
        assert_eq!(not_root.root_of_unity_index(), None);
        assert_eq!(rg.zeta_pow(3).order_in_zeta(), Some(3));
        assert_eq!(rg.zeta_pow(1).order_in_zeta(), Some(9));
        assert_eq!(rg.zeta_pow(0).order_in_zeta(), Some(1));
        assert_eq!(rg.zeta_pow(6).order_in_zeta(), Some(3));
    }

    #[test]
    fn evaluation_respects_ring_operations_at_unit_points() {
        // Evaluating at x with x^r = 1 mod n is a ring homomorphism; use
        // n = 31, r = 5, x = 2 (2^5 = 32 = 1 mod 31).
        let mut rng = ChaCha20Rng::seed_from_u64(0x5eed_cafe);
        let rg = ring(5, 31);
        let x = b(2);
        for _ in 0..40 {
            let a = random_elem(&rg, &mut rng);
            let c = random_elem(&rg, &mut rng);
            let prod = a.mul(&c).unwrap();
            let lhs = evaluate_at(&prod, &x);
            let rhs = evaluate_at(&a, &x) * evaluate_at(&c, &x) % b(31);
            // The fold introduces multiples of Phi_5(x) = (x^5-1)/(x-1);
            // at x = 2 mod 31 that is 0, so evaluation commutes exactly.
            assert_eq!(lhs, rhs);
        }
    }
}
