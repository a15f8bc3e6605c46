//! Exact arithmetic in `Z[zeta_q, zeta_r]`, optionally modulo a small `n`.
//!
//! This is the reference model for the Gauss-sum identities behind the
//! cyclotomic test.  Elements live on the integral basis
//! `zeta_q^a zeta_r^b` with `0 <= a < q - 1` and `0 <= b < phi(r)`,
//! coefficients are exact `i128` values (checked, so overflow is an error
//! rather than a wrong answer), and every operation folds back to the
//! basis through the relations `1 + zeta_q + ... + zeta_q^{q-1} = 0` and
//! `Phi_r(zeta_r) = 0`.  Dimensions are capped: this module exists to
//! cross-check the production `Z[zeta_r]/(n)` arithmetic at toy scale, not
//! to run the test.

use super::{Character, JacobiSumValue};
use crate::arith::{factor_u64, is_prime_u64};
use num_integer::gcd;
use crate::error::Error;
use std::sync::Arc;

/// Hard cap on the basis size `(q - 1) phi(r)`.
const MAX_DIMENSION: u64 = 4096;

#[derive(Debug, PartialEq, Eq)]
struct RingData {
    q: u64,
    r: u64,
    /// Prime below `r`.
    l: u64,
    /// `r / l`, the stride of the cyclotomic relation for `r`.
    m: u64,
    /// Basis length in the `zeta_q` direction, `q - 1`.
    dq: u64,
    /// Basis length in the `zeta_r` direction, `phi(r)`.
    dr: u64,
    modulus: Option<u64>,
}

/// The ring `Z[zeta_q, zeta_r]` or `Z[zeta_q, zeta_r]/(n)` at toy scale.
#[derive(Clone, Debug)]
pub struct ExactRing {
    inner: Arc<RingData>,
}

/// An element of an [`ExactRing`], always on the canonical basis.
#[derive(Clone, Debug)]
pub struct ExactElement {
    ring: ExactRing,
    coeffs: Vec<i128>,
}

impl PartialEq for ExactElement {
    fn eq(&self, other: &Self) -> bool {
        self.ring.inner == other.ring.inner && self.coeffs == other.coeffs
    }
}

impl Eq for ExactElement {}

impl ExactRing {
    /// Builds the tensor ring for an odd prime `q` and a prime power `r`
    /// coprime to it, optionally modulo `n >= 2`.
    pub fn new(q: u64, r: u64, modulus: Option<u64>) -> Result<ExactRing, Error> {
        if q < 3 || !is_prime_u64(q) {
            return Err(Error::Domain("exact ring requires an odd prime q"));
        }
        let factors = factor_u64(r);
        if r < 2 || factors.len() != 1 {
            return Err(Error::Domain("exact ring requires a prime-power r"));
        }
        let (l, _) = factors[0];
        if l == q {
            return Err(Error::Domain("exact ring requires gcd(q, r) = 1"));
        }
        if let Some(n) = modulus {
            if n < 2 {
                return Err(Error::Domain("exact ring modulus must be at least 2"));
            }
        }
        let m = r / l;
        let dq = q - 1;
        let dr = m * (l - 1);
        if dq * dr > MAX_DIMENSION {
            return Err(Error::Capacity("exact ring dimension exceeds the toy-scale cap"));
        }
        Ok(ExactRing { inner: Arc::new(RingData { q, r, l, m, dq, dr, modulus }) })
    }

    /// Conductor-side root order `q`.
    pub fn q(&self) -> u64 {
        self.inner.q
    }

    /// Character-side root order `r`.
    pub fn r(&self) -> u64 {
        self.inner.r
    }

    /// The modulus, when working in `Z[zeta_q, zeta_r]/(n)`.
    pub fn modulus(&self) -> Option<u64> {
        self.inner.modulus
    }

    fn dims(&self) -> usize {
        (self.inner.dq * self.inner.dr) as usize
    }

    /// The zero element.
    pub fn zero(&self) -> ExactElement {
        ExactElement { ring: self.clone(), coeffs: vec![0; self.dims()] }
    }

    /// The multiplicative identity.
    pub fn one(&self) -> ExactElement {
        self.scalar(1).expect("1 always reduces")
    }

    /// An integer scalar.
    pub fn scalar(&self, v: i128) -> Result<ExactElement, Error> {
        let mut scratch = self.fresh_scratch();
        scratch[0] = v;
        self.fold(scratch)
    }

    /// The monomial `zeta_q^a`.
    pub fn zeta_q_pow(&self, a: u64) -> ExactElement {
        let mut scratch = self.fresh_scratch();
        let idx = (a % self.inner.q) * self.inner.r;
        scratch[idx as usize] = 1;
        self.fold(scratch).expect("monomials never overflow")
    }

    /// The monomial `zeta_r^b`.
    pub fn zeta_r_pow(&self, b: u64) -> ExactElement {
        let mut scratch = self.fresh_scratch();
        scratch[(b % self.inner.r) as usize] = 1;
        self.fold(scratch).expect("monomials never overflow")
    }

    /// The Gauss sum `tau(chi) = -sum_x zeta_q^x zeta_r^{ind x}` for a
    /// character whose conductor and ambient order match this ring.
    pub fn gauss_sum(&self, chi: &Character) -> Result<ExactElement, Error> {
        if chi.conductor() != self.inner.q || chi.order() != self.inner.r {
            return Err(Error::RingMismatch);
        }
        let mut scratch = self.fresh_scratch();
        for x in 1..self.inner.q {
            let idx = x * self.inner.r + chi.value_index(x)?;
            scratch[idx as usize] -= 1;
        }
        self.fold(scratch)
    }

    /// Embeds a Jacobi sum, which lives in `Z[zeta_r]`, into the tensor ring.
    pub fn embed_jacobi(&self, j: &JacobiSumValue) -> Result<ExactElement, Error> {
        if j.order() != self.inner.r {
            return Err(Error::RingMismatch);
        }
        let mut scratch = self.fresh_scratch();
        for (b, &c) in j.cyclic_coeffs().iter().enumerate() {
            scratch[b] = c as i128;
        }
        self.fold(scratch)
    }

    fn fresh_scratch(&self) -> Vec<i128> {
        vec![0i128; (self.inner.q * self.inner.r) as usize]
    }

    /// Reduces a `q x r` exponent grid to the canonical basis.
    fn fold(&self, mut scratch: Vec<i128>) -> Result<ExactElement, Error> {
        let RingData { q, r, l, m, dq, dr, modulus } = *self.inner;
        // zeta_q^{q-1} = -(1 + zeta_q + ... + zeta_q^{q-2}), column by column.
        for b in 0..r as usize {
            let top = scratch[(q as usize - 1) * r as usize + b];
            if top != 0 {
                for a in 0..q as usize - 1 {
                    let slot = &mut scratch[a * r as usize + b];
                    *slot = slot.checked_sub(top).ok_or(Error::Capacity("exact ring coefficient overflow"))?;
                }
            }
        }
        // zeta_r^{dr+u} = -sum_w zeta_r^{w m + u} within each surviving row.
        for a in 0..dq as usize {
            for u in 0..(r - dr) as usize {
                let top = scratch[a * r as usize + dr as usize + u];
                if top != 0 {
                    for w in 0..(l - 1) as usize {
                        let slot = &mut scratch[a * r as usize + w * m as usize + u];
                        *slot = slot.checked_sub(top).ok_or(Error::Capacity("exact ring coefficient overflow"))?;
                    }
                }
            }
        }
        let mut coeffs = Vec::with_capacity(self.dims());
        for a in 0..dq as usize {
            for b in 0..dr as usize {
                let mut c = scratch[a * r as usize + b];
                if let Some(n) = modulus {
                    c = c.rem_euclid(n as i128);
                }
                coeffs.push(c);
            }
        }
        Ok(ExactElement { ring: self.clone(), coeffs })
    }
}

impl ExactElement {
    /// The ring this element belongs to.
    pub fn ring(&self) -> &ExactRing {
        &self.ring
    }

    /// Canonical coefficients, row-major over `(zeta_q^a, zeta_r^b)`.
    pub fn coeffs(&self) -> &[i128] {
        &self.coeffs
    }

    /// True when all coefficients vanish.
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    fn check_same(&self, other: &ExactElement) -> Result<(), Error> {
        if self.ring.inner != other.ring.inner {
            return Err(Error::RingMismatch);
        }
        Ok(())
    }

    /// Sum.
    pub fn add(&self, other: &ExactElement) -> Result<ExactElement, Error> {
        self.check_same(other)?;
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (a, b) in self.coeffs.iter().zip(&other.coeffs) {
            let mut c = a.checked_add(*b).ok_or(Error::Capacity("exact ring coefficient overflow"))?;
            if let Some(n) = self.ring.inner.modulus {
                c = c.rem_euclid(n as i128);
            }
            coeffs.push(c);
        }
        Ok(ExactElement { ring: self.ring.clone(), coeffs })
    }

    /// Difference.
    pub fn sub(&self, other: &ExactElement) -> Result<ExactElement, Error> {
        self.add(&other.neg())
    }

    /// Negation.
    pub fn neg(&self) -> ExactElement {
        let coeffs = self
            .coeffs
            .iter()
            .map(|&c| {
                let v = -c;
                match self.ring.inner.modulus {
                    Some(n) => v.rem_euclid(n as i128),
                    None => v,
                }
            })
            .collect();
        ExactElement { ring: self.ring.clone(), coeffs }
    }

    /// Product, via the exponent grid.
    pub fn mul(&self, other: &ExactElement) -> Result<ExactElement, Error> {
        self.check_same(other)?;
        let RingData { q, r, dr, .. } = *self.ring.inner;
        let mut scratch = self.ring.fresh_scratch();
        for (ia, &ca) in self.coeffs.iter().enumerate() {
            if ca == 0 {
                continue;
            }
            let (a1, b1) = (ia as u64 / dr, ia as u64 % dr);
            for (ib, &cb) in other.coeffs.iter().enumerate() {
                if cb == 0 {
                    continue;
                }
                let (a2, b2) = (ib as u64 / dr, ib as u64 % dr);
                let idx = ((a1 + a2) % q) * r + (b1 + b2) % r;
                let term = ca.checked_mul(cb).ok_or(Error::Capacity("exact ring coefficient overflow"))?;
                let slot = &mut scratch[idx as usize];
                *slot = slot.checked_add(term).ok_or(Error::Capacity("exact ring coefficient overflow"))?;
            }
        }
        self.ring.fold(scratch)
    }

    /// Power by square and multiply.
    pub fn pow(&self, e: u64) -> Result<ExactElement, Error> {
        let mut acc = self.ring.one();
        if e == 0 {
            return Ok(acc);
        }
        for i in (0..64 - e.leading_zeros()).rev() {
            acc = acc.mul(&acc)?;
            if e >> i & 1 == 1 {
                acc = acc.mul(self)?;
            }
        }
        Ok(acc)
    }

    /// The automorphism `sigma_i: zeta_r -> zeta_r^i` (fixing `zeta_q`),
    /// for `i` coprime to `r`.
    pub fn galois_sigma(&self, i: u64) -> Result<ExactElement, Error> {
        let RingData { r, dr, .. } = *self.ring.inner;
        if gcd(i % r, r) != 1 {
            return Err(Error::Domain("sigma index must be coprime to r"));
        }
        let mut scratch = self.ring.fresh_scratch();
        for (idx, &c) in self.coeffs.iter().enumerate() {
            if c != 0 {
                let (a, b) = (idx as u64 / dr, idx as u64 % dr);
                scratch[(a * r + (b * i) % r) as usize] += c;
            }
        }
        self.ring.fold(scratch)
    }

    /// The automorphism `rho_j: zeta_q -> zeta_q^j` (fixing `zeta_r`),
    /// for `j` coprime to `q`.
    pub fn galois_rho(&self, j: u64) -> Result<ExactElement, Error> {
        let RingData { q, r, dr, .. } = *self.ring.inner;
        if j % q == 0 {
            return Err(Error::Domain("rho index must be coprime to q"));
        }
        let mut scratch = self.ring.fresh_scratch();
        for (idx, &c) in self.coeffs.iter().enumerate() {
            if c != 0 {
                let (a, b) = (idx as u64 / dr, idx as u64 % dr);
                scratch[(((a * j) % q) * r + b) as usize] += c;
            }
        }
        self.ring.fold(scratch)
    }

    /// Complex conjugation: both roots map to their inverses.
    pub fn conj(&self) -> Result<ExactElement, Error> {
        let RingData { q, r, dr, .. } = *self.ring.inner;
        let mut scratch = self.ring.fresh_scratch();
        for (idx, &c) in self.coeffs.iter().enumerate() {
            if c != 0 {
                let (a, b) = (idx as u64 / dr, idx as u64 % dr);
                let ai = (q - a) % q;
                let bi = (r - b) % r;
                scratch[(ai * r + bi) as usize] += c;
            }
        }
        self.ring.fold(scratch)
    }
}

/// The Gauss sum of `chi` as an exact element of `Z[zeta_q, zeta_r]`.
///
/// Toy-scale only: the ring dimension `(q - 1) phi(r)` is capped, so this
/// serves cross-checks rather than production proving.
pub fn gauss_sum_exact(chi: &Character) -> Result<ExactElement, Error> {
    let ring = ExactRing::new(chi.conductor(), chi.order(), None)?;
    ring.gauss_sum(chi)
}
