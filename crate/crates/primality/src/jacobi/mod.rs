//! Cyclotomic primality proving with Jacobi sums.
//!
//! The test fixes a highly composite integer `R` and the auxiliary modulus
//! `s = prod { q prime : q - 1 divides R }`.  For every prime `q | s` and
//! every maximal prime power `r | q - 1` it checks, with a character of
//! conductor `q` and order `r`, that a Jacobi-sum product lands in the group
//! generated by `zeta_r` modulo `n`.  Together with a per-prime condition on
//! the `l`-adic logarithm of `n` (the lambda condition), the checks force
//! every prime divisor of `n` to be a power of `n` modulo `s`, so a final
//! sweep over `n^k mod s` for `k < R` either finds a divisor or proves `n`
//! prime.  All Jacobi-sum arithmetic happens in `Z[zeta_r]/(n)`, which keeps
//! ring degrees at `phi(r)` and never touches `Z[zeta_q]` at production
//! scale; the exact tensor-ring model in [`exact`] exists to cross-check the
//! identities at toy scale.

pub mod exact;

use crate::arith::{factor_u64, gcd, is_prime_u64, multiplicative_order_u64, powmod};
use crate::cyclo::{CycloElement, CycloRing};
use crate::error::Error;
use crate::fermat::{self, Verdict};
use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use std::collections::BTreeSet;

/// Upper bound on character conductors; dlog tables are dense `Vec`s of
/// length `q`, so this caps memory rather than correctness.
const MAX_CONDUCTOR: u64 = 10_000_000;

/// Number of fallback conductors tried per prime `l` before giving up on
/// the lambda condition and returning an inconclusive verdict.
const EXTRA_Q_ATTEMPTS: usize = 20;

/// A multiplicative character of prime conductor `q` and prime-power order
/// dividing `q - 1`, represented by the smallest primitive root `g` mod `q`
/// and a dense discrete-logarithm table.
///
/// The base character sends `g^a` to `zeta_r^a`; this instance is that
/// character raised to the power `e`.
#[derive(Clone, Debug)]
pub struct Character {
    q: u64,
    r: u64,
    g: u64,
    e: u64,
    dlog: std::sync::Arc<Vec<u32>>,
}

impl Character {
    /// Builds the canonical character of conductor `q` and exact order `r`.
    ///
    /// Requires `q` an odd prime below the conductor cap and `r > 1` a
    /// prime power dividing `q - 1`.
    pub fn new(q: u64, r: u64) -> Result<Character, Error> {
        if q < 3 || !is_prime_u64(q) {
            return Err(Error::Domain("character conductor must be an odd prime"));
        }
        if q > MAX_CONDUCTOR {
            return Err(Error::Capacity("character conductor too large"));
        }
        if r < 2 || (q - 1) % r != 0 {
            return Err(Error::Domain("character order must divide q - 1"));
        }
        let factors = factor_u64(r);
        if factors.len() != 1 {
            return Err(Error::Domain("character order must be a prime power"));
        }
        let g = smallest_primitive_root(q)?;
        let mut dlog = vec![0u32; q as usize];
        let mut pow = 1u64;
        for a in 0..q - 1 {
            dlog[pow as usize] = a as u32;
            pow = pow * g % q;
        }
        Ok(Character { q, r, g, e: 1, dlog: std::sync::Arc::new(dlog) })
    }

    /// The character raised to the `k`-th power; its order is `r / gcd(r, k)`.
    pub fn pow(&self, k: u64) -> Character {
        Character { e: self.e * (k % self.r) % self.r, ..self.clone() }
    }

    /// Conductor `q`.
    pub fn conductor(&self) -> u64 {
        self.q
    }

    /// Order of the ambient root of unity `zeta_r` (the base character's
    /// order; `self` may have smaller order if it is a proper power).
    pub fn order(&self) -> u64 {
        self.r
    }

    /// Smallest primitive root modulo `q` used as the dlog base.
    pub fn generator(&self) -> u64 {
        self.g
    }

    /// Index `t` such that `chi(x) = zeta_r^t`, for `x` not divisible by `q`.
    pub fn value_index(&self, x: u64) -> Result<u64, Error> {
        let xm = x % self.q;
        if xm == 0 {
            return Err(Error::Domain("character argument divisible by conductor"));
        }
        Ok(self.e * (u64::from(self.dlog[xm as usize]) % self.r) % self.r)
    }

    /// Exact multiplicative order of this character.
    pub fn exact_order(&self) -> u64 {
        self.r / num_integer::gcd(self.r, self.e)
    }
}

/// Smallest primitive root modulo an odd prime `q`.
fn smallest_primitive_root(q: u64) -> Result<u64, Error> {
    for g in 2..q {
        if multiplicative_order_u64(g, q, q - 1) == q - 1 {
            return Ok(g);
        }
    }
    Err(Error::Domain("no primitive root found; modulus not an odd prime"))
}

/// A Jacobi sum `j(chi, chi') = -sum chi(x) chi'(1-x)` held exactly as a
/// signed integer vector over the cyclic power basis `zeta_r^0 .. zeta_r^{r-1}`.
///
/// Coefficients are bounded by `q - 2` in absolute value, so `i64` is exact.
/// The vector is kept unreduced (length `r`); canonicalization folds in the
/// cyclotomic relation only on demand.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JacobiSumValue {
    r: u64,
    coeffs: Vec<i64>,
}

impl JacobiSumValue {
    /// Order of the ambient root of unity.
    pub fn order(&self) -> u64 {
        self.r
    }

    /// Raw coefficients over the cyclic basis, length `r`.
    pub fn cyclic_coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    /// Coefficients over the power basis of `Z[zeta_r]`, length `phi(r)`,
    /// after folding in the cyclotomic relation for the prime power `r`.
    pub fn canonical_coeffs(&self) -> Vec<i128> {
        let (l, _) = single_prime_power(self.r);
        let m = self.r / l;
        let d = m * (l - 1);
        let mut v: Vec<i128> = self.coeffs.iter().map(|&c| c as i128).collect();
        for u in 0..(self.r - d) as usize {
            let top = v[d as usize + u];
            if top != 0 {
                for w in 0..(l - 1) as usize {
                    v[w * m as usize + u] -= top;
                }
            }
        }
        v.truncate(d as usize);
        v
    }

    /// Complex conjugate: `zeta_r^t` maps to `zeta_r^{-t}`.
    pub fn conj(&self) -> JacobiSumValue {
        let r = self.r as usize;
        let mut coeffs = vec![0i64; r];
        for (t, &c) in self.coeffs.iter().enumerate() {
            coeffs[(r - t) % r] += c;
        }
        JacobiSumValue { r: self.r, coeffs }
    }

    /// Exact product in `Z[zeta_r]`, staying on the cyclic basis.
    pub fn mul_exact(&self, other: &JacobiSumValue) -> Result<JacobiSumValue, Error> {
        if self.r != other.r {
            return Err(Error::RingMismatch);
        }
        let r = self.r as usize;
        let mut acc = vec![0i128; r];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                let mut t = i + j;
                if t >= r {
                    t -= r;
                }
                acc[t] += a as i128 * b as i128;
            }
        }
        let mut coeffs = Vec::with_capacity(r);
        for v in acc {
            coeffs.push(i64::try_from(v).map_err(|_| Error::Capacity("jacobi sum product overflow"))?);
        }
        Ok(JacobiSumValue { r: self.r, coeffs })
    }

    /// Reduction into `Z[zeta_r]/(n)` on the given ring.
    pub fn reduce_mod(&self, ring: &CycloRing) -> Result<CycloElement, Error> {
        if ring.r() != self.r {
            return Err(Error::RingMismatch);
        }
        let n = ring.modulus();
        let coeffs: Vec<BigUint> = self
            .coeffs
            .iter()
            .map(|&c| {
                if c >= 0 {
                    BigUint::from(c as u64) % n
                } else {
                    let m = BigUint::from(c.unsigned_abs()) % n;
                    if m.is_zero() { m } else { n - m }
                }
            })
            .collect();
        ring.from_coeffs(&coeffs)
    }
}

/// Factors a prime power as `(l, k)`; panics if not a prime power (callers
/// construct `r` from a single prime's factorization).
fn single_prime_power(r: u64) -> (u64, u32) {
    let f = factor_u64(r);
    assert_eq!(f.len(), 1, "order must be a prime power");
    f[0]
}

/// The Jacobi sum `j(chi, psi) = -sum_{x mod q} chi(x) psi(1-x)` for two
/// characters on the same conductor and ambient order.
pub fn jacobi_sum(chi: &Character, psi: &Character) -> Result<JacobiSumValue, Error> {
    if chi.q != psi.q || chi.r != psi.r {
        return Err(Error::RingMismatch);
    }
    let q = chi.q;
    let r = chi.r;
    let mut coeffs = vec![0i64; r as usize];
    for x in 2..q {
        let t = (chi.value_index(x)? + psi.value_index(q + 1 - x)?) % r;
        coeffs[t as usize] -= 1;
    }
    Ok(JacobiSumValue { r, coeffs })
}

/// Where a condition-2 product landed relative to the group generated by
/// `zeta_r` in `Z[zeta_r]/(n)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RootClassification {
    /// Equal to `zeta_r^t` with `gcd(t, r) = 1`: a generator of the group.
    PrimitiveRoot { t: u64 },
    /// Equal to `zeta_r^t` with `gcd(t, r) > 1`: in the group but not a
    /// generator.
    InGroupNotPrimitive { t: u64 },
    /// Not a power of `zeta_r` at all; composite evidence.
    NotInGroup,
}

impl RootClassification {
    fn from_index(t: Option<u64>, r: u64) -> RootClassification {
        match t {
            Some(t) if num_integer::gcd(t, r) == 1 => RootClassification::PrimitiveRoot { t },
            Some(t) => RootClassification::InGroupNotPrimitive { t },
            None => RootClassification::NotInGroup,
        }
    }

    /// True when the product generated the full group.
    pub fn is_primitive(&self) -> bool {
        matches!(self, RootClassification::PrimitiveRoot { .. })
    }

    /// True when the product was some power of `zeta_r`.
    pub fn in_group(&self) -> bool {
        !matches!(self, RootClassification::NotInGroup)
    }
}

/// Result of the Euler-style auxiliary check `q^{(n-1)/2} mod n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadraticResult {
    /// Residue `1`.
    One,
    /// Residue `n - 1`.
    MinusOne,
    /// Anything else: `n` is composite.
    Neither,
}

/// Outcome of a condition-2 check for one `(q, r)` pair.
#[derive(Clone, Debug)]
pub struct Condition2Outcome {
    /// Classification of the Jacobi-sum product against the roots of unity.
    pub class: RootClassification,
    /// For characters of two-power order at least 4: the auxiliary
    /// `q^{(n-1)/2} mod n` classification, used by the lambda condition.
    pub quadratic: Option<QuadraticResult>,
}

/// Checks the second condition for a character of odd prime-power
/// order `r = l^k` by classifying
/// `P = prod_{i in (Z/rZ)^*} sigma_i^{-1}(j(chi,chi)^{floor(n i / r)})`
/// in `Z[zeta_r]/(n)`.
///
/// Requires `gcd(n, q r) = 1` and `l` not a Wieferich prime for base 2
/// (the two known ones are rejected; every plan uses `l < 20`).
pub fn condition2_odd_l(n: &BigUint, chi: &Character) -> Result<RootClassification, Error> {
    let r = chi.r;
    let (l, _) = single_prime_power(r);
    if l == 2 {
        return Err(Error::Domain("condition2_odd_l requires odd character order"));
    }
    if l == 1093 || l == 3511 {
        return Err(Error::Domain("Wieferich primes are not supported as character orders"));
    }
    check_pair_coprime(n, chi)?;
    let ring = CycloRing::new(r, n.clone())?;
    let j = jacobi_sum(chi, chi)?.reduce_mod(&ring)?;
    let mut acc = ring.one();
    for i in 1..r {
        if num_integer::gcd(i, r) != 1 {
            continue;
        }
        let exp = n * i / r;
        let term = j.pow(&exp)?.galois_apply(inv_mod_u64(i, r)?)?;
        acc = acc.mul(&term)?;
    }
    Ok(RootClassification::from_index(acc.root_of_unity_index(), r))
}

/// Checks the second condition for a character of two-power order `r`,
/// together with the auxiliary Euler check for `r >= 4`.
///
/// `r = 2` uses `(chi(-1) q)^{(n-1)/2} mod n` directly; `r = 4` evaluates
/// `tau^{n - sigma_n}` through `tau^4 = j(chi,chi)^2 q`; `r >= 8` splits on
/// `n mod 8`, using the Jacobi-sum product over exponents `1, 3 mod 8` when
/// `n = 1, 3 mod 8` and an exact cross-multiplied form of the same identity
/// when `n = 5, 7 mod 8`.
pub fn condition2_l2(n: &BigUint, chi: &Character) -> Result<Condition2Outcome, Error> {
    let r = chi.r;
    let (l, _) = single_prime_power(r);
    if l != 2 {
        return Err(Error::Domain("condition2_l2 requires two-power character order"));
    }
    check_pair_coprime(n, chi)?;
    let q = chi.q;
    if r == 2 {
        let base = signed_residue(q, q % 4 == 3, n);
        let v = powmod(&base, &((n - 1u32) >> 1), n)?;
        let class = if v.is_one() {
            RootClassification::InGroupNotPrimitive { t: 0 }
        } else if v == n - 1u32 {
            RootClassification::PrimitiveRoot { t: 1 }
        } else {
            RootClassification::NotInGroup
        };
        return Ok(Condition2Outcome { class, quadratic: None });
    }

    let aux = powmod(&(BigUint::from(q) % n), &((n - 1u32) >> 1), n)?;
    let quadratic = if aux.is_one() {
        QuadraticResult::One
    } else if aux == n - 1u32 {
        QuadraticResult::MinusOne
    } else {
        QuadraticResult::Neither
    };
    if quadratic == QuadraticResult::Neither {
        return Ok(Condition2Outcome { class: RootClassification::NotInGroup, quadratic: Some(quadratic) });
    }

    let ring = CycloRing::new(r, n.clone())?;
    let minus_at = chi_minus_one_is_minus(q, r);
    let class = if r == 4 {
        let j = jacobi_sum(chi, chi)?.reduce_mod(&ring)?;
        let jj = j.mul(&j)?;
        let base = jj.mul_scalar(&(BigUint::from(q) % n));
        let w = if (n % 4u64).to_u64() == Some(1) {
            base.pow(&((n - 1u32) >> 2))?
        } else {
            let core = base.pow(&((n - 3u32) >> 2))?.mul(&jj)?;
            if minus_at { core.neg() } else { core }
        };
        RootClassification::from_index(w.root_of_unity_index(), r)
    } else {
        let n_mod_8 = (n % 8u64).to_u64().unwrap();
        if n_mod_8 == 1 || n_mod_8 == 3 {
            let j1 = jacobi_sum(chi, chi)?;
            let j2 = jacobi_sum(chi, &chi.pow(2))?;
            let jprod = j1.mul_exact(&j2)?.reduce_mod(&ring)?;
            let mut acc = ring.one();
            for i in (1..r).step_by(2) {
                if i % 8 != 1 && i % 8 != 3 {
                    continue;
                }
                let exp = n * i / r;
                let term = jprod.pow(&exp)?.galois_apply(inv_mod_u64(i, r)?)?;
                acc = acc.mul(&term)?;
            }
            RootClassification::from_index(acc.root_of_unity_index(), r)
        } else {
            // For n = 5, 7 mod 8 the product formula above does not apply.
            // With m = r - (n mod r) and c = (n + m) / r, the condition
            // "tau^{sigma_n - n} is a power of zeta_r" is equivalent to the
            // division-free identity
            //   chi(-1) q J_m = zeta_r^t (chi(-1) q J_{r-1})^c / ...
            // concretely: chi(-1) q J_m == zeta_r^t D^c with
            // J_m = prod_{k<m} j(chi, chi^k) and D = chi(-1) q J_{r-1} = tau^r,
            // because tau is invertible mod n and sigma_m sigma_n = sigma_{-1}
            // composes the two partial Gauss-sum factorizations.
            let m = r - (n % r).to_u64().unwrap();
            debug_assert!(m % 8 == 1 || m % 8 == 3);
            let c = (n + m) / r;
            let jm = jacobi_run_product(chi, m, &ring)?;
            let d_full = jacobi_run_product(chi, r - 1, &ring)?;
            let qd = ring.scalar(BigUint::from(q) % n);
            let sgn = |x: CycloElement| if minus_at { x.neg() } else { x };
            let lhs = sgn(jm.mul(&qd)?);
            let rhs_base = sgn(d_full.mul(&qd)?).pow(&c)?;
            let mut found = None;
            for t in 0..r {
                if lhs == ring.zeta_pow(t).mul(&rhs_base)? {
                    found = Some(t);
                    break;
                }
            }
            RootClassification::from_index(found, r)
        }
    };
    Ok(Condition2Outcome { class, quadratic: Some(quadratic) })
}

/// `prod_{k=1}^{m-1} j(chi, chi^k)` reduced into the ring; equals
/// `tau^{m - sigma_m}` for `1 <= m <= r - 1`.
fn jacobi_run_product(chi: &Character, m: u64, ring: &CycloRing) -> Result<CycloElement, Error> {
    let mut acc = ring.one();
    for k in 1..m {
        let j = jacobi_sum(chi, &chi.pow(k))?.reduce_mod(ring)?;
        acc = acc.mul(&j)?;
    }
    Ok(acc)
}

/// Whether `chi(-1) = -1`, decided by the parity of `(q-1)/2` against the
/// two-power order `r >= 4`.
fn chi_minus_one_is_minus(q: u64, r: u64) -> bool {
    let e = ((q - 1) / 2) % r;
    debug_assert!(e == 0 || e == r / 2);
    e != 0
}

/// `(+-q) mod n` as a `BigUint`.
fn signed_residue(q: u64, negate: bool, n: &BigUint) -> BigUint {
    let qm = BigUint::from(q) % n;
    if !negate || qm.is_zero() {
        qm
    } else {
        n - qm
    }
}

fn check_pair_coprime(n: &BigUint, chi: &Character) -> Result<(), Error> {
    let qr = BigUint::from(chi.q) * chi.r;
    if !gcd(n, &qr)?.is_one() {
        return Err(Error::Domain("modulus shares a factor with the character pair"));
    }
    Ok(())
}

/// Modular inverse for small moduli via extended Euclid.
fn inv_mod_u64(a: u64, m: u64) -> Result<u64, Error> {
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut rr, mut new_r) = (m as i128, (a % m) as i128);
    while new_r != 0 {
        let quot = rr / new_r;
        (t, new_t) = (new_t, t - quot * new_t);
        (rr, new_r) = (new_r, rr - quot * new_r);
    }
    if rr != 1 {
        return Err(Error::Domain("element not invertible"));
    }
    Ok(((t % m as i128 + m as i128) % m as i128) as u64)
}

/// How the lambda condition for one prime `l | R` was established.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LambdaStatus {
    /// `n^{l-1} != 1 mod l^2`, which settles odd `l` outright.
    AutomaticByLSquare,
    /// Established through a condition-2 outcome for conductor `q`.
    ByProp33 { case: Prop33Case, q: u64 },
    /// No evidence found among the recorded outcomes.
    Unproven,
}

/// Which clause of the auxiliary-prime criterion applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Prop33Case {
    /// Odd `l`: some character of order `l^k` produced a primitive root.
    CaseI,
    /// `l = 2`, `n = 1 mod 4`: some `q` with `q^{(n-1)/2} = -1 mod n`.
    CaseII,
    /// `l = 2`, `n = 3 mod 4`: a two-power pair of order at least 4 with a
    /// primitive-root classification whose conductor also satisfies
    /// `q^{(n-1)/2} = -1 mod n`.
    CaseIII,
}

/// Evidence that the lambda condition holds for one prime `l`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LambdaEvidence {
    /// The prime `l` dividing `R`.
    pub l: u64,
    /// How (or whether) the condition was established.
    pub status: LambdaStatus,
}

/// Recorded result of one condition-2 check.
#[derive(Clone, Debug)]
pub struct PairOutcome {
    /// Conductor of the character.
    pub q: u64,
    /// Prime-power order of the character.
    pub r: u64,
    /// The prime below `r`.
    pub l: u64,
    /// Classification of the Jacobi-sum product.
    pub class: RootClassification,
    /// Auxiliary Euler check for two-power orders at least 4.
    pub quadratic: Option<QuadraticResult>,
    /// Whether this pair came from the fallback search rather than the plan.
    pub extra: bool,
}

/// Scans recorded condition-2 outcomes for evidence that the lambda
/// condition holds for the prime `l`.
///
/// Odd `l` is automatic when `n^{l-1} != 1 mod l^2`; otherwise some pair of
/// order `l^k` must have produced a primitive root.  For `l = 2` the
/// evidence depends on `n mod 4` as described on [`Prop33Case`].
pub fn lambda_condition(n: &BigUint, l: u64, outcomes: &[PairOutcome]) -> Result<LambdaEvidence, Error> {
    if !is_prime_u64(l) {
        return Err(Error::Domain("lambda condition requires a prime l"));
    }
    if l != 2 {
        let l2 = BigUint::from(l) * l;
        if !powmod(&(n % &l2), &BigUint::from(l - 1), &l2)?.is_one() {
            return Ok(LambdaEvidence { l, status: LambdaStatus::AutomaticByLSquare });
        }
        for o in outcomes {
            if o.l == l && o.class.is_primitive() {
                return Ok(LambdaEvidence { l, status: LambdaStatus::ByProp33 { case: Prop33Case::CaseI, q: o.q } });
            }
        }
        return Ok(LambdaEvidence { l, status: LambdaStatus::Unproven });
    }
    if (n % 4u64).to_u64() == Some(1) {
        for o in outcomes {
            let euler_minus = match (o.r, &o.class, o.quadratic) {
                (2, RootClassification::PrimitiveRoot { .. }, _) => true,
                (_, _, Some(QuadraticResult::MinusOne)) => true,
                _ => false,
            };
            if euler_minus {
                return Ok(LambdaEvidence { l, status: LambdaStatus::ByProp33 { case: Prop33Case::CaseII, q: o.q } });
            }
        }
    } else {
        for o in outcomes {
            if o.l == 2
                && o.r >= 4
                && o.class.is_primitive()
                && o.quadratic == Some(QuadraticResult::MinusOne)
            {
                return Ok(LambdaEvidence { l, status: LambdaStatus::ByProp33 { case: Prop33Case::CaseIII, q: o.q } });
            }
        }
    }
    Ok(LambdaEvidence { l, status: LambdaStatus::Unproven })
}

/// A selected test plan: the exponent bound `R`, the auxiliary modulus `s`,
/// and one character per `(q, r)` pair.
#[derive(Clone, Debug)]
pub struct TestPlan {
    /// The number under test.
    pub n: BigUint,
    /// The highly composite exponent bound.
    pub big_r: u64,
    /// `prod { q prime : q - 1 | R }`, satisfying `s^2 > n`.
    pub s: BigUint,
    /// The primes `q` dividing `s`, ascending.
    pub qs: Vec<u64>,
    /// One character for each prime `q | s` and each maximal prime power
    /// `r | q - 1` (the prime `q = 2` contributes no pairs).
    pub pairs: Vec<(u64, u64, Character)>,
}

/// Candidate values for `R`: `2^a 3^b` times a squarefree product of primes
/// up to 19, with `12 | R`, ascending.
fn r_candidates() -> Vec<u64> {
    let tail = [5u64, 7, 11, 13, 17, 19];
    let mut out = Vec::new();
    for a in 2..=6u32 {
        for b in 1..=3u32 {
            let base = 2u64.pow(a) * 3u64.pow(b);
            for mask in 0..(1u32 << tail.len()) {
                let mut r = base;
                for (i, &p) in tail.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        r *= p;
                    }
                }
                out.push(r);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// The auxiliary modulus for a candidate `R`: the product of all primes `q`
/// with `q - 1 | R`, together with the list of those primes.
fn s_for_candidate(big_r: u64) -> (BigUint, Vec<u64>) {
    let mut divisors = vec![1u64];
    for (p, e) in factor_u64(big_r) {
        let prev = divisors.clone();
        let mut pe = 1u64;
        for _ in 0..e {
            pe *= p;
            divisors.extend(prev.iter().map(|d| d * pe));
        }
    }
    divisors.sort_unstable();
    let mut s = BigUint::one();
    let mut qs = Vec::new();
    for d in divisors {
        let q = d + 1;
        if is_prime_u64(q) {
            s *= q;
            qs.push(q);
        }
    }
    (s, qs)
}

/// Selects the smallest plan whose auxiliary modulus satisfies `s^2 > n`,
/// building one character per `(q, r)` pair.
///
/// Requires `n` odd and `n > 9`.  Shared-factor guards between `n` and the
/// plan's primes are the driver's job; the plan itself is a pure function
/// of `n`'s size.
/// The auxiliary modulus attached to an exponent bound `R`: the product
/// `s` of all primes `q` with `q - 1 | R`, along with the list of those
/// primes in ascending order.
pub fn aux_modulus_for(big_r: u64) -> (BigUint, Vec<u64>) {
    s_for_candidate(big_r)
}

pub fn select_plan(n: &BigUint) -> Result<TestPlan, Error> {
    if n.is_even() || *n <= BigUint::from(9u32) {
        return Err(Error::Domain("plan selection requires an odd n greater than 9"));
    }
    for big_r in r_candidates() {
        let (s, qs) = s_for_candidate(big_r);
        if &s * &s <= *n {
            continue;
        }
        let mut pairs = Vec::new();
        for &q in &qs {
            if q == 2 {
                continue;
            }
            for (l, e) in factor_u64(q - 1) {
                let r = l.pow(e);
                pairs.push((q, r, Character::new(q, r)?));
            }
        }
        return Ok(TestPlan { n: n.clone(), big_r, s, qs, pairs });
    }
    Err(Error::Capacity("no candidate R gives s^2 > n"))
}

/// Outcome of the final sweep over powers of `n` modulo `s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SweepOutcome {
    /// Some `n^k mod s` was a nontrivial divisor of `n`.
    DivisorFound(BigUint),
    /// No power of `n` modulo `s` divides `n`; combined with the other
    /// conditions this proves `n` prime.
    NoDivisorFound,
}

/// Checks whether the smallest positive residue of `n^k mod s` divides `n`
/// for any `0 < k < R`.
pub fn final_divisor_sweep(n: &BigUint, s: &BigUint, big_r: u64) -> SweepOutcome {
    let base = n % s;
    let mut d = BigUint::one();
    for _ in 1..big_r {
        d = d * &base % s;
        if !d.is_one() && &d < n && (n % &d).is_zero() {
            return SweepOutcome::DivisorFound(d);
        }
    }
    SweepOutcome::NoDivisorFound
}

/// Why `n` was recognized as composite.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CompositeEvidence {
    /// The preliminary Miller-Rabin screen found a witness.
    ScreenWitness { witness: BigUint },
    /// `n` shares the given prime factor with the plan moduli.
    SharedFactor { factor: BigUint },
    /// The condition-2 product for this pair fell outside the root group.
    PairFailure { q: u64, r: u64 },
    /// `q^{(n-1)/2} mod n` was neither `1` nor `n - 1`.
    QuadraticFailure { q: u64 },
    /// The final sweep found a nontrivial divisor.
    SweepDivisor { divisor: BigUint },
}

/// Verdict of the cyclotomic test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CycloVerdict {
    /// `n` is proven prime.
    Prime,
    /// `n` is composite, with the reason recorded.
    Composite(CompositeEvidence),
    /// The test could not establish the lambda condition within its
    /// fallback budget; no claim is made either way.
    Inconclusive(&'static str),
}

/// Full record of one run of the cyclotomic test.
#[derive(Clone, Debug)]
pub struct CyclotomicTranscript {
    /// The number tested.
    pub n: BigUint,
    /// Final verdict.
    pub verdict: CycloVerdict,
    /// Whether a Miller-Rabin screen ran first.
    pub screened: bool,
    /// The exponent bound of the selected plan, when one was selected.
    pub big_r: Option<u64>,
    /// The auxiliary modulus of the selected plan.
    pub s: Option<BigUint>,
    /// Condition-2 outcomes in execution order, fallback pairs included.
    pub pairs: Vec<PairOutcome>,
    /// Lambda evidence per prime `l | R`, in ascending `l` order.
    pub lambda: Vec<LambdaEvidence>,
}

impl CyclotomicTranscript {
    fn settled(n: &BigUint, verdict: CycloVerdict, screened: bool) -> CyclotomicTranscript {
        CyclotomicTranscript {
            n: n.clone(),
            verdict,
            screened,
            big_r: None,
            s: None,
            pairs: Vec::new(),
            lambda: Vec::new(),
        }
    }
}

/// Runs the cyclotomic test after a 20-round Miller-Rabin screen.
///
/// The screen converts virtually every composite into a fast rejection with
/// a recorded witness; numbers that survive it go through the full
/// Jacobi-sum machinery, which never certifies a composite.
pub fn cyclotomic_prove<R: Rng + ?Sized>(n: &BigUint, rng: &mut R) -> Result<CyclotomicTranscript, Error> {
    check_cyclo_domain(n)?;
    let screen = fermat::miller_rabin(n, 20, rng)?;
    if screen.verdict == Verdict::Composite {
        let witness = screen.witness.expect("odd screened inputs always carry a witness");
        return Ok(CyclotomicTranscript::settled(
            n,
            CycloVerdict::Composite(CompositeEvidence::ScreenWitness { witness }),
            true,
        ));
    }
    let mut t = cyclotomic_prove_unscreened(n)?;
    t.screened = true;
    Ok(t)
}

fn check_cyclo_domain(n: &BigUint) -> Result<(), Error> {
    if n.is_even() || *n <= BigUint::from(9u32) {
        return Err(Error::Domain("cyclotomic test requires an odd n greater than 9"));
    }
    Ok(())
}

/// Runs the cyclotomic test with no probabilistic screen.
///
/// Sound in one direction unconditionally: a `Prime` verdict is a proof.
/// Composites are normally caught by the shared-factor guards, a failed
/// condition, or the final sweep, but a composite that defeats the lambda
/// fallback search ends `Inconclusive` rather than misclassified.
pub fn cyclotomic_prove_unscreened(n: &BigUint) -> Result<CyclotomicTranscript, Error> {
    check_cyclo_domain(n)?;
    let plan = select_plan(n)?;

    // Shared-factor guards: n must be coprime to R and s before the ring
    // arithmetic means anything.
    let g = gcd(n, &BigUint::from(plan.big_r))?;
    if !g.is_one() {
        let p = factor_u64(g.to_u64().expect("gcd with u64 fits u64")).first().map(|&(p, _)| p).unwrap();
        let verdict = if BigUint::from(p) == *n {
            CycloVerdict::Prime
        } else {
            CycloVerdict::Composite(CompositeEvidence::SharedFactor { factor: BigUint::from(p) })
        };
        return Ok(CyclotomicTranscript::settled(n, verdict, false));
    }
    let g = gcd(n, &plan.s)?;
    if !g.is_one() {
        for &q in &plan.qs {
            if (n % q).is_zero() {
                let verdict = if BigUint::from(q) == *n {
                    CycloVerdict::Prime
                } else {
                    CycloVerdict::Composite(CompositeEvidence::SharedFactor { factor: BigUint::from(q) })
                };
                return Ok(CyclotomicTranscript::settled(n, verdict, false));
            }
        }
        unreachable!("gcd(n, s) > 1 implies some q | s divides n");
    }

    let mut transcript = CyclotomicTranscript {
        n: n.clone(),
        verdict: CycloVerdict::Inconclusive("in progress"),
        screened: false,
        big_r: Some(plan.big_r),
        s: Some(plan.s.clone()),
        pairs: Vec::new(),
        lambda: Vec::new(),
    };

    for (q, r, chi) in &plan.pairs {
        if let Some(verdict) = run_pair(n, *q, *r, chi, false, &mut transcript)? {
            transcript.verdict = verdict;
            return Ok(transcript);
        }
    }

    // Lambda condition per prime l | R, with a bounded fallback search for
    // additional conductors when the plan's own pairs are not enough.
    let ls: BTreeSet<u64> = factor_u64(plan.big_r).into_iter().map(|(l, _)| l).collect();
    for &l in &ls {
        let mut evidence = lambda_condition(n, l, &transcript.pairs)?;
        if evidence.status == LambdaStatus::Unproven {
            if let Some(verdict) = extra_q_search(n, l, &plan, &mut transcript)? {
                transcript.verdict = verdict;
                return Ok(transcript);
            }
            evidence = lambda_condition(n, l, &transcript.pairs)?;
        }
        let unproven = evidence.status == LambdaStatus::Unproven;
        transcript.lambda.push(evidence);
        if unproven {
            transcript.verdict = CycloVerdict::Inconclusive("lambda condition unproven within fallback budget");
            return Ok(transcript);
        }
    }

    transcript.verdict = match final_divisor_sweep(n, &plan.s, plan.big_r) {
        SweepOutcome::DivisorFound(d) => CycloVerdict::Composite(CompositeEvidence::SweepDivisor { divisor: d }),
        SweepOutcome::NoDivisorFound => CycloVerdict::Prime,
    };
    Ok(transcript)
}

/// Runs one condition-2 pair, records the outcome, and reports a verdict if
/// the pair settles the test on the spot.
fn run_pair(
    n: &BigUint,
    q: u64,
    r: u64,
    chi: &Character,
    extra: bool,
    transcript: &mut CyclotomicTranscript,
) -> Result<Option<CycloVerdict>, Error> {
    let (l, _) = single_prime_power(r);
    let outcome = if l == 2 {
        condition2_l2(n, chi)?
    } else {
        Condition2Outcome { class: condition2_odd_l(n, chi)?, quadratic: None }
    };
    let quadratic = match outcome.quadratic {
        Some(QuadraticResult::Neither) => {
            transcript.pairs.push(PairOutcome { q, r, l, class: outcome.class, quadratic: outcome.quadratic, extra });
            return Ok(Some(CycloVerdict::Composite(CompositeEvidence::QuadraticFailure { q })));
        }
        other => other,
    };
    let in_group = outcome.class.in_group();
    transcript.pairs.push(PairOutcome { q, r, l, class: outcome.class, quadratic, extra });
    if !in_group {
        return Ok(Some(CycloVerdict::Composite(CompositeEvidence::PairFailure { q, r })));
    }
    Ok(None)
}

/// Bounded search for additional conductors `q' = 1 mod l` (or `1 mod 4`
/// when `l = 2`) whose condition-2 outcome can supply lambda evidence.
fn extra_q_search(
    n: &BigUint,
    l: u64,
    plan: &TestPlan,
    transcript: &mut CyclotomicTranscript,
) -> Result<Option<CycloVerdict>, Error> {
    let modbase = if l == 2 { 4 } else { l };
    let planned: BTreeSet<u64> = plan.qs.iter().copied().collect();
    let mut attempts = 0usize;
    let mut qc = modbase + 1;
    while attempts < EXTRA_Q_ATTEMPTS {
        if qc > MAX_CONDUCTOR {
            break;
        }
        if is_prime_u64(qc) && !planned.contains(&qc) {
            attempts += 1;
            if (n % qc).is_zero() {
                let verdict = if BigUint::from(qc) == *n {
                    CycloVerdict::Prime
                } else {
                    CycloVerdict::Composite(CompositeEvidence::SharedFactor { factor: BigUint::from(qc) })
                };
                return Ok(Some(verdict));
            }
            let (lq, e) = factor_u64(qc - 1)
                .into_iter()
                .find(|&(p, _)| p == l)
                .expect("q' = 1 mod l has l dividing q' - 1");
            debug_assert_eq!(lq, l);
            let r = l.pow(e);
            let chi = Character::new(qc, r)?;
            if let Some(verdict) = run_pair(n, qc, r, &chi, true, transcript)? {
                return Ok(Some(verdict));
            }
            if lambda_condition(n, l, &transcript.pairs)?.status != LambdaStatus::Unproven {
                return Ok(None);
            }
        }
        qc += modbase;
    }
    Ok(None)
}
