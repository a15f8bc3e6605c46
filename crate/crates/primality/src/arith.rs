//! Arbitrary-precision integer arithmetic primitives.
//!
//! Everything downstream (ring arithmetic, the four tests, certificates)
//! sits on the operations in this module: modular exponentiation, gcd,
//! the 2-adic decomposition of n-1, integer k-th roots, perfect-power
//! detection, modular square roots, and the Jacobi symbol.
//!
//! Two bounds that the tests need, ceil((log2 n)^2) and ceil(2 (ln n)^2),
//! are computed here with exact integer interval arithmetic rather than
//! floating point: bitlen(n^v) pins log2(n) inside ((B-1)/v, B/v), and v
//! doubles until the ceiling is unambiguous. ln 2 enters as a series
//! evaluation with directed rounding, never as a float literal.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::Error;

/// The 2-adic shape of an odd number: `n - 1 = 2^k * m` with `m` odd.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OddDecomposition {
    pub k: u32,
    pub m: BigUint,
}

/// `x^e mod n`. Requires `n >= 2`.
pub fn powmod(x: &BigUint, e: &BigUint, n: &BigUint) -> Result<BigUint, Error> {
    if n < &BigUint::from(2u32) {
        return Err(Error::Domain("powmod requires modulus >= 2"));
    }
    Ok(x.modpow(e, n))
}

/// Greatest common divisor. Requires that not both arguments are zero.
pub fn gcd(a: &BigUint, b: &BigUint) -> Result<BigUint, Error> {
    if a.is_zero() && b.is_zero() {
        return Err(Error::Domain("gcd(0, 0) is undefined"));
    }
    Ok(a.gcd(b))
}

/// Writes `n - 1 = 2^k * m` with `m` odd. Requires `n` odd and `n >= 3`.
pub fn decompose_odd(n: &BigUint) -> Result<OddDecomposition, Error> {
    if n.is_even() || n < &BigUint::from(3u32) {
        return Err(Error::Domain("decompose_odd requires odd n >= 3"));
    }
    let n1 = n - 1u32;
    let k = n1.trailing_zeros().expect("n-1 > 0") as u32;
    Ok(OddDecomposition { k, m: n1 >> k })
}

/// Floor of the k-th root of n, by integer Newton iteration with a final
/// two-sided check `b^k <= n < (b+1)^k`. Requires `k >= 1`.
pub fn kth_root_floor(n: &BigUint, k: u32) -> Result<BigUint, Error> {
    if k == 0 {
        return Err(Error::Domain("kth_root_floor requires k >= 1"));
    }
    if k == 1 || n.is_zero() || n.is_one() {
        return Ok(n.clone());
    }
    let bits = n.bits();
    if u64::from(k) >= bits {
        // 2^k > n, so the root is 1.
        return Ok(BigUint::one());
    }
    // Start above the true root: 2^ceil(bits/k) >= n^(1/k).
    let mut x = BigUint::one() << bits.div_ceil(u64::from(k));
    let kk = BigUint::from(k);
    let k1 = BigUint::from(k - 1);
    loop {
        // x_{t+1} = ((k-1) x + n / x^(k-1)) / k, monotone from above.
        let next = (&k1 * &x + n / x.pow(k - 1)) / &kk;
        if next >= x {
            break;
        }
        x = next;
    }
    while x.pow(k) > *n {
        x -= 1u32;
    }
    while (&x + 1u32).pow(k) <= *n {
        x += 1u32;
    }
    debug_assert!(x.pow(k) <= *n && (&x + 1u32).pow(k) > *n);
    Ok(x)
}

/// If `n = b^e` for some `e >= 2`, returns `(b, e)` with `e` maximal.
/// Requires `n >= 2`.
pub fn perfect_power_decompose(n: &BigUint) -> Result<Option<(BigUint, u32)>, Error> {
    if n < &BigUint::from(2u32) {
        return Err(Error::Domain("perfect_power_decompose requires n >= 2"));
    }
    let max_e = (n.bits() - 1) as u32; // floor(log2 n)
    for e in (2..=max_e.max(1)).rev() {
        let b = kth_root_floor(n, e)?;
        if b.pow(e) == *n {
            return Ok(Some((b, e)));
        }
    }
    Ok(None)
}

/// Square root of `a` modulo an odd prime `p` (Tonelli-Shanks), with the
/// caller's primality claim checked as a side effect.
///
/// Returns `Ok(Some(z))` with `z^2 = a mod p`, `Ok(None)` when `a` is a
/// quadratic nonresidue, and `Err(NotPrime)` when the arithmetic
/// contradicts the primality of `p`. Requires `p` odd, `p >= 3`, `a < p`.
pub fn sqrt_mod_prime(a: &BigUint, p: &BigUint) -> Result<Option<BigUint>, Error> {
    let one = BigUint::one();
    if p.is_even() || p < &BigUint::from(3u32) {
        return Err(Error::Domain("sqrt_mod_prime requires odd p >= 3"));
    }
    if a >= p {
        return Err(Error::Domain("sqrt_mod_prime requires a < p"));
    }
    if a.is_zero() {
        return Ok(Some(BigUint::zero()));
    }
    let pm1 = p - &one;
    let half = &pm1 >> 1;
    // Euler criterion first; anything other than +-1 betrays a composite p.
    let e = a.modpow(&half, p);
    if e == pm1 {
        return Ok(None);
    }
    if !e.is_one() {
        return Err(Error::NotPrime("Euler criterion returned neither 1 nor -1"));
    }
    if p % 4u32 == BigUint::from(3u32) {
        let z = a.modpow(&((p + &one) >> 2), p);
        return if (&z * &z) % p == *a {
            Ok(Some(z))
        } else {
            Err(Error::NotPrime("3 mod 4 shortcut produced a non-root"))
        };
    }
    // p = 1 mod 4: full Tonelli-Shanks. p - 1 = 2^s * q with q odd.
    let s = pm1.trailing_zeros().expect("p > 1");
    let q = &pm1 >> s;
    // A quadratic nonresidue; for prime p one appears fast. The scan bound
    // is generous enough for any prime this crate will ever see.
    let scan_bound = 64 + 2 * (p.bits() + 1) * (p.bits() + 1);
    let mut b = BigUint::from(2u32);
    let nonresidue = loop {
        if b.bits() > 64 || b.to_u64().unwrap_or(u64::MAX) > scan_bound {
            return Err(Error::NotPrime("no quadratic nonresidue in scan range"));
        }
        let e = b.modpow(&half, p);
        if e == pm1 {
            break b;
        }
        if !e.is_one() {
            return Err(Error::NotPrime("Euler criterion returned neither 1 nor -1"));
        }
        b += 1u32;
    };
    let mut m = s;
    let mut c = nonresidue.modpow(&q, p);
    let mut t = a.modpow(&q, p);
    let mut z = a.modpow(&((&q + &one) >> 1), p);
    while !t.is_one() {
        // Least i in (0, m) with t^(2^i) = 1; absence means p is composite.
        let mut i = 0u64;
        let mut tt = t.clone();
        while !tt.is_one() {
            tt = (&tt * &tt) % p;
            i += 1;
            if i >= m {
                return Err(Error::NotPrime("Tonelli-Shanks order chain broke"));
            }
        }
        let mut btw = c.clone();
        for _ in 0..(m - i - 1) {
            btw = (&btw * &btw) % p;
        }
        m = i;
        c = (&btw * &btw) % p;
        t = (&t * &c) % p;
        z = (&z * &btw) % p;
    }
    if (&z * &z) % p == *a {
        Ok(Some(z))
    } else {
        Err(Error::NotPrime("Tonelli-Shanks produced a non-root"))
    }
}

/// Jacobi symbol `(a / n)` for odd `n >= 3`; `a` may be negative.
pub fn jacobi_symbol(a: &BigInt, n: &BigUint) -> Result<i32, Error> {
    if n.is_even() || n < &BigUint::from(3u32) {
        return Err(Error::Domain("jacobi_symbol requires odd n >= 3"));
    }
    // Reduce into [0, n); this also absorbs the sign of a.
    let n_int = BigInt::from(n.clone());
    let mut u = a.mod_floor(&n_int).to_biguint().expect("mod_floor is nonnegative");
    let mut v = n.clone();
    let mut t = 1i32;
    while !u.is_zero() {
        let z = u.trailing_zeros().unwrap_or(0);
        u >>= z;
        if z % 2 == 1 {
            let vm8 = (&v % 8u32).to_u32().unwrap();
            if vm8 == 3 || vm8 == 5 {
                t = -t;
            }
        }
        // Quadratic reciprocity for odd u, v.
        if (&u % 4u32).to_u32().unwrap() == 3 && (&v % 4u32).to_u32().unwrap() == 3 {
            t = -t;
        }
        std::mem::swap(&mut u, &mut v);
        u %= &v;
    }
    Ok(if v.is_one() { t } else { 0 })
}

/// `x^e mod m` on machine words. Requires `m >= 1`.
pub fn powmod_u64(x: u64, mut e: u64, m: u64) -> u64 {
    assert!(m >= 1, "powmod_u64 requires m >= 1");
    if m == 1 {
        return 0;
    }
    let m128 = m as u128;
    let mut base = (x % m) as u128;
    let mut acc = 1u128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % m128;
        }
        base = base * base % m128;
        e >>= 1;
    }
    acc as u64
}

/// Primes up to and including `limit`, by sieve of Eratosthenes.
pub fn small_primes(limit: u64) -> Vec<u64> {
    assert!(limit <= 1 << 31, "sieve limit capped at 2^31");
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for p in 2..=n {
        if !composite[p] {
            primes.push(p as u64);
            let mut q = p * p;
            while q <= n {
                composite[q] = true;
                q += p;
            }
        }
    }
    primes
}

/// Deterministic primality of a machine word by trial division.
/// Intended for moduli up to ~10^12; cost grows with sqrt(n).
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    // 2/3/5 wheel.
    const STEPS: [u64; 8] = [4, 2, 4, 2, 4, 6, 2, 6];
    let mut d = 7u64;
    let mut i = 0;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += STEPS[i];
        i = (i + 1) % STEPS.len();
    }
    true
}

/// Full factorization of a machine word by trial division, as
/// `(prime, multiplicity)` pairs in ascending order.
pub fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    assert!(n >= 1, "factor_u64 requires n >= 1");
    let mut out = Vec::new();
    let mut push = |p: u64, n: &mut u64| {
        let mut k = 0u32;
        while *n % p == 0 {
            *n /= p;
            k += 1;
        }
        if k > 0 {
            out.push((p, k));
        }
    };
    push(2, &mut n);
    push(3, &mut n);
    push(5, &mut n);
    const STEPS: [u64; 8] = [4, 2, 4, 2, 4, 6, 2, 6];
    let mut d = 7u64;
    let mut i = 0;
    while d * d <= n {
        push(d, &mut n);
        d += STEPS[i];
        i = (i + 1) % STEPS.len();
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Multiplicative order of `a` modulo `m`, given that `lambda` is a
/// multiple of it (typically `m - 1` for prime `m`). Requires gcd(a, m) = 1.
pub fn multiplicative_order_u64(a: u64, m: u64, lambda: u64) -> u64 {
    debug_assert_eq!(powmod_u64(a, lambda, m), 1 % m, "lambda must annihilate a");
    let mut e = lambda;
    for (p, _) in factor_u64(lambda) {
        while e % p == 0 && powmod_u64(a, e / p, m) == 1 {
            e /= p;
        }
    }
    e
}

/// Strips all prime factors `<= bound` from `n` by trial division.
/// Returns the factors found (ascending, with multiplicity) and the
/// remaining cofactor.
pub fn factor_below(n: &BigUint, bound: u64) -> (Vec<(u64, u32)>, BigUint) {
    let mut rest = n.clone();
    let mut out = Vec::new();
    for p in small_primes(bound) {
        if rest.is_one() {
            break;
        }
        let pb = BigUint::from(p);
        // Cheap skip: p^2 > rest and rest < p means nothing left to find.
        let mut k = 0u32;
        while (&rest % &pb).is_zero() {
            rest /= &pb;
            k += 1;
        }
        if k > 0 {
            out.push((p, k));
        }
    }
    (out, rest)
}

/// ceil((log2 n)^2) for `n >= 2`, exactly.
///
/// Powers of two are exact; otherwise bitlen(n^v) pins log2(n) inside an
/// open rational interval that shrinks as v doubles, and the loop stops
/// once the ceiling is unambiguous ((log2 n)^2 is irrational here, so it
/// always becomes unambiguous).
pub fn log2_sq_ceil(n: &BigUint) -> Result<u64, Error> {
    if n < &BigUint::from(2u32) {
        return Err(Error::Domain("log2_sq_ceil requires n >= 2"));
    }
    if n.count_ones() == 1 {
        let k = n.bits() - 1;
        return Ok(k * k);
    }
    // The pin interval has width ~ 2 log2(n) / v, so v must scale with the
    // size of n before the ceiling can resolve.
    let mut v: u64 = 64.max((n.bits() * 4).next_power_of_two());
    loop {
        let b = n.pow(v as u32).bits(); // v*log2(n) in (b-1, b), both strict
        let d = BigUint::from(v) * v;
        let lo = BigUint::from(b - 1) * (b - 1);
        let hi = BigUint::from(b) * b;
        let t_min = lo / &d + 1u32;
        let t_max = (hi + &d - 1u32) / &d;
        if t_min == t_max {
            return Ok(t_min.to_u64().ok_or(Error::Capacity("log2_sq_ceil overflow"))?);
        }
        v *= 2;
        if v > (1 << 22) {
            return Err(Error::Capacity("log2_sq_ceil failed to pin the ceiling"));
        }
    }
}

/// ln 2 as a dyadic interval `[lo, hi] / 2^bits`, from the series
/// `ln 2 = sum_{k>=1} 1/(k 2^k)` with directed rounding. Cached per
/// precision; callers hit the same few precisions repeatedly.
fn ln2_fixed(bits: u64) -> (BigUint, BigUint) {
    use std::collections::HashMap;
    use std::sync::Mutex;
    static CACHE: Mutex<Option<HashMap<u64, (BigUint, BigUint)>>> = Mutex::new(None);
    if let Some(hit) = CACHE.lock().unwrap().get_or_insert_with(HashMap::new).get(&bits) {
        return hit.clone();
    }
    let out = ln2_fixed_uncached(bits);
    CACHE
        .lock()
        .unwrap()
        .get_or_insert_with(HashMap::new)
        .insert(bits, out.clone());
    out
}

fn ln2_fixed_uncached(bits: u64) -> (BigUint, BigUint) {
    let terms = bits + 16;
    let one = BigUint::one() << bits;
    let mut lo = BigUint::zero();
    for k in 1..=terms {
        // floor(2^bits / (k 2^k)); beyond k > bits the term underflows to 0.
        if k > bits {
            break;
        }
        lo += &one / (BigUint::from(k) << k);
    }
    // Each term was rounded down by < 1 ulp; the tail after `terms` terms
    // is < 2^(1-terms) < 1 ulp. Widen generously.
    let hi = &lo + BigUint::from(terms + 2);
    (lo, hi)
}

/// ceil(2 (ln n)^2) for `n >= 2`, exactly when it pins, otherwise the
/// conservative (upper) ceiling. Extra bases only strengthen the callers.
pub fn two_ln_sq_ceil(n: &BigUint) -> Result<u64, Error> {
    if n < &BigUint::from(2u32) {
        return Err(Error::Domain("two_ln_sq_ceil requires n >= 2"));
    }
    let mut v: u64 = 64.max((n.bits() * 4).next_power_of_two());
    let mut bits: u64 = 192;
    let mut last_t_max = None;
    for _ in 0..8 {
        let (c_lo, c_hi) = ln2_fixed(bits);
        // ln n = log2(n) * ln 2; log2(n)*v in [b-1, b] with strict bounds
        // unless n is a power of two, where the lower bound is attained.
        let b = n.pow(v as u32).bits();
        let den = (BigUint::from(v) * v) << (2 * bits as usize);
        let num_lo = (BigUint::from(b - 1) * (b - 1)) * (&c_lo * &c_lo) * 2u32;
        let num_hi = (BigUint::from(b) * b) * (&c_hi * &c_hi) * 2u32;
        let t_min = num_lo / &den + 1u32;
        let t_max = (num_hi + &den - 1u32) / &den;
        if t_min == t_max {
            return t_max.to_u64().ok_or(Error::Capacity("two_ln_sq_ceil overflow"));
        }
        last_t_max = Some(t_max);
        v *= 2;
        bits += 128;
    }
    last_t_max
        .expect("loop ran")
        .to_u64()
        .ok_or(Error::Capacity("two_ln_sq_ceil overflow"))
}
