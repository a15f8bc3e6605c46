//! The polynomial-ring congruence test of Agrawal, Kayal and Saxena.
//!
//! The test certifies `n` prime or composite unconditionally, in time
//! polynomial in `log n`:
//!
//! 1. reject perfect powers;
//! 2. find the least prime `r` not dividing `n` such that the order of
//!    `n` in `(Z/rZ)*` exceeds `T = ceil((log2 n)^2)`;
//! 3. trial-divide by everything `<= r` (if `n` itself turns up, it is
//!    prime);
//! 4. check `(zeta + j)^n = zeta^{n mod r} + j` in `Z[zeta_r]/(n)` for
//!    `j = 0, 1, ..., r - 2`. Any failure is a proof of compositeness;
//!    full success is a proof of primality.
//!
//! The ring arithmetic runs on machine words whenever `n < 2^32` (products
//! of coefficients stay below `2^64`) and on big integers otherwise.

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::arith::{is_prime_u64, log2_sq_ceil, perfect_power_decompose};
use crate::cyclo::CycloRing;
use crate::error::Error;

/// Which stage of the test settled the verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AksEvidence {
    /// `n = b^e` with `e >= 2`.
    PerfectPower { base: BigUint, exponent: u32 },
    /// A proper divisor `<= r` turned up during the trial stage.
    SmallDivisor { divisor: u64 },
    /// `n` itself appeared among the trial divisors: `n <= r` and prime.
    TrialRangeExhausted,
    /// `(zeta + j)^n != zeta^{n mod r} + j`.
    CongruenceFailed { j: u64 },
    /// Every congruence held.
    AllCongruencesHeld,
}

/// Outcome of a full AKS run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AksReport {
    pub is_prime: bool,
    /// The parameter `r` of the congruence stage; `None` when the verdict
    /// fell out earlier.
    pub r: Option<u64>,
    pub evidence: AksEvidence,
}

/// `T = ceil((log2 n)^2)`, the order threshold for choosing `r`.
pub fn aks_threshold(n: &BigUint) -> Result<u64, Error> {
    log2_sq_ceil(n)
}

/// The least prime `r` with `r` not dividing `n` and `ord_r(n) > T`.
///
/// Such `r` exists below `max(3, ceil(log2 n)^5)`; the search just walks
/// primes upward, so the bound never needs to be materialized.
pub fn find_r(n: &BigUint) -> Result<u64, Error> {
    if n < &BigUint::from(2u32) {
        return Err(Error::Domain("find_r requires n >= 2"));
    }
    let t = aks_threshold(n)?;
    let mut r = 2u64;
    loop {
        if is_prime_u64(r) && !(n % r).to_u64().map(|x| x == 0).unwrap_or(false) {
            let n_mod_r = (n % r).to_u64().expect("residue fits");
            // ord_r(n) > T iff n^i != 1 mod r for all i <= T.
            let mut ord_exceeds = true;
            let mut acc = 1u64;
            for _ in 0..t {
                acc = acc * n_mod_r % r;
                if acc == 1 {
                    ord_exceeds = false;
                    break;
                }
            }
            if ord_exceeds {
                return Ok(r);
            }
        }
        r += 1;
        if r > (1 << 40) {
            return Err(Error::Capacity("find_r walked past 2^40"));
        }
    }
}

/// Runs the full test. Requires `n >= 2`.
pub fn aks_test(n: &BigUint) -> Result<AksReport, Error> {
    if n < &BigUint::from(2u32) {
        return Err(Error::Domain("aks_test requires n >= 2"));
    }
    if let Some((base, exponent)) = perfect_power_decompose(n)? {
        return Ok(AksReport {
            is_prime: false,
            r: None,
            evidence: AksEvidence::PerfectPower { base, exponent },
        });
    }
    let r = find_r(n)?;
    // Trial stage: any prime factor <= r settles everything.
    for d in 2..=r {
        if !is_prime_u64(d) {
            continue;
        }
        if let Some(nd) = n.to_u64() {
            if nd == d {
                return Ok(AksReport {
                    is_prime: true,
                    r: Some(r),
                    evidence: AksEvidence::TrialRangeExhausted,
                });
            }
        }
        if (n % d).to_u64() == Some(0) {
            return Ok(AksReport {
                is_prime: false,
                r: Some(r),
                evidence: AksEvidence::SmallDivisor { divisor: d },
            });
        }
    }
    // n > r and coprime to everything <= r. Congruence stage.
    let evidence = if let Some(n64) = n.to_u64().filter(|&v| v < (1 << 32)) {
        congruence_stage_u64(n64, r)
    } else {
        congruence_stage_big(n, r)?
    };
    Ok(AksReport {
        is_prime: matches!(evidence, AksEvidence::AllCongruencesHeld),
        r: Some(r),
        evidence,
    })
}

fn congruence_stage_big(n: &BigUint, r: u64) -> Result<AksEvidence, Error> {
    let ring = CycloRing::new(r, n.clone())?;
    let n_mod_r = (n % r).to_u64().expect("residue fits");
    for j in 0..r.saturating_sub(1) {
        let lhs = ring
            .zeta_pow(1)
            .add(&ring.scalar(BigUint::from(j)))?
            .pow(n)?;
        let rhs = ring.zeta_pow(n_mod_r).add(&ring.scalar(BigUint::from(j)))?;
        if lhs != rhs {
            return Ok(AksEvidence::CongruenceFailed { j });
        }
    }
    Ok(AksEvidence::AllCongruencesHeld)
}

/// Congruence stage over machine words. `r` here is prime, so the ring is
/// `(Z/nZ)[X]/Phi_r` with `Phi_r = 1 + X + ... + X^{r-1}`; the code works
/// modulo `X^r - 1` instead and compares canonical forms after one final
/// `Phi_r` fold, which is equivalent because `Phi_r | X^r - 1`.
fn congruence_stage_u64(n: u64, r: u64) -> AksEvidence {
    debug_assert!(n < (1 << 32), "coefficient products must fit u128 lanes");
    let r = r as usize;
    let nr = (BigUint::from(n) % r).to_u64().unwrap() as usize;
    let mut base = vec![0u64; r];
    let mut acc = vec![0u64; r];
    let mut tmp = vec![0u64; r];
    let mut scratch = vec![0u128; 2 * r];
    for j in 0..(r - 1) as u64 {
        // base = zeta + j; acc = 1.
        base.iter_mut().for_each(|c| *c = 0);
        base[0] = j % n;
        base[1] = 1 % n;
        acc.iter_mut().for_each(|c| *c = 0);
        acc[0] = 1 % n;
        // Square-and-multiply over exponent bits of n, high to low.
        let bits = 64 - n.leading_zeros();
        for i in (0..bits).rev() {
            cyclic_mul_u64(&acc, &acc, &mut scratch, &mut tmp, n);
            std::mem::swap(&mut acc, &mut tmp);
            if (n >> i) & 1 == 1 {
                cyclic_mul_u64(&acc, &base, &mut scratch, &mut tmp, n);
                std::mem::swap(&mut acc, &mut tmp);
            }
        }
        // rhs = zeta^{n mod r} + j, also as a length-r cyclic vector.
        let mut rhs = vec![0u64; r];
        rhs[0] = j % n;
        rhs[nr] = (rhs[nr] + 1) % n;
        if !cyclic_eq_mod_phi(&acc, &rhs, n) {
            return AksEvidence::CongruenceFailed { j };
        }
    }
    AksEvidence::AllCongruencesHeld
}

/// `out = a * b mod (X^r - 1, n)` by schoolbook convolution. Coefficients
/// are `< n < 2^32`; a u128 accumulator absorbs `r` products without
/// overflow for every `r` this test can select.
fn cyclic_mul_u64(a: &[u64], b: &[u64], scratch: &mut [u128], out: &mut [u64], n: u64) {
    let r = a.len();
    scratch.iter_mut().for_each(|c| *c = 0);
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        let ai = ai as u128;
        for (j, &bj) in b.iter().enumerate() {
            scratch[i + j] += ai * bj as u128;
        }
    }
    let n128 = n as u128;
    for i in 0..r {
        let hi = scratch[i + r];
        out[i] = ((scratch[i] % n128 + hi % n128) % n128) as u64;
    }
}

/// Compares two length-r cyclic vectors as elements of `(Z/nZ)[X]/Phi_r`:
/// their difference must be a multiple of `1 + X + ... + X^{r-1}`, i.e.
/// constant across all coordinates.
fn cyclic_eq_mod_phi(a: &[u64], b: &[u64], n: u64) -> bool {
    let diff0 = (a[0] + n - b[0]) % n;
    a.iter()
        .zip(b)
        .all(|(&x, &y)| (x + n - y) % n == diff0)
}
