//! Strong pseudoprime (Miller-Rabin) testing.
//!
//! Write `n - 1 = 2^k m` with `m` odd. A base `x` passes the strong test
//! when `x^m = 1` or `x^{m 2^i} = -1 (mod n)` for some `0 <= i < k`; such
//! bases are the nonwitnesses of `n`. Every prime passes for all bases
//! coprime to it, and for odd composite `n > 9` the nonwitnesses occupy at
//! most a quarter of `(Z/nZ)*`, which is what makes the randomized test
//! effective.
//!
//! [`miller_rabin`] draws random bases; each composite escapes a round
//! with probability below 1/4. [`miller_grh`] instead tries every base
//! `1 < x <= 2(ln n)^2`; under the generalized Riemann hypothesis a
//! composite n always has a witness in that range, so a clean sweep is a
//! proof of primality conditional on GRH.

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use crate::arith::{decompose_odd, powmod_u64, two_ln_sq_ceil};
use crate::error::Error;

/// What a run of a strong pseudoprime test established about `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// Proven prime (small cases, or a clean GRH base sweep).
    Prime,
    /// Survived every base tried; composite with probability `< 4^-rounds`
    /// for the randomized test.
    ProbablePrime,
    /// Proven composite.
    Composite,
}

/// Verdict plus the base that decided it, when one did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MrOutcome {
    pub verdict: Verdict,
    /// A witness base proving compositeness, if the verdict came from one.
    pub witness: Option<BigUint>,
}

/// Result of testing a single base.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrongTest {
    /// The base is a nonwitness: `n` is a strong probable prime to it.
    ProbablePrime,
    /// The base is a witness: `n` is composite.
    Witness,
}

/// Tests one base `x` against odd `n >= 3`. Requires `1 <= x mod n <= n-1`,
/// i.e. `x` not divisible by `n`.
pub fn strong_test(n: &BigUint, x: &BigUint) -> Result<StrongTest, Error> {
    let d = decompose_odd(n)?;
    let x = x % n;
    if x.is_zero() {
        return Err(Error::Domain("strong_test base is divisible by n"));
    }
    let n1 = n - 1u32;
    let mut y = x.modpow(&d.m, n);
    if y.is_one() || y == n1 {
        return Ok(StrongTest::ProbablePrime);
    }
    for _ in 1..d.k {
        y = &y * &y % n;
        if y == n1 {
            return Ok(StrongTest::ProbablePrime);
        }
        if y.is_one() {
            // Reached 1 without passing through -1: composite.
            return Ok(StrongTest::Witness);
        }
    }
    Ok(StrongTest::Witness)
}

fn strong_test_u64(n: u64, m: u64, k: u32, x: u64) -> StrongTest {
    debug_assert!(n >= 3 && n % 2 == 1 && x % n != 0);
    let mut y = powmod_u64(x, m, n);
    if y == 1 || y == n - 1 {
        return StrongTest::ProbablePrime;
    }
    for _ in 1..k {
        y = (y as u128 * y as u128 % n as u128) as u64;
        if y == n - 1 {
            return StrongTest::ProbablePrime;
        }
        if y == 1 {
            return StrongTest::Witness;
        }
    }
    StrongTest::Witness
}

fn trivial_cases(n: &BigUint) -> Result<Option<MrOutcome>, Error> {
    if n < &BigUint::from(2u32) {
        return Err(Error::Domain("primality is asked of n >= 2"));
    }
    if *n == BigUint::from(2u32) || *n == BigUint::from(3u32) {
        return Ok(Some(MrOutcome {
            verdict: Verdict::Prime,
            witness: None,
        }));
    }
    if n.bit(0) == false {
        return Ok(Some(MrOutcome {
            verdict: Verdict::Composite,
            witness: None,
        }));
    }
    Ok(None)
}

/// Randomized Miller-Rabin with `rounds` independent uniform bases from
/// `[2, n-2]`. A `ProbablePrime` verdict is wrong with probability less
/// than `4^-rounds`.
pub fn miller_rabin<R: Rng + ?Sized>(
    n: &BigUint,
    rounds: u32,
    rng: &mut R,
) -> Result<MrOutcome, Error> {
    if let Some(out) = trivial_cases(n)? {
        return Ok(out);
    }
    // n is odd and >= 5 here; bases live in [2, n-2].
    let lo = BigUint::from(2u32);
    let hi = n - 1u32; // exclusive upper end
    for _ in 0..rounds {
        let x = rng.gen_biguint_range(&lo, &hi);
        if strong_test(n, &x)? == StrongTest::Witness {
            return Ok(MrOutcome {
                verdict: Verdict::Composite,
                witness: Some(x),
            });
        }
    }
    Ok(MrOutcome {
        verdict: Verdict::ProbablePrime,
        witness: None,
    })
}

/// Deterministic variant: tries every base `2 <= x <= min(B, n-2)` with
/// `B = ceil(2 (ln n)^2)`. A clean sweep proves primality under GRH;
/// a witness proves compositeness unconditionally.
pub fn miller_grh(n: &BigUint) -> Result<MrOutcome, Error> {
    if let Some(out) = trivial_cases(n)? {
        return Ok(out);
    }
    let bound = BigUint::from(two_ln_sq_ceil(n)?);
    let top = bound.min(n - 2u32);
    if let Some((n64, top64)) = n.to_u64().zip(top.to_u64()) {
        let d = decompose_odd(n)?;
        let m = d.m.to_u64().expect("m < n fits");
        for x in 2..=top64 {
            if strong_test_u64(n64, m, d.k, x) == StrongTest::Witness {
                return Ok(MrOutcome {
                    verdict: Verdict::Composite,
                    witness: Some(BigUint::from(x)),
                });
            }
        }
    } else {
        let mut x = BigUint::from(2u32);
        while x <= top {
            if strong_test(n, &x)? == StrongTest::Witness {
                return Ok(MrOutcome {
                    verdict: Verdict::Composite,
                    witness: Some(x),
                });
            }
            x += 1u32;
        }
    }
    Ok(MrOutcome {
        verdict: Verdict::Prime,
        witness: None,
    })
}

/// The full nonwitness set of an odd `n >= 3`: all `x` in `(Z/nZ)*` that
/// the strong test fails to expose. Exhaustive; capped at `n <= 2^20`.
pub fn nonwitness_set(n: u64) -> Result<Vec<u64>, Error> {
    if n < 3 || n % 2 == 0 {
        return Err(Error::Domain("nonwitness_set requires odd n >= 3"));
    }
    if n > (1 << 20) {
        return Err(Error::Capacity("nonwitness_set is exhaustive; n capped at 2^20"));
    }
    let k = (n - 1).trailing_zeros();
    let m = (n - 1) >> k;
    let mut out = Vec::new();
    for x in 1..n {
        if num_integer::gcd(x, n) != 1 {
            continue;
        }
        if strong_test_u64(n, m, k, x) == StrongTest::ProbablePrime {
            out.push(x);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{factor_u64, is_prime_u64, powmod};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn b(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn strong_test_walkthrough_for_25_base_7() {
        // 25 - 1 = 2^3 * 3; 7^3 = 343 = 18 mod 25, then 18^2 = 324 = 24 = -1:
        // 7 is a nonwitness of 25 even though 25 is composite.
        assert_eq!(powmod(&b(7), &b(3), &b(25)).unwrap(), b(18));
        assert_eq!(powmod(&b(18), &b(2), &b(25)).unwrap(), b(24));
        assert_eq!(strong_test(&b(25), &b(7)).unwrap(), StrongTest::ProbablePrime);
        // Base 2 exposes 25: 2^3 = 8, 8^2 = 64 = 14, 14^2 = 196 = 21, never -1.
        assert_eq!(strong_test(&b(25), &b(2)).unwrap(), StrongTest::Witness);
    }

    #[test]
    fn strong_test_walkthrough_for_561_base_2() {
        // 561 = 3 * 11 * 17 is a Carmichael number; 561 - 1 = 2^4 * 35.
        // 2^35 = 263, 263^2 = 166, 166^2 = 67, 67^2 = 1: the chain hits 1
        // without passing -1, so 2 witnesses 561.
        assert_eq!(powmod(&b(2), &b(35), &b(561)).unwrap(), b(263));
        assert_eq!(powmod(&b(263), &b(2), &b(561)).unwrap(), b(166));
        assert_eq!(powmod(&b(166), &b(2), &b(561)).unwrap(), b(67));
        assert_eq!(powmod(&b(67), &b(2), &b(561)).unwrap(), b(1));
        assert_eq!(strong_test(&b(561), &b(2)).unwrap(), StrongTest::Witness);
    }

    #[test]
    fn strong_test_accepts_known_strong_pseudoprimes() {
        // 2047 = 23 * 89 is the smallest strong pseudoprime to base 2.
        assert_eq!(strong_test(&b(2047), &b(2)).unwrap(), StrongTest::ProbablePrime);
        assert_eq!(strong_test(&b(2047), &b(3)).unwrap(), StrongTest::Witness);
        // 121 = 11^2 is a strong pseudoprime to base 3.
        assert_eq!(strong_test(&b(121), &b(3)).unwrap(), StrongTest::ProbablePrime);
    }

    #[test]
    fn strong_test_never_accuses_a_prime() {
        for p in crate::arith::small_primes(2000).into_iter().skip(1) {
            for x in [2u64, 3, 5, 7, p - 1, p / 2 + 1] {
                if x % p == 0 || x < 1 {
                    continue;
                }
                assert_eq!(
                    strong_test(&b(p), &b(x)).unwrap(),
                    StrongTest::ProbablePrime,
                    "prime {p} accused by base {x}"
                );
            }
        }
    }

    #[test]
    fn strong_test_rejects_bad_domains() {
        assert!(strong_test(&b(15), &b(15)).is_err(), "base 0 mod n");
        assert!(strong_test(&b(15), &b(30)).is_err());
        assert!(strong_test(&b(16), &b(3)).is_err(), "even n");
        assert!(strong_test(&b(1), &b(1)).is_err());
    }

    #[test]
    fn miller_rabin_classifies_a_seeded_sweep() {
        let mut rng = ChaCha20Rng::seed_from_u64(0x5eed_0001);
        for n in 2..2000u64 {
            let out = miller_rabin(&b(n), 20, &mut rng).unwrap();
            let expect = is_prime_u64(n);
            match out.verdict {
                Verdict::Prime | Verdict::ProbablePrime => {
                    assert!(expect, "{n} passed but is composite")
                }
                Verdict::Composite => {
                    assert!(!expect, "{n} flagged composite but is prime");
                    if let Some(w) = &out.witness {
                        assert_eq!(
                            strong_test(&b(n), w).unwrap(),
                            StrongTest::Witness,
                            "reported witness must actually witness"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn miller_rabin_handles_edge_inputs() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        assert!(miller_rabin(&b(0), 5, &mut rng).is_err());
        assert!(miller_rabin(&b(1), 5, &mut rng).is_err());
        assert_eq!(miller_rabin(&b(2), 5, &mut rng).unwrap().verdict, Verdict::Prime);
        assert_eq!(miller_rabin(&b(3), 5, &mut rng).unwrap().verdict, Verdict::Prime);
        assert_eq!(miller_rabin(&b(4), 5, &mut rng).unwrap().verdict, Verdict::Composite);
        assert_eq!(
            miller_rabin(&b(5), 0, &mut rng).unwrap().verdict,
            Verdict::ProbablePrime,
            "zero rounds can only shrug"
        );
    }

    #[test]
    fn miller_rabin_catches_carmichael_numbers() {
        let mut rng = ChaCha20Rng::seed_from_u64(0xca27_1cae);
        for n in [561u64, 1105, 1729, 2465, 2821, 6601, 8911, 41041, 62745] {
            let out = miller_rabin(&b(n), 20, &mut rng).unwrap();
            assert_eq!(out.verdict, Verdict::Composite, "Carmichael {n} slipped through");
        }
    }

    #[test]
    fn miller_grh_agrees_with_trial_division_below_4000() {
        for n in 2..4000u64 {
            let out = miller_grh(&b(n)).unwrap();
            let expect = is_prime_u64(n);
            match out.verdict {
                Verdict::Prime => assert!(expect, "{n} passed the sweep but is composite"),
                Verdict::Composite => assert!(!expect, "{n} flagged but is prime"),
                Verdict::ProbablePrime => panic!("the sweep never equivocates"),
            }
        }
    }

    #[test]
    fn miller_grh_big_path_matches_small_path() {
        // Force the BigUint path by testing values near 2^64 against the
        // u64 path's own verdicts on the same numbers.
        let known_prime = BigUint::parse_bytes(b"18446744073709551629", 10).unwrap(); // 2^64 + 13
        assert_eq!(miller_grh(&known_prime).unwrap().verdict, Verdict::Prime);
        let composite = BigUint::parse_bytes(b"18446744073709551617", 10).unwrap(); // 2^64 + 1 = 274177 * ...
        assert_eq!(miller_grh(&composite).unwrap().verdict, Verdict::Composite);
    }

    #[test]
    fn nonwitness_sets_match_frozen_examples() {
        assert_eq!(nonwitness_set(15).unwrap(), vec![1, 14]);
        assert_eq!(nonwitness_set(25).unwrap(), vec![1, 7, 18, 24]);
        // For a prime every coprime base is a nonwitness.
        assert_eq!(nonwitness_set(13).unwrap().len(), 12);
        assert!(nonwitness_set(14).is_err(), "even n rejected");
    }

    #[test]
    fn nonwitness_count_obeys_the_quarter_bound_above_nine() {
        // 9 itself breaks the bound (2 nonwitnesses, phi/4 = 1.5), which is
        // exactly why it is excluded.
        assert_eq!(nonwitness_set(9).unwrap(), vec![1, 8]);
        for n in (11..2000u64).step_by(2) {
            if is_prime_u64(n) {
                continue;
            }
            let phi: u64 = factor_u64(n)
                .iter()
                .map(|(p, k)| p.pow(k - 1) * (p - 1))
                .product();
            let count = nonwitness_set(n).unwrap().len() as u64;
            assert!(
                4 * count <= phi,
                "odd composite {n}: {count} nonwitnesses exceeds phi/4 = {phi}/4"
            );
        }
    }
}
