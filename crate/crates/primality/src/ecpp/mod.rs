//! Elliptic curve primality proving with complex multiplication curves.
//!
//! The prover descends from `n` through a chain of smaller probable primes.
//! At each level it looks for an imaginary quadratic discriminant `D` such
//! that `n` splits as the norm of an integer `phi = (x + y sqrt(D))/2`; the
//! possible orders of a CM curve mod `n` are then `N(zeta phi - 1)` over the
//! units `zeta`, known in advance without any point counting.  An order with
//! a large probable-prime cofactor `s` turns into a certificate step whose
//! curve comes from a root of the Hilbert class polynomial
//! ([`classpoly`]), and the chain recurses on `s`.  Levels whose `n - 1`
//! splits off a large prime cofactor use the cheaper multiplicative test
//! instead.  The chain ends below a configurable floor with a trial
//! division leaf, and the assembled [`Certificate`](crate::cert) is
//! re-verified before it is returned.

pub mod bigfloat;
pub mod classpoly;

use self::classpoly::{class_number, class_polynomial, is_fundamental_discriminant, CmClass};
use crate::arith;
use crate::cert::{self, Certificate, Step};
use crate::elliptic::{self, Curve, CurvePoint, EcError};
use crate::error::Error;
use crate::fermat::{self, Verdict};
use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

/// Largest `|D|` admitted to the discriminant schedule.
const MAX_SCHEDULE_DISCRIMINANT: u64 = 1600;

/// Largest class number admitted to the discriminant schedule.
const MAX_SCHEDULE_CLASS_NUMBER: u32 = 4;

/// Random points tried per candidate curve before moving on.
const POINT_TRIALS: usize = 12;

/// Random bases tried by `nminus1_prove` before giving up.
const NMINUS1_RETRIES: usize = 64;

/// Consecutive integers swept when collecting twist representatives.
const TWIST_SWEEP: u64 = 64;

/// Blacklist key for multiplicative steps; never a valid discriminant.
const NMINUS1_KEY: i64 = 0;

/// An imaginary quadratic integer `phi = (x + y sqrt(d)) / 2` with `d < 0`
/// and `x ≡ y d mod 2`, so that the norm `(x^2 + |d| y^2) / 4` is integral.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadraticInteger {
    d: i64,
    x: BigInt,
    y: BigInt,
}

impl QuadraticInteger {
    /// Builds `(x + y sqrt(d)) / 2`, enforcing the parity invariant.
    pub fn new(d: i64, x: BigInt, y: BigInt) -> Result<QuadraticInteger, Error> {
        if d >= 0 {
            return Err(Error::Domain("discriminant must be negative"));
        }
        if !matches!(d.rem_euclid(4), 0 | 1) {
            return Err(Error::Domain("discriminant must be 0 or 1 mod 4"));
        }
        let skew = &x - &y * BigInt::from(d);
        if skew.bit(0) {
            return Err(Error::Domain("half-coordinates must satisfy x = y d mod 2"));
        }
        Ok(QuadraticInteger { d, x, y })
    }

    /// The discriminant `d`.
    pub fn discriminant(&self) -> i64 {
        self.d
    }

    /// Numerator coordinate `x` of `(x + y sqrt(d)) / 2`.
    pub fn x(&self) -> &BigInt {
        &self.x
    }

    /// Numerator coordinate `y` of `(x + y sqrt(d)) / 2`.
    pub fn y(&self) -> &BigInt {
        &self.y
    }

    /// The norm `(x^2 + |d| y^2) / 4`, a nonnegative integer.
    pub fn norm(&self) -> BigUint {
        let num = &self.x * &self.x + BigInt::from(self.d.unsigned_abs()) * &self.y * &self.y;
        (num / BigInt::from(4u32))
            .to_biguint()
            .expect("norm of a quadratic integer is nonnegative")
    }

    /// The trace `x` (sum of the element and its conjugate).
    pub fn trace(&self) -> BigInt {
        self.x.clone()
    }
}

/// Fundamental discriminants with class number at most 4, ordered by class
/// number and then by `|D|`, so the cheapest fields are probed first.
pub fn discriminant_schedule() -> &'static [i64] {
    static SCHEDULE: OnceLock<Vec<i64>> = OnceLock::new();
    SCHEDULE.get_or_init(|| {
        let mut rows = Vec::new();
        for dabs in 3..=MAX_SCHEDULE_DISCRIMINANT {
            let d = -(dabs as i64);
            if !is_fundamental_discriminant(d) {
                continue;
            }
            let h = class_number(d).expect("schedule discriminants are below the form cap");
            if h <= MAX_SCHEDULE_CLASS_NUMBER {
                rows.push((h, dabs, d));
            }
        }
        rows.sort_unstable();
        rows.into_iter().map(|(_, _, d)| d).collect()
    })
}

/// Finds `phi` with `N(phi) = n` in the order of discriminant `d`, or
/// `None` when the relevant ideal is not principal (or `d` is not a square
/// mod `n`).
///
/// The search takes a square root `z` of `d` mod `n`, fixes its parity so
/// that `z^2 ≡ d mod 4n`, and reduces the lattice spanned by `2n` and `z`
/// with the Euclidean iteration, stopping at the first remainder `b` with
/// `b^2 <= 4n`; the representation `4n = b^2 + |d| y^2`, when it exists,
/// appears there.
pub fn find_phi(n: &BigUint, d: i64) -> Result<Option<QuadraticInteger>, Error> {
    if !is_fundamental_discriminant(d) {
        return Err(Error::Domain("discriminant must be negative and fundamental"));
    }
    if !n.bit(0) || *n < BigUint::from(5u32) {
        return Err(Error::Domain("modulus must be odd and at least 5"));
    }
    if arith::jacobi_symbol(&BigInt::from(d), n)? != 1 {
        return Ok(None);
    }
    let residue = BigInt::from(d)
        .mod_floor(&BigInt::from(n.clone()))
        .to_biguint()
        .expect("mod_floor by a positive modulus is nonnegative");
    // Jacobi symbol +1 guarantees a root when n is prime; a refusal here is
    // an Euler-criterion contradiction, hence a compositeness proof.
    let root = sqrt_mod_or_composite(&residue, n)?;
    let want_odd = d.rem_euclid(2) == 1;
    let z = if root.bit(0) != want_odd { n - &root } else { root };
    let four_n = n << 2u32;
    let limit = four_n.sqrt();
    let mut a = n << 1u32;
    let mut b = z;
    while b > limit {
        let t = &a % &b;
        a = std::mem::replace(&mut b, t);
    }
    let t = &four_n - &b * &b;
    let dabs = BigUint::from(d.unsigned_abs());
    if !(&t % &dabs).is_zero() {
        return Ok(None);
    }
    let c = &t / &dabs;
    let y = c.sqrt();
    if &y * &y != c {
        return Ok(None);
    }
    let phi = QuadraticInteger::new(d, BigInt::from(b), BigInt::from(y))?;
    // The construction forces N(phi) = n; keep the check as a tripwire.
    if &phi.norm() != n {
        return Ok(None);
    }
    Ok(Some(phi))
}

/// Wraps `sqrt_mod_prime`, upgrading a missing root for a declared residue
/// into a compositeness signal.
fn sqrt_mod_or_composite(a: &BigUint, n: &BigUint) -> Result<BigUint, Error> {
    match arith::sqrt_mod_prime(a, n)? {
        Some(z) => Ok(z),
        None => Err(Error::NotPrime(
            "Euler criterion refuses a root for a Jacobi-residue: the modulus is composite",
        )),
    }
}

/// The candidate curve orders `N(zeta phi - 1)` as `zeta` runs over the
/// units of the order: `{±1}` generally, `{±1, ±i}` for `d = -4`, and the
/// six sixth roots of unity for `d = -3`.  Each order is `n + 1 - t` for a
/// unit-dependent trace `t`; duplicates are removed.
pub fn unit_twist_orders(phi: &QuadraticInteger) -> Vec<BigUint> {
    let x = phi.x.clone();
    let y3 = &phi.y * BigInt::from(3u32);
    let two = BigInt::from(2u32);
    let traces: Vec<BigInt> = match phi.d {
        -3 => {
            let u = (&x - &y3) / &two;
            let v = (&x + &y3) / &two;
            vec![x.clone(), -x, u.clone(), -u, v.clone(), -v]
        }
        -4 => {
            let u = &phi.y * &two;
            vec![x.clone(), -x, u.clone(), -u]
        }
        _ => vec![x.clone(), -x],
    };
    let n1 = BigInt::from(phi.norm()) + BigInt::one();
    let mut orders = Vec::new();
    for t in traces {
        let m = &n1 - t;
        if m <= BigInt::zero() {
            continue;
        }
        let m = m.to_biguint().expect("positive order");
        if !orders.contains(&m) {
            orders.push(m);
        }
    }
    orders
}

/// Witness data for the multiplicative `n - 1` test: `a = x^{(n-1)/s}` for
/// a random `x`, with `a^s = 1` and `a^{s/q} - 1` a unit for every prime
/// `q | s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NMinusOneEvidence {
    /// The number the evidence speaks about.
    pub n: BigUint,
    /// The fully factored divisor of `n - 1` with `s^2 > n`.
    pub s: BigUint,
    /// The cofactor `(n - 1) / s`.
    pub r: BigUint,
    /// The base satisfying the order conditions.
    pub a: BigUint,
}

fn nminus1_validate(n: &BigUint, s: &BigUint, s_primes: &[BigUint]) -> Result<BigUint, Error> {
    if !n.bit(0) || *n < BigUint::from(3u32) {
        return Err(Error::Domain("modulus must be odd and at least 3"));
    }
    if *s < BigUint::from(2u32) {
        return Err(Error::Domain("s must be at least 2"));
    }
    let nm1 = n - 1u32;
    if !(&nm1 % s).is_zero() {
        return Err(Error::Domain("s must divide n - 1"));
    }
    if &(s * s) <= n {
        return Err(Error::Domain("s must exceed the square root of n"));
    }
    if s_primes.is_empty() {
        return Err(Error::Domain("the factorization of s must not be empty"));
    }
    let mut rest = s.clone();
    for q in s_primes {
        if *q < BigUint::from(2u32) {
            return Err(Error::Domain("factors of s must be at least 2"));
        }
        if !(s % q).is_zero() {
            return Err(Error::Domain("every listed prime must divide s"));
        }
        while (&rest % q).is_zero() {
            rest /= q;
        }
    }
    if !rest.is_one() {
        return Err(Error::Domain("supplied primes do not fully factor s"));
    }
    Ok(nm1)
}

fn nminus1_conditions(
    n: &BigUint,
    s: &BigUint,
    s_primes: &[BigUint],
    a: &BigUint,
) -> Result<bool, Error> {
    let a = a % n;
    if !arith::powmod(&a, s, n)?.is_one() {
        return Ok(false);
    }
    for q in s_primes {
        let e = s / q;
        let t = arith::powmod(&a, &e, n)?;
        let shifted = (t + n - 1u32) % n;
        if shifted.is_zero() {
            return Ok(false);
        }
        if !arith::gcd(&shifted, n)?.is_one() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Checks the `n - 1` conditions for a specific base `a`: `a^s ≡ 1 mod n`
/// and `gcd(a^{s/q} - 1, n) = 1` for every listed prime `q | s`.  Requires
/// `s | n - 1`, `s^2 > n`, and a complete prime factorization of `s`; the
/// primality of the listed factors is the caller's responsibility.
pub fn nminus1_check(
    n: &BigUint,
    s: &BigUint,
    s_primes: &[BigUint],
    a: &BigUint,
) -> Result<bool, Error> {
    nminus1_validate(n, s, s_primes)?;
    nminus1_conditions(n, s, s_primes, a)
}

/// Searches for a base certifying `n` through the `n - 1` conditions, by
/// raising random elements to the `(n - 1)/s`-th power.  Returns `None`
/// when the bounded retries exhaust, which is overwhelmingly likely when
/// `n` is composite and essentially never happens for prime `n`.
pub fn nminus1_prove<R: Rng + ?Sized>(
    n: &BigUint,
    s: &BigUint,
    s_primes: &[BigUint],
    rng: &mut R,
) -> Result<Option<NMinusOneEvidence>, Error> {
    let nm1 = nminus1_validate(n, s, s_primes)?;
    let exponent = &nm1 / s;
    let one = BigUint::one();
    for _ in 0..NMINUS1_RETRIES {
        let x = rng.gen_biguint_range(&one, n);
        let a = arith::powmod(&x, &exponent, n)?;
        if nminus1_conditions(n, s, s_primes, &a)? {
            return Ok(Some(NMinusOneEvidence {
                n: n.clone(),
                s: s.clone(),
                r: &nm1 / s,
                a,
            }));
        }
    }
    Ok(None)
}

/// Candidate curves over `Z/nZ` with j-invariant `j`: the standard model
/// together with its twists.  Generic `j` yields the curve and one
/// quadratic twist; `j = 0` and `j = 1728` yield representatives of all
/// sextic and quartic twist classes, found by a deterministic sweep that
/// separates classes with a power-residue character.
pub fn curve_from_j<R: Rng + ?Sized>(
    n: &BigUint,
    j: &BigUint,
    rng: &mut R,
) -> Result<Vec<Curve>, EcError> {
    if !n.bit(0) || *n < BigUint::from(5u32) {
        return Err(EcError::Invalid(Error::Domain(
            "modulus must be odd and at least 5",
        )));
    }
    let j = j % n;
    if j.is_zero() {
        return twist_family(n, 6, |u| (BigUint::zero(), u));
    }
    if j == BigUint::from(1728u32) % n {
        return twist_family(n, 4, |u| (u, BigUint::zero()));
    }
    // k = j / (1728 - j) gives y^2 = x^3 + 3k x + 2k with invariant j.
    let denom = (BigUint::from(1728u32) % n + n - &j) % n;
    let k = &j * mod_inverse(&denom, n)? % n;
    let a = BigUint::from(3u32) * &k % n;
    let b = BigUint::from(2u32) * &k % n;
    let base = Curve::new(n.clone(), a.clone(), b.clone())?;
    let c = quadratic_nonresidue(n, rng)?;
    let c2 = &c * &c % n;
    let c3 = &c2 * &c % n;
    let twist = Curve::new(n.clone(), a * c2 % n, b * c3 % n)?;
    Ok(vec![base, twist])
}

/// Sweeps small integers, keeping one curve per `k`-th power class where
/// `k = gcd(deg, n - 1)`; the character `u -> u^{(n-1)/k}` separates the
/// classes exactly when `n` is prime.
fn twist_family(
    n: &BigUint,
    deg: u64,
    model: impl Fn(BigUint) -> (BigUint, BigUint),
) -> Result<Vec<Curve>, EcError> {
    let nm1 = n - 1u32;
    let k = num_integer::gcd(
        (&nm1 % BigUint::from(deg)).to_u64().expect("residue fits"),
        deg,
    )
    .max(1);
    let exponent = &nm1 / BigUint::from(k);
    let mut seen = HashSet::new();
    let mut curves = Vec::new();
    for u in 1..=TWIST_SWEEP {
        let u = BigUint::from(u) % n;
        if u.is_zero() {
            continue;
        }
        let g = arith::gcd(&u, n).map_err(Error::from)?;
        if !g.is_one() {
            return Err(EcError::FactorFound(crate::error::FactorSurprise::new(g)));
        }
        let signature = arith::powmod(&u, &exponent, n).map_err(Error::from)?;
        if !seen.insert(signature) {
            continue;
        }
        let (a, b) = model(u);
        curves.push(Curve::new(n.clone(), a, b)?);
        if curves.len() as u64 == k {
            break;
        }
    }
    Ok(curves)
}

/// Modular inverse of a nonzero residue, surfacing a proper gcd as a
/// factor event.
fn mod_inverse(v: &BigUint, n: &BigUint) -> Result<BigUint, EcError> {
    if v.is_zero() {
        return Err(EcError::Invalid(Error::Domain("inverse of zero")));
    }
    let e = BigInt::from(v.clone()).extended_gcd(&BigInt::from(n.clone()));
    let g = e.gcd.to_biguint().expect("gcd of nonnegative inputs");
    if g.is_one() {
        let nn = BigInt::from(n.clone());
        return Ok(e
            .x
            .mod_floor(&nn)
            .to_biguint()
            .expect("mod_floor is nonnegative"));
    }
    if g == *n {
        return Err(EcError::Invalid(Error::Domain("inverse of a multiple of n")));
    }
    Err(EcError::FactorFound(crate::error::FactorSurprise::new(g)))
}

/// Draws a residue with Jacobi symbol -1.  Exhausting the draws without
/// finding one contradicts primality (half of all residues qualify mod a
/// prime), so that exhaustion reports `NotPrime`.
fn quadratic_nonresidue<R: Rng + ?Sized>(n: &BigUint, rng: &mut R) -> Result<BigUint, EcError> {
    let two = BigUint::from(2u32);
    for _ in 0..128 {
        let c = rng.gen_biguint_range(&two, n);
        match arith::jacobi_symbol(&BigInt::from(c.clone()), n).map_err(Error::from)? {
            -1 => return Ok(c),
            0 => {
                let g = arith::gcd(&c, n).map_err(Error::from)?;
                return Err(EcError::FactorFound(crate::error::FactorSurprise::new(g)));
            }
            _ => continue,
        }
    }
    Err(EcError::Invalid(Error::NotPrime(
        "no quadratic nonresidue in many draws: the modulus behaves like a square",
    )))
}

/// Tuning knobs for the prover.
#[derive(Clone, Debug)]
pub struct EcppConfig {
    /// Trial division bound used to strip smooth parts from candidate
    /// orders and from `n - 1`.
    pub trial_bound: u64,
    /// Rounds of probable-prime screening applied to chain children.
    pub mr_rounds: u32,
    /// Values at or below this floor are certified by the trial division
    /// leaf (treated as at least 4).
    pub cert_floor: u64,
    /// Cap on chain-building attempts, counting backtracked ones.
    pub max_steps: u32,
    /// How many schedule discriminants each step may probe.
    pub discriminant_limit: usize,
}

impl Default for EcppConfig {
    fn default() -> EcppConfig {
        EcppConfig {
            trial_bound: 100_000,
            mr_rounds: 20,
            cert_floor: 1_000_000,
            max_steps: 200,
            discriminant_limit: usize::MAX,
        }
    }
}

/// Evidence that the prover stopped because the input is composite.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CompositeReason {
    /// A strong witness to compositeness.
    Witness(BigUint),
    /// A nontrivial factor surfaced by the arithmetic.
    Factor(BigUint),
    /// An internal contradiction that only a composite modulus produces.
    Arithmetic(&'static str),
}

/// Result of a single chain-extension attempt.
#[derive(Clone, Debug)]
pub enum StepOutcome {
    /// A certificate step whose child `s` still awaits proof.
    Node(Step),
    /// No discriminant in the schedule produced a usable order.
    NoProgress,
    /// The attempt disproved primality outright.
    Composite(CompositeReason),
}

/// Result of a full proving run.
#[derive(Clone, Debug)]
pub enum EcppOutcome {
    /// A verified certificate for the input.
    Proven(Certificate),
    /// The input is composite, with the evidence that surfaced.
    Composite(CompositeReason),
    /// The search budget ran out without a chain.
    Exhausted {
        /// Chain-extension attempts consumed.
        steps_tried: u32,
    },
}

enum Search {
    Found { step: Step, d: i64 },
    Composite(CompositeReason),
    NoProgress,
}

fn composite_from_error(e: Error) -> Result<CompositeReason, Error> {
    match e {
        Error::NotPrime(msg) => Ok(CompositeReason::Arithmetic(msg)),
        other => Err(other),
    }
}

fn composite_from_ec(e: EcError) -> Result<CompositeReason, Error> {
    match e {
        EcError::FactorFound(s) => Ok(CompositeReason::Factor(s.factor)),
        EcError::Invalid(e) => composite_from_error(e),
    }
}

/// Splits `m` into a `bound`-smooth part `r` and cofactor `s = m / r`.
fn strip_smooth(m: &BigUint, primes: &[u64]) -> (BigUint, BigUint) {
    let mut s = m.clone();
    for &p in primes {
        if s.is_one() {
            break;
        }
        let pb = BigUint::from(p);
        while (&s % &pb).is_zero() {
            s /= &pb;
        }
    }
    let r = m / &s;
    (r, s)
}

/// Heuristic starting precision for `class_polynomial`, grown internally
/// until the rounding stabilizes.
fn starting_precision(d: i64, h: u32) -> u32 {
    let bits = 64 - d.unsigned_abs().leading_zeros();
    h * (bits + 40)
}

/// On a candidate curve, checks `m Q = O` for a random `Q`, then anchors
/// `P = r Q != O` with `s P = O`.  `None` means the curve cannot have
/// order `m` (or no usable point appeared); errors carry factor events.
fn anchor_on_curve<R: Rng + ?Sized>(
    curve: &Curve,
    m: &BigUint,
    r: &BigUint,
    s: &BigUint,
    rng: &mut R,
) -> Result<Option<(CurvePoint, CurvePoint)>, EcError> {
    for _ in 0..POINT_TRIALS {
        let q = elliptic::random_point(curve, rng)?;
        if !elliptic::ec_mul(curve, m, &q)?.is_infinity() {
            // Lagrange: on the order-m twist every point is killed by m.
            return Ok(None);
        }
        let p = elliptic::ec_mul(curve, r, &q)?;
        if p.is_infinity() {
            continue;
        }
        if !elliptic::ec_mul(curve, s, &p)?.is_infinity() {
            return Ok(None);
        }
        return Ok(Some((q, p)));
    }
    Ok(None)
}

fn step_search<R: Rng + ?Sized>(
    n: &BigUint,
    rng: &mut R,
    config: &EcppConfig,
    blacklist: &HashSet<(i64, BigUint)>,
    poly_cache: &mut HashMap<i64, CmClass>,
    primes: &[u64],
) -> Result<Search, Error> {
    let schedule = discriminant_schedule();
    let take = config.discriminant_limit.min(schedule.len());
    for &d in &schedule[..take] {
        match arith::jacobi_symbol(&BigInt::from(d), n)? {
            1 => {}
            0 => {
                let shared = BigUint::from(d.unsigned_abs()) % n;
                if shared.is_zero() {
                    continue;
                }
                let g = arith::gcd(&shared, n)?;
                if !g.is_one() {
                    return Ok(Search::Composite(CompositeReason::Factor(g)));
                }
                continue;
            }
            _ => continue,
        }
        let phi = match find_phi(n, d) {
            Ok(Some(phi)) => phi,
            Ok(None) => continue,
            Err(e) => return Ok(Search::Composite(composite_from_error(e)?)),
        };
        let mut roots: Option<Vec<BigUint>> = None;
        for m in unit_twist_orders(&phi) {
            let (r, s) = strip_smooth(&m, primes);
            if s.is_one() || r.is_one() {
                // Nothing to descend to, or no smooth part to shed.
                continue;
            }
            if &s >= n || !cert::s_exceeds_quartic_bound(&s, n) {
                continue;
            }
            if blacklist.contains(&(d, s.clone())) {
                continue;
            }
            if fermat::miller_rabin(&s, config.mr_rounds, rng)?.verdict == Verdict::Composite {
                continue;
            }
            if roots.is_none() {
                if !poly_cache.contains_key(&d) {
                    let h = class_number(d)?;
                    let cm = class_polynomial(d, starting_precision(d, h))?;
                    poly_cache.insert(d, cm);
                }
                let cm = poly_cache.get(&d).expect("just inserted");
                roots = Some(match cm.roots_mod(n) {
                    Ok(v) => v,
                    Err(e) => return Ok(Search::Composite(composite_from_error(e)?)),
                });
            }
            let roots = roots.as_ref().expect("roots just computed");
            if roots.is_empty() {
                // For prime n a principal phi forces the polynomial to
                // split; no roots means no order for this field works.
                break;
            }
            for j in roots {
                let curves = match curve_from_j(n, j, rng) {
                    Ok(c) => c,
                    Err(e) => return Ok(Search::Composite(composite_from_ec(e)?)),
                };
                for curve in &curves {
                    match anchor_on_curve(curve, &m, &r, &s, rng) {
                        Ok(Some((q, p))) => {
                            let CurvePoint::Affine { x: qx, y: qy } = q else {
                                continue;
                            };
                            let CurvePoint::Affine { x: px, y: py } = p else {
                                continue;
                            };
                            let step = Step::Ecpp {
                                n: n.clone(),
                                a: curve.a().clone(),
                                b: curve.b().clone(),
                                qx,
                                qy,
                                px,
                                py,
                                r: r.clone(),
                                s: s.clone(),
                            };
                            return Ok(Search::Found { step, d });
                        }
                        Ok(None) => continue,
                        Err(e) => return Ok(Search::Composite(composite_from_ec(e)?)),
                    }
                }
            }
        }
    }
    Ok(Search::NoProgress)
}

/// Attempts one chain extension for a probable prime `n`: probes the
/// discriminant schedule, splits a candidate order as `r * s` with `s` a
/// probable prime above the fourth-root bound, and anchors points on the
/// matching CM curve.
pub fn ecpp_step<R: Rng + ?Sized>(
    n: &BigUint,
    rng: &mut R,
    config: &EcppConfig,
) -> Result<StepOutcome, Error> {
    if !n.bit(0) || *n < BigUint::from(5u32) {
        return Err(Error::Domain("modulus must be odd and at least 5"));
    }
    let primes = arith::small_primes(config.trial_bound);
    let mut cache = HashMap::new();
    Ok(
        match step_search(n, rng, config, &HashSet::new(), &mut cache, &primes)? {
            Search::Found { step, .. } => StepOutcome::Node(step),
            Search::Composite(reason) => StepOutcome::Composite(reason),
            Search::NoProgress => StepOutcome::NoProgress,
        },
    )
}

fn leaf_bound_for(value: &BigUint) -> u64 {
    (value.sqrt() + 1u32)
        .to_u64()
        .expect("leaf values are bounded by a u64 floor")
}

/// Proves or disproves the primality of `n`, producing a self-contained
/// certificate on success.  The downrun prefers a multiplicative step when
/// `n - 1` sheds its smooth part onto a large probable-prime cofactor, and
/// otherwise extends the chain with a CM curve step; dead ends backtrack
/// with a per-level blacklist.  The assembled certificate is re-verified
/// before being returned.
pub fn ecpp_prove<R: Rng + ?Sized>(
    n: &BigUint,
    rng: &mut R,
    config: &EcppConfig,
) -> Result<EcppOutcome, Error> {
    if *n < BigUint::from(2u32) {
        return Err(Error::Domain("there is nothing to prove below 2"));
    }
    if !n.bit(0) {
        if *n == BigUint::from(2u32) {
            let cert = Certificate::new(n.clone(), Vec::new(), 2)?;
            return Ok(EcppOutcome::Proven(cert));
        }
        return Ok(EcppOutcome::Composite(CompositeReason::Factor(
            BigUint::from(2u32),
        )));
    }
    let screen = fermat::miller_rabin(n, config.mr_rounds, rng)?;
    if screen.verdict == Verdict::Composite {
        return Ok(EcppOutcome::Composite(match screen.witness {
            Some(w) => CompositeReason::Witness(w),
            None => CompositeReason::Arithmetic("trivially composite"),
        }));
    }
    let primes = arith::small_primes(config.trial_bound);
    let floor = BigUint::from(config.cert_floor.max(4));
    let mut steps: Vec<Step> = Vec::new();
    // One (level, discriminant key, child) record per step, for backtracking.
    let mut trail: Vec<(BigUint, i64, BigUint)> = Vec::new();
    let mut blacklist: HashMap<BigUint, HashSet<(i64, BigUint)>> = HashMap::new();
    let mut poly_cache: HashMap<i64, CmClass> = HashMap::new();
    let mut current = n.clone();
    let mut tried: u32 = 0;
    let empty = HashSet::new();
    loop {
        if current <= floor {
            let cert = Certificate::new(n.clone(), steps.clone(), leaf_bound_for(&current))?;
            match cert::verify(&cert) {
                Ok(()) => return Ok(EcppOutcome::Proven(cert)),
                Err(cert::VerifyFailure::LeafComposite { divisor }) => {
                    // A probable-prime child was actually composite; retreat.
                    if let Some((parent, d, s)) = trail.pop() {
                        steps.pop();
                        blacklist.entry(parent.clone()).or_default().insert((d, s));
                        current = parent;
                        continue;
                    }
                    return Ok(EcppOutcome::Composite(CompositeReason::Factor(
                        BigUint::from(divisor),
                    )));
                }
                Err(_) => {
                    return Err(Error::NotPrime(
                        "assembled certificate failed verification",
                    ))
                }
            }
        }
        if tried >= config.max_steps {
            return Ok(EcppOutcome::Exhausted { steps_tried: tried });
        }
        tried += 1;
        let black = blacklist.get(&current).unwrap_or(&empty);
        // Multiplicative shortcut: n - 1 = r * s with s a big prime cofactor.
        let nm1 = &current - 1u32;
        let (_, cofactor) = strip_smooth(&nm1, &primes);
        let mut advanced = false;
        if !cofactor.is_one()
            && cofactor < current
            && &cofactor * &cofactor > current
            && !black.contains(&(NMINUS1_KEY, cofactor.clone()))
            && fermat::miller_rabin(&cofactor, config.mr_rounds, rng)?.verdict
                != Verdict::Composite
        {
            if let Some(evidence) =
                nminus1_prove(&current, &cofactor, &[cofactor.clone()], rng)?
            {
                steps.push(Step::NMinusOne {
                    n: current.clone(),
                    a: evidence.a,
                    r: &nm1 / &cofactor,
                    s: cofactor.clone(),
                });
                trail.push((current.clone(), NMINUS1_KEY, cofactor.clone()));
                current = cofactor;
                advanced = true;
            }
        }
        if advanced {
            continue;
        }
        match step_search(&current, rng, config, black, &mut poly_cache, &primes)? {
            Search::Found { step, d } => {
                let child = step.s().clone();
                trail.push((current.clone(), d, child.clone()));
                steps.push(step);
                current = child;
            }
            Search::Composite(reason) => {
                if let Some((parent, d, s)) = trail.pop() {
                    // The level value is composite: forbid the choice that
                    // led here and resume at the parent.
                    steps.pop();
                    blacklist.entry(parent.clone()).or_default().insert((d, s));
                    current = parent;
                } else {
                    return Ok(EcppOutcome::Composite(reason));
                }
            }
            Search::NoProgress => {
                if let Some((parent, d, s)) = trail.pop() {
                    steps.pop();
                    blacklist.entry(parent.clone()).or_default().insert((d, s));
                    current = parent;
                } else {
                    return Ok(EcppOutcome::Exhausted { steps_tried: tried });
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn quadratic_integer_norm_and_parity() {
        let phi = QuadraticInteger::new(-4, BigInt::from(6), BigInt::from(2)).unwrap();
        assert_eq!(phi.norm(), big(13), "norm of (6 + 2 sqrt(-4))/2 = 3 + 2i");
        assert_eq!(phi.trace(), BigInt::from(6), "trace is the x coordinate");
        let unit = QuadraticInteger::new(-3, BigInt::from(1), BigInt::from(1)).unwrap();
        assert_eq!(unit.norm(), big(1), "(1 + sqrt(-3))/2 is a unit");
        assert!(
            QuadraticInteger::new(-4, BigInt::from(1), BigInt::from(0)).is_err(),
            "odd x with even discriminant violates the parity invariant"
        );
        assert!(
            QuadraticInteger::new(-5, BigInt::from(1), BigInt::from(1)).is_err(),
            "-5 = 3 mod 4 is not a discriminant"
        );
    }

    #[test]
    fn discriminant_schedule_orders_by_class_number() {
        let schedule = discriminant_schedule();
        assert_eq!(
            &schedule[..9],
            &[-3, -4, -7, -8, -11, -19, -43, -67, -163],
            "class number one block comes first, by size"
        );
        assert_eq!(schedule[9], -15, "the first class number two field is -15");
        assert_eq!(schedule[27], -23, "the first class number three field is -23");
        assert_eq!(schedule[43], -39, "the first class number four field is -39");
        let mut last_h = 0;
        for &d in schedule {
            assert!(is_fundamental_discriminant(d), "schedule entries are fundamental");
            let h = class_number(d).unwrap();
            assert!(h >= last_h, "class numbers never decrease along the schedule");
            assert!(h <= 4, "schedule caps the class number at 4");
            last_h = h;
        }
        assert!(schedule.len() >= 90, "the h <= 4 table is substantial");
    }

    #[test]
    fn find_phi_recovers_gaussian_factor_of_13() {
        let phi = find_phi(&big(13), -4).unwrap().expect("13 = 3^2 + 2^2 splits");
        assert_eq!(phi.norm(), big(13), "the norm must be 13");
        assert_eq!(phi.x().magnitude(), &big(6), "x coordinate of 2 phi");
        assert_eq!(phi.y().magnitude(), &big(2), "y coordinate of 2 phi");
        let orders = unit_twist_orders(&phi);
        assert!(orders.contains(&big(8)), "N(phi - 1) = 8 appears among the orders");
    }

    #[test]
    fn find_phi_rejects_inert_prime() {
        assert!(
            find_phi(&big(11), -4).unwrap().is_none(),
            "11 = 3 mod 4 is inert in the Gaussian integers"
        );
    }

    #[test]
    fn find_phi_handles_odd_discriminants() {
        let phi = find_phi(&big(23), -7).unwrap().expect("4*23 = 64 + 7*4");
        assert_eq!(phi.norm(), big(23), "norm must be 23");
        let orders = unit_twist_orders(&phi);
        assert_eq!(orders.len(), 2, "generic fields have two unit twists");
        assert!(
            orders.contains(&big(16)) && orders.contains(&big(32)),
            "traces +-8 give orders 16 and 32, got {orders:?}"
        );
    }

    #[test]
    fn find_phi_distinguishes_principal_from_nonprincipal() {
        // Both 17 and 19 have (-15/p) = +1, but only 19 is a norm:
        // 4*19 = 16 + 15*4, while 17 is represented by the other class.
        assert!(
            find_phi(&big(17), -15).unwrap().is_none(),
            "17 lies in the nonprincipal class of discriminant -15"
        );
        let phi = find_phi(&big(19), -15).unwrap().expect("19 is a norm");
        assert_eq!(phi.norm(), big(19), "norm must be 19");
    }

    #[test]
    fn find_phi_rejects_bad_domains() {
        assert!(find_phi(&big(13), -12).is_err(), "-12 is not fundamental");
        assert!(find_phi(&big(13), -5).is_err(), "-5 is not a discriminant");
        assert!(find_phi(&big(12), -4).is_err(), "even modulus is rejected");
    }

    #[test]
    fn unit_twist_orders_match_brute_force_twist_counts_mod_13() {
        let phi = find_phi(&big(13), -4).unwrap().unwrap();
        let mut predicted: Vec<BigUint> = unit_twist_orders(&phi);
        predicted.sort();
        // j = 1728 curves mod 13: y^2 = x^3 + u x over the quartic classes.
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let curves = curve_from_j(&big(13), &(BigUint::from(1728u32) % big(13)), &mut rng).unwrap();
        assert_eq!(curves.len(), 4, "13 = 1 mod 4 has four quartic twist classes");
        let mut counted: Vec<BigUint> = curves
            .iter()
            .map(|c| big(elliptic::enumerate_points(c).unwrap().len() as u64))
            .collect();
        counted.sort();
        assert_eq!(
            predicted, counted,
            "unit twist orders must equal the brute force twist orders"
        );
    }

    #[test]
    fn h1_discriminant_order_matches_a_counted_curve_mod_31() {
        let phi = find_phi(&big(31), -11).unwrap().expect("4*31 = 25 + 11*9");
        let orders = unit_twist_orders(&phi);
        let cm = class_polynomial(-11, 64).unwrap();
        let roots = cm.roots_mod(&big(31)).unwrap();
        assert_eq!(roots.len(), 1, "H_{{-11}} is linear, one root mod 31");
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let curves = curve_from_j(&big(31), &roots[0], &mut rng).unwrap();
        let counted: Vec<BigUint> = curves
            .iter()
            .map(|c| big(elliptic::enumerate_points(c).unwrap().len() as u64))
            .collect();
        for m in &counted {
            assert!(
                orders.contains(m),
                "every twist order {m} must be predicted by a unit twist, predictions {orders:?}"
            );
        }
    }

    #[test]
    fn curve_from_j_reproduces_the_invariant() {
        let n = big(101);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let j = big(50);
        for curve in curve_from_j(&n, &j, &mut rng).unwrap() {
            // j(E) = 1728 * 4a^3 / (4a^3 + 27b^2).
            let a3 = BigUint::from(4u32) * arith::powmod(curve.a(), &big(3), &n).unwrap() % &n;
            let b2 = BigUint::from(27u32) * arith::powmod(curve.b(), &big(2), &n).unwrap() % &n;
            let denom = (&a3 + &b2) % &n;
            let inv = arith::powmod(&denom, &(&n - 2u32), &n).unwrap();
            let got = BigUint::from(1728u32) * a3 % &n * inv % &n;
            assert_eq!(got, j, "constructed curve must carry the requested invariant");
        }
    }

    #[test]
    fn curve_from_j_special_invariants_cover_all_twist_classes() {
        let n = big(13);
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let quartic = curve_from_j(&n, &(BigUint::from(1728u32) % &n), &mut rng).unwrap();
        assert_eq!(quartic.len(), 4, "j = 1728 mod a 1 mod 4 prime has 4 twists");
        let sextic = curve_from_j(&big(7), &big(0), &mut rng).unwrap();
        assert_eq!(sextic.len(), 6, "j = 0 mod a 1 mod 6 prime has 6 twists");
        let pair = curve_from_j(&big(11), &big(0), &mut rng).unwrap();
        assert_eq!(pair.len(), 2, "11 = 5 mod 6 admits only two sextic classes");
    }

    #[test]
    fn nminus1_check_accepts_the_classic_example() {
        assert!(
            nminus1_check(&big(13), &big(12), &[big(2), big(3)], &big(2)).unwrap(),
            "base 2 certifies 13 with s = 12 fully factored"
        );
        assert!(
            !nminus1_check(&big(13), &big(12), &[big(2), big(3)], &big(1)).unwrap(),
            "base 1 never certifies"
        );
    }

    #[test]
    fn nminus1_fails_for_every_base_mod_15() {
        for a in 0..15u64 {
            assert!(
                !nminus1_check(&big(15), &big(14), &[big(2), big(7)], &big(a)).unwrap(),
                "no base may certify the composite 15, yet a = {a} did"
            );
        }
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        assert!(
            nminus1_prove(&big(15), &big(14), &[big(2), big(7)], &mut rng)
                .unwrap()
                .is_none(),
            "retries must exhaust for the composite 15"
        );
    }

    #[test]
    fn nminus1_prove_finds_a_witness_for_a_prime() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let evidence = nminus1_prove(&big(1009), &big(63), &[big(3), big(7)], &mut rng)
            .unwrap()
            .expect("1009 is prime and 63 | 1008 with 63^2 > 1009");
        assert_eq!(evidence.r, big(16), "cofactor r = 1008 / 63");
        assert!(
            nminus1_check(&big(1009), &big(63), &[big(3), big(7)], &evidence.a).unwrap(),
            "the produced base must satisfy the conditions it claims"
        );
    }

    #[test]
    fn nminus1_validates_its_domain() {
        assert!(
            nminus1_check(&big(13), &big(5), &[big(5)], &big(2)).is_err(),
            "5 does not divide 12"
        );
        assert!(
            nminus1_check(&big(13), &big(12), &[big(2)], &big(2)).is_err(),
            "the factorization 2^k never reaches 12"
        );
        assert!(
            nminus1_check(&big(101), &big(4), &[big(2)], &big(2)).is_err(),
            "s = 4 is below sqrt(101)"
        );
    }

    #[test]
    fn ecpp_step_emits_a_verifiable_node() {
        let n = big(1_000_003);
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let config = EcppConfig::default();
        let StepOutcome::Node(step) = ecpp_step(&n, &mut rng, &config).unwrap() else {
            panic!("a step must exist for the prime 1000003");
        };
        assert_eq!(step.n(), &n, "the node speaks about the input");
        let child = step.s().clone();
        assert!(child < n, "the chain must descend");
        let cert = Certificate::new(n, vec![step], leaf_bound_for(&child)).unwrap();
        cert::verify(&cert).expect("single-step certificate with a trial-division leaf");
    }

    #[test]
    fn ecpp_prove_certifies_small_and_medium_primes() {
        let config = EcppConfig::default();
        for p in [2u64, 3, 5, 97, 65537] {
            let mut rng = ChaCha20Rng::seed_from_u64(p);
            let EcppOutcome::Proven(cert) = ecpp_prove(&big(p), &mut rng, &config).unwrap() else {
                panic!("{p} is prime and below or near the floor");
            };
            cert::verify(&cert).expect("certificates are verified before being returned");
        }
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        let n = big(1_000_000_007);
        let EcppOutcome::Proven(cert) = ecpp_prove(&n, &mut rng, &config).unwrap() else {
            panic!("1000000007 is prime");
        };
        assert_eq!(cert.subject(), &n, "certificate subject is the input");
        assert!(
            cert.final_value() <= &big(1_000_000),
            "the chain must descend below the certification floor"
        );
        let text = cert.to_text();
        let reparsed = Certificate::parse(&text).expect("canonical text round trips");
        cert::verify(&reparsed).expect("reparsed certificate still verifies");
    }

    #[test]
    fn ecpp_prove_certifies_a_twelve_digit_prime() {
        let n = big(1_000_000_000_039);
        let mut rng = ChaCha20Rng::seed_from_u64(40);
        let config = EcppConfig::default();
        let EcppOutcome::Proven(cert) = ecpp_prove(&n, &mut rng, &config).unwrap() else {
            panic!("10^12 + 39 is prime");
        };
        assert!(
            !cert.steps().is_empty(),
            "a 12-digit prime sits well above the floor and needs chain steps"
        );
        cert::verify(&cert).expect("the returned certificate verifies");
    }

    #[test]
    fn ecpp_prove_rejects_composites() {
        let config = EcppConfig::default();
        let mut rng = ChaCha20Rng::seed_from_u64(31);
        match ecpp_prove(&big(561), &mut rng, &config).unwrap() {
            EcppOutcome::Composite(_) => {}
            other => panic!("the Carmichael number 561 must be rejected, got {other:?}"),
        }
        match ecpp_prove(&big(3_215_031_751), &mut rng, &config).unwrap() {
            EcppOutcome::Composite(_) => {}
            other => panic!("3215031751 is composite, got {other:?}"),
        }
        match ecpp_prove(&big(1_000_000_000_041), &mut rng, &config).unwrap() {
            EcppOutcome::Composite(_) => {}
            other => panic!("10^12 + 41 is divisible by 3, got {other:?}"),
        }
        match ecpp_prove(&big(100), &mut rng, &config).unwrap() {
            EcppOutcome::Composite(CompositeReason::Factor(f)) => {
                assert_eq!(f, big(2), "even inputs surface the factor 2")
            }
            other => panic!("100 is even, got {other:?}"),
        }
        assert!(ecpp_prove(&big(1), &mut rng, &config).is_err(), "1 is out of domain");
    }
}
