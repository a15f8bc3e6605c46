//! Primality certificates: a canonical text format and an independent
//! verifier.
//!
//! A certificate is a descending chain of steps.  Each step reduces the
//! primality of its `n` to the primality of a strictly smaller `s`: an
//! `ecpp` step exhibits a curve and points satisfying the elliptic
//! criterion, an `nminus1` step exhibits a unit of order divisible by a
//! prime `s > √n` dividing `n − 1`.  The chain terminates in a leaf value
//! small enough to settle by trial division.  The verifier re-derives
//! every side condition from scratch with exact integer arithmetic; it
//! trusts nothing but the arithmetic itself.

use crate::arith;
use crate::elliptic::{ec_mul, is_nonzero_mod_every_prime, Curve, CurvePoint, EcError};
use crate::error::Error;
use num_bigint::BigUint;
use num_traits::One;

/// Upper bound on the leaf trial-division bound.
const LEAF_BOUND_CAP: u64 = 1 << 32;

/// Parser guard: longest accepted decimal literal.
const MAX_DIGITS: usize = 5_000;

/// Parser guard: most steps in one certificate.
const MAX_STEPS: usize = 4_096;

/// One link of a certificate chain; proves its `n` prime given that its
/// `s` is prime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    /// Elliptic criterion: on `y² = x³ + ax + b mod n`, the point `P = rQ`
    /// is nonzero, `sP = O`, and `s` exceeds `(n^{1/4} + 1)²`.
    Ecpp {
        /// The number this step proves prime.
        n: BigUint,
        /// Curve coefficient `a`.
        a: BigUint,
        /// Curve coefficient `b`.
        b: BigUint,
        /// Base point x.
        qx: BigUint,
        /// Base point y.
        qy: BigUint,
        /// Derived point x, `P = rQ`.
        px: BigUint,
        /// Derived point y.
        py: BigUint,
        /// Cofactor with `r·s` equal to the curve order.
        r: BigUint,
        /// The prime the chain descends to.
        s: BigUint,
    },
    /// Pocklington criterion: `n − 1 = r·s` with prime `s > √n` and a
    /// witness `a` with `a^s = 1` and `gcd(a − 1, n) = 1`.
    NMinusOne {
        /// The number this step proves prime.
        n: BigUint,
        /// Witness element.
        a: BigUint,
        /// Cofactor, `r·s = n − 1`.
        r: BigUint,
        /// The prime the chain descends to.
        s: BigUint,
    },
}

impl Step {
    /// The number this step proves.
    pub fn n(&self) -> &BigUint {
        match self {
            Step::Ecpp { n, .. } | Step::NMinusOne { n, .. } => n,
        }
    }

    /// The smaller prime this step reduces to.
    pub fn s(&self) -> &BigUint {
        match self {
            Step::Ecpp { s, .. } | Step::NMinusOne { s, .. } => s,
        }
    }
}

/// A complete certificate: subject, chain, and the leaf bound that caps
/// the final trial division.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    subject: BigUint,
    steps: Vec<Step>,
    leaf_bound: u64,
}

/// A named reason the verifier rejected a certificate. `step` indices are
/// zero-based positions in the chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VerifyFailure {
    /// The subject is 0 or 1.
    SubjectTrivial,
    /// The first step does not prove the subject.
    SubjectMismatch,
    /// A step's `n` is not the previous step's `s`.
    ChainBreak { step: usize },
    /// A step's `s` does not decrease the chain.
    DescentViolated { step: usize },
    /// Malformed step parameters (range, parity, or degeneracy).
    BadParameters { step: usize, what: &'static str },
    /// A stated point does not satisfy the curve equation.
    PointNotOnCurve { step: usize },
    /// Curve arithmetic met a zero divisor: `n` has this proper factor.
    FactorRevealed { step: usize, factor: BigUint },
    /// `P` differs from `rQ`.
    WrongMultiple { step: usize },
    /// `P` vanishes, so the elliptic criterion says nothing.
    PointVanishes { step: usize },
    /// `sP` is not the identity.
    NotKilled { step: usize },
    /// The curve order `r·s` leaves the Hasse window around `n + 1`.
    HasseViolated { step: usize },
    /// `s` fails its lower bound (quartic for ecpp, square for nminus1).
    SBoundViolated { step: usize },
    /// `r·s` does not equal `n − 1` in an nminus1 step.
    FactorizationMismatch { step: usize },
    /// `a^s` is not 1 in an nminus1 step.
    ExponentNotOne { step: usize },
    /// `gcd(a − 1, n)` is not 1 in an nminus1 step.
    UnitConditionFailed { step: usize },
    /// The leaf bound exceeds its cap or cannot cover the final value.
    LeafTooLarge,
    /// Trial division found a divisor of the final value.
    LeafComposite { divisor: u64 },
}

impl std::fmt::Display for VerifyFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VerifyFailure::SubjectTrivial => write!(f, "subject is below 2"),
            VerifyFailure::SubjectMismatch => write!(f, "first step does not prove the subject"),
            VerifyFailure::ChainBreak { step } => write!(f, "step {step}: n is not the previous s"),
            VerifyFailure::DescentViolated { step } => write!(f, "step {step}: s does not decrease"),
            VerifyFailure::BadParameters { step, what } => write!(f, "step {step}: {what}"),
            VerifyFailure::PointNotOnCurve { step } => write!(f, "step {step}: point off curve"),
            VerifyFailure::FactorRevealed { step, factor } => {
                write!(f, "step {step}: arithmetic revealed factor {factor}")
            }
            VerifyFailure::WrongMultiple { step } => write!(f, "step {step}: P is not rQ"),
            VerifyFailure::PointVanishes { step } => write!(f, "step {step}: P is the identity"),
            VerifyFailure::NotKilled { step } => write!(f, "step {step}: sP is not the identity"),
            VerifyFailure::HasseViolated { step } => write!(f, "step {step}: order outside Hasse window"),
            VerifyFailure::SBoundViolated { step } => write!(f, "step {step}: s below its bound"),
            VerifyFailure::FactorizationMismatch { step } => {
                write!(f, "step {step}: r*s is not n-1")
            }
            VerifyFailure::ExponentNotOne { step } => write!(f, "step {step}: a^s is not 1"),
            VerifyFailure::UnitConditionFailed { step } => {
                write!(f, "step {step}: gcd(a-1, n) is not 1")
            }
            VerifyFailure::LeafTooLarge => write!(f, "leaf bound cannot cover the final value"),
            VerifyFailure::LeafComposite { divisor } => {
                write!(f, "final value has divisor {divisor}")
            }
        }
    }
}

impl std::error::Error for VerifyFailure {}

impl Certificate {
    /// Assembles a certificate; structure only, no number theory.
    pub fn new(subject: BigUint, steps: Vec<Step>, leaf_bound: u64) -> Result<Certificate, Error> {
        if steps.len() > MAX_STEPS {
            return Err(Error::Capacity("certificate step count exceeds the cap"));
        }
        Ok(Certificate { subject, steps, leaf_bound })
    }

    /// The number the certificate claims prime.
    pub fn subject(&self) -> &BigUint {
        &self.subject
    }

    /// The chain, outermost first.
    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// The trial-division bound for the final value.
    pub fn leaf_bound(&self) -> u64 {
        self.leaf_bound
    }

    /// The value the leaf must certify: the last step's `s`, or the
    /// subject itself for a chain-free certificate.
    pub fn final_value(&self) -> &BigUint {
        self.steps.last().map(Step::s).unwrap_or(&self.subject)
    }

    /// Canonical text encoding.
    pub fn to_text(&self) -> String {
        let mut out = format!("PRIMECERT v1 subject={}\n", self.subject);
        for step in &self.steps {
            match step {
                Step::Ecpp { n, a, b, qx, qy, px, py, r, s } => {
                    out.push_str(&format!(
                        "STEP method=ecpp n={n} a={a} b={b} qx={qx} qy={qy} px={px} py={py} r={r} s={s}\n"
                    ));
                }
                Step::NMinusOne { n, a, r, s } => {
                    out.push_str(&format!("STEP method=nminus1 n={n} a={a} r={r} s={s}\n"));
                }
            }
        }
        out.push_str(&format!("LEAF bound={}\n", self.leaf_bound));
        out
    }

    /// Strict parse of the canonical encoding: fixed line order, fixed key
    /// order, decimal values only, exactly one header and one leaf.
    pub fn parse(text: &str) -> Result<Certificate, Error> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(Error::Domain("empty certificate"))?;
        let subject = parse_fields(header, "PRIMECERT", &["v1", "subject"])?
            .pop()
            .expect("one captured field");
        let subject = parse_decimal(&subject)?;
        let mut steps = Vec::new();
        let mut leaf_bound: Option<u64> = None;
        for line in lines {
            if leaf_bound.is_some() {
                return Err(Error::Domain("content after the LEAF line"));
            }
            if let Some(rest) = line.strip_prefix("STEP method=ecpp ") {
                let vals = parse_fields(
                    rest,
                    "",
                    &["n", "a", "b", "qx", "qy", "px", "py", "r", "s"],
                )?;
                let mut nums = Vec::with_capacity(vals.len());
                for v in vals {
                    nums.push(parse_decimal(&v)?);
                }
                let mut it = nums.into_iter();
                steps.push(Step::Ecpp {
                    n: it.next().expect("field count checked"),
                    a: it.next().expect("field count checked"),
                    b: it.next().expect("field count checked"),
                    qx: it.next().expect("field count checked"),
                    qy: it.next().expect("field count checked"),
                    px: it.next().expect("field count checked"),
                    py: it.next().expect("field count checked"),
                    r: it.next().expect("field count checked"),
                    s: it.next().expect("field count checked"),
                });
            } else if let Some(rest) = line.strip_prefix("STEP method=nminus1 ") {
                let vals = parse_fields(rest, "", &["n", "a", "r", "s"])?;
                let mut nums = Vec::with_capacity(vals.len());
                for v in vals {
                    nums.push(parse_decimal(&v)?);
                }
                let mut it = nums.into_iter();
                steps.push(Step::NMinusOne {
                    n: it.next().expect("field count checked"),
                    a: it.next().expect("field count checked"),
                    r: it.next().expect("field count checked"),
                    s: it.next().expect("field count checked"),
                });
            } else if let Some(rest) = line.strip_prefix("LEAF bound=") {
                let bound = parse_decimal(rest)?;
                let bound_u64 = bound
                    .to_u64_digits()
                    .first()
                    .copied()
                    .filter(|_| bound.bits() <= 64)
                    .unwrap_or(if bound.bits() == 0 { 0 } else { u64::MAX });
                leaf_bound = Some(bound_u64);
            } else {
                return Err(Error::Domain("unrecognized certificate line"));
            }
            if steps.len() > MAX_STEPS {
                return Err(Error::Capacity("certificate step count exceeds the cap"));
            }
        }
        let leaf_bound = leaf_bound.ok_or(Error::Domain("certificate is missing its LEAF line"))?;
        Ok(Certificate { subject, steps, leaf_bound })
    }
}

/// Splits `line` into space-separated `key=value` tokens after an optional
/// literal tag, enforcing the exact key order; returns the values.  Keys
/// without `=` (like the literal `v1`) are matched as bare words.
fn parse_fields(line: &str, tag: &str, keys: &[&str]) -> Result<Vec<String>, Error> {
    let mut tokens = line.split(' ');
    if !tag.is_empty() {
        if tokens.next() != Some(tag) {
            return Err(Error::Domain("certificate line has a bad tag"));
        }
    }
    let mut values = Vec::new();
    for key in keys {
        let tok = tokens.next().ok_or(Error::Domain("certificate line is truncated"))?;
        match tok.split_once('=') {
            Some((k, v)) if k == *key => values.push(v.to_string()),
            None if tok == *key => {}
            _ => return Err(Error::Domain("certificate line has keys out of order")),
        }
    }
    if tokens.next().is_some() {
        return Err(Error::Domain("certificate line has trailing tokens"));
    }
    Ok(values)
}

/// Parses a plain decimal literal with a length guard.
fn parse_decimal(text: &str) -> Result<BigUint, Error> {
    if text.is_empty() || text.len() > MAX_DIGITS {
        return Err(Error::Domain("certificate number has a bad length"));
    }
    if !text.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::Domain("certificate number has non-decimal characters"));
    }
    BigUint::parse_bytes(text.as_bytes(), 10).ok_or(Error::Domain("certificate number failed to parse"))
}

/// Exact integer test for `s > (n^{1/4} + 1)²`:
/// `(s−1)² > n` and `((s−1)² + n)² > 4(s+1)²·n`.
pub fn s_exceeds_quartic_bound(s: &BigUint, n: &BigUint) -> bool {
    if s < &BigUint::from(2u32) {
        return false;
    }
    let sm1 = s - 1u32;
    let sq = &sm1 * &sm1;
    if sq <= *n {
        return false;
    }
    let lhs = &sq + n;
    let sp1 = s + 1u32;
    (&lhs * &lhs) > BigUint::from(4u32) * &sp1 * &sp1 * n
}

/// Exact integer test for the Hasse window `|m − (n+1)| ≤ 2√n`.
fn order_in_hasse_window(m: &BigUint, n: &BigUint) -> bool {
    let center = n + 1u32;
    let diff = if *m >= center { m - &center } else { &center - m };
    &diff * &diff <= n << 2
}

/// Verifies a certificate from first principles.
pub fn verify(cert: &Certificate) -> Result<(), VerifyFailure> {
    if cert.subject < BigUint::from(2u32) {
        return Err(VerifyFailure::SubjectTrivial);
    }
    let mut expected = cert.subject.clone();
    for (index, step) in cert.steps.iter().enumerate() {
        if *step.n() != expected {
            return Err(if index == 0 {
                VerifyFailure::SubjectMismatch
            } else {
                VerifyFailure::ChainBreak { step: index }
            });
        }
        match step {
            Step::Ecpp { n, a, b, qx, qy, px, py, r, s } => {
                verify_ecpp_step(index, n, a, b, qx, qy, px, py, r, s)?;
            }
            Step::NMinusOne { n, a, r, s } => {
                verify_nminus1_step(index, n, a, r, s)?;
            }
        }
        if step.s() >= step.n() {
            return Err(VerifyFailure::DescentViolated { step: index });
        }
        expected = step.s().clone();
    }
    verify_leaf(&expected, cert.leaf_bound)
}

#[allow(clippy::too_many_arguments)]
fn verify_ecpp_step(
    index: usize,
    n: &BigUint,
    a: &BigUint,
    b: &BigUint,
    qx: &BigUint,
    qy: &BigUint,
    px: &BigUint,
    py: &BigUint,
    r: &BigUint,
    s: &BigUint,
) -> Result<(), VerifyFailure> {
    let bad = |what| VerifyFailure::BadParameters { step: index, what };
    if n <= &BigUint::from(3u32) || n.bit(0) == false {
        return Err(bad("modulus must be odd and exceed 3"));
    }
    for coord in [a, b, qx, qy, px, py] {
        if coord >= n {
            return Err(bad("parameters must be reduced mod n"));
        }
    }
    if r < &BigUint::one() || s < &BigUint::from(2u32) {
        return Err(bad("r must be positive and s at least 2"));
    }
    let curve = match Curve::new(n.clone(), a.clone(), b.clone()) {
        Ok(c) => c,
        Err(EcError::FactorFound(f)) => {
            return Err(VerifyFailure::FactorRevealed { step: index, factor: f.factor })
        }
        Err(EcError::Invalid(_)) => return Err(bad("curve is singular mod n")),
    };
    let q_point = CurvePoint::Affine { x: qx.clone(), y: qy.clone() };
    let p_point = CurvePoint::Affine { x: px.clone(), y: py.clone() };
    if !curve.contains(&q_point) || !curve.contains(&p_point) {
        return Err(VerifyFailure::PointNotOnCurve { step: index });
    }
    if !s_exceeds_quartic_bound(s, n) {
        return Err(VerifyFailure::SBoundViolated { step: index });
    }
    let m = r * s;
    if !order_in_hasse_window(&m, n) {
        return Err(VerifyFailure::HasseViolated { step: index });
    }
    let lift = |e: Result<CurvePoint, EcError>| match e {
        Ok(p) => Ok(p),
        Err(EcError::FactorFound(f)) => {
            Err(VerifyFailure::FactorRevealed { step: index, factor: f.factor })
        }
        Err(EcError::Invalid(_)) => Err(bad("curve arithmetic rejected the parameters")),
    };
    let rq = lift(ec_mul(&curve, r, &q_point))?;
    if rq != p_point {
        return Err(VerifyFailure::WrongMultiple { step: index });
    }
    if !is_nonzero_mod_every_prime(&curve, &p_point) {
        return Err(VerifyFailure::PointVanishes { step: index });
    }
    let sp = lift(ec_mul(&curve, s, &p_point))?;
    if !sp.is_infinity() {
        return Err(VerifyFailure::NotKilled { step: index });
    }
    Ok(())
}

fn verify_nminus1_step(
    index: usize,
    n: &BigUint,
    a: &BigUint,
    r: &BigUint,
    s: &BigUint,
) -> Result<(), VerifyFailure> {
    let bad = |what| VerifyFailure::BadParameters { step: index, what };
    if n <= &BigUint::from(3u32) || n.bit(0) == false {
        return Err(bad("modulus must be odd and exceed 3"));
    }
    if a <= &BigUint::one() || a >= n {
        return Err(bad("witness must satisfy 1 < a < n"));
    }
    if r * s != n - 1u32 {
        return Err(VerifyFailure::FactorizationMismatch { step: index });
    }
    if s * s <= *n {
        return Err(VerifyFailure::SBoundViolated { step: index });
    }
    if a.modpow(s, n) != BigUint::one() {
        return Err(VerifyFailure::ExponentNotOne { step: index });
    }
    let am1 = a - 1u32;
    match arith::gcd(&am1, n) {
        Ok(g) if g.is_one() => Ok(()),
        _ => Err(VerifyFailure::UnitConditionFailed { step: index }),
    }
}

fn verify_leaf(value: &BigUint, bound: u64) -> Result<(), VerifyFailure> {
    if *value < BigUint::from(2u32) {
        return Err(VerifyFailure::LeafTooLarge);
    }
    if bound > LEAF_BOUND_CAP {
        return Err(VerifyFailure::LeafTooLarge);
    }
    // bound² must reach the value so the scan below is complete.
    let bound_big = BigUint::from(bound);
    if &bound_big * &bound_big < *value {
        return Err(VerifyFailure::LeafTooLarge);
    }
    let v = value.to_u64_digits();
    let v: u128 = match v.len() {
        0 => 0,
        1 => v[0] as u128,
        2 => (v[1] as u128) << 64 | v[0] as u128,
        _ => unreachable!("value at most bound squared fits in 128 bits"),
    };
    let mut d: u64 = 2;
    while (d as u128) * (d as u128) <= v {
        if v % (d as u128) == 0 {
            return Err(VerifyFailure::LeafComposite { divisor: d });
        }
        d += 1;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::enumerate_points;

    fn leaf_only(subject: u64, bound: u64) -> Certificate {
        Certificate::new(BigUint::from(subject), Vec::new(), bound).unwrap()
    }

    /// n = 23 descends to s = 11 via a = 2: 2^11 = 2048 = 89*23 + 1.
    fn pocklington_23() -> Certificate {
        let step = Step::NMinusOne {
            n: BigUint::from(23u32),
            a: BigUint::from(2u32),
            r: BigUint::from(2u32),
            s: BigUint::from(11u32),
        };
        Certificate::new(BigUint::from(23u32), vec![step], 4).unwrap()
    }

    /// Searches mod 1009 for a curve of order 1006 = 2 * 503 and builds a
    /// genuine elliptic step from enumerated points.
    fn elliptic_1009() -> Certificate {
        let n = BigUint::from(1009u32);
        for b in 1u32..6 {
            for a in 0u32..1009 {
                let Ok(curve) = Curve::new(n.clone(), BigUint::from(a), BigUint::from(b)) else {
                    continue;
                };
                let points = enumerate_points(&curve).unwrap();
                if points.len() != 1006 {
                    continue;
                }
                for q in &points[1..] {
                    let p = ec_mul(&curve, &BigUint::from(2u32), q).unwrap();
                    if p.is_infinity() {
                        continue;
                    }
                    // The group is cyclic of order 2 * 503, so 503 * (2Q) = O.
                    let (qx, qy, _) = q.projective();
                    let (px, py, _) = p.projective();
                    let step = Step::Ecpp {
                        n: n.clone(),
                        a: BigUint::from(a),
                        b: BigUint::from(b),
                        qx,
                        qy,
                        px,
                        py,
                        r: BigUint::from(2u32),
                        s: BigUint::from(503u32),
                    };
                    return Certificate::new(n, vec![step], 30).unwrap();
                }
            }
        }
        panic!("no curve of order 1006 found mod 1009 in the scanned family");
    }

    #[test]
    fn quartic_bound_test_matches_real_arithmetic() {
        let n = BigUint::from(13u32);
        // (13^(1/4) + 1)^2 = 8.40...: 9 passes, 8 fails.
        assert!(s_exceeds_quartic_bound(&BigUint::from(9u32), &n), "9 > 8.40");
        assert!(!s_exceeds_quartic_bound(&BigUint::from(8u32), &n), "8 < 8.40");
        for n in [100u64, 10_000, 123_457, 99_999_989] {
            let nf = n as f64;
            let threshold = (nf.powf(0.25) + 1.0).powi(2);
            for s in 1u64..200 {
                let exact = s_exceeds_quartic_bound(&BigUint::from(s), &BigUint::from(n));
                let float = (s as f64) > threshold;
                // Floating comparison is exact at these scales.
                assert_eq!(exact, float, "quartic bound mismatch at n={n} s={s}");
            }
        }
    }

    #[test]
    fn leaf_only_certificates_verify_and_reject() {
        assert_eq!(verify(&leaf_only(97, 10)), Ok(()), "97 is prime by trial division");
        assert_eq!(
            verify(&leaf_only(91, 10)),
            Err(VerifyFailure::LeafComposite { divisor: 7 }),
            "91 = 7 * 13"
        );
        assert_eq!(
            verify(&leaf_only(101, 9)),
            Err(VerifyFailure::LeafTooLarge),
            "bound 9 squared cannot reach 101"
        );
        assert_eq!(verify(&leaf_only(1, 10)), Err(VerifyFailure::SubjectTrivial));
        assert_eq!(verify(&leaf_only(2, 2)), Ok(()), "2 is prime");
    }

    #[test]
    fn pocklington_chain_verifies() {
        assert_eq!(verify(&pocklington_23()), Ok(()));
    }

    #[test]
    fn pocklington_mutations_are_rejected() {
        let base = pocklington_23();
        let mutate = |f: &dyn Fn(&mut Step)| {
            let mut c = base.clone();
            f(&mut c.steps[0]);
            verify(&c)
        };
        // a = 5 is a primitive root mod 23: 5^11 = -1, not 1.
        assert_eq!(
            mutate(&|s| {
                if let Step::NMinusOne { a, .. } = s {
                    *a = BigUint::from(5u32);
                }
            }),
            Err(VerifyFailure::ExponentNotOne { step: 0 }),
            "5^11 = -1 mod 23"
        );
        assert_eq!(
            mutate(&|s| {
                if let Step::NMinusOne { r, .. } = s {
                    *r = BigUint::from(3u32);
                }
            }),
            Err(VerifyFailure::FactorizationMismatch { step: 0 }),
            "3 * 11 is not 22"
        );
        assert_eq!(
            mutate(&|s| {
                if let Step::NMinusOne { r, s, .. } = s {
                    *r = BigUint::from(11u32);
                    *s = BigUint::from(2u32);
                }
            }),
            Err(VerifyFailure::SBoundViolated { step: 0 }),
            "s = 2 is below sqrt(23)"
        );
        let mut wrong_child = base.clone();
        if let Step::NMinusOne { s, .. } = &mut wrong_child.steps[0] {
            *s = BigUint::from(11u32);
        }
        wrong_child.leaf_bound = 2;
        assert_eq!(
            verify(&wrong_child),
            Err(VerifyFailure::LeafTooLarge),
            "leaf bound 2 squared cannot reach 11"
        );
    }

    #[test]
    fn elliptic_step_verifies_and_rejects_mutations() {
        let cert = elliptic_1009();
        assert_eq!(verify(&cert), Ok(()), "constructed elliptic certificate is valid");
        let mutate = |f: &dyn Fn(&mut Step)| {
            let mut c = cert.clone();
            f(&mut c.steps[0]);
            verify(&c)
        };
        assert_eq!(
            mutate(&|s| {
                if let Step::Ecpp { qx, .. } = s {
                    *qx = (qx.clone() + 1u32) % 1009u32;
                }
            }),
            Err(VerifyFailure::PointNotOnCurve { step: 0 }),
            "bumped qx leaves the curve"
        );
        assert_eq!(
            mutate(&|s| {
                if let Step::Ecpp { r, .. } = s {
                    *r = BigUint::from(3u32);
                }
            }),
            Err(VerifyFailure::HasseViolated { step: 0 }),
            "3 * 503 leaves the Hasse window"
        );
        assert_eq!(
            mutate(&|s| {
                if let Step::Ecpp { qx, qy, px, py, .. } = s {
                    *px = qx.clone();
                    *py = qy.clone();
                }
            }),
            Err(VerifyFailure::WrongMultiple { step: 0 }),
            "P = Q cannot equal 2Q for nonzero Q"
        );
        assert_eq!(
            mutate(&|s| {
                if let Step::Ecpp { s, .. } = s {
                    *s = BigUint::from(997u32);
                }
            }),
            Err(VerifyFailure::HasseViolated { step: 0 }),
            "2 * 997 leaves the Hasse window around 1010"
        );
    }

    #[test]
    fn chains_must_connect_and_descend() {
        let mut cert = pocklington_23();
        cert.subject = BigUint::from(29u32);
        assert_eq!(verify(&cert), Err(VerifyFailure::SubjectMismatch));
        let loopy = Step::NMinusOne {
            n: BigUint::from(23u32),
            a: BigUint::from(2u32),
            r: BigUint::one(),
            s: BigUint::from(22u32),
        };
        let c = Certificate::new(BigUint::from(23u32), vec![loopy], 5).unwrap();
        // 2^22 = (2^11)^2 = 1 mod 23, gcd(1, 23) = 1, 22^2 > 23: the only
        // violated rule is descent to a smaller child... 22 < 23 holds, so
        // this one verifies down to the leaf, where 22 is composite.
        assert_eq!(verify(&c), Err(VerifyFailure::LeafComposite { divisor: 2 }));
    }

    #[test]
    fn text_round_trip_preserves_certificates() {
        for cert in [leaf_only(97, 10), pocklington_23(), elliptic_1009()] {
            let text = cert.to_text();
            let parsed = Certificate::parse(&text).unwrap();
            assert_eq!(parsed, cert, "parse(to_text) is the identity");
        }
    }

    #[test]
    fn parser_rejects_malformed_text() {
        let good = pocklington_23().to_text();
        assert!(Certificate::parse("").is_err(), "empty text");
        assert!(Certificate::parse("PRIMECERT v2 subject=5\nLEAF bound=3\n").is_err(), "bad version");
        assert!(
            Certificate::parse(&good.replace("LEAF bound=4", "LEAF bound=4x")).is_err(),
            "non-decimal bound"
        );
        assert!(
            Certificate::parse(&good.replace("STEP method=nminus1", "STEP method=magic")).is_err(),
            "unknown method"
        );
        assert!(
            Certificate::parse(&(good.clone() + "EXTRA\n")).is_err(),
            "content after LEAF"
        );
        assert!(
            Certificate::parse(&good.replace(" a=2 r=2", " r=2 a=2")).is_err(),
            "keys out of order"
        );
        let missing_leaf = "PRIMECERT v1 subject=23\nSTEP method=nminus1 n=23 a=2 r=2 s=11\n";
        assert!(Certificate::parse(missing_leaf).is_err(), "missing LEAF");
    }

    #[test]
    fn hasse_window_test_is_exact() {
        let n = BigUint::from(1009u32);
        // 2 * sqrt(1009) = 63.52...: the window is [946.4, 1073.5].
        assert!(order_in_hasse_window(&BigUint::from(947u32), &n));
        assert!(order_in_hasse_window(&BigUint::from(1073u32), &n));
        assert!(!order_in_hasse_window(&BigUint::from(946u32), &n));
        assert!(!order_in_hasse_window(&BigUint::from(1074u32), &n));
    }
}
