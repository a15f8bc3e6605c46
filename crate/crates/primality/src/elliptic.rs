//! Elliptic curve arithmetic over `Z/nZ` for a possibly-composite odd `n`.
//!
//! Points are kept in normalized projective form: the identity `(0 : 1 : 0)`
//! and affine representatives `(x : y : 1)`.  The group law is the
//! chord-and-tangent construction, normalizing after every step, so the
//! gcd events that projective arithmetic defers to one normalization point
//! happen at each inversion here.  When `n` is prime this is the group
//! `E(F_n)`.  When `n` is composite the formulas may hit a zero divisor;
//! every inversion therefore reports the offending gcd as a
//! [`FactorFound`](EcError::FactorFound) instead of failing silently, and
//! downstream provers convert that into compositeness evidence.  A completed
//! affine computation reduces compatibly modulo every prime divisor of `n`,
//! which is what the certificate checks rely on.

use crate::arith::{jacobi_symbol, sqrt_mod_prime};
use crate::error::{Error, FactorSurprise};
use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::Rng;

/// Cap for exhaustive point enumeration; brute force is for cross-checks.
const MAX_ENUMERATION: u64 = 1 << 16;

/// Failure modes of curve arithmetic over `Z/nZ`.
#[derive(Debug)]
pub enum EcError {
    /// An inversion met a zero divisor; the gcd is a proper factor of `n`.
    FactorFound(FactorSurprise),
    /// Parameter or domain violation.
    Invalid(Error),
}

impl From<Error> for EcError {
    fn from(e: Error) -> EcError {
        EcError::Invalid(e)
    }
}

impl std::fmt::Display for EcError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EcError::FactorFound(s) => write!(f, "inversion found a factor: {}", s.factor),
            EcError::Invalid(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for EcError {}

/// The curve `y^2 = x^3 + a x + b` over `Z/nZ`, `n` odd and nonsingular.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Curve {
    n: BigUint,
    a: BigUint,
    b: BigUint,
}

/// A point on a [`Curve`], kept in affine form.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CurvePoint {
    /// The group identity.
    Infinity,
    /// An affine point with coordinates reduced mod `n`.
    Affine {
        /// x coordinate, in `[0, n)`.
        x: BigUint,
        /// y coordinate, in `[0, n)`.
        y: BigUint,
    },
}

impl CurvePoint {
    /// Convenience constructor reducing the coordinates mod `n`.
    pub fn affine(x: BigUint, y: BigUint, n: &BigUint) -> CurvePoint {
        CurvePoint::Affine { x: x % n, y: y % n }
    }

    /// True for the identity.
    pub fn is_infinity(&self) -> bool {
        matches!(self, CurvePoint::Infinity)
    }

    /// The normalized projective coordinates: `(0, 1, 0)` for the identity
    /// and `(x, y, 1)` otherwise.
    pub fn projective(&self) -> (BigUint, BigUint, BigUint) {
        match self {
            CurvePoint::Infinity => (BigUint::ZERO, BigUint::one(), BigUint::ZERO),
            CurvePoint::Affine { x, y } => (x.clone(), y.clone(), BigUint::one()),
        }
    }
}

/// Whether the z-coordinate of `point` is a unit mod `n`, i.e. whether the
/// point stays nonzero modulo every prime divisor of `n`.
///
/// Arithmetic here normalizes after every step, so z is always 0 or 1 and
/// the gcd test degenerates: the identity is zero everywhere, an affine
/// point nowhere.  A point that would have been zero modulo only some
/// divisors never reaches this check, because the addition chain producing
/// it meets a denominator sharing that divisor and reports the factor.
pub fn is_nonzero_mod_every_prime(_curve: &Curve, point: &CurvePoint) -> bool {
    !point.is_infinity()
}

impl Curve {
    /// Builds `y^2 = x^3 + a x + b` over `Z/nZ`, requiring `n` odd, `n > 3`,
    /// and the discriminant `-16 (4a^3 + 27b^2)` invertible mod `n`.
    ///
    /// A discriminant sharing a proper factor with `n` surfaces as
    /// [`EcError::FactorFound`]; a singular reduction is a domain error.
    pub fn new(n: BigUint, a: BigUint, b: BigUint) -> Result<Curve, EcError> {
        if n <= BigUint::from(3u32) || n.is_even() {
            return Err(Error::Domain("curve modulus must be odd and exceed 3").into());
        }
        let a = a % &n;
        let b = b % &n;
        let disc = (BigUint::from(4u32) * a.pow(3) + BigUint::from(27u32) * b.pow(2)) % &n;
        if disc.is_zero() {
            return Err(Error::Domain("curve is singular modulo n").into());
        }
        let g = crate::arith::gcd(&disc, &n)?;
        if !g.is_one() {
            // disc is a nonzero residue, so the gcd is a proper factor.
            return Err(EcError::FactorFound(FactorSurprise { factor: g }));
        }
        Ok(Curve { n, a, b })
    }

    /// The modulus.
    pub fn modulus(&self) -> &BigUint {
        &self.n
    }

    /// Coefficient `a`.
    pub fn a(&self) -> &BigUint {
        &self.a
    }

    /// Coefficient `b`.
    pub fn b(&self) -> &BigUint {
        &self.b
    }

    /// The right-hand side `x^3 + a x + b mod n`.
    pub fn rhs(&self, x: &BigUint) -> BigUint {
        (x.modpow(&BigUint::from(3u32), &self.n) + &self.a * x + &self.b) % &self.n
    }

    /// Whether `point` satisfies the curve equation.
    pub fn contains(&self, point: &CurvePoint) -> bool {
        match point {
            CurvePoint::Infinity => true,
            CurvePoint::Affine { x, y } => {
                x < &self.n && y < &self.n && (y * y) % &self.n == self.rhs(x)
            }
        }
    }

    /// Modular inverse with factor reporting.
    fn invert(&self, d: &BigUint) -> Result<BigUint, EcError> {
        let ext = BigInt::from(d.clone()).extended_gcd(&BigInt::from(self.n.clone()));
        if ext.gcd.is_one() {
            let n = BigInt::from(self.n.clone());
            let x = ((ext.x % &n) + &n) % &n;
            return Ok(x.to_biguint().expect("reduced inverse is nonnegative"));
        }
        let g = ext.gcd.abs().to_biguint().expect("gcd of naturals is natural");
        if g == self.n {
            return Err(Error::Domain("inversion of zero modulo n").into());
        }
        Err(EcError::FactorFound(FactorSurprise { factor: g }))
    }

    fn sub_mod(&self, a: &BigUint, b: &BigUint) -> BigUint {
        if a >= b {
            a - b
        } else {
            &self.n - b + a
        }
    }
}

/// Chord-and-tangent addition.
///
/// The identity branches come first, then inverse pairs, so that the only
/// inversions attempted are of quantities that are nonzero mod `n`; any
/// failure there exposes a proper factor.
pub fn ec_add(curve: &Curve, p: &CurvePoint, q: &CurvePoint) -> Result<CurvePoint, EcError> {
    let n = &curve.n;
    let (x1, y1, x2, y2) = match (p, q) {
        (CurvePoint::Infinity, _) => return Ok(q.clone()),
        (_, CurvePoint::Infinity) => return Ok(p.clone()),
        (CurvePoint::Affine { x: x1, y: y1 }, CurvePoint::Affine { x: x2, y: y2 }) => (x1, y1, x2, y2),
    };
    if x1 >= n || y1 >= n || x2 >= n || y2 >= n {
        return Err(Error::Domain("point coordinates must be reduced mod n").into());
    }
    let lambda = if x1 == x2 {
        if (y1 + y2) % n == BigUint::ZERO {
            return Ok(CurvePoint::Infinity);
        }
        // Tangent slope (3 x^2 + a) / (2 y); the branch above ensures
        // 2 y1 != 0 mod n.
        let num = (BigUint::from(3u32) * x1 * x1 + &curve.a) % n;
        let den = (y1 << 1) % n;
        (num * curve.invert(&den)?) % n
    } else {
        let num = curve.sub_mod(y2, y1);
        let den = curve.sub_mod(x2, x1);
        (num * curve.invert(&den)?) % n
    };
    let x3 = curve.sub_mod(&((&lambda * &lambda) % n), &((x1 + x2) % n));
    let y3 = curve.sub_mod(&((lambda * curve.sub_mod(x1, &x3)) % n), y1);
    Ok(CurvePoint::Affine { x: x3, y: y3 })
}

/// Scalar multiple by square-and-add.
pub fn ec_mul(curve: &Curve, k: &BigUint, p: &CurvePoint) -> Result<CurvePoint, EcError> {
    let mut acc = CurvePoint::Infinity;
    for i in (0..k.bits()).rev() {
        acc = ec_add(curve, &acc, &acc)?;
        if k.bit(i) {
            acc = ec_add(curve, &acc, p)?;
        }
    }
    Ok(acc)
}

/// Draws a uniform point of the curve, assuming the modulus is prime.
///
/// Samples `x` until the right-hand side is a square, then takes a uniform
/// square root.  On composite moduli the square-root step may fail and
/// surfaces as a `NotPrime` domain error.
pub fn random_point<R: Rng + ?Sized>(curve: &Curve, rng: &mut R) -> Result<CurvePoint, EcError> {
    let n = &curve.n;
    for _ in 0..512 {
        let x = rng.gen_biguint_below(n);
        let t = curve.rhs(&x);
        match jacobi_symbol(&BigInt::from(t.clone()), n)? {
            -1 => continue,
            0 => {
                if t.is_zero() {
                    return Ok(CurvePoint::Affine { x, y: BigUint::ZERO });
                }
                // 0 < gcd(t, n) < n: the modulus is composite.
                return Err(EcError::FactorFound(FactorSurprise { factor: crate::arith::gcd(&t, n)? }));
            }
            _ => {
                let y = match sqrt_mod_prime(&t, n)? {
                    Some(y) => y,
                    // Jacobi symbol 1 yet Euler says nonresidue: n is composite.
                    None => {
                        return Err(Error::NotPrime(
                            "Euler criterion contradicts the Jacobi symbol",
                        )
                        .into())
                    }
                };
                let y = if rng.gen::<bool>() && !y.is_zero() { n - &y } else { y };
                return Ok(CurvePoint::Affine { x, y });
            }
        }
    }
    Err(Error::Capacity("no curve point found; the modulus is unlikely to be prime").into())
}

/// Exhaustively lists the points of a curve over a small prime field,
/// identity first, for cross-checking orders and group structure.
pub fn enumerate_points(curve: &Curve) -> Result<Vec<CurvePoint>, Error> {
    if curve.n.bits() > MAX_ENUMERATION.trailing_zeros() as u64 {
        return Err(Error::Capacity("exhaustive enumeration is for small moduli"));
    }
    let n = curve.n.to_u64_digits().first().copied().expect("modulus exceeds 3");
    let mut roots: Vec<Vec<u64>> = vec![Vec::new(); n as usize];
    for y in 0..n {
        roots[(y * y % n) as usize].push(y);
    }
    let mut points = vec![CurvePoint::Infinity];
    for x in 0..n {
        let fx = curve.rhs(&BigUint::from(x));
        let fx = fx.to_u64_digits().first().copied().unwrap_or(0);
        for &y in &roots[fx as usize] {
            points.push(CurvePoint::Affine { x: BigUint::from(x), y: BigUint::from(y) });
        }
    }
    Ok(points)
}
