//! Fixed-point big-float arithmetic for the class polynomial series.
//!
//! A [`Fixed`] stores `mantissa / 2^prec` with an arbitrary-precision
//! integer mantissa; every operand of a binary operation must carry the
//! same `prec`.  Transcendental functions use argument reduction plus
//! Taylor series with the tail cut at one unit in the last place, so each
//! operation is accurate to a few ulps and callers budget guard bits.  The
//! class polynomial driver validates end results by recomputing at doubled
//! precision, which keeps this module free of delicate error bookkeeping.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};

/// A fixed-point real: `mant / 2^prec`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fixed {
    mant: BigInt,
    prec: u32,
}

/// Rounds `x / 2^shift` to the nearest integer, ties away from zero.
fn shift_round(x: &BigInt, shift: u32) -> BigInt {
    if shift == 0 {
        return x.clone();
    }
    let half = BigInt::one() << (shift - 1);
    if x.is_negative() {
        -BigInt::from((x.magnitude() + half.magnitude()) >> shift)
    } else {
        (x + half) >> shift
    }
}

/// Rounds `num / den` to the nearest integer, ties away from zero.
fn div_round(num: &BigInt, den: &BigInt) -> BigInt {
    let (q, r) = num_integer::Integer::div_rem(num, den);
    if (r.magnitude() << 1u32) >= *den.magnitude() {
        if num.is_negative() == den.is_negative() {
            q + BigInt::one()
        } else {
            q - BigInt::one()
        }
    } else {
        q
    }
}

impl Fixed {
    /// Zero at the given precision.
    pub fn zero(prec: u32) -> Fixed {
        Fixed { mant: BigInt::zero(), prec }
    }

    /// The integer `v` at the given precision.
    pub fn from_i64(v: i64, prec: u32) -> Fixed {
        Fixed { mant: BigInt::from(v) << prec, prec }
    }

    /// The integer `v` at the given precision.
    pub fn from_bigint(v: &BigInt, prec: u32) -> Fixed {
        Fixed { mant: v.clone() << prec, prec }
    }

    /// The ratio `num / den` at the given precision. `den` must be nonzero.
    pub fn from_ratio(num: &BigInt, den: &BigInt, prec: u32) -> Fixed {
        assert!(!den.is_zero(), "fixed-point ratio requires a nonzero denominator");
        Fixed { mant: div_round(&(num << prec), den), prec }
    }

    /// Division by a nonzero machine integer, rounded to nearest.
    pub fn div_int(&self, k: i64) -> Fixed {
        assert!(k != 0, "fixed-point division by a zero integer");
        Fixed { mant: div_round(&self.mant, &BigInt::from(k)), prec: self.prec }
    }

    /// Multiplication by a machine integer (exact).
    pub fn mul_int(&self, k: i64) -> Fixed {
        Fixed { mant: &self.mant * BigInt::from(k), prec: self.prec }
    }

    /// Fraction bits.
    pub fn prec(&self) -> u32 {
        self.prec
    }

    /// True when the value is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    /// True for values below zero.
    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    fn check(&self, other: &Fixed) {
        assert_eq!(self.prec, other.prec, "fixed-point operands must share precision");
    }

    /// Sum.
    pub fn add(&self, other: &Fixed) -> Fixed {
        self.check(other);
        Fixed { mant: &self.mant + &other.mant, prec: self.prec }
    }

    /// Difference.
    pub fn sub(&self, other: &Fixed) -> Fixed {
        self.check(other);
        Fixed { mant: &self.mant - &other.mant, prec: self.prec }
    }

    /// Negation.
    pub fn neg(&self) -> Fixed {
        Fixed { mant: -&self.mant, prec: self.prec }
    }

    /// Absolute value.
    pub fn abs(&self) -> Fixed {
        Fixed { mant: self.mant.abs(), prec: self.prec }
    }

    /// Product, rounded to nearest.
    pub fn mul(&self, other: &Fixed) -> Fixed {
        self.check(other);
        Fixed { mant: shift_round(&(&self.mant * &other.mant), self.prec), prec: self.prec }
    }

    /// Quotient, rounded toward nearest. `other` must be nonzero.
    pub fn div(&self, other: &Fixed) -> Fixed {
        self.check(other);
        Fixed::from_ratio(&self.mant, &other.mant, self.prec)
    }

    /// Multiplication by `2^k` (exact).
    pub fn scale_pow2(&self, k: i32) -> Fixed {
        let mant = if k >= 0 {
            &self.mant << k as u32
        } else {
            shift_round(&self.mant, (-k) as u32)
        };
        Fixed { mant, prec: self.prec }
    }

    /// Re-expresses the value with a different number of fraction bits.
    pub fn with_prec(&self, prec: u32) -> Fixed {
        let mant = if prec >= self.prec {
            &self.mant << (prec - self.prec)
        } else {
            shift_round(&self.mant, self.prec - prec)
        };
        Fixed { mant, prec }
    }

    /// Nearest integer, ties away from zero.
    pub fn round_to_int(&self) -> BigInt {
        shift_round(&self.mant, self.prec)
    }

    /// Square root of a nonnegative value.
    pub fn sqrt(&self) -> Fixed {
        assert!(!self.is_negative(), "fixed-point sqrt requires a nonnegative value");
        let scaled: BigUint = self.mant.magnitude() << self.prec;
        Fixed { mant: BigInt::from(scaled.sqrt()), prec: self.prec }
    }

    /// Compares magnitudes against `2^-bits`, for convergence thresholds.
    pub fn magnitude_below(&self, bits: u32) -> bool {
        if bits >= self.prec {
            // Thresholds below one ulp only admit zero.
            return self.mant.is_zero();
        }
        self.mant.magnitude().bits() <= (self.prec - bits) as u64
    }

    /// Approximate conversion for diagnostics and test oracles.
    pub fn to_f64(&self) -> f64 {
        let bits = self.mant.magnitude().bits();
        if bits == 0 {
            return 0.0;
        }
        // Take the top 64 bits and rescale.
        let drop = bits.saturating_sub(64);
        let top: BigUint = self.mant.magnitude() >> drop;
        let top = top.to_u64_digits().first().copied().unwrap_or(0) as f64;
        let exponent = drop as i64 - self.prec as i64;
        let value = top * (exponent as f64).exp2();
        if self.mant.is_negative() {
            -value
        } else {
            value
        }
    }

    /// π by Machin's formula: `π = 16 arctan(1/5) − 4 arctan(1/239)`.
    pub fn pi(prec: u32) -> Fixed {
        let work = prec + 24;
        let a = arctan_inverse(5, work);
        let b = arctan_inverse(239, work);
        a.scale_pow2(4).sub(&b.scale_pow2(2)).with_prec(prec)
    }

    /// `e^x` by halving reduction and Taylor summation.
    pub fn exp(&self) -> Fixed {
        let prec = self.prec;
        // Halve until |r| < 1/2; each squaring costs about one bit.
        let magnitude_bits = (self.mant.magnitude().bits() as i64 - prec as i64 + 1).max(0) as u32;
        let work = prec + magnitude_bits + 32;
        let mut r = self.with_prec(work).scale_pow2(-(magnitude_bits as i32));
        let mut sum = Fixed::from_i64(1, work);
        let mut term = Fixed::from_i64(1, work);
        let mut k: i64 = 1;
        loop {
            term = term.mul(&r).div_int(k);
            if term.mant.magnitude() <= &BigUint::one() {
                break;
            }
            sum = sum.add(&term);
            k += 1;
        }
        for _ in 0..magnitude_bits {
            sum = sum.mul(&sum);
        }
        r = sum.with_prec(prec);
        r
    }

    /// Sine and cosine for arguments with `|x|` of a few units.
    pub fn sin_cos(&self) -> (Fixed, Fixed) {
        let prec = self.prec;
        let work = prec + 32;
        let x = self.with_prec(work);
        let xx = x.mul(&x).neg();
        let mut sin = x.clone();
        let mut sin_term = x;
        let mut cos = Fixed::from_i64(1, work);
        let mut cos_term = Fixed::from_i64(1, work);
        let mut k: i64 = 1;
        loop {
            // cos picks up x^(2k)/(2k)!, sin picks up x^(2k+1)/(2k+1)!.
            cos_term = cos_term.mul(&xx).div_int((2 * k - 1) * 2 * k);
            sin_term = sin_term.mul(&xx).div_int(2 * k * (2 * k + 1));
            let done = cos_term.mant.magnitude() <= &BigUint::one()
                && sin_term.mant.magnitude() <= &BigUint::one();
            cos = cos.add(&cos_term);
            sin = sin.add(&sin_term);
            if done {
                break;
            }
            k += 1;
        }
        (sin.with_prec(prec), cos.with_prec(prec))
    }
}

/// `arctan(1/x)` by the alternating Taylor series, for Machin's formula.
fn arctan_inverse(x: i64, prec: u32) -> Fixed {
    let scale = BigInt::one() << prec;
    let xx = BigInt::from(x) * BigInt::from(x);
    let mut power = scale / BigInt::from(x);
    let mut sum = power.clone();
    let mut k: i64 = 1;
    while !power.is_zero() {
        power = power / &xx;
        let term = &power / BigInt::from(2 * k + 1);
        if k % 2 == 1 {
            sum -= term;
        } else {
            sum += term;
        }
        k += 1;
    }
    Fixed { mant: sum, prec }
}

/// A complex number with [`Fixed`] parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cx {
    /// Real part.
    pub re: Fixed,
    /// Imaginary part.
    pub im: Fixed,
}

impl Cx {
    /// Builds a complex value; both parts must share precision.
    pub fn new(re: Fixed, im: Fixed) -> Cx {
        assert_eq!(re.prec(), im.prec(), "complex parts must share precision");
        Cx { re, im }
    }

    /// The real integer `v` at the given precision.
    pub fn from_i64(v: i64, prec: u32) -> Cx {
        Cx { re: Fixed::from_i64(v, prec), im: Fixed::zero(prec) }
    }

    /// Sum.
    pub fn add(&self, other: &Cx) -> Cx {
        Cx { re: self.re.add(&other.re), im: self.im.add(&other.im) }
    }

    /// Difference.
    pub fn sub(&self, other: &Cx) -> Cx {
        Cx { re: self.re.sub(&other.re), im: self.im.sub(&other.im) }
    }

    /// Product.
    pub fn mul(&self, other: &Cx) -> Cx {
        let re = self.re.mul(&other.re).sub(&self.im.mul(&other.im));
        let im = self.re.mul(&other.im).add(&self.im.mul(&other.re));
        Cx { re, im }
    }

    /// Product with a real scalar.
    pub fn mul_fixed(&self, other: &Fixed) -> Cx {
        Cx { re: self.re.mul(other), im: self.im.mul(other) }
    }

    /// Product with a machine integer (exact).
    pub fn mul_int(&self, k: i64) -> Cx {
        Cx { re: self.re.mul_int(k), im: self.im.mul_int(k) }
    }

    /// Quotient via the conjugate. `other` must be nonzero.
    pub fn div(&self, other: &Cx) -> Cx {
        let norm = other.re.mul(&other.re).add(&other.im.mul(&other.im));
        let num = self.mul(&other.conj());
        Cx { re: num.re.div(&norm), im: num.im.div(&norm) }
    }

    /// Complex conjugate.
    pub fn conj(&self) -> Cx {
        Cx { re: self.re.clone(), im: self.im.neg() }
    }

    /// `self^e` by repeated squaring.
    pub fn pow_u32(&self, e: u32) -> Cx {
        let mut acc = Cx::from_i64(1, self.re.prec());
        for i in (0..u32::BITS - e.leading_zeros()).rev() {
            acc = acc.mul(&acc);
            if (e >> i) & 1 == 1 {
                acc = acc.mul(self);
            }
        }
        acc
    }

    /// True when both parts are exactly zero.
    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    /// True when both parts are below `2^-bits` in magnitude.
    pub fn magnitude_below(&self, bits: u32) -> bool {
        self.re.magnitude_below(bits) && self.im.magnitude_below(bits)
    }
}
