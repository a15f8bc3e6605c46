//! Hilbert class polynomials from the q-expansion of the j-function.
//!
//! For a negative discriminant D the reduced binary quadratic forms
//! (a, b, c) of discriminant D are enumerated; each contributes the
//! singular value j(τ) at τ = (−b + √D)/(2a), computed from the series
//! j = E₄³/Δ with E₄ = 1 + 240 Σ σ₃(m) qᵐ and Δ = q ∏ (1 − qᵐ)²⁴.  The
//! class polynomial is ∏ (X − j(τᵢ)), whose coefficients are rational
//! integers.  Rounding is validated by recomputing at doubled precision
//! and insisting on identical integer coefficients, so no a-priori error
//! bound is required.

use super::bigfloat::{Cx, Fixed};
use crate::error::Error;
use num_bigint::{BigInt, BigUint};
use num_integer::{Integer, Roots};
use num_traits::{One, Zero};

/// Largest |D| accepted; covers every discriminant of class number ≤ 4
/// with plenty of slack.
const MAX_DISCRIMINANT: i64 = 20_000;

/// Hard ceiling for the stability-doubling loop, in fraction bits.
const MAX_PRECISION: u32 = 1 << 16;

/// A reduced primitive binary quadratic form `a x² + b x y + c y²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReducedForm {
    /// Leading coefficient, `a ≥ 1`.
    pub a: i64,
    /// Middle coefficient, `−a < b ≤ a`.
    pub b: i64,
    /// Trailing coefficient, `c ≥ a`.
    pub c: i64,
}

/// Validates that `d` is a negative discriminant, i.e. `d ≡ 0, 1 mod 4`.
fn check_discriminant(d: i64) -> Result<u64, Error> {
    if d >= 0 {
        return Err(Error::Domain("discriminant must be negative"));
    }
    if !matches!(d.rem_euclid(4), 0 | 1) {
        return Err(Error::Domain("discriminant must be 0 or 1 mod 4"));
    }
    if -d > MAX_DISCRIMINANT {
        return Err(Error::Capacity("discriminant exceeds the build-time bound"));
    }
    Ok((-d) as u64)
}

/// Enumerates the reduced primitive forms of discriminant `d < 0`, with
/// `|b| ≤ a ≤ c`, `b ≥ 0` when `|b| = a` or `a = c`, and `gcd(a, b, c) = 1`.
pub fn reduced_forms(d: i64) -> Result<Vec<ReducedForm>, Error> {
    let dabs = check_discriminant(d)?;
    let mut forms = Vec::new();
    let mut b = (dabs % 2) as i64;
    while 3 * b * b <= dabs as i64 {
        // b² ≡ d mod 4 holds because b and d share parity.
        let t = ((b * b + dabs as i64) / 4) as u64;
        let mut a = b.max(1) as u64;
        while a * a <= t {
            if t % a == 0 {
                let c = (t / a) as i64;
                let a = a as i64;
                if num_integer::gcd(num_integer::gcd(a, b), c) == 1 {
                    forms.push(ReducedForm { a, b, c });
                    if b > 0 && b < a && a < c {
                        forms.push(ReducedForm { a, b: -b, c });
                    }
                }
            }
            a += 1;
        }
        b += 2;
    }
    forms.sort_by_key(|f| (f.a, f.b));
    Ok(forms)
}

/// The class number `h(d)`: the count of reduced primitive forms.
pub fn class_number(d: i64) -> Result<u32, Error> {
    Ok(reduced_forms(d)?.len() as u32)
}

/// Whether `d < 0` is a fundamental discriminant: `d ≡ 1 mod 4` and
/// squarefree, or `d = 4m` with `m ≡ 2, 3 mod 4` and squarefree.
pub fn is_fundamental_discriminant(d: i64) -> bool {
    if d >= 0 {
        return false;
    }
    let squarefree = |m: u64| {
        let mut p = 2u64;
        while p * p <= m {
            if m % (p * p) == 0 {
                return false;
            }
            p += 1;
        }
        true
    };
    match d.rem_euclid(4) {
        1 => squarefree((-d) as u64),
        0 => {
            let m = d / 4;
            matches!(m.rem_euclid(4), 2 | 3) && squarefree((-m) as u64)
        }
        _ => false,
    }
}

/// A CM class: discriminant, class number, and the Hilbert class
/// polynomial `H_D` with integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CmClass {
    d: i64,
    h: u32,
    coeffs: Vec<BigInt>,
}

impl CmClass {
    /// The discriminant.
    pub fn discriminant(&self) -> i64 {
        self.d
    }

    /// The class number, which equals the polynomial degree.
    pub fn class_number(&self) -> u32 {
        self.h
    }

    /// Coefficients of `H_D`, ascending degree; the last entry is 1.
    pub fn coefficients(&self) -> &[BigInt] {
        &self.coeffs
    }

    /// Roots of `H_D` modulo an odd prime `n`.
    pub fn roots_mod(&self, n: &BigUint) -> Result<Vec<BigUint>, Error> {
        roots_mod_prime(&self.coeffs, n)
    }
}

/// Working fraction bits for one evaluation pass: the requested target
/// plus headroom for the magnitude of every jᵢ and their products.
fn working_precision(dabs: u64, h: u32, target: u32) -> u32 {
    let unit = 5 * (dabs.sqrt() + 1) + 8;
    target + (unit as u32) * h + 32
}

/// Conservative series length: term m decays like e^{−π√|d| m / a}.
fn series_length(dabs: u64, a: i64, work: u32) -> usize {
    let decay_bits_per_term = (6 * dabs.sqrt()).max(1) as u64;
    ((work as u64 + 64) * a as u64 / decay_bits_per_term + 8) as usize
}

/// One full evaluation of the class polynomial coefficients at a target
/// precision.  Returns `None` when rounding was visibly unstable.
fn attempt(dabs: u64, forms: &[ReducedForm], target: u32) -> Option<Vec<BigInt>> {
    let h = forms.len() as u32;
    let work = working_precision(dabs, h, target);
    let pi = Fixed::pi(work);
    let sqrt_d = Fixed::from_i64(dabs as i64, work).sqrt();
    let one = Cx::from_i64(1, work);
    let mut poly = vec![one.clone()];
    for form in forms {
        let j = singular_j(&pi, &sqrt_d, dabs, form, work);
        // poly *= (X - j).
        poly.push(poly.last().expect("poly is nonempty").clone());
        for i in (1..poly.len() - 1).rev() {
            let shifted = poly[i - 1].clone();
            poly[i] = shifted.sub(&poly[i].mul(&j));
        }
        poly[0] = poly[0].mul(&j).mul_int(-1);
    }
    // poly is ascending: constant term first, leading term last.
    let mut out = Vec::with_capacity(poly.len());
    for coeff in &poly {
        if !coeff.im.round_to_int().is_zero() {
            return None;
        }
        out.push(coeff.re.round_to_int());
    }
    if out.last().map(|lead| !lead.is_one()).unwrap_or(true) {
        return None;
    }
    Some(out)
}

/// j(τ) for τ = (−b + i√|d|)/(2a) via `j = E₄³ / Δ`.
fn singular_j(pi: &Fixed, sqrt_d: &Fixed, dabs: u64, form: &ReducedForm, work: u32) -> Cx {
    let u = pi.mul(sqrt_d).div_int(form.a);
    let inv_qmag = u.exp();
    let qmag = Fixed::from_i64(1, work).div(&inv_qmag);
    // q = e^{−u} e^{iθ} with θ = −π b / a, so 1/q = e^{u} e^{−iθ}.
    let theta = pi.mul_int(-form.b).div_int(form.a);
    let (sin, cos) = theta.sin_cos();
    let q = Cx::new(cos.mul(&qmag), sin.mul(&qmag));
    let inv_q = Cx::new(cos.mul(&inv_qmag), sin.neg().mul(&inv_qmag));
    let terms = series_length(dabs, form.a, work);
    let sigma3 = sigma3_table(terms);
    let one = Cx::from_i64(1, work);
    let mut qpow = q.clone();
    let mut e4 = one.clone();
    let mut eta_prod = one.clone();
    for m in 1..=terms {
        e4 = e4.add(&qpow.mul_int(240 * sigma3[m]));
        eta_prod = eta_prod.mul(&one.sub(&qpow));
        if qpow.magnitude_below(work) {
            break;
        }
        qpow = qpow.mul(&q);
    }
    e4.pow_u32(3).mul(&inv_q).div(&eta_prod.pow_u32(24))
}

/// σ₃(m) = Σ_{e | m} e³ for m = 1..=terms, by a divisor sieve.
fn sigma3_table(terms: usize) -> Vec<i64> {
    let mut table = vec![0i64; terms + 1];
    for e in 1..=terms as i64 {
        let cube = e * e * e;
        let mut m = e as usize;
        while m <= terms {
            table[m] += cube;
            m += e as usize;
        }
    }
    table
}

/// Computes the Hilbert class polynomial of discriminant `d`, starting at
/// `precision_bits` fraction bits and doubling until two consecutive
/// precisions round to identical integer coefficients.
pub fn class_polynomial(d: i64, precision_bits: u32) -> Result<CmClass, Error> {
    let dabs = check_discriminant(d)?;
    let forms = reduced_forms(d)?;
    if forms.is_empty() {
        return Err(Error::Domain("discriminant admits no primitive forms"));
    }
    let h = forms.len() as u32;
    let mut target = precision_bits.max(32);
    while target <= MAX_PRECISION {
        let first = attempt(dabs, &forms, target);
        let second = attempt(dabs, &forms, 2 * target);
        if let (Some(a), Some(b)) = (first, second) {
            if a == b {
                return Ok(CmClass { d, h, coeffs: a });
            }
        }
        target *= 2;
    }
    Err(Error::Capacity("class polynomial precision exceeded the growth cap"))
}

/// Reduces a signed coefficient into `[0, n)`.
fn coeff_mod(c: &BigInt, n: &BigUint) -> BigUint {
    let n_int = BigInt::from(n.clone());
    let r = c.mod_floor(&n_int);
    r.to_biguint().expect("mod_floor of a positive modulus is nonnegative")
}

/// Dense polynomials over `Z/nZ`, ascending coefficients, no trailing zeros.
type Poly = Vec<BigUint>;

fn poly_trim(mut p: Poly) -> Poly {
    while p.last().map(|c| c.is_zero()).unwrap_or(false) {
        p.pop();
    }
    p
}

fn poly_degree(p: &Poly) -> usize {
    p.len().saturating_sub(1)
}

/// Inverse mod `n`, with failure reported as a primality contradiction:
/// every caller has already committed to `n` being prime.
fn inv_mod(a: &BigUint, n: &BigUint) -> Result<BigUint, Error> {
    let ext = BigInt::from(a.clone()).extended_gcd(&BigInt::from(n.clone()));
    if !ext.gcd.is_one() {
        return Err(Error::NotPrime("a residue expected to be a unit was not invertible"));
    }
    let n_int = BigInt::from(n.clone());
    Ok(ext.x.mod_floor(&n_int).to_biguint().expect("reduced inverse is nonnegative"))
}

/// Remainder of `a` divided by monic-normalized `b`, modulo `n`.
fn poly_rem(a: &Poly, b: &Poly, n: &BigUint) -> Result<Poly, Error> {
    let db = poly_degree(b);
    let lead_inv = inv_mod(b.last().expect("divisor is nonzero"), n)?;
    let mut r = a.clone();
    while r.len() > db {
        let k = r.len() - 1;
        let factor = (r[k].clone() * &lead_inv) % n;
        if !factor.is_zero() {
            for i in 0..=db {
                let sub = (&factor * &b[i]) % n;
                let idx = k - db + i;
                r[idx] = ((&r[idx] + n) - sub) % n;
            }
        }
        r.pop();
        r = poly_trim(r);
        if r.is_empty() {
            break;
        }
    }
    Ok(poly_trim(r))
}

fn poly_mulmod(a: &Poly, b: &Poly, m: &Poly, n: &BigUint) -> Result<Poly, Error> {
    if a.is_empty() || b.is_empty() {
        return Ok(Vec::new());
    }
    let mut prod = vec![BigUint::ZERO; a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            prod[i + j] = (&prod[i + j] + ai * bj) % n;
        }
    }
    poly_rem(&poly_trim(prod), m, n)
}

/// `base^e mod (m, n)` by square and multiply.
fn poly_powmod(base: &Poly, e: &BigUint, m: &Poly, n: &BigUint) -> Result<Poly, Error> {
    let mut acc: Poly = vec![BigUint::one()];
    let mut b = poly_rem(base, m, n)?;
    for i in 0..e.bits() {
        if e.bit(i) {
            acc = poly_mulmod(&acc, &b, m, n)?;
        }
        if i + 1 < e.bits() {
            b = poly_mulmod(&b, &b, m, n)?;
        }
    }
    Ok(acc)
}

fn poly_gcd(a: &Poly, b: &Poly, n: &BigUint) -> Result<Poly, Error> {
    let mut x = a.clone();
    let mut y = b.clone();
    while !y.is_empty() {
        let r = poly_rem(&x, &y, n)?;
        x = y;
        y = r;
    }
    // Normalize monic for determinism.
    if let Some(lead) = x.last().cloned() {
        let inv = inv_mod(&lead, n)?;
        for c in &mut x {
            *c = (&*c * &inv) % n;
        }
    }
    Ok(x)
}

/// All roots of the integer polynomial `coeffs` modulo an odd prime `n`,
/// sorted ascending.  Uses the X^n − X split followed by random quadratic
/// splitting; inconsistencies surface as `NotPrime`.
pub fn roots_mod_prime(coeffs: &[BigInt], n: &BigUint) -> Result<Vec<BigUint>, Error> {
    if n.is_even() || *n < BigUint::from(3u32) {
        return Err(Error::Domain("root finding requires an odd prime modulus"));
    }
    let f: Poly = poly_trim(coeffs.iter().map(|c| coeff_mod(c, n)).collect());
    if f.len() <= 1 {
        return Err(Error::Domain("root finding requires a nonconstant polynomial"));
    }
    // g = gcd(X^n - X, f) collects exactly the roots in Z/nZ.
    let x_poly: Poly = vec![BigUint::ZERO, BigUint::one()];
    let xn = poly_powmod(&x_poly, n, &f, n)?;
    let mut xn_minus_x = xn;
    while xn_minus_x.len() < 2 {
        xn_minus_x.push(BigUint::ZERO);
    }
    xn_minus_x[1] = ((&xn_minus_x[1] + n) - BigUint::one()) % n;
    let g = poly_gcd(&f, &poly_trim(xn_minus_x), n)?;
    let mut roots = Vec::new();
    if poly_degree(&g) >= 1 {
        split_roots(&g, n, &mut roots, 0)?;
    }
    roots.sort();
    Ok(roots)
}

/// Recursively splits a product of distinct linear factors.
fn split_roots(g: &Poly, n: &BigUint, out: &mut Vec<BigUint>, depth: u32) -> Result<(), Error> {
    if depth > 64 {
        return Err(Error::Capacity("root splitting recursion exceeded its bound"));
    }
    match poly_degree(&g.clone()) {
        0 => Ok(()),
        1 => {
            // Monic X + c0: root is -c0.
            let root = ((n - &g[0]) + BigUint::ZERO) % n;
            out.push(root);
            Ok(())
        }
        _ => {
            let half = (n - 1u32) >> 1;
            // Deterministic sweep over shifts delta = 0, 1, 2, ...
            for delta in 0u64..u64::from(depth) * 8 + 64 {
                let shifted: Poly = vec![BigUint::from(delta) % n, BigUint::one()];
                let w = poly_powmod(&shifted, &half, g, n)?;
                let mut w_minus_one = w;
                if w_minus_one.is_empty() {
                    w_minus_one.push(BigUint::ZERO);
                }
                w_minus_one[0] = ((&w_minus_one[0] + n) - BigUint::one()) % n;
                let h = poly_gcd(g, &poly_trim(w_minus_one), n)?;
                let dh = poly_degree(&h);
                if dh >= 1 && dh < poly_degree(g) {
                    let quotient = poly_divide_exact(g, &h, n)?;
                    split_roots(&h, n, out, depth + 1)?;
                    split_roots(&quotient, n, out, depth + 1)?;
                    return Ok(());
                }
            }
            Err(Error::NotPrime("root splitting found no separating shift"))
        }
    }
}

/// Exact quotient `a / b` for monic `b` dividing `a`, modulo `n`.
fn poly_divide_exact(a: &Poly, b: &Poly, n: &BigUint) -> Result<Poly, Error> {
    let db = poly_degree(b);
    let lead_inv = inv_mod(b.last().expect("divisor is nonzero"), n)?;
    let mut r = a.clone();
    let mut q = vec![BigUint::ZERO; a.len() - db];
    while r.len() > db {
        let k = r.len() - 1;
        let factor = (r[k].clone() * &lead_inv) % n;
        q[k - db] = factor.clone();
        if !factor.is_zero() {
            for i in 0..=db {
                let sub = (&factor * &b[i]) % n;
                let idx = k - db + i;
                r[idx] = ((&r[idx] + n) - sub) % n;
            }
        }
        r.pop();
        r = poly_trim(r);
        if r.is_empty() {
            break;
        }
    }
    Ok(poly_trim(q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_forms_match_hand_enumeration() {
        assert_eq!(
            reduced_forms(-4).unwrap(),
            vec![ReducedForm { a: 1, b: 0, c: 1 }],
            "disc -4 has only the principal form"
        );
        assert_eq!(
            reduced_forms(-3).unwrap(),
            vec![ReducedForm { a: 1, b: 1, c: 1 }],
            "disc -3 has only the principal form"
        );
        assert_eq!(
            reduced_forms(-23).unwrap(),
            vec![
                ReducedForm { a: 1, b: 1, c: 6 },
                ReducedForm { a: 2, b: -1, c: 3 },
                ReducedForm { a: 2, b: 1, c: 3 },
            ],
            "disc -23 has three reduced forms"
        );
        // (2, 2, 2) is imprimitive and must be excluded for disc -12.
        assert_eq!(
            reduced_forms(-12).unwrap(),
            vec![ReducedForm { a: 1, b: 0, c: 3 }],
            "disc -12 keeps only the primitive form"
        );
    }

    #[test]
    fn class_numbers_match_the_classical_table() {
        let table: [(i64, u32); 14] = [
            (-3, 1),
            (-4, 1),
            (-7, 1),
            (-8, 1),
            (-11, 1),
            (-15, 2),
            (-19, 1),
            (-20, 2),
            (-23, 3),
            (-31, 3),
            (-43, 1),
            (-47, 5),
            (-67, 1),
            (-163, 1),
        ];
        for (d, h) in table {
            assert_eq!(class_number(d).unwrap(), h, "class number of {d}");
        }
    }

    #[test]
    fn fundamental_discriminants_are_recognized() {
        for d in [-3, -4, -7, -8, -11, -15, -19, -20, -23, -163] {
            assert!(is_fundamental_discriminant(d), "{d} is fundamental");
        }
        for d in [-9, -12, -16, -27, -28, -32, -44, -75, 5, 0] {
            assert!(!is_fundamental_discriminant(d), "{d} is not fundamental");
        }
    }

    #[test]
    fn degree_one_class_polynomials_match_the_singular_moduli() {
        // Classical singular moduli for the nine class-number-one fields.
        let table: [(i64, i64); 9] = [
            (-3, 0),
            (-4, 1728),
            (-7, -3375),
            (-8, 8000),
            (-11, -32768),
            (-19, -884736),
            (-43, -884736000),
            (-67, -147197952000),
            (-163, -262537412640768000),
        ];
        for (d, j) in table {
            let class = class_polynomial(d, 64).unwrap();
            assert_eq!(class.class_number(), 1, "h({d}) = 1");
            assert_eq!(
                class.coefficients(),
                &[BigInt::from(-j), BigInt::one()],
                "H_{d}(X) = X - j with j = {j}"
            );
        }
    }

    #[test]
    fn disc_minus_23_gives_a_stable_monic_cubic() {
        let class = class_polynomial(-23, 64).unwrap();
        assert_eq!(class.class_number(), 3);
        let coeffs = class.coefficients();
        assert_eq!(coeffs.len(), 4, "cubic has four coefficients");
        assert!(coeffs[3].is_one(), "H_-23 is monic");
        let again = class_polynomial(-23, 128).unwrap();
        assert_eq!(class, again, "doubled starting precision reproduces the cubic");
    }

    #[test]
    fn hilbert_roots_follow_principal_form_representability() {
        let h = class_polynomial(-23, 64).unwrap();
        // 59 = 5² + 5·2 + 6·2² is represented by the principal form of
        // disc -23, so 59 splits completely: three roots.
        let at59 = h.roots_mod(&BigUint::from(59u32)).unwrap();
        assert_eq!(at59.len(), 3, "59 splits completely in the class field");
        // 13 = 2·2² + 2·1 + 3·1² is represented only by a non-principal
        // form, so H_-23 mod 13 has no linear factor.
        let at13 = h.roots_mod(&BigUint::from(13u32)).unwrap();
        assert!(at13.is_empty(), "13 is non-principal for disc -23");
    }

    #[test]
    fn roots_of_known_quadratics_are_found() {
        let n = BigUint::from(7u32);
        // X² - 1 has roots 1 and 6 mod 7.
        let roots = roots_mod_prime(&[BigInt::from(-1), BigInt::zero(), BigInt::one()], &n).unwrap();
        assert_eq!(roots, vec![BigUint::from(1u32), BigUint::from(6u32)]);
        // X² + 1 has no roots mod 7.
        let none = roots_mod_prime(&[BigInt::one(), BigInt::zero(), BigInt::one()], &n).unwrap();
        assert!(none.is_empty(), "7 = 3 mod 4 has no square root of -1");
        // X - 5 has the single root 5.
        let five = roots_mod_prime(&[BigInt::from(-5), BigInt::one()], &n).unwrap();
        assert_eq!(five, vec![BigUint::from(5u32)]);
    }

    #[test]
    fn class_polynomial_roots_reduce_correctly_mod_13() {
        let h = class_polynomial(-4, 64).unwrap();
        let roots = h.roots_mod(&BigUint::from(13u32)).unwrap();
        // 1728 = 12 mod 13.
        assert_eq!(roots, vec![BigUint::from(12u32)], "j = 1728 reduces to 12 mod 13");
    }

    #[test]
    fn discriminant_domain_is_enforced() {
        assert!(matches!(class_polynomial(-5, 32), Err(Error::Domain(_))), "-5 = 3 mod 4");
        assert!(matches!(class_polynomial(4, 32), Err(Error::Domain(_))), "positive rejected");
        assert!(matches!(class_polynomial(-30000, 32), Err(Error::Capacity(_))), "size cap");
    }
}
