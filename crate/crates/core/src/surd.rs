//! Exact arithmetic in multiquadratic number fields.
//!
//! A [`Surd`] is a finite sum `Σ q_r · √r` with rational `q_r` and distinct
//! square-free positive integers `r`. Square roots of distinct square-free
//! integers are linearly independent over ℚ, so the representation is
//! canonical and equality is structural.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::field::{Field, Scalar};

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Surd {
    // radicand -> coefficient; never stores zero coefficients
    terms: BTreeMap<u64, BigRational>,
}

impl Surd {
    pub fn rational(q: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !q.is_zero() {
            terms.insert(1, q);
        }
        Surd { terms }
    }

    pub fn int(n: i64) -> Self {
        Self::rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Self::rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    /// `coeff · √radicand` for a square-free radicand.
    fn term(radicand: u64, coeff: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert(radicand, coeff);
        }
        Surd { terms }
    }

    /// Exact square root of a nonnegative rational, if its square-free part
    /// can be determined.
    pub fn sqrt_rational(q: &BigRational) -> Option<Self> {
        if q.is_negative() {
            return None;
        }
        if q.is_zero() {
            return Some(Surd::default());
        }
        // sqrt(a/b) = sqrt(a b) / b
        let a = q.numer().magnitude().clone();
        let b = q.denom().magnitude().clone();
        let (square, free) = square_free_decompose(&(&a * &b))?;
        let free = free.to_u64()?;
        let coeff = BigRational::new(BigInt::from(square), BigInt::from(b));
        Some(Surd::term(free, coeff))
    }

    pub fn is_rational(&self) -> bool {
        self.terms.keys().all(|&r| r == 1)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, &BigRational)> {
        self.terms.iter().map(|(r, q)| (*r, q))
    }

    fn scale(&self, q: &BigRational) -> Self {
        if q.is_zero() {
            return Surd::default();
        }
        Surd {
            terms: self.terms.iter().map(|(r, c)| (*r, c * q)).collect(),
        }
    }

    fn add_term(&mut self, radicand: u64, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        let remove = match self.terms.get_mut(&radicand) {
            Some(c) => {
                *c += coeff;
                c.is_zero()
            }
            None => {
                self.terms.insert(radicand, coeff);
                false
            }
        };
        if remove {
            self.terms.remove(&radicand);
        }
    }

    /// Field automorphism flipping the sign of `√p`.
    pub(crate) fn conjugate(&self, p: u64) -> Self {
        Surd {
            terms: self
                .terms
                .iter()
                .map(|(r, c)| {
                    if r % p == 0 {
                        (*r, -c)
                    } else {
                        (*r, c.clone())
                    }
                })
                .collect(),
        }
    }

    pub(crate) fn primes(&self) -> Vec<u64> {
        let mut out: Vec<u64> = Vec::new();
        for &r in self.terms.keys() {
            for p in small_prime_factors(r) {
                if !out.contains(&p) {
                    out.push(p);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Interval `[lo, hi]` containing the value, using `bits` bits per root.
    fn enclose(&self, bits: u32) -> (BigRational, BigRational) {
        let mut lo = BigRational::zero();
        let mut hi = BigRational::zero();
        let scale = BigUint::one() << bits;
        let scale_q = BigRational::from_integer(BigInt::from(scale.clone()));
        for (&r, c) in &self.terms {
            if r == 1 {
                lo += c;
                hi += c;
                continue;
            }
            let big = BigUint::from(r) * &scale * &scale;
            let root = big.sqrt();
            let down = BigRational::from_integer(BigInt::from(root.clone())) / &scale_q;
            let up = if &root * &root == big {
                down.clone()
            } else {
                BigRational::from_integer(BigInt::from(root + 1u32)) / &scale_q
            };
            if c.is_positive() {
                lo += c * &down;
                hi += c * &up;
            } else {
                lo += c * &up;
                hi += c * &down;
            }
        }
        (lo, hi)
    }

    pub fn sign(&self) -> i8 {
        if self.terms.is_empty() {
            return 0;
        }
        if self.is_rational() {
            return if self.terms[&1].is_positive() { 1 } else { -1 };
        }
        let mut bits = 32;
        loop {
            let (lo, hi) = self.enclose(bits);
            if lo.is_positive() {
                return 1;
            }
            if hi.is_negative() {
                return -1;
            }
            bits *= 2;
        }
    }
}

impl Field for Surd {
    const BACKEND: crate::field::Backend = crate::field::Backend::Exact;

    fn zero() -> Self {
        Surd::default()
    }
    fn one() -> Self {
        Surd::int(1)
    }
    fn from_rational(q: &BigRational) -> Self {
        Surd::rational(q.clone())
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn inv(&self) -> Option<Self> {
        if self.terms.is_empty() {
            return None;
        }
        let mut x = self.clone();
        let mut acc = Surd::one();
        for p in self.primes() {
            let c = x.conjugate(p);
            acc = acc * c.clone();
            x = x * c;
        }
        let norm = x.as_rational()?;
        Some(acc.scale(&norm.recip()))
    }
    fn sqrt(&self) -> Option<Self> {
        Surd::sqrt_rational(&self.as_rational()?)
    }
    fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(r, c)| c.to_f64().unwrap_or(f64::NAN) * (*r as f64).sqrt())
            .sum()
    }
    fn signum(&self) -> i8 {
        self.sign()
    }
    fn as_rational(&self) -> Option<BigRational> {
        if self.terms.is_empty() {
            Some(BigRational::zero())
        } else if self.is_rational() {
            Some(self.terms[&1].clone())
        } else {
            None
        }
    }
    fn to_scalar(&self) -> Scalar {
        Scalar::Exact(self.clone())
    }
    fn from_surd(x: &Surd) -> Self {
        x.clone()
    }
    fn galois_orbit(p: &[Self]) -> Option<Vec<Vec<Self>>> {
        let mut primes: Vec<u64> = p.iter().flat_map(Surd::primes).collect();
        primes.sort_unstable();
        primes.dedup();
        if primes.len() > 16 {
            return None;
        }
        let orbit = (0u32..1 << primes.len())
            .map(|mask| {
                p.iter()
                    .map(|c| {
                        primes
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| mask >> i & 1 == 1)
                            .fold(c.clone(), |acc, (_, &q)| acc.conjugate(q))
                    })
                    .collect()
            })
            .collect();
        Some(orbit)
    }
}

impl Add for Surd {
    type Output = Surd;
    fn add(mut self, rhs: Surd) -> Surd {
        for (r, c) in rhs.terms {
            self.add_term(r, c);
        }
        self
    }
}

impl Sub for Surd {
    type Output = Surd;
    fn sub(mut self, rhs: Surd) -> Surd {
        for (r, c) in rhs.terms {
            self.add_term(r, -c);
        }
        self
    }
}

impl Neg for Surd {
    type Output = Surd;
    fn neg(self) -> Surd {
        Surd {
            terms: self.terms.into_iter().map(|(r, c)| (r, -c)).collect(),
        }
    }
}

impl Mul for Surd {
    type Output = Surd;
    fn mul(self, rhs: Surd) -> Surd {
        let mut out = Surd::default();
        for (&a, p) in &self.terms {
            for (&b, q) in &rhs.terms {
                // √a √b = g √((a/g)(b/g)) with g = gcd(a, b); stays square-free
                let g = a.gcd(&b);
                let r = (a / g)
                    .checked_mul(b / g)
                    .expect("radicand overflow in exact arithmetic");
                let coeff = p * q * BigRational::from_integer(BigInt::from(g));
                out.add_term(r, coeff);
            }
        }
        out
    }
}

impl fmt::Debug for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

fn fmt_rational(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (r, c)) in self.terms.iter().enumerate() {
            let mag = fmt_rational(&c.abs());
            let body = match (*r, mag.as_str()) {
                (1, _) => mag,
                (_, "1") => format!("sqrt({r})"),
                _ => format!("{mag}*sqrt({r})"),
            };
            match (i, c.is_negative()) {
                (0, false) => write!(f, "{body}")?,
                (0, true) => write!(f, "-{body}")?,
                (_, false) => write!(f, " + {body}")?,
                (_, true) => write!(f, " - {body}")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse exact scalar `{0}`")]
pub struct ParseSurdError(pub String);

fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.trim_start().starts_with('-');
        let int_part: BigInt = if int.is_empty() || int == "-" || int == "+" {
            BigInt::zero()
        } else {
            int.parse().ok()?
        };
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let frac_num: BigInt = frac.parse().ok()?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        let frac_q = BigRational::new(frac_num, den);
        let int_q = BigRational::from_integer(int_part.abs());
        let mag = int_q + frac_q;
        return Some(if neg { -mag } else { mag });
    }
    s.parse::<BigInt>().ok().map(BigRational::from_integer)
}

fn parse_term(t: &str) -> Option<Surd> {
    let t = t.trim();
    let (coeff, root) = match t.find("sqrt(") {
        Some(pos) => {
            let head = t[..pos].trim().trim_end_matches('*').trim();
            let inner = t[pos + 5..].strip_suffix(')')?;
            let radicand = parse_rational(inner)?;
            let coeff = match head {
                "" | "+" => BigRational::one(),
                "-" => -BigRational::one(),
                h => parse_rational(h)?,
            };
            (coeff, Some(radicand))
        }
        None => (parse_rational(t)?, None),
    };
    match root {
        None => Some(Surd::rational(coeff)),
        Some(r) => Some(Surd::sqrt_rational(&r)?.scale(&coeff)),
    }
}

impl FromStr for Surd {
    type Err = ParseSurdError;

    /// Accepts sums of terms like `3/5`, `-0.25`, `2/15*sqrt(3)`, `sqrt(1/2)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseSurdError(s.to_string());
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(err());
        }
        // split on top-level +/- (not inside parentheses, not leading, not after '/' or '*')
        let mut parts: Vec<String> = Vec::new();
        let mut depth = 0i32;
        let mut current = String::new();
        let chars: Vec<char> = compact.chars().collect();
        for (i, &c) in chars.iter().enumerate() {
            match c {
                '(' => depth += 1,
                ')' => depth -= 1,
                _ => {}
            }
            let splits = (c == '+' || c == '-')
                && depth == 0
                && i > 0
                && !matches!(chars[i - 1], '/' | '*' | 'e' | 'E');
            if splits {
                parts.push(std::mem::take(&mut current));
            }
            current.push(c);
        }
        parts.push(current);
        let mut acc = Surd::zero();
        for p in parts {
            acc = acc + parse_term(&p).ok_or_else(err)?;
        }
        Ok(acc)
    }
}

/// Splits `n = square² · free` with `free` square-free.
///
/// Trial division is run up to `min(n^{1/3}, 2·10^6)`; the cofactor is then
/// either 1, a prime, a prime square or a product of two distinct primes,
/// which is decided exactly when the cube-root bound was reached.
pub fn square_free_decompose(n: &BigUint) -> Option<(BigUint, BigUint)> {
    const LIMIT: u64 = 2_000_000;
    let mut m = n.clone();
    let mut square = BigUint::one();
    let mut free = BigUint::one();
    if m.is_zero() {
        return None;
    }
    let mut p: u64 = 2;
    loop {
        let pb = BigUint::from(p);
        if &pb * &pb * &pb > m {
            break;
        }
        if p > LIMIT {
            // cofactor could still hide a square of a large prime
            let r = m.sqrt();
            if &r * &r == m {
                return Some((square * r, free));
            }
            return None;
        }
        let mut e = 0u32;
        while (&m % &pb).is_zero() {
            m /= &pb;
            e += 1;
        }
        for _ in 0..e / 2 {
            square *= &pb;
        }
        if e % 2 == 1 {
            free *= &pb;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    // m now has at most two prime factors, all larger than the last divisor tried
    let r = m.sqrt();
    if &r * &r == m {
        square *= r;
    } else {
        free *= m;
    }
    Some((square, free))
}

fn small_prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Exact rational from an `f64` (every finite double is a dyadic rational).
pub fn rational_from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

/// The simplest rational (smallest denominator) in the closed interval.
pub fn simplest_between(lo: &BigRational, hi: &BigRational) -> BigRational {
    debug_assert!(lo <= hi);
    if lo.is_negative() && hi.is_positive() || lo.is_zero() || hi.is_zero() {
        return BigRational::zero();
    }
    if hi.is_negative() {
        return -simplest_between(&-hi.clone(), &-lo.clone());
    }
    let fl = lo.floor();
    if fl == *lo {
        return fl;
    }
    if fl.clone() + BigRational::one() <= *hi {
        return fl + BigRational::one();
    }
    // lo, hi share integer part: recurse on reciprocals of fractional parts
    let a = fl.clone();
    let lo_f = lo - &a;
    let hi_f = hi - &a;
    let inner = simplest_between(&hi_f.recip(), &lo_f.recip());
    a + inner.recip()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &str) -> Surd {
        x.parse().unwrap()
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(s("3/5").to_string(), "3/5");
        assert_eq!(s("2/15*sqrt(3)").to_string(), "2/15*sqrt(3)");
        assert_eq!(s("1 - sqrt(2)").to_string(), "1 - sqrt(2)");
        assert_eq!(s("0.5"), Surd::ratio(1, 2));
        assert_eq!(s("sqrt(1/2)"), Surd::ratio(1, 2) * s("sqrt(2)"));
        assert_eq!(s("sqrt(12)"), s("2*sqrt(3)"));
        assert!("abc".parse::<Surd>().is_err());
    }

    #[test]
    fn multiplication_reduces_radicands() {
        assert_eq!(s("sqrt(3)") * s("sqrt(5)"), s("sqrt(15)"));
        assert_eq!(s("sqrt(6)") * s("sqrt(10)"), s("2*sqrt(15)"));
        assert_eq!(s("sqrt(15)") * s("sqrt(15)"), Surd::int(15));
    }

    #[test]
    fn inverse_in_biquadratic_field() {
        let x = s("1 + sqrt(3) + 2*sqrt(5)");
        let y = x.inv().unwrap();
        assert_eq!(x * y, Surd::one());
        assert!(Surd::zero().inv().is_none());
    }

    #[test]
    fn sign_of_near_cancellation() {
        // 99/70 > sqrt(2) > 140/99
        assert_eq!((s("99/70") - s("sqrt(2)")).sign(), 1);
        assert_eq!((s("140/99") - s("sqrt(2)")).sign(), -1);
        assert_eq!((s("sqrt(3)") + s("sqrt(5)") - s("sqrt(15)")).sign(), 1);
    }

    #[test]
    fn square_free_parts() {
        let (sq, fr) = square_free_decompose(&BigUint::from(72u32)).unwrap();
        assert_eq!((sq, fr), (BigUint::from(6u32), BigUint::from(2u32)));
        let big = BigUint::from(1_000_003u64) * BigUint::from(1_000_003u64) * 7u32;
        let (sq, fr) = square_free_decompose(&big).unwrap();
        assert_eq!((sq, fr), (BigUint::from(1_000_003u64), BigUint::from(7u32)));
    }

    #[test]
    fn simplest_rational() {
        let q = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        assert_eq!(simplest_between(&q(7, 10), &q(3, 4)), q(3, 4));
        assert_eq!(simplest_between(&q(71, 100), &q(72, 100)), q(5, 7));
        assert_eq!(simplest_between(&q(-72, 100), &q(-71, 100)), q(-5, 7));
    }

    proptest::proptest! {
        #[test]
        fn field_axioms(a in -20i64..20, b in 1i64..20, c in -20i64..20, d in -20i64..20) {
            let x = Surd::ratio(a, b) + Surd::int(c) * s("sqrt(3)");
            let y = Surd::int(d) * s("sqrt(5)") + Surd::ratio(1, b);
            proptest::prop_assert_eq!(x.clone() * y.clone(), y.clone() * x.clone());
            proptest::prop_assert_eq!((x.clone() + y.clone()) - y.clone(), x.clone());
            if !x.is_zero() {
                proptest::prop_assert_eq!(x.clone() * x.inv().unwrap(), Surd::one());
            }
            let diff = x.to_f64() - y.to_f64();
            if diff.abs() > 1e-9 {
                proptest::prop_assert_eq!((x - y).sign(), if diff > 0.0 { 1 } else { -1 });
            }
        }
    }
}
