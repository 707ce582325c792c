//! Characteristic polynomials and certified rational roots.
//!
//! Roots are first located numerically (companion-matrix eigenvalues of the
//! square-free part), then each real root is bracketed by exact sign changes,
//! bisected over ℚ until the bracket is narrower than `1/a_n²`, and the
//! simplest rational in the bracket is tested by exact evaluation. By the
//! rational root theorem any rational root `p/q` of a primitive integer
//! polynomial has `q | a_n`, so this finds every rational root that the
//! numerics can see.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::field::Field;
use crate::linalg::{complex_eigenvalues, Matrix};
use crate::surd::{rational_from_f64, simplest_between};

/// Coefficients of `det(x I − A)`, lowest degree first (monic).
pub fn charpoly<T: Field>(a: &Matrix<T>) -> Vec<T> {
    // Faddeev–LeVerrier
    let n = a.dim();
    let mut coeffs = vec![T::zero(); n + 1];
    coeffs[n] = T::one();
    let mut m = Matrix::<T>::zeros(n, n);
    for k in 1..=n {
        let mut next = a * &m;
        for i in 0..n {
            next[(i, i)] = next[(i, i)].clone() + coeffs[n - k + 1].clone();
        }
        m = next;
        let am = a * &m;
        coeffs[n - k] = -(am.trace() * T::from_ratio(1, k as i64));
    }
    coeffs
}

/// Converts field coefficients to rationals, if they all are.
pub fn rational_coeffs<T: Field>(p: &[T]) -> Option<Vec<BigRational>> {
    p.iter().map(T::as_rational).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RationalPoly {
    // lowest degree first, no trailing zeros
    coeffs: Vec<BigRational>,
}

impl RationalPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        RationalPoly { coeffs }
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    fn lead(&self) -> &BigRational {
        self.coeffs.last().expect("nonzero polynomial")
    }

    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        let dd = d.degree().expect("division by zero polynomial");
        let mut rem = self.coeffs.clone();
        let Some(nd) = self.degree() else {
            return (Self::new(vec![]), Self::new(vec![]));
        };
        if nd < dd {
            return (Self::new(vec![]), self.clone());
        }
        let mut quot = vec![BigRational::zero(); nd - dd + 1];
        let lead = d.lead().clone();
        for k in (0..=nd - dd).rev() {
            let c = &rem[k + dd] / &lead;
            if !c.is_zero() {
                for (j, dc) in d.coeffs.iter().enumerate() {
                    rem[k + j] -= &c * dc;
                }
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        (Self::new(quot), Self::new(rem))
    }

    pub fn gcd(&self, other: &Self) -> Self {
        let mut a = self.clone();
        let mut b = other.clone();
        while b.degree().is_some() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn monic(&self) -> Self {
        match self.coeffs.last() {
            None => self.clone(),
            Some(l) => Self::new(self.coeffs.iter().map(|c| c / l).collect()),
        }
    }

    /// Product of the distinct irreducible factors.
    pub fn square_free(&self) -> Self {
        let g = self.gcd(&self.derivative());
        if g.degree() == Some(0) || g.degree().is_none() {
            return self.monic();
        }
        self.div_rem(&g).0.monic()
    }

    /// Scales to integer coefficients with content 1.
    pub fn primitive_integer(&self) -> Vec<BigInt> {
        let lcm = self
            .coeffs
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = self
            .coeffs
            .iter()
            .map(|c| (c * BigRational::from_integer(lcm.clone())).to_integer())
            .collect();
        let g = ints.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
        if g.is_zero() {
            return ints;
        }
        ints.into_iter().map(|c| c / &g).collect()
    }

    /// Numerical roots from the companion matrix.
    pub fn numeric_roots(&self) -> Vec<(f64, f64)> {
        let Some(n) = self.degree() else {
            return Vec::new();
        };
        if n == 0 {
            return Vec::new();
        }
        let m = self.monic();
        let c: Vec<f64> = m
            .coeffs
            .iter()
            .map(|x| num_traits::ToPrimitive::to_f64(x).unwrap_or(f64::NAN))
            .collect();
        let comp = Matrix::from_fn(n, n, |i, j| {
            if i == 0 {
                -c[n - 1 - j]
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        });
        complex_eigenvalues(&comp)
    }

    fn sign_at(&self, x: &BigRational) -> i8 {
        let v = self.eval(x);
        if v.is_positive() {
            1
        } else if v.is_negative() {
            -1
        } else {
            0
        }
    }

    /// Tries to certify that a rational root lies next to the numerical estimate `r`.
    pub fn certify_near(&self, r: f64) -> Option<BigRational> {
        let sf = self.square_free();
        let lead = sf.primitive_integer().last()?.abs();
        let lead_q = BigRational::from_integer(lead.clone());
        let target_width = (lead_q.clone() * lead_q).recip() / BigRational::from_integer(2.into());
        let centre = rational_from_f64(r)?;
        if sf.sign_at(&centre) == 0 {
            return Some(centre);
        }
        let mut delta = rational_from_f64(1e-12 * r.abs().max(1.0))?;
        let two = BigRational::from_integer(2.into());
        let (mut lo, mut hi) = loop {
            let lo = &centre - &delta;
            let hi = &centre + &delta;
            let (sl, sh) = (sf.sign_at(&lo), sf.sign_at(&hi));
            if sl == 0 {
                return Some(lo);
            }
            if sh == 0 {
                return Some(hi);
            }
            if sl != sh {
                break (lo, hi);
            }
            delta = &delta * &two;
            if delta > rational_from_f64(1e-3 * r.abs().max(1.0))? {
                return None;
            }
        };
        let s_lo = sf.sign_at(&lo);
        while &hi - &lo >= target_width {
            let mid = (&lo + &hi) / &two;
            match sf.sign_at(&mid) {
                0 => return Some(mid),
                s if s == s_lo => lo = mid,
                _ => hi = mid,
            }
        }
        let cand = simplest_between(&lo, &hi);
        (self.eval(&cand).is_zero()).then_some(cand)
    }

    /// All rational roots visible to the numerics (distinct, ascending).
    pub fn rational_roots(&self) -> Vec<BigRational> {
        let sf = self.square_free();
        let mut out: Vec<BigRational> = Vec::new();
        if sf.degree().unwrap_or(0) == 0 {
            return out;
        }
        for (re, im) in sf.numeric_roots() {
            if im.abs() > 1e-6 * re.abs().max(1.0) {
                continue;
            }
            if let Some(q) = sf.certify_near(re) {
                if !out.contains(&q) {
                    out.push(q);
                }
            }
        }
        out.sort();
        out
    }
}

fn poly_mul<T: Field>(a: &[T], b: &[T]) -> Vec<T> {
    let mut c = vec![T::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            c[i + j] = c[i + j].clone() + x.clone() * y.clone();
        }
    }
    c
}

/// A rational polynomial whose roots include those of `p`: `p` itself when
/// its coefficients are rational, otherwise the product of its conjugates.
pub fn rational_multiple<T: Field>(p: &[T]) -> Option<RationalPoly> {
    if let Some(q) = rational_coeffs(p) {
        return Some(RationalPoly::new(q));
    }
    let orbit = T::galois_orbit(p)?;
    let prod = orbit
        .iter()
        .skip(1)
        .fold(orbit[0].clone(), |acc, c| poly_mul(&acc, c));
    rational_coeffs(&prod).map(RationalPoly::new)
}

/// Rational roots of `p` (coefficients lowest degree first), each verified
/// by exact evaluation. Empty on floating backends.
pub fn certified_rational_roots<T: Field>(p: &[T]) -> Vec<BigRational> {
    if !T::is_exact() {
        return Vec::new();
    }
    let Some(r) = rational_multiple(p) else {
        return Vec::new();
    };
    r.rational_roots()
        .into_iter()
        .filter(|x| {
            let x = T::from_rational(x);
            p.iter()
                .rev()
                .fold(T::zero(), |acc, c| acc * x.clone() + c.clone())
                .is_zero()
        })
        .collect()
}

/// An extreme root located numerically, with an exact value when a certified
/// rational root matches it.
#[derive(Debug, Clone)]
pub struct ExtremeRoot {
    pub value: f64,
    pub exact: Option<BigRational>,
}

fn matches(q: &BigRational, value: f64) -> bool {
    let m = num_traits::ToPrimitive::to_f64(q).unwrap_or(f64::NAN);
    (m - value).abs() <= 1e-8 * value.abs().max(1e-12)
}

/// Largest root modulus of a polynomial given its numerical roots.
pub fn max_modulus_root(numeric: &[(f64, f64)], certified: &[BigRational]) -> ExtremeRoot {
    let value = numeric
        .iter()
        .map(|(re, im)| re.hypot(*im))
        .fold(0.0, f64::max);
    let exact = certified
        .iter()
        .map(|q| q.abs())
        .find(|q| matches(q, value));
    ExtremeRoot { value, exact }
}

/// Smallest real part among the numerical roots.
pub fn min_real_root(numeric: &[(f64, f64)], certified: &[BigRational]) -> ExtremeRoot {
    let value = numeric
        .iter()
        .map(|(re, _)| *re)
        .fold(f64::INFINITY, f64::min);
    let exact = certified.iter().find(|q| matches(q, value)).cloned();
    ExtremeRoot { value, exact }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Surd;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn charpoly_of_diagonal() {
        let a = Matrix::diag(&[Surd::int(2), Surd::int(3)]);
        let p = charpoly(&a);
        assert_eq!(p, vec![Surd::int(6), Surd::int(-5), Surd::int(1)]);
    }

    #[test]
    fn finds_large_denominator_roots() {
        // (x - 209527/327611)^2 (x - 1/7) (x + 3)
        let r1 = q(209527, 327611);
        let lin = |r: &BigRational| RationalPoly::new(vec![-r.clone(), q(1, 1)]);
        let mul = |a: &RationalPoly, b: &RationalPoly| {
            let mut c = vec![BigRational::zero(); a.coeffs.len() + b.coeffs.len() - 1];
            for (i, x) in a.coeffs.iter().enumerate() {
                for (j, y) in b.coeffs.iter().enumerate() {
                    c[i + j] += x * y;
                }
            }
            RationalPoly::new(c)
        };
        let p = mul(
            &mul(&lin(&r1), &lin(&r1)),
            &mul(&lin(&q(1, 7)), &lin(&q(-3, 1))),
        );
        let roots = p.rational_roots();
        assert_eq!(roots, vec![q(-3, 1), q(1, 7), r1]);
    }

    #[test]
    fn irrational_roots_are_not_certified() {
        // x^2 - 2
        let p = RationalPoly::new(vec![q(-2, 1), q(0, 1), q(1, 1)]);
        assert!(p.rational_roots().is_empty());
    }

    #[test]
    fn conjugate_products_expose_rational_roots() {
        // (x - 4/5)(x - sqrt(3))
        let p = vec![
            "4/5*sqrt(3)".parse::<Surd>().unwrap(),
            "-4/5 - sqrt(3)".parse::<Surd>().unwrap(),
            Surd::one(),
        ];
        assert_eq!(certified_rational_roots(&p), vec![q(4, 5)]);
    }

    #[test]
    fn square_free_part() {
        // (x-1)^2 (x-2)
        let p = RationalPoly::new(vec![q(-2, 1), q(5, 1), q(-4, 1), q(1, 1)]);
        assert_eq!(
            p.square_free(),
            RationalPoly::new(vec![q(2, 1), q(-3, 1), q(1, 1)])
        );
    }
}
