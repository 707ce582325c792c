//! Scalar backends.
//!
//! Every algorithm in the crate is generic over [`Field`]. Two backends are
//! provided: [`f64`] and the exact multiquadratic field [`Surd`].

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

pub use crate::surd::Surd;

/// Which arithmetic a system is evaluated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Exact,
    Float,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::Exact => f.write_str("exact"),
            Backend::Float => f.write_str("float"),
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Backend::Exact),
            "float" => Ok(Backend::Float),
            other => Err(format!("unknown backend `{other}` (expected exact|float)")),
        }
    }
}

/// A commutative field with enough structure for the linear algebra used here.
pub trait Field:
    Clone
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    const BACKEND: Backend;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_rational(q: &BigRational) -> Self;
    fn is_zero(&self) -> bool;
    fn inv(&self) -> Option<Self>;
    /// Square root inside the field, when it exists and can be found.
    fn sqrt(&self) -> Option<Self>;
    fn to_f64(&self) -> f64;
    /// Exact sign: -1, 0 or 1.
    fn signum(&self) -> i8;
    /// The value as a rational number, when it is one.
    fn as_rational(&self) -> Option<BigRational>;
    fn to_scalar(&self) -> Scalar;
    /// Conversion from the exact field (lossy on floating backends).
    fn from_surd(x: &Surd) -> Self;

    /// Images of the coefficient list `p` under every field automorphism the
    /// backend knows about (including the identity).
    fn galois_orbit(_p: &[Self]) -> Option<Vec<Vec<Self>>> {
        None
    }

    fn from_i64(n: i64) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(n)))
    }

    fn from_ratio(n: i64, d: i64) -> Self {
        Self::from_rational(&BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    fn is_exact() -> bool {
        Self::BACKEND == Backend::Exact
    }

    fn abs(&self) -> Self {
        if self.signum() < 0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn div(&self, rhs: &Self) -> Option<Self> {
        rhs.inv().map(|r| self.clone() * r)
    }

    /// Exact zero on exact backends, `|x| <= tol` on floating ones.
    fn near_zero(&self, tol: f64) -> bool {
        if Self::is_exact() {
            self.is_zero()
        } else {
            self.to_f64().abs() <= tol
        }
    }

    fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = acc * self.clone();
        }
        acc
    }

    /// Ordering by exact sign of the difference.
    fn less_eq(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).signum() <= 0
    }
}

impl Field for f64 {
    const BACKEND: Backend = Backend::Float;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_rational(q: &BigRational) -> Self {
        q.to_f64().unwrap_or(f64::NAN)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn inv(&self) -> Option<Self> {
        if *self == 0.0 {
            None
        } else {
            Some(1.0 / self)
        }
    }
    fn sqrt(&self) -> Option<Self> {
        if *self < 0.0 {
            None
        } else {
            Some(f64::sqrt(*self))
        }
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn signum(&self) -> i8 {
        if *self > 0.0 {
            1
        } else if *self < 0.0 {
            -1
        } else {
            0
        }
    }
    fn as_rational(&self) -> Option<BigRational> {
        None
    }
    fn to_scalar(&self) -> Scalar {
        Scalar::Float(*self)
    }
    fn from_surd(x: &Surd) -> Self {
        x.to_f64()
    }
}

/// A reported number tagged with the backend that produced it.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Exact(Surd),
    Float(f64),
}

impl Scalar {
    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(s) => s.to_f64(),
            Scalar::Float(x) => *x,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        match self {
            Scalar::Exact(s) => s.as_rational(),
            Scalar::Float(_) => None,
        }
    }

    pub fn zero_exact() -> Self {
        Scalar::Exact(Surd::zero())
    }
}

/// Floats are printed with 17 significant digits.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{x:.16e}")
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(s) => write!(f, "{s}"),
            Scalar::Float(x) => f.write_str(&format_float(*x)),
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Scalar::Exact(s) => serializer.serialize_str(&s.to_string()),
            Scalar::Float(x) => serializer.serialize_str(&format_float(*x)),
        }
    }
}
