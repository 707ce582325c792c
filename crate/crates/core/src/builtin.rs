//! Built-in systems.

use crate::error::{Error, Result};
use crate::field::{Field, Surd};
use crate::gasket;
use crate::linalg::Matrix;
use crate::matsys::MatrixSystem;
use crate::symbolic::Alphabet;

/// Rotation by `2π/3`.
pub fn rotation() -> Matrix<Surd> {
    let c = Surd::ratio(-1, 2);
    let s = Surd::sqrt_rational(&num_rational::BigRational::new(3.into(), 4.into()))
        .expect("sqrt(3)/2");
    Matrix::from_rows(vec![vec![c.clone(), -s.clone()], vec![s, c]]).expect("2x2")
}

/// The Sierpiński gasket: `A_s = R^{-s} D R^s`, `D = diag(3, 1)/√15`, `𝓔 = I/2`.
pub fn sg() -> MatrixSystem<Surd> {
    let r = rotation();
    let r_inv = r.transpose();
    let root15: Surd = "1/15*sqrt(15)".parse().expect("literal");
    let d = Matrix::diag(&[root15.clone() * Surd::int(3), root15]);
    let mut maps = Vec::new();
    let mut left = Matrix::identity(2);
    let mut right = Matrix::identity(2);
    for _ in 0..3 {
        maps.push(&(&left * &d) * &right);
        left = &left * &r_inv;
        right = &r * &right;
    }
    let energy = Matrix::identity(2).scale(&Surd::ratio(1, 2));
    MatrixSystem::new(Alphabet::numbered(3), maps, energy).expect("well-formed")
}

/// One-dimensional system with `A_s = √p_s`, giving the Bernoulli measure with
/// weights `p_s`.
pub fn bernoulli(p: &[Surd]) -> Result<MatrixSystem<Surd>> {
    if p.is_empty() {
        return Err(Error::InvalidArgument("empty probability vector".into()));
    }
    let mut total = Surd::zero();
    let mut maps = Vec::new();
    for x in p {
        if x.signum() <= 0 {
            return Err(Error::InvalidArgument(format!(
                "probabilities must be positive, got {x}"
            )));
        }
        total = total + x.clone();
        let q = x
            .sqrt()
            .ok_or_else(|| Error::Inexact(format!("no exact square root of {x}")))?;
        maps.push(Matrix::diag(&[q]));
    }
    if total != Surd::one() {
        return Err(Error::InvalidArgument(format!(
            "probabilities sum to {total}, expected 1"
        )));
    }
    MatrixSystem::new(Alphabet::numbered(p.len()), maps, Matrix::identity(1))
}

/// Looks up a built-in by name: `sg`, `sg2`…`sg6`, or `bernoulli:p1,p2,…`.
pub fn by_name(name: &str) -> Result<MatrixSystem<Surd>> {
    if let Some(list) = name.strip_prefix("bernoulli:") {
        let p = list
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<Surd>()
                    .map_err(|e| Error::Parse(format!("bernoulli weight: {}", e.0)))
            })
            .collect::<Result<Vec<_>>>()?;
        return bernoulli(&p);
    }
    match name {
        "sg" => Ok(sg()),
        _ => match name
            .strip_prefix("sg")
            .and_then(|n| n.parse::<usize>().ok())
        {
            Some(n) => gasket::generate_system(n),
            None => Err(Error::InvalidArgument(format!("unknown built-in `{name}`"))),
        },
    }
}
