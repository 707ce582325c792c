//! Matrix restriction systems `(S, d, {A_s}, 𝓔)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::{Field, Scalar, Surd};
use crate::linalg::{singular_values, symmetric_eigenvalues, Matrix};
use crate::symbolic::{Alphabet, Budget, Word};

pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSystem<T> {
    alphabet: Alphabet,
    dim: usize,
    maps: Vec<Matrix<T>>,
    energy: Matrix<T>,
    symmetric: bool,
}

/// Residuals and per-invariant verdicts from [`MatrixSystem::validate`].
#[derive(Debug, Clone)]
pub struct ValidationReport {
    /// `‖Σ A_sᵀ 𝓔 A_s − 𝓔‖_F`
    pub energy_residual: Scalar,
    /// `‖Σ A_s A_sᵀ − I‖_F`
    pub identity_residual: Scalar,
    pub energy_fixed: bool,
    pub identity_fixed: bool,
    pub trace_one: bool,
    pub energy_symmetric: bool,
    pub injective: bool,
    pub symmetric_maps: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.energy_fixed
            && self.identity_fixed
            && self.trace_one
            && self.energy_symmetric
            && self.injective
    }

    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.energy_fixed {
            out.push("energy form is not fixed by the dual map");
        }
        if !self.identity_fixed {
            out.push("maps do not sum to the identity");
        }
        if !self.trace_one {
            out.push("energy form does not have trace 1");
        }
        if !self.energy_symmetric {
            out.push("energy form is not symmetric");
        }
        if !self.injective {
            out.push("some map is singular");
        }
        out
    }
}

/// Invariant subspaces of `M` used for matrix representations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Full,
    Symmetric,
    Antisymmetric,
    TracelessSymmetric,
}

impl FromStr for Part {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Part::Full),
            "symmetric" => Ok(Part::Symmetric),
            "antisymmetric" => Ok(Part::Antisymmetric),
            "traceless-symmetric" => Ok(Part::TracelessSymmetric),
            other => Err(Error::InvalidArgument(format!(
                "unknown subspace `{other}`"
            ))),
        }
    }
}

/// Exponent of a Schatten norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchattenP {
    Finite(f64),
    Infinity,
}

impl fmt::Display for SchattenP {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchattenP::Finite(p) => write!(f, "{p}"),
            SchattenP::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for SchattenP {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" | "infinity" | "∞" => Ok(SchattenP::Infinity),
            _ => {
                let p: f64 = s
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad Schatten exponent `{s}`")))?;
                if p.is_infinite() && p > 0.0 {
                    Ok(SchattenP::Infinity)
                } else {
                    Ok(SchattenP::Finite(p))
                }
            }
        }
    }
}

impl<T: Field> MatrixSystem<T> {
    /// Assembles a system, checking shapes only. Use [`validate`](Self::validate)
    /// for the fixed-point equations.
    pub fn new(alphabet: Alphabet, maps: Vec<Matrix<T>>, energy: Matrix<T>) -> Result<Self> {
        if maps.len() != alphabet.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} symbols but {} maps",
                alphabet.len(),
                maps.len()
            )));
        }
        if !energy.is_square() || energy.rows() == 0 {
            return Err(Error::DimensionMismatch(
                "energy form must be square".into(),
            ));
        }
        let dim = energy.rows();
        for (name, a) in alphabet.names().iter().zip(&maps) {
            if a.rows() != dim || a.cols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "map `{name}` is {}x{}, expected {dim}x{dim}",
                    a.rows(),
                    a.cols()
                )));
            }
        }
        let symmetric = maps.iter().all(Matrix::is_symmetric);
        Ok(MatrixSystem {
            alphabet,
            dim,
            maps,
            energy,
            symmetric,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Number of symbols `|S|`.
    pub fn base(&self) -> usize {
        self.maps.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn maps(&self) -> &[Matrix<T>] {
        &self.maps
    }

    pub fn map(&self, s: usize) -> &Matrix<T> {
        &self.maps[s]
    }

    pub fn energy(&self) -> &Matrix<T> {
        &self.energy
    }

    pub fn symmetric_flag(&self) -> bool {
        self.symmetric
    }

    pub fn to_f64(&self) -> MatrixSystem<f64> {
        MatrixSystem {
            alphabet: self.alphabet.clone(),
            dim: self.dim,
            maps: self.maps.iter().map(Matrix::to_f64).collect(),
            energy: self.energy.to_f64(),
            symmetric: self.symmetric,
        }
    }

    fn check_dim(&self, b: &Matrix<T>) -> Result<()> {
        if b.rows() != self.dim || b.cols() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {0}x{0} matrix, got {1}x{2}",
                self.dim,
                b.rows(),
                b.cols()
            )));
        }
        Ok(())
    }

    /// Residuals of both fixed-point equations and the remaining invariants.
    /// Exact systems must have zero residuals; float systems are compared with `tol`.
    pub fn validate(&self, tol: f64) -> Result<ValidationReport> {
        let d = self.dim;
        let e = &self.energy;
        let energy_symmetric = if T::is_exact() {
            e.is_symmetric()
        } else {
            (e - &e.transpose()).max_abs_f64() <= tol
        };
        if T::is_exact() {
            if !e.leading_minors_positive() {
                let ev = symmetric_eigenvalues(&e.to_f64());
                return Err(Error::NotPositiveDefinite {
                    eigenvalue: ev.first().copied().unwrap_or(0.0),
                });
            }
        } else {
            let ev = symmetric_eigenvalues(&e.to_f64());
            if let Some(&min) = ev.first() {
                if min <= 0.0 {
                    return Err(Error::NotPositiveDefinite { eigenvalue: min });
                }
            }
        }
        let r1 = &self.apply_m_star(e)? - e;
        let r2 = &self.apply_m(&Matrix::identity(d))? - &Matrix::identity(d);
        let trace_err = e.trace() - T::one();
        let ok = |m: &Matrix<T>| {
            if T::is_exact() {
                m.is_zero()
            } else {
                m.frobenius_f64() <= tol
            }
        };
        let injective = self.maps.iter().all(|a| {
            let det = a.determinant();
            if T::is_exact() {
                !det.is_zero()
            } else {
                det.to_f64().abs() > tol
            }
        });
        Ok(ValidationReport {
            energy_fixed: ok(&r1),
            identity_fixed: ok(&r2),
            energy_residual: frobenius(&r1),
            identity_residual: frobenius(&r2),
            trace_one: trace_err.near_zero(tol),
            energy_symmetric,
            injective,
            symmetric_maps: self.symmetric,
        })
    }

    /// Validates and turns failures into an error.
    pub fn require_valid(&self) -> Result<()> {
        let report = self.validate(DEFAULT_TOL)?;
        if report.passed() {
            Ok(())
        } else {
            Err(Error::Invalid(report.failures().join("; ")))
        }
    }

    /// `⟨A, B⟩_𝓔 = Tr(Bᵀ 𝓔 A)`.
    pub fn inner_e(&self, a: &Matrix<T>, b: &Matrix<T>) -> Result<T> {
        self.check_dim(a)?;
        self.check_dim(b)?;
        Ok(self.inner_unchecked(a, b))
    }

    pub(crate) fn inner_unchecked(&self, a: &Matrix<T>, b: &Matrix<T>) -> T {
        // Tr(Bᵀ 𝓔 A) = Σ_ijk B_ki 𝓔_kj A_ji
        let ea = &self.energy * a;
        b.trace_product_t(&ea)
    }

    /// `M(B) = Σ_s A_s B A_sᵀ`.
    pub fn apply_m(&self, b: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_dim(b)?;
        Ok(self.apply_m_unchecked(b))
    }

    pub(crate) fn apply_m_unchecked(&self, b: &Matrix<T>) -> Matrix<T> {
        let mut acc = Matrix::zeros(self.dim, self.dim);
        for a in &self.maps {
            acc = &acc + &(&(a * b) * &a.transpose());
        }
        acc
    }

    /// `M*(B) = Σ_s A_sᵀ B A_s`.
    pub fn apply_m_star(&self, b: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_dim(b)?;
        Ok(self.apply_m_star_unchecked(b))
    }

    pub(crate) fn apply_m_star_unchecked(&self, b: &Matrix<T>) -> Matrix<T> {
        let mut acc = Matrix::zeros(self.dim, self.dim);
        for a in &self.maps {
            acc = &acc + &(&(&a.transpose() * b) * a);
        }
        acc
    }

    /// `A(α)`, with `A(αs) = A_s A(α)` and `A(ε) = I`.
    pub fn word_matrix(&self, w: &Word) -> Result<Matrix<T>> {
        let mut acc = Matrix::identity(self.dim);
        for &s in w.symbols() {
            let a = self
                .maps
                .get(s)
                .ok_or_else(|| Error::UnknownSymbol(s.to_string()))?;
            acc = a * &acc;
        }
        Ok(acc)
    }

    /// `A(α)` for every `α ∈ S^k`, in lexicographic order.
    pub fn level_matrices(&self, k: usize, budget: &Budget) -> Result<Vec<Matrix<T>>> {
        budget.check(self.base(), k)?;
        let mut level = vec![Matrix::identity(self.dim)];
        for _ in 0..k {
            level = self.next_level(&level);
        }
        Ok(level)
    }

    pub(crate) fn next_level(&self, level: &[Matrix<T>]) -> Vec<Matrix<T>> {
        let mut next = Vec::with_capacity(level.len() * self.base());
        for m in level {
            for a in &self.maps {
                next.push(a * m);
            }
        }
        next
    }

    /// Spanning set of a subspace, before orthonormalization.
    pub(crate) fn spanning_set(&self, part: Part) -> Vec<Matrix<T>> {
        let d = self.dim;
        let unit = |i: usize, j: usize| {
            let mut m = Matrix::zeros(d, d);
            m[(i, j)] = T::one();
            m
        };
        let sym_unit = |i: usize, j: usize| {
            let mut m = unit(i, j);
            m[(j, i)] = T::one();
            m
        };
        let project = |x: Matrix<T>| {
            let c = self.inner_unchecked(&x, &Matrix::identity(d));
            &x - &Matrix::identity(d).scale(&c)
        };
        let mut traceless = Vec::new();
        for i in 0..d {
            for j in i..d {
                if i == j && i == d - 1 {
                    continue;
                }
                let m = if i == j { unit(i, i) } else { sym_unit(i, j) };
                traceless.push(project(m));
            }
        }
        let mut anti = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                let mut m = unit(i, j);
                m[(j, i)] = -T::one();
                anti.push(m);
            }
        }
        match part {
            Part::TracelessSymmetric => traceless,
            Part::Antisymmetric => anti,
            Part::Symmetric => {
                let mut v = vec![Matrix::identity(d)];
                v.extend(traceless);
                v
            }
            Part::Full => {
                let mut v = vec![Matrix::identity(d)];
                v.extend(traceless);
                v.extend(anti);
                v
            }
        }
    }

    /// Orthonormal basis of a subspace under `⟨·,·⟩_𝓔`, ordered
    /// `[I, traceless symmetric (E_ii, then E_ij + E_ji), antisymmetric]`
    /// restricted to the requested part, each projected and Gram–Schmidt
    /// orthonormalized in that order.
    pub fn orthonormal_basis(&self, part: Part) -> Result<Vec<Matrix<T>>> {
        let span = self.spanning_set(part);
        // orthogonalize without normalizing so exact entries stay in the
        // field of the inputs, then normalize at the end
        let mut ortho: Vec<(Matrix<T>, T)> = Vec::new();
        for v in span {
            let mut w = v;
            for (u, nu) in &ortho {
                let c = self.inner_unchecked(&w, u).div(nu).expect("nonzero norm");
                w = &w - &u.scale(&c);
            }
            let n = self.inner_unchecked(&w, &w);
            ortho.push((w, n));
        }
        ortho
            .into_iter()
            .map(|(w, n)| {
                let r = n.sqrt().ok_or_else(|| {
                    Error::Inexact(format!(
                        "square root of basis norm {} is not representable",
                        n.to_f64()
                    ))
                })?;
                Ok(w.scale(&r.inv().expect("nonzero norm")))
            })
            .collect()
    }

    /// Matrix of a linear map on the span of `basis`, expressed in that basis
    /// (coordinates by solving the Gram system, so any basis works).
    pub(crate) fn represent(
        &self,
        basis: &[Matrix<T>],
        f: impl Fn(&Matrix<T>) -> Matrix<T>,
    ) -> Matrix<T> {
        let n = basis.len();
        if n == 0 {
            return Matrix::zeros(0, 0);
        }
        let gram = Matrix::from_fn(n, n, |i, j| self.inner_unchecked(&basis[j], &basis[i]));
        let images: Vec<Matrix<T>> = basis.iter().map(&f).collect();
        let rhs = Matrix::from_fn(n, n, |i, j| self.inner_unchecked(&images[j], &basis[i]));
        gram.solve(&rhs).expect("basis is linearly independent")
    }

    /// `M` restricted to an invariant subspace, in the basis of
    /// [`orthonormal_basis`](Self::orthonormal_basis).
    pub fn matrix_rep_m(&self, part: Part) -> Result<Matrix<T>> {
        let basis = self.orthonormal_basis(part)?;
        let n = basis.len();
        let images: Vec<Matrix<T>> = basis.iter().map(|b| self.apply_m_unchecked(b)).collect();
        Ok(Matrix::from_fn(n, n, |i, j| {
            self.inner_unchecked(&images[j], &basis[i])
        }))
    }

    /// Multiplies every map by `t`.
    pub fn scaled_maps(&self, t: &T) -> Vec<Matrix<T>> {
        self.maps.iter().map(|a| a.scale(t)).collect()
    }
}

/// Frobenius norm, exact when the square root is representable.
pub fn frobenius<T: Field>(m: &Matrix<T>) -> Scalar {
    let sq = m.frobenius_sq();
    match sq.sqrt() {
        Some(r) if T::is_exact() => r.to_scalar(),
        _ => Scalar::Float(sq.to_f64().max(0.0).sqrt()),
    }
}

/// Schatten `p`-norm over singular values. Exact for `p = 2` and for 2×2
/// matrices with `p ∈ {1, ∞}` when the square roots are representable.
pub fn schatten_norm<T: Field>(b: &Matrix<T>, p: SchattenP) -> Result<Scalar> {
    if let SchattenP::Finite(p) = p {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "Schatten exponent must be at least 1, got {p}"
            )));
        }
    }
    if !b.is_square() {
        return Err(Error::DimensionMismatch(
            "Schatten norm of a non-square matrix".into(),
        ));
    }
    if T::is_exact() {
        if let Some(s) = schatten_exact(b, p) {
            return Ok(s.to_scalar());
        }
    }
    let sv = singular_values(&b.to_f64());
    let v = match p {
        SchattenP::Infinity => sv.first().copied().unwrap_or(0.0),
        SchattenP::Finite(1.0) => sv.iter().sum(),
        SchattenP::Finite(p) => sv.iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p),
    };
    Ok(Scalar::Float(v))
}

fn schatten_exact<T: Field>(b: &Matrix<T>, p: SchattenP) -> Option<T> {
    let t = b.frobenius_sq();
    if p == SchattenP::Finite(2.0) {
        return t.sqrt();
    }
    match b.dim() {
        0 => Some(T::zero()),
        1 => Some(b[(0, 0)].abs()),
        2 => {
            // σ₁² + σ₂² = t, σ₁σ₂ = |det|
            let det = b.determinant().abs();
            match p {
                SchattenP::Finite(1.0) => (t + det.clone() + det).sqrt(),
                SchattenP::Infinity => {
                    let disc = t.clone() * t.clone() - T::from_i64(4) * det.clone() * det;
                    let root = disc.sqrt()?;
                    ((t + root) * T::from_ratio(1, 2)).sqrt()
                }
                _ => None,
            }
        }
        _ => None,
    }
}

impl MatrixSystem<Surd> {
    /// Parses exact entries from strings such as `"3/5"` or `"1/15*sqrt(15)"`.
    pub fn from_strings(
        alphabet: Alphabet,
        maps: Vec<Vec<Vec<String>>>,
        energy: Vec<Vec<String>>,
    ) -> Result<Self> {
        let parse = |rows: Vec<Vec<String>>| -> Result<Matrix<Surd>> {
            let rows = rows
                .into_iter()
                .map(|r| {
                    r.iter()
                        .map(|s| s.parse::<Surd>().map_err(|e| Error::Parse(e.0)))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Matrix::from_rows(rows)
        };
        let maps = maps.into_iter().map(parse).collect::<Result<Vec<_>>>()?;
        Self::new(alphabet, maps, parse(energy)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;

    fn s(x: &str) -> Surd {
        x.parse().unwrap()
    }

    fn sigma_z() -> Matrix<Surd> {
        Matrix::diag(&[Surd::int(1), Surd::int(-1)])
    }

    fn sigma_x() -> Matrix<Surd> {
        Matrix::from_rows(vec![
            vec![Surd::zero(), Surd::one()],
            vec![Surd::one(), Surd::zero()],
        ])
        .unwrap()
    }

    #[test]
    fn sg_validates_exactly() {
        let sg = builtin::sg();
        let r = sg.validate(0.0).unwrap();
        assert!(r.passed(), "{:?}", r.failures());
        assert_eq!(r.energy_residual, Scalar::Exact(Surd::zero()));
        assert_eq!(r.identity_residual, Scalar::Exact(Surd::zero()));
        assert!(r.symmetric_maps);
    }

    #[test]
    fn bernoulli_validates() {
        let b = builtin::bernoulli(&[s("1/2"), s("1/2")]).unwrap();
        assert!(b.validate(0.0).unwrap().passed());
    }

    #[test]
    fn identity_maps_fail_second_equation() {
        let sg = builtin::sg();
        let maps = vec![Matrix::identity(2); 3];
        let bad = MatrixSystem::new(sg.alphabet().clone(), maps, sg.energy().clone()).unwrap();
        let r = bad.validate(0.0).unwrap();
        assert!(!r.identity_fixed);
        // ‖3I − I‖_F = 2√2
        assert_eq!(r.identity_residual, Scalar::Exact(s("2*sqrt(2)")));
    }

    #[test]
    fn non_positive_energy_is_rejected() {
        let sg = builtin::sg();
        let e = Matrix::diag(&[Surd::int(2), Surd::int(-1)]);
        let bad = MatrixSystem::new(sg.alphabet().clone(), sg.maps().to_vec(), e).unwrap();
        assert!(matches!(
            bad.validate(0.0),
            Err(Error::NotPositiveDefinite { eigenvalue }) if eigenvalue == -1.0
        ));
    }

    #[test]
    fn shape_errors() {
        let sg = builtin::sg();
        let r = MatrixSystem::new(
            sg.alphabet().clone(),
            vec![
                Matrix::identity(2),
                Matrix::identity(3),
                Matrix::identity(2),
            ],
            sg.energy().clone(),
        );
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
        assert!(sg.apply_m(&Matrix::identity(3)).is_err());
    }

    #[test]
    fn sg_inner_products() {
        let sg = builtin::sg();
        let i = Matrix::identity(2);
        assert_eq!(sg.inner_e(&i, &i).unwrap(), Surd::one());
        let a0 = sg.map(0);
        assert_eq!(sg.inner_e(a0, a0).unwrap(), s("1/3"));
        assert_eq!(sg.inner_e(&sigma_z(), &i).unwrap(), Surd::zero());
    }

    #[test]
    fn sg_m_action() {
        let sg = builtin::sg();
        let f = s("4/5");
        assert_eq!(sg.apply_m(&sigma_z()).unwrap(), sigma_z().scale(&f));
        assert_eq!(sg.apply_m(&sigma_x()).unwrap(), sigma_x().scale(&f));
        assert_eq!(
            sg.apply_m(&Matrix::identity(2)).unwrap(),
            Matrix::identity(2)
        );
        assert_eq!(sg.apply_m_star(sg.energy()).unwrap(), sg.energy().clone());
    }

    #[test]
    fn sg_representations() {
        let sg = builtin::sg();
        let ts = sg.matrix_rep_m(Part::TracelessSymmetric).unwrap();
        assert_eq!(ts, Matrix::diag(&[s("4/5"), s("4/5")]));
        let full = sg.matrix_rep_m(Part::Full).unwrap();
        assert_eq!(full.dim(), 4);
        // antisymmetric direction: M(J) = Σ det(A_s) J = 3/5 J
        assert_eq!(full, Matrix::diag(&[s("1"), s("4/5"), s("4/5"), s("3/5")]));
        let b = builtin::bernoulli(&[s("1/2"), s("1/2")]).unwrap();
        assert_eq!(b.matrix_rep_m(Part::TracelessSymmetric).unwrap().dim(), 0);
    }

    #[test]
    fn schatten_norms() {
        let m = Matrix::diag(&[Surd::int(3), Surd::int(-4)]);
        assert_eq!(
            schatten_norm(&m, SchattenP::Finite(1.0)).unwrap(),
            Scalar::Exact(Surd::int(7))
        );
        assert_eq!(
            schatten_norm(&m, SchattenP::Infinity).unwrap(),
            Scalar::Exact(Surd::int(4))
        );
        assert_eq!(
            schatten_norm(&Matrix::<Surd>::identity(3), SchattenP::Infinity)
                .unwrap()
                .to_f64(),
            1.0
        );
        let sg = builtin::sg();
        let mz = sg.apply_m(&sigma_z()).unwrap();
        assert_eq!(
            schatten_norm(&mz, SchattenP::Finite(1.0)).unwrap(),
            Scalar::Exact(s("8/5"))
        );
        assert!(schatten_norm(&m, SchattenP::Finite(0.5)).is_err());
        let f = schatten_norm(&m.to_f64(), SchattenP::Finite(3.0)).unwrap();
        assert!((f.to_f64() - (27.0f64 + 64.0).powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn word_matrices_compose_on_the_left() {
        let sg = builtin::sg();
        let w = Word(vec![0, 1, 2]);
        let direct = &(sg.map(2) * sg.map(1)) * sg.map(0);
        assert_eq!(sg.word_matrix(&w).unwrap(), direct);
        assert_eq!(sg.word_matrix(&Word::empty()).unwrap(), Matrix::identity(2));
        assert!(sg.word_matrix(&Word(vec![3])).is_err());
        let level = sg.level_matrices(3, &Budget::default()).unwrap();
        assert_eq!(level[w.index(3)], direct);
    }
}
