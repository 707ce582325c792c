//! Spectral constants: `θ₁`, Schatten contraction rates, irreducibility
//! constants `c_k`, `θ₂`, and Perron renormalization of raw maps.

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Field, Scalar};
use crate::linalg::{complex_eigenvalues, symmetric_eigenvalues, Matrix};
use crate::matsys::{schatten_norm, MatrixSystem, Part, SchattenP, DEFAULT_TOL};
use crate::poly::{certified_rational_roots, charpoly, max_modulus_root, min_real_root};
use crate::surd::rational_from_f64;
use crate::symbolic::{Alphabet, Budget};

/// Spectral radius of `M` on the complement of `I`.
#[derive(Debug, Clone, Serialize)]
pub struct Theta1 {
    pub value: Scalar,
    pub exact: bool,
    /// Eigenvalues `(re, im)` on traceless symmetric matrices.
    pub symmetric_eigenvalues: Vec<(f64, f64)>,
    /// Eigenvalues `(re, im)` on antisymmetric matrices.
    pub antisymmetric_eigenvalues: Vec<(f64, f64)>,
    /// `θ₁ < 1`.
    pub contracting: bool,
}

fn to_scalar<T: Field>(exact: Option<&BigRational>, value: f64) -> (Scalar, bool) {
    match exact {
        Some(q) if T::is_exact() => (T::from_rational(q).to_scalar(), true),
        _ => (Scalar::Float(value), false),
    }
}

fn zero_scalar<T: Field>() -> Scalar {
    T::zero().to_scalar()
}

struct PartSpectrum {
    eigenvalues: Vec<(f64, f64)>,
    radius: f64,
    exact: Option<BigRational>,
}

fn part_spectrum<T: Field>(sys: &MatrixSystem<T>, part: Part) -> PartSpectrum {
    let basis = sys.spanning_set(part);
    let rep = sys.represent(&basis, |b| sys.apply_m_unchecked(b));
    let eigenvalues = complex_eigenvalues(&rep.to_f64());
    let certified = certified_rational_roots(&charpoly(&rep));
    let r = max_modulus_root(&eigenvalues, &certified);
    PartSpectrum {
        eigenvalues,
        radius: r.value,
        exact: r.exact,
    }
}

/// `θ₁`: the largest modulus of an eigenvalue of `M` on `{B : ⟨B, I⟩_𝓔 = 0}`,
/// the maximum over the traceless symmetric and antisymmetric parts.
///
/// The result is exact when the characteristic polynomial of the part that
/// attains the maximum has a certified rational root of that modulus.
/// In dimension 1 the subspace is trivial and `θ₁ = 0`.
pub fn theta1<T: Field>(sys: &MatrixSystem<T>) -> Result<Theta1> {
    let sym = part_spectrum(sys, Part::TracelessSymmetric);
    let anti = part_spectrum(sys, Part::Antisymmetric);
    let value = sym.radius.max(anti.radius);
    let exact = [&sym, &anti]
        .into_iter()
        .filter(|p| (p.radius - value).abs() <= 1e-12 * value.max(1e-300) || p.radius == value)
        .find_map(|p| p.exact.clone());
    let (scalar, is_exact) = if sym.eigenvalues.is_empty() && anti.eigenvalues.is_empty() {
        (zero_scalar::<T>(), T::is_exact())
    } else {
        to_scalar::<T>(exact.as_ref(), value)
    };
    Ok(Theta1 {
        value: scalar,
        exact: is_exact,
        symmetric_eigenvalues: sym.eigenvalues,
        antisymmetric_eigenvalues: anti.eigenvalues,
        contracting: value < 1.0 - 1e-12,
    })
}

/// Number of random probes used by [`theta1_schatten`] when `M` is not a
/// multiple of the identity on traceless symmetric matrices.
pub const SCHATTEN_PROBES: usize = 2000;

/// Operator norm of `M` on traceless symmetric matrices measured in the
/// Schatten `p`-norm.
///
/// When `M` acts as a scalar `c` on that subspace the answer is `|c|`, exact
/// on the exact backend. Otherwise the ratio `‖M(B)‖_p / ‖B‖_p` is maximized
/// over the basis vectors, [`SCHATTEN_PROBES`] seeded random directions and a
/// coordinate hill-climb from the best probe; the result is then a lower
/// estimate of the norm.
pub fn theta1_schatten<T: Field>(sys: &MatrixSystem<T>, p: SchattenP) -> Result<Scalar> {
    if !sys.symmetric_flag() {
        return Err(Error::NotSymmetric);
    }
    schatten_norm(&Matrix::<T>::identity(1), p)?;
    let basis = sys.spanning_set(Part::TracelessSymmetric);
    if basis.is_empty() {
        return Ok(zero_scalar::<T>());
    }
    if let Some(c) = scalar_action(sys, &basis) {
        return Ok(if T::is_exact() {
            c.abs().to_scalar()
        } else {
            Scalar::Float(c.to_f64().abs())
        });
    }
    let fsys = sys.to_f64();
    let fbasis: Vec<Matrix<f64>> = basis.iter().map(Matrix::to_f64).collect();
    let ratio = |x: &[f64]| -> f64 {
        let b = combine(&fbasis, x);
        let nb = schatten_norm(&b, p).map(|s| s.to_f64()).unwrap_or(0.0);
        if nb == 0.0 {
            return 0.0;
        }
        let mb = fsys.apply_m_unchecked(&b);
        schatten_norm(&mb, p).map(|s| s.to_f64()).unwrap_or(0.0) / nb
    };
    let n = fbasis.len();
    let mut best_x = vec![0.0; n];
    let mut best = f64::NEG_INFINITY;
    let consider = |x: Vec<f64>, best: &mut f64, best_x: &mut Vec<f64>| {
        let r = ratio(&x);
        if r > *best {
            *best = r;
            *best_x = x;
        }
    };
    for i in 0..n {
        let mut x = vec![0.0; n];
        x[i] = 1.0;
        consider(x, &mut best, &mut best_x);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..SCHATTEN_PROBES {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        consider(x, &mut best, &mut best_x);
    }
    let mut step = 0.5;
    while step > 1e-10 {
        let mut improved = false;
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut x = best_x.clone();
                x[i] += sign * step;
                let r = ratio(&x);
                if r > best {
                    best = r;
                    best_x = x;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(Scalar::Float(best))
}

fn combine(basis: &[Matrix<f64>], x: &[f64]) -> Matrix<f64> {
    let d = basis[0].rows();
    basis
        .iter()
        .zip(x)
        .fold(Matrix::zeros(d, d), |acc, (b, c)| &acc + &b.scale(c))
}

/// `Some(c)` when `M(b) = c·b` for every basis element.
fn scalar_action<T: Field>(sys: &MatrixSystem<T>, basis: &[Matrix<T>]) -> Option<T> {
    let mut c: Option<T> = None;
    for b in basis {
        let mb = sys.apply_m_unchecked(b);
        // pick a coordinate where b is nonzero
        let (i, j) = (0..b.rows())
            .flat_map(|i| (0..b.cols()).map(move |j| (i, j)))
            .max_by(|x, y| b[*x].to_f64().abs().total_cmp(&b[*y].to_f64().abs()))?;
        let ci = mb[(i, j)].div(&b[(i, j)])?;
        let diff = &mb - &b.scale(&ci);
        let ok = if T::is_exact() {
            diff.is_zero()
        } else {
            diff.max_abs_f64() <= DEFAULT_TOL
        };
        if !ok {
            return None;
        }
        match &c {
            None => c = Some(ci),
            Some(prev) => {
                if !(prev.clone() - ci).near_zero(DEFAULT_TOL) {
                    return None;
                }
            }
        }
    }
    c
}

/// Irreducibility constant `c_k` and the eigenvalue data behind it.
#[derive(Debug, Clone, Serialize)]
pub struct IrreducibilityConstant {
    pub k: usize,
    pub value: Scalar,
    pub exact: bool,
    /// All generalized eigenvalues of the Gram form, ascending.
    pub eigenvalues: Vec<f64>,
}

/// Words per parallel chunk are grouped by a prefix of this many symbols
/// (or fewer when `k` is small).
fn prefix_len(base: usize, k: usize) -> usize {
    let mut p = 0;
    let mut n = 1usize;
    while p < k && n < 256 {
        n *= base;
        p += 1;
    }
    p
}

/// `Σ_{α∈S^k} v_α v_αᵀ` with `v_α[i] = Tr(A(α)ᵀ 𝓔 A(α) b_i)`.
///
/// Partial sums are computed in parallel per prefix and combined in
/// lexicographic order, so the result does not depend on the thread count.
fn gram_form<T: Field>(
    sys: &MatrixSystem<T>,
    basis: &[Matrix<T>],
    k: usize,
    budget: &Budget,
) -> Result<Matrix<T>> {
    budget.check(sys.base(), k)?;
    let m = basis.len();
    let p = prefix_len(sys.base(), k);
    let prefixes = sys.level_matrices(p, budget)?;
    let suffix_forms: Vec<Matrix<T>> = sys
        .level_matrices(k - p, budget)?
        .into_iter()
        .map(|a| &(&a.transpose() * sys.energy()) * &a)
        .collect();
    let partials: Vec<Matrix<T>> = prefixes
        .par_iter()
        .map(|a| {
            let at = a.transpose();
            let mut g: Matrix<T> = Matrix::zeros(m, m);
            for q in &suffix_forms {
                // A(αγ) = A(γ) A(α)
                let form = &(&at * q) * a;
                let v: Vec<T> = basis.iter().map(|b| form.trace_product_t(b)).collect();
                for i in 0..m {
                    for j in i..m {
                        let x = v[i].clone() * v[j].clone();
                        g[(i, j)] = g[(i, j)].clone() + x;
                    }
                }
            }
            g
        })
        .collect();
    let mut g = Matrix::zeros(m, m);
    for part in &partials {
        g = &g + part;
    }
    for i in 0..m {
        for j in 0..i {
            g[(i, j)] = g[(j, i)].clone();
        }
    }
    Ok(g)
}

/// `c_k = min Σ_{α∈S^k} ⟨A(α)F, A(α)⟩_𝓔²` over symmetric `F` with
/// `‖F‖_𝓔 = 1` and `⟨F, I⟩_𝓔 = 0`, computed as the smallest generalized
/// eigenvalue of the Gram form against the `𝓔`-metric.
///
/// Not applicable in dimension 1, where the constraint set is empty.
pub fn c_k<T: Field>(
    sys: &MatrixSystem<T>,
    k: usize,
    budget: &Budget,
) -> Result<IrreducibilityConstant> {
    if k == 0 {
        return Err(Error::InvalidArgument("c_k needs k ≥ 1".into()));
    }
    let basis = sys.spanning_set(Part::TracelessSymmetric);
    if basis.is_empty() {
        return Err(Error::NotApplicable(
            "irreducibility constants need dimension at least 2".into(),
        ));
    }
    let m = basis.len();
    let g = gram_form(sys, &basis, k, budget)?;
    let metric = Matrix::from_fn(m, m, |i, j| sys.inner_unchecked(&basis[i], &basis[j]));
    let eigenvalues = generalized_symmetric_eigenvalues(&g.to_f64(), &metric.to_f64());
    let numeric: Vec<(f64, f64)> = eigenvalues.iter().map(|&x| (x, 0.0)).collect();
    let certified = if T::is_exact() {
        let c = metric.solve(&g).expect("metric is positive definite");
        certified_rational_roots(&charpoly(&c))
    } else {
        Vec::new()
    };
    let r = min_real_root(&numeric, &certified);
    let (value, exact) = to_scalar::<T>(r.exact.as_ref(), r.value.max(0.0));
    Ok(IrreducibilityConstant {
        k,
        value,
        exact,
        eigenvalues,
    })
}

/// Eigenvalues of `G v = λ N v` for symmetric `G` and positive definite `N`.
fn generalized_symmetric_eigenvalues(g: &Matrix<f64>, n: &Matrix<f64>) -> Vec<f64> {
    let l = n.cholesky().expect("metric is positive definite");
    let l_inv = l.inverse().expect("triangular factor is invertible");
    let c = &(&l_inv * g) * &l_inv.transpose();
    symmetric_eigenvalues(&c)
}

/// Both forms of `θ₂`.
#[derive(Debug, Clone, Serialize)]
pub struct Theta2 {
    pub constants: Vec<IrreducibilityConstant>,
    /// `min_{k ≤ k_max} (1 − c_k)^{1/k}`
    pub theorem: Scalar,
    /// `√(1 − c₁)`
    pub lemma: Scalar,
    /// False when some `c_k` is zero; both forms are then reported as 1.
    pub irreducible: bool,
}

pub fn theta2<T: Field>(sys: &MatrixSystem<T>, k_max: usize, budget: &Budget) -> Result<Theta2> {
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    let constants = (1..=k_max)
        .map(|k| c_k(sys, k, budget))
        .collect::<Result<Vec<_>>>()?;
    let one = T::one().to_scalar();
    let irreducible = constants.iter().all(|c| c.value.to_f64() > 1e-14);
    if !irreducible {
        return Ok(Theta2 {
            constants,
            theorem: one.clone(),
            lemma: one,
            irreducible,
        });
    }
    let exact_c = |c: &IrreducibilityConstant| -> Option<T> {
        c.value
            .as_rational()
            .filter(|_| c.exact)
            .map(|q| T::from_rational(&q))
    };
    let (best_k, best) = constants
        .iter()
        .map(|c| (c.k, (1.0 - c.value.to_f64()).powf(1.0 / c.k as f64)))
        .fold(
            (0, f64::INFINITY),
            |acc, x| if x.1 < acc.1 { x } else { acc },
        );
    let best_c = &constants[best_k - 1];
    let theorem = match (best_k, exact_c(best_c)) {
        (1, Some(c)) => (T::one() - c).to_scalar(),
        (2, Some(c)) => match (T::one() - c).sqrt() {
            Some(r) => r.to_scalar(),
            None => Scalar::Float(best),
        },
        _ => Scalar::Float(best),
    };
    let c1 = &constants[0];
    let lemma = match exact_c(c1).and_then(|c| (T::one() - c).sqrt()) {
        Some(r) => r.to_scalar(),
        None => Scalar::Float((1.0 - c1.value.to_f64()).sqrt()),
    };
    Ok(Theta2 {
        constants,
        theorem,
        lemma,
        irreducible,
    })
}

/// Everything `spectral` computes for one system.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub theta1: Theta1,
    /// `(p, θ_{1,p})`, present for symmetric systems.
    pub theta1_p: Vec<(String, Scalar)>,
    /// `None` in dimension 1.
    pub theta2: Option<Theta2>,
    /// `max(γ, θ₁)` when `γ` is given.
    pub rho: Option<f64>,
}

pub fn spectral_report<T: Field>(
    sys: &MatrixSystem<T>,
    k_max: usize,
    gamma: Option<f64>,
    budget: &Budget,
) -> Result<SpectralReport> {
    let t1 = theta1(sys)?;
    let mut theta1_p = Vec::new();
    if sys.symmetric_flag() {
        for p in [
            SchattenP::Finite(1.0),
            SchattenP::Finite(2.0),
            SchattenP::Infinity,
        ] {
            theta1_p.push((p.to_string(), theta1_schatten(sys, p)?));
        }
    }
    let theta2 = match theta2(sys, k_max, budget) {
        Ok(t) => Some(t),
        Err(Error::NotApplicable(_)) => None,
        Err(e) => return Err(e),
    };
    let rho = gamma.map(|g| g.max(t1.value.to_f64()));
    Ok(SpectralReport {
        theta1: t1,
        theta1_p,
        theta2,
        rho,
    })
}

/// Output of [`renormalize`].
#[derive(Debug, Clone)]
pub struct Renormalized<T> {
    pub system: MatrixSystem<T>,
    /// Perron eigenvalue `μ` of `B ↦ Σ A_sᵀ B A_s` on the raw maps.
    pub perron: T,
    /// Scale `λ = μ^{-1/2}` applied to the maps.
    pub lambda: T,
}

pub const POWER_TOL: f64 = 1e-14;
pub const POWER_MAX_ITER: usize = 100_000;

/// Power iteration from the identity; returns the eigenvalue estimate and
/// the normalized eigenvector.
fn power_iteration(d: usize, f: impl Fn(&Matrix<f64>) -> Matrix<f64>) -> (f64, Matrix<f64>) {
    let mut x = Matrix::<f64>::identity(d).scale(&(1.0 / (d as f64).sqrt()));
    let mut mu = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let y = f(&x);
        let norm = y.frobenius_f64();
        if norm == 0.0 {
            return (0.0, x);
        }
        let next = y.scale(&(1.0 / norm));
        let delta = (&next - &x).frobenius_f64();
        x = next;
        mu = norm;
        if delta <= POWER_TOL {
            break;
        }
    }
    (mu, x)
}

/// Matrix of a linear map on `d × d` matrices in the basis `E_ij` (row-major).
fn standard_rep<T: Field>(d: usize, f: impl Fn(&Matrix<T>) -> Matrix<T>) -> Matrix<T> {
    let n = d * d;
    let mut rep = Matrix::zeros(n, n);
    for col in 0..n {
        let mut e = Matrix::zeros(d, d);
        e[(col / d, col % d)] = T::one();
        let img = f(&e).vectorize();
        for (row, v) in img.into_iter().enumerate() {
            rep[(row, col)] = v;
        }
    }
    rep
}

/// Exact Perron eigenvector for eigenvalue `mu`, normalized to trace 1.
fn exact_eigenvector<T: Field>(
    d: usize,
    mu: &T,
    f: impl Fn(&Matrix<T>) -> Matrix<T>,
) -> Result<Matrix<T>> {
    let i = Matrix::<T>::identity(d);
    if f(&i) == i.scale(mu) {
        return Ok(i.scale(&T::from_ratio(1, d as i64)));
    }
    let rep = standard_rep(d, &f);
    let shifted = &rep - &Matrix::identity(d * d).scale(mu);
    let null = shifted.null_space(0.0);
    if null.len() != 1 {
        return Err(Error::Perron(format!(
            "Perron eigenspace has dimension {}",
            null.len()
        )));
    }
    let v = Matrix::from_vector(d, d, null.into_iter().next().expect("one vector"));
    let tr = v.trace();
    let v = v.scale(
        &tr.inv()
            .ok_or_else(|| Error::Perron("eigenvector has zero trace".into()))?,
    );
    Ok(v)
}

/// Rescales raw maps so that both fixed-point equations hold.
///
/// Finds the Perron eigenvalue `μ` and positive definite eigenvectors `𝓔₀`
/// of `B ↦ Σ A_sᵀ B A_s` and `𝓡` of `B ↦ Σ A_s B A_sᵀ`, then returns
/// `A'_s = λ L⁻¹ A_s L` with `λ = μ^{-1/2}`, `𝓡 = L Lᵀ`, and
/// `𝓔 = Lᵀ 𝓔₀ L / Tr(Lᵀ 𝓔₀ L)`.
///
/// On the exact backend `μ` must be a certified rational root of the
/// characteristic polynomial and the Cholesky factor must exist in the field.
pub fn renormalize<T: Field>(alphabet: Alphabet, raw: Vec<Matrix<T>>) -> Result<Renormalized<T>> {
    let d = raw.first().map(Matrix::rows).unwrap_or(0);
    if d == 0 {
        return Err(Error::InvalidArgument("no maps to renormalize".into()));
    }
    let probe = MatrixSystem::new(alphabet.clone(), raw.clone(), Matrix::identity(d))?;
    for a in &raw {
        if a.determinant().near_zero(DEFAULT_TOL) {
            return Err(Error::Invalid("raw map is singular".into()));
        }
    }
    let fprobe = probe.to_f64();
    let (mu_star, e0_f) = power_iteration(d, |b| fprobe.apply_m_star_unchecked(b));
    let (mu_m, r_f) = power_iteration(d, |b| fprobe.apply_m_unchecked(b));
    if (mu_star - mu_m).abs() > 1e-8 * mu_star.abs().max(1.0) {
        return Err(Error::Perron(format!(
            "eigenvalues of the two maps differ: {mu_star} vs {mu_m}"
        )));
    }
    let (mu, e0, r) = if T::is_exact() {
        let mu = exact_perron(&probe, mu_star)?;
        let e0 = exact_eigenvector(d, &mu, |b| probe.apply_m_star_unchecked(b))?;
        let r = exact_eigenvector(d, &mu, |b| probe.apply_m_unchecked(b))?;
        (mu, e0, r)
    } else {
        let lift = |m: &Matrix<f64>| {
            let sign = if m.trace() < 0.0 { -1.0 } else { 1.0 };
            m.symmetric_part().map(|x| from_f64::<T>(sign * x))
        };
        (from_f64::<T>(mu_star), lift(&e0_f), lift(&r_f))
    };
    check_pd(&e0, "dual fixed form")?;
    check_pd(&r, "fixed form")?;
    // 𝓡 is only defined up to scale; fixing r_00 = 1 keeps exact Cholesky
    // factors rational whenever 𝓡 ∝ I.
    let r = r.scale(&r[(0, 0)].inv().expect("positive diagonal"));
    let l = r
        .cholesky()
        .ok_or_else(|| Error::Inexact("Cholesky factor of the fixed form".into()))?;
    let l_inv = l.inverse().expect("triangular factor is invertible");
    let lambda = mu.sqrt().and_then(|s| s.inv()).ok_or_else(|| {
        Error::Inexact(format!("square root of Perron eigenvalue {}", mu.to_f64()))
    })?;
    let maps: Vec<Matrix<T>> = raw
        .iter()
        .map(|a| (&(&l_inv * a) * &l).scale(&lambda))
        .collect();
    let e = &(&l.transpose() * &e0) * &l;
    let e = e.scale(&e.trace().inv().expect("positive trace"));
    let system = MatrixSystem::new(alphabet, maps, e)?;
    let tol = if T::is_exact() { 0.0 } else { 1e-9 };
    let report = system.validate(tol)?;
    if !report.passed() {
        return Err(Error::Perron(format!(
            "renormalized system failed validation: {}",
            report.failures().join("; ")
        )));
    }
    Ok(Renormalized {
        system,
        perron: mu,
        lambda,
    })
}

fn from_f64<T: Field>(x: f64) -> T {
    T::from_rational(&rational_from_f64(x).unwrap_or_default())
}

fn exact_perron<T: Field>(probe: &MatrixSystem<T>, estimate: f64) -> Result<T> {
    let d = probe.dim();
    let i = Matrix::<T>::identity(d);
    let mi = probe.apply_m_star_unchecked(&i);
    let c = mi[(0, 0)].clone();
    if mi == i.scale(&c) {
        return Ok(c);
    }
    let rep = standard_rep(d, |b| probe.apply_m_star_unchecked(b));
    let roots = certified_rational_roots(&charpoly(&rep));
    roots
        .iter()
        .find(|q| {
            let v = num_traits::ToPrimitive::to_f64(*q).unwrap_or(f64::NAN);
            (v - estimate).abs() <= 1e-8 * estimate.abs().max(1.0)
        })
        .map(T::from_rational)
        .ok_or_else(|| {
            Error::Inexact(format!(
                "Perron eigenvalue {estimate} is not a certified rational"
            ))
        })
}

fn check_pd<T: Field>(m: &Matrix<T>, what: &str) -> Result<()> {
    let ok = if T::is_exact() {
        m.is_symmetric() && m.leading_minors_positive()
    } else {
        symmetric_eigenvalues(&m.to_f64())
            .first()
            .is_some_and(|&x| x > 0.0)
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Perron(format!("{what} is not positive definite")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::field::Surd;

    fn s(x: &str) -> Surd {
        x.parse().unwrap()
    }

    #[test]
    fn sg_theta1_is_four_fifths() {
        let t = theta1(&builtin::sg()).unwrap();
        assert!(t.exact);
        assert_eq!(t.value, Scalar::Exact(s("4/5")));
        assert!(t.contracting);
        let f = theta1(&builtin::sg().to_f64()).unwrap();
        assert!(!f.exact);
        assert!((f.value.to_f64() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_theta1_is_zero() {
        let b = builtin::bernoulli(&[s("1/2"), s("1/2")]).unwrap();
        let t = theta1(&b).unwrap();
        assert_eq!(t.value, Scalar::Exact(Surd::zero()));
        assert!(matches!(
            c_k(&b, 1, &Budget::default()),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn sg_schatten_rates() {
        let sg = builtin::sg();
        for p in [
            SchattenP::Finite(1.0),
            SchattenP::Finite(3.0),
            SchattenP::Infinity,
        ] {
            assert_eq!(theta1_schatten(&sg, p).unwrap(), Scalar::Exact(s("4/5")));
        }
    }

    #[test]
    fn schatten_requires_symmetric_maps() {
        let sg = builtin::sg();
        let r = builtin::rotation();
        let maps: Vec<_> = sg.maps().iter().map(|a| a * &r).collect();
        let rotated = MatrixSystem::new(sg.alphabet().clone(), maps, sg.energy().clone()).unwrap();
        assert!(matches!(
            theta1_schatten(&rotated, SchattenP::Infinity),
            Err(Error::NotSymmetric)
        ));
    }

    #[test]
    fn sg_c1_and_theta2() {
        let sg = builtin::sg();
        let c1 = c_k(&sg, 1, &Budget::default()).unwrap();
        assert!(c1.exact);
        assert_eq!(c1.value, Scalar::Exact(s("8/75")));
        let t2 = theta2(&sg, 1, &Budget::default()).unwrap();
        assert_eq!(t2.theorem, Scalar::Exact(s("67/75")));
        assert!((t2.lemma.to_f64() - (67.0f64 / 75.0).sqrt()).abs() < 1e-15);
        assert!(t2.lemma.is_exact());
        let f = c_k(&sg.to_f64(), 1, &Budget::default()).unwrap();
        assert!((f.value.to_f64() - 8.0 / 75.0).abs() < 1e-12);
    }

    #[test]
    fn c_k_is_deterministic_across_thread_counts() {
        let sg = builtin::sg().to_f64();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| c_k(&sg, 6, &Budget::default()).unwrap().eigenvalues)
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn renormalize_recovers_scale() {
        let sg = builtin::sg();
        let raw = sg.scaled_maps(&Surd::int(2));
        let out = renormalize(sg.alphabet().clone(), raw).unwrap();
        assert_eq!(out.lambda, s("1/2"));
        assert_eq!(out.system, sg);
        let same = renormalize(sg.alphabet().clone(), sg.maps().to_vec()).unwrap();
        assert_eq!(same.lambda, Surd::one());
        assert_eq!(same.system, sg);
    }

    #[test]
    fn renormalize_float_backend() {
        let sg = builtin::sg().to_f64();
        let raw = sg.scaled_maps(&3.0);
        let out = renormalize(sg.alphabet().clone(), raw).unwrap();
        assert!((out.lambda - 1.0 / 3.0).abs() < 1e-12);
        assert!(out.system.validate(1e-10).unwrap().passed());
    }
}
