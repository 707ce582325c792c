//! Finite-degree operator-valued processes.
//!
//! A process of degree `n` is a table `α ↦ F(α)` over `S^n`, extended to
//! longer words by `F(αs) = A_s F(α)`. The inner product
//! `(F|G) = Σ_α ⟨F(α), G(α)⟩_𝓔` does not depend on the level it is evaluated
//! at once that level is at least both degrees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::linalg::Matrix;
use crate::matsys::MatrixSystem;
use crate::measure::KusuokaMeasure;
use crate::spectral::c_k;
use crate::symbolic::{Budget, CylinderFunction};

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteProcess<T> {
    degree: usize,
    values: Vec<Matrix<T>>,
}

impl<T: Field> FiniteProcess<T> {
    pub fn new(sys: &MatrixSystem<T>, degree: usize, values: Vec<Matrix<T>>) -> Result<Self> {
        let n = Budget::unlimited().check(sys.base(), degree)?;
        if values.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "degree {degree} process needs {n} values, got {}",
                values.len()
            )));
        }
        if values
            .iter()
            .any(|v| v.rows() != sys.dim() || v.cols() != sys.dim())
        {
            return Err(Error::DimensionMismatch(
                "process values must be d×d".into(),
            ));
        }
        Ok(FiniteProcess { degree, values })
    }

    /// The process `𝖠: α ↦ A(α)`.
    pub fn identity(sys: &MatrixSystem<T>) -> Self {
        Self::constant(sys, Matrix::identity(sys.dim()))
    }

    /// The process `𝖠G₀: α ↦ A(α) G₀`.
    pub fn constant(_sys: &MatrixSystem<T>, g0: Matrix<T>) -> Self {
        FiniteProcess {
            degree: 0,
            values: vec![g0],
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn values(&self) -> &[Matrix<T>] {
        &self.values
    }

    /// Values at a level `≥ degree`.
    pub fn extend(&self, sys: &MatrixSystem<T>, level: usize) -> Vec<Matrix<T>> {
        assert!(level >= self.degree, "cannot extend to a lower level");
        let mut v = self.values.clone();
        for _ in self.degree..level {
            v = sys.next_level(&v);
        }
        v
    }

    /// The same process tabulated at a higher degree.
    pub fn lift(&self, sys: &MatrixSystem<T>, level: usize) -> Self {
        FiniteProcess {
            degree: level,
            values: self.extend(sys, level),
        }
    }

    pub fn scale(&self, c: &T) -> Self {
        FiniteProcess {
            degree: self.degree,
            values: self.values.iter().map(|v| v.scale(c)).collect(),
        }
    }

    pub fn sub(&self, sys: &MatrixSystem<T>, other: &Self) -> Self {
        let level = self.degree.max(other.degree);
        let a = self.extend(sys, level);
        let b = other.extend(sys, level);
        FiniteProcess {
            degree: level,
            values: a.iter().zip(&b).map(|(x, y)| x - y).collect(),
        }
    }
}

/// `(F|G)` evaluated at level `max(deg F, deg G)`.
pub fn process_inner<T: Field>(
    sys: &MatrixSystem<T>,
    f: &FiniteProcess<T>,
    g: &FiniteProcess<T>,
) -> T {
    let level = f.degree.max(g.degree);
    inner_at(sys, f, g, level)
}

/// `(F|G)` evaluated at an explicit level `≥` both degrees.
pub fn inner_at<T: Field>(
    sys: &MatrixSystem<T>,
    f: &FiniteProcess<T>,
    g: &FiniteProcess<T>,
    level: usize,
) -> T {
    let a = f.extend(sys, level);
    let b = g.extend(sys, level);
    a.iter()
        .zip(&b)
        .fold(T::zero(), |acc, (x, y)| acc + sys.inner_unchecked(x, y))
}

pub fn process_norm_sq<T: Field>(sys: &MatrixSystem<T>, f: &FiniteProcess<T>) -> T {
    process_inner(sys, f, f)
}

/// `(𝖳F)(sα) = F(α) A_s`.
pub fn shift_t<T: Field>(sys: &MatrixSystem<T>, f: &FiniteProcess<T>) -> FiniteProcess<T> {
    let n = f.values.len();
    let mut values = Vec::with_capacity(n * sys.base());
    for a in sys.maps() {
        for v in &f.values {
            values.push(v * a);
        }
    }
    FiniteProcess {
        degree: f.degree + 1,
        values,
    }
}

/// `(𝓛F)(α) = Σ_s F(sα) A_sᵀ`. A degree-0 process is first lifted to degree
/// 1, so `𝓛(𝖠G₀) = 𝖠 M(G₀)`.
pub fn transfer_l<T: Field>(sys: &MatrixSystem<T>, f: &FiniteProcess<T>) -> FiniteProcess<T> {
    let f = if f.degree == 0 {
        f.lift(sys, 1)
    } else {
        f.clone()
    };
    let n = f.values.len() / sys.base();
    let values = (0..n)
        .map(|idx| {
            sys.maps()
                .iter()
                .enumerate()
                .fold(Matrix::zeros(sys.dim(), sys.dim()), |acc, (s, a)| {
                    &acc + &(&f.values[s * n + idx] * &a.transpose())
                })
        })
        .collect();
    FiniteProcess {
        degree: f.degree - 1,
        values,
    }
}

/// `Φ(f)(α) = f(α) A(α)`.
pub fn embed_phi<T: Field>(
    sys: &MatrixSystem<T>,
    f: &CylinderFunction<T>,
) -> Result<FiniteProcess<T>> {
    let mats = sys.level_matrices(f.depth(), &Budget::unlimited())?;
    Ok(FiniteProcess {
        degree: f.depth(),
        values: mats
            .iter()
            .zip(f.values())
            .map(|(a, v)| a.scale(v))
            .collect(),
    })
}

/// A function together with its martingale differences `f⁽⁰⁾ … f⁽ⁿ⁾`.
#[derive(Debug, Clone)]
pub struct MartingaleRep<T> {
    pub function: CylinderFunction<T>,
    /// `components[k]` has depth `k`.
    pub components: Vec<CylinderFunction<T>>,
    /// `‖f⁽ᵏ⁾‖²` in `L²(ν)`.
    pub norms_sq: Vec<T>,
}

impl<T: Field> MartingaleRep<T> {
    pub fn depth(&self) -> usize {
        self.components.len() - 1
    }

    pub fn norm(&self, k: usize) -> f64 {
        self.norms_sq[k].to_f64().max(0.0).sqrt()
    }

    pub fn total_norm_sq(&self) -> T {
        self.norms_sq.iter().fold(T::zero(), |a, x| a + x.clone())
    }
}

/// `f_k = E[f | 𝓕_k]`, `f⁽⁰⁾ = f_0`, `f⁽ᵏ⁾ = f_k − f_{k−1}`.
pub fn martingale_decompose<T: Field>(
    m: &KusuokaMeasure<T>,
    f: &CylinderFunction<T>,
    budget: &Budget,
) -> Result<MartingaleRep<T>> {
    let base = m.base();
    let n = f.depth();
    let mut nus: Vec<Vec<T>> = Vec::with_capacity(n + 1);
    for k in 0..=n {
        nus.push(m.nu_level(k, budget)?);
    }
    // conditional expectations, deepest first
    let mut levels: Vec<Vec<T>> = vec![f.values().to_vec()];
    for k in (0..n).rev() {
        let finer = levels.last().expect("nonempty");
        let coarse: Vec<T> = (0..nus[k].len())
            .map(|i| {
                let mass = (0..base).fold(T::zero(), |acc, s| {
                    acc + nus[k + 1][i * base + s].clone() * finer[i * base + s].clone()
                });
                Ok(mass * nus[k][i].inv().ok_or(Error::ZeroMeasure)?)
            })
            .collect::<Result<_>>()?;
        levels.push(coarse);
    }
    levels.reverse();
    let mut components = Vec::with_capacity(n + 1);
    let mut norms_sq = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let vals: Vec<T> = if k == 0 {
            levels[0].clone()
        } else {
            levels[k]
                .iter()
                .enumerate()
                .map(|(i, v)| v.clone() - levels[k - 1][i / base].clone())
                .collect()
        };
        let norm = vals.iter().zip(&nus[k]).fold(T::zero(), |acc, (v, nu)| {
            acc + nu.clone() * v.clone() * v.clone()
        });
        norms_sq.push(norm);
        components.push(CylinderFunction::new(base, k, vals)?);
    }
    Ok(MartingaleRep {
        function: f.clone(),
        components,
        norms_sq,
    })
}

/// `‖f‖²_{L²(ν)}`.
pub fn l2_norm_sq<T: Field>(
    m: &KusuokaMeasure<T>,
    f: &CylinderFunction<T>,
    budget: &Budget,
) -> Result<T> {
    let nus = m.nu_level(f.depth(), budget)?;
    Ok(nus.iter().zip(f.values()).fold(T::zero(), |acc, (nu, v)| {
        acc + nu.clone() * v.clone() * v.clone()
    }))
}

/// `QF` observed at `level ≥ deg F`: `q(β) = ν(β)^{-1} ⟨F(β), A(β)⟩_𝓔`,
/// with its martingale differences up to `level`.
pub fn project_q<T: Field>(
    m: &KusuokaMeasure<T>,
    f: &FiniteProcess<T>,
    level: usize,
    budget: &Budget,
) -> Result<MartingaleRep<T>> {
    let sys = m.system();
    let level = level.max(f.degree);
    budget.check(sys.base(), level)?;
    let vals = f.extend(sys, level);
    let mats = sys.level_matrices(level, budget)?;
    let q = vals
        .iter()
        .zip(&mats)
        .map(|(v, a)| {
            let nu = sys.inner_unchecked(a, a);
            Ok(sys.inner_unchecked(v, a) * nu.inv().ok_or(Error::ZeroMeasure)?)
        })
        .collect::<Result<Vec<_>>>()?;
    martingale_decompose(m, &CylinderFunction::new(sys.base(), level, q)?, budget)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "γ must lie in (0, 1), got {gamma}"
        )))
    }
}

/// `‖f‖_γ = Σ_n γ^{-n} ‖f⁽ⁿ⁾‖`.
pub fn gamma_norm<T: Field>(rep: &MartingaleRep<T>, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok((0..rep.components.len())
        .map(|n| gamma.powi(-(n as i32)) * rep.norm(n))
        .sum())
}

/// Orthogonal projection of a degree-`n` process onto degree `n − 1`:
/// `H(α) = 𝓔⁻¹ Σ_s A_sᵀ 𝓔 F(αs)`.
pub fn project_down<T: Field>(sys: &MatrixSystem<T>, f: &FiniteProcess<T>) -> FiniteProcess<T> {
    assert!(f.degree > 0, "degree-0 processes have nothing below them");
    let e_inv = sys.energy().inverse().expect("energy form is invertible");
    let n = f.values.len() / sys.base();
    let values = (0..n)
        .map(|idx| {
            let sum = sys.maps().iter().enumerate().fold(
                Matrix::zeros(sys.dim(), sys.dim()),
                |acc, (s, a)| {
                    &acc + &(&(&a.transpose() * sys.energy()) * &f.values[idx * sys.base() + s])
                },
            );
            &e_inv * &sum
        })
        .collect();
    FiniteProcess {
        degree: f.degree - 1,
        values,
    }
}

/// `max_α ‖Σ_s A_sᵀ 𝓔 F(αs)‖` over parents `α`; zero exactly when `F` is
/// orthogonal to all processes of lower degree.
pub fn orthogonality_residual<T: Field>(sys: &MatrixSystem<T>, f: &FiniteProcess<T>) -> T {
    if f.degree == 0 {
        return T::zero();
    }
    let e = sys.energy();
    let pd = project_down(sys, f);
    pd.values
        .iter()
        .flat_map(|h| (e * h).entries().to_vec())
        .map(|x| x.abs())
        .fold(T::zero(), |a, b| if a.less_eq(&b) { b } else { a })
}

/// Graded pieces `X⁽⁰⁾ … X⁽ⁿ⁾` of a degree-`n` process, `X⁽ᵏ⁾` of degree `k`
/// and orthogonal to every process of degree `< k`.
pub fn process_components<T: Field>(
    sys: &MatrixSystem<T>,
    f: &FiniteProcess<T>,
) -> Vec<FiniteProcess<T>> {
    let mut out = Vec::with_capacity(f.degree + 1);
    let mut cur = f.clone();
    while cur.degree > 0 {
        let down = project_down(sys, &cur);
        out.push(cur.sub(sys, &down));
        cur = down;
    }
    out.push(cur);
    out.reverse();
    out
}

/// `Σ_k γ^{-k} ‖X⁽ᵏ⁾‖` for a process.
pub fn process_gamma_norm<T: Field>(
    sys: &MatrixSystem<T>,
    f: &FiniteProcess<T>,
    gamma: f64,
) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(process_components(sys, f)
        .iter()
        .enumerate()
        .map(|(k, x)| gamma.powi(-(k as i32)) * process_norm_sq(sys, x).to_f64().max(0.0).sqrt())
        .sum())
}

fn random_matrix<T: Field>(d: usize, rng: &mut ChaCha8Rng) -> Matrix<T> {
    Matrix::from_fn(d, d, |_, _| T::from_ratio(rng.random_range(-64..=64), 64))
}

/// A random process of degree `k` orthogonal to all lower degrees: a random
/// table minus its projection onto degree `k − 1`. Entries are multiples of
/// 1/64, so the result is exact on the exact backend.
pub fn random_graded<T: Field>(
    sys: &MatrixSystem<T>,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> FiniteProcess<T> {
    let n = sys.base().pow(k as u32);
    let x = FiniteProcess {
        degree: k,
        values: (0..n).map(|_| random_matrix(sys.dim(), rng)).collect(),
    };
    if k == 0 {
        return x;
    }
    let down = project_down(sys, &x);
    x.sub(sys, &down)
}

/// Compares two computations of `E[L^k f | 𝓕_level]`: the projection
/// `Q(𝓛^k Φ(f))` and a direct evaluation by the trace formula (when
/// `k ≥ deg f`) or by integrating `f` over cylinders. Returns the largest
/// absolute difference between the martingale differences of the two.
pub fn dilation_check<T: Field>(
    m: &KusuokaMeasure<T>,
    f: &CylinderFunction<T>,
    k: usize,
    level: usize,
    budget: &Budget,
) -> Result<T> {
    let sys = m.system();
    let mut proc = embed_phi(sys, f)?;
    for _ in 0..k {
        proc = transfer_l(sys, &proc);
    }
    let level = level.max(proc.degree);
    let via_q = project_q(m, &proc, level, budget)?;
    let direct = if k >= f.depth() {
        m.transfer_table(f, k - f.depth(), level, budget)?
    } else {
        m.transfer_direct(f, k, level, budget)?
    };
    let via_l = martingale_decompose(m, &direct, budget)?;
    let mut worst = T::zero();
    for (a, b) in via_q.components.iter().zip(&via_l.components) {
        for (x, y) in a.values().iter().zip(b.values()) {
            let d = (x.clone() - y.clone()).abs();
            if worst.less_eq(&d) {
                worst = d;
            }
        }
    }
    Ok(worst)
}

/// One row of [`q_decay_check`].
#[derive(Debug, Clone, Serialize)]
pub struct DecayRow {
    pub j: usize,
    /// `max ‖(QG)⁽ʲ⁾‖ / ‖G‖` over the trials.
    pub max_ratio: f64,
    /// `θ₂^{j−k}` with `θ₂ = √(1 − c₁)`.
    pub bound: f64,
    pub holds: bool,
}

pub const DECAY_TOL: f64 = 1e-12;

/// Draws `trials` random `G` of degree `k` orthogonal to lower degrees and
/// tabulates `‖(QG)⁽ʲ⁾‖ / ‖G‖` for `j ≤ j_max` against `θ₂^{j−k}`.
pub fn q_decay_check<T: Field>(
    m: &KusuokaMeasure<T>,
    k: usize,
    j_max: usize,
    trials: usize,
    seed: u64,
    budget: &Budget,
) -> Result<Vec<DecayRow>> {
    let sys = m.system();
    let c1 = c_k(sys, 1, budget)?;
    if c1.value.to_f64() <= 0.0 {
        return Err(Error::Reducible);
    }
    let theta2 = (1.0 - c1.value.to_f64()).sqrt();
    let level = j_max.max(k);
    budget.check(sys.base(), level)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<FiniteProcess<T>> = (0..trials)
        .map(|_| random_graded(sys, k, &mut rng))
        .collect();
    let ratios: Vec<Vec<f64>> = samples
        .par_iter()
        .map(|g| {
            let norm = process_norm_sq(sys, g).to_f64().sqrt();
            let rep = project_q(m, g, level, budget)?;
            Ok((0..=j_max)
                .map(|j| if norm == 0.0 { 0.0 } else { rep.norm(j) / norm })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok((0..=j_max)
        .map(|j| {
            let max_ratio = ratios.iter().map(|r| r[j]).fold(0.0, f64::max);
            let bound = theta2.powi(j as i32 - k as i32);
            DecayRow {
                j,
                max_ratio,
                bound,
                holds: max_ratio <= bound + DECAY_TOL,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::surd::Surd;
    use crate::symbolic::Word;

    fn s(x: &str) -> Surd {
        x.parse().unwrap()
    }

    fn sg() -> KusuokaMeasure<Surd> {
        KusuokaMeasure::new(builtin::sg()).unwrap()
    }

    fn sigma_z() -> Matrix<Surd> {
        Matrix::diag(&[Surd::one(), -Surd::one()])
    }

    #[test]
    fn identity_process_has_unit_norm_at_every_level() {
        let m = sg();
        let sys = m.system();
        let a = FiniteProcess::identity(sys);
        for level in 0..=3 {
            assert_eq!(inner_at(sys, &a, &a, level), Surd::one());
        }
        let z = FiniteProcess::constant(sys, sigma_z());
        assert!(process_inner(sys, &z, &a).is_zero());
        assert_eq!(process_norm_sq(sys, &shift_t(sys, &a)), Surd::one());
    }

    #[test]
    fn transfer_fixes_identity_and_contracts_sigma_z() {
        let m = sg();
        let sys = m.system();
        let a = FiniteProcess::identity(sys);
        assert_eq!(transfer_l(sys, &a), a);
        let z = FiniteProcess::constant(sys, sigma_z());
        assert_eq!(
            transfer_l(sys, &z),
            FiniteProcess::constant(sys, sigma_z().scale(&s("4/5")))
        );
    }

    #[test]
    fn phi_of_indicator() {
        let m = sg();
        let sys = m.system();
        let f = CylinderFunction::indicator(3, &Word(vec![0]));
        let phi = embed_phi(sys, &f).unwrap();
        assert_eq!(process_norm_sq(sys, &phi), s("1/3"));
        let lhs = embed_phi(sys, &f.compose_shift()).unwrap();
        assert_eq!(lhs, shift_t(sys, &phi));
        let one = CylinderFunction::constant(3, Surd::one());
        assert_eq!(embed_phi(sys, &one).unwrap(), FiniteProcess::identity(sys));
    }

    #[test]
    fn q_examples() {
        let m = sg();
        let sys = m.system();
        let b = Budget::default();
        let rep = project_q(&m, &FiniteProcess::identity(sys), 3, &b).unwrap();
        assert_eq!(rep.components[0].values(), &[Surd::one()]);
        assert!(rep.norms_sq[1..].iter().all(Field::is_zero));
        let anti = Matrix::from_rows(vec![
            vec![Surd::zero(), Surd::one()],
            vec![-Surd::one(), Surd::zero()],
        ])
        .unwrap();
        let rep = project_q(&m, &FiniteProcess::constant(sys, anti), 3, &b).unwrap();
        assert!(rep.function.values().iter().all(Field::is_zero));
        let rep = project_q(&m, &FiniteProcess::constant(sys, sigma_z()), 1, &b).unwrap();
        assert!(rep.norms_sq[0].is_zero());
        assert_eq!(rep.norms_sq[1], s("8/25"));
    }

    #[test]
    fn indicator_decomposition() {
        let m = sg();
        let b = Budget::default();
        let f = CylinderFunction::indicator(3, &Word(vec![0]));
        let rep = martingale_decompose(&m, &f, &b).unwrap();
        assert_eq!(rep.components[0].values(), &[s("1/3")]);
        assert_eq!(rep.norms_sq[1], s("2/9"));
        let g = gamma_norm(&rep, 0.5).unwrap();
        assert!((g - (1.0 / 3.0 + 2.0 * 2f64.sqrt() / 3.0)).abs() < 1e-15);
        assert!(gamma_norm(&rep, 1.0).is_err());
        let c = martingale_decompose(&m, &CylinderFunction::constant(3, Surd::one()), &b).unwrap();
        assert_eq!(gamma_norm(&c, 0.3).unwrap(), 1.0);
    }

    #[test]
    fn dilation_examples() {
        let m = sg();
        let b = Budget::default();
        let f = CylinderFunction::indicator(3, &Word(vec![0]));
        assert!(dilation_check(&m, &f, 1, 3, &b).unwrap().is_zero());
        let one = CylinderFunction::constant(3, Surd::one());
        assert!(dilation_check(&m, &one, 2, 2, &b).unwrap().is_zero());
    }

    #[test]
    fn graded_processes_are_orthogonal_to_lower_degrees() {
        let m = sg();
        let sys = m.system();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 1..=2 {
            let g = random_graded(sys, k, &mut rng);
            assert!(orthogonality_residual(sys, &g).is_zero());
            let lg = transfer_l(sys, &g);
            if k >= 2 {
                assert!(orthogonality_residual(sys, &lg).is_zero());
            }
        }
    }

    #[test]
    fn decay_first_step() {
        let m = sg();
        let sys = m.system();
        let g = FiniteProcess::constant(sys, sigma_z());
        let rep = project_q(&m, &g, 1, &Budget::default()).unwrap();
        let ratio = rep.norm(1) / process_norm_sq(sys, &g).to_f64().sqrt();
        assert!((ratio - (8.0f64 / 25.0).sqrt()).abs() < 1e-15);
    }
}
