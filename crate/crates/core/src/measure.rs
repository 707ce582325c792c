//! The Kusuoka measure `ν(α) = Tr(A(α)ᵀ 𝓔 A(α))` on cylinders.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Field, Scalar};
use crate::linalg::{singular_values, Matrix};
use crate::matsys::MatrixSystem;
use crate::spectral::theta1;
use crate::symbolic::{Budget, CylinderFunction, Word};

#[derive(Debug, Clone)]
pub struct KusuokaMeasure<T> {
    system: MatrixSystem<T>,
}

/// `H_N = A(α)ᵀ 𝓔 A(α) / ν(α)` for a prefix `α` of length `N`.
#[derive(Debug, Clone)]
pub struct HState<T> {
    pub prefix: Word,
    pub h: Matrix<T>,
}

/// One row of [`KusuokaMeasure::mixing_bound_check`].
#[derive(Debug, Clone, Serialize)]
pub struct MixingRow {
    pub n: usize,
    /// `max |ν(α ∩ T^{-(n+k)} β) − ν(α)ν(β)|` over `α ∈ S^k`, `β ∈ S^j`, `1 ≤ j ≤ k`.
    pub max_gap: Scalar,
    /// `d · θ₁^n`.
    pub bound: Scalar,
    /// `max_α ‖M^n(A(α)A(α)ᵀ − ν(α) I)‖_op / ν(α)`, which bounds
    /// `sup_x |L^{n+k} 1_α(x) − ν(α)| / ν(α)`.
    pub pointwise: f64,
    pub holds: bool,
}

impl<T: Field> KusuokaMeasure<T> {
    /// Wraps a system after checking both fixed-point equations.
    pub fn new(system: MatrixSystem<T>) -> Result<Self> {
        system.require_valid()?;
        Ok(KusuokaMeasure { system })
    }

    pub fn system(&self) -> &MatrixSystem<T> {
        &self.system
    }

    pub fn base(&self) -> usize {
        self.system.base()
    }

    fn check_word(&self, w: &Word) -> Result<()> {
        match w.symbols().iter().find(|&&s| s >= self.base()) {
            Some(s) => Err(Error::UnknownSymbol(s.to_string())),
            None => Ok(()),
        }
    }

    fn nu_of(&self, a: &Matrix<T>) -> T {
        self.system.inner_unchecked(a, a)
    }

    pub fn nu(&self, w: &Word) -> Result<T> {
        Ok(self.nu_of(&self.system.word_matrix(w)?))
    }

    /// `ν` of every word of length `k`, lexicographically.
    pub fn nu_level(&self, k: usize, budget: &Budget) -> Result<Vec<T>> {
        Ok(self
            .system
            .level_matrices(k, budget)?
            .iter()
            .map(|a| self.nu_of(a))
            .collect())
    }

    /// `ν(αs) / ν(α)`.
    pub fn conditional(&self, w: &Word, s: usize) -> Result<T> {
        self.check_word(&Word(vec![s]))?;
        let a = self.system.word_matrix(w)?;
        let nu = self.nu_of(&a);
        let inv = nu.inv().ok_or(Error::ZeroMeasure)?;
        Ok(self.nu_of(&(self.system.map(s) * &a)) * inv)
    }

    /// `ν([x]_n) / ν([Tx]_{n−1})`.
    pub fn g_approx(&self, prefix: &Word) -> Result<T> {
        if prefix.is_empty() {
            return Err(Error::InvalidArgument(
                "g approximant needs a nonempty prefix".into(),
            ));
        }
        let num = self.nu(prefix)?;
        let den = self.nu(&prefix.shift())?;
        Ok(num * den.inv().ok_or(Error::ZeroMeasure)?)
    }

    /// `ν(α ∩ T^{-(n+|α|)} β) − ν(α)ν(β)`, computed as
    /// `Tr(A(α)ᵀ (M*)^n(A(β)ᵀ 𝓔 A(β)) A(α)) − ν(α)ν(β)`.
    pub fn correlation_gap(&self, alpha: &Word, beta: &Word, n: usize) -> Result<T> {
        let a = self.system.word_matrix(alpha)?;
        let b = self.system.word_matrix(beta)?;
        let mut form = &(&b.transpose() * self.system.energy()) * &b;
        let nu_b = form.trace();
        for _ in 0..n {
            form = self.system.apply_m_star_unchecked(&form);
        }
        let joint = (&(&a.transpose() * &form) * &a).trace();
        Ok(joint - self.nu_of(&a) * nu_b)
    }

    /// Correlation gaps against `d·θ₁^n` for `n = 0..=n_max`.
    pub fn mixing_bound_check(
        &self,
        k: usize,
        n_max: usize,
        budget: &Budget,
    ) -> Result<Vec<MixingRow>> {
        let sys = &self.system;
        let t1 = theta1(sys)?;
        let d = T::from_i64(sys.dim() as i64);
        let theta: Option<T> = t1
            .value
            .as_rational()
            .filter(|_| t1.exact)
            .map(|q| T::from_rational(&q));
        let theta_f = t1.value.to_f64();
        let alphas = sys.level_matrices(k, budget)?;
        let mut betas: Vec<Matrix<T>> = Vec::new();
        for j in 1..=k {
            betas.extend(sys.level_matrices(j, budget)?);
        }
        let nu_a: Vec<T> = alphas.iter().map(|a| self.nu_of(a)).collect();
        let mut forms: Vec<Matrix<T>> = betas
            .iter()
            .map(|b| &(&b.transpose() * sys.energy()) * b)
            .collect();
        let nu_b: Vec<T> = forms.iter().map(Matrix::trace).collect();
        let mut centred: Vec<Matrix<T>> = alphas
            .iter()
            .zip(&nu_a)
            .map(|(a, nu)| &(a * &a.transpose()) - &Matrix::identity(sys.dim()).scale(nu))
            .collect();
        let mut rows = Vec::new();
        for n in 0..=n_max {
            let mut max_gap = T::zero();
            for (a, na) in alphas.iter().zip(&nu_a) {
                let at = a.transpose();
                for (f, nb) in forms.iter().zip(&nu_b) {
                    let gap = ((&(&at * f) * a).trace() - na.clone() * nb.clone()).abs();
                    if max_gap.less_eq(&gap) {
                        max_gap = gap;
                    }
                }
            }
            let pointwise = centred
                .iter()
                .zip(&nu_a)
                .map(|(c, nu)| {
                    singular_values(&c.to_f64()).first().copied().unwrap_or(0.0) / nu.to_f64()
                })
                .fold(0.0, f64::max);
            let (bound, holds) = match &theta {
                Some(t) if T::is_exact() => {
                    let b = d.clone() * t.pow(n as u32);
                    let holds = max_gap.less_eq(&b);
                    (b.to_scalar(), holds)
                }
                _ => {
                    let b = sys.dim() as f64 * theta_f.powi(n as i32);
                    (Scalar::Float(b), max_gap.to_f64() <= b + 1e-12)
                }
            };
            rows.push(MixingRow {
                n,
                max_gap: max_gap.to_scalar(),
                bound,
                pointwise,
                holds,
            });
            forms = forms
                .iter()
                .map(|f| sys.apply_m_star_unchecked(f))
                .collect();
            centred = centred.iter().map(|c| sys.apply_m_unchecked(c)).collect();
        }
        Ok(rows)
    }

    pub fn h_state(&self, prefix: &Word) -> Result<HState<T>> {
        let a = self.system.word_matrix(prefix)?;
        let form = &(&a.transpose() * self.system.energy()) * &a;
        let inv = form.trace().inv().ok_or(Error::ZeroMeasure)?;
        Ok(HState {
            prefix: prefix.clone(),
            h: form.scale(&inv),
        })
    }

    /// `Σ_{α∈S^k} Tr(H_N · M^m(A(α)A(α)ᵀ)) f(α)`: the conditional expectation of
    /// `L^{m+k} f` given the cylinder `prefix`, where `k` is the depth of `f`.
    pub fn transfer_apply(
        &self,
        f: &CylinderFunction<T>,
        mshift: usize,
        prefix: &Word,
        budget: &Budget,
    ) -> Result<T> {
        let h = self.h_state(prefix)?.h;
        let sys = &self.system;
        // Σ_α f(α) A(α)A(α)ᵀ, then M^m, then pair with H
        let mut acc = Matrix::zeros(sys.dim(), sys.dim());
        for (a, v) in sys
            .level_matrices(f.depth(), budget)?
            .iter()
            .zip(f.values())
        {
            if v.is_zero() {
                continue;
            }
            acc = &acc + &(a * &a.transpose()).scale(v);
        }
        for _ in 0..mshift {
            acc = sys.apply_m_unchecked(&acc);
        }
        Ok(h.trace_product(&acc))
    }

    /// [`transfer_apply`](Self::transfer_apply) for every prefix of length `level`.
    pub fn transfer_table(
        &self,
        f: &CylinderFunction<T>,
        mshift: usize,
        level: usize,
        budget: &Budget,
    ) -> Result<CylinderFunction<T>> {
        let sys = &self.system;
        let mut acc = Matrix::zeros(sys.dim(), sys.dim());
        for (a, v) in sys
            .level_matrices(f.depth(), budget)?
            .iter()
            .zip(f.values())
        {
            if !v.is_zero() {
                acc = &acc + &(a * &a.transpose()).scale(v);
            }
        }
        for _ in 0..mshift {
            acc = sys.apply_m_unchecked(&acc);
        }
        let values = sys
            .level_matrices(level, budget)?
            .iter()
            .map(|a| {
                let form = &(&a.transpose() * sys.energy()) * a;
                let inv = form.trace().inv().ok_or(Error::ZeroMeasure)?;
                Ok(form.trace_product(&acc) * inv)
            })
            .collect::<Result<Vec<_>>>()?;
        CylinderFunction::new(self.base(), level, values)
    }

    /// Conditional expectation `E[L^k f | β]` for every `β ∈ S^level`,
    /// by direct integration: `ν(β)^{-1} Σ_{γ∈S^k} ∫_{[γβ]} f dν`.
    pub fn transfer_direct(
        &self,
        f: &CylinderFunction<T>,
        k: usize,
        level: usize,
        budget: &Budget,
    ) -> Result<CylinderFunction<T>> {
        let base = self.base();
        let total = (k + level).max(f.depth());
        budget.check(base, total)?;
        let nus = self.nu_level(total, budget)?;
        let fine = f.refine(total);
        let n_level = base.pow(level as u32);
        let tail = base.pow((total - k - level) as u32);
        let mut num = vec![T::zero(); n_level];
        for (idx, (nu, fv)) in nus.iter().zip(fine.values()).enumerate() {
            // idx = (γ · |S|^level + β) · |S|^tail + δ
            let beta = (idx / tail) % n_level;
            num[beta] = num[beta].clone() + nu.clone() * fv.clone();
        }
        let nu_beta = self.nu_level(level, budget)?;
        let values = num
            .into_iter()
            .zip(nu_beta)
            .map(|(x, nu)| Ok(x * nu.inv().ok_or(Error::ZeroMeasure)?))
            .collect::<Result<Vec<_>>>()?;
        CylinderFunction::new(base, level, values)
    }
}

/// Sequential sampler driven by the exact conditionals.
///
/// Each symbol is drawn by inverting the cumulative distribution of
/// `ν(αs)/ν(α)` over the ordered alphabet, converted to `f64` at the last
/// step. Cumulative tables are memoized per prefix.
pub struct Sampler<'a, T> {
    measure: &'a KusuokaMeasure<T>,
    rng: ChaCha8Rng,
    cdf: HashMap<Word, Vec<f64>>,
}

impl<'a, T: Field> Sampler<'a, T> {
    pub fn new(measure: &'a KusuokaMeasure<T>, seed: u64) -> Self {
        Sampler {
            measure,
            rng: ChaCha8Rng::seed_from_u64(seed),
            cdf: HashMap::new(),
        }
    }

    fn cdf_for(&mut self, prefix: &Word) -> &[f64] {
        if !self.cdf.contains_key(prefix) {
            let sys = self.measure.system();
            let a = sys.word_matrix(prefix).expect("sampled symbols are valid");
            let nu = self.measure.nu_of(&a);
            let inv = nu.inv().expect("sampled cylinders have positive measure");
            let mut acc = 0.0;
            let table: Vec<f64> = (0..sys.base())
                .map(|s| {
                    let p = self.measure.nu_of(&(sys.map(s) * &a)) * inv.clone();
                    acc += p.to_f64();
                    acc
                })
                .collect();
            self.cdf.insert(prefix.clone(), table);
        }
        &self.cdf[prefix]
    }

    pub fn sample(&mut self, length: usize) -> Word {
        let mut w = Word::empty();
        for _ in 0..length {
            let u: f64 = self.rng.random();
            let table = self.cdf_for(&w);
            let total = *table.last().expect("nonempty alphabet");
            let s = table
                .iter()
                .position(|&c| u * total < c)
                .unwrap_or(table.len() - 1);
            w = w.push(s);
        }
        w
    }
}

impl<T: Field> KusuokaMeasure<T> {
    /// One word of the given length, determined by `seed`.
    pub fn sample(&self, length: usize, seed: u64) -> Word {
        Sampler::new(self, seed).sample(length)
    }

    /// `count` independent words from one seeded stream.
    pub fn sample_many(&self, count: usize, length: usize, seed: u64) -> Vec<Word> {
        let mut s = Sampler::new(self, seed);
        (0..count).map(|_| s.sample(length)).collect()
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

    fn sg() -> KusuokaMeasure<Surd> {
        KusuokaMeasure::new(builtin::sg()).unwrap()
    }

    fn w(x: &[usize]) -> Word {
        Word(x.to_vec())
    }

    #[test]
    fn sg_cylinder_values() {
        let m = sg();
        assert_eq!(m.nu(&Word::empty()).unwrap(), Surd::one());
        assert_eq!(m.nu(&w(&[0])).unwrap(), s("1/3"));
        assert_eq!(m.nu(&w(&[0, 0])).unwrap(), s("41/225"));
        assert_eq!(m.nu(&w(&[0, 1])).unwrap(), s("17/225"));
        assert_eq!(m.nu(&w(&[0, 0, 0])).unwrap(), s("73/675"));
    }

    #[test]
    fn conditionals_and_g() {
        let m = sg();
        assert_eq!(m.conditional(&w(&[0]), 0).unwrap(), s("41/75"));
        for sym in 0..3 {
            assert_eq!(m.conditional(&Word::empty(), sym).unwrap(), s("1/3"));
        }
        assert_eq!(m.g_approx(&w(&[0, 0])).unwrap(), s("41/75"));
        assert_eq!(m.g_approx(&w(&[0, 0, 0])).unwrap(), s("73/123"));
        assert!(m.g_approx(&Word::empty()).is_err());
        assert!(m.conditional(&Word::empty(), 3).is_err());
    }

    #[test]
    fn correlation_gaps() {
        let m = sg();
        let a = w(&[0]);
        assert_eq!(m.correlation_gap(&a, &a, 0).unwrap(), s("16/225"));
        assert_eq!(m.correlation_gap(&a, &a, 1).unwrap(), s("64/1125"));
        let b = KusuokaMeasure::new(builtin::bernoulli(&[s("1/3"), s("2/3")]).unwrap()).unwrap();
        assert!(b
            .correlation_gap(&w(&[0, 1]), &w(&[1]), 2)
            .unwrap()
            .is_zero());
    }

    #[test]
    fn mixing_table() {
        let rows = sg().mixing_bound_check(1, 5, &Budget::default()).unwrap();
        assert_eq!(rows[0].max_gap, Scalar::Exact(s("16/225")));
        assert_eq!(rows[0].bound, Scalar::Exact(s("2")));
        assert_eq!(rows[5].bound, Scalar::Exact(s("2048/3125")));
        assert!(rows.iter().all(|r| r.holds));
    }

    #[test]
    fn h_states() {
        let m = sg();
        assert_eq!(
            m.h_state(&Word::empty()).unwrap().h,
            m.system().energy().clone()
        );
        assert_eq!(
            m.h_state(&w(&[0])).unwrap().h,
            Matrix::diag(&[s("9/10"), s("1/10")])
        );
        assert_eq!(
            m.h_state(&w(&[0, 0])).unwrap().h,
            Matrix::diag(&[s("81/82"), s("1/82")])
        );
    }

    #[test]
    fn transfer_apply_matches_nu() {
        let m = sg();
        let b = Budget::default();
        let one = CylinderFunction::constant(3, Surd::one());
        assert_eq!(
            m.transfer_apply(&one, 3, &w(&[1, 2]), &b).unwrap(),
            Surd::one()
        );
        let f = CylinderFunction::indicator(3, &w(&[0]));
        assert_eq!(
            m.transfer_apply(&f, 0, &Word::empty(), &b).unwrap(),
            s("1/3")
        );
        // with an empty prefix this is ∫ L^{m+1} f = ∫ f
        assert_eq!(
            m.transfer_apply(&f, 4, &Word::empty(), &b).unwrap(),
            s("1/3")
        );
    }

    #[test]
    fn sampler_is_deterministic() {
        let m = sg();
        assert_eq!(m.sample(0, 1), Word::empty());
        assert_eq!(m.sample_many(20, 5, 7), m.sample_many(20, 5, 7));
        assert_ne!(m.sample_many(20, 5, 7), m.sample_many(20, 5, 8));
    }

    #[test]
    fn invalid_systems_are_rejected() {
        let sg = builtin::sg();
        let bad = MatrixSystem::new(
            sg.alphabet().clone(),
            sg.scaled_maps(&Surd::int(2)),
            sg.energy().clone(),
        )
        .unwrap();
        assert!(matches!(KusuokaMeasure::new(bad), Err(Error::Invalid(_))));
    }
}
