use std::sync::OnceLock;

use kusuoka::builtin;
use kusuoka::gasket::generate_system;
use kusuoka::linalg::symmetric_eigenvalues;
use kusuoka::procspace::{
    martingale_decompose, process_inner, process_norm_sq, shift_t, transfer_l, FiniteProcess,
};
use kusuoka::symbolic::enumerate;
use kusuoka::{Budget, CylinderFunction, Field, KusuokaMeasure, Matrix, MatrixSystem, Surd, Word};
use proptest::prelude::*;

fn sg3() -> &'static MatrixSystem<Surd> {
    static SG3: OnceLock<MatrixSystem<Surd>> = OnceLock::new();
    SG3.get_or_init(|| generate_system(3).unwrap())
}

fn rational() -> impl Strategy<Value = Surd> {
    (-20i64..=20, 1i64..=9).prop_map(|(n, d)| Surd::ratio(n, d))
}

fn matrix2() -> impl Strategy<Value = Matrix<Surd>> {
    prop::collection::vec(rational(), 4).prop_map(|v| Matrix::from_vector(2, 2, v))
}

fn small_f64() -> impl Strategy<Value = f64> {
    -1.0f64..1.0
}

fn word(base: usize, max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(0..base, 0..=max_len).prop_map(Word)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn m_and_m_star_are_adjoint(a in matrix2(), b in matrix2(), pick in 0usize..2) {
        let sys = if pick == 0 { builtin::sg() } else { sg3().clone() };
        let lhs = sys.apply_m(&a).unwrap().trace_product_t(&b);
        let rhs = a.trace_product_t(&sys.apply_m_star(&b).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn m_preserves_energy_trace_on_sg(b in matrix2()) {
        let sys = builtin::sg();
        let e = sys.energy();
        prop_assert_eq!((e * &sys.apply_m(&b).unwrap()).trace(), (e * &b).trace());
    }

    #[test]
    fn m_preserves_psd(v in prop::collection::vec(small_f64(), 4), pick in 0usize..2) {
        let sys = if pick == 0 { builtin::sg().to_f64() } else { sg3().to_f64() };
        let c = Matrix::from_vector(2, 2, v);
        let b = &c * &c.transpose();
        let image = sys.apply_m(&b).unwrap();
        prop_assert!(symmetric_eigenvalues(&image)[0] >= -1e-12);
    }

    #[test]
    fn energy_product_is_bi_invariant(x in matrix2(), y in matrix2(), k in 0usize..=3) {
        let sys = builtin::sg();
        let mats = sys.level_matrices(k, &Budget::default()).unwrap();
        let sum = mats.iter().fold(Surd::zero(), |acc, a| {
            acc + sys.inner_e(&(a * &x), &(a * &y)).unwrap()
        });
        prop_assert_eq!(sum, sys.inner_e(&x, &y).unwrap());
    }

    #[test]
    fn word_matrix_reverses_products(a in word(3, 4), b in word(3, 4)) {
        let sys = builtin::sg();
        let ab = sys.word_matrix(&a.concat(&b)).unwrap();
        let expected = &sys.word_matrix(&b).unwrap() * &sys.word_matrix(&a).unwrap();
        prop_assert_eq!(ab, expected);
    }

    #[test]
    fn m_does_not_raise_top_eigenvalue(a in small_f64(), b in small_f64(), pick in 0usize..2) {
        let sys = if pick == 0 { builtin::sg().to_f64() } else { sg3().to_f64() };
        let m = Matrix::from_rows(vec![vec![a, b], vec![b, -a]]).unwrap();
        let before = symmetric_eigenvalues(&m)[1];
        let after = symmetric_eigenvalues(&sys.apply_m(&m).unwrap())[1];
        prop_assert!(after <= before + 1e-12);
    }

    #[test]
    fn martingale_differences_are_orthogonal(v in prop::collection::vec(rational(), 9)) {
        let m = KusuokaMeasure::new(builtin::sg()).unwrap();
        let b = Budget::default();
        let f = CylinderFunction::new(3, 2, v).unwrap();
        let rep = martingale_decompose(&m, &f, &b).unwrap();
        let nus = m.nu_level(2, &b).unwrap();
        for i in 0..=2 {
            for j in 0..i {
                let (x, y) = (rep.components[i].refine(2), rep.components[j].refine(2));
                let ip = nus.iter().enumerate().fold(Surd::zero(), |acc, (w, nu)| {
                    acc + nu.clone() * x.get(w).clone() * y.get(w).clone()
                });
                prop_assert!(ip.is_zero(), "components {} and {} not orthogonal", i, j);
            }
            // each difference has zero conditional mean one level up
            if i > 0 {
                let level = m.nu_level(i, &b).unwrap();
                let c = &rep.components[i];
                for parent in 0..level.len() / 3 {
                    let mean = (0..3).fold(Surd::zero(), |acc, s| {
                        acc + level[parent * 3 + s].clone() * c.get(parent * 3 + s).clone()
                    });
                    prop_assert!(mean.is_zero());
                }
            }
        }
    }

    #[test]
    fn shift_is_an_isometry_and_transfer_its_adjoint(
        f in prop::collection::vec(matrix2(), 3),
        g in prop::collection::vec(matrix2(), 9),
    ) {
        let sys = builtin::sg();
        let f = FiniteProcess::new(&sys, 1, f).unwrap();
        let g = FiniteProcess::new(&sys, 2, g).unwrap();
        let tf = shift_t(&sys, &f);
        prop_assert_eq!(process_norm_sq(&sys, &tf), process_norm_sq(&sys, &f));
        prop_assert_eq!(
            process_inner(&sys, &transfer_l(&sys, &g), &f),
            process_inner(&sys, &g, &tf)
        );
    }

    #[test]
    fn surd_arithmetic_is_a_field(a in rational(), b in rational(), c in rational(), r in 0usize..3) {
        let root = [Surd::int(1), "sqrt(3)".parse().unwrap(), "sqrt(15)".parse().unwrap()][r].clone();
        let x = a.clone() + b.clone() * root.clone();
        let y = b.clone() - c.clone() * root;
        prop_assert_eq!((x.clone() + y.clone()) * c.clone(), x.clone() * c.clone() + y.clone() * c);
        if !x.is_zero() {
            prop_assert_eq!(x.clone() * x.inv().unwrap(), Surd::one());
        }
        prop_assert!((x.to_f64() * y.to_f64() - (x * y).to_f64()).abs() < 1e-9);
    }
}

#[test]
fn contraction_accompanies_irreducibility() {
    let b = Budget::default();
    for sys in [builtin::sg(), sg3().clone()] {
        let c1 = kusuoka::spectral::c_k(&sys, 1, &b).unwrap();
        let t1 = kusuoka::spectral::theta1(&sys).unwrap();
        assert!(c1.value.to_f64() > 0.0);
        assert!(t1.value.to_f64() < 1.0);
    }
}

#[test]
fn additivity_on_generated_gasket() {
    let m = KusuokaMeasure::new(sg3().clone()).unwrap();
    for w in enumerate(6, 2, &Budget::default()).unwrap() {
        let children = (0..6).fold(Surd::zero(), |a, s| a + m.nu(&w.push(s)).unwrap());
        assert_eq!(children, m.nu(&w).unwrap());
    }
}
