use nilfourier::coadjoint::{
    coadjoint_apply, dim_km, full_orbit_dim, generic_prefix_dims, is_generic, numeric_prefix_dims, sample_generic, Functional,
};
use nilfourier::fourier::{character, chart_for, kernel_at, QuadratureSpec, SchwartzFunction};
use nilfourier::polarization::{generic_polarization, polarization_check, vergne_polarization};
use nilfourier::signatures::{log_signature, path_signature, PiecewiseLinearPath};
use nilfourier::{GradedElement, GroupSpec, LayeredBasis, Role};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lyndon(d: usize, n: usize) -> LayeredBasis {
    LayeredBasis::lyndon(GroupSpec::new(d, n).unwrap()).unwrap()
}

fn spec_strategy() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=3, 1usize..=4)
}

/// An algebra element of the spec with coefficients in [−1, 1] on every level.
fn algebra_element(spec: GroupSpec, raw: &[f64]) -> GradedElement {
    let mut it = raw.iter().cycle();
    let levels =
        (0..=spec.level).map(|k| (0..spec.tensor_dim(k)).map(|_| if k == 0 { 0.0 } else { *it.next().unwrap() }).collect()).collect();
    GradedElement::from_levels(spec, levels, Role::Algebra).unwrap()
}

fn lie_element(basis: &LayeredBasis, raw: &[f64]) -> GradedElement {
    let coords: Vec<f64> = raw.iter().cycle().take(basis.dim()).copied().collect();
    basis.to_algebra(&coords).unwrap()
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 7..40)
}

fn specs_for_orbits() -> [(usize, usize); 6] {
    [(2, 2), (3, 2), (4, 2), (2, 3), (3, 3), (2, 4)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn truncation_consistency((d, n) in spec_strategy(), a in coeffs(), b in coeffs(), k in 1usize..4, noise in -5.0f64..5.0) {
        let spec = GroupSpec::new(d, n).unwrap();
        let k = k.min(n);
        let g = algebra_element(spec, &a).exp_t().unwrap();
        let h = algebra_element(spec, &b).exp_t().unwrap();
        let perturb = |x: &GradedElement| {
            let mut levels = x.levels();
            for lvl in levels.iter_mut().skip(k + 1) {
                lvl.iter_mut().for_each(|v| *v += noise);
            }
            GradedElement::from_levels(spec, levels, Role::Group).unwrap()
        };
        let base = g.mul(&h).unwrap();
        let moved = perturb(&g).mul(&perturb(&h)).unwrap();
        for j in 0..=k {
            prop_assert_eq!(base.level(j), moved.level(j));
        }
    }

    #[test]
    fn exp_log_round_trip((d, n) in spec_strategy(), a in coeffs()) {
        let spec = GroupSpec::new(d, n).unwrap();
        let x = algebra_element(spec, &a);
        let g = x.exp_t().unwrap();
        prop_assert!(g.log_t().unwrap().max_abs_diff(&x) <= 1e-12);
        prop_assert!(g.log_t().unwrap().exp_t().unwrap().max_abs_diff(&g) <= 1e-12);
    }

    #[test]
    fn bch_with_negative_vanishes((d, n) in spec_strategy(), a in coeffs()) {
        let spec = GroupSpec::new(d, n).unwrap();
        let x = algebra_element(spec, &a);
        let z = x.bch(&x.scale(-1.0)).unwrap();
        prop_assert!(z.norm() <= 1e-12);
    }

    #[test]
    fn adjoint_is_an_automorphism((d, n) in spec_strategy(), a in coeffs(), b in coeffs(), c in coeffs()) {
        let spec = GroupSpec::new(d, n).unwrap();
        let g = algebra_element(spec, &a).exp_t().unwrap();
        let y = algebra_element(spec, &b);
        let z = algebra_element(spec, &c);
        let lhs = g.adjoint(&y.commutator(&z).unwrap()).unwrap();
        let rhs = g.adjoint(&y).unwrap().commutator(&g.adjoint(&z).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-10);
    }

    #[test]
    fn chen_reversal_and_midpoints(
        (d, n) in (1usize..=3, 1usize..=4),
        pts in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 3..7),
        split in 1usize..5,
        t in 0.05f64..0.95,
    ) {
        let spec = GroupSpec::new(d, n).unwrap();
        let pts: Vec<Vec<f64>> = pts.into_iter().map(|p| p[..d].to_vec()).collect();
        let cut = split.min(pts.len() - 2);
        let p = PiecewiseLinearPath::new(pts[..=cut].to_vec()).unwrap();
        let q = PiecewiseLinearPath::new(pts[cut..].to_vec()).unwrap();
        let whole = PiecewiseLinearPath::new(pts.clone()).unwrap();
        let sp = path_signature(&p, spec).unwrap();
        let chen = sp.mul(&path_signature(&q, spec).unwrap()).unwrap();
        prop_assert!(path_signature(&whole, spec).unwrap().max_abs_diff(&chen) <= 1e-10);

        let rev = path_signature(&p.reversed(), spec).unwrap();
        prop_assert!(rev.max_abs_diff(&sp.group_inverse().unwrap()) <= 1e-10);

        let mut refined = pts.clone();
        let mid: Vec<f64> = pts[0].iter().zip(&pts[1]).map(|(a, b)| a + t * (b - a)).collect();
        refined.insert(1, mid);
        let refined = PiecewiseLinearPath::new(refined).unwrap();
        prop_assert!(path_signature(&refined, spec).unwrap().max_abs_diff(&path_signature(&whole, spec).unwrap()) <= 1e-12);
    }

    #[test]
    fn log_signatures_are_lie_elements(
        (d, n) in (2usize..=3, 1usize..=4),
        pts in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 6),
    ) {
        let spec = GroupSpec::new(d, n).unwrap();
        let basis = LayeredBasis::lyndon(spec).unwrap();
        let path = PiecewiseLinearPath::new(pts.into_iter().map(|p| p[..d].to_vec()).collect()).unwrap();
        let ls = log_signature(&path, &basis).unwrap();
        let log = path_signature(&path, spec).unwrap().log_t().unwrap();
        prop_assert!(basis.to_algebra(&ls.coords).unwrap().max_abs_diff(&log) <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn genericity_is_an_orbit_property(spec_idx in 0usize..6, a in coeffs(), seed in any::<u64>(), flat in any::<bool>()) {
        let (d, n) = specs_for_orbits()[spec_idx];
        let basis = lyndon(d, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coords: Vec<f64> = (0..basis.dim()).map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)).collect();
        if flat {
            for j in basis.layer_range(n) {
                coords[j] = 0.0;
            }
        }
        let ell = Functional::new(&basis, coords).unwrap();
        let g = lie_element(&basis, &a).exp_t().unwrap();
        let moved = coadjoint_apply(&basis, &g, &ell).unwrap();
        prop_assert_eq!(is_generic(&basis, &moved).unwrap(), is_generic(&basis, &ell).unwrap());
        for j in basis.layer_range(n) {
            prop_assert!((moved.coords()[j] - ell.coords()[j]).abs() <= 1e-12);
        }
    }

    #[test]
    fn full_orbit_dim_is_even(spec_idx in 0usize..6, seed in any::<u64>()) {
        let (d, n) = specs_for_orbits()[spec_idx];
        let basis = lyndon(d, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coords: Vec<f64> = (0..basis.dim()).map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)).collect();
        let ell = Functional::new(&basis, coords).unwrap();
        prop_assert_eq!(full_orbit_dim(&basis, &ell) % 2, 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn polarization_dimensions_agree(spec_idx in 0usize..6, seed in any::<u64>()) {
        let (d, n) = specs_for_orbits()[spec_idx];
        prop_assume!((d, n) != (2, 3));
        let basis = lyndon(d, n);
        let ell = sample_generic(&basis, seed).unwrap();
        let g = generic_polarization(&basis, &ell).unwrap();
        let v = vergne_polarization(&basis, &ell);
        prop_assert_eq!(g.dim(), v.dim());
        prop_assert!(polarization_check(&basis, &ell, &v).pass);
        prop_assert_eq!(g.dim() + full_orbit_dim(&basis, &ell) / 2, basis.dim());
    }

    #[test]
    fn odd_step_polarization_ignores_the_functional(seed_a in any::<u64>(), seed_b in any::<u64>(), five in any::<bool>()) {
        let basis = if five { lyndon(2, 5) } else { lyndon(3, 3) };
        let ha = generic_polarization(&basis, &sample_generic(&basis, seed_a).unwrap()).unwrap();
        let hb = generic_polarization(&basis, &sample_generic(&basis, seed_b).unwrap()).unwrap();
        prop_assert_eq!(ha.unit_indices(), hb.unit_indices());
    }

    #[test]
    fn characters_are_multiplicative(spec_idx in 0usize..6, seed in any::<u64>(), a in coeffs(), b in coeffs()) {
        let (d, n) = specs_for_orbits()[spec_idx];
        prop_assume!((d, n) != (2, 3));
        let basis = lyndon(d, n);
        let ell = sample_generic(&basis, seed).unwrap();
        let chart = chart_for(&basis, &ell).unwrap();
        let q = chart.h_dim();
        let t1: Vec<f64> = a.iter().cycle().take(q).copied().collect();
        let t2: Vec<f64> = b.iter().cycle().take(q).copied().collect();
        let prod = chart.h_gamma(&basis, &t1).unwrap().mul(&chart.h_gamma(&basis, &t2).unwrap()).unwrap();
        let alpha = chart.gamma_coordinates(&basis, &prod).unwrap();
        prop_assert!(alpha[q..].iter().all(|v| v.abs() < 1e-10));
        let chi12 = character(&basis, &ell, &chart, &alpha[..q]).unwrap();
        let chi1 = character(&basis, &ell, &chart, &t1).unwrap();
        let chi2 = character(&basis, &ell, &chart, &t2).unwrap();
        prop_assert!((chi12 - chi1 * chi2).norm() <= 1e-10);
        prop_assert!((chi1.norm() - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn kernel_is_coset_equivariant(lambda in 0.5f64..2.0, x in -1.0f64..1.0, y in -1.0f64..1.0, h in prop::array::uniform2(-1.0f64..1.0)) {
        let basis = lyndon(2, 2);
        let ell = Functional::new(&basis, vec![lambda, 0.0, 0.0]).unwrap();
        let chart = chart_for(&basis, &ell).unwrap();
        let f = SchwartzFunction::gaussian(vec![1.0, 0.8, 1.2], vec![0.0; 3]).unwrap();
        let q = QuadratureSpec::default();
        let moved = chart.gamma(&basis, &[h[0], h[1], x]).unwrap();
        let base = chart.gamma(&basis, &[0.0, 0.0, x]).unwrap();
        let phase = character(&basis, &ell, &chart, &h).unwrap().conj();
        let lhs = kernel_at(&basis, &f, &ell, &chart, &q, &moved, &[y]).unwrap();
        let rhs: Complex64 = phase * kernel_at(&basis, &f, &ell, &chart, &q, &base, &[y]).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-8, "{} vs {}", lhs, rhs);
    }
}

#[test]
fn maximal_rank_is_symmetric_about_the_middle() {
    for (d, n) in [(2, 2), (3, 2), (2, 3), (3, 3), (2, 4), (3, 4), (2, 5), (2, 6)] {
        let spec = GroupSpec::new(d, n).unwrap();
        let dims = spec.layer_dims().unwrap();
        for k in 1..n {
            if 2 * k != n {
                assert_eq!(dim_km(&spec, k, dims[n - k - 1]), dim_km(&spec, n - k, dims[k - 1]), "({d},{n}) k={k}");
            }
        }
    }
}

#[test]
fn non_generic_orbits_are_smaller() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for (d, n) in specs_for_orbits() {
        let basis = lyndon(d, n);
        let mut coords = sample_generic(&basis, 2).unwrap().coords().to_vec();
        for j in basis.layer_range(n) {
            coords[j] = 0.0;
        }
        let ell = Functional::new(&basis, coords).unwrap();
        let numeric = numeric_prefix_dims(&basis, &ell, 4, &mut rng);
        let generic = generic_prefix_dims(&basis);
        assert!(numeric.iter().zip(&generic).all(|(a, b)| a <= b), "({d},{n})");
        assert!(numeric.iter().zip(&generic).any(|(a, b)| a < b), "({d},{n})");
    }
}
