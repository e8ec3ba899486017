use std::sync::Arc;

use currentkit::complex::SimplicialComplex;
use currentkit::flat::flat_norm_lp;
use currentkit::lipschitz::{
    lipschitz_constant, mollify, pushforward_chain, strong_lip_distance_with, AffineMap, Composition, FnMap, LipMap,
    PairSampling, TentMap,
};
use currentkit::{AxisBox, Chain, FormField, Grid, Polynomial};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn affine(n: usize) -> impl Strategy<Value = AffineMap> {
    (prop::collection::vec(-1.5..1.5f64, n * n), prop::collection::vec(-1.0..1.0f64, n))
        .prop_filter_map("singular map", move |(a, b)| {
            let m = DMatrix::from_row_slice(n, n, &a);
            (m.determinant().abs() > 0.05).then(|| AffineMap::new(m, b).unwrap())
        })
}

fn complex2() -> SimplicialComplex {
    SimplicialComplex::freudenthal(&AxisBox::unit(2), 2).unwrap()
}

fn chain(k: usize) -> impl Strategy<Value = Chain> {
    let cx = complex2();
    let len = cx.simplices(k).len();
    prop::collection::vec(-2i32..=2, len).prop_map(move |c| {
        cx.chain_from_coefficients(k, &c.iter().map(|v| *v as f64).collect::<Vec<_>>())
    })
}

fn lip(f: &AffineMap) -> f64 {
    lipschitz_constant(f, &Grid::uniform(AxisBox::unit(2), 3).unwrap()).value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pushforward_is_functorial(f in affine(2), g in affine(2), t in chain(1)) {
        let gf = Composition::new(Arc::new(g.clone()), Arc::new(f.clone())).unwrap();
        let direct = pushforward_chain(&gf, &t, 0).unwrap();
        let stepwise = pushforward_chain(&g, &pushforward_chain(&f, &t, 0).unwrap(), 0).unwrap();
        let phi = FormField::polynomial(2, 1, vec![
            Polynomial::var(2, 1).pow(2),
            Polynomial::var(2, 0).mul(&Polynomial::var(2, 1)),
        ]).unwrap();
        let a = direct.evaluate(&phi).unwrap();
        let b = stepwise.evaluate(&phi).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn boundary_commutes_with_affine_pushforward(f in affine(2), t in chain(2)) {
        let lhs = pushforward_chain(&f, &t, 0).unwrap().boundary().unwrap();
        let rhs = pushforward_chain(&f, &t.boundary().unwrap(), 0).unwrap();
        prop_assert_eq!(lhs.simplify(), rhs.simplify());
    }

    #[test]
    fn mass_and_normal_bounds(f in affine(2), t in prop_oneof![chain(1), chain(2)]) {
        let l = lip(&f);
        let r = t.degree() as i32;
        let image = pushforward_chain(&f, &t, 0).unwrap();
        prop_assert!(image.mass().value <= l.powi(r) * t.mass().value + 1e-6);
        let normal = |c: &Chain| c.mass().value + c.boundary().map(|b| b.mass().value).unwrap_or(0.0);
        prop_assert!(normal(&image) <= l.powi(r).max(l.powi(r - 1)) * normal(&t) + 1e-6);
    }

    #[test]
    fn flat_bound_via_image_complex(f in affine(2), t in chain(1)) {
        let cx = complex2();
        let image_cx = cx.map_vertices(|x| f.apply(x));
        let l = lip(&f);
        let before = flat_norm_lp(&t, &cx).unwrap().value;
        let image = pushforward_chain(&f, &t, 0).unwrap();
        let after = flat_norm_lp(&image, &image_cx).unwrap().value;
        prop_assert!(after <= l.max(l * l) * before + 1e-6, "{after} > {} · {before}", l.max(l * l));
    }
}

#[test]
fn mollification_converges_in_strong_lipschitz_distance() {
    // smooth perturbation of the identity
    let f = FnMap::new("wave", 2, |x: &[f64]| vec![x[0] + 0.1 * (3.0 * x[1]).sin(), x[1] + 0.1 * (2.0 * x[0]).cos()]);
    let grid = Grid::uniform(AxisBox::unit(2), 7).unwrap();
    let sampling = PairSampling {
        all_pairs_limit: 100,
        quasi_random_pairs: 200,
    };
    let dists: Vec<f64> = [0.2, 0.1, 0.05, 0.025]
        .iter()
        .map(|&rho| strong_lip_distance_with(&mollify(&f, rho).unwrap(), &f, &grid, &sampling))
        .collect();
    assert!(dists.windows(2).all(|w| w[1] < w[0]), "{dists:?}");
}

#[test]
fn tent_map_pushforward_is_exact_on_aligned_lattice() {
    let tent = TentMap::new(vec![0.5, 0.5], 0.25, vec![0.1, 0.05]).unwrap();
    let t = Chain::kuhn_box(&AxisBox::unit(2), 8).unwrap();
    let image = pushforward_chain(&tent, &t, 0).unwrap();
    // the tent map is an orientation-preserving bijection of the square
    assert!((image.mass().value - 1.0).abs() < 1e-12);
    let refined = pushforward_chain(&tent, &t, 1).unwrap();
    let x2 = FormField::monomial_form(2, &[0, 1], Polynomial::var(2, 0).pow(2)).unwrap();
    assert!((image.evaluate(&x2).unwrap() - refined.evaluate(&x2).unwrap()).abs() < 1e-12);
}
