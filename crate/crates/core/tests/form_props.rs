use currentkit::exterior::binomial;
use currentkit::form::{lie_bound_constant, seminorm_comass, seminorm_sharp, seminorm_upper_bounds, vector_lip_norm};
use currentkit::lipschitz::AffineMap;
use currentkit::{AxisBox, FormField, Grid, Polynomial, VectorField};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Polynomial with small integer coefficients, so that all symbolic
/// identities hold exactly in floating point.
fn int_poly(n: usize, deg: u32) -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((prop::collection::vec(0..=deg, n), -3i32..=3), 1..5).prop_map(move |terms| {
        let mut p = Polynomial::zero(n);
        for (e, c) in terms {
            if e.iter().sum::<u32>() <= deg {
                p.add_term(e, c as f64);
            }
        }
        p
    })
}

fn int_form(n: usize, r: usize, deg: u32) -> impl Strategy<Value = FormField> {
    prop::collection::vec(int_poly(n, deg), binomial(n, r)).prop_map(move |c| FormField::polynomial(n, r, c).unwrap())
}

fn int_field(n: usize, deg: u32) -> impl Strategy<Value = VectorField> {
    prop::collection::vec(int_poly(n, deg), n).prop_map(VectorField::polynomial_field)
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=4).prop_flat_map(|n| (Just(n), 0..=n))
}

fn same(a: &FormField, b: &FormField) -> bool {
    a.components().unwrap().iter().zip(b.components().unwrap()).all(|(p, q)| p.sub(q).is_zero())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn d_squared_vanishes_exactly((n, r, phi) in dims().prop_filter("room for d∘d", |(n, r)| r + 2 <= *n).prop_flat_map(|(n, r)| (Just(n), Just(r), int_form(n, r, 3)))) {
        let dd = phi.exterior_derivative().unwrap().exterior_derivative().unwrap();
        prop_assert!(same(&dd, &FormField::zero(n, r + 2)));
    }

    #[test]
    fn cartan_identity_is_exact((n, phi, v) in dims().prop_flat_map(|(n, r)| (Just(n), int_form(n, r, 2), int_field(n, 2)))) {
        let _ = n;
        let cartan = phi.lie_derivative(&v).unwrap();
        let components = phi.lie_derivative_components(&v).unwrap();
        prop_assert!(same(&cartan, &components));
    }

    #[test]
    fn pullback_commutes_with_d(
        (n, r, phi) in (1usize..=3).prop_flat_map(|n| (Just(n), 0..n)).prop_flat_map(|(n, r)| (Just(n), Just(r), int_form(n, r, 2))),
        entries in prop::collection::vec(-2i32..=2, 9),
        offset in prop::collection::vec(-2i32..=2, 3),
    ) {
        let a = DMatrix::from_fn(n, n, |i, j| entries[i * 3 + j] as f64);
        let f = AffineMap::new(a, offset[..n].iter().map(|v| *v as f64).collect()).unwrap();
        let lhs = phi.exterior_derivative().unwrap().pullback(&f).unwrap();
        let rhs = phi.pullback(&f).unwrap().exterior_derivative().unwrap();
        prop_assert!(same(&lhs, &rhs), "r = {r}");
    }

    #[test]
    fn lie_bound_holds_on_grids(
        (n, r, phi, v) in (1usize..=3).prop_flat_map(|n| (Just(n), 0..=n)).prop_flat_map(|(n, r)| (Just(n), Just(r), int_form(n, r, 2), int_field(n, 1))),
    ) {
        let grid = Grid::uniform(AxisBox::unit(n), 5).unwrap();
        let lie = phi.lie_derivative(&v).unwrap();
        let lhs = seminorm_comass(&lie, &grid).value;
        let s = seminorm_upper_bounds(&phi, &grid).unwrap().sharp.max(seminorm_sharp(&phi, &grid).value);
        let rhs = lie_bound_constant(n, r) * s * vector_lip_norm(&v, &grid);
        prop_assert!(lhs <= rhs + 1e-9, "{lhs} > {rhs}");
    }

    #[test]
    fn nested_grids_never_decrease_estimates(phi in int_form(2, 1, 3)) {
        let coarse = Grid::uniform(AxisBox::unit(2), 3).unwrap();
        let fine = Grid::uniform(AxisBox::unit(2), 5).unwrap();
        prop_assert!(seminorm_comass(&phi, &fine).value >= seminorm_comass(&phi, &coarse).value);
        prop_assert!(seminorm_sharp(&phi, &fine).value >= seminorm_sharp(&phi, &coarse).value - 1e-12);
    }
}

#[test]
fn sampled_d_squared_is_small() {
    let phi = FormField::sampled(3, 1, 1e-4, |x| vec![x[1].sin(), x[0] * x[2].cos(), (x[0] * x[1]).exp()]);
    let dd = phi.exterior_derivative().unwrap().exterior_derivative().unwrap();
    for x in [[0.1, 0.2, 0.3], [0.7, -0.4, 0.2]] {
        assert!(dd.eval_coeffs(&x).iter().all(|c| c.abs() < 1e-4), "{:?}", dd.eval_coeffs(&x));
    }
}
