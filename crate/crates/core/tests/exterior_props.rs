use currentkit::exterior::{basis, binomial, mass, pair, CoVector, MultiVector};
use proptest::prelude::*;

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, n)
}

fn covector(n: usize, r: usize) -> impl Strategy<Value = CoVector> {
    prop::collection::vec(-2.0..2.0f64, binomial(n, r)).prop_map(move |c| CoVector::new(n, r, c).unwrap())
}

/// Dimension and degree pairs, with the middle degrees of n = 4 included.
fn dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=4).prop_flat_map(|n| (Just(n), 0..=n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wedge_of_a_vector_with_itself_vanishes(a in vector(4)) {
        let v = MultiVector::new(4, 1, a).unwrap();
        prop_assert!(v.wedge(&v).unwrap().is_zero());
    }

    #[test]
    fn pairing_is_bounded_by_comass_times_mass(
        (n, r, omega, vs) in dims().prop_flat_map(|(n, r)| {
            (Just(n), Just(r), covector(n, r), prop::collection::vec(vector(n), r))
        })
    ) {
        let refs: Vec<&[f64]> = vs.iter().map(|v| v.as_slice()).collect();
        let xi = MultiVector::from_vectors(n, &refs).unwrap_or_else(|_| MultiVector::scalar(n, 1.0));
        prop_assume!(xi.degree() == r);
        let lhs = pair(&omega, &xi).unwrap().abs();
        prop_assert!(lhs <= omega.comass().value * mass(&xi) + 1e-9);
    }

    #[test]
    fn comass_is_dominated_by_euclidean_norm((n, r, omega) in dims().prop_flat_map(|(n, r)| (Just(n), Just(r), covector(n, r)))) {
        let c = omega.comass();
        prop_assert!(c.value <= omega.norm() + 1e-9, "n={n} r={r}: {} > {}", c.value, omega.norm());
        // the largest coefficient is attained on a coordinate r-plane
        let biggest = omega.coeffs().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(c.value >= biggest - 1e-6);
    }

    #[test]
    fn comass_equals_norm_on_simple_covectors(vs in prop::collection::vec(vector(4), 2)) {
        let a = CoVector::new(4, 1, vs[0].clone()).unwrap();
        let b = CoVector::new(4, 1, vs[1].clone()).unwrap();
        let w = a.wedge(&b).unwrap();
        prop_assert!((w.comass().value - w.norm()).abs() <= 1e-6 * w.norm().max(1.0));
    }

    #[test]
    fn comass_is_homogeneous((n, r, omega) in dims().prop_flat_map(|(n, r)| (Just(n), Just(r), covector(n, r))), s in -4.0..4.0f64) {
        let base = omega.comass();
        let scaled = omega.scale(s).comass();
        let want = s.abs() * base.value;
        if base.exact {
            prop_assert!((scaled.value - want).abs() <= 1e-12 * want.max(1.0), "n={n} r={r}");
        } else {
            prop_assert!((scaled.value - want).abs() <= 1e-6 * want.max(1.0), "n={n} r={r}");
        }
    }

    #[test]
    fn wedge_is_graded_commutative(
        (n, p, q) in (2usize..=4).prop_flat_map(|n| (Just(n), 0..=n)).prop_flat_map(|(n, p)| (Just(n), Just(p), 0..=(n - p))),
        seed in any::<u64>(),
    ) {
        let coeffs = |k: usize, salt: u64| -> Vec<f64> {
            (0..binomial(n, k)).map(|i| (((seed ^ salt).wrapping_mul(6364136223846793005).wrapping_add(i as u64 * 1442695040888963407) >> 40) % 7) as f64 - 3.0).collect()
        };
        let a = CoVector::new(n, p, coeffs(p, 1)).unwrap();
        let b = CoVector::new(n, q, coeffs(q, 2)).unwrap();
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap();
        let sign = if (p * q) % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert_eq!(ab.coeffs().to_vec(), ba.scale(sign).coeffs().to_vec());
    }
}

#[test]
fn basis_sizes_match_binomials() {
    for n in 0..=6 {
        for r in 0..=n {
            assert_eq!(basis(n, r).len(), binomial(n, r));
        }
    }
}
