use nlkg_core::exponents::{
    alpha_midpoint, alpha_range, embedding_upper_bound, euclidean_rho, gamma_of, gamma_upper_bound, int,
    interpolation_witness, is_admissible_product, rat, rational_grid, rho_star, s_of, small_data_exponents, ExtRat,
    WITNESS_DENOMINATOR_BOUND,
};
use num_rational::BigRational;
use num_traits::{One, Signed};
use proptest::prelude::*;

fn rational(lo: i64, hi: i64) -> impl Strategy<Value = BigRational> {
    (1i64..=24).prop_flat_map(move |k| (lo * k..=hi * k).prop_map(move |n| rat(n, k)))
}

fn extended(lo: i64, hi: i64) -> impl Strategy<Value = ExtRat> {
    prop_oneof![
        9 => rational(lo, hi).prop_map(ExtRat::Finite),
        1 => Just(ExtRat::Infinity),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn gamma_nonnegative_on_admissible_pairs(d in 1u32..=4, q in extended(2, 20), r in extended(1, 40)) {
        if is_admissible_product(&q, &r, d).holds {
            let g = gamma_of(&q, &r, d).unwrap();
            prop_assert!(g.nonneg, "gamma({q}, {r}, {d}) = {}", g.gamma);
            // At q = r = ∞ the strict inequality degenerates to γ = 1/2.
            if d == 1 && !(q.is_infinite() && r.is_infinite()) {
                prop_assert_eq!(g.above_half, Some(true));
            }
        }
    }

    #[test]
    fn small_data_exponent_is_positive(d in 1u32..=4, q in rational(1, 20)) {
        let top = if d == 1 { None } else { Some(int(d as i64 + 1) / int(d as i64 - 1)) };
        let legal = q > BigRational::one() && top.as_ref().is_none_or(|t| q < *t);
        match small_data_exponents(&q, d) {
            Ok(x) => {
                prop_assert!(legal);
                prop_assert!(x.e.is_positive() && x.beta.is_negative());
            }
            Err(_) => prop_assert!(!legal),
        }
    }

    #[test]
    fn verdicts_are_pure(d in 1u32..=4, q in extended(1, 20), r in extended(1, 20)) {
        prop_assert_eq!(is_admissible_product(&q, &r, d), is_admissible_product(&q, &r, d));
    }
}

#[test]
fn midpoint_pair_is_admissible_in_every_dimension() {
    for d in 1..=4 {
        let alpha = alpha_midpoint(d).unwrap();
        assert!(alpha_range(d).unwrap().strict.contains(&alpha));
        let q = ExtRat::Finite(&alpha + BigRational::one());
        let r = ExtRat::Finite(int(2) * &alpha + int(2));
        let v = is_admissible_product(&q, &r, d);
        assert!(v.holds, "d = {d}, alpha = {alpha}: {:?}", v.violated);
    }
}

#[test]
fn gamma_nonnegative_on_a_dense_grid() {
    let qs = rational_grid(&int(2), &int(20), 12);
    let rs = rational_grid(&int(1), &int(40), 6);
    for d in 1..=4 {
        for q in &qs {
            let q = ExtRat::Finite(q.clone());
            for r in rs.iter().cloned().map(ExtRat::Finite).chain([ExtRat::Infinity]) {
                if is_admissible_product(&q, &r, d).holds {
                    assert!(gamma_of(&q, &r, d).unwrap().nonneg, "({q}, {r}, {d})");
                }
            }
        }
    }
}

#[test]
fn gamma_bound_dominates_rho_star_in_high_dimension() {
    for d in 3..=4 {
        for q in rational_grid(&int(2), &int(20), 16) {
            let rho = euclidean_rho(&q, d).unwrap();
            let s = s_of(&rho, d).unwrap();
            if !s.in_unit_interval {
                continue;
            }
            let star = rho_star(&rho, &s.s, d).unwrap();
            assert!(gamma_upper_bound(&q, d) >= star, "d = {d}, q = {q}: rho* = {star}");
            assert!(embedding_upper_bound(&q, d) >= star || star.is_infinite());
        }
    }
}

#[test]
fn witnesses_exist_across_the_legal_window() {
    for (alpha, d, q_hi) in [(int(5), 1, 12), (int(6), 1, 12), (rat(5, 2), 2, 6), (int(3), 2, 6)] {
        let qs = rational_grid(&rat(5, 2), &int(q_hi), 2);
        for q in qs.iter().filter(|q| **q > int(2) && **q < int(q_hi)) {
            let out = interpolation_witness(&alpha, d, q, WITNESS_DENOMINATOR_BOUND).unwrap();
            let w = out
                .witness()
                .unwrap_or_else(|| panic!("no witness for alpha {alpha}, d {d}, q {q}"));
            assert_eq!(&w.a + &w.b, int(2) * &alpha + int(2));
            assert!(is_admissible_product(&w.pair.0, &w.pair.1, d).holds);
            assert_eq!(&w.r * &w.a, *q);
        }
    }
}
