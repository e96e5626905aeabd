use num_traits::{One, Zero};
use proptest::prelude::*;
use tfe_core::enumerate::enumerate_populated;
use tfe_core::multiindex::poly_degree;
use tfe_core::scalar::{DisplacementPoly, Rational};
use tfe_core::structure::{
    d0_entry, dn_entry, gamma_apply, gamma_entry, SeriesVector, StructureMap,
};
use tfe_core::{mi, ModelParams, Multiindex};

#[path = "support/structure_maps.rs"]
mod structure_maps;
use structure_maps::*;

fn value() -> impl Strategy<Value = (i64, i64)> {
    (-3i64..=3, 1i64..=4).prop_filter("nonzero", |(n, _)| *n != 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn multiplicative(
        picks in prop::collection::vec((0usize..1000, value()), 1..6),
        xs in prop::collection::vec((0usize..1000, value()), 1..4),
        ys in prop::collection::vec((0usize..1000, value()), 1..4),
    ) {
        let p = params();
        let map = build_map(&p, &picks);
        let x = build_series(&p, &xs);
        let y = build_series(&p, &ys);
        let lhs = gamma_apply(&x.times(&y, &p, CUTOFF), &map, &p, CUTOFF).unwrap();
        let gx = gamma_apply(&x, &map, &p, CUTOFF).unwrap();
        let gy = gamma_apply(&y, &map, &p, CUTOFF).unwrap();
        prop_assert_eq!(&lhs, &gx.times(&gy, &p, CUTOFF));

        let fmap = to_float(&map);
        let (fx, fy) = (to_float_series(&x), to_float_series(&y));
        let flhs = gamma_apply(&fx.times(&fy, &p, CUTOFF), &fmap, &p, CUTOFF).unwrap();
        let frhs = gamma_apply(&fx, &fmap, &p, CUTOFF).unwrap()
            .times(&gamma_apply(&fy, &fmap, &p, CUTOFF).unwrap(), &p, CUTOFF);
        let scale = flhs.coeffs.values().chain(frhs.coeffs.values()).fold(0.0f64, |m, v| m.max(v.abs()));
        for b in flhs.coeffs.keys().chain(frhs.coeffs.keys()) {
            let diff = (flhs.get(b) - frhs.get(b)).abs();
            prop_assert!(diff <= 1e-12 * scale.max(1.0), "{} differs by {}", b, diff);
        }
    }

    #[test]
    fn triangular_and_consistent(picks in prop::collection::vec((0usize..1000, value()), 1..6)) {
        let p = params();
        let map = build_map(&p, &picks);
        let rows = enumerate_populated(&p, CUTOFF).unwrap();
        for gamma in series_pool(&p) {
            if gamma.homogeneity(&p) >= CUTOFF {
                continue;
            }
            let col = gamma_apply(&SeriesVector::monomial(gamma.clone(), Rational::one()), &map, &p, CUTOFF).unwrap();
            prop_assert_eq!(col.get(&gamma), Rational::one());
            for (beta, v) in &col.coeffs {
                if *beta == gamma || v.is_zero() {
                    continue;
                }
                prop_assert!(gamma.homogeneity(&p) < beta.homogeneity(&p));
                if beta.is_populated() {
                    prop_assert!(gamma.order_length(&p) < beta.order_length(&p));
                }
                if gamma.is_populated() {
                    prop_assert!(beta.is_populated(), "{} -> {} leaves populated set", gamma, beta);
                }
            }
            for beta in &rows {
                let e = gamma_entry(beta, &gamma, &map, &p).unwrap();
                prop_assert_eq!(e, col.get(beta), "entry ({}, {})", beta, gamma);
            }
        }
    }
}

#[test]
fn identity_map() {
    let p = params();
    let map: StructureMap<Rational> = StructureMap::identity();
    let s = build_series(&p, &[(1, (2, 3)), (7, (-1, 1))]);
    assert_eq!(gamma_apply(&s, &map, &p, CUTOFF).unwrap(), s);
    assert_eq!(gamma_entry(&mi("f0+f1"), &mi("f0+f1"), &map, &p).unwrap(), Rational::one());
    assert_eq!(gamma_entry(&mi("f0+f1"), &mi("f0"), &map, &p).unwrap(), Rational::zero());
}

#[test]
fn gamma_on_polynomial_coordinate() {
    let p = params();
    let map = build_map(&p, &[(3, (1, 2)), (10, (-2, 3)), (17, (3, 1)), (25, (1, 4))]);
    for n in [vec![0, 1], vec![0, 2]] {
        let pn = mi(&format!("g({},{})", n[0], n[1]));
        let got = gamma_apply(&SeriesVector::monomial(pn.clone(), Rational::one()), &map, &p, 4.0).unwrap();
        let mut want = SeriesVector::monomial(pn, Rational::one());
        if let Some(pi) = map.pi.get(&n) {
            for (b, v) in pi {
                want.add_term(b.clone(), *v);
            }
        }
        assert_eq!(got, want.truncate(&p, 4.0));
    }
}

#[test]
fn a0_b0_product() {
    let p = params();
    let map = build_map(&p, &[(0, (1, 2)), (4, (2, 1)), (9, (-1, 3))]);
    let a0 = SeriesVector::monomial(mi("e0"), Rational::one());
    let b0 = SeriesVector::monomial(mi("f0"), Rational::one());
    let lhs = gamma_apply(&a0.times(&b0, &p, 3.5), &map, &p, 3.5).unwrap();
    let rhs = gamma_apply(&a0, &map, &p, 3.5)
        .unwrap()
        .times(&gamma_apply(&b0, &map, &p, 3.5).unwrap(), &p, 3.5);
    assert_eq!(lhs, rhs);
}

fn binom(n: u32, k: u32) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

#[test]
fn recentering_polynomials() {
    let p = ModelParams::new(0.55, 1).unwrap();
    let mut map: StructureMap<DisplacementPoly> = StructureMap::identity();
    let top = 6u32;
    let idx = |n: &[u32]| -> Vec<u32> { n.to_vec() };
    let all: Vec<Vec<u32>> = (0..=1).flat_map(|a| (0..=top).map(move |b| vec![a, b])).filter(|n| n.iter().any(|&x| x > 0)).collect();
    for n in &all {
        for m in &all {
            if m == n || m[0] > n[0] || m[1] > n[1] {
                continue;
            }
            let c = binom(n[0], m[0]) * binom(n[1], m[1]);
            let e = [n[0] - m[0], n[1] - m[1]];
            let beta = Multiindex::g(n);
            map.set(idx(m), beta, DisplacementPoly::monomial(Rational::from_integer(c), &e));
        }
    }
    for n in &all {
        for m in &all {
            let got = gamma_entry(&Multiindex::g(n), &Multiindex::g(m), &map, &p).unwrap();
            let want = if m == n {
                DisplacementPoly::one()
            } else if m[0] <= n[0] && m[1] <= n[1] {
                DisplacementPoly::monomial(
                    Rational::from_integer(binom(n[0], m[0]) * binom(n[1], m[1])),
                    &[n[0] - m[0], n[1] - m[1]],
                )
            } else {
                DisplacementPoly::zero()
            };
            assert_eq!(got, want, "n={n:?} m={m:?}");
        }
    }
}

#[test]
fn exchange_relations() {
    let p = ModelParams::new(0.55, 1).unwrap();
    let mut pool = enumerate_populated(&p, 3.2).unwrap();
    pool.extend(["e0+f1", "e0+e1+f0", "2e0+f2", "e0+f0+g(0,1)"].iter().map(|s| mi(s)));
    let ns = [vec![0u32, 1], vec![0, 2], vec![1, 0]];
    for beta in &pool {
        for gamma in &pool {
            if d0_entry(beta, gamma) != 0 {
                assert_eq!(beta.a_count(), gamma.a_count());
                assert_eq!(beta.b_count(), gamma.b_count());
                assert_eq!(beta.weighted_ab(), 1 + gamma.weighted_ab());
                assert_eq!(beta.p_part(), gamma.p_part());
                assert!((beta.homogeneity(&p) - gamma.homogeneity(&p) - p.alpha).abs() < 1e-12);
            }
            for n in &ns {
                if dn_entry(beta, gamma, n) != 0 {
                    assert_eq!(beta.a_part(), gamma.a_part());
                    assert_eq!(beta.b_part(), gamma.b_part());
                    assert_eq!(beta.p(n) + 1, gamma.p(n));
                    assert_eq!(beta.p_count() + 1, gamma.p_count());
                    let shift = p.alpha - poly_degree(n) as f64;
                    assert!((beta.homogeneity(&p) - gamma.homogeneity(&p) - shift).abs() < 1e-12);
                }
            }
        }
    }
}


#[test]
fn product_on_cutoff_boundary() {
    // f1+4g(0,1) sits at |β| = 2.9 exactly
    let p = params();
    let mut map: StructureMap<Rational> = StructureMap::identity();
    map.set(vec![0, 1], mi("f1+g(0,1)"), Rational::new(-1, 1));
    let x = SeriesVector::monomial(mi("2g(0,1)"), Rational::one());
    let y = SeriesVector::monomial(mi("2g(0,1)"), Rational::new(-1, 1));
    let lhs = gamma_apply(&x.times(&y, &p, CUTOFF), &map, &p, CUTOFF).unwrap();
    let rhs = gamma_apply(&x, &map, &p, CUTOFF).unwrap().times(&gamma_apply(&y, &map, &p, CUTOFF).unwrap(), &p, CUTOFF);
    assert_eq!(lhs, rhs);
}
