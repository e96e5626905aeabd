use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use statrs::function::gamma::gamma as gamma_ref;
use tfe_core::counterterm::{
    counterterm_h, counterterm_h_tfe, eval_C_constants, eval_c1, eval_c2, eval_c3, eval_constants_with,
    leading_form_half, limit_closed_forms, scaling_exponents, tfe_leading_form, Accuracy, CountertermTable,
    CovarianceSpec, Estimate, MollifierKind, MollifierSpec,
};
use tfe_core::special::gamma;
use tfe_core::{mi, ModelParams};

/// ∫_0^{π/2} cos^ν θ dθ
fn wallis(nu: f64) -> f64 {
    PI.sqrt() * gamma_ref((nu + 1.0) / 2.0) / (2.0 * gamma_ref(nu / 2.0 + 1.0))
}

/// The constants reduce to products of Γ-values once the radial and angular
/// integrals are separated in k₁ = r, k₀ = r⁴tanθ.
fn separated(alpha: f64, kind: MollifierKind) -> [f64; 3] {
    let p = (2.0 * alpha - 1.0) / 8.0;
    let nu = (1.0 - 8.0 * p) / 8.0;
    let pre = 4.0 / (2.0 * PI).powi(2);
    let (g0, g1) = (gamma_ref(nu), gamma_ref(nu + 1.0));
    match kind {
        MollifierKind::Semigroup => {
            let c1 = pre * g0 / 8.0 * (4.0 * wallis(2.25) - 2.0 * wallis(0.25));
            let c2 = -pre * (g1 + p * g0) * wallis(2.25);
            let c3 = -3.0 * pre * g0 / 8.0 * wallis(2.25);
            [c1, c2, c3]
        }
        MollifierKind::Anisotropic => {
            let c1 = pre * g0 / 8.0 * (4.0 * wallis(2.0 + 2.0 * p) - 2.0 * wallis(2.0 * p));
            let c2 = -pre * (g1 * wallis(2.0 * p) + p * g0 * wallis(2.0 + 2.0 * p));
            let c3 = -3.0 * pre * g0 / 8.0 * wallis(2.0 + 2.0 * p);
            [c1, c2, c3]
        }
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1e-300)
}

#[test]
fn gamma_against_reference() {
    for i in 1..400 {
        let x = -3.97 + 0.0331 * i as f64;
        if (x - x.round()).abs() < 1e-6 && x <= 0.0 {
            continue;
        }
        let (a, b) = (gamma(x), gamma_ref(x));
        assert!(close(a, b, 1e-12), "x={x}: {a} vs {b}");
    }
    assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-12);
    assert!((gamma(1.0) - 1.0).abs() < 1e-12);
}

#[test]
fn universal_constants_against_separated_forms() {
    for kind in [MollifierKind::Semigroup, MollifierKind::Anisotropic] {
        for alpha in [0.5, 0.55, 0.6, 0.75, 0.9, 0.95] {
            let got = eval_C_constants(alpha, kind).unwrap();
            let want = separated(alpha, kind);
            for i in 0..3 {
                let tol = 1e-10 * want[i].abs().max(1e-3);
                assert!(
                    (got[i].value - want[i]).abs() < tol,
                    "{kind} alpha={alpha} C{}: {} vs {}",
                    i + 1,
                    got[i].value,
                    want[i]
                );
                assert!(got[i].error < 1e-5 * want[i].abs().max(1e-3));
            }
        }
    }
}

#[test]
fn closed_form_limits_at_half() {
    let [s1, s2, s3] = limit_closed_forms(MollifierKind::Semigroup);
    assert!(close(s1, 0.028625, 5e-5));
    assert!(close(s2, -0.0071562, 5e-5));
    assert!(close(s3, -0.21468, 5e-5));
    let [a1, a2, a3] = limit_closed_forms(MollifierKind::Anisotropic);
    assert_eq!(a1, 0.0);
    assert!(close(a2, -0.14988, 5e-5));
    assert!(close(a3, -0.22482, 5e-5));

    let sg = eval_C_constants(0.5, MollifierKind::Semigroup).unwrap();
    assert!(close(sg[0].value, s1, 1e-10));
    assert!(close(sg[2].value, s3, 1e-10));
    // the second semigroup limit evaluates to -5Γ(5/8)/(18π^{3/2}), ten times the listed closed form
    let c2 = -5.0 * gamma_ref(0.625) / (18.0 * PI.powf(1.5));
    assert!(close(sg[1].value, c2, 1e-10));
    assert!(close(sg[1].value, 10.0 * s2, 1e-10));

    let an = eval_C_constants(0.5, MollifierKind::Anisotropic).unwrap();
    assert!(an[0].value.abs() < 1e-12);
    assert!(close(an[1].value, a2, 1e-10));
    assert!(close(an[2].value, a3, 1e-10));
}

#[test]
fn leading_form() {
    let an = eval_C_constants(0.5, MollifierKind::Anisotropic).unwrap();
    let table = CountertermTable::from_values(0.5, MollifierKind::Anisotropic, an);
    let lf = tfe_leading_form(2.0, 0.5, &table).unwrap();
    let want = -7.0 * gamma_ref(1.125) / (8.0 * PI);
    assert!(close(lf.coefficient, want, 1e-10));
    assert!(close(leading_form_half(), -0.26229, 5e-5));
    assert_eq!(lf.u_exponent, 0.0);
    assert_eq!(lf.mobility_exponent, -1.0);
    assert_eq!(tfe_leading_form(3.0, 0.5, &table).unwrap().u_exponent, 1.0);
    let sg = CountertermTable::from_values(0.5, MollifierKind::Semigroup, an);
    assert!(tfe_leading_form(2.0, 0.5, &sg).is_err());
}

#[test]
fn semigroup_scaling_is_exact() {
    for alpha in [0.55, 0.75, 0.95] {
        let cc = eval_C_constants(alpha, MollifierKind::Semigroup).unwrap();
        let params = ModelParams::new(alpha, 1).unwrap();
        for (m0, tau) in [(1.0, 1e-3), (0.5, 1e-2), (2.0, 1e-1), (1.3, 0.37)] {
            let cov = CovarianceSpec::tfe_default(alpha, m0).unwrap();
            let moll = MollifierSpec::semigroup(tau).unwrap();
            let got = [eval_c1(&cov, &moll), eval_c2(&cov, &moll), eval_c3(&cov, &moll)];
            let betas = [mi("e1+f0+f1"), mi("2f1"), mi("2e1+2f0")];
            for i in 0..3 {
                let ex = scaling_exponents(&betas[i], &params).unwrap();
                assert!((ex.tau - (2.0 * alpha - 2.0) / 8.0).abs() < 1e-12);
                let m0_exp = ex.m0.unwrap().0;
                let want = cc[i].value * m0.powf(m0_exp) * tau.powf(ex.tau);
                let v = got[i].as_ref().unwrap().value;
                assert!(close(v, want, 1e-9), "alpha={alpha} m0={m0} tau={tau} c{}: {v} vs {want}", i + 1);
            }
        }
    }
}

#[test]
fn anisotropic_remainder_has_stated_order() {
    let (alpha, m0, eta) = (0.75, 1.0, 2.0);
    let cc = eval_C_constants(alpha, MollifierKind::Anisotropic).unwrap();
    let cov = CovarianceSpec::tfe_default(alpha, m0).unwrap();
    let mut ks = Vec::new();
    for tau in [1e-5, 1e-4, 1e-3] {
        let moll = MollifierSpec::anisotropic(tau, eta).unwrap();
        let c3 = eval_c3(&cov, &moll).unwrap().value;
        let lead = cc[2].value * tau.powf((2.0 * alpha - 2.0) / 8.0);
        let c1 = eval_c1(&cov, &moll).unwrap().value;
        let lead1 = cc[0].value * tau.powf((2.0 * alpha - 2.0) / 8.0);
        let order = tau.powf((2.0 * alpha - 2.0 + (eta - 1.0) * (3.0 + 2.0 * alpha)) / 8.0);
        ks.push((c1 - lead1).abs() / order);
        assert!((c3 - lead).abs() < 0.05 * lead.abs());
    }
    let (lo, hi) = ks.iter().fold((f64::MAX, 0.0f64), |(a, b), &k| (a.min(k), b.max(k)));
    assert!(hi / lo < 1.5, "remainder constants {ks:?}");
}

#[test]
fn custom_covariance_matches_default() {
    let (alpha, m0) = (0.7, 1.4);
    let q = (alpha - 0.5) / 4.0;
    let s = move |k0: f64, k1: f64| (2.0 * PI * k0).powi(2) + m0 * m0 * (2.0 * PI * k1).powi(8);
    let value = Arc::new(move |k0: f64, k1: f64| s(k0, k1).powf(-q));
    let deriv = Arc::new(move |k0: f64, k1: f64| {
        -q * s(k0, k1).powf(-q - 1.0) * 8.0 * m0 * m0 * (2.0 * PI).powi(8) * k1.powi(7)
    });
    let custom = CovarianceSpec::custom(alpha, m0, value.clone(), Some(deriv)).unwrap();
    let default = CovarianceSpec::tfe_default(alpha, m0).unwrap();
    let moll = MollifierSpec::anisotropic(1e-2, 2.0).unwrap();
    let a = CountertermTable::compute(&custom, &moll).unwrap();
    let b = CountertermTable::compute(&default, &moll).unwrap();
    assert!(close(a.c1, b.c1, 1e-12) && close(a.c2, b.c2, 1e-12) && close(a.c3, b.c3, 1e-12));
    let no_deriv = CovarianceSpec::custom(alpha, m0, value, None).unwrap();
    assert!(eval_c2(&no_deriv, &moll).is_err());
    assert!(eval_c1(&no_deriv, &moll).is_ok());
}

#[test]
fn halving_tolerance_stays_within_error() {
    for kind in [MollifierKind::Semigroup, MollifierKind::Anisotropic] {
        let loose = Accuracy { outer_rel: 1e-7, inner_rel: 1e-9 };
        let tight = Accuracy { outer_rel: 5e-8, inner_rel: 5e-10 };
        let a = eval_constants_with(0.8, kind, loose).unwrap();
        let b = eval_constants_with(0.8, kind, tight).unwrap();
        for i in 0..3 {
            assert!((a[i].value - b[i].value).abs() <= a[i].error + 1e-15, "{kind} C{}", i + 1);
        }
    }
}

#[test]
fn parameter_errors() {
    assert!(CovarianceSpec::tfe_default(0.4, 1.0).is_err());
    assert!(CovarianceSpec::tfe_default(0.7, 0.0).is_err());
    assert!(MollifierSpec::semigroup(0.0).is_err());
    assert!(MollifierSpec::anisotropic(0.1, 1.0).is_err());
    let cov = CovarianceSpec::tfe_default(0.5, 1.0).unwrap();
    assert!(eval_c1(&cov, &MollifierSpec::semigroup(0.1).unwrap()).is_err());
    let p = ModelParams::new(0.6, 1).unwrap();
    assert!(scaling_exponents(&mi("f0+f1"), &p).is_err());
}

#[test]
fn counterterm_functional() {
    let t = CountertermTable::from_values(
        0.6,
        MollifierKind::Semigroup,
        [
            Estimate { value: 0.3, error: 0.0 },
            Estimate { value: -0.7, error: 0.0 },
            Estimate { value: -1.1, error: 0.0 },
        ],
    );
    assert_eq!(counterterm_h(1.3, 0.0, 0.0, &t), 0.0);
    for (m, mp) in [(0.5, 0.2), (2.0, -1.0), (1.0, 3.0)] {
        let want = -0.5 * t.c1 * mp * mp + 0.25 * t.c2 * mp * mp / m + t.c3 * m * mp * mp;
        assert!(close(counterterm_h_tfe(m, mp, &t), want, 1e-13));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn c3_negative_for_positive_covariances(
        alpha in 0.51f64..0.99,
        m0 in 0.5f64..2.0,
        log_tau in -3.0f64..-1.0,
        bump in 0.0f64..3.0,
    ) {
        let q = (alpha - 0.5) / 4.0;
        let value = Arc::new(move |k0: f64, k1: f64| {
            let s = (2.0 * PI * k0).powi(2) + m0 * m0 * (2.0 * PI * k1).powi(8);
            s.powf(-q) * (1.0 + bump / (1.0 + s))
        });
        let cov = CovarianceSpec::custom(alpha, m0, value, None).unwrap();
        let moll = MollifierSpec::semigroup(10f64.powf(log_tau)).unwrap();
        prop_assert!(eval_c3(&cov, &moll).unwrap().value < 0.0);
    }
}
