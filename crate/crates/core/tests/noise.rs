use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma;
use tfe_core::counterterm::{CovarianceSpec, MollifierSpec};
use tfe_core::noise::{
    bphz_triviality_check, covariance_mc, mean_mc, pi_f0, pi_f0_moment_mc, pi_f0f1, scaling_fit, symmetry_suite,
    Component, EqualTimeSampler, FitMode, NoiseSampler,
};
use tfe_core::spectral::{SpectralField, SpectralGrid, Space};

fn sampler(alpha: f64, seed: u64) -> NoiseSampler {
    let grid = SpectralGrid::new(vec![16, 64], vec![1.0, 1.0]).unwrap();
    let tau = (2.0f64 / 64.0).powi(8);
    NoiseSampler::new(
        grid,
        CovarianceSpec::tfe_default(alpha, 1.0).unwrap(),
        MollifierSpec::semigroup(tau).unwrap(),
        seed,
    )
    .unwrap()
}

fn lags() -> Vec<Vec<i64>> {
    (1..=20).map(|j| if j <= 12 { vec![0, j] } else { vec![j - 12, j % 3] }).collect()
}

#[test]
fn samples_are_real_centred_and_reproducible() {
    let s = sampler(0.75, 9);
    let a = s.sample_noise(4);
    assert_eq!(a.len(), 1);
    assert_eq!(a[0].max_imag(), 0.0);
    assert!(a[0].hermitian_defect() < 1e-12);
    assert!(a[0].to_fourier().values[0].norm() < 1e-12 * a[0].to_fourier().max_abs());
    assert_eq!(a, s.sample_noise(4));
    assert_ne!(a, s.sample_noise(5));
    assert_ne!(a, sampler(0.75, 10).sample_noise(4));
}

#[test]
fn mode_variance_matches_density() {
    let s = sampler(0.75, 1);
    let idx = s.grid.flat(&[1, 3]);
    let n = 2048;
    let p: Vec<f64> = (0..n).map(|i| s.sample_noise(i).remove(0).to_fourier().values[idx].norm_sqr()).collect();
    let mean = p.iter().sum::<f64>() / n as f64;
    // |ξ̂|² is exponential with mean |box|·ℱF, so its standard deviation equals the mean
    let target = s.grid.volume() * s.density(idx);
    assert!((mean - target).abs() < 3.0 * target / (n as f64).sqrt(), "{mean} {target}");
}

#[test]
fn covariance_oracle_is_inverse_transform_of_density() {
    let s = sampler(0.6, 0);
    let dens = SpectralField::from_values(
        &s.grid,
        (0..s.grid.len()).map(|i| Complex64::new(s.density(i), 0.0)).collect(),
        Space::Fourier,
    )
    .unwrap()
    .to_physical();
    let lags = lags();
    for (h, f) in lags.iter().zip(s.covariance_oracle(&lags)) {
        let i = s.grid.flat(&[h[0] as usize, h[1] as usize]);
        assert!((dens.values[i].re - f).abs() < 1e-12 * dens.max_abs());
    }
}

#[test]
fn noise_statistics_within_three_standard_errors() {
    let s = sampler(0.75, 2);
    let cov = covariance_mc(&s, &lags(), 512).unwrap();
    assert!(cov.within(3.0), "{:?}", cov.z_scores);
    let mean = mean_mc(&s, 512).unwrap();
    assert!(mean.within(3.0), "{:?}", mean.z_scores);
    assert!(!cov.to_csv().is_empty());
    assert_eq!(cov.to_json()["samples"], 512);
}

#[test]
fn pi_f0_properties() {
    let s = sampler(0.75, 3);
    let xi = s.sample_noise(0);
    let x = s.grid.flat(&[5, 40]);
    let p = pi_f0(&xi, x, 1.0).unwrap();
    assert_eq!(p.values[x].re, 0.0);
    let neg: Vec<SpectralField> = xi.iter().map(|f| f.scale(-1.0)).collect();
    let q = pi_f0(&neg, x, 1.0).unwrap();
    for (a, b) in p.values.iter().zip(&q.values) {
        assert!((a + b).norm() < 1e-14 * p.max_abs());
    }
    let m = pi_f0_moment_mc(&s, &lags(), 512).unwrap();
    assert!(m.within(3.0), "{:?}", m.z_scores);
}

#[test]
fn pi_f0f1_vanishes_at_base_point() {
    let s = sampler(0.75, 4);
    let xi = s.sample_noise(1);
    for x in [0, 77, 1000] {
        let p = pi_f0f1(&xi, x, 1.0, 0.0).unwrap();
        assert_eq!(p.values[x].re, 0.0);
        assert!(p.max_abs() > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]
    #[test]
    fn symmetries_hold_samplewise(seed in 0u64..1000, x in 0usize..1024, h0 in 0usize..16, h1 in 0usize..64) {
        let s = sampler(0.7, seed);
        for (name, defect) in symmetry_suite(&s, seed, x, &[h0, h1]).unwrap() {
            prop_assert!(defect < 1e-11, "{} {}", name, defect);
        }
    }
}

#[test]
fn bphz_expectations_vanish() {
    let s = sampler(0.75, 5);
    let ts = [1e-7, 1e-5, 1e-3];
    let f0 = bphz_triviality_check(&s, Component::F0, &ts, 512).unwrap();
    assert!(f0.within(3.0), "{:?}", f0.z_scores);
    let f0f1 = bphz_triviality_check(&s, Component::F0F1, &ts, 512).unwrap();
    assert!(f0f1.oracle.iter().all(|o| o.abs() < 1e-14));
    assert!(f0f1.within(3.0), "{:?}", f0f1.z_scores);
}

/// Φ(k₁) with A = m0(2πk₁)⁴. For α > ½ the time damping is dropped:
/// (2πk₁)²A^{-1-2p}Γ(p+½)/(2√πΓ(p+1)). For α = ½ it is kept exactly:
/// (2πk₁)²e^{cA²}erfc(A√c)/(2A).
fn phi_oracle(alpha: f64, m0: f64, k1: f64, space: f64, time: f64) -> f64 {
    let p = (alpha - 0.5) / 4.0;
    let w = 2.0 * PI * k1;
    let a = m0 * w.powi(4);
    let damp = (-space * w.powi(8)).exp();
    if p == 0.0 {
        return w * w * (time * a * a).exp() * erfc(a * time.sqrt()) / (2.0 * a) * damp;
    }
    w * w * a.powf(-1.0 - 2.0 * p) * gamma(p + 0.5) / (2.0 * PI.sqrt() * gamma(p + 1.0)) * damp
}

#[test]
fn equal_time_spectrum() {
    let tau = 1e-24;
    let semigroup = MollifierSpec::semigroup(tau).unwrap();
    // anisotropic with η = 2 leaves a time damping of 1e-48, negligible here
    let aniso = MollifierSpec::anisotropic(tau, 2.0).unwrap();
    for (alpha, m0, moll) in [(0.5, 1.0, semigroup), (0.5, 1.5, semigroup), (0.7, 1.0, aniso), (0.9, 2.0, aniso)] {
        let cov = CovarianceSpec::tfe_default(alpha, m0).unwrap();
        let et = EqualTimeSampler::new(256, 1.0, &cov, &moll, 0).unwrap();
        let space = if moll == semigroup { tau * m0 * m0 } else { tau };
        for j in [1usize, 5, 40, 127] {
            let want = phi_oracle(alpha, m0, j as f64, space, tau);
            assert!((et.spectrum[j] / want - 1.0).abs() < 1e-8, "alpha={alpha} j={j} {}", et.spectrum[j] / want);
        }
        assert_eq!(et.spectrum[0], 0.0);
        assert_eq!(et.spectrum[128], 0.0);
        let v = et.sample(3);
        assert_eq!(v.len(), 256);
        assert_eq!(v, et.sample(3));
    }
}

fn fit_sampler(alpha: f64, n: usize, tau_root: f64, seed: u64) -> NoiseSampler {
    NoiseSampler::new(
        SpectralGrid::new(vec![2, n], vec![1.0, 1.0]).unwrap(),
        CovarianceSpec::tfe_default(alpha, 1.0).unwrap(),
        MollifierSpec::semigroup(tau_root.powi(8)).unwrap(),
        seed,
    )
    .unwrap()
}

#[test]
fn scaling_fit_f0() {
    let n = 16384;
    let tr = 2.0 / n as f64;
    let window = (20.0 * tr, 200.0 * tr);
    let s = fit_sampler(0.55, n, tr, 1);
    let fit = scaling_fit(Component::F0, &s, window, 1024, FitMode::EqualTime).unwrap();
    assert!((fit.exponent - 1.1).abs() < 0.05, "{fit:?}");
    assert!(fit.ci.0 < fit.exponent && fit.exponent < fit.ci.1);

    let other = scaling_fit(Component::F0, &fit_sampler(0.55, n, tr, 2), window, 1024, FitMode::EqualTime).unwrap();
    let width = (fit.ci.1 - fit.ci.0).max(other.ci.1 - other.ci.0);
    assert!((other.exponent - fit.exponent).abs() < width, "{other:?}");

    let halved = fit_sampler(0.55, n, tr * 0.5f64.powf(0.125), 1);
    let h = scaling_fit(Component::F0, &halved, window, 1024, FitMode::EqualTime).unwrap();
    assert!((h.exponent - fit.exponent).abs() < 0.02, "{h:?}");
}

#[test]
fn scaling_fit_rejects_bad_windows() {
    let n = 1024;
    let tr = 2.0 / n as f64;
    let s = fit_sampler(0.55, n, tr, 1);
    let narrow = scaling_fit(Component::F0, &s, (0.01, 0.02), 8, FitMode::EqualTime);
    assert!(narrow.is_err());
    let too_small = scaling_fit(Component::F0, &s, (tr, 0.1), 8, FitMode::EqualTime);
    assert!(too_small.is_err());
    let too_large = scaling_fit(Component::F0, &s, (0.02, 0.5), 8, FitMode::EqualTime);
    assert!(too_large.is_err());
    let f0f1 = scaling_fit(Component::F0F1, &s, (0.01, 0.1), 8, FitMode::EqualTime);
    assert!(f0f1.is_err());
}

#[test]
fn space_time_fits_run() {
    let grid = SpectralGrid::new(vec![64, 256], vec![1.0, 1.0]).unwrap();
    let tr = 2.0f64 / 256.0;
    let s = NoiseSampler::new(
        grid,
        CovarianceSpec::tfe_default(0.75, 1.0).unwrap(),
        MollifierSpec::semigroup(tr.powi(8)).unwrap(),
        0,
    )
    .unwrap();
    for c in [Component::F0, Component::F0F1] {
        let fit = scaling_fit(c, &s, (4.0 * tr, 1.0 / 8.0), 64, FitMode::SpaceTime).unwrap();
        assert!(fit.exponent.is_finite() && fit.ci.0 <= fit.ci.1);
        assert!(fit.moments.iter().all(|m| *m > 0.0));
    }
}
