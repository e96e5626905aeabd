//! Gaussian noise on the torus, the components Π_{f₀} and Π_{f₀+f₁}, and
//! Monte Carlo estimators checked against Fourier pairing sums on the same grid.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;
use serde_json::{json, Value};

use crate::counterterm::{CovarianceSpec, MollifierSpec};
use crate::error::{Error, Result};
use crate::quadrature::{tanh_sinh, QuadOptions};
use crate::spectral::{convolve, grid_symbol_l, psi_hat, solve_l_div, SpectralField, SpectralGrid, Space};

const TWO_PI: f64 = 2.0 * PI;
const BATCHES: usize = 32;

/// Spatial Fourier multiplier 2πi k_i used by the divergence (zero on Nyquist planes).
fn div_multiplier(grid: &SpectralGrid, flat: usize, axis: usize) -> Complex64 {
    Complex64::new(0.0, TWO_PI * grid.odd_frequency(flat)[1 + axis])
}

fn spatial_norm(k: &[f64]) -> f64 {
    k[1..].iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Clone, Debug)]
pub struct NoiseSampler {
    pub grid: SpectralGrid,
    pub spec: CovarianceSpec,
    pub moll: MollifierSpec,
    pub seed: u64,
}

impl NoiseSampler {
    pub fn new(grid: SpectralGrid, spec: CovarianceSpec, moll: MollifierSpec, seed: u64) -> Result<Self> {
        let s = Self { grid, spec, moll, seed };
        if let Some(i) = (1..s.grid.len()).find(|&i| !s.density(i).is_finite()) {
            return Err(Error::Numeric(format!("covariance not finite at grid frequency {:?}", s.grid.frequency(i))));
        }
        Ok(s)
    }

    /// ℱF = ℱC·|ℱφ_τ|² at a grid frequency; the k = 0 mode is removed.
    pub fn density(&self, flat: usize) -> f64 {
        if flat == 0 {
            return 0.0;
        }
        let k = self.grid.frequency(flat);
        let k1 = spatial_norm(&k);
        self.spec.eval(k[0], k1) * self.moll.squared_symbol(k[0], k1, self.spec.m0)
    }

    pub fn m0(&self) -> f64 {
        self.spec.m0
    }

    /// Independent stream per sample index, so samples can be drawn in any order.
    fn rng(&self, sample: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(sample);
        rng
    }

    /// The d components of ξ_τ for one sample, in physical space.
    pub fn sample_noise(&self, sample: u64) -> Vec<SpectralField> {
        let mut rng = self.rng(sample);
        let vol = self.grid.volume();
        let n = self.grid.len();
        (0..self.grid.d)
            .map(|_| {
                let mut v = vec![Complex64::default(); n];
                for i in 0..n {
                    let m = self.grid.mirror(i);
                    if m < i {
                        continue;
                    }
                    let var = vol * self.density(i);
                    if m == i {
                        let z: f64 = rng.sample(StandardNormal);
                        v[i] = Complex64::new(var.sqrt() * z, 0.0);
                    } else {
                        let (a, b): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
                        let c = Complex64::new(a, b) * (0.5 * var).sqrt();
                        v[i] = c;
                        v[m] = c.conj();
                    }
                }
                let mut f = SpectralField { grid: self.grid.clone(), values: v, space: Space::Fourier }.to_physical();
                f.values.iter_mut().for_each(|z| z.im = 0.0);
                f
            })
            .collect()
    }

    /// (1/|box|) Σ_k w(k) cos(2πk·h) for a grid offset h.
    fn pairing_sum(&self, h: &[i64], w: impl Fn(usize) -> f64 + Sync) -> f64 {
        let g = &self.grid;
        let s: f64 = (0..g.len())
            .into_par_iter()
            .map(|i| {
                let idx = g.unflat(i);
                let phase: f64 = (0..idx.len())
                    .map(|a| g.wavenumber(a, idx[a]) as f64 * h[a] as f64 / g.sizes[a] as f64)
                    .sum();
                w(i) * (TWO_PI * phase).cos()
            })
            .sum();
        s / g.volume()
    }

    /// E|v̂(k)|²/(|box|·ℱF(k)) for v = L⁻¹∇·ξ.
    fn v_gain(&self, flat: usize) -> f64 {
        let l = grid_symbol_l(&self.grid, flat, self.m0()).norm_sqr();
        if l == 0.0 {
            return 0.0;
        }
        (0..self.grid.d).map(|a| div_multiplier(&self.grid, flat, a).norm_sqr()).sum::<f64>() / l
    }

    /// F(h) on the grid.
    pub fn covariance_oracle(&self, lags: &[Vec<i64>]) -> Vec<f64> {
        lags.iter().map(|h| self.pairing_sum(h, |i| self.density(i))).collect()
    }

    /// E|Π_{f₀}(x+h)|² on the grid.
    pub fn pi_f0_oracle(&self, lags: &[Vec<i64>]) -> Vec<f64> {
        let zero = vec![0i64; self.grid.sizes.len()];
        lags.iter()
            .map(|h| {
                let w = |i: usize| self.density(i) * self.v_gain(i);
                2.0 * (self.pairing_sum(&zero, w) - self.pairing_sum(h, w))
            })
            .collect()
    }

    fn lag_index(&self, base: usize, h: &[i64]) -> usize {
        let idx: Vec<usize> = self
            .grid
            .unflat(base)
            .iter()
            .zip(h)
            .zip(&self.grid.sizes)
            .map(|((&i, &d), &n)| (i as i64 + d).rem_euclid(n as i64) as usize)
            .collect();
        self.grid.flat(&idx)
    }
}

/// v = L⁻¹∇·ξ.
pub fn solve_v(noise: &[SpectralField], m0: f64) -> Result<SpectralField> {
    Ok(real_part(solve_l_div(noise, m0)?.to_physical()))
}

fn real_part(mut f: SpectralField) -> SpectralField {
    f.values.iter_mut().for_each(|z| z.im = 0.0);
    f
}

/// Π_{x f₀} = v − v(x).
pub fn pi_f0(noise: &[SpectralField], x: usize, m0: f64) -> Result<SpectralField> {
    let v = solve_v(noise, m0)?;
    let vx = v.values[x];
    Ok(SpectralField { values: v.values.iter().map(|z| z - vx).collect(), ..v })
}

/// Periodic displacement y − x along an axis, set to zero at the antipode so
/// that it stays odd under reflection.
fn odd_displacement(grid: &SpectralGrid, y: usize, x: usize, axis: usize) -> f64 {
    let n = grid.sizes[axis];
    let (iy, ix) = (grid.unflat(y)[axis], grid.unflat(x)[axis]);
    let j = (iy + n - ix) % n;
    if 2 * j == n {
        0.0
    } else {
        grid.wavenumber(axis, j) as f64 * grid.spacing(axis)
    }
}

/// Π_{x f₀+f₁}: u = L⁻¹∇·(Π_{x f₀}ξ − c_{f₁}∇Π_{x f₀}), minus its value and
/// spatial gradient at x.
pub fn pi_f0f1(noise: &[SpectralField], x: usize, m0: f64, c_f1: f64) -> Result<SpectralField> {
    let p = pi_f0(noise, x, m0)?;
    let flux: Vec<SpectralField> = noise
        .iter()
        .enumerate()
        .map(|(a, xi)| {
            let mut n = vec![0u32; p.grid.sizes.len()];
            n[1 + a] = 1;
            real_part(p.mul(xi).sub(&p.derivative(&n).scale(c_f1)).to_physical())
        })
        .collect();
    let u = real_part(solve_l_div(&flux, m0)?.to_physical());
    let grid = u.grid.clone();
    let grads: Vec<f64> = (0..grid.d)
        .map(|a| {
            let mut n = vec![0u32; grid.sizes.len()];
            n[1 + a] = 1;
            u.derivative(&n).values[x].re
        })
        .collect();
    let ux = u.values[x].re;
    let values = (0..grid.len())
        .map(|y| {
            let taylor: f64 = (0..grid.d).map(|a| odd_displacement(&grid, y, x, 1 + a) * grads[a]).sum();
            Complex64::new(u.values[y].re - ux - taylor, 0.0)
        })
        .collect();
    Ok(SpectralField { grid, values, space: Space::Physical })
}

/// Circular autocorrelation (1/N)Σ_x f(x)f(x+h) for every h.
fn autocorrelation(f: &SpectralField) -> SpectralField {
    let fh = f.to_fourier();
    let vol = fh.grid.volume();
    let values = fh.values.iter().map(|z| Complex64::new(z.norm_sqr() / vol, 0.0)).collect();
    real_part(SpectralField { grid: fh.grid.clone(), values, space: Space::Fourier }.to_physical())
}

#[derive(Clone, Debug, Serialize)]
pub struct McReport {
    pub estimator: String,
    pub samples: usize,
    pub points: Vec<Vec<f64>>,
    pub estimates: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub oracle: Vec<f64>,
    pub z_scores: Vec<f64>,
}

impl McReport {
    pub fn max_abs_z(&self) -> f64 {
        self.z_scores.iter().fold(0.0, |m, z| m.max(z.abs()))
    }

    pub fn within(&self, z: f64) -> bool {
        self.z_scores.iter().all(|s| s.abs() <= z)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serialises")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("point,estimate,std_error,oracle,z\n");
        for i in 0..self.estimates.len() {
            let p: Vec<String> = self.points[i].iter().map(|v| v.to_string()).collect();
            out += &format!(
                "{},{},{},{},{}\n",
                p.join(" "),
                self.estimates[i],
                self.std_errors[i],
                self.oracle[i],
                self.z_scores[i]
            );
        }
        out
    }
}

/// Means of consecutive batches of per-sample vectors.
fn batch_means(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let b = BATCHES.min(rows.len()).max(1);
    let m = rows[0].len();
    (0..b)
        .map(|j| {
            let (lo, hi) = (j * rows.len() / b, (j + 1) * rows.len() / b);
            let mut acc = vec![0.0; m];
            for r in &rows[lo..hi] {
                for (a, v) in acc.iter_mut().zip(r) {
                    *a += v;
                }
            }
            acc.iter().map(|a| a / (hi - lo) as f64).collect()
        })
        .collect()
}

/// Grand means and batch-means standard errors.
fn mean_and_se(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let batches = batch_means(rows);
    let b = batches.len() as f64;
    let m = rows[0].len();
    let mean: Vec<f64> = (0..m).map(|j| batches.iter().map(|r| r[j]).sum::<f64>() / b).collect();
    let se = (0..m)
        .map(|j| {
            if b < 2.0 {
                return f64::NAN;
            }
            let var = batches.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / (b - 1.0);
            (var / b).sqrt()
        })
        .collect();
    (mean, se)
}

fn run_mc(
    name: &str,
    samples: usize,
    points: Vec<Vec<f64>>,
    oracle: Vec<f64>,
    per_sample: impl Fn(u64) -> Result<Vec<f64>> + Sync,
) -> Result<McReport> {
    if samples < 2 {
        return Err(Error::Param("need at least 2 samples".into()));
    }
    let rows: Vec<Vec<f64>> = (0..samples as u64).into_par_iter().map(&per_sample).collect::<Result<_>>()?;
    let (estimates, std_errors) = mean_and_se(&rows);
    let z_scores = estimates.iter().zip(&oracle).zip(&std_errors).map(|((e, o), s)| (e - o) / s).collect();
    Ok(McReport { estimator: name.into(), samples, points, estimates, std_errors, oracle, z_scores })
}

fn lag_points(grid: &SpectralGrid, lags: &[Vec<i64>]) -> Vec<Vec<f64>> {
    lags.iter().map(|h| h.iter().enumerate().map(|(a, &v)| v as f64 * grid.spacing(a)).collect()).collect()
}

fn check_lags(grid: &SpectralGrid, lags: &[Vec<i64>]) -> Result<()> {
    if lags.is_empty() || lags.iter().any(|h| h.len() != grid.sizes.len()) {
        return Err(Error::Param(format!("lags must be non-empty with {} entries each", grid.sizes.len())));
    }
    Ok(())
}

/// E[ξ_τ(0)ξ_τ(h)] (first component), averaged over base points in every sample.
pub fn covariance_mc(sampler: &NoiseSampler, lags: &[Vec<i64>], samples: usize) -> Result<McReport> {
    check_lags(&sampler.grid, lags)?;
    let oracle = sampler.covariance_oracle(lags);
    run_mc("noise_covariance", samples, lag_points(&sampler.grid, lags), oracle, |s| {
        let c = autocorrelation(&sampler.sample_noise(s)[0]);
        Ok(lags.iter().map(|h| c.values[sampler.lag_index(0, h)].re).collect())
    })
}

/// E[ξ_τ(x)] at the origin for every component.
pub fn mean_mc(sampler: &NoiseSampler, samples: usize) -> Result<McReport> {
    let d = sampler.grid.d;
    let points = (0..d).map(|a| vec![a as f64]).collect();
    run_mc("noise_mean", samples, points, vec![0.0; d], |s| {
        Ok(sampler.sample_noise(s).iter().map(|f| f.values[0].re).collect())
    })
}

/// E|Π_{x f₀}(x+h)|², averaged over base points in every sample.
pub fn pi_f0_moment_mc(sampler: &NoiseSampler, lags: &[Vec<i64>], samples: usize) -> Result<McReport> {
    check_lags(&sampler.grid, lags)?;
    let oracle = sampler.pi_f0_oracle(lags);
    run_mc("pi_f0_second_moment", samples, lag_points(&sampler.grid, lags), oracle, |s| {
        let c = autocorrelation(&solve_v(&sampler.sample_noise(s), sampler.m0())?);
        Ok(lags.iter().map(|h| 2.0 * (c.values[0].re - c.values[sampler.lag_index(0, h)].re)).collect())
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    F0,
    F0F1,
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Component::F0 => "f0",
            Component::F0F1 => "f0f1",
        })
    }
}

impl FromStr for Component {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f0" => Ok(Component::F0),
            "f0f1" | "f0+f1" => Ok(Component::F0F1),
            _ => Err(Error::Param(format!("unknown component {s:?}; expected f0 or f0f1"))),
        }
    }
}

/// E[(Π⁻_{xβ})_t(x)] at the origin, with c_{f₁} = 0. The oracle for f₀+f₁ is
/// Re (1/|box|)Σ_k (1 − ψ̂_t(k))·2πik₁/L(k)·ℱF(k).
pub fn bphz_triviality_check(
    sampler: &NoiseSampler,
    component: Component,
    t_list: &[f64],
    samples: usize,
) -> Result<McReport> {
    if t_list.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(Error::Param("t values must be non-negative".into()));
    }
    let g = &sampler.grid;
    let m0 = sampler.m0();
    let points = t_list.iter().map(|&t| vec![t]).collect();
    let oracle: Vec<f64> = match component {
        Component::F0 => vec![0.0; t_list.len()],
        Component::F0F1 => t_list
            .iter()
            .map(|&t| {
                let s: Complex64 = (0..g.len())
                    .into_par_iter()
                    .map(|i| {
                        let l = grid_symbol_l(g, i, m0);
                        if l.norm() == 0.0 {
                            return Complex64::default();
                        }
                        let h = div_multiplier(g, i, 0) / l;
                        h * sampler.density(i) * (1.0 - psi_hat(t, &g.frequency(i), m0))
                    })
                    .sum();
                s.re / g.volume()
            })
            .collect(),
    };
    run_mc(&format!("bphz_{component}"), samples, points, oracle, |s| {
        let xi = sampler.sample_noise(s);
        match component {
            Component::F0 => Ok(t_list.iter().map(|&t| convolve(&xi[0], t, m0).values[0].re).collect()),
            Component::F0F1 => {
                let v = solve_v(&xi, m0)?;
                let vxi = v.mul(&xi[0]);
                Ok(t_list
                    .iter()
                    .map(|&t| {
                        let a = convolve(&vxi, t, m0).to_physical().values[0].re;
                        let b = convolve(&xi[0], t, m0).to_physical().values[0].re;
                        a - v.values[0].re * b
                    })
                    .collect())
            }
        }
    })
}

/// Equal-time slices of Π_{f₀} for d = 1 with the time direction integrated
/// exactly: v̂(k₁) has variance L·Φ(k₁),
/// Φ(k₁) = ∫ℱF(k₀,k₁)(2πk₁)²/((2πk₀)² + m0²(2πk₁)⁸) dk₀.
#[derive(Clone, Debug)]
pub struct EqualTimeSampler {
    pub n: usize,
    pub length: f64,
    pub seed: u64,
    pub spectrum: Vec<f64>,
}

impl EqualTimeSampler {
    pub fn new(n: usize, length: f64, spec: &CovarianceSpec, moll: &MollifierSpec, seed: u64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::Param(format!("equal-time grid size must be even and >= 4, got {n}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Param(format!("box length must be positive, got {length}")));
        }
        let m0 = spec.m0;
        let opts = QuadOptions { rel_tol: 1e-10, ..QuadOptions::default() };
        let spectrum = (0..=n / 2)
            .into_par_iter()
            .map(|j| {
                if j == 0 || j == n / 2 {
                    return Ok(0.0);
                }
                let k1 = j as f64 / length;
                let a = m0 * (TWO_PI * k1).powi(4);
                // k₀ = a·tanθ/(2π), with tanθ = cot(π/2 − θ) for accuracy near π/2
                let f = |_: f64, _: f64, rest: f64| {
                    let k0 = a * rest.cos() / rest.sin() / TWO_PI;
                    if !k0.is_finite() {
                        return 0.0;
                    }
                    spec.eval(k0, k1) * moll.squared_symbol(k0, k1, m0)
                };
                let q = tanh_sinh(f, 0.0, PI / 2.0, &opts)?;
                Ok((TWO_PI * k1).powi(2) / (PI * a) * q.value)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self { n, length, seed, spectrum })
    }

    fn phi(&self, j: usize) -> f64 {
        self.spectrum[j.min(self.n - j)]
    }

    /// One equal-time slice v(x₁) at the n grid nodes.
    pub fn sample(&self, sample: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(sample);
        let n = self.n;
        let mut v = vec![Complex64::default(); n];
        for j in 1..n / 2 {
            let (a, b): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
            let c = Complex64::new(a, b) * (0.5 * self.length * self.phi(j)).sqrt();
            v[j] = c;
            v[n - j] = c.conj();
        }
        FftPlanner::new().plan_fft_inverse(n).process(&mut v);
        v.iter().map(|z| z.re / self.length).collect()
    }

    /// Mean over base points of |v(x+r)−v(x)|² for r = j·dx.
    fn structure(&self, v: &[f64], steps: &[usize], planner: &mut FftPlanner<f64>) -> Vec<f64> {
        let n = self.n;
        let mut c: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        planner.plan_fft_forward(n).process(&mut c);
        c.iter_mut().for_each(|z| *z = Complex64::new(z.norm_sqr(), 0.0));
        planner.plan_fft_inverse(n).process(&mut c);
        let norm = (n * n) as f64;
        steps.iter().map(|&j| 2.0 * (c[0].re - c[j % n].re) / norm).collect()
    }

    pub fn structure_oracle(&self, steps: &[usize]) -> Vec<f64> {
        steps
            .iter()
            .map(|&s| {
                (1..self.n)
                    .map(|j| {
                        let phase = TWO_PI * (j * s % self.n) as f64 / self.n as f64;
                        self.phi(j) * (1.0 - phase.cos())
                    })
                    .sum::<f64>()
                    * 2.0
                    / self.length
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMode {
    EqualTime,
    SpaceTime,
}

impl FromStr for FitMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equal-time" => Ok(FitMode::EqualTime),
            "space-time" => Ok(FitMode::SpaceTime),
            _ => Err(Error::Param(format!("unknown fit mode {s:?}; expected equal-time or space-time"))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingFit {
    pub component: Component,
    pub mode: FitMode,
    pub exponent: f64,
    pub ci: (f64, f64),
    pub separations: Vec<f64>,
    pub moments: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub samples: usize,
}

impl ScalingFit {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("fit serialises")
    }
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Up to 12 distinct log-spaced grid steps in [lo, hi].
fn window_steps(lo: f64, hi: f64, dx: f64) -> Vec<usize> {
    let (a, b) = ((lo / dx).ceil().max(1.0), (hi / dx).floor());
    let mut steps: Vec<usize> = (0..12).map(|i| (a * (b / a).powf(i as f64 / 11.0)).round() as usize).collect();
    steps.dedup();
    steps
}

/// Log-log slope of the second moment of Π against the separation, with a
/// bootstrap interval over batches.
pub fn scaling_fit(
    component: Component,
    sampler: &NoiseSampler,
    window: (f64, f64),
    samples: usize,
    mode: FitMode,
) -> Result<ScalingFit> {
    let (lo, hi) = window;
    let g = &sampler.grid;
    let scale = sampler.moll.tau.powf(0.125);
    if !(lo > 0.0 && hi > lo) || hi / lo < 10f64.sqrt() {
        return Err(Error::Param(format!("window [{lo}, {hi}] spans less than half a decade")));
    }
    if lo < 4.0 * scale * (1.0 - 1e-12) || hi > g.boxes[1] / 8.0 * (1.0 + 1e-12) {
        return Err(Error::Param(format!(
            "window [{lo}, {hi}] must lie in [4 tau^(1/8), box/8] = [{}, {}]",
            4.0 * scale,
            g.boxes[1] / 8.0
        )));
    }
    if samples < 2 {
        return Err(Error::Param("need at least 2 samples".into()));
    }
    let dx = g.spacing(1);
    let steps = window_steps(lo, hi, dx);
    if steps.len() < 3 {
        return Err(Error::Param("window holds fewer than 3 grid separations".into()));
    }
    let rows: Vec<Vec<f64>> = match (mode, component) {
        (FitMode::EqualTime, Component::F0) => {
            if g.d != 1 {
                return Err(Error::Param("equal-time fit needs d = 1".into()));
            }
            let et = EqualTimeSampler::new(g.sizes[1], g.boxes[1], &sampler.spec, &sampler.moll, sampler.seed)?;
            (0..samples as u64)
                .into_par_iter()
                .map_init(FftPlanner::new, |p, s| et.structure(&et.sample(s), &steps, p))
                .collect()
        }
        (FitMode::EqualTime, Component::F0F1) => {
            return Err(Error::Param("equal-time fit is only available for f0".into()));
        }
        (FitMode::SpaceTime, c) => (0..samples as u64)
            .into_par_iter()
            .map(|s| space_time_structure(sampler, c, &steps, s))
            .collect::<Result<_>>()?,
    };
    let separations: Vec<f64> = steps.iter().map(|&j| j as f64 * dx).collect();
    let logx: Vec<f64> = separations.iter().map(|r| r.ln()).collect();
    let (moments, std_errors) = mean_and_se(&rows);
    let exponent = ls_slope(&logx, &moments.iter().map(|m| m.ln()).collect::<Vec<_>>());
    let batches = batch_means(&rows);
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed ^ 0x5eed);
    let mut slopes: Vec<f64> = (0..400)
        .map(|_| {
            let mut m = vec![0.0; steps.len()];
            for _ in 0..batches.len() {
                let b = &batches[rng.random_range(0..batches.len())];
                m.iter_mut().zip(b).for_each(|(a, v)| *a += v);
            }
            ls_slope(&logx, &m.iter().map(|v| v.ln()).collect::<Vec<_>>())
        })
        .collect();
    slopes.sort_by(f64::total_cmp);
    let ci = (slopes[9], slopes[389]);
    Ok(ScalingFit { component, mode, exponent, ci, separations, moments, std_errors, samples })
}

/// Base-point average of |Π_{x β}(x + j·e₁)|² over the space-time grid.
fn space_time_structure(sampler: &NoiseSampler, component: Component, steps: &[usize], s: u64) -> Result<Vec<f64>> {
    let g = &sampler.grid;
    let m0 = sampler.m0();
    let xi = sampler.sample_noise(s);
    let v = solve_v(&xi, m0)?;
    let n1 = g.sizes[1];
    let shift = |i: usize, j: usize| {
        let idx = g.unflat(i);
        let mut k = idx.clone();
        k[1] = (idx[1] + j) % n1;
        g.flat(&k)
    };
    let e1: Vec<u32> = (0..g.sizes.len()).map(|a| u32::from(a == 1)).collect();
    let vals: Vec<f64> = v.values.iter().map(|z| z.re).collect();
    match component {
        Component::F0 => Ok(steps
            .iter()
            .map(|&j| (0..g.len()).map(|i| (vals[shift(i, j)] - vals[i]).powi(2)).sum::<f64>() / g.len() as f64)
            .collect()),
        Component::F0F1 => {
            if g.d != 1 {
                return Err(Error::Param("space-time f0f1 fit needs d = 1".into()));
            }
            let u = solve_v(&[v.mul(&xi[0])], m0)?;
            let uv: Vec<f64> = u.values.iter().map(|z| z.re).collect();
            let du: Vec<f64> = u.derivative(&e1).values.iter().map(|z| z.re).collect();
            let dv: Vec<f64> = v.derivative(&e1).values.iter().map(|z| z.re).collect();
            let dx = g.spacing(1);
            Ok(steps
                .iter()
                .map(|&j| {
                    let h = j as f64 * dx;
                    (0..g.len())
                        .map(|i| {
                            let y = shift(i, j);
                            let a = uv[y] - uv[i] - h * du[i];
                            let b = vals[y] - vals[i] - h * dv[i];
                            (a - vals[i] * b).powi(2)
                        })
                        .sum::<f64>()
                        / g.len() as f64
                })
                .collect())
        }
    }
}

/// Node map y ↦ y + h.
fn shift_field(f: &SpectralField, h: &[usize]) -> SpectralField {
    let g = &f.grid;
    let mut values = vec![Complex64::default(); g.len()];
    for (i, v) in f.values.iter().enumerate() {
        let idx: Vec<usize> = g.unflat(i).iter().zip(h).zip(&g.sizes).map(|((a, b), n)| (a + b) % n).collect();
        values[g.flat(&idx)] = *v;
    }
    SpectralField { grid: g.clone(), values, space: f.space }
}

/// Node map y ↦ R y, reflecting the given spatial axis.
fn reflect_index(g: &SpectralGrid, i: usize, axis: usize) -> usize {
    let mut idx = g.unflat(i);
    idx[axis] = (g.sizes[axis] - idx[axis]) % g.sizes[axis];
    g.flat(&idx)
}

fn reflect_field(f: &SpectralField, axis: usize) -> SpectralField {
    let g = &f.grid;
    let p = f.to_physical();
    let mut values = vec![Complex64::default(); g.len()];
    for (i, v) in p.values.iter().enumerate() {
        values[reflect_index(g, i, axis)] = *v;
    }
    SpectralField { grid: g.clone(), values, space: Space::Physical }
}

fn max_rel(a: &SpectralField, b: &SpectralField) -> f64 {
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

/// Samplewise symmetry defects of Π_{f₀} and Π_{f₀+f₁}: translation by `h`,
/// reflection of the first spatial axis with ξ ↦ −ξ∘R on the reflected
/// component, and ξ ↦ −ξ with sign (−1)^{Σβ(ℓ)}. Entries are (name, max relative defect).
pub fn symmetry_suite(sampler: &NoiseSampler, sample: u64, x: usize, h: &[usize]) -> Result<Vec<(String, f64)>> {
    let g = &sampler.grid;
    let m0 = sampler.m0();
    let xi = sampler.sample_noise(sample);
    type Comp = Arc<dyn Fn(&[SpectralField], usize) -> Result<SpectralField> + Send + Sync>;
    let comps: Vec<(&str, Comp, f64)> = vec![
        ("f0", Arc::new(move |n: &[SpectralField], x: usize| pi_f0(n, x, m0)), -1.0),
        ("f0f1", Arc::new(move |n: &[SpectralField], x: usize| pi_f0f1(n, x, m0, 0.0)), 1.0),
    ];
    let xh = {
        let idx: Vec<usize> = g.unflat(x).iter().zip(h).zip(&g.sizes).map(|((a, b), n)| (a + b) % n).collect();
        g.flat(&idx)
    };
    let rx = reflect_index(g, x, 1);
    let shifted: Vec<SpectralField> = xi.iter().map(|f| shift_field(f, h)).collect();
    let reflected: Vec<SpectralField> = xi
        .iter()
        .enumerate()
        .map(|(a, f)| {
            let r = reflect_field(f, 1);
            if a == 0 {
                r.scale(-1.0)
            } else {
                r
            }
        })
        .collect();
    let negated: Vec<SpectralField> = xi.iter().map(|f| f.scale(-1.0)).collect();
    let mut out = Vec::new();
    for (name, pi, sign) in comps {
        let base = pi(&xi, x)?;
        out.push((format!("{name}_translation"), max_rel(&shift_field(&base, h), &pi(&shifted, xh)?)));
        out.push((format!("{name}_reflection"), max_rel(&reflect_field(&base, 1), &pi(&reflected, rx)?)));
        out.push((format!("{name}_sign"), max_rel(&base.scale(sign), &pi(&negated, x)?)));
    }
    Ok(out)
}

pub fn fit_report_json(fit: &ScalingFit, target: f64) -> Value {
    json!({ "fit": fit.to_json(), "target": target, "deviation": fit.exponent - target })
}
