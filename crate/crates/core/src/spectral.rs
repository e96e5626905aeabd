//! Periodic space-time grids, the symbols of L and LL*, the kernel ψ_t and
//! the L-inversion.

use std::f64::consts::PI;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

/// (2πk₀)² + m0²((2π)²Σk_i²)⁴
pub fn symbol_ll_star(k: &[f64], m0: f64) -> f64 {
    let lap = spatial_sq(k);
    (TWO_PI * k[0]).powi(2) + m0 * m0 * lap.powi(4)
}

/// 2πik₀ + m0((2π)²Σk_i²)²
pub fn symbol_l(k: &[f64], m0: f64) -> Complex64 {
    Complex64::new(m0 * spatial_sq(k).powi(2), TWO_PI * k[0])
}

fn spatial_sq(k: &[f64]) -> f64 {
    k[1..].iter().map(|ki| (TWO_PI * ki).powi(2)).sum()
}

/// ℱψ_t(k) = exp(-t·LL*(k))
pub fn psi_hat(t: f64, k: &[f64], m0: f64) -> f64 {
    (-t * symbol_ll_star(k, m0)).exp()
}

/// |x₀|^{1/4} + Σ|x_i|
pub fn aniso_norm(x: &[f64]) -> f64 {
    x[0].abs().powf(0.25) + x[1..].iter().map(|v| v.abs()).sum::<f64>()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    pub d: usize,
    pub sizes: Vec<usize>,
    pub boxes: Vec<f64>,
}

impl SpectralGrid {
    pub fn new(sizes: Vec<usize>, boxes: Vec<f64>) -> Result<Self> {
        if sizes.len() < 2 || sizes.len() != boxes.len() {
            return Err(Error::Param("grid needs one size and one box per axis, time first".into()));
        }
        if let Some(n) = sizes.iter().find(|&&n| n < 2 || n % 2 != 0) {
            return Err(Error::Param(format!("grid sizes must be even and >= 2, got {n}")));
        }
        if let Some(b) = boxes.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
            return Err(Error::Param(format!("grid boxes must be positive, got {b}")));
        }
        Ok(Self { d: sizes.len() - 1, sizes, boxes })
    }

    /// d = 1 with the time period tied to the spatial one by T = L⁴.
    pub fn default_d1(length: f64) -> Self {
        Self::new(vec![256, 1024], vec![length.powi(4), length]).expect("valid default grid")
    }

    pub fn len(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.boxes.iter().zip(&self.sizes).map(|(b, &n)| b / n as f64).product()
    }

    pub fn volume(&self) -> f64 {
        self.boxes.iter().product()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.boxes[axis] / self.sizes[axis] as f64
    }

    /// Row-major, last axis fastest.
    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.sizes).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn unflat(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.sizes.len()];
        for a in (0..self.sizes.len()).rev() {
            idx[a] = flat % self.sizes[a];
            flat /= self.sizes[a];
        }
        idx
    }

    /// Signed integer wavenumber of grid index i on an axis.
    pub fn wavenumber(&self, axis: usize, i: usize) -> i64 {
        let n = self.sizes[axis];
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    pub fn frequency(&self, flat: usize) -> Vec<f64> {
        self.unflat(flat)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.wavenumber(a, i) as f64 / self.boxes[a])
            .collect()
    }

    /// Like `frequency`, with Nyquist components set to zero. Used for odd
    /// powers of ik so that real fields stay real.
    pub fn odd_frequency(&self, flat: usize) -> Vec<f64> {
        self.unflat(flat)
            .iter()
            .enumerate()
            .map(|(a, &i)| if 2 * i == self.sizes[a] { 0.0 } else { self.wavenumber(a, i) as f64 / self.boxes[a] })
            .collect()
    }

    /// Periodic displacement of a node from the origin, in (-box/2, box/2].
    pub fn displacement(&self, flat: usize) -> Vec<f64> {
        self.unflat(flat)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.wavenumber(a, i) as f64 * self.spacing(a))
            .collect()
    }

    /// Flat index of the node at minus the given node.
    pub fn mirror(&self, flat: usize) -> usize {
        let idx: Vec<usize> =
            self.unflat(flat).iter().zip(&self.sizes).map(|(&i, &n)| (n - i) % n).collect();
        self.flat(&idx)
    }

    /// Grid with each box multiplied by the given factors.
    pub fn rescaled(&self, factors: &[f64]) -> Result<Self> {
        Self::new(self.sizes.clone(), self.boxes.iter().zip(factors).map(|(b, f)| b * f).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Physical,
    Fourier,
}

/// Values on a grid. Fourier values approximate the continuum transform
/// ∫f(x)e^{-2πik·x}dx over one period.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    pub grid: SpectralGrid,
    pub values: Vec<Complex64>,
    pub space: Space,
}

fn fft_axes(values: &mut [Complex64], sizes: &[usize], direction: FftDirection) {
    let mut planner = FftPlanner::new();
    let total: usize = sizes.iter().product();
    for axis in 0..sizes.len() {
        let n = sizes[axis];
        let fft = planner.plan_fft(n, direction);
        let stride: usize = sizes[axis + 1..].iter().product();
        let outer = total / (n * stride);
        if stride == 1 {
            values.par_chunks_mut(n).for_each(|line| fft.process(line));
            continue;
        }
        // gather the lines of this axis contiguously, transform, scatter back
        let mut lines = vec![Complex64::default(); total];
        lines.par_chunks_mut(n).enumerate().for_each(|(l, line)| {
            let (o, s) = (l / stride, l % stride);
            let base = o * n * stride + s;
            for (j, v) in line.iter_mut().enumerate() {
                *v = values[base + j * stride];
            }
        });
        lines.par_chunks_mut(n).for_each(|line| fft.process(line));
        for l in 0..outer * stride {
            let (o, s) = (l / stride, l % stride);
            let base = o * n * stride + s;
            for j in 0..n {
                values[base + j * stride] = lines[l * n + j];
            }
        }
    }
}

impl SpectralField {
    pub fn zeros(grid: &SpectralGrid, space: Space) -> Self {
        Self { grid: grid.clone(), values: vec![Complex64::default(); grid.len()], space }
    }

    pub fn from_values(grid: &SpectralGrid, values: Vec<Complex64>, space: Space) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Param(format!(
                "field has {} values but the grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid: grid.clone(), values, space })
    }

    pub fn from_real(grid: &SpectralGrid, values: &[f64]) -> Result<Self> {
        Self::from_values(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect(), Space::Physical)
    }

    /// Physical field from a function of the periodic displacement.
    pub fn from_fn(grid: &SpectralGrid, f: impl Fn(&[f64]) -> f64 + Sync) -> Self {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| Complex64::new(f(&grid.displacement(i)), 0.0))
            .collect();
        Self { grid: grid.clone(), values, space: Space::Physical }
    }

    /// Fourier field from a function of the frequency vector.
    pub fn from_symbol(grid: &SpectralGrid, f: impl Fn(&[f64]) -> Complex64 + Sync) -> Self {
        let values = (0..grid.len()).into_par_iter().map(|i| f(&grid.frequency(i))).collect();
        Self { grid: grid.clone(), values, space: Space::Fourier }
    }

    pub fn to_fourier(&self) -> Self {
        let mut out = self.clone();
        out.make_fourier();
        out
    }

    pub fn to_physical(&self) -> Self {
        let mut out = self.clone();
        out.make_physical();
        out
    }

    pub fn make_fourier(&mut self) {
        if self.space == Space::Fourier {
            return;
        }
        fft_axes(&mut self.values, &self.grid.sizes, FftDirection::Forward);
        let dv = self.grid.cell_volume();
        self.values.par_iter_mut().for_each(|v| *v *= dv);
        self.space = Space::Fourier;
    }

    pub fn make_physical(&mut self) {
        if self.space == Space::Physical {
            return;
        }
        fft_axes(&mut self.values, &self.grid.sizes, FftDirection::Inverse);
        let s = 1.0 / self.grid.volume();
        self.values.par_iter_mut().for_each(|v| *v *= s);
        self.space = Space::Physical;
    }

    fn in_space(&self, space: Space) -> Self {
        match space {
            Space::Fourier => self.to_fourier(),
            Space::Physical => self.to_physical(),
        }
    }

    /// Multiply the Fourier transform by a symbol; result in the input's space.
    pub fn apply_symbol(&self, m: impl Fn(&[f64]) -> Complex64 + Sync) -> Self {
        self.apply_indexed(|g, i| m(&g.frequency(i)))
    }

    fn apply_indexed(&self, m: impl Fn(&SpectralGrid, usize) -> Complex64 + Sync) -> Self {
        let mut f = self.to_fourier();
        let grid = &f.grid;
        f.values.par_iter_mut().enumerate().for_each(|(i, v)| *v *= m(grid, i));
        f.in_space(self.space)
    }

    /// ∂^n with n = (n₀, n₁, …). Odd orders vanish on the Nyquist planes.
    pub fn derivative(&self, n: &[u32]) -> Self {
        self.apply_indexed(|g, i| {
            let (k, ko) = (g.frequency(i), g.odd_frequency(i));
            n.iter().enumerate().fold(Complex64::new(1.0, 0.0), |acc, (a, &na)| {
                let ka = if na % 2 == 1 { ko[a] } else { k[a] };
                acc * Complex64::new(0.0, TWO_PI * ka).powu(na)
            })
        })
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.im.abs()))
    }

    /// max |f̂(k) - conj f̂(-k)| relative to max |f̂|; zero for real data.
    pub fn hermitian_defect(&self) -> f64 {
        let f = self.to_fourier();
        let scale = f.max_abs().max(f64::MIN_POSITIVE);
        (0..f.values.len())
            .map(|i| (f.values[i] - f.values[f.grid.mirror(i)].conj()).norm())
            .fold(0.0, f64::max)
            / scale
    }

    pub fn add(&self, other: &Self) -> Self {
        let o = other.in_space(self.space);
        let values = self.values.iter().zip(&o.values).map(|(a, b)| a + b).collect();
        Self { grid: self.grid.clone(), values, space: self.space }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Pointwise product in physical space.
    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = (self.to_physical(), other.to_physical());
        let values = a.values.iter().zip(&b.values).map(|(x, y)| x * y).collect();
        Self { grid: self.grid.clone(), values, space: Space::Physical }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v * s).collect(), space: self.space }
    }

    pub fn l2_norm(&self) -> f64 {
        let p = self.to_physical();
        (p.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * p.grid.cell_volume()).sqrt()
    }

    /// Binary dump: little-endian f64, interleaved (re, im), plus a JSON sidecar.
    pub fn write_dump(&self, path: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::Resource(format!("writing {}: {e}", path.display()));
        let mut bytes = Vec::with_capacity(self.values.len() * 16);
        for v in &self.values {
            bytes.extend_from_slice(&v.re.to_le_bytes());
            bytes.extend_from_slice(&v.im.to_le_bytes());
        }
        fs::File::create(path).and_then(|mut f| f.write_all(&bytes)).map_err(io)?;
        let sidecar = serde_json::json!({
            "sizes": self.grid.sizes,
            "boxes": self.grid.boxes,
            "space": self.space,
            "layout": "row-major, last axis fastest, interleaved re/im",
        });
        fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar).expect("json")).map_err(io)
    }

    pub fn read_dump(path: &Path) -> Result<Self> {
        let io = |e: std::io::Error| Error::Resource(format!("reading {}: {e}", path.display()));
        let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(sidecar_path(path)).map_err(io)?)
            .map_err(|e| Error::Parse(format!("sidecar: {e}")))?;
        let sizes: Vec<usize> = serde_json::from_value(meta["sizes"].clone())
            .map_err(|e| Error::Parse(format!("sidecar sizes: {e}")))?;
        let boxes: Vec<f64> = serde_json::from_value(meta["boxes"].clone())
            .map_err(|e| Error::Parse(format!("sidecar boxes: {e}")))?;
        let space: Space = serde_json::from_value(meta["space"].clone())
            .map_err(|e| Error::Parse(format!("sidecar space: {e}")))?;
        let grid = SpectralGrid::new(sizes, boxes)?;
        let mut bytes = Vec::new();
        fs::File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(io)?;
        if bytes.len() != grid.len() * 16 {
            return Err(Error::Parse(format!("{} has {} bytes, expected {}", path.display(), bytes.len(), grid.len() * 16)));
        }
        let values = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                Complex64::new(re, im)
            })
            .collect();
        Self::from_values(&grid, values, space)
    }

    /// CSV of the 1-D slice along `axis` through the node `through`.
    pub fn csv_slice(&self, axis: usize, through: &[usize]) -> String {
        let mut out = String::from(match self.space {
            Space::Physical => "x,re,im\n",
            Space::Fourier => "k,re,im\n",
        });
        let mut idx = through.to_vec();
        for i in 0..self.grid.sizes[axis] {
            idx[axis] = i;
            let flat = self.grid.flat(&idx);
            let coord = match self.space {
                Space::Physical => i as f64 * self.grid.spacing(axis),
                Space::Fourier => self.grid.wavenumber(axis, i) as f64 / self.grid.boxes[axis],
            };
            let v = self.values[flat];
            out.push_str(&format!("{coord},{:e},{:e}\n", v.re, v.im));
        }
        out
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    p.into()
}

/// ψ_t sampled on the grid (periodised).
pub fn psi_field(grid: &SpectralGrid, t: f64, m0: f64) -> SpectralField {
    SpectralField::from_symbol(grid, |k| Complex64::new(psi_hat(t, k, m0), 0.0)).to_physical()
}

/// f_t = ψ_t * f
pub fn convolve(f: &SpectralField, t: f64, m0: f64) -> SpectralField {
    f.apply_symbol(|k| Complex64::new(psi_hat(t, k, m0), 0.0))
}

/// Symbol of L on the grid; the time derivative vanishes on the Nyquist plane.
pub fn grid_symbol_l(grid: &SpectralGrid, flat: usize, m0: f64) -> Complex64 {
    let l = symbol_l(&grid.frequency(flat), m0);
    Complex64::new(l.re, TWO_PI * grid.odd_frequency(flat)[0])
}

pub fn apply_l(u: &SpectralField, m0: f64) -> SpectralField {
    u.apply_indexed(|g, i| grid_symbol_l(g, i, m0))
}

/// ∇·f for a vector of d spatial components.
pub fn divergence(f: &[SpectralField]) -> Result<SpectralField> {
    let first = f.first().ok_or_else(|| Error::Param("divergence of an empty vector".into()))?;
    if f.len() != first.grid.d {
        return Err(Error::Param(format!("expected {} components, got {}", first.grid.d, f.len())));
    }
    let mut out = SpectralField::zeros(&first.grid, Space::Fourier);
    for (i, fi) in f.iter().enumerate() {
        let fi = fi.to_fourier();
        for (j, v) in out.values.iter_mut().enumerate() {
            let k = fi.grid.odd_frequency(j);
            *v += Complex64::new(0.0, TWO_PI * k[1 + i]) * fi.values[j];
        }
    }
    Ok(out.in_space(first.space))
}

/// Periodic solution of L u = ∇·f with û(0) = 0.
pub fn solve_l_div(f: &[SpectralField], m0: f64) -> Result<SpectralField> {
    let div = divergence(f)?;
    let space = div.space;
    let mut u = div.to_fourier();
    let grid = u.grid.clone();
    u.values.par_iter_mut().enumerate().for_each(|(i, v)| {
        let l = grid_symbol_l(&grid, i, m0);
        *v = if l.norm() == 0.0 { Complex64::default() } else { *v / l };
    });
    Ok(u.in_space(space))
}

/// Discrete form of ∫|∂^nψ_t(z)|(t^{1/8} + r + |z|_𝔰)^θ dz divided by
/// (t^{1/8})^{-|n|}(t^{1/8} + r)^θ, where r = rho·t^{1/8}.
pub fn moment_ratio(grid: &SpectralGrid, t: f64, m0: f64, n: &[u32], theta: f64, rho: f64) -> f64 {
    moment_ratios(grid, t, m0, n, &[(theta, rho)])[0]
}

/// `moment_ratio` for several (θ, rho) pairs sharing one derivative field.
pub fn moment_ratios(grid: &SpectralGrid, t: f64, m0: f64, n: &[u32], weights: &[(f64, f64)]) -> Vec<f64> {
    let scale = t.powf(0.125);
    let dpsi = psi_field(grid, t, m0).derivative(n);
    let dv = grid.cell_volume();
    let order = 4 * n[0] + n[1..].iter().sum::<u32>();
    let sums = (0..grid.len())
        .into_par_iter()
        .fold(
            || vec![0.0; weights.len()],
            |mut acc, i| {
                let a = dpsi.values[i].re.abs();
                let z = aniso_norm(&grid.displacement(i));
                for (s, &(theta, rho)) in acc.iter_mut().zip(weights) {
                    *s += a * (scale + rho * scale + z).powf(theta);
                }
                acc
            },
        )
        .reduce(|| vec![0.0; weights.len()], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    sums.iter()
        .zip(weights)
        .map(|(s, &(theta, rho))| s * dv / (scale.powi(-(order as i32)) * (scale + rho * scale).powf(theta)))
        .collect()
}
