//! Double-exponential (tanh-sinh) quadrature on finite intervals.

use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub min_level: u32,
    pub max_level: u32,
    /// Half-width of the t-range; abscissae reach within ~exp(-π/2·e^t_max) of the ends.
    pub t_max: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-11, abs_tol: 1e-300, min_level: 3, max_level: 12, t_max: 3.7 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Nodes of one level as (t, weight, distance of the node from either end
/// in units of the half-width).
fn level_nodes(level: u32, t_max: f64) -> Vec<(f64, f64)> {
    let h = 0.5f64.powi(level as i32);
    let n = (t_max / h).ceil() as i64;
    let step = if level == 0 { 1 } else { 2 };
    let start = if level == 0 { 0 } else { 1 };
    let mut out = Vec::new();
    let mut j = start;
    while j <= n {
        let t = j as f64 * h;
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let e = (-2.0 * u).exp();
        // 1 - tanh(u) and the derivative of tanh(π/2 sinh t)
        let c = 2.0 * e / (1.0 + e);
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e));
        out.push((c, w));
        j += step;
    }
    out
}

/// ∫_a^b f. The integrand receives (x, x - a, b - x) so that endpoint
/// behaviour can be evaluated without cancellation.
pub fn tanh_sinh<F>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64, f64, f64) -> f64 + Sync,
{
    let half = 0.5 * (b - a);
    if half == 0.0 {
        return Ok(QuadResult { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let eval_level = |level: u32| -> (f64, f64, usize) {
        let nodes = level_nodes(level, opts.t_max);
        let parts: Vec<(f64, f64)> = nodes
            .par_iter()
            .map(|&(c, w)| {
                let d = half * c;
                if level == 0 && c == 1.0 {
                    // centre node: both sides coincide
                    let v = w * f(a + half, half, half);
                    return (v, v.abs());
                }
                if d <= 0.0 {
                    return (0.0, 0.0);
                }
                let l = w * f(a + d, d, b - a - d);
                let r = w * f(b - d, b - a - d, d);
                (l + r, l.abs() + r.abs())
            })
            .collect();
        let (s, m) = parts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
        (s, m, nodes.len() * 2)
    };
    let (mut sum, mut mag, mut evals) = eval_level(0);
    let mut h = 1.0;
    let mut prev = sum * h * half;
    for level in 1..=opts.max_level {
        let (s, m, n) = eval_level(level);
        sum += s;
        mag += m;
        evals += n;
        h *= 0.5;
        let est = sum * h * half;
        let scale = mag * h * half.abs();
        let err = (est - prev).abs();
        if !est.is_finite() {
            return Err(Error::Numeric(format!("non-finite integrand on [{a}, {b}] at level {level}")));
        }
        // relative to ∫|f| so that integrals cancelling to zero still terminate
        if level >= opts.min_level && (err <= opts.rel_tol * scale || err <= opts.abs_tol) {
            return Ok(QuadResult { value: est, error: err, evaluations: evals });
        }
        prev = est;
    }
    Err(Error::Numeric(format!(
        "tanh-sinh did not converge on [{a}, {b}] after {} levels: last estimate {prev:e}, {evals} evaluations",
        opts.max_level
    )))
}
