use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub d: usize,
    pub scaling: Vec<u32>,
    pub eff_dim: u32,
    pub lambda: f64,
    pub kappa: Option<f64>,
}

impl ModelParams {
    pub fn new(alpha: f64, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Param("d must be positive".into()));
        }
        let eff_dim = 4 + d as u32;
        let floor = (1.5 - eff_dim as f64 / 4.0).max(0.0);
        if !(alpha > floor && alpha < 1.0) {
            return Err(Error::Param(format!(
                "alpha = {alpha} outside ({floor}, 1) for d = {d}"
            )));
        }
        let mut scaling = vec![1; 1 + d];
        scaling[0] = 4;
        Ok(Self { alpha, d, scaling, eff_dim, lambda: DEFAULT_LAMBDA, kappa: None })
    }

    /// Like `new`, but also rejects alpha close to a rational with small denominator.
    pub fn new_strict(alpha: f64, d: usize) -> Result<Self> {
        let p = Self::new(alpha, d)?;
        p.check_generic_alpha()?;
        Ok(p)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 0.5) {
            return Err(Error::Param(format!("lambda = {lambda} outside (0, 1/2)")));
        }
        self.lambda = lambda;
        Ok(self)
    }

    pub fn with_kappa(mut self, kappa: f64, homs: &HomogeneitySet) -> Result<Self> {
        let (lo, hi) = kappa_window(&self, homs)?;
        if !(kappa > lo && kappa < hi) {
            return Err(Error::Param(format!("kappa = {kappa} outside ({lo}, {hi})")));
        }
        self.kappa = Some(kappa);
        Ok(self)
    }

    /// Fails when alpha lies within 1e-6 of p/q with q <= 12.
    pub fn check_generic_alpha(&self) -> Result<()> {
        for q in 1..=12u32 {
            let p = (self.alpha * q as f64).round();
            if (self.alpha - p / q as f64).abs() < 1e-6 {
                return Err(Error::Param(format!(
                    "alpha = {} is within 1e-6 of {}/{}",
                    self.alpha, p, q
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneitySet {
    pub entries: Vec<f64>,
    pub cutoff: f64,
}

impl HomogeneitySet {
    pub fn min_above(&self, x: f64) -> Option<f64> {
        self.entries.iter().copied().find(|&h| h > x + 1e-12)
    }
}

fn kappa_window(params: &ModelParams, homs: &HomogeneitySet) -> Result<(f64, f64)> {
    let alpha = params.alpha;
    if homs.cutoff <= 3.0 + alpha {
        return Err(Error::Param(format!(
            "homogeneity set cutoff {} must exceed 3 + alpha",
            homs.cutoff
        )));
    }
    let above3 = homs
        .min_above(3.0)
        .ok_or_else(|| Error::Param("no homogeneity above 3 below the cutoff".into()))?;
    let lo = 3.0 - 2.0 * alpha;
    let hi = (params.eff_dim as f64 / 2.0).min(above3 - 2.0 * alpha);
    Ok((lo, hi))
}

/// Midpoint of the admissible kappa interval.
pub fn choose_kappa(params: &ModelParams, homs: &HomogeneitySet) -> Result<f64> {
    let (lo, hi) = kappa_window(params, homs)?;
    if lo >= hi {
        return Err(Error::Param(format!("empty kappa window ({lo}, {hi})")));
    }
    Ok(0.5 * (lo + hi))
}
