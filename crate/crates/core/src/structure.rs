//! Derivations D^(0), D^(n) and the structure group element Γ* built from
//! a family {π^(n)} through the exponential formula.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiindex::{poly_degree, Multiindex, PolyIndex};
use crate::params::ModelParams;
use crate::scalar::Scalar;

pub fn d0_entry(beta: &Multiindex, gamma: &Multiindex) -> i64 {
    let mut total = 0i64;
    for (&k, &c) in gamma.a_part() {
        let mut image = gamma.clone();
        image.remove_e(k);
        image.add_e(k + 1, 1);
        if &image == beta {
            total += (k as i64 + 1) * c as i64;
        }
    }
    for (&l, &c) in gamma.b_part() {
        let mut image = gamma.clone();
        image.remove_f(l);
        image.add_f(l + 1, 1);
        if &image == beta {
            total += (l as i64 + 1) * c as i64;
        }
    }
    total
}

pub fn dn_entry(beta: &Multiindex, gamma: &Multiindex, n: &[u32]) -> i64 {
    assert!(n.iter().any(|&x| x > 0), "dn_entry needs n != 0");
    let mut image = gamma.clone();
    if image.remove_g(n) && &image == beta {
        gamma.p(n) as i64
    } else {
        0
    }
}

/// Image of the monomial z^γ under D^(0), as (monomial, weight) pairs.
pub fn d0_apply(gamma: &Multiindex) -> Vec<(Multiindex, i64)> {
    let mut out = Vec::new();
    for (&k, &c) in gamma.a_part() {
        let mut image = gamma.clone();
        image.remove_e(k);
        image.add_e(k + 1, 1);
        out.push((image, (k as i64 + 1) * c as i64));
    }
    for (&l, &c) in gamma.b_part() {
        let mut image = gamma.clone();
        image.remove_f(l);
        image.add_f(l + 1, 1);
        out.push((image, (l as i64 + 1) * c as i64));
    }
    out
}

/// Image of z^γ under D^(n); n = 0 means D^(0).
pub fn dn_apply(gamma: &Multiindex, n: &[u32]) -> Vec<(Multiindex, i64)> {
    if n.iter().all(|&x| x == 0) {
        return d0_apply(gamma);
    }
    let c = gamma.p(n);
    if c == 0 {
        return Vec::new();
    }
    let mut image = gamma.clone();
    image.remove_g(n);
    vec![(image, c as i64)]
}

/// Columns γ with (D^(0))_β^γ ≠ 0, found by lowering one index of β.
fn d0_preimages(beta: &Multiindex) -> Vec<(Multiindex, i64)> {
    let mut out = Vec::new();
    for &k in beta.a_part().keys() {
        if k == 0 {
            continue;
        }
        let mut g = beta.clone();
        g.remove_e(k);
        g.add_e(k - 1, 1);
        let w = k as i64 * g.a(k - 1) as i64;
        out.push((g, w));
    }
    for &l in beta.b_part().keys() {
        if l == 0 {
            continue;
        }
        let mut g = beta.clone();
        g.remove_f(l);
        g.add_f(l - 1, 1);
        let w = l as i64 * g.b(l - 1) as i64;
        out.push((g, w));
    }
    out
}

/// Row β of (D^(0))^m restricted to the columns accepted by `support`.
pub fn d0_power_row<F>(beta: &Multiindex, m: u32, support: F) -> BTreeMap<Multiindex, i64>
where
    F: Fn(&Multiindex) -> bool,
{
    let mut row: BTreeMap<Multiindex, i64> = BTreeMap::new();
    row.insert(beta.clone(), 1);
    for _ in 0..m {
        let mut next: BTreeMap<Multiindex, i64> = BTreeMap::new();
        for (b, w) in &row {
            for (g, dw) in d0_preimages(b) {
                *next.entry(g).or_insert(0) += w * dw;
            }
        }
        row = next;
    }
    row.retain(|g, w| *w != 0 && support(g));
    row
}

/// A finitely supported family {π^(n)}; the key n = 0 holds π^(0).
#[derive(Clone, Debug, PartialEq)]
pub struct StructureMap<S> {
    pub pi: BTreeMap<PolyIndex, BTreeMap<Multiindex, S>>,
}

impl<S: Scalar> Default for StructureMap<S> {
    fn default() -> Self {
        Self { pi: BTreeMap::new() }
    }
}

impl<S: Scalar> StructureMap<S> {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn set(&mut self, n: PolyIndex, beta: Multiindex, value: S) {
        let slot = self.pi.entry(n).or_default();
        if value.is_zero() {
            slot.remove(&beta);
        } else {
            slot.insert(beta, value);
        }
    }

    /// π^(n)_β ≠ 0 forces β populated and |β| > |n|.
    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        for (n, entries) in &self.pi {
            if n.len() != 1 + params.d {
                return Err(Error::Contract(format!("index {n:?} has wrong dimension")));
            }
            for (beta, v) in entries {
                if v.is_zero() {
                    continue;
                }
                if !beta.is_populated() {
                    return Err(Error::Contract(format!("π^({n:?}) supported on unpopulated {beta}")));
                }
                if beta.homogeneity(params) <= poly_degree(n) as f64 {
                    return Err(Error::Contract(format!("π^({n:?})_{beta} violates |β| > |n|")));
                }
            }
        }
        Ok(())
    }

    fn picks(&self) -> Vec<(&PolyIndex, &Multiindex, &S)> {
        self.pi
            .iter()
            .flat_map(|(n, m)| m.iter().map(move |(b, v)| (n, b, v)))
            .filter(|(_, _, v)| !v.is_zero())
            .collect()
    }
}

fn factorial<S: Scalar>(j: u32) -> S {
    let f: i64 = (1..=j as i64).product();
    S::from_ratio(1, f.max(1))
}

type SparseVec<S> = BTreeMap<Multiindex, S>;

fn apply_dn<S: Scalar>(v: &SparseVec<S>, n: &[u32]) -> SparseVec<S> {
    let mut out: SparseVec<S> = BTreeMap::new();
    for (g, c) in v {
        for (img, w) in dn_apply(g, n) {
            let add = c.clone() * S::from_ratio(w, 1);
            let slot = out.entry(img).or_insert_with(S::zero);
            *slot = slot.clone() + add;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

/// (Γ*)_β^γ from the exponential formula.
pub fn gamma_entry<S: Scalar>(
    beta: &Multiindex,
    gamma: &Multiindex,
    map: &StructureMap<S>,
    params: &ModelParams,
) -> Result<S> {
    map.validate(params)?;
    let picks = map.picks();
    let alpha = params.alpha;
    let c = beta.homogeneity(params) + (1.0 - alpha) * beta.weighted_ab() as f64 - alpha;
    let slack = c - gamma.bracket() as f64 - gamma.poly_part_degree() as f64;
    let j_bound = if slack < -1e-9 { -1 } else { ((slack + 1e-9) / (1.0 - alpha)).floor() as i64 };
    let j_max = j_bound.min(beta.total_count() as i64);
    if j_max < 0 {
        return Ok(S::zero());
    }

    struct Walk<'a, S> {
        beta: &'a Multiindex,
        picks: &'a [(&'a PolyIndex, &'a Multiindex, &'a S)],
        j_max: u32,
        total: S,
    }

    fn rec<S: Scalar>(w: &mut Walk<'_, S>, j: u32, mu: &Multiindex, weight: &S, v: &SparseVec<S>) {
        if let Some(rest) = w.beta.minus(mu) {
            if let Some(c) = v.get(&rest) {
                let add = weight.clone() * c.clone() * factorial::<S>(j);
                w.total = w.total.clone() + add;
            }
        }
        if j == w.j_max {
            return;
        }
        for i in 0..w.picks.len() {
            let (n, b, val) = w.picks[i];
            let next_mu = mu.plus(b);
            if !next_mu.le(w.beta) {
                continue;
            }
            let next_v = apply_dn(v, n);
            if next_v.is_empty() {
                continue;
            }
            let next_weight = weight.clone() * val.clone();
            rec(w, j + 1, &next_mu, &next_weight, &next_v);
        }
    }

    let mut start: SparseVec<S> = BTreeMap::new();
    start.insert(gamma.clone(), S::one());
    let mut walk = Walk { beta, picks: &picks, j_max: j_max as u32, total: S::zero() };
    rec(&mut walk, 0, &Multiindex::zero(), &S::one(), &start);
    Ok(walk.total)
}

/// Truncated power series Σ π_β z^β.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesVector<S> {
    pub coeffs: BTreeMap<Multiindex, S>,
}

impl<S: Scalar> Default for SeriesVector<S> {
    fn default() -> Self {
        Self { coeffs: BTreeMap::new() }
    }
}

impl<S: Scalar> SeriesVector<S> {
    pub fn monomial(beta: Multiindex, c: S) -> Self {
        let mut s = Self::default();
        s.add_term(beta, c);
        s
    }

    pub fn add_term(&mut self, beta: Multiindex, c: S) {
        let slot = self.coeffs.entry(beta.clone()).or_insert_with(S::zero);
        *slot = slot.clone() + c;
        if slot.is_zero() {
            self.coeffs.remove(&beta);
        }
    }

    pub fn get(&self, beta: &Multiindex) -> S {
        self.coeffs.get(beta).cloned().unwrap_or_else(S::zero)
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (b, c) in &other.coeffs {
            out.add_term(b.clone(), c.clone());
        }
        out
    }

    pub fn truncate(&self, params: &ModelParams, cutoff: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.retain(|b, _| b.homogeneity(params) < cutoff);
        out
    }

    /// Cauchy product keeping monomials with |β| < cutoff.
    pub fn times(&self, other: &Self, params: &ModelParams, cutoff: f64) -> Self {
        let mut out = Self::default();
        for (b1, c1) in &self.coeffs {
            for (b2, c2) in &other.coeffs {
                let b = b1.plus(b2);
                if b.homogeneity(params) < cutoff {
                    out.add_term(b, c1.clone() * c2.clone());
                }
            }
        }
        out
    }
}

/// Γ* applied to a truncated series, keeping |β| < cutoff.
pub fn gamma_apply<S: Scalar>(
    series: &SeriesVector<S>,
    map: &StructureMap<S>,
    params: &ModelParams,
    cutoff: f64,
) -> Result<SeriesVector<S>> {
    map.validate(params)?;
    let picks = map.picks();
    let gaps: Vec<f64> = picks
        .iter()
        .map(|(n, b, _)| b.homogeneity(params) - poly_degree(n) as f64)
        .collect();

    struct Walk<'a, S> {
        picks: &'a [(&'a PolyIndex, &'a Multiindex, &'a S)],
        gaps: &'a [f64],
        cutoff: f64,
        params: &'a ModelParams,
        out: SeriesVector<S>,
    }

    // All monomials reached at a node share the homogeneity `h`.
    fn rec<S: Scalar>(
        w: &mut Walk<'_, S>,
        j: u32,
        h: f64,
        mu: &Multiindex,
        weight: &S,
        v: &SparseVec<S>,
    ) {
        let scale = weight.clone() * factorial::<S>(j);
        for (g, c) in v {
            let beta = mu.plus(g);
            debug_assert!((beta.homogeneity(w.params) - h).abs() < 1e-9);
            w.out.add_term(beta, scale.clone() * c.clone());
        }
        for i in 0..w.picks.len() {
            if h + w.gaps[i] >= w.cutoff + 1e-9 {
                continue;
            }
            let (n, b, val) = w.picks[i];
            let next_v = apply_dn(v, n);
            let Some(g) = next_v.keys().next() else {
                continue;
            };
            // decide on the same rounding as truncate
            let next_mu = mu.plus(b);
            let nh = next_mu.plus(g).homogeneity(w.params);
            if nh >= w.cutoff {
                continue;
            }
            rec(w, j + 1, nh, &next_mu, &(weight.clone() * val.clone()), &next_v);
        }
    }

    let mut walk = Walk { picks: &picks, gaps: &gaps, cutoff, params, out: SeriesVector::default() };
    for (g, c) in &series.coeffs {
        let h = g.homogeneity(params);
        if h >= cutoff {
            continue;
        }
        let mut start: SparseVec<S> = BTreeMap::new();
        start.insert(g.clone(), c.clone());
        rec(&mut walk, 0, h, &Multiindex::zero(), &S::one(), &start);
    }
    Ok(walk.out)
}

#[derive(Serialize, Deserialize)]
struct JsonEntry {
    beta: Multiindex,
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct JsonFamily {
    n: Vec<u32>,
    entries: Vec<JsonEntry>,
}

impl StructureMap<f64> {
    pub fn to_json(&self) -> serde_json::Value {
        let fams: Vec<JsonFamily> = self
            .pi
            .iter()
            .map(|(n, m)| JsonFamily {
                n: n.clone(),
                entries: m.iter().map(|(b, v)| JsonEntry { beta: b.clone(), value: *v }).collect(),
            })
            .collect();
        serde_json::to_value(fams).expect("structure map serialises")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let fams: Vec<JsonFamily> =
            serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        let mut out = Self::default();
        for fam in fams {
            for e in fam.entries {
                out.set(fam.n.clone(), e.beta, e.value);
            }
        }
        Ok(out)
    }
}
