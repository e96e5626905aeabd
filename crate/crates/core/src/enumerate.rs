//! Enumeration of populated multiindices below a homogeneity cutoff.
//!
//! Multiindices containing e0 are left out: e0 enters neither the bracket nor
//! the population identity, so every populated β + m e0 is again populated
//! with the same homogeneity and the set would be infinite.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::multiindex::{poly_degree, Multiindex, PolyIndex};
use crate::params::{HomogeneitySet, ModelParams};

pub const DEFAULT_SIZE_BOUND: usize = 1_000_000;

/// All n in N0^{1+d} \ {0} with |n| < bound, sorted by (|n|, n).
pub fn poly_indices_below(d: usize, bound: f64) -> Vec<PolyIndex> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; 1 + d];
    fn rec(pos: usize, used: u32, bound: f64, cur: &mut Vec<u32>, out: &mut Vec<PolyIndex>) {
        if pos == cur.len() {
            if used > 0 {
                out.push(cur.clone());
            }
            return;
        }
        let w = if pos == 0 { 4 } else { 1 };
        let mut c = 0;
        while ((used + w * c) as f64) < bound {
            cur[pos] = c;
            rec(pos + 1, used + w * c, bound, cur, out);
            c += 1;
        }
        cur[pos] = 0;
    }
    rec(0, 0, bound, &mut cur, &mut out);
    out.sort_by(|x, y| poly_degree(x).cmp(&poly_degree(y)).then(x.cmp(y)));
    out
}

/// Multisets (as count vectors over `items`) with Σ weight·count < budget.
fn poly_multisets(items: &[PolyIndex], budget: f64) -> Vec<Vec<(usize, u32)>> {
    let mut out = Vec::new();
    fn rec(
        i: usize,
        used: u32,
        items: &[PolyIndex],
        budget: f64,
        cur: &mut Vec<(usize, u32)>,
        out: &mut Vec<Vec<(usize, u32)>>,
    ) {
        if i == items.len() {
            out.push(cur.clone());
            return;
        }
        let w = poly_degree(&items[i]);
        let mut c = 0;
        while ((used + w * c) as f64) < budget {
            if c > 0 {
                cur.push((i, c));
            }
            rec(i + 1, used + w * c, items, budget, cur, out);
            if c > 0 {
                cur.pop();
            }
            c += 1;
        }
    }
    rec(0, 0, items, budget, &mut Vec::new(), &mut out);
    out
}

/// Nondecreasing sequences of `size` values in [min, ..] with sum <= max_sum.
fn bounded_multisets(size: u32, min: u32, max_sum: u32, out: &mut Vec<Vec<u32>>) {
    fn rec(left: u32, min: u32, room: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        let mut v = min;
        while v * left <= room {
            cur.push(v);
            rec(left - 1, v, room - v, cur, out);
            cur.pop();
            v += 1;
        }
    }
    rec(size, min, max_sum, &mut Vec::new(), out);
}

/// Integer partitions of `total` into parts >= 1.
fn partitions(total: u32, out: &mut Vec<Vec<u32>>) {
    fn rec(left: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for v in (1..=max.min(left)).rev() {
            cur.push(v);
            rec(left - v, v, cur, out);
            cur.pop();
        }
    }
    rec(total, total, &mut Vec::new(), out);
}

pub fn compare_by_order(x: &Multiindex, y: &Multiindex, params: &ModelParams) -> Ordering {
    x.order_length(params)
        .partial_cmp(&y.order_length(params))
        .unwrap_or(Ordering::Equal)
        .then_with(|| x.cmp(y))
}

/// Populated β (without e0) with |β| < cutoff, sorted by (order length, lexicographic).
pub fn enumerate_populated(params: &ModelParams, cutoff: f64) -> Result<Vec<Multiindex>> {
    enumerate_populated_bounded(params, cutoff, DEFAULT_SIZE_BOUND)
}

pub fn enumerate_populated_bounded(
    params: &ModelParams,
    cutoff: f64,
    size_bound: usize,
) -> Result<Vec<Multiindex>> {
    if !(cutoff > 0.0) || !cutoff.is_finite() {
        return Err(Error::Param(format!("cutoff must be positive, got {cutoff}")));
    }
    let alpha = params.alpha;
    let polys = poly_indices_below(params.d, cutoff);
    let mut out: Vec<Multiindex> = polys.iter().map(|n| Multiindex::g(n)).collect();
    let overflow = || Error::Resource(format!("more than {size_bound} multiindices below {cutoff}"));

    for pm in poly_multisets(&polys, cutoff - alpha) {
        let mut base = Multiindex::zero();
        let mut hp = 0u32;
        let mut pc = 0u32;
        for &(i, c) in &pm {
            base.add_g(polys[i].clone(), c);
            hp += poly_degree(&polys[i]) * c;
            pc += c;
        }
        // |β| = α Σβ(l) + |β|_p for populated non-polynomial β.
        let mut nb = 1u32;
        while alpha * nb as f64 + (hp as f64) < cutoff {
            let weight = nb - 1 + pc;
            let mut bsets = Vec::new();
            bounded_multisets(nb, 0, weight, &mut bsets);
            for bs in bsets {
                let used: u32 = bs.iter().sum();
                let mut parts = Vec::new();
                partitions(weight - used, &mut parts);
                for ks in parts {
                    let mut beta = base.clone();
                    for &l in &bs {
                        beta.add_f(l, 1);
                    }
                    for &k in &ks {
                        beta.add_e(k, 1);
                    }
                    debug_assert!(beta.is_populated());
                    out.push(beta);
                    if out.len() > size_bound {
                        return Err(overflow());
                    }
                }
            }
            nb += 1;
        }
    }
    if out.len() > size_bound {
        return Err(overflow());
    }
    out.sort_by(|x, y| compare_by_order(x, y, params));
    Ok(out)
}

pub fn homogeneity_set(params: &ModelParams, cutoff: f64) -> Result<HomogeneitySet> {
    let mut entries: Vec<f64> = enumerate_populated(params, cutoff)?
        .iter()
        .map(|b| b.homogeneity(params))
        .collect();
    entries.sort_by(|x, y| x.partial_cmp(y).unwrap());
    entries.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    Ok(HomogeneitySet { entries, cutoff })
}

/// Populated β with |β| < 3 whose BPHZ expectation survives the parity filter.
pub fn renormalisation_candidates(params: &ModelParams) -> Result<Vec<Multiindex>> {
    Ok(enumerate_populated(params, 3.0)?
        .into_iter()
        .filter(|b| !b.is_purely_polynomial() && b.expectation_parity_filter())
        .collect())
}
