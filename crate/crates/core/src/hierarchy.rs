//! Symbolic right-hand sides Π⁻_β of the model hierarchy.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use num_traits::One;
use petgraph::algo::is_cyclic_directed;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::enumerate::enumerate_populated;
use crate::error::{Error, Result};
use crate::multiindex::Multiindex;
use crate::params::ModelParams;
use crate::scalar::Rational;
use crate::structure::d0_power_row;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermKind {
    Quasi,
    Noise,
    Counter,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Decoration {
    #[serde(rename = "gradLaplacian")]
    GradLaplacian,
    #[serde(rename = "grad")]
    Grad,
    #[serde(rename = "polynomialGradient")]
    PolynomialGradient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpandMode {
    #[default]
    Raw,
    Reduced,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HierarchyTerm {
    pub kind: TermKind,
    pub coefficient: Rational,
    /// Sorted multiset of plain Π factors.
    pub plain_factors: Vec<Multiindex>,
    pub decorated_factor: Option<(Multiindex, Decoration)>,
    pub noise: bool,
    pub c_weights: BTreeMap<Multiindex, i64>,
    /// β_{m+2} for counter terms: the index at which (D^(0))^m c is read.
    pub c_slot: Option<Multiindex>,
}

impl HierarchyTerm {
    fn sort_key(&self) -> (TermKind, Option<&Multiindex>, &[Multiindex]) {
        (self.kind, self.decorated_factor.as_ref().map(|(b, _)| b), &self.plain_factors)
    }

    /// e_k / f_l tag plus factors plus the c-slot.
    pub fn reconstruct(&self) -> Multiindex {
        let mut sum = Multiindex::zero();
        for b in &self.plain_factors {
            sum = sum.plus(b);
        }
        if let Some((b, _)) = &self.decorated_factor {
            sum = sum.plus(b);
        }
        let k = self.plain_factors.len() as u32;
        match self.kind {
            TermKind::Quasi => sum.plus(&Multiindex::e(k)),
            TermKind::Noise => sum.plus(&Multiindex::f(k)),
            TermKind::Counter => match &self.c_slot {
                Some(s) => sum.plus(s),
                None => sum,
            },
        }
    }

    pub fn to_json(&self) -> Value {
        let coeff = if self.coefficient.is_integer() {
            self.coefficient.numer().to_string()
        } else {
            format!("{}/{}", self.coefficient.numer(), self.coefficient.denom())
        };
        let decorated = match &self.decorated_factor {
            Some((b, d)) => json!({"beta": b, "dec": d}),
            None => Value::Null,
        };
        let c: Vec<Value> =
            self.c_weights.iter().map(|(g, w)| json!({"gamma": g, "weight": w})).collect();
        json!({
            "kind": self.kind,
            "coeff": coeff,
            "factors": self.plain_factors,
            "decorated": decorated,
            "noise": self.noise,
            "c": c,
        })
    }

    /// Inverse of `to_json`; the c-slot is recovered from the target β.
    pub fn from_json(v: &Value, beta: &Multiindex) -> Result<Self> {
        let bad = |what: &str| Error::Parse(format!("term field `{what}` malformed in {v}"));
        let kind: TermKind =
            serde_json::from_value(v["kind"].clone()).map_err(|_| bad("kind"))?;
        let coeff_s = v["coeff"].as_str().ok_or_else(|| bad("coeff"))?;
        let coefficient = parse_rational(coeff_s).ok_or_else(|| bad("coeff"))?;
        let mut plain_factors: Vec<Multiindex> =
            serde_json::from_value(v["factors"].clone()).map_err(|_| bad("factors"))?;
        plain_factors.sort();
        let decorated_factor = match &v["decorated"] {
            Value::Null => None,
            d => {
                let b: Multiindex =
                    serde_json::from_value(d["beta"].clone()).map_err(|_| bad("decorated"))?;
                let dec: Decoration =
                    serde_json::from_value(d["dec"].clone()).map_err(|_| bad("decorated"))?;
                Some((b, dec))
            }
        };
        let noise = v["noise"].as_bool().ok_or_else(|| bad("noise"))?;
        let mut c_weights = BTreeMap::new();
        for e in v["c"].as_array().ok_or_else(|| bad("c"))? {
            let g: Multiindex = serde_json::from_value(e["gamma"].clone()).map_err(|_| bad("c"))?;
            let w = e["weight"].as_i64().ok_or_else(|| bad("c"))?;
            c_weights.insert(g, w);
        }
        let mut term = HierarchyTerm {
            kind,
            coefficient,
            plain_factors,
            decorated_factor,
            noise,
            c_weights,
            c_slot: None,
        };
        if kind == TermKind::Counter {
            term.c_slot = beta.minus(&term.reconstruct());
        }
        Ok(term)
    }
}

pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().ok()?;
            let d: i64 = d.trim().parse().ok()?;
            (d != 0).then(|| Rational::new(n, d))
        }
        None => Some(Rational::from_integer(s.parse().ok()?)),
    }
}

pub fn terms_to_json(terms: &[HierarchyTerm]) -> Value {
    Value::Array(terms.iter().map(HierarchyTerm::to_json).collect())
}

pub fn sort_terms(terms: &mut [HierarchyTerm]) {
    terms.sort_by(|x, y| x.sort_key().cmp(&y.sort_key()));
}

/// All nonzero populated γ <= β.
fn populated_parts(beta: &Multiindex) -> Vec<Multiindex> {
    let mut coords: Vec<(u8, Multiindex, u32)> = Vec::new();
    for (&k, &c) in beta.a_part() {
        coords.push((0, Multiindex::e(k), c));
    }
    for (&l, &c) in beta.b_part() {
        coords.push((1, Multiindex::f(l), c));
    }
    for (n, &c) in beta.p_part() {
        coords.push((2, Multiindex::g(n), c));
    }
    let mut out = Vec::new();
    fn rec(i: usize, coords: &[(u8, Multiindex, u32)], cur: Multiindex, out: &mut Vec<Multiindex>) {
        if i == coords.len() {
            if cur.is_populated() {
                out.push(cur);
            }
            return;
        }
        let mut acc = cur;
        for c in 0..=coords[i].2 {
            if c > 0 {
                acc = acc.plus(&coords[i].1);
            }
            rec(i + 1, coords, acc.clone(), out);
        }
    }
    rec(0, &coords, Multiindex::zero(), &mut out);
    out.sort();
    out
}

/// Multisets of `size` elements of `parts` with sum <= `cap`; each with its
/// number of orderings size!/Π mult!.
fn multisets(parts: &[Multiindex], size: u32, cap: &Multiindex) -> Vec<(Vec<Multiindex>, Multiindex, i64)> {
    let mut out = Vec::new();
    fn rec(
        start: usize,
        left: u32,
        parts: &[Multiindex],
        cap: &Multiindex,
        cur: &mut Vec<Multiindex>,
        sum: Multiindex,
        out: &mut Vec<(Vec<Multiindex>, Multiindex, i64)>,
    ) {
        if left == 0 {
            out.push((cur.clone(), sum, orderings(cur)));
            return;
        }
        for i in start..parts.len() {
            let next = sum.plus(&parts[i]);
            if !next.le(cap) {
                continue;
            }
            cur.push(parts[i].clone());
            rec(i, left - 1, parts, cap, cur, next, out);
            cur.pop();
        }
    }
    rec(0, size, parts, cap, &mut Vec::new(), Multiindex::zero(), &mut out);
    out
}

fn factorial(n: usize) -> i64 {
    (1..=n as i64).product()
}

fn multiplicity_product(sorted: &[Multiindex]) -> i64 {
    let mut prod = 1i64;
    let mut run = 1usize;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            prod *= factorial(run);
            run = 1;
        }
    }
    if !sorted.is_empty() {
        prod *= factorial(run);
    }
    prod
}

fn orderings(sorted: &[Multiindex]) -> i64 {
    factorial(sorted.len()) / multiplicity_product(sorted)
}

fn check_target(beta: &Multiindex) -> Result<()> {
    if !beta.is_populated() {
        return Err(Error::Contract(format!("{beta} is not populated")));
    }
    if beta.is_purely_polynomial() {
        return Err(Error::Contract(format!("{beta} is purely polynomial; Π⁻ vanishes")));
    }
    Ok(())
}

/// Canonical expansion of Π⁻_β.
pub fn expand(beta: &Multiindex, params: &ModelParams, mode: ExpandMode) -> Result<Vec<HierarchyTerm>> {
    check_target(beta)?;
    let parts = populated_parts(beta);
    let mut terms = Vec::new();

    for &k in beta.a_part().keys() {
        let rest = beta.minus(&Multiindex::e(k)).expect("e_k present");
        for dec in &parts {
            let Some(left) = rest.minus(dec) else { continue };
            for (factors, sum, count) in multisets(&parts, k, &left) {
                if sum != left {
                    continue;
                }
                terms.push(HierarchyTerm {
                    kind: TermKind::Quasi,
                    coefficient: Rational::from_integer(count),
                    plain_factors: factors,
                    decorated_factor: Some((dec.clone(), Decoration::GradLaplacian)),
                    noise: false,
                    c_weights: BTreeMap::new(),
                    c_slot: None,
                });
            }
        }
    }

    for &l in beta.b_part().keys() {
        let rest = beta.minus(&Multiindex::f(l)).expect("f_l present");
        for (factors, sum, count) in multisets(&parts, l, &rest) {
            if sum != rest {
                continue;
            }
            terms.push(HierarchyTerm {
                kind: TermKind::Noise,
                coefficient: Rational::from_integer(count),
                plain_factors: factors,
                decorated_factor: None,
                noise: true,
                c_weights: BTreeMap::new(),
                c_slot: None,
            });
        }
    }

    let support = |g: &Multiindex| -> bool {
        g.p_part().is_empty()
            && match mode {
                ExpandMode::Raw => g.satisfies_pop2(),
                ExpandMode::Reduced => g.is_c_populated(params).unwrap_or(false),
            }
    };
    for dec in &parts {
        let Some(after_dec) = beta.minus(dec) else { continue };
        let decoration = if dec.is_purely_polynomial() {
            Decoration::PolynomialGradient
        } else {
            Decoration::Grad
        };
        for m in 0..=after_dec.total_count() {
            for (factors, sum, _) in multisets(&parts, m, &after_dec) {
                let slot = after_dec.minus(&sum).expect("bounded by cap");
                if !slot.p_part().is_empty() {
                    continue;
                }
                let weights = d0_power_row(&slot, m, support);
                if weights.is_empty() {
                    continue;
                }
                let coefficient = -Rational::new(1, multiplicity_product(&factors));
                terms.push(HierarchyTerm {
                    kind: TermKind::Counter,
                    coefficient,
                    plain_factors: factors,
                    decorated_factor: Some((dec.clone(), decoration)),
                    noise: false,
                    c_weights: weights,
                    c_slot: Some(slot),
                });
            }
        }
    }

    sort_terms(&mut terms);
    for t in &terms {
        if &t.reconstruct() != beta {
            return Err(Error::Consistency(format!("term does not reconstruct {beta}: {:?}", t)));
        }
    }
    Ok(terms)
}

/// Every factor multiindex occurring in Π⁻_β.
pub fn dependencies(beta: &Multiindex, params: &ModelParams) -> Result<BTreeSet<Multiindex>> {
    let mut out = BTreeSet::new();
    for t in expand(beta, params, ExpandMode::Raw)? {
        out.extend(t.plain_factors.iter().cloned());
        if let Some((b, _)) = t.decorated_factor {
            out.insert(b);
        }
    }
    for b in &out {
        if !b.precedes(beta, params) {
            return Err(Error::Consistency(format!("{b} does not precede {beta}")));
        }
    }
    Ok(out)
}

fn spatial_units(d: usize) -> Vec<Multiindex> {
    (1..=d)
        .map(|i| {
            let mut n = vec![0u32; 1 + d];
            n[i] = 1;
            Multiindex::g(&n)
        })
        .collect()
}

/// Every c_γ occurring in Π⁻_β, checked against the triangular structure.
pub fn c_dependencies(beta: &Multiindex, params: &ModelParams) -> Result<BTreeSet<Multiindex>> {
    let mut out = BTreeSet::new();
    for t in expand(beta, params, ExpandMode::Raw)? {
        out.extend(t.c_weights.keys().cloned());
    }
    let units = spatial_units(params.d);
    for g in &out {
        let all_precede = units.iter().all(|u| g.plus(u).precedes(beta, params));
        let hits = units.iter().any(|u| &g.plus(u) == beta);
        if !(all_precede || hits) {
            return Err(Error::Consistency(format!("c_{g} is not below {beta}")));
        }
    }
    Ok(out)
}

pub struct HierarchyDag {
    pub graph: DiGraph<Multiindex, ()>,
    /// Nodes in an order refining the order length.
    pub order: Vec<NodeIndex>,
}

pub fn build_dag(params: &ModelParams, cutoff: f64) -> Result<HierarchyDag> {
    let nodes = enumerate_populated(params, cutoff)?;
    let mut graph = DiGraph::new();
    let index: BTreeMap<Multiindex, NodeIndex> =
        nodes.iter().map(|b| (b.clone(), graph.add_node(b.clone()))).collect();
    for b in &nodes {
        if b.is_purely_polynomial() {
            continue;
        }
        for dep in dependencies(b, params)? {
            let from = *index.get(&dep).ok_or_else(|| {
                Error::Consistency(format!("dependency {dep} of {b} missing from the node set"))
            })?;
            graph.add_edge(from, index[b], ());
        }
    }
    if is_cyclic_directed(&graph) {
        return Err(Error::Consistency("dependency graph has a cycle".into()));
    }
    let order: Vec<NodeIndex> = nodes.iter().map(|b| index[b]).collect();
    for e in graph.edge_indices() {
        let (s, t) = graph.edge_endpoints(e).expect("edge exists");
        if graph[s].order_length(params).partial_cmp(&graph[t].order_length(params))
            != Some(Ordering::Less)
        {
            return Err(Error::Consistency(format!("edge {} -> {} not increasing", graph[s], graph[t])));
        }
    }
    Ok(HierarchyDag { graph, order })
}

/// Homogeneity bookkeeping for a Quasi/Noise term: the e_k/f_l tag and the
/// factors, summed with |·|−α additive.
pub fn factor_homogeneity(term: &HierarchyTerm, params: &ModelParams) -> f64 {
    let k = term.plain_factors.len() as u32;
    let tag = match term.kind {
        TermKind::Quasi => Multiindex::e(k),
        _ => Multiindex::f(k),
    };
    let mut fs: Vec<&Multiindex> = vec![&tag];
    fs.extend(term.plain_factors.iter());
    if let Some((b, _)) = &term.decorated_factor {
        fs.push(b);
    }
    let sum: f64 = fs.iter().map(|b| b.homogeneity(params)).sum();
    sum - (fs.len() as f64 - 1.0) * params.alpha
}

impl Default for HierarchyTerm {
    fn default() -> Self {
        Self {
            kind: TermKind::Noise,
            coefficient: Rational::one(),
            plain_factors: Vec::new(),
            decorated_factor: None,
            noise: true,
            c_weights: BTreeMap::new(),
            c_slot: None,
        }
    }
}
