//! Sparse multiindices over the coordinates a_k, b_l and p_n.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// A space-time polynomial index n = (n0, n1, ..., nd).
pub type PolyIndex = Vec<u32>;

/// Scaled degree |n| = 4 n0 + n1 + ... + nd.
pub fn poly_degree(n: &[u32]) -> u32 {
    match n.split_first() {
        Some((n0, rest)) => 4 * n0 + rest.iter().sum::<u32>(),
        None => 0,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multiindex {
    a: BTreeMap<u32, u32>,
    b: BTreeMap<u32, u32>,
    p: BTreeMap<PolyIndex, u32>,
}

fn bump<K: Ord>(map: &mut BTreeMap<K, u32>, key: K, by: u32) {
    if by > 0 {
        *map.entry(key).or_insert(0) += by;
    }
}

fn drop_from<K: Ord + Clone>(map: &mut BTreeMap<K, u32>, key: &K, by: u32) -> bool {
    match map.get_mut(key) {
        Some(c) if *c >= by => {
            *c -= by;
            if *c == 0 {
                map.remove(key);
            }
            true
        }
        _ => by == 0,
    }
}

fn map_le<K: Ord>(lhs: &BTreeMap<K, u32>, rhs: &BTreeMap<K, u32>) -> bool {
    lhs.iter().all(|(k, c)| rhs.get(k).is_some_and(|r| r >= c))
}

impl Multiindex {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn e(k: u32) -> Self {
        let mut m = Self::zero();
        m.a.insert(k, 1);
        m
    }

    pub fn f(l: u32) -> Self {
        let mut m = Self::zero();
        m.b.insert(l, 1);
        m
    }

    pub fn g(n: &[u32]) -> Self {
        assert!(n.iter().any(|&x| x > 0), "g_n needs n != 0");
        let mut m = Self::zero();
        m.p.insert(n.to_vec(), 1);
        m
    }

    pub fn a_part(&self) -> &BTreeMap<u32, u32> {
        &self.a
    }

    pub fn b_part(&self) -> &BTreeMap<u32, u32> {
        &self.b
    }

    pub fn p_part(&self) -> &BTreeMap<PolyIndex, u32> {
        &self.p
    }

    pub fn a(&self, k: u32) -> u32 {
        self.a.get(&k).copied().unwrap_or(0)
    }

    pub fn b(&self, l: u32) -> u32 {
        self.b.get(&l).copied().unwrap_or(0)
    }

    pub fn p(&self, n: &[u32]) -> u32 {
        self.p.get(n).copied().unwrap_or(0)
    }

    pub fn add_e(&mut self, k: u32, by: u32) {
        bump(&mut self.a, k, by);
    }

    pub fn add_f(&mut self, l: u32, by: u32) {
        bump(&mut self.b, l, by);
    }

    pub fn add_g(&mut self, n: PolyIndex, by: u32) {
        assert!(n.iter().any(|&x| x > 0), "g_n needs n != 0");
        bump(&mut self.p, n, by);
    }

    /// Removes one e_k; returns false (leaving self untouched) if absent.
    pub fn remove_e(&mut self, k: u32) -> bool {
        drop_from(&mut self.a, &k, 1)
    }

    pub fn remove_f(&mut self, l: u32) -> bool {
        drop_from(&mut self.b, &l, 1)
    }

    pub fn remove_g(&mut self, n: &[u32]) -> bool {
        drop_from(&mut self.p, &n.to_vec(), 1)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_empty() && self.b.is_empty() && self.p.is_empty()
    }

    pub fn plus(&self, other: &Multiindex) -> Multiindex {
        let mut out = self.clone();
        for (&k, &c) in &other.a {
            bump(&mut out.a, k, c);
        }
        for (&l, &c) in &other.b {
            bump(&mut out.b, l, c);
        }
        for (n, &c) in &other.p {
            bump(&mut out.p, n.clone(), c);
        }
        out
    }

    /// self - other, or None when some count would turn negative.
    pub fn minus(&self, other: &Multiindex) -> Option<Multiindex> {
        if !other.le(self) {
            return None;
        }
        let mut out = self.clone();
        for (k, &c) in &other.a {
            drop_from(&mut out.a, k, c);
        }
        for (l, &c) in &other.b {
            drop_from(&mut out.b, l, c);
        }
        for (n, &c) in &other.p {
            drop_from(&mut out.p, n, c);
        }
        Some(out)
    }

    /// Componentwise self <= other.
    pub fn le(&self, other: &Multiindex) -> bool {
        map_le(&self.a, &other.a) && map_le(&self.b, &other.b) && map_le(&self.p, &other.p)
    }

    pub fn a_count(&self) -> u32 {
        self.a.values().sum()
    }

    pub fn b_count(&self) -> u32 {
        self.b.values().sum()
    }

    pub fn p_count(&self) -> u32 {
        self.p.values().sum()
    }

    pub fn total_count(&self) -> u32 {
        self.a_count() + self.b_count() + self.p_count()
    }

    /// Σ k β(k) + Σ l β(l).
    pub fn weighted_ab(&self) -> u32 {
        self.a.iter().map(|(k, c)| k * c).sum::<u32>() + self.b.iter().map(|(l, c)| l * c).sum::<u32>()
    }

    /// |β|_p = Σ |n| β(n).
    pub fn poly_part_degree(&self) -> u32 {
        self.p.iter().map(|(n, c)| poly_degree(n) * c).sum()
    }

    pub fn bracket(&self) -> i64 {
        self.weighted_ab() as i64 - self.p_count() as i64
    }

    pub fn homogeneity(&self, params: &ModelParams) -> f64 {
        params.alpha * (1 + self.bracket()) as f64 + self.poly_part_degree() as f64
    }

    pub fn order_length(&self, params: &ModelParams) -> f64 {
        (self.a_count() + self.b_count()) as f64 + params.lambda * self.poly_part_degree() as f64
    }

    /// β = g_n for a single n.
    pub fn is_purely_polynomial(&self) -> bool {
        self.a.is_empty() && self.b.is_empty() && self.p.len() == 1 && self.p_count() == 1
    }

    pub fn is_populated(&self) -> bool {
        let lhs = 1 + self.weighted_ab();
        let rhs = self.b_count() + self.p_count();
        lhs == rhs && (self.is_purely_polynomial() || self.b_count() > 0)
    }

    /// The counterterm population conditions for c_β.
    pub fn is_c_populated(&self, params: &ModelParams) -> Result<bool> {
        if !self.p.is_empty() {
            return Err(Error::Contract(format!("c-index {self} carries a polynomial part")));
        }
        Ok(self.satisfies_pop2()
            && self.homogeneity(params) < 2.0 + params.alpha
            && self.bracket() % 2 == 0)
    }

    /// Σ k β(k) + Σ l β(l) = Σ β(l) with Σ β(l) > 0.
    pub fn satisfies_pop2(&self) -> bool {
        self.b_count() > 0 && self.weighted_ab() == self.b_count()
    }

    /// [β] odd and |β|_p odd; the only case where E Π⁻_β can be nonzero.
    pub fn expectation_parity_filter(&self) -> bool {
        self.bracket().rem_euclid(2) == 1 && self.poly_part_degree() % 2 == 1
    }

    pub fn precedes(&self, other: &Multiindex, params: &ModelParams) -> bool {
        self.order_length(params) < other.order_length(params)
    }

    /// Dimension 1 + d read off the polynomial indices, if any.
    pub fn poly_dim(&self) -> Option<usize> {
        self.p.keys().next().map(|n| n.len())
    }
}

impl fmt::Display for Multiindex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        let mult = |c: u32| if c == 1 { String::new() } else { c.to_string() };
        for (k, &c) in &self.a {
            parts.push(format!("{}e{}", mult(c), k));
        }
        for (l, &c) in &self.b {
            parts.push(format!("{}f{}", mult(c), l));
        }
        for (n, &c) in &self.p {
            let inner: Vec<String> = n.iter().map(|x| x.to_string()).collect();
            parts.push(format!("{}g({})", mult(c), inner.join(",")));
        }
        write!(f, "{}", parts.join("+"))
    }
}

fn parse_uint(s: &str, whole: &str) -> Result<u32> {
    s.parse::<u32>()
        .map_err(|_| Error::Parse(format!("bad integer `{s}` in `{whole}`")))
}

impl FromStr for Multiindex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut out = Multiindex::zero();
        if compact.is_empty() || compact == "0" {
            return Ok(out);
        }
        let mut dim: Option<usize> = None;
        for term in compact.split('+') {
            if term.is_empty() {
                return Err(Error::Parse(format!("empty term in `{s}`")));
            }
            let split = term.find(|c: char| !c.is_ascii_digit()).ok_or_else(|| {
                Error::Parse(format!("term `{term}` has no coordinate in `{s}`"))
            })?;
            let (prefix, body) = term.split_at(split);
            let count = if prefix.is_empty() { 1 } else { parse_uint(prefix, s)? };
            let (head, rest) = body.split_at(1);
            match head {
                "e" => out.add_e(parse_uint(rest, s)?, count),
                "f" => out.add_f(parse_uint(rest, s)?, count),
                "g" => {
                    let inner = rest
                        .strip_prefix('(')
                        .and_then(|r| r.strip_suffix(')'))
                        .ok_or_else(|| Error::Parse(format!("malformed `{term}` in `{s}`")))?;
                    let n = inner
                        .split(',')
                        .map(|x| parse_uint(x, s))
                        .collect::<Result<Vec<u32>>>()?;
                    if n.len() < 2 {
                        return Err(Error::Parse(format!("`{term}` needs at least two components")));
                    }
                    if n.iter().all(|&x| x == 0) {
                        return Err(Error::Parse(format!("`{term}` has n = 0")));
                    }
                    if *dim.get_or_insert(n.len()) != n.len() {
                        return Err(Error::Parse(format!("mixed dimensions in `{s}`")));
                    }
                    out.add_g(n, count);
                }
                _ => return Err(Error::Parse(format!("unknown coordinate `{head}` in `{s}`"))),
            }
        }
        Ok(out)
    }
}

impl serde::Serialize for Multiindex {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Multiindex {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Shorthand for tests and fixtures; panics on malformed input.
pub fn mi(s: &str) -> Multiindex {
    s.parse().unwrap_or_else(|e| panic!("{e}"))
}
