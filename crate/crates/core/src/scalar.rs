//! Coefficient rings used by the structure group.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::Ratio;
use num_traits::{One, Zero};

pub type Rational = Ratio<i64>;

pub trait Scalar:
    Clone
    + PartialEq
    + Debug
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn from_ratio(num: i64, den: i64) -> Self;
}

impl Scalar for f64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
}

impl Scalar for Rational {
    fn from_ratio(num: i64, den: i64) -> Self {
        Ratio::new(num, den)
    }
}

/// Polynomial with rational coefficients in a formal displacement h = (y - x).
/// Keys are exponent vectors with trailing zeros trimmed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DisplacementPoly {
    terms: BTreeMap<Vec<u32>, Rational>,
}

fn trim(mut e: Vec<u32>) -> Vec<u32> {
    while e.last() == Some(&0) {
        e.pop();
    }
    e
}

impl DisplacementPoly {
    pub fn constant(c: Rational) -> Self {
        Self::monomial(c, &[])
    }

    /// c · h^e
    pub fn monomial(c: Rational, e: &[u32]) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(trim(e.to_vec()), c);
        }
        Self { terms }
    }

    pub fn coeff(&self, e: &[u32]) -> Rational {
        self.terms.get(&trim(e.to_vec())).copied().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, Rational> {
        &self.terms
    }

    fn accumulate(&mut self, e: Vec<u32>, c: Rational) {
        let slot = self.terms.entry(e).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }
}

impl Add for DisplacementPoly {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (e, c) in rhs.terms {
            self.accumulate(e, c);
        }
        self
    }
}

impl Neg for DisplacementPoly {
    type Output = Self;
    fn neg(mut self) -> Self {
        for c in self.terms.values_mut() {
            *c = -*c;
        }
        self
    }
}

impl Sub for DisplacementPoly {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for DisplacementPoly {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::default();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let len = e1.len().max(e2.len());
                let e: Vec<u32> = (0..len)
                    .map(|i| e1.get(i).copied().unwrap_or(0) + e2.get(i).copied().unwrap_or(0))
                    .collect();
                out.accumulate(e, c1 * c2);
            }
        }
        out
    }
}

impl Zero for DisplacementPoly {
    fn zero() -> Self {
        Self::default()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for DisplacementPoly {
    fn one() -> Self {
        Self::constant(Rational::one())
    }
}

impl Scalar for DisplacementPoly {
    fn from_ratio(num: i64, den: i64) -> Self {
        Self::constant(Ratio::new(num, den))
    }
}
