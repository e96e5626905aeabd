use tfe_core::enumerate::enumerate_populated;
use tfe_core::multiindex::poly_degree;
use tfe_core::scalar::Rational;
use tfe_core::structure::{SeriesVector, StructureMap};
use tfe_core::{mi, ModelParams, Multiindex};

pub const CUTOFF: f64 = 2.9;

pub fn params() -> ModelParams {
    ModelParams::new(0.55, 1).unwrap()
}

pub fn admissible_pairs(p: &ModelParams) -> Vec<(Vec<u32>, Multiindex)> {
    let mut out = Vec::new();
    for b in enumerate_populated(p, 2.6).unwrap() {
        for n in [vec![0, 0], vec![0, 1], vec![0, 2]] {
            if b.homogeneity(p) > poly_degree(&n) as f64 {
                out.push((n, b.clone()));
            }
        }
    }
    out
}

pub fn series_pool(p: &ModelParams) -> Vec<Multiindex> {
    let mut v: Vec<Multiindex> = enumerate_populated(p, 1.7).unwrap();
    for s in ["e0", "e1", "e0+f1", "2g(0,1)", "f1+g(0,2)", "e0+f0"] {
        v.push(mi(s));
    }
    v
}

pub fn ratio((n, d): (i64, i64)) -> Rational {
    Rational::new(n, d)
}

pub fn build_map(p: &ModelParams, picks: &[(usize, (i64, i64))]) -> StructureMap<Rational> {
    let pairs = admissible_pairs(p);
    let mut map = StructureMap::identity();
    for &(i, v) in picks {
        let (n, b) = &pairs[i % pairs.len()];
        map.set(n.clone(), b.clone(), ratio(v));
    }
    map
}

pub fn build_series(p: &ModelParams, terms: &[(usize, (i64, i64))]) -> SeriesVector<Rational> {
    let pool = series_pool(p);
    let mut s = SeriesVector::default();
    for &(i, v) in terms {
        s.add_term(pool[i % pool.len()].clone(), ratio(v));
    }
    s.truncate(p, CUTOFF)
}

pub fn to_float(map: &StructureMap<Rational>) -> StructureMap<f64> {
    let mut out = StructureMap::identity();
    for (n, m) in &map.pi {
        for (b, v) in m {
            out.set(n.clone(), b.clone(), *v.numer() as f64 / *v.denom() as f64);
        }
    }
    out
}

pub fn to_float_series(s: &SeriesVector<Rational>) -> SeriesVector<f64> {
    let mut out = SeriesVector::default();
    for (b, v) in &s.coeffs {
        out.add_term(b.clone(), *v.numer() as f64 / *v.denom() as f64);
    }
    out
}
