use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde_json::Value;
use tfe_core::enumerate::enumerate_populated;
use tfe_core::hierarchy::{
    build_dag, c_dependencies, dependencies, expand, factor_homogeneity, sort_terms, terms_to_json,
    ExpandMode, HierarchyTerm, TermKind,
};
use tfe_core::structure::d0_power_row;
use tfe_core::{mi, ModelParams, Multiindex};

fn p() -> ModelParams {
    ModelParams::new(0.55, 1).unwrap()
}

fn load(name: &str) -> Value {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn golden_hierarchy() {
    let fx = load("hierarchy.json");
    let start = Instant::now();
    let cases = fx["cases"].as_array().unwrap();
    assert_eq!(cases.len(), 10);
    for case in cases {
        let beta = mi(case["beta"].as_str().unwrap());
        let mut want: Vec<HierarchyTerm> = case["terms"]
            .as_array()
            .unwrap()
            .iter()
            .map(|t| HierarchyTerm::from_json(t, &beta).unwrap())
            .collect();
        sort_terms(&mut want);
        let got = expand(&beta, &p(), ExpandMode::Raw).unwrap();
        assert_eq!(got, want, "{beta}");
        assert_eq!(terms_to_json(&got), terms_to_json(&want));
    }
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn json_round_trip() {
    for case in load("hierarchy.json")["cases"].as_array().unwrap() {
        let beta = mi(case["beta"].as_str().unwrap());
        let got = expand(&beta, &p(), ExpandMode::Raw).unwrap();
        let back: Vec<HierarchyTerm> = terms_to_json(&got)
            .as_array()
            .unwrap()
            .iter()
            .map(|t| HierarchyTerm::from_json(t, &beta).unwrap())
            .collect();
        assert_eq!(back, got);
    }
}

#[test]
fn underbraced_rows() {
    let support = |g: &Multiindex| g.p_part().is_empty() && g.satisfies_pop2();
    for case in load("d0_rows.json")["cases"].as_array().unwrap() {
        let beta = mi(case["beta"].as_str().unwrap());
        let m = case["m"].as_u64().unwrap() as u32;
        let want: BTreeMap<Multiindex, i64> = case["row"]
            .as_array()
            .unwrap()
            .iter()
            .map(|e| (mi(e["gamma"].as_str().unwrap()), e["weight"].as_i64().unwrap()))
            .collect();
        assert_eq!(d0_power_row(&beta, m, support), want, "{beta}");
    }
}

#[test]
fn reconstruction_and_homogeneity() {
    let p = p();
    for beta in enumerate_populated(&p, 3.0).unwrap() {
        if beta.is_purely_polynomial() {
            continue;
        }
        for mode in [ExpandMode::Raw, ExpandMode::Reduced] {
            for t in expand(&beta, &p, mode).unwrap() {
                assert_eq!(t.reconstruct(), beta);
                if t.kind != TermKind::Counter {
                    let h = factor_homogeneity(&t, &p);
                    assert!((h - beta.homogeneity(&p)).abs() < 1e-12, "{beta}");
                }
                for g in t.c_weights.keys() {
                    assert!(g.satisfies_pop2());
                    if mode == ExpandMode::Reduced {
                        assert!(g.is_c_populated(&p).unwrap());
                    }
                }
            }
        }
    }
}

#[test]
fn reduced_drops_parity_zero_constants() {
    let p = p();
    let raw = expand(&mi("e1+f0+f1+g(0,1)"), &p, ExpandMode::Raw).unwrap();
    let red = expand(&mi("e1+f0+f1+g(0,1)"), &p, ExpandMode::Reduced).unwrap();
    assert!(red.len() < raw.len());
    let cs: BTreeSet<Multiindex> = red.iter().flat_map(|t| t.c_weights.keys().cloned()).collect();
    assert!(!cs.contains(&mi("f1")));
    assert!(!cs.contains(&mi("e1+f0")));
    assert!(cs.contains(&mi("e1+f0+f1")));
}

fn set(xs: &[&str]) -> BTreeSet<Multiindex> {
    xs.iter().map(|s| mi(s)).collect()
}

#[test]
fn dependency_examples() {
    let p = p();
    assert_eq!(dependencies(&mi("f0"), &p).unwrap(), BTreeSet::new());
    assert_eq!(dependencies(&mi("f0+f1"), &p).unwrap(), set(&["f0"]));
    assert_eq!(
        dependencies(&mi("e1+f0+f1+g(0,1)"), &p).unwrap(),
        set(&["f0", "g(0,1)", "f0+f1", "f1+g(0,1)", "e1+f0+g(0,1)"])
    );
    assert_eq!(c_dependencies(&mi("f0"), &p).unwrap(), BTreeSet::new());
    assert_eq!(
        c_dependencies(&mi("e1+f0+f1+g(0,1)"), &p).unwrap(),
        set(&["e1+f0+f1", "e1+f0", "f1", "e0+f1"])
    );
}

#[test]
fn dag() {
    let p = p();
    let small = build_dag(&p, 0.6).unwrap();
    assert_eq!(small.graph.node_count(), 1);
    assert_eq!(small.graph.edge_count(), 0);
    let dag = build_dag(&p, 3.0).unwrap();
    assert_eq!(dag.graph.node_count(), enumerate_populated(&p, 3.0).unwrap().len());
    for e in dag.graph.edge_indices() {
        let (s, t) = dag.graph.edge_endpoints(e).unwrap();
        assert!(dag.graph[s].order_length(&p) < dag.graph[t].order_length(&p));
    }
    let pos: BTreeMap<_, _> = dag.order.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    for e in dag.graph.edge_indices() {
        let (s, t) = dag.graph.edge_endpoints(e).unwrap();
        assert!(pos[&s] < pos[&t]);
    }
}
