//! Golden fixtures shipped with the crate and their replay.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::counterterm::{eval_C_constants, MollifierKind};
use crate::enumerate::renormalisation_candidates;
use crate::error::{Error, Result};
use crate::hierarchy::{expand, sort_terms, terms_to_json, ExpandMode, HierarchyTerm};
use crate::multiindex::Multiindex;
use crate::params::ModelParams;
use crate::structure::d0_power_row;

pub const FILES: [&str; 4] = ["hierarchy.json", "d0_rows.json", "candidates.json", "constants.json"];

const BUILTIN: [&str; 4] = [
    include_str!("../fixtures/hierarchy.json"),
    include_str!("../fixtures/d0_rows.json"),
    include_str!("../fixtures/candidates.json"),
    include_str!("../fixtures/constants.json"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct FixtureSet {
    pub hierarchy: Value,
    pub d0_rows: Value,
    pub candidates: Value,
    pub constants: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub fixture: String,
    pub item: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.ok).collect()
    }

    /// Consistency error listing every failed check.
    pub fn into_result(self) -> Result<Self> {
        if self.passed() {
            return Ok(self);
        }
        let lines: Vec<String> =
            self.failures().iter().map(|c| format!("{} / {}: {}", c.fixture, c.item, c.detail)).collect();
        Err(Error::Consistency(lines.join("\n")))
    }

    fn push(&mut self, fixture: &str, item: impl Into<String>, outcome: std::result::Result<(), String>) {
        let (ok, detail) = match outcome {
            Ok(()) => (true, String::new()),
            Err(e) => (false, e),
        };
        self.checks.push(Check { fixture: fixture.into(), item: item.into(), ok, detail });
    }
}

fn parse(name: &str, text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Consistency(format!("fixture {name} is not valid JSON: {e}")))
}

impl FixtureSet {
    pub fn builtin() -> Self {
        Self::from_texts(BUILTIN).expect("shipped fixtures parse")
    }

    fn from_texts(texts: [&str; 4]) -> Result<Self> {
        Ok(Self {
            hierarchy: parse(FILES[0], texts[0])?,
            d0_rows: parse(FILES[1], texts[1])?,
            candidates: parse(FILES[2], texts[2])?,
            constants: parse(FILES[3], texts[3])?,
        })
    }

    /// Reads the four fixture files from a directory.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let read = |f: &str| {
            fs::read_to_string(dir.join(f)).map_err(|e| Error::Resource(format!("reading {}: {e}", dir.join(f).display())))
        };
        let t = [read(FILES[0])?, read(FILES[1])?, read(FILES[2])?, read(FILES[3])?];
        Self::from_texts([&t[0], &t[1], &t[2], &t[3]])
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::Resource(format!("creating {}: {e}", dir.display())))?;
        for (f, v) in FILES.iter().zip([&self.hierarchy, &self.d0_rows, &self.candidates, &self.constants]) {
            let text = serde_json::to_string_pretty(v).expect("json value serialises");
            fs::write(dir.join(f), text).map_err(|e| Error::Resource(format!("writing {f}: {e}")))?;
        }
        Ok(())
    }
}

fn mi_of(v: &Value) -> std::result::Result<Multiindex, String> {
    serde_json::from_value(v.clone()).map_err(|e| format!("bad multiindex {v}: {e}"))
}

fn f64_of(v: &Value, what: &str) -> std::result::Result<f64, String> {
    v.as_f64().ok_or_else(|| format!("missing number `{what}`"))
}

fn check_hierarchy(fx: &Value, report: &mut VerifyReport) {
    let name = FILES[0];
    let setup = || -> std::result::Result<(ModelParams, ExpandMode, Vec<Value>), String> {
        let alpha = f64_of(&fx["alpha"], "alpha")?;
        let d = fx["d"].as_u64().ok_or("missing `d`")? as usize;
        let mode: ExpandMode = serde_json::from_value(fx["mode"].clone()).map_err(|e| format!("bad mode: {e}"))?;
        let cases = fx["cases"].as_array().ok_or("missing `cases`")?.clone();
        Ok((ModelParams::new(alpha, d).map_err(|e| e.to_string())?, mode, cases))
    };
    let (params, mode, cases) = match setup() {
        Ok(s) => s,
        Err(e) => return report.push(name, "header", Err(e)),
    };
    for case in cases {
        let item = case["beta"].as_str().unwrap_or("?").to_string();
        let outcome = (|| {
            let beta = mi_of(&case["beta"])?;
            let mut want = case["terms"]
                .as_array()
                .ok_or("missing `terms`")?
                .iter()
                .map(|t| HierarchyTerm::from_json(t, &beta).map_err(|e| e.to_string()))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            sort_terms(&mut want);
            let got = expand(&beta, &params, mode).map_err(|e| e.to_string())?;
            if got == want {
                Ok(())
            } else {
                Err(format!("expected {}\n  got {}", terms_to_json(&want), terms_to_json(&got)))
            }
        })();
        report.push(name, item, outcome);
    }
}

fn check_d0_rows(fx: &Value, report: &mut VerifyReport) {
    let name = FILES[1];
    let Some(cases) = fx["cases"].as_array() else {
        return report.push(name, "header", Err("missing `cases`".into()));
    };
    let support = |g: &Multiindex| g.p_part().is_empty() && g.satisfies_pop2();
    for case in cases {
        let item = format!("{} m={}", case["beta"].as_str().unwrap_or("?"), case["m"]);
        let outcome = (|| {
            let beta = mi_of(&case["beta"])?;
            let m = case["m"].as_u64().ok_or("missing `m`")? as u32;
            let mut want = BTreeMap::new();
            for e in case["row"].as_array().ok_or("missing `row`")? {
                want.insert(mi_of(&e["gamma"])?, e["weight"].as_i64().ok_or("non-integer weight")?);
            }
            let got = d0_power_row(&beta, m, support);
            if got == want {
                Ok(())
            } else {
                Err(format!("expected {want:?}, got {got:?}"))
            }
        })();
        report.push(name, item, outcome);
    }
}

fn check_candidates(fx: &Value, report: &mut VerifyReport) {
    let name = FILES[2];
    let setup = || -> std::result::Result<(usize, Vec<f64>, BTreeSet<Multiindex>), String> {
        let d = fx["d"].as_u64().ok_or("missing `d`")? as usize;
        let alphas = fx["alphas"].as_array().ok_or("missing `alphas`")?;
        let alphas = alphas.iter().map(|a| f64_of(a, "alphas")).collect::<std::result::Result<_, _>>()?;
        let set = fx["set"].as_array().ok_or("missing `set`")?.iter().map(mi_of).collect::<std::result::Result<_, _>>()?;
        Ok((d, alphas, set))
    };
    let (d, alphas, want) = match setup() {
        Ok(s) => s,
        Err(e) => return report.push(name, "header", Err(e)),
    };
    for alpha in alphas {
        let outcome = (|| {
            let p = ModelParams::new(alpha, d).map_err(|e| e.to_string())?;
            let got: BTreeSet<Multiindex> =
                renormalisation_candidates(&p).map_err(|e| e.to_string())?.into_iter().collect();
            if got == want {
                Ok(())
            } else {
                Err(format!("expected {want:?}, got {got:?}"))
            }
        })();
        report.push(name, format!("alpha={alpha}"), outcome);
    }
}

fn check_constants(fx: &Value, report: &mut VerifyReport) {
    let name = FILES[3];
    let setup = || -> std::result::Result<(f64, f64, Vec<Value>), String> {
        let alpha = f64_of(&fx["alpha"], "alpha")?;
        let tol = f64_of(&fx["tolerance"], "tolerance")?;
        Ok((alpha, tol, fx["targets"].as_array().ok_or("missing `targets`")?.clone()))
    };
    let (alpha, tol, targets) = match setup() {
        Ok(s) => s,
        Err(e) => return report.push(name, "header", Err(e)),
    };
    let mut cache: BTreeMap<String, std::result::Result<[f64; 3], String>> = BTreeMap::new();
    for t in targets {
        let item = format!("{} {}", t["mollifier"].as_str().unwrap_or("?"), t["name"].as_str().unwrap_or("?"));
        let outcome = (|| {
            let kind: MollifierKind =
                t["mollifier"].as_str().ok_or("missing `mollifier`")?.parse().map_err(|e: Error| e.to_string())?;
            let want = f64_of(&t["value"], "value")?;
            let c = cache
                .entry(kind.to_string())
                .or_insert_with(|| {
                    eval_C_constants(alpha, kind).map(|c| c.map(|e| e.value)).map_err(|e| e.to_string())
                })
                .clone()?;
            let got = match t["name"].as_str() {
                Some("c1") => c[0],
                Some("c2") => c[1],
                Some("c3") => c[2],
                Some("leading") => c[1] / 4.0 + c[2] - c[0] / 2.0,
                other => return Err(format!("unknown target {other:?}")),
            };
            if (got - want).abs() <= tol {
                Ok(())
            } else {
                Err(format!("expected {want} ± {tol}, got {got}"))
            }
        })();
        report.push(name, item, outcome);
    }
}

/// Replays every fixture; the report lists one check per case.
pub fn verify(set: &FixtureSet) -> VerifyReport {
    let mut report = VerifyReport::default();
    check_hierarchy(&set.hierarchy, &mut report);
    check_d0_rows(&set.d0_rows, &mut report);
    check_candidates(&set.candidates, &mut report);
    check_constants(&set.constants, &mut report);
    report
}
