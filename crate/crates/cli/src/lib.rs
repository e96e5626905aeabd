//! Command-line front end for the tfe-core engines.

pub mod config;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Arg, ArgAction, Command};
use clap::parser::ValueSource;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use tfe_core::counterterm::{
    eval_C_constants, counterterm_h, counterterm_h_tfe, tfe_leading_form, CountertermTable, CovarianceSpec,
    MollifierKind, MollifierSpec,
};
use tfe_core::fixtures::{verify, FixtureSet};
use tfe_core::hierarchy::{c_dependencies, dependencies, expand, terms_to_json, ExpandMode};
use tfe_core::noise::{
    bphz_triviality_check, covariance_mc, mean_mc, pi_f0_moment_mc, scaling_fit, symmetry_suite, Component, FitMode,
    McReport, NoiseSampler,
};
use tfe_core::spectral::{convolve, moment_ratios, psi_field, SpectralField, SpectralGrid};
use tfe_core::structure::{gamma_entry, StructureMap};
use tfe_core::{
    choose_kappa, enumerate_populated, homogeneity_set, renormalisation_candidates, Error, ModelParams, Multiindex,
    Result,
};

use config::{read_config, Settings};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_CONSISTENCY: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Param(_) | Error::Parse(_) | Error::Resource(_) => EXIT_CONFIG,
        Error::Numeric(_) => EXIT_NUMERIC,
        Error::Contract(_) | Error::Consistency(_) => EXIT_CONSISTENCY,
    }
}

/// (key, default, help)
type Key = (&'static str, Option<&'static str>, &'static str);

const MODEL: [Key; 2] = [
    ("alpha", Some("0.55"), "noise regularity alpha"),
    ("d", Some("1"), "spatial dimension"),
];

struct Sub {
    name: &'static str,
    about: &'static str,
    keys: Vec<Key>,
}

fn subcommands() -> Vec<Sub> {
    let with_model = |extra: &[Key]| MODEL.iter().chain(extra).copied().collect::<Vec<_>>();
    vec![
        Sub {
            name: "enumerate",
            about: "List populated multiindices below a homogeneity cutoff",
            keys: with_model(&[
                ("cutoff", Some("3"), "homogeneity cutoff"),
                ("candidates", Some("false"), "only the renormalisation candidates"),
            ]),
        },
        Sub {
            name: "homogeneity",
            about: "Bracket, homogeneity and population flags of one multiindex",
            keys: with_model(&[("beta", None, "multiindex, e.g. e1+f0+f1+g(0,1)")]),
        },
        Sub {
            name: "expand",
            about: "Right-hand side of the hierarchy equation for one multiindex",
            keys: with_model(&[
                ("beta", None, "multiindex"),
                ("mode", Some("raw"), "constant support: raw or reduced"),
            ]),
        },
        Sub {
            name: "deps",
            about: "Components and constants a multiindex depends on",
            keys: with_model(&[("beta", None, "multiindex")]),
        },
        Sub {
            name: "gamma-entry",
            about: "One entry of the structure-group matrix",
            keys: with_model(&[
                ("beta", None, "row multiindex"),
                ("gamma", None, "column multiindex"),
                ("map", None, "structure map JSON file (identity if absent)"),
            ]),
        },
        Sub {
            name: "kappa",
            about: "Admissible kappa for the given alpha",
            keys: with_model(&[("cutoff", Some("5"), "cutoff of the homogeneity set (> 3 + alpha)")]),
        },
        Sub {
            name: "kernel-check",
            about: "Semigroup, scaling and moment-bound checks of the kernel",
            keys: vec![
                ("sizes", Some("1024,1024"), "grid sizes, time first"),
                ("boxes", Some("2,32"), "periods, time first"),
                ("m0", Some("1"), "operator constant m0"),
                ("t-list", Some("1e-4,1e-3,1e-2"), "kernel times"),
                ("seed", Some("0"), "seed of the test field"),
            ],
        },
        Sub {
            name: "constants",
            about: "Universal constants (C1, C2, C3)",
            keys: vec![
                ("alpha", Some("0.5"), "noise regularity in [1/2, 1)"),
                ("mollifier", Some("semigroup"), "semigroup or anisotropic"),
            ],
        },
        Sub {
            name: "counterterm",
            about: "Constants c1, c2, c3 over a sweep of alpha, tau, m0",
            keys: vec![
                ("alpha", Some("0.75"), "comma-separated alphas in (1/2, 1)"),
                ("tau", Some("1"), "comma-separated tau values"),
                ("m0", Some("1"), "comma-separated m0 values"),
                ("mollifier", Some("semigroup"), "semigroup or anisotropic"),
                ("eta", Some("2"), "time exponent of the anisotropic mollifier"),
            ],
        },
        Sub {
            name: "h-eval",
            about: "Counterterm function h at a point",
            keys: vec![
                ("alpha", Some("0.5"), "noise regularity"),
                ("mollifier", Some("anisotropic"), "semigroup or anisotropic"),
                ("universal", Some("true"), "use the universal constants instead of a (tau, m0) table"),
                ("tau", Some("1"), "mollifier scale"),
                ("m0", Some("1"), "operator constant"),
                ("eta", Some("2"), "anisotropic time exponent"),
                ("a-prime", None, "a'(u)"),
                ("b", None, "b(u)"),
                ("b-prime", None, "b'(u)"),
                ("mobility", None, "M(u) for the thin-film substitution"),
                ("mobility-prime", None, "M'(u)"),
                ("m-power", None, "m in M(u) = u^m for the leading form"),
            ],
        },
        Sub {
            name: "simulate",
            about: "Monte Carlo estimators for the noise and the lowest components",
            keys: vec![
                ("alpha", Some("0.75"), "noise regularity"),
                ("m0", Some("1"), "operator constant"),
                ("mollifier", Some("semigroup"), "semigroup or anisotropic"),
                ("eta", Some("2"), "anisotropic time exponent"),
                ("tau", None, "mollifier scale (default: tau^(1/8) = two spatial cells)"),
                ("sizes", Some("64,256"), "grid sizes, time first"),
                ("boxes", Some("1,1"), "periods, time first"),
                ("seed", Some("0"), "base seed"),
                ("samples", Some("1024"), "number of samples"),
                ("estimator", Some("covariance"), "covariance, mean, pi-f0, bphz, scaling or symmetry"),
                ("lags", None, "grid offsets `i,j;i,j` (default: 20 offsets)"),
                ("component", Some("f0"), "f0 or f0f1"),
                ("t-list", Some("1e-6,1e-5,1e-4"), "smoothing times for bphz"),
                ("window", None, "fit window `lo,hi` (default: 20 and 200 tau^(1/8))"),
                ("fit-mode", Some("equal-time"), "equal-time or space-time"),
                ("base", Some("0"), "flat index of the base point for symmetry"),
                ("dump", None, "write the first noise sample to this .bin path"),
            ],
        },
        Sub {
            name: "fixtures-verify",
            about: "Replay the golden fixtures",
            keys: vec![("dir", None, "fixture directory (default: the shipped copies)")],
        },
    ]
}

fn all_keys() -> BTreeSet<&'static str> {
    let mut s: BTreeSet<&str> = subcommands().iter().flat_map(|c| c.keys.iter().map(|k| k.0)).collect();
    s.extend(["format", "output"]);
    s
}

fn command() -> Command {
    let mut cmd = Command::new("tfe-workbench")
        .about("Renormalisation workbench for the thin-film equation with noise")
        .subcommand_required(true)
        .arg(Arg::new("config").long("config").global(true).value_name("FILE").help("flat key = value file"))
        .arg(Arg::new("format").long("format").global(true).value_name("json|csv").help("output format [default: json]"))
        .arg(Arg::new("output").long("output").global(true).value_name("PATH").help("output file [default: stdout]"));
    for sub in subcommands() {
        let mut c = Command::new(sub.name).about(sub.about);
        for (key, default, help) in sub.keys {
            let help = match default {
                Some(d) => format!("{help} [default: {d}]"),
                None => help.to_string(),
            };
            c = c.arg(Arg::new(key).long(key).value_name("VALUE").action(ArgAction::Set).help(help));
        }
        cmd = cmd.subcommand(c);
    }
    cmd
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("WORKBENCH_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Param(format!("WORKBENCH_THREADS must be a positive integer, got {v:?}")))?;
        // a pool built earlier in the same process is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs one invocation and returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let matches = match command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&matches) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn run(matches: &clap::ArgMatches) -> Result<()> {
    configure_threads()?;
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let spec = subcommands().into_iter().find(|s| s.name == name).expect("registered subcommand");
    let mut values = BTreeMap::new();
    if let Some(path) = matches.get_one::<String>("config") {
        let known = all_keys();
        for (k, v) in read_config(path.as_ref())? {
            if !known.contains(k.as_str()) {
                return Err(Error::Param(format!("unknown config key `{k}`")));
            }
            values.insert(k, v);
        }
    }
    for (key, default, _) in &spec.keys {
        if let (false, Some(d)) = (values.contains_key(*key), default) {
            values.insert(key.to_string(), d.to_string());
        }
    }
    let mut s = Settings::new(values);
    for key in spec.keys.iter().map(|k| k.0).chain(["format", "output"]) {
        let m = if ["format", "output"].contains(&key) { matches } else { sub };
        let from_sub = sub.value_source(key) == Some(ValueSource::CommandLine);
        let src = if from_sub { sub } else { m };
        if src.value_source(key) == Some(ValueSource::CommandLine) {
            s.set(key, src.get_one::<String>(key).expect("value").clone());
        }
    }
    let format = s.opt_str("format").unwrap_or("json").to_string();
    if format != "json" && format != "csv" {
        return Err(Error::Param(format!("format must be json or csv, got {format:?}")));
    }
    let (out, verdict) = match name {
        "enumerate" => (cmd_enumerate(&s)?, Ok(())),
        "homogeneity" => (cmd_homogeneity(&s)?, Ok(())),
        "expand" => (cmd_expand(&s)?, Ok(())),
        "deps" => (cmd_deps(&s)?, Ok(())),
        "gamma-entry" => (cmd_gamma_entry(&s)?, Ok(())),
        "kappa" => (cmd_kappa(&s)?, Ok(())),
        "kernel-check" => cmd_kernel_check(&s)?,
        "constants" => (cmd_constants(&s)?, Ok(())),
        "counterterm" => (cmd_counterterm(&s)?, Ok(())),
        "h-eval" => (cmd_h_eval(&s)?, Ok(())),
        "simulate" => (cmd_simulate(&s)?, Ok(())),
        "fixtures-verify" => cmd_fixtures_verify(&s)?,
        _ => unreachable!("unknown subcommand {name}"),
    };
    let text = render(out, &format)?;
    match s.opt_str("output") {
        Some(path) => fs::write(path, text).map_err(|e| Error::Resource(format!("writing {path}: {e}")))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(text.as_bytes());
        }
    }
    verdict
}

fn render(out: (Value, Option<String>), format: &str) -> Result<String> {
    let (json, csv) = out;
    if format == "json" {
        return Ok(serde_json::to_string_pretty(&json).expect("json value") + "\n");
    }
    if let Some(csv) = csv {
        return Ok(csv);
    }
    // flat objects become key,value rows
    match json {
        Value::Object(m) if m.values().all(|v| !v.is_object() && !v.is_array()) => {
            let mut s = String::from("key,value\n");
            for (k, v) in m {
                s += &format!("{k},{}\n", v.as_str().map(String::from).unwrap_or_else(|| v.to_string()));
            }
            Ok(s)
        }
        _ => Err(Error::Param("csv output is not available for this command".into())),
    }
}

type Out = (Value, Option<String>);

fn params(s: &Settings) -> Result<ModelParams> {
    ModelParams::new(s.f64("alpha")?, s.usize("d")?)
}

fn beta(s: &Settings, key: &str) -> Result<Multiindex> {
    s.str(key)?.parse()
}

fn cmd_enumerate(s: &Settings) -> Result<Out> {
    let p = params(s)?;
    let list = if s.bool("candidates")? {
        renormalisation_candidates(&p)?
    } else {
        enumerate_populated(&p, s.f64("cutoff")?)?
    };
    let mut csv = String::from("beta,homogeneity,order_length,c_populated\n");
    let mut rows = Vec::new();
    for b in &list {
        let h = b.homogeneity(&p);
        // only polynomial-free indices can label a constant
        let c = b.p_part().is_empty().then(|| b.is_c_populated(&p)).transpose()?;
        let c_text = c.map(|c| c.to_string()).unwrap_or_default();
        csv += &format!("{b},{h},{},{c_text}\n", b.order_length(&p));
        rows.push(json!({ "beta": b, "homogeneity": h, "order_length": b.order_length(&p), "c_populated": c }));
    }
    Ok((json!({ "alpha": p.alpha, "d": p.d, "count": list.len(), "multiindices": rows }), Some(csv)))
}

fn cmd_homogeneity(s: &Settings) -> Result<Out> {
    let p = params(s)?;
    let b = beta(s, "beta")?;
    Ok((
        json!({
            "beta": b,
            "bracket": b.bracket(),
            "homogeneity": b.homogeneity(&p),
            "order_length": b.order_length(&p),
            "populated": b.is_populated(),
            "c_populated": b.p_part().is_empty().then(|| b.is_c_populated(&p)).transpose()?,
            "parity_filter": b.expectation_parity_filter(),
        }),
        None,
    ))
}

fn cmd_expand(s: &Settings) -> Result<Out> {
    let p = params(s)?;
    let b = beta(s, "beta")?;
    let mode: ExpandMode = serde_json::from_value(json!(s.str("mode")?))
        .map_err(|_| Error::Param(format!("mode must be raw or reduced, got {:?}", s.str("mode").unwrap_or(""))))?;
    let terms = expand(&b, &p, mode)?;
    Ok((json!({ "beta": b, "alpha": p.alpha, "d": p.d, "mode": mode, "terms": terms_to_json(&terms) }), None))
}

fn cmd_deps(s: &Settings) -> Result<Out> {
    let p = params(s)?;
    let b = beta(s, "beta")?;
    Ok((
        json!({
            "beta": b,
            "dependencies": dependencies(&b, &p)?,
            "c_dependencies": c_dependencies(&b, &p)?,
        }),
        None,
    ))
}

fn cmd_gamma_entry(s: &Settings) -> Result<Out> {
    let p = params(s)?;
    let (b, g) = (beta(s, "beta")?, beta(s, "gamma")?);
    let map = match s.opt_str("map") {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Resource(format!("reading {path}: {e}")))?;
            let v: Value = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{path}: {e}")))?;
            StructureMap::<f64>::from_json(&v)?
        }
        None => StructureMap::identity(),
    };
    let value = gamma_entry(&b, &g, &map, &p)?;
    Ok((json!({ "beta": b, "gamma": g, "value": value }), None))
}

fn cmd_kappa(s: &Settings) -> Result<Out> {
    let p = params(s)?;
    let homs = homogeneity_set(&p, s.f64("cutoff")?)?;
    let kappa = choose_kappa(&p, &homs)?;
    Ok((json!({ "alpha": p.alpha, "d": p.d, "kappa": kappa, "kappa_plus_alpha": kappa + p.alpha }), None))
}

fn grid(s: &Settings) -> Result<SpectralGrid> {
    SpectralGrid::new(s.list("sizes")?, s.list("boxes")?)
}

fn cmd_kernel_check(s: &Settings) -> Result<(Out, Result<()>)> {
    let g = grid(s)?;
    let m0 = s.f64("m0")?;
    let ts: Vec<f64> = s.list("t-list")?;
    if ts.len() < 2 || ts.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Param("t-list needs at least two positive times".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(s.u64("seed")?);
    let f = SpectralField::from_real(&g, &(0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>())?;
    let (t1, t2) = (ts[0], ts[1]);
    let once = convolve(&f, t1 + t2, m0);
    let twice = convolve(&convolve(&f, t1, m0), t2, m0);
    let semigroup = twice.sub(&once).max_abs() / once.max_abs();
    let dim = 4.0 + g.d as f64;
    let mut scaling = 0.0f64;
    for &t in &ts {
        let factors: Vec<f64> = (0..g.sizes.len()).map(|a| t.powf(if a == 0 { -0.5 } else { -0.125 })).collect();
        let unit = g.rescaled(&factors)?;
        let (pt, p1) = (psi_field(&g, t, m0), psi_field(&unit, 1.0, m0));
        let d = pt.values.iter().zip(&p1.values).map(|(a, b)| (a.re - t.powf(-dim / 8.0) * b.re).abs()).fold(0.0, f64::max);
        scaling = scaling.max(d / pt.max_abs());
    }
    let weights: Vec<(f64, f64)> = [-1.0, 0.0, 1.0].iter().flat_map(|&th| [(th, 0.0), (th, 2.0)]).collect();
    let mut moments = Vec::new();
    let mut variation = 0.0f64;
    for j in 0..=3u32 {
        let mut n = vec![0u32; g.sizes.len()];
        n[1] = j;
        let rows: Vec<Vec<f64>> = ts.iter().map(|&t| moment_ratios(&g, t, m0, &n, &weights)).collect();
        for (w, &(theta, rho)) in weights.iter().enumerate() {
            let col: Vec<f64> = rows.iter().map(|r| r[w]).collect();
            let (lo, hi) = col.iter().fold((f64::MAX, 0.0f64), |(a, b), &c| (a.min(c), b.max(c)));
            variation = variation.max(hi / lo - 1.0);
            moments.push(json!({ "n": n, "theta": theta, "rho": rho, "ratios": col, "variation": hi / lo - 1.0 }));
        }
    }
    let ok = semigroup <= 1e-10 && scaling <= 1e-10 && variation < 0.1;
    let csv = format!(
        "check,value,threshold\nsemigroup,{semigroup:e},1e-10\nscaling,{scaling:e},1e-10\nmoment_variation,{variation},0.1\n"
    );
    let out = json!({
        "semigroup_defect": semigroup,
        "scaling_defect": scaling,
        "max_moment_variation": variation,
        "moments": moments,
        "ok": ok,
    });
    let verdict = if ok { Ok(()) } else { Err(Error::Consistency("kernel checks outside thresholds".into())) };
    Ok(((out, Some(csv)), verdict))
}

fn kind(s: &Settings) -> Result<MollifierKind> {
    s.str("mollifier")?.parse()
}

fn cmd_constants(s: &Settings) -> Result<Out> {
    let alpha = s.f64("alpha")?;
    let k = kind(s)?;
    let table = CountertermTable::from_values(alpha, k, eval_C_constants(alpha, k)?);
    let csv = format!("{}\n{}\n", CountertermTable::CSV_HEADER, table.csv_row());
    Ok((table.to_json(), Some(csv)))
}

fn cmd_counterterm(s: &Settings) -> Result<Out> {
    let k = kind(s)?;
    let eta = s.f64("eta")?;
    let mut tables = Vec::new();
    for alpha in s.list::<f64>("alpha")? {
        for tau in s.list::<f64>("tau")? {
            for m0 in s.list::<f64>("m0")? {
                let cov = CovarianceSpec::tfe_default(alpha, m0)?;
                tables.push(CountertermTable::compute(&cov, &MollifierSpec::new(k, tau, eta)?)?);
            }
        }
    }
    let mut csv = format!("{}\n", CountertermTable::CSV_HEADER);
    for t in &tables {
        csv += &(t.csv_row() + "\n");
    }
    Ok((json!(tables.iter().map(CountertermTable::to_json).collect::<Vec<_>>()), Some(csv)))
}

fn cmd_h_eval(s: &Settings) -> Result<Out> {
    let alpha = s.f64("alpha")?;
    let k = kind(s)?;
    let table = if s.bool("universal")? {
        CountertermTable::from_values(alpha, k, eval_C_constants(alpha, k)?)
    } else {
        let cov = CovarianceSpec::tfe_default(alpha, s.f64("m0")?)?;
        CountertermTable::compute(&cov, &MollifierSpec::new(k, s.f64("tau")?, s.f64("eta")?)?)?
    };
    let mut out = json!({ "table": table.to_json() });
    let point = [s.opt_f64("a-prime")?, s.opt_f64("b")?, s.opt_f64("b-prime")?];
    match point {
        [Some(a), Some(b), Some(bp)] => out["h"] = json!(counterterm_h(a, b, bp, &table)),
        [None, None, None] => {}
        _ => return Err(Error::Param("a-prime, b and b-prime must be given together".into())),
    }
    match (s.opt_f64("mobility")?, s.opt_f64("mobility-prime")?) {
        (Some(m), Some(mp)) => {
            if !(m > 0.0) {
                return Err(Error::Param(format!("mobility must be positive, got {m}")));
            }
            out["h_tfe"] = json!(counterterm_h_tfe(m, mp, &table));
        }
        (None, None) => {}
        _ => return Err(Error::Param("mobility and mobility-prime must be given together".into())),
    }
    if let Some(m) = s.opt_f64("m-power")? {
        out["leading_form"] = serde_json::to_value(tfe_leading_form(m, alpha, &table)?).expect("plain struct");
    }
    if out.as_object().map(|o| o.len()) == Some(1) {
        return Err(Error::Param("give a point (a-prime, b, b-prime), a mobility, or m-power".into()));
    }
    Ok((out, None))
}

fn default_lags(d: usize) -> Vec<Vec<i64>> {
    (1..=20i64)
        .map(|j| {
            let mut h = vec![0i64; d + 1];
            if j <= 12 {
                h[1] = j;
            } else {
                h[0] = j - 12;
                h[1] = j % 3;
            }
            h
        })
        .collect()
}

fn report_out(r: &McReport) -> Out {
    (r.to_json(), Some(r.to_csv()))
}

fn cmd_simulate(s: &Settings) -> Result<Out> {
    let g = grid(s)?;
    let tau = match s.opt_f64("tau")? {
        Some(t) => t,
        None => (2.0 * g.spacing(1)).powi(8),
    };
    let cov = CovarianceSpec::tfe_default(s.f64("alpha")?, s.f64("m0")?)?;
    let moll = MollifierSpec::new(kind(s)?, tau, s.f64("eta")?)?;
    let sampler = NoiseSampler::new(g.clone(), cov, moll, s.u64("seed")?)?;
    let samples = s.usize("samples")?;
    if let Some(path) = s.opt_str("dump") {
        sampler.sample_noise(0)[0].write_dump(&PathBuf::from(path))?;
    }
    let lags = if s.has("lags") { s.offsets("lags")? } else { default_lags(g.d) };
    let component: Component = s.str("component")?.parse()?;
    match s.str("estimator")? {
        "covariance" => Ok(report_out(&covariance_mc(&sampler, &lags, samples)?)),
        "mean" => Ok(report_out(&mean_mc(&sampler, samples)?)),
        "pi-f0" => Ok(report_out(&pi_f0_moment_mc(&sampler, &lags, samples)?)),
        "bphz" => Ok(report_out(&bphz_triviality_check(&sampler, component, &s.list("t-list")?, samples)?)),
        "scaling" => {
            let window = if s.has("window") {
                let w: Vec<f64> = s.list("window")?;
                if w.len() != 2 {
                    return Err(Error::Param("window needs two values lo,hi".into()));
                }
                (w[0], w[1])
            } else {
                let r = tau.powf(0.125);
                (20.0 * r, (200.0 * r).min(g.boxes[1] / 8.0))
            };
            let mode: FitMode = s.str("fit-mode")?.parse()?;
            let fit = scaling_fit(component, &sampler, window, samples, mode)?;
            let mut csv = String::from("separation,moment,std_error\n");
            for i in 0..fit.separations.len() {
                csv += &format!("{},{},{}\n", fit.separations[i], fit.moments[i], fit.std_errors[i]);
            }
            Ok((fit.to_json(), Some(csv)))
        }
        "symmetry" => {
            let base = s.usize("base")?;
            if base >= g.len() {
                return Err(Error::Param(format!("base index {base} outside the grid")));
            }
            let shift: Vec<usize> = g.sizes.iter().map(|n| n / 3).collect();
            let defects = symmetry_suite(&sampler, 0, base, &shift)?;
            let mut csv = String::from("check,defect\n");
            let mut m = serde_json::Map::new();
            for (k, v) in &defects {
                csv += &format!("{k},{v:e}\n");
                m.insert(k.clone(), json!(v));
            }
            Ok((Value::Object(m), Some(csv)))
        }
        other => Err(Error::Param(format!("unknown estimator {other:?}"))),
    }
}

fn cmd_fixtures_verify(s: &Settings) -> Result<(Out, Result<()>)> {
    let set = match s.opt_str("dir") {
        Some(d) => FixtureSet::load_dir(d.as_ref())?,
        None => FixtureSet::builtin(),
    };
    let report = verify(&set);
    let mut csv = String::from("fixture,item,ok,detail\n");
    for c in &report.checks {
        csv += &format!("{},{},{},\"{}\"\n", c.fixture, c.item, c.ok, c.detail.replace('"', "'"));
    }
    let out = json!({ "passed": report.passed(), "checks": report.checks.len(), "failures": report.failures() });
    let verdict = report.into_result().map(|_| ());
    Ok(((out, Some(csv)), verdict))
}
