//! The three nonvanishing renormalisation constants in d = 1 and the
//! counterterm functional h(u).

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::multiindex::{mi, Multiindex};
use crate::params::ModelParams;
use crate::quadrature::{tanh_sinh, QuadOptions};
use crate::special::gamma;

const TWO_PI: f64 = 2.0 * PI;
/// Mollifier factors below exp(-TAIL_LOG) are dropped.
const TAIL_LOG: f64 = 41.446_531_673_892_82; // ln 1e18
pub const DEFAULT_ETA: f64 = 2.0;
const R_MIN: f64 = 1e-30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MollifierKind {
    Semigroup,
    Anisotropic,
}

impl fmt::Display for MollifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MollifierKind::Semigroup => "semigroup",
            MollifierKind::Anisotropic => "anisotropic",
        })
    }
}

impl FromStr for MollifierKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semigroup" => Ok(Self::Semigroup),
            "anisotropic" => Ok(Self::Anisotropic),
            _ => Err(Error::Param(format!("unknown mollifier `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MollifierSpec {
    pub kind: MollifierKind,
    pub tau: f64,
    pub eta: f64,
}

impl MollifierSpec {
    pub fn semigroup(tau: f64) -> Result<Self> {
        Self::new(MollifierKind::Semigroup, tau, DEFAULT_ETA)
    }

    pub fn anisotropic(tau: f64, eta: f64) -> Result<Self> {
        Self::new(MollifierKind::Anisotropic, tau, eta)
    }

    pub fn new(kind: MollifierKind, tau: f64, eta: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Param(format!("tau must be positive, got {tau}")));
        }
        if kind == MollifierKind::Anisotropic && !(eta > 1.0 && eta.is_finite()) {
            return Err(Error::Param(format!("eta must exceed 1, got {eta}")));
        }
        Ok(Self { kind, tau, eta })
    }

    fn damping(&self, m0: f64) -> Damping {
        match self.kind {
            MollifierKind::Semigroup => Damping { space: self.tau * m0 * m0, time: self.tau },
            MollifierKind::Anisotropic => Damping { space: self.tau, time: self.tau.powf(self.eta) },
        }
    }

    /// |ℱφ_τ(k)|²
    pub fn squared_symbol(&self, k0: f64, k1: f64, m0: f64) -> f64 {
        self.damping(m0).eval(k0, k1)
    }
}

/// exp(-space·(2πk₁)⁸ - time·(2πk₀)²); covers both families and the
/// time-undamped limit used for the universal anisotropic constants.
#[derive(Clone, Copy, Debug)]
struct Damping {
    space: f64,
    time: f64,
}

impl Damping {
    fn eval(&self, k0: f64, k1: f64) -> f64 {
        (-self.space * (TWO_PI * k1).powi(8) - self.time * (TWO_PI * k0).powi(2)).exp()
    }

    /// ∂_{k₁} log of the damping factor.
    fn dlog_k1(&self, k1: f64) -> f64 {
        -8.0 * self.space * TWO_PI.powi(8) * k1.powi(7)
    }
}

pub type SpectralFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceKind {
    ThinFilm,
    Custom,
}

/// Noise covariance ℱC. Custom evaluators take (k₀, k₁) and must be even
/// in both; `d_k1` is ∂_{k₁}ℱC, needed only by `eval_c2`.
#[derive(Clone)]
pub struct CovarianceSpec {
    pub kind: CovarianceKind,
    pub alpha: f64,
    pub m0: f64,
    custom: Option<(SpectralFn, Option<SpectralFn>)>,
}

impl fmt::Debug for CovarianceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CovarianceSpec")
            .field("kind", &self.kind)
            .field("alpha", &self.alpha)
            .field("m0", &self.m0)
            .finish()
    }
}

pub fn symbol_s(k0: f64, k1: f64, m0: f64) -> f64 {
    (TWO_PI * k0).powi(2) + m0 * m0 * (TWO_PI * k1).powi(8)
}

impl CovarianceSpec {
    /// ℱC = S^{-(α-½)/4} with S = (2πk₀)² + m0²(2πk₁)⁸.
    pub fn tfe_default(alpha: f64, m0: f64) -> Result<Self> {
        check_alpha_m0(alpha, m0, true)?;
        Ok(Self { kind: CovarianceKind::ThinFilm, alpha, m0, custom: None })
    }

    pub fn custom(alpha: f64, m0: f64, value: SpectralFn, d_k1: Option<SpectralFn>) -> Result<Self> {
        check_alpha_m0(alpha, m0, true)?;
        Ok(Self { kind: CovarianceKind::Custom, alpha, m0, custom: Some((value, d_k1)) })
    }

    fn exponent(&self) -> f64 {
        (self.alpha - 0.5) / 4.0
    }

    pub fn eval(&self, k0: f64, k1: f64) -> f64 {
        match &self.custom {
            Some((f, _)) => f(k0, k1),
            None => symbol_s(k0, k1, self.m0).powf(-self.exponent()),
        }
    }

    pub fn d_k1(&self, k0: f64, k1: f64) -> Result<f64> {
        match &self.custom {
            Some((_, Some(df))) => Ok(df(k0, k1)),
            Some((_, None)) => {
                Err(Error::Param("custom covariance has no k1-derivative; eval_c2 needs one".into()))
            }
            None => {
                let s = symbol_s(k0, k1, self.m0);
                let ds = 8.0 * self.m0 * self.m0 * TWO_PI.powi(8) * k1.powi(7);
                Ok(-self.exponent() * ds / s * s.powf(-self.exponent()))
            }
        }
    }
}

fn check_alpha_m0(alpha: f64, m0: f64, allow_half: bool) -> Result<()> {
    let ok = if allow_half { (0.5..1.0).contains(&alpha) } else { alpha > 0.5 && alpha < 1.0 };
    if !ok {
        return Err(Error::Param(format!("alpha must lie in [1/2, 1), got {alpha}")));
    }
    if !(m0 > 0.0 && m0.is_finite()) {
        return Err(Error::Param(format!("m0 must be positive, got {m0}")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Which {
    C1,
    C2,
    C3,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Accuracy knobs for the nested quadrature.
#[derive(Clone, Copy, Debug)]
pub struct Accuracy {
    pub outer_rel: f64,
    pub inner_rel: f64,
}

impl Default for Accuracy {
    fn default() -> Self {
        Self { outer_rel: 1e-10, inner_rel: 1e-12 }
    }
}

fn fetch_max(cell: &AtomicU64, v: f64) {
    cell.fetch_max(v.to_bits(), Ordering::Relaxed);
}

/// ∫_{ℝ²} dk of the requested integrand with ℱF = ℱC·damping.
///
/// Quadrant symmetry, then k₁ = a₁r, k₀ = a₀r⁴tanθ with 2πa₀ = m0(2πa₁)⁴ and
/// a₁ fixed by the spatial damping; this makes S = m0²(2πa₁r)⁸sec²θ and
/// turns the parabolic annuli into lines r = const.
fn integrate(which: Which, cov: &CovarianceSpec, damp: Damping, acc: Accuracy) -> Result<Estimate> {
    let m0 = cov.m0;
    let a1 = damp.space.powf(-0.125) / TWO_PI;
    let a0 = m0 * TWO_PI.powi(3) * a1.powi(4);
    let ratio = damp.time * m0 * m0 / damp.space;
    let nu = 2.0 - 2.0 * cov.alpha;
    let inner_err = AtomicU64::new(0);
    let failure: std::sync::Mutex<Option<Error>> = std::sync::Mutex::new(None);

    // C1 is split into its two sign-definite pieces so that each radial
    // integral is well conditioned; they cancel exactly at θ = π/4.
    let parts = if which == Which::C1 { 2 } else { 1 };
    let point = |part: usize, k0: f64, k1: f64| -> Result<f64> {
        let s = symbol_s(k0, k1, m0);
        let q = (TWO_PI * k1).powi(4);
        let fc = cov.eval(k0, k1);
        let md = damp.eval(k0, k1);
        Ok(match which {
            Which::C1 if part == 0 => 4.0 * m0 * m0 * (q * q / s) * (q / s) * fc * md,
            Which::C1 => -2.0 * q / s * fc * md,
            Which::C3 => -3.0 * m0 * (q * q / s) * (q / s) * fc * md,
            Which::C2 => {
                let dff = cov.d_k1(k0, k1)? * md + fc * md * damp.dlog_k1(k1);
                k1 * m0 * q / s * dff
            }
        })
    };
    let imag = |k0: f64, k1: f64| -> Result<f64> {
        let s = symbol_s(k0, k1, m0);
        let fc = cov.eval(k0, k1);
        let md = damp.eval(k0, k1);
        let dff = cov.d_k1(k0, k1)? * md + fc * md * damp.dlog_k1(k1);
        Ok(k1 * (-TWO_PI * k0) / s * dff)
    };

    let inner_opts = QuadOptions { rel_tol: acc.inner_rel, ..QuadOptions::default() };
    let outer_opts = QuadOptions { rel_tol: acc.outer_rel, ..QuadOptions::default() };
    let imag_sum = AtomicU64::new(0);

    let theta_fn = |theta: f64, _: f64, to_end: f64| -> f64 {
        let (sin, cos) = (theta.sin(), to_end.sin());
        let tan = sin / cos;
        let sec2 = 1.0 / (cos * cos);
        let g = 1.0 + ratio * tan * tan;
        let r_max = (TAIL_LOG / g).powf(0.125);
        // near r = 0 the integrands behave like r^{nu-1}; r = r_max·ρ^{1/nu}
        // makes the ρ-integrand tend to a constant, which is used below
        // R_MIN where the symbols would underflow
        let rho_min = (R_MIN / r_max).powf(nu);
        let radial = |part: usize, rho: f64| -> Result<f64> {
            let rho = rho.max(rho_min);
            let r = r_max * rho.powf(1.0 / nu);
            let dr = r_max / nu * rho.powf(1.0 / nu - 1.0);
            let k1 = a1 * r;
            let k0 = a0 * r.powi(4) * tan;
            let jac = a1 * a0 * r.powi(4) * sec2 * dr;
            if which == Which::C2 {
                fetch_max(&imag_sum, ((imag(k0, k1)? + imag(-k0, k1)?) * jac).abs());
            }
            Ok(point(part, k0, k1)? * jac)
        };
        let mut total = 0.0;
        for part in 0..parts {
            let res = tanh_sinh(
                |rho, _, _| match radial(part, rho) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.lock().unwrap().get_or_insert(e);
                        0.0
                    }
                },
                0.0,
                1.0,
                &inner_opts,
            );
            match res {
                Ok(q) => {
                    // the damping beyond r_max is at most e^{-TAIL_LOG}; bound the
                    // dropped tail by the last value times its decay length
                    let edge = radial(part, 1.0).unwrap_or(0.0).abs() * nu / r_max;
                    let tail = edge * r_max / (8.0 * TAIL_LOG);
                    fetch_max(&inner_err, (q.error + tail) * 4.0);
                    total += q.value;
                }
                Err(e) => {
                    let e = Error::Numeric(format!("{e} (theta = {theta}, part {part})"));
                    failure.lock().unwrap().get_or_insert(e);
                }
            }
        }
        total
    };
    let outer = tanh_sinh(theta_fn, 0.0, FRAC_PI_2, &outer_opts);
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let outer = outer?;
    let value = 4.0 * outer.value;
    let inner = f64::from_bits(inner_err.load(Ordering::Relaxed)) * FRAC_PI_2;
    let error = 4.0 * outer.error + inner;
    if which == Which::C2 {
        let im = f64::from_bits(imag_sum.load(Ordering::Relaxed));
        if im > 1e-8 * value.abs() {
            return Err(Error::Consistency(format!(
                "imaginary part of the c2 integrand does not cancel under k0 -> -k0 ({im:e})"
            )));
        }
    }
    Ok(Estimate { value, error })
}

pub fn eval_c1(cov: &CovarianceSpec, moll: &MollifierSpec) -> Result<Estimate> {
    check_alpha_m0(cov.alpha, cov.m0, false)?;
    integrate(Which::C1, cov, moll.damping(cov.m0), Accuracy::default())
}

pub fn eval_c2(cov: &CovarianceSpec, moll: &MollifierSpec) -> Result<Estimate> {
    check_alpha_m0(cov.alpha, cov.m0, false)?;
    integrate(Which::C2, cov, moll.damping(cov.m0), Accuracy::default())
}

pub fn eval_c3(cov: &CovarianceSpec, moll: &MollifierSpec) -> Result<Estimate> {
    check_alpha_m0(cov.alpha, cov.m0, false)?;
    integrate(Which::C3, cov, moll.damping(cov.m0), Accuracy::default())
}

/// The m0- and τ-free constants (C₁, C₂, C₃). For the anisotropic family
/// these are the leading coefficients, i.e. the time damping is dropped.
#[allow(non_snake_case)]
pub fn eval_C_constants(alpha: f64, kind: MollifierKind) -> Result<[Estimate; 3]> {
    eval_constants_with(alpha, kind, Accuracy::default())
}

pub fn eval_constants_with(alpha: f64, kind: MollifierKind, acc: Accuracy) -> Result<[Estimate; 3]> {
    let cov = CovarianceSpec::tfe_default(alpha, 1.0)?;
    let damp = match kind {
        MollifierKind::Semigroup => Damping { space: 1.0, time: 1.0 },
        MollifierKind::Anisotropic => Damping { space: 1.0, time: 0.0 },
    };
    Ok([
        integrate(Which::C1, &cov, damp, acc)?,
        integrate(Which::C2, &cov, damp, acc)?,
        integrate(Which::C3, &cov, damp, acc)?,
    ])
}

/// The three constants singled out by the parity argument.
pub fn nonzero_constants() -> [Multiindex; 3] {
    [mi("e1+f0+f1"), mi("2f1"), mi("2e1+2f0")]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingExponents {
    pub tau: f64,
    /// Exponents of m0 for the semigroup and (leading) anisotropic family.
    pub m0: Option<(f64, f64)>,
}

/// τ-exponent (|β|-α-2)/8 of c_β; m0-exponents are known for the three
/// nonzero constants in d = 1.
pub fn scaling_exponents(beta_c: &Multiindex, params: &ModelParams) -> Result<ScalingExponents> {
    if !beta_c.is_c_populated(params)? {
        return Err(Error::Contract(format!("{beta_c} does not carry a constant")));
    }
    let a = params.alpha;
    let tau = (beta_c.homogeneity(params) - a - 2.0) / 8.0;
    let [c1, c2, c3] = nonzero_constants();
    let m0 = if params.d != 1 {
        None
    } else if *beta_c == c1 {
        Some((-1.25, -(2.0 * a + 3.0) / 4.0))
    } else if *beta_c == c2 {
        Some((-0.25, -(2.0 * a - 1.0) / 4.0))
    } else if *beta_c == c3 {
        Some((-2.25, -(2.0 * a + 7.0) / 4.0))
    } else {
        None
    };
    Ok(ScalingExponents { tau, m0 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountertermTable {
    pub alpha: f64,
    pub m0: f64,
    pub tau: f64,
    pub mollifier: MollifierKind,
    pub eta: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub err1: f64,
    pub err2: f64,
    pub err3: f64,
}

impl CountertermTable {
    pub fn compute(cov: &CovarianceSpec, moll: &MollifierSpec) -> Result<Self> {
        let e1 = eval_c1(cov, moll)?;
        let e2 = eval_c2(cov, moll)?;
        let e3 = eval_c3(cov, moll)?;
        Ok(Self {
            alpha: cov.alpha,
            m0: cov.m0,
            tau: moll.tau,
            mollifier: moll.kind,
            eta: moll.eta,
            c1: e1.value,
            c2: e2.value,
            c3: e3.value,
            err1: e1.error,
            err2: e2.error,
            err3: e3.error,
        })
    }

    /// Table from given constant values, e.g. the universal constants.
    pub fn from_values(alpha: f64, mollifier: MollifierKind, c: [Estimate; 3]) -> Self {
        Self {
            alpha,
            m0: 1.0,
            tau: 1.0,
            mollifier,
            eta: DEFAULT_ETA,
            c1: c[0].value,
            c2: c[1].value,
            c3: c[2].value,
            err1: c[0].error,
            err2: c[1].error,
            err3: c[2].error,
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("plain struct")
    }

    pub const CSV_HEADER: &'static str = "alpha,m0,tau,mollifier,eta,c1,c2,c3,err1,err2,err3";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.alpha, self.m0, self.tau, self.mollifier, self.eta, self.c1, self.c2, self.c3,
            self.err1, self.err2, self.err3
        )
    }
}

/// h = c1·a′bb′ + c2·(b′)² + c3·(a′)²b² at one point.
pub fn counterterm_h(a_prime: f64, b: f64, b_prime: f64, table: &CountertermTable) -> f64 {
    table.c1 * a_prime * b * b_prime + table.c2 * b_prime * b_prime + table.c3 * a_prime * a_prime * b * b
}

/// Thin-film substitution a = 1 - M, b = M^{1/2} for a given M(u), M′(u).
pub fn counterterm_h_tfe(m: f64, m_prime: f64, table: &CountertermTable) -> f64 {
    let b = m.sqrt();
    let b_prime = 0.5 * m_prime / b;
    counterterm_h(-m_prime, b, b_prime, table)
}

/// Leading counterterm (τ^{1/8})^{2α-2}·coefficient·∂ₓ(M^{m_exp}(M′)²∂ₓu)
/// for the anisotropic family, with M = u^m giving m²·u^{u_exp}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeadingForm {
    pub coefficient: f64,
    pub tau_root_exponent: f64,
    pub mobility_exponent: f64,
    pub m: f64,
    pub u_exponent: f64,
    pub prefactor: f64,
}

pub fn tfe_leading_form(m: f64, alpha: f64, table: &CountertermTable) -> Result<LeadingForm> {
    if table.mollifier != MollifierKind::Anisotropic {
        return Err(Error::Param("leading form is stated for the anisotropic mollifier".into()));
    }
    if m < 0.0 {
        return Err(Error::Param(format!("mobility power must be nonnegative, got {m}")));
    }
    let coefficient = table.c2 / 4.0 + table.c3 - table.c1 / 2.0;
    let mobility_exponent = -(2.0 * alpha + 3.0) / 4.0;
    Ok(LeadingForm {
        coefficient,
        tau_root_exponent: 2.0 * alpha - 2.0,
        mobility_exponent,
        m,
        u_exponent: m * mobility_exponent + 2.0 * (m - 1.0),
        prefactor: coefficient * m * m,
    })
}

/// Closed forms of the α → ½ limits.
pub fn limit_closed_forms(kind: MollifierKind) -> [f64; 3] {
    match kind {
        MollifierKind::Semigroup => {
            let g = gamma(0.625);
            let p = PI.powf(1.5);
            [g / (9.0 * p), -g / (36.0 * p), -5.0 * g / (6.0 * p)]
        }
        MollifierKind::Anisotropic => {
            let g = gamma(1.125);
            [0.0, -g / (2.0 * PI), -3.0 * g / (4.0 * PI)]
        }
    }
}

pub fn leading_form_half() -> f64 {
    -7.0 * gamma(1.125) / (8.0 * PI)
}

pub fn table_json_list(tables: &[CountertermTable]) -> Value {
    json!(tables.iter().map(CountertermTable::to_json).collect::<Vec<_>>())
}
