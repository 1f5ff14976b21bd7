//! Location, width and correction of the window cutoff, the three
//! conditions under which they apply, and finite-`n` bound certificates.
//!
//! For a mixture `d(t) = Σ a_i e^{-ρ_i t}` with truncated cumulative masses
//! `A_i = max{1, a_1 + … + a_i}`:
//!
//! ```text
//! t = max_i ln A_i / ρ_i      w = 1 / ρ_1      r = w (ln(ρ_1 t) - ln ln(ρ_1 t))
//! ```
//!
//! The distance stays above `e^{-c}` before `t + c w` (`c < 0`) and falls
//! below `e^{-c}` after `t + r + c w` (`c > 0`), asymptotically. The
//! certificates below are the non-asymptotic inequalities behind those
//! limits, evaluated at a single mixture.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::ParametricFamily;
use crate::logspace::log_add_exp;
use crate::mixture::{CumulativeMass, ExpMixture};

/// Relative tolerance for ties in the location maximum.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Location `t`, width `w`, correction `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffParams {
    pub t: f64,
    pub w: f64,
    pub r: f64,
    /// 1-based index of the first term attaining the location maximum.
    pub argmax_index: usize,
}

impl CutoffParams {
    /// Computes all three quantities from an explicit mixture.
    ///
    /// Fails when `t` is not positive or when `ρ_1 t <= 1`.
    pub fn from_mixture(m: &ExpMixture) -> Result<Self> {
        let (t, argmax_index) = location(m);
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::LocationNotPositive(t));
        }
        let w = width(m);
        let r = correction(t, w)?;
        Ok(Self {
            t,
            w,
            r,
            argmax_index,
        })
    }

    /// `ρ_1 t`, the quantity whose divergence is the Peres criterion.
    pub fn peres_product(&self) -> f64 {
        self.t / self.w
    }
}

/// `max_i ln A_i / ρ_i` and the smallest index attaining it (1-based).
///
/// ```
/// use cutoff_lab::{cutoff::location, ExpMixture};
/// let m = ExpMixture::new(&[(3.0, 2.0), (3.0, 4.0), (1.0, 6.0)]).unwrap();
/// let (t, i) = location(&m);
/// assert!((t - 3f64.ln() / 2.0).abs() < 1e-15);
/// assert_eq!(i, 1);
/// ```
pub fn location(m: &ExpMixture) -> (f64, usize) {
    location_with_mass(m, &m.cumulative_mass())
}

fn location_with_mass(m: &ExpMixture, mass: &CumulativeMass) -> (f64, usize) {
    let ratios = m
        .terms()
        .iter()
        .zip(mass.log_values())
        .map(|(term, &log_a)| log_a / term.rho());
    let t = ratios.clone().fold(f64::NEG_INFINITY, f64::max);
    let floor = t - TIE_TOLERANCE * t.abs();
    let idx = ratios.clone().position(|x| x >= floor).unwrap_or(0);
    (t, idx + 1)
}

/// `1 / ρ_1`.
pub fn width(m: &ExpMixture) -> f64 {
    m.leading().rho().recip()
}

/// `w (ln(t/w) - ln ln(t/w))`; requires `t / w > 1`.
pub fn correction(t: f64, w: f64) -> Result<f64> {
    let x = t / w;
    if !(x > 1.0) || !x.is_finite() {
        return Err(Error::CorrectionUndefined(x));
    }
    let lx = x.ln();
    Ok(w * (lx - lx.ln()))
}

/// Outcome of the `a_i <= α A_{i-1}` scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaCheck {
    pub ok: bool,
    pub alpha: f64,
    /// 1-based index of the first violation.
    pub first_violation: Option<usize>,
}

/// Checks `a_i <= α A_{i-1}` for every `i >= 2` in log-domain.
pub fn check_alpha(m: &ExpMixture, alpha: f64) -> AlphaCheck {
    assert!(alpha > 0.0, "alpha must be positive");
    let mass = m.cumulative_mass();
    let log_alpha = alpha.ln();
    let first_violation = m
        .terms()
        .iter()
        .enumerate()
        .skip(1)
        .find(|(i, term)| {
            let bound = log_alpha + mass.get(i - 1);
            term.log_a() > bound + TIE_TOLERANCE * bound.abs().max(1.0)
        })
        .map(|(i, _)| i + 1);
    AlphaCheck {
        ok: first_violation.is_none(),
        alpha,
        first_violation,
    }
}

/// Grid evidence for `ρ_{1,n} t_n → ∞`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeresReport {
    pub n_grid: Vec<u64>,
    pub products: Vec<f64>,
    pub threshold: f64,
    pub consistent: bool,
    pub note: &'static str,
}

pub const DEFAULT_PERES_THRESHOLD: f64 = 10.0;

const PERES_NOTE: &str =
    "finite-grid heuristic: strictly increasing and above threshold; not a proof of divergence";

/// Evaluates `ρ_{1,n} t_n` on `n_grid` and reports whether the values are
/// strictly increasing with the last one above `threshold`.
pub fn check_peres(family: &ParametricFamily, n_grid: &[u64], threshold: f64) -> Result<PeresReport> {
    if n_grid.len() < 3 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSpec(
            "Peres grid needs at least 3 strictly increasing indices".into(),
        ));
    }
    let products = n_grid
        .iter()
        .map(|&n| family.peres_product(n))
        .collect::<Result<Vec<_>>>()?;
    let increasing = products.windows(2).all(|w| w[0] < w[1]);
    let consistent = increasing && *products.last().unwrap() > threshold;
    Ok(PeresReport {
        n_grid: n_grid.to_vec(),
        products,
        threshold,
        consistent,
        note: PERES_NOTE,
    })
}

/// Lower bound on `ln d(t + c w)` for `c < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerCertificate {
    pub c: f64,
    pub epsilon: f64,
    pub i_star: usize,
    pub eval_time: f64,
    /// `ln A_{i*} - ρ_{i*} (t + c w)`; never below `-c - ε`.
    pub log_bound: f64,
}

impl LowerCertificate {
    /// `ln e^{-c-ε}`, the floor every certificate clears.
    pub fn floor(&self) -> f64 {
        -self.c - self.epsilon
    }
}

/// Default `ε = -c / 10`.
pub fn default_epsilon(c: f64) -> f64 {
    -c / 10.0
}

fn check_lower_args(c: f64, epsilon: f64) -> Result<()> {
    if !(c < 0.0) {
        return Err(Error::InvalidOffset(c));
    }
    if !(epsilon > 0.0 && epsilon < -c) {
        return Err(Error::EpsilonOutOfRange { epsilon, bound: -c });
    }
    Ok(())
}

/// Picks `i*`, the first index whose ratio `ln A_i / ρ_i` lies within `ε w`
/// of the location, and bounds `d(t + c w) >= A_{i*} e^{-ρ_{i*}(t + c w)}`.
pub fn lower_bound_certificate(m: &ExpMixture, c: f64, epsilon: f64) -> Result<LowerCertificate> {
    check_lower_args(c, epsilon)?;
    let mass = m.cumulative_mass();
    let (t, _) = location_with_mass(m, &mass);
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::LocationNotPositive(t));
    }
    let w = width(m);
    let eval_time = t + c * w;
    if !(eval_time > 0.0) {
        return Err(Error::EvaluationTimeNegative(eval_time));
    }
    let band = t - epsilon * w;
    let (idx, term) = m
        .terms()
        .iter()
        .enumerate()
        .find(|(i, term)| mass.get(*i) / term.rho() >= band)
        .ok_or(Error::EmptyIStarSet)?;
    Ok(LowerCertificate {
        c,
        epsilon,
        i_star: idx + 1,
        eval_time,
        log_bound: mass.get(idx) - term.rho() * eval_time,
    })
}

/// Certificate for a family whose first term attains the location with
/// `A_1 = a_1`; then `i* = 1` for every `ε`.
pub fn lower_certificate_leading(
    params: &CutoffParams,
    log_a1: f64,
    rho1: f64,
    c: f64,
    epsilon: f64,
) -> Result<LowerCertificate> {
    check_lower_args(c, epsilon)?;
    let eval_time = params.t + c * params.w;
    if !(eval_time > 0.0) {
        return Err(Error::EvaluationTimeNegative(eval_time));
    }
    Ok(LowerCertificate {
        c,
        epsilon,
        i_star: 1,
        eval_time,
        log_bound: log_a1 - rho1 * eval_time,
    })
}

/// Upper bound on `ln d(t + r + c w)` for `c > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpperCertificate {
    pub c: f64,
    /// `l_n` of the split; 1 in the branch `A_1 = e^{ρ_1 t}`.
    pub l_index: usize,
    #[serde(rename = "C")]
    pub big_c: f64,
    pub eval_time: f64,
    pub log_bound: f64,
}

/// `ln[e^{-u} (t/(r+cw)) ((r+cw)/t + e^C)]` with `u = ρ_1 (r + c w)`.
fn upper_log_bound(params: &CutoffParams, c: f64, big_c: f64) -> f64 {
    let shift = params.r + c * params.w;
    let u = shift / params.w;
    let s = shift / params.t;
    -u - s.ln() + log_add_exp(s.ln(), big_c)
}

fn check_upper_args(c: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidOffset(c));
    }
    Ok(())
}

/// Splits the sum at `l`: the head is bounded through `ρ_i >= ρ_1`, the tail
/// through `e^{-ρ_i t} <= 1/A_i` and an integral comparison.
///
/// ```
/// use cutoff_lab::{cutoff::upper_bound_certificate, ExpMixture};
/// let m = ExpMixture::from_terms(vec![cutoff_lab::ExpTerm::new(100.0, 1.0).unwrap()]).unwrap();
/// let cert = upper_bound_certificate(&m, 1.0).unwrap();
/// assert_eq!(cert.big_c, 0.0);
/// assert!(m.evaluate(cert.eval_time) <= cert.log_bound);
/// ```
pub fn upper_bound_certificate(m: &ExpMixture, c: f64) -> Result<UpperCertificate> {
    check_upper_args(c)?;
    let mass = m.cumulative_mass();
    let (t, argmax_index) = location_with_mass(m, &mass);
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::LocationNotPositive(t));
    }
    let w = width(m);
    let r = correction(t, w)?;
    let params = CutoffParams {
        t,
        w,
        r,
        argmax_index,
    };
    let rho1 = m.leading().rho();
    let target = rho1 * t;
    let eval_time = t + r + c * w;

    if mass.get(0) >= target * (1.0 - TIE_TOLERANCE) {
        return Ok(UpperCertificate {
            c,
            l_index: 1,
            big_c: 0.0,
            eval_time,
            log_bound: upper_log_bound(&params, c, 0.0),
        });
    }
    // A_1 < e^{ρ_1 t}: first l with A_l >= e^{ρ_1 t}; the argmax qualifies
    // since ρ_argmax >= ρ_1.
    let l = mass
        .log_values()
        .iter()
        .position(|&x| x >= target)
        .unwrap_or(argmax_index - 1)
        .max(1);
    let big_c = (r + c * w) * rho1 * (1.0 - mass.get(l - 1) / target);
    Ok(UpperCertificate {
        c,
        l_index: l + 1,
        big_c,
        eval_time,
        log_bound: upper_log_bound(&params, c, big_c),
    })
}

/// Certificate for a family whose first term attains the location with
/// `A_1 = e^{ρ_1 t}` (branch `C = 0`), from the parameters alone.
pub fn upper_certificate_leading(params: &CutoffParams, c: f64) -> Result<UpperCertificate> {
    check_upper_args(c)?;
    Ok(UpperCertificate {
        c,
        l_index: 1,
        big_c: 0.0,
        eval_time: params.t + params.r + c * params.w,
        log_bound: upper_log_bound(params, c, 0.0),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AlphaReport {
    pub ok: bool,
    pub alpha: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub tn_positive: bool,
    pub alpha: AlphaReport,
    pub peres: &'static str,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "side", rename_all = "lowercase")]
pub enum CertificateEntry {
    Lower(LowerCertificate),
    Upper(UpperCertificate),
    Failed { c: f64, error: String },
}

/// Everything `analyze` prints for one mixture.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub t: f64,
    pub w: f64,
    pub r: Option<f64>,
    pub argmax_index: usize,
    pub conditions: ConditionReport,
    pub certificates: Vec<CertificateEntry>,
}

/// Location, width, correction, conditions and one certificate per `c`
/// (lower for `c < 0` with the default `ε`, upper for `c > 0`).
pub fn analyze(m: &ExpMixture, alpha: f64, cs: &[f64]) -> AnalysisReport {
    let (t, argmax_index) = location(m);
    let w = width(m);
    let r = correction(t, w).ok();
    let alpha_check = check_alpha(m, alpha);
    let certificates = cs
        .iter()
        .map(|&c| {
            let entry = if c < 0.0 {
                lower_bound_certificate(m, c, default_epsilon(c)).map(CertificateEntry::Lower)
            } else {
                upper_bound_certificate(m, c).map(CertificateEntry::Upper)
            };
            entry.unwrap_or_else(|e| CertificateEntry::Failed {
                c,
                error: e.to_string(),
            })
        })
        .collect();
    AnalysisReport {
        t,
        w,
        r,
        argmax_index,
        conditions: ConditionReport {
            tn_positive: t > 0.0 && t.is_finite(),
            alpha: AlphaReport {
                ok: alpha_check.ok,
                alpha,
            },
            peres: "unchecked",
        },
        certificates,
    }
}
