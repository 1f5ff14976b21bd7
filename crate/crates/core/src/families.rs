//! Sequences of mixtures indexed by `n`.
//!
//! Single Ornstein–Uhlenbeck coordinates have relative-entropy distance
//! `a e^{-ρ t}`; independent coordinates add. Every family here is built from
//! that rule or from the chi-square expansion of a product chain.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cutoff::{
    lower_bound_certificate, lower_certificate_leading, upper_bound_certificate, upper_certificate_leading,
    CutoffParams, LowerCertificate, UpperCertificate,
};
use crate::error::{Error, Result};
use crate::interval::LogInterval;
use crate::lemma31;
use crate::mixture::{ExpMixture, ExpTerm};

/// A real-valued function of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Schedule {
    Const {
        value: f64,
    },
    /// `slope * n + intercept`
    Affine {
        slope: f64,
        intercept: f64,
    },
    /// `scale * n^exponent`
    Power {
        scale: f64,
        exponent: f64,
    },
}

impl Schedule {
    pub fn at(&self, n: u64) -> f64 {
        let nf = n as f64;
        match *self {
            Schedule::Const { value } => value,
            Schedule::Affine { slope, intercept } => slope * nf + intercept,
            Schedule::Power { scale, exponent } => scale * nf.powf(exponent),
        }
    }
}

/// Limit of `(1 - β_n) ℓ_n`, possibly along parity subsequences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitBehavior {
    /// A single limit `γ`, `+∞` allowed.
    Converges { gamma: f64 },
    /// Even and odd `n` have separate limits; no profile at a fixed
    /// location.
    Subsequences { even_gamma: f64, odd_gamma: f64 },
}

impl LimitBehavior {
    /// The `γ` governing index `n`.
    pub fn gamma_at(&self, n: u64) -> f64 {
        match *self {
            LimitBehavior::Converges { gamma } => gamma,
            LimitBehavior::Subsequences {
                even_gamma,
                odd_gamma,
            } => {
                if n.is_multiple_of(2) {
                    even_gamma
                } else {
                    odd_gamma
                }
            }
        }
    }
}

/// `ln(e^{-c}(1 + e^{-γ}))`.
pub fn limit_target(c: f64, gamma: f64) -> f64 {
    -c + (-gamma).exp().ln_1p()
}

/// The weight schedule `β_n` of the two-scale family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum BetaSchedule {
    /// `β_n ≡ value`
    Const { value: f64 },
    /// `β_n = (1 + (-1)^n) / 2`
    Alternating,
    /// `β_n = 1 - γ / ℓ_n`
    #[serde(rename = "gamma")]
    OneMinusGammaOverEll { gamma: f64 },
    /// `β_n = 1 - (2 + (-1)^n) / ℓ_n`
    Oscillating,
}

impl BetaSchedule {
    pub fn constant(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::BetaOutOfRange { n: 0, beta: value });
        }
        Ok(BetaSchedule::Const { value })
    }

    pub fn one_minus_gamma_over_ell(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::GammaNonpositive(gamma));
        }
        Ok(BetaSchedule::OneMinusGammaOverEll { gamma })
    }

    /// Builds one of the five listed cases by name: `one`, `const`,
    /// `alternating`, `gamma`, `oscillating`.
    pub fn from_case(case: &str, param: Option<f64>) -> Result<Self> {
        let need =
            |what: &str| param.ok_or_else(|| Error::Parse(format!("beta case '{case}' needs a {what}")));
        match case {
            "one" => Self::constant(1.0),
            "const" => Self::constant(need("value")?),
            "alternating" => Ok(BetaSchedule::Alternating),
            "gamma" => Self::one_minus_gamma_over_ell(need("gamma")?),
            "oscillating" => Ok(BetaSchedule::Oscillating),
            other => Err(Error::Parse(format!("unknown beta case '{other}'"))),
        }
    }

    /// `β_n`, unchecked.
    pub fn raw(&self, n: u64) -> f64 {
        let even = n.is_multiple_of(2);
        match *self {
            BetaSchedule::Const { value } => value,
            BetaSchedule::Alternating => {
                if even {
                    1.0
                } else {
                    0.0
                }
            }
            BetaSchedule::OneMinusGammaOverEll { gamma } => 1.0 - gamma / lemma31::ell(n),
            BetaSchedule::Oscillating => {
                let k = if even { 3.0 } else { 1.0 };
                1.0 - k / lemma31::ell(n)
            }
        }
    }

    /// `β_n`, checked against `[0, 1]`.
    pub fn at(&self, n: u64) -> Result<f64> {
        if n < 2 {
            return Err(Error::IndexTooSmall(n, 2));
        }
        let beta = self.raw(n);
        if (0.0..=1.0).contains(&beta) {
            Ok(beta)
        } else {
            Err(Error::BetaOutOfRange { n, beta })
        }
    }

    pub fn is_valid_at(&self, n: u64) -> bool {
        self.at(n).is_ok()
    }

    /// Smallest `n` from which every index is valid.
    ///
    /// `ℓ_n` increases for `n >= 3`, so validity is monotone from there on
    /// within each parity.
    pub fn min_valid_n(&self) -> u64 {
        let mut n = 3;
        while !(self.is_valid_at(n) && self.is_valid_at(n + 1)) {
            n += 1;
        }
        if n == 3 && self.is_valid_at(2) {
            2
        } else {
            n
        }
    }

    /// Declared limit of `(1 - β_n) ℓ_n`.
    pub fn limit(&self) -> LimitBehavior {
        match *self {
            BetaSchedule::Const { value: 1.0 } => LimitBehavior::Converges { gamma: 0.0 },
            BetaSchedule::Const { .. } => LimitBehavior::Converges { gamma: f64::INFINITY },
            BetaSchedule::Alternating => LimitBehavior::Subsequences {
                even_gamma: 0.0,
                odd_gamma: f64::INFINITY,
            },
            BetaSchedule::OneMinusGammaOverEll { gamma } => LimitBehavior::Converges { gamma },
            BetaSchedule::Oscillating => LimitBehavior::Subsequences {
                even_gamma: 3.0,
                odd_gamma: 1.0,
            },
        }
    }

    pub fn label(&self) -> String {
        match *self {
            BetaSchedule::Const { value } => format!("const:{value}"),
            BetaSchedule::Alternating => "alternating".into(),
            BetaSchedule::OneMinusGammaOverEll { gamma } => format!("gamma:{gamma}"),
            BetaSchedule::Oscillating => "oscillating".into(),
        }
    }
}

/// Closed-form `(t_n, w_n, r_n)` of the two-scale family:
/// `t = 1 + ℓ β / n`, `w = t / n`, `r = ℓ w`.
pub fn lemma31_params(n: u64, beta: f64) -> CutoffParams {
    let nf = n as f64;
    let ell = lemma31::ell(n);
    let t = 1.0 + ell * beta / nf;
    let w = t / nf;
    CutoffParams {
        t,
        w,
        r: ell * w,
        argmax_index: 1,
    }
}

/// A sequence of exponential mixtures indexed by `n`.
#[derive(Debug, Clone, PartialEq)]
pub enum ParametricFamily {
    /// One coordinate with `d_n(t) = a_n e^{-ρ_n t}`, `a_n = e^{log_a(n)}`.
    SingleOu { log_a: Schedule, rho: Schedule },
    /// The two-scale family with `9^n` terms.
    Lemma31 { beta: BetaSchedule },
    /// Chi-square distance of `n` independent symmetric two-state chains:
    /// `(1 + e^{-rate t})^n - 1`.
    Hypercube { rate: f64 },
    /// `n` independent copies of `base`.
    IidSample { base: ExpMixture },
    /// One mixture per listed `n`.
    Explicit { mixtures: Vec<(u64, ExpMixture)> },
}

impl ParametricFamily {
    pub fn single_ou(log_a: Schedule, rho: Schedule) -> Self {
        ParametricFamily::SingleOu { log_a, rho }
    }

    pub fn lemma31(beta: BetaSchedule) -> Self {
        ParametricFamily::Lemma31 { beta }
    }

    /// Per-coordinate mixture `{(1, 2)}`.
    pub fn hypercube() -> Self {
        ParametricFamily::Hypercube { rate: 2.0 }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ParametricFamily::SingleOu { .. } => "single_ou",
            ParametricFamily::Lemma31 { .. } => "lemma31",
            ParametricFamily::Hypercube { .. } => "hypercube",
            ParametricFamily::IidSample { .. } => "iid_sample",
            ParametricFamily::Explicit { .. } => "explicit",
        }
    }

    /// Short label used in reports, e.g. `lemma31/const:0.5`.
    pub fn label(&self) -> String {
        match self {
            ParametricFamily::Lemma31 { beta } => format!("lemma31/{}", beta.label()),
            ParametricFamily::Hypercube { rate } if *rate != 2.0 => format!("hypercube/rate:{rate}"),
            other => other.kind().to_string(),
        }
    }

    pub fn beta(&self) -> Option<&BetaSchedule> {
        match self {
            ParametricFamily::Lemma31 { beta } => Some(beta),
            _ => None,
        }
    }

    fn single_ou_at(log_a: &Schedule, rho: &Schedule, n: u64) -> Result<(f64, f64)> {
        let la = log_a.at(n);
        if !(la > 0.0) {
            return Err(Error::CoefficientNotAboveOne(n));
        }
        let r = rho.at(n);
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::NonpositiveRate(r));
        }
        Ok((la, r))
    }

    /// The explicit mixture at index `n`.
    pub fn mixture(&self, n: u64) -> Result<ExpMixture> {
        match self {
            ParametricFamily::SingleOu { log_a, rho } => {
                let (la, r) = Self::single_ou_at(log_a, rho, n)?;
                ExpMixture::from_terms(vec![ExpTerm::new(la, r)?])
            }
            ParametricFamily::Lemma31 { beta } => lemma31::realize(n, beta.at(n)?),
            ParametricFamily::Hypercube { rate } => hypercube_mixture(n, *rate),
            ParametricFamily::IidSample { base } => {
                if n == 0 {
                    return Err(Error::IndexTooSmall(0, 1));
                }
                Ok(base.iid_sample(n))
            }
            ParametricFamily::Explicit { mixtures } => mixtures
                .iter()
                .find(|(k, _)| *k == n)
                .map(|(_, m)| m.clone())
                .ok_or_else(|| Error::InvalidSpec(format!("explicit family has no mixture at n = {n}"))),
        }
    }

    /// `(t_n, w_n, r_n)`; closed forms where the family has them.
    pub fn params(&self, n: u64) -> Result<CutoffParams> {
        match self {
            ParametricFamily::SingleOu { log_a, rho } => {
                let (la, r) = Self::single_ou_at(log_a, rho, n)?;
                let t = la / r;
                let w = r.recip();
                Ok(CutoffParams {
                    t,
                    w,
                    r: crate::cutoff::correction(t, w)?,
                    argmax_index: 1,
                })
            }
            ParametricFamily::Lemma31 { beta } => Ok(lemma31_params(n, beta.at(n)?)),
            _ => CutoffParams::from_mixture(&self.mixture(n)?),
        }
    }

    /// `ρ_{1,n} t_n`; defined even when the correction is not.
    pub fn peres_product(&self, n: u64) -> Result<f64> {
        match self {
            ParametricFamily::SingleOu { log_a, rho } => Ok(Self::single_ou_at(log_a, rho, n)?.0),
            ParametricFamily::Lemma31 { beta } => {
                let p = lemma31_params(n, beta.at(n)?);
                Ok(p.t / p.w)
            }
            _ => {
                let m = self.mixture(n)?;
                Ok(crate::cutoff::location(&m).0 * m.leading().rho())
            }
        }
    }

    /// Enclosure of `ln d_n(t)`; degenerate for explicit mixtures.
    pub fn evaluate(&self, n: u64, t: f64) -> Result<LogInterval> {
        match self {
            ParametricFamily::SingleOu { log_a, rho } => {
                let (la, r) = Self::single_ou_at(log_a, rho, n)?;
                Ok(LogInterval::point(la - r * t))
            }
            ParametricFamily::Lemma31 { beta } => lemma31::evaluate(n, beta.at(n)?, t),
            _ => Ok(LogInterval::point(self.mixture(n)?.evaluate(t))),
        }
    }

    /// `(ln a_1, ρ_1)` for families whose first term attains the location.
    fn leading_term(&self, n: u64) -> Result<Option<(f64, f64)>> {
        match self {
            ParametricFamily::SingleOu { log_a, rho } => Ok(Some(Self::single_ou_at(log_a, rho, n)?)),
            ParametricFamily::Lemma31 { beta } => Ok(Some((n as f64, lemma31::leading_rate(n, beta.at(n)?)))),
            _ => Ok(None),
        }
    }

    pub fn upper_certificate(&self, n: u64, c: f64) -> Result<UpperCertificate> {
        match self.leading_term(n)? {
            Some(_) => upper_certificate_leading(&self.params(n)?, c),
            None => upper_bound_certificate(&self.mixture(n)?, c),
        }
    }

    pub fn lower_certificate(&self, n: u64, c: f64, epsilon: f64) -> Result<LowerCertificate> {
        match self.leading_term(n)? {
            Some((log_a1, rho1)) => lower_certificate_leading(&self.params(n)?, log_a1, rho1, c, epsilon),
            None => lower_bound_certificate(&self.mixture(n)?, c, epsilon),
        }
    }
}

/// Terms `(C(n, k), k * rate)` for `k = 1..=n`.
pub fn hypercube_mixture(n: u64, rate: f64) -> Result<ExpMixture> {
    if n == 0 {
        return Err(Error::IndexTooSmall(0, 1));
    }
    let nf = n as f64;
    let mut log_binom = 0.0;
    let terms = (1..=n)
        .map(|k| {
            let kf = k as f64;
            log_binom += ((nf - kf + 1.0) / kf).ln();
            ExpTerm::new(log_binom, kf * rate)
        })
        .collect::<Result<Vec<_>>>()?;
    ExpMixture::from_terms(terms)
}

/// JSON form of a family.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyDescriptor {
    SingleOu {
        #[serde(default = "default_log_a")]
        log_a: Schedule,
        #[serde(default = "default_rho")]
        rho: Schedule,
    },
    Lemma31 {
        beta: BetaSchedule,
    },
    Hypercube {
        #[serde(default = "default_rate")]
        rate: f64,
    },
    IidSample {
        base: serde_json::Value,
    },
    Explicit {
        mixtures: Vec<ExplicitEntry>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplicitEntry {
    pub n: u64,
    #[serde(flatten)]
    pub mixture: serde_json::Value,
}

fn default_log_a() -> Schedule {
    Schedule::Affine {
        slope: 1.0,
        intercept: 0.0,
    }
}

fn default_rho() -> Schedule {
    Schedule::Const { value: 1.0 }
}

fn default_rate() -> f64 {
    2.0
}

impl TryFrom<FamilyDescriptor> for ParametricFamily {
    type Error = Error;

    fn try_from(d: FamilyDescriptor) -> Result<Self> {
        Ok(match d {
            FamilyDescriptor::SingleOu { log_a, rho } => ParametricFamily::SingleOu { log_a, rho },
            FamilyDescriptor::Lemma31 { beta } => {
                // re-validate parameters that bypassed the constructors
                let beta = match beta {
                    BetaSchedule::Const { value } => BetaSchedule::constant(value)?,
                    BetaSchedule::OneMinusGammaOverEll { gamma } => {
                        BetaSchedule::one_minus_gamma_over_ell(gamma)?
                    }
                    other => other,
                };
                ParametricFamily::Lemma31 { beta }
            }
            FamilyDescriptor::Hypercube { rate } => {
                if !(rate > 0.0 && rate.is_finite()) {
                    return Err(Error::NonpositiveRate(rate));
                }
                ParametricFamily::Hypercube { rate }
            }
            FamilyDescriptor::IidSample { base } => ParametricFamily::IidSample {
                base: ExpMixture::from_json_str(&base.to_string())?,
            },
            FamilyDescriptor::Explicit { mixtures } => ParametricFamily::Explicit {
                mixtures: mixtures
                    .into_iter()
                    .map(|e| Ok((e.n, ExpMixture::from_json_str(&e.mixture.to_string())?)))
                    .collect::<Result<Vec<_>>>()?,
            },
        })
    }
}

impl ParametricFamily {
    /// Parses either a JSON descriptor or the short form
    /// `lemma31/<case>[:<param>]`, `single-ou[/rho:<v>]`, `hypercube[/rate:<v>]`.
    ///
    /// ```
    /// use cutoff_lab::ParametricFamily;
    /// let f: ParametricFamily = "lemma31/const:1".parse().unwrap();
    /// let p = f.params(10).unwrap();
    /// assert!((p.t - 1.146_855).abs() < 1e-6);
    /// ```
    pub fn from_descriptor(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            let d: FamilyDescriptor = serde_json::from_str(s)?;
            return d.try_into();
        }
        let (head, tail) = match s.split_once('/') {
            Some((h, t)) => (h, Some(t)),
            None => (s, None),
        };
        let param = |t: &str, key: &str| -> Result<f64> {
            let v = t
                .strip_prefix(key)
                .and_then(|v| v.strip_prefix(':'))
                .ok_or_else(|| Error::Parse(format!("expected '{key}:<value>', got '{t}'")))?;
            v.parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad number '{v}': {e}")))
        };
        match head {
            "lemma31" => {
                let tail = tail.ok_or_else(|| Error::Parse("lemma31 needs a beta case".into()))?;
                let (case, p) = match tail.split_once(':') {
                    Some((c, v)) => (
                        c,
                        Some(
                            v.parse::<f64>()
                                .map_err(|e| Error::Parse(format!("bad number '{v}': {e}")))?,
                        ),
                    ),
                    None => (tail, None),
                };
                Ok(ParametricFamily::lemma31(BetaSchedule::from_case(case, p)?))
            }
            "single-ou" | "single_ou" => {
                let rho = match tail {
                    Some(t) => param(t, "rho")?,
                    None => 1.0,
                };
                FamilyDescriptor::SingleOu {
                    log_a: default_log_a(),
                    rho: Schedule::Const { value: rho },
                }
                .try_into()
            }
            "hypercube" => {
                let rate = match tail {
                    Some(t) => param(t, "rate")?,
                    None => 2.0,
                };
                FamilyDescriptor::Hypercube { rate }.try_into()
            }
            other => Err(Error::Parse(format!("unknown family '{other}'"))),
        }
    }
}

impl FromStr for ParametricFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_descriptor(s)
    }
}

impl fmt::Display for ParametricFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}
