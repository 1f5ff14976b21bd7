//! Exponential mixtures `d(t) = Σ a_i e^{-ρ_i t}` held in log-domain.
//!
//! Coefficients are stored as `ln a_i` so that terms like `e^{500}` are as
//! cheap as `2.0`. A mixture is canonical: rates strictly increasing, equal
//! rates merged, the smallest rate carrying a positive coefficient.

use std::cmp::Ordering;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logspace::{log_add_exp, log_sum_exp, LogAccumulator};

/// One term `a e^{-ρ t}`, stored as `(ln a, ρ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    log_a: f64,
    rho: f64,
}

impl ExpTerm {
    /// `log_a` may be `NEG_INFINITY` (a zero coefficient).
    pub fn new(log_a: f64, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::NonpositiveRate(rho));
        }
        if log_a.is_nan() || log_a == f64::INFINITY {
            return Err(Error::InvalidCoefficient(log_a));
        }
        Ok(Self { log_a, rho })
    }

    pub fn from_linear(a: f64, rho: f64) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::InvalidCoefficient(a));
        }
        Self::new(a.ln(), rho)
    }

    pub fn log_a(&self) -> f64 {
        self.log_a
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Linear coefficient; overflows to infinity past `e^709`.
    pub fn coefficient(&self) -> f64 {
        self.log_a.exp()
    }

    /// `ln(a e^{-ρ t})`.
    #[inline]
    pub fn log_value_at(&self, t: f64) -> f64 {
        if self.log_a == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.log_a - self.rho * t
        }
    }
}

/// A finite exponential mixture in canonical form.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpMixture {
    terms: Vec<ExpTerm>,
}

impl ExpMixture {
    /// Builds a mixture from linear `(coefficient, rate)` pairs.
    ///
    /// ```
    /// use cutoff_lab::ExpMixture;
    /// let m = ExpMixture::new(&[(1.0, 2.0), (3.0, 2.0), (std::f64::consts::E, 1.0)]).unwrap();
    /// assert_eq!(m.len(), 2);
    /// assert_eq!(m.terms()[0].rho(), 1.0);
    /// assert!((m.terms()[1].coefficient() - 4.0).abs() < 1e-12);
    /// ```
    pub fn new(raw: &[(f64, f64)]) -> Result<Self> {
        let terms = raw
            .iter()
            .map(|&(a, rho)| ExpTerm::from_linear(a, rho))
            .collect::<Result<Vec<_>>>()?;
        Self::from_terms(terms)
    }

    /// Sorts by rate, merges equal rates and checks the leading coefficient.
    pub fn from_terms(mut terms: Vec<ExpTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptyMixture);
        }
        terms.sort_by(|x, y| x.rho.total_cmp(&y.rho));
        let mut merged: Vec<ExpTerm> = Vec::with_capacity(terms.len());
        for term in terms {
            match merged.last_mut() {
                Some(last) if last.rho == term.rho => {
                    last.log_a = log_add_exp(last.log_a, term.log_a);
                }
                _ => merged.push(term),
            }
        }
        if merged[0].log_a == f64::NEG_INFINITY {
            return Err(Error::LeadingCoefficientZero);
        }
        Ok(Self { terms: merged })
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The term with the smallest rate.
    pub fn leading(&self) -> &ExpTerm {
        &self.terms[0]
    }

    /// `ln A_i` with `A_i = max{1, a_1 + … + a_i}`.
    pub fn cumulative_mass(&self) -> CumulativeMass {
        let mut acc = LogAccumulator::default();
        let log_mass = self
            .terms
            .iter()
            .map(|term| {
                acc.add(term.log_a);
                acc.value().max(0.0)
            })
            .collect();
        CumulativeMass { log_mass }
    }

    /// `ln d(t)`.
    ///
    /// ```
    /// use cutoff_lab::ExpMixture;
    /// let m = ExpMixture::new(&[(std::f64::consts::E, 1.0)]).unwrap();
    /// assert!(m.evaluate(1.0).abs() < 1e-15);
    /// ```
    pub fn evaluate(&self, t: f64) -> f64 {
        log_sum_exp(self.terms.iter().map(|term| term.log_value_at(t)))
    }

    /// Mixture of `d_1 + d_2`: the distance of a product of independent
    /// components when the distance tensorizes additively.
    pub fn tensor_sum(&self, other: &ExpMixture) -> ExpMixture {
        let mut terms = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.len() || j < other.len() {
            let next = match (self.terms.get(i), other.terms.get(j)) {
                (Some(x), Some(y)) => match x.rho.total_cmp(&y.rho) {
                    Ordering::Less => {
                        i += 1;
                        *x
                    }
                    Ordering::Greater => {
                        j += 1;
                        *y
                    }
                    Ordering::Equal => {
                        i += 1;
                        j += 1;
                        ExpTerm {
                            log_a: log_add_exp(x.log_a, y.log_a),
                            rho: x.rho,
                        }
                    }
                },
                (Some(x), None) => {
                    i += 1;
                    *x
                }
                (None, Some(y)) => {
                    j += 1;
                    *y
                }
                (None, None) => unreachable!(),
            };
            terms.push(next);
        }
        ExpMixture { terms }
    }

    /// `n` independent copies: every coefficient multiplied by `n`.
    pub fn iid_sample(&self, n: u64) -> ExpMixture {
        assert!(n >= 1, "sample size must be positive");
        let shift = (n as f64).ln();
        ExpMixture {
            terms: self
                .terms
                .iter()
                .map(|t| ExpTerm {
                    log_a: t.log_a + shift,
                    rho: t.rho,
                })
                .collect(),
        }
    }

    /// Multiplies every rate by `s > 0`.
    pub fn rescale_rates(&self, s: f64) -> Result<ExpMixture> {
        let terms = self
            .terms
            .iter()
            .map(|t| ExpTerm::new(t.log_a, t.rho * s))
            .collect::<Result<Vec<_>>>()?;
        ExpMixture::from_terms(terms)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: MixtureFile = serde_json::from_str(s)?;
        file.into_mixture()
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&MixtureFile::from(self)).expect("mixture serializes")
    }
}

/// Splits a signed decomposition into `d = d⁺ - d⁻`.
///
/// Zero coefficients go to neither side. The minus part is `None` when no
/// coefficient is negative.
pub fn split_signed(raw: &[(f64, f64)]) -> Result<(ExpMixture, Option<ExpMixture>)> {
    if raw.is_empty() {
        return Err(Error::EmptyMixture);
    }
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for &(a, rho) in raw {
        if !a.is_finite() {
            return Err(Error::InvalidCoefficient(a));
        }
        if a > 0.0 {
            plus.push(ExpTerm::from_linear(a, rho)?);
        } else if a < 0.0 {
            minus.push(ExpTerm::from_linear(-a, rho)?);
        } else {
            ExpTerm::from_linear(0.0, rho)?;
        }
    }
    if plus.is_empty() {
        return Err(Error::LeadingCoefficientZero);
    }
    let plus = ExpMixture::from_terms(plus)?;
    let minus = if minus.is_empty() {
        None
    } else {
        Some(ExpMixture::from_terms(minus)?)
    };
    Ok((plus, minus))
}

/// `ln A_i`, nondecreasing and nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeMass {
    log_mass: Vec<f64>,
}

impl CumulativeMass {
    pub fn log_values(&self) -> &[f64] {
        &self.log_mass
    }

    /// `ln A_i` for the 0-based term index `i`.
    pub fn get(&self, i: usize) -> f64 {
        self.log_mass[i]
    }

    pub fn len(&self) -> usize {
        self.log_mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_mass.is_empty()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct MixtureFile {
    terms: Vec<RawTerm>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    log_a: Option<f64>,
    rho: f64,
}

// Above this, `a` would lose its meaning as a JSON number.
const LINEAR_WRITE_LIMIT: f64 = 700.0;

impl MixtureFile {
    fn into_mixture(self) -> Result<ExpMixture> {
        let terms = self
            .terms
            .into_iter()
            .enumerate()
            .map(|(idx, raw)| match (raw.a, raw.log_a) {
                (Some(a), None) => ExpTerm::from_linear(a, raw.rho),
                (None, Some(log_a)) => ExpTerm::new(log_a, raw.rho),
                (Some(_), Some(_)) => Err(Error::Parse(format!(
                    "term {idx}: give either \"a\" or \"log_a\", not both"
                ))),
                (None, None) => Err(Error::Parse(format!("term {idx}: missing \"a\" or \"log_a\""))),
            })
            .collect::<Result<Vec<_>>>()?;
        ExpMixture::from_terms(terms)
    }
}

impl From<&ExpMixture> for MixtureFile {
    fn from(m: &ExpMixture) -> Self {
        let terms = m
            .terms
            .iter()
            .map(|t| {
                if t.log_a == f64::NEG_INFINITY {
                    RawTerm {
                        a: Some(0.0),
                        log_a: None,
                        rho: t.rho,
                    }
                } else if t.log_a.abs() <= LINEAR_WRITE_LIMIT {
                    RawTerm {
                        a: Some(t.log_a.exp()),
                        log_a: None,
                        rho: t.rho,
                    }
                } else {
                    RawTerm {
                        a: None,
                        log_a: Some(t.log_a),
                        rho: t.rho,
                    }
                }
            })
            .collect();
        MixtureFile { terms }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn naive(raw: &[(f64, f64)], t: f64) -> f64 {
        raw.iter().map(|&(a, rho)| a * (-rho * t).exp()).sum()
    }

    #[test]
    fn single_term() {
        let m = ExpMixture::new(&[(2.0, 1.0)]).unwrap();
        assert_eq!(m.len(), 1);
        assert!((m.leading().log_a() - 2f64.ln()).abs() < 1e-16);
        assert_eq!(m.leading().rho(), 1.0);
    }

    #[test]
    fn merge_and_sort() {
        let m = ExpMixture::new(&[(1.0, 2.0), (3.0, 2.0), (E, 1.0)]).unwrap();
        assert_eq!(m.len(), 2);
        assert!((m.terms()[0].coefficient() - E).abs() < 1e-15);
        assert_eq!(m.terms()[0].rho(), 1.0);
        assert!((m.terms()[1].coefficient() - 4.0).abs() < 1e-14);
        assert_eq!(m.terms()[1].rho(), 2.0);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            ExpMixture::new(&[(0.0, 1.0), (5.0, 2.0)]),
            Err(Error::LeadingCoefficientZero)
        );
        assert_eq!(ExpMixture::new(&[]), Err(Error::EmptyMixture));
        assert_eq!(ExpMixture::new(&[(1.0, 0.0)]), Err(Error::NonpositiveRate(0.0)));
        assert_eq!(ExpMixture::new(&[(1.0, -2.0)]), Err(Error::NonpositiveRate(-2.0)));
        assert!(matches!(
            ExpMixture::new(&[(-1.0, 1.0)]),
            Err(Error::InvalidCoefficient(_))
        ));
    }

    #[test]
    fn zero_terms_behind_the_lead_are_kept() {
        let m = ExpMixture::new(&[(2.0, 1.0), (0.0, 2.0), (3.0, 3.0)]).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m.terms()[1].log_a(), f64::NEG_INFINITY);
    }

    #[test]
    fn cumulative_mass_floor() {
        let m = ExpMixture::new(&[(0.5, 1.0), (0.3, 2.0)]).unwrap();
        assert_eq!(m.cumulative_mass().log_values(), &[0.0, 0.0]);
    }

    #[test]
    fn cumulative_mass_accumulates() {
        let m = ExpMixture::new(&[(E, 1.0), (E.powi(3), 2.0)]).unwrap();
        let mass = m.cumulative_mass();
        assert!((mass.get(0) - 1.0).abs() < 1e-15);
        // e + e^3 = 22.80381875...
        assert!((mass.get(1) - 22.803_818_751_6_f64.ln()).abs() < 1e-10);
        assert!((mass.get(1) - 3.126_928).abs() < 1e-6);
    }

    #[test]
    fn cumulative_mass_zero_term() {
        let m = ExpMixture::new(&[(2.0, 1.0), (0.0, 2.0), (3.0, 3.0)]).unwrap();
        let a: Vec<f64> = m.cumulative_mass().log_values().iter().map(|x| x.exp()).collect();
        for (got, want) in a.iter().zip([2.0, 2.0, 5.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn evaluate_examples() {
        let m = ExpMixture::new(&[(2.0, 1.0)]).unwrap();
        assert!((m.evaluate(0.0) - 2f64.ln()).abs() < 1e-16);
        let m = ExpMixture::new(&[(E, 1.0)]).unwrap();
        assert!(m.evaluate(1.0).abs() < 1e-15);

        let raw = [(3.0, 2.0), (3.0, 4.0), (1.0, 6.0)];
        let m = ExpMixture::new(&raw).unwrap();
        let t = 0.549_306;
        let oracle = 3.0 * (-1.098_612f64).exp() + 3.0 * (-2.197_224f64).exp() + (-3.295_836f64).exp();
        assert!((m.evaluate(t) - oracle.ln()).abs() < 1e-6);
        assert!((m.evaluate(t) - naive(&raw, t).ln()).abs() < 1e-14);
        assert!((naive(&raw, t) - 1.370_370).abs() < 1e-5);
    }

    #[test]
    fn tensor_sum_examples() {
        let one = ExpMixture::new(&[(1.0, 1.0)]).unwrap();
        let s = one.tensor_sum(&one);
        assert_eq!(s.len(), 1);
        assert!((s.leading().coefficient() - 2.0).abs() < 1e-15);

        let m1 = ExpMixture::new(&[(E, 1.0)]).unwrap();
        let m2 = ExpMixture::new(&[(E.powi(3), 2.0)]).unwrap();
        let s = m1.tensor_sum(&m2);
        assert_eq!(s.len(), 2);
        assert!((s.terms()[0].log_a() - 1.0).abs() < 1e-15);
        assert!((s.terms()[1].log_a() - 3.0).abs() < 1e-15);
        assert_eq!(s, m2.tensor_sum(&m1));
    }

    #[test]
    fn iid_sample_examples() {
        let b = ExpMixture::new(&[(1.0, 2.0)]).unwrap();
        assert_eq!(b.iid_sample(1), b);
        let s = b.iid_sample(10);
        assert!((s.leading().coefficient() - 10.0).abs() < 1e-13);
        assert_eq!(s.leading().rho(), 2.0);
    }

    #[test]
    fn split_signed_examples() {
        let (p, m) = split_signed(&[(2.0, 1.0), (-1.0, 2.0), (3.0, 3.0)]).unwrap();
        assert_eq!(p, ExpMixture::new(&[(2.0, 1.0), (3.0, 3.0)]).unwrap());
        assert_eq!(m, Some(ExpMixture::new(&[(1.0, 2.0)]).unwrap()));

        let (p, m) = split_signed(&[(5.0, 1.0)]).unwrap();
        assert_eq!(p, ExpMixture::new(&[(5.0, 1.0)]).unwrap());
        assert!(m.is_none());

        let (p, m) = split_signed(&[(-1.0, 1.0), (2.0, 2.0)]).unwrap();
        assert_eq!(p, ExpMixture::new(&[(2.0, 2.0)]).unwrap());
        assert_eq!(m, Some(ExpMixture::new(&[(1.0, 1.0)]).unwrap()));

        assert_eq!(split_signed(&[(-1.0, 1.0)]), Err(Error::LeadingCoefficientZero));
    }

    #[test]
    fn json_accepts_both_keys() {
        let m =
            ExpMixture::from_json_str(r#"{"terms": [{"a": 2.0, "rho": 1.0}, {"log_a": 500.0, "rho": 3.0}]}"#)
                .unwrap();
        assert!((m.terms()[1].log_a() - 500.0).abs() < 1e-12);
        let back = ExpMixture::from_json_str(&m.to_json_string()).unwrap();
        assert_eq!(back.len(), 2);
        assert!((back.terms()[0].log_a() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(back.terms()[1].log_a(), 500.0);
    }

    #[test]
    fn json_rejects_both_and_neither() {
        let both = r#"{"terms": [{"a": 2.0, "log_a": 1.0, "rho": 1.0}]}"#;
        assert!(matches!(ExpMixture::from_json_str(both), Err(Error::Parse(_))));
        let neither = r#"{"terms": [{"rho": 1.0}]}"#;
        assert!(matches!(ExpMixture::from_json_str(neither), Err(Error::Parse(_))));
    }

    fn raw_mixture() -> impl Strategy<Value = Vec<(f64, f64)>> {
        proptest::collection::vec((0.01f64..50.0, 0.05f64..20.0), 1..12)
    }

    proptest! {
        #[test]
        fn monotone_in_time(raw in raw_mixture(), t1 in -2f64..5.0, dt in 0f64..5.0) {
            let m = ExpMixture::new(&raw).unwrap();
            prop_assert!(m.evaluate(t1) >= m.evaluate(t1 + dt));
        }

        #[test]
        fn time_rescaling(raw in raw_mixture(), t in 0f64..5.0, s in 0.1f64..10.0) {
            let m = ExpMixture::new(&raw).unwrap();
            let scaled = m.rescale_rates(s).unwrap();
            let lhs = scaled.evaluate(t / s);
            let rhs = m.evaluate(t);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
        }

        #[test]
        fn tensor_additivity(r1 in raw_mixture(), r2 in raw_mixture(), t in 0f64..3.0) {
            let m1 = ExpMixture::new(&r1).unwrap();
            let m2 = ExpMixture::new(&r2).unwrap();
            let lhs = m1.tensor_sum(&m2).evaluate(t);
            let rhs = log_add_exp(m1.evaluate(t), m2.evaluate(t));
            prop_assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * rhs.abs().max(1.0) * 8.0);
        }

        #[test]
        fn iid_shift(raw in raw_mixture(), n in 1u64..10_000, t in 0f64..3.0) {
            let b = ExpMixture::new(&raw).unwrap();
            let lhs = b.iid_sample(n).evaluate(t);
            let rhs = b.evaluate(t) + (n as f64).ln();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
        }

        #[test]
        fn agrees_with_linear_sum(raw in raw_mixture(), t in 0f64..3.0) {
            let m = ExpMixture::new(&raw).unwrap();
            let lin = naive(&raw, t);
            prop_assert!((m.evaluate(t).exp() - lin).abs() <= 1e-12 * lin);
        }

        #[test]
        fn cumulative_mass_nondecreasing(raw in raw_mixture()) {
            let m = ExpMixture::new(&raw).unwrap();
            let mass = m.cumulative_mass();
            prop_assert!(mass.log_values().windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(mass.log_values().iter().all(|&x| x >= 0.0));
        }
    }
}
