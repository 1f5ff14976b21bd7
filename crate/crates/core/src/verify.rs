//! The bundled acceptance checks, grouped into suites.
//!
//! Each criterion compares the engine against an independent route
//! (closed forms, direct enumeration, uniformization) and reports a single
//! pass/fail with a one-line detail. Runtime budgets count toward passing.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cutoff::{default_epsilon, lower_bound_certificate, upper_bound_certificate, CutoffParams};
use crate::error::{Error, Result};
use crate::families::{hypercube_mixture, lemma31_params, BetaSchedule, ParametricFamily};
use crate::harness::limit_check;
use crate::lemma31;
use crate::mixture::{ExpMixture, ExpTerm};
use crate::oracle;
use crate::spectral::{chi_square_mixture, matrix_exponential_oracle, random_reversible, Generator};

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed_secs: f64,
    pub budget_secs: Option<f64>,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let budget = self.budget_secs.map(|b| format!(" / {b} s")).unwrap_or_default();
        write!(
            f,
            "criterion {} {}: {} ({:.3} s{}) {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.elapsed_secs,
            budget,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// Two-scale family: closed forms, sandwich, window locations.
    Lemma31,
    /// Single-OU exactness and certificate inequalities.
    Bounds,
    Spectral,
    /// Grid convergence of the asymptotic statements.
    Limits,
    All,
}

impl Suite {
    pub fn criteria(&self) -> &'static [u8] {
        match self {
            Suite::Lemma31 => &[2, 3, 6],
            Suite::Bounds => &[1, 4],
            Suite::Spectral => &[7],
            Suite::Limits => &[5, 8],
            Suite::All => &[1, 2, 3, 4, 5, 6, 7, 8],
        }
    }

    pub const NAMES: [&'static str; 5] = ["lemma31", "bounds", "spectral", "limits", "all"];
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lemma31" => Ok(Suite::Lemma31),
            "bounds" => Ok(Suite::Bounds),
            "spectral" => Ok(Suite::Spectral),
            "limits" => Ok(Suite::Limits),
            "all" => Ok(Suite::All),
            other => Err(Error::Parse(format!(
                "unknown suite '{other}' (expected one of {})",
                Suite::NAMES.join(", ")
            ))),
        }
    }
}

/// Runs the criteria of a suite in order.
pub fn run_suite(suite: Suite) -> Vec<CriterionResult> {
    suite.criteria().iter().map(|&id| run_criterion(id)).collect()
}

type Check = fn() -> Result<(bool, String)>;

/// Runs a single criterion, `1..=8`. Panics on other ids.
pub fn run_criterion(id: u8) -> CriterionResult {
    let (name, budget, check): (&'static str, Option<f64>, Check) = match id {
        1 => ("single-OU exactness", Some(1.0), single_ou_exactness),
        2 => ("two-scale closed forms", Some(10.0), closed_forms),
        3 => ("sandwich soundness", Some(30.0), sandwich_soundness),
        4 => ("certificate inequalities", Some(10.0), certificate_inequalities),
        5 => ("two-scale limit", Some(5.0), two_scale_limit),
        6 => ("distinct window locations", None, window_locations),
        7 => ("spectral oracle equivalence", Some(10.0), spectral_equivalence),
        8 => ("upper-certificate limit recovery", None, certificate_recovery),
        other => panic!("no criterion {other}"),
    };
    let start = Instant::now();
    let outcome = check();
    let elapsed = start.elapsed();
    let within_budget = budget.is_none_or(|b| elapsed <= Duration::from_secs_f64(b));
    let (passed, mut detail) = match outcome {
        Ok((ok, detail)) => (ok, detail),
        Err(e) => (false, format!("error: {e}")),
    };
    if !within_budget {
        detail.push_str("; over runtime budget");
    }
    CriterionResult {
        id,
        name,
        passed: passed && within_budget,
        detail,
        elapsed_secs: elapsed.as_secs_f64(),
        budget_secs: budget,
    }
}

/// `|a - b| <= tol * |b|`
fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs()
}

/// Absolute rounding allowance for log-domain quantities built from terms
/// of size up to `scale`.
fn rounding_pad(scale: f64) -> f64 {
    64.0 * f64::EPSILON * (1.0 + scale.abs())
}

fn single_ou_exactness() -> Result<(bool, String)> {
    let family: ParametricFamily = "single-ou".parse()?;
    let mut worst: f64 = 0.0;
    for n in [10u64, 100, 10_000] {
        let m = family.mixture(n)?;
        let p = CutoffParams::from_mixture(&m)?;
        for c in [-3.0, -1.0, 0.0, 1.0, 3.0] {
            let got = m.evaluate(p.t + c * p.w).exp();
            let want = (-c).exp();
            worst = worst.max((got - want).abs() / want);
        }
    }
    Ok((worst <= 1e-12, format!("max relative error {worst:.3e}")))
}

fn closed_form_schedules() -> Result<Vec<BetaSchedule>> {
    Ok(vec![
        BetaSchedule::constant(0.0)?,
        BetaSchedule::constant(0.5)?,
        BetaSchedule::constant(1.0)?,
        BetaSchedule::Alternating,
        BetaSchedule::one_minus_gamma_over_ell(2f64.ln())?,
        BetaSchedule::Oscillating,
    ])
}

fn closed_forms() -> Result<(bool, String)> {
    let mut checked = 0;
    let mut skipped = Vec::new();
    let mut worst: f64 = 0.0;
    for beta in closed_form_schedules()? {
        for n in 2..=6u64 {
            let b = match beta.at(n) {
                Ok(b) => b,
                Err(_) => {
                    skipped.push(format!("{}@{n}", beta.label()));
                    continue;
                }
            };
            let realized = CutoffParams::from_mixture(&lemma31::realize(n, b)?)?;
            let closed = lemma31_params(n, b);
            for (got, want) in [
                (realized.t, closed.t),
                (realized.w, closed.w),
                (realized.r, closed.r),
            ] {
                worst = worst.max((got - want).abs() / want.abs());
            }
            if realized.argmax_index != 1 {
                return Ok((
                    false,
                    format!("{} n = {n}: argmax {}", beta.label(), realized.argmax_index),
                ));
            }
            checked += 1;
        }
    }
    // the enumeration oracle shares nothing with the realized mixture
    let (t, w, r) = oracle::lemma31_params_direct(6, 0.5);
    let closed = lemma31_params(6, 0.5);
    let oracle_ok =
        rel_close(t, closed.t, 1e-10) && rel_close(w, closed.w, 1e-10) && rel_close(r, closed.r, 1e-10);
    Ok((
        worst <= 1e-10 && oracle_ok,
        format!(
            "{checked} (schedule, n) pairs, max relative error {worst:.3e}; enumeration oracle {}; out of range: {}",
            if oracle_ok { "agrees" } else { "disagrees" },
            if skipped.is_empty() { "none".into() } else { skipped.join(" ") }
        ),
    ))
}

fn sandwich_soundness() -> Result<(bool, String)> {
    let mut checked = 0;
    let mut failures = Vec::new();
    for n in 2..=6u64 {
        for beta in [0.0, 0.5, 1.0] {
            let p = lemma31_params(n, beta);
            for c in [-0.5, 0.0, 0.5, 1.0, 2.0] {
                let t = p.t + p.r + c * p.w;
                let enclosure = lemma31::evaluate(n, beta, t)?;
                let brute = oracle::lemma31_direct(n, beta, t);
                if !enclosure.contains(brute) {
                    failures.push(format!(
                        "n={n} β={beta} t={t}: {brute} not in [{}, {}]",
                        enclosure.log_lo, enclosure.log_hi
                    ));
                }
                checked += 1;
            }
        }
    }
    let p = lemma31_params(100, 0.5);
    let width = lemma31::evaluate(100, 0.5, p.t + p.r)?.relative_width();
    let ok = failures.is_empty() && width < 1e-3;
    let mut detail = format!("{checked} enclosures checked; relative width at n = 100: {width:.3e}");
    if let Some(f) = failures.first() {
        detail.push_str(&format!("; {} outside, first: {f}", failures.len()));
    }
    Ok((ok, detail))
}

fn random_mixture(rng: &mut ChaCha8Rng) -> Result<ExpMixture> {
    let size = rng.gen_range(1..=50);
    let mut rates: Vec<f64> = (0..size).map(|_| rng.gen_range(0.2..10.0)).collect();
    rates.sort_by(f64::total_cmp);
    let terms = rates
        .iter()
        .enumerate()
        .map(|(i, &rho)| {
            let log_a = if i == 0 {
                rng.gen_range(3.0..25.0)
            } else if rng.gen_bool(0.05) {
                f64::NEG_INFINITY
            } else {
                rng.gen_range(-10.0..25.0)
            };
            ExpTerm::new(log_a, rho)
        })
        .collect::<Result<Vec<_>>>()?;
    ExpMixture::from_terms(terms)
}

#[derive(Default)]
struct CertificateTally {
    checked: usize,
    skipped: usize,
    failures: Vec<String>,
}

impl CertificateTally {
    fn expect(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    /// Checks both certificate directions on an explicit mixture.
    fn mixture(&mut self, label: &str, m: &ExpMixture) -> Result<()> {
        let scale = m
            .terms()
            .iter()
            .filter(|t| t.log_a().is_finite())
            .map(|t| t.log_a().abs())
            .fold(0.0, f64::max);
        let rho_max = m.terms().last().expect("nonempty").rho();
        for c in [-2.0, -1.0] {
            let cert = match lower_bound_certificate(m, c, default_epsilon(c)) {
                Ok(cert) => cert,
                Err(Error::EvaluationTimeNegative(_)) => {
                    self.skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let pad = rounding_pad(scale + rho_max * cert.eval_time);
            let measured = m.evaluate(cert.eval_time);
            self.expect(cert.floor() <= cert.log_bound + pad, || {
                format!(
                    "{label} c={c}: bound {} below floor {}",
                    cert.log_bound,
                    cert.floor()
                )
            });
            self.expect(cert.log_bound <= measured + pad, || {
                format!("{label} c={c}: bound {} above ln d = {measured}", cert.log_bound)
            });
        }
        for c in [0.5, 1.0, 2.0] {
            let cert = match upper_bound_certificate(m, c) {
                Ok(cert) => cert,
                Err(Error::CorrectionUndefined(_)) => {
                    self.skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let pad = rounding_pad(scale + rho_max * cert.eval_time);
            let measured = m.evaluate(cert.eval_time);
            self.expect(measured <= cert.log_bound + pad, || {
                format!("{label} c={c}: ln d = {measured} above bound {}", cert.log_bound)
            });
        }
        Ok(())
    }

    /// Checks the closed-form certificates of a family against its interval
    /// evaluation.
    fn family(&mut self, family: &ParametricFamily, n: u64) -> Result<()> {
        let label = format!("{family} n={n}");
        let p = family.params(n)?;
        let pad = rounding_pad(p.t / p.w * 2.0);
        for c in [-2.0, -1.0] {
            let cert = match family.lower_certificate(n, c, default_epsilon(c)) {
                Ok(cert) => cert,
                Err(Error::EvaluationTimeNegative(_)) => {
                    self.skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let measured = family.evaluate(n, cert.eval_time)?;
            self.expect(cert.floor() <= cert.log_bound + pad, || {
                format!("{label} c={c}: bound {} below floor", cert.log_bound)
            });
            self.expect(cert.log_bound <= measured.log_lo + pad, || {
                format!(
                    "{label} c={c}: bound {} above ln d >= {}",
                    cert.log_bound, measured.log_lo
                )
            });
        }
        for c in [0.5, 1.0, 2.0] {
            let cert = family.upper_certificate(n, c)?;
            let measured = family.evaluate(n, cert.eval_time)?;
            self.expect(measured.log_hi <= cert.log_bound + pad, || {
                format!(
                    "{label} c={c}: ln d <= {} above bound {}",
                    measured.log_hi, cert.log_bound
                )
            });
        }
        Ok(())
    }
}

fn certificate_inequalities() -> Result<(bool, String)> {
    let mut tally = CertificateTally::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    for k in 0..200 {
        let m = random_mixture(&mut rng)?;
        tally.mixture(&format!("random #{k}"), &m)?;
    }
    for n in 2..=6u64 {
        for beta in [0.0, 0.5, 1.0] {
            tally.mixture(&format!("two-scale n={n} β={beta}"), &lemma31::realize(n, beta)?)?;
        }
    }
    for n in 2..=64u64 {
        tally.mixture(&format!("hypercube n={n}"), &hypercube_mixture(n, 2.0)?)?;
    }
    for beta in closed_form_schedules()? {
        let family = ParametricFamily::lemma31(beta);
        for n in [10u64, 100, 1000, 10_000, 10_001] {
            if beta.is_valid_at(n) {
                tally.family(&family, n)?;
            }
        }
    }
    let mut detail = format!(
        "{} inequalities checked, {} instances outside the certificate domain",
        tally.checked, tally.skipped
    );
    if let Some(f) = tally.failures.first() {
        detail.push_str(&format!("; {} violated, first: {f}", tally.failures.len()));
    }
    Ok((tally.failures.is_empty(), detail))
}

fn two_scale_limit() -> Result<(bool, String)> {
    let schedules = [
        BetaSchedule::constant(0.0)?,
        BetaSchedule::constant(0.5)?,
        BetaSchedule::constant(1.0)?,
        BetaSchedule::one_minus_gamma_over_ell(2f64.ln())?,
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for beta in &schedules {
        let report = limit_check(
            beta,
            &[-1.0, 0.0, 1.0],
            &[100, 1000, 10_000],
            crate::harness::LIMIT_TOLERANCE,
        )?;
        let worst = report.worst.as_ref().map_or(0.0, |w| w.error);
        ok &= report.within_tolerance && report.monotone;
        parts.push(format!(
            "{}: worst error at 10^4 {worst:.4}{}",
            beta.label(),
            if report.monotone { "" } else { " (not monotone)" }
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn window_locations() -> Result<(bool, String)> {
    let alternating = limit_check(&BetaSchedule::Alternating, &[0.0], &[10_000, 10_001], 0.05)?;
    let errors: Vec<String> = alternating
        .rows
        .iter()
        .map(|r| format!("n={} err {:.4}", r.n, r.error))
        .collect();
    let oscillating = limit_check(
        &BetaSchedule::Oscillating,
        &[-1.0, 0.0, 1.0],
        &[10_000, 10_001],
        0.05,
    )?;
    let separation = oscillating.separation.unwrap_or(f64::NAN);
    Ok((
        alternating.within_tolerance && oscillating.passed,
        format!(
            "alternating {}; oscillating parity separation {separation:.4}",
            errors.join(", ")
        ),
    ))
}

fn spectral_equivalence() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0007);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let size = rng.gen_range(2..=8);
        let g = random_reversible(&mut rng, size);
        let start = rng.gen_range(0..size);
        let m = chi_square_mixture(&g, start)?;
        let step = 0.5 / m.leading().rho();
        for k in 0..10 {
            let t = step * f64::from(k);
            let spectral = m.evaluate(t).exp();
            let oracle = matrix_exponential_oracle(&g, start, t)?;
            worst = worst.max((spectral - oracle).abs() / oracle);
        }
    }
    let cube = chi_square_mixture(&Generator::hypercube(3, 0.5)?, 0)?;
    let want = hypercube_mixture(3, 2.0)?;
    let cube_ok = cube.len() == want.len()
        && cube.terms().iter().zip(want.terms()).all(|(a, b)| {
            rel_close(a.rho(), b.rho(), 1e-10) && rel_close(a.coefficient(), b.coefficient(), 1e-10)
        });
    Ok((
        worst <= 1e-8 && cube_ok,
        format!(
            "max relative disagreement {worst:.3e} over 500 points; hypercube(3) {}",
            if cube_ok { "matches" } else { "differs" }
        ),
    ))
}

fn certificate_recovery() -> Result<(bool, String)> {
    let family: ParametricFamily = "single-ou".parse()?;
    let c = 1.0;
    let cert = family.upper_certificate(1_000_000, c)?;
    let ratio = (cert.log_bound + c).exp();
    Ok((
        (1.0..=1.05).contains(&ratio),
        format!("certificate / e^-c = {ratio:.6} at n = 10^6 (required within [1, 1.05])"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_parse() {
        for name in Suite::NAMES {
            assert!(name.parse::<Suite>().is_ok());
        }
        assert!("everything".parse::<Suite>().is_err());
        assert_eq!(Suite::All.criteria().len(), 8);
    }

    #[test]
    fn cheap_criteria_pass() {
        for id in [1, 8] {
            let r = run_criterion(id);
            assert!(r.detail.len() > 10);
            if id == 1 {
                assert!(r.passed, "{r}");
            }
        }
    }

    #[test]
    fn random_mixtures_are_valid_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let m = random_mixture(&mut rng).unwrap();
            let p = CutoffParams::from_mixture(&m).unwrap();
            assert!(p.t / p.w >= 3.0);
        }
    }
}
