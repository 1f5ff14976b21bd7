//! The two-scale family with one heavy slow term and `9^n - 1` light terms
//! whose rates sit on a logarithmic grid.
//!
//! At index `n` with weight `β ∈ [0, 1]`:
//!
//! ```text
//! a_1 = e^n,      ρ_1 = n / (1 + β ℓ_n / n),      ℓ_n = ln(n / ln n)
//! a_i = e^{-n},   ρ_i = ln(e^n + (i - 1) e^{-n}),  2 <= i <= 9^n
//! ```
//!
//! Because `ρ_i = ln x_{i-1}` on the grid `x_k = e^n + k e^{-n}` with step
//! `e^{-n}`, the light part `D_2(t) = Σ e^{-n} x_k^{-t}` is a Riemann sum of the
//! decreasing function `x^{-t}` and is enclosed between two closed-form
//! integrals. That enclosure is what makes `n = 10^4` evaluable.

use crate::error::{Error, Result};
use crate::interval::LogInterval;
use crate::logspace::{log1m_exp, log_add_exp, softplus};
use crate::mixture::{ExpMixture, ExpTerm};

/// Largest `n` for which the `9^n` terms are streamed by [`terms`].
pub const MAX_STREAM_N: u64 = 8;
/// Largest `n` for which [`realize`] builds an explicit mixture.
pub const MAX_MATERIALIZE_N: u64 = 7;

/// `ℓ_n = ln(n / ln n)`.
pub fn ell(n: u64) -> f64 {
    let nf = n as f64;
    nf.ln() - nf.ln().ln()
}

/// `ρ_1 = n / (1 + β ℓ_n / n)`.
pub fn leading_rate(n: u64, beta: f64) -> f64 {
    let nf = n as f64;
    nf / (1.0 + beta * ell(n) / nf)
}

/// `ρ_i` for the 1-based light index `i >= 2`, as `n + ln(1 + (i-1) e^{-2n})`.
pub fn light_rate(n: u64, i: u64) -> f64 {
    let nf = n as f64;
    nf + ((i - 1) as f64 * (-2.0 * nf).exp()).ln_1p()
}

/// Number of terms, `9^n`, when it fits in a `u64`.
pub fn term_count(n: u64) -> Option<u64> {
    9u64.checked_pow(u32::try_from(n).ok()?)
}

fn check_args(n: u64, beta: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::IndexTooSmall(n, 2));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::BetaOutOfRange { n, beta });
    }
    Ok(())
}

/// Streams all `9^n` terms in rate order. Capped at [`MAX_STREAM_N`].
pub fn terms(n: u64, beta: f64) -> Result<impl Iterator<Item = ExpTerm>> {
    check_args(n, beta)?;
    if n > MAX_STREAM_N {
        return Err(Error::NotMaterializable(n));
    }
    let m = term_count(n).expect("9^8 fits");
    let nf = n as f64;
    let lead = ExpTerm::new(nf, leading_rate(n, beta))?;
    let light = (2..=m).map(move |i| ExpTerm::new(-nf, light_rate(n, i)).expect("positive rate"));
    Ok(std::iter::once(lead).chain(light))
}

/// Explicit mixture for small `n`. Capped at [`MAX_MATERIALIZE_N`].
pub fn realize(n: u64, beta: f64) -> Result<ExpMixture> {
    if n > MAX_MATERIALIZE_N {
        check_args(n, beta)?;
        return Err(Error::NotMaterializable(n));
    }
    ExpMixture::from_terms(terms(n, beta)?.collect())
}

/// `ln ∫_a^b x^{-t} dx` where `ln a = base + sa`, `ln b = base + sb`, `sa < sb`.
fn log_power_integral(base: f64, sa: f64, sb: f64, t: f64) -> Result<f64> {
    let g = 1.0 - t;
    if g.abs() < f64::MIN_POSITIVE {
        return Err(Error::ExponentAtPole(t));
    }
    let span = sb - sa;
    if g < 0.0 {
        // (a^g - b^g) / (-g) = a^g (1 - e^{g span}) / (-g)
        Ok(g * (base + sa) + log1m_exp(g * span) - (-g).ln())
    } else {
        // (b^g - a^g) / g = b^g (1 - e^{-g span}) / g
        Ok(g * (base + sb) + log1m_exp(-g * span) - g.ln())
    }
}

/// Rigorous enclosure of `ln d_n(t)` for the family at `(n, β)`.
///
/// The heavy term is exact; the light sum is bracketed by
/// `∫_{x_1}^{x_m} x^{-t} dx < D_2 < ∫_{x_0}^{x_{m-1}} x^{-t} dx`, with
/// `m = 9^n` and every `ln x_k` taken as `n + ln(1 + k e^{-2n})`. The result
/// is widened by a floating-point slack proportional to `n t`.
///
/// ```
/// use cutoff_lab::lemma31::evaluate;
/// let iv = evaluate(100, 0.0, 1.05).unwrap();
/// assert!(iv.relative_width() < 1e-3);
/// ```
pub fn evaluate(n: u64, beta: f64, t: f64) -> Result<LogInterval> {
    check_args(n, beta)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::EvaluationTimeNegative(t));
    }
    let nf = n as f64;
    let log_heavy = nf - leading_rate(n, beta) * t;

    let log_m = nf * 9f64.ln();
    let log_m_minus_1 = log_m + log1m_exp(-log_m);
    // offsets s_k = ln(1 + k e^{-2n}) of the grid points above e^n
    let s0 = 0.0;
    let s1 = softplus(-2.0 * nf);
    let s_m1 = softplus(log_m_minus_1 - 2.0 * nf);
    let s_m = softplus(log_m - 2.0 * nf);

    let lower = log_power_integral(nf, s1, s_m, t)?;
    let upper = log_power_integral(nf, s0, s_m1, t)?;

    let pad = 32.0 * f64::EPSILON * (1.0 + nf * (1.0 + t.abs()));
    Ok(LogInterval::new(log_add_exp(log_heavy, lower), log_add_exp(log_heavy, upper)).widen(pad))
}
