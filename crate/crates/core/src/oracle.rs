//! Independent reference computations.
//!
//! Nothing here goes through the log-domain machinery of the main modules:
//! sums are formed in linear space with compensated addition, and the
//! two-scale family is enumerated directly from its definition. The
//! verification suites compare the engine against these.

use crate::lemma31;
use crate::logspace::NeumaierSum;

/// `Σ a_i e^{-ρ_i t}` term by term, in linear space.
pub fn direct_sum(raw: &[(f64, f64)], t: f64) -> f64 {
    let mut s = NeumaierSum::default();
    for &(a, rho) in raw {
        s.add(a * (-rho * t).exp());
    }
    s.total()
}

/// `(t, w)` from a list of linear coefficients: plain running sums, plain
/// maximum.
pub fn location_width(raw: &[(f64, f64)]) -> (f64, f64) {
    let mut sorted = raw.to_vec();
    sorted.sort_by(|x, y| x.1.total_cmp(&y.1));
    let mut running = 0.0;
    let mut t = f64::NEG_INFINITY;
    for &(a, rho) in &sorted {
        running += a;
        t = t.max(running.max(1.0).ln() / rho);
    }
    (t, 1.0 / sorted[0].1)
}

/// `ln d_n(t)` of the two-scale family by direct enumeration of all `9^n`
/// terms.
///
/// The light block is summed as `e^{-n(1+t)} Σ_{k<9^n} (1 + k e^{-2n})^{-t}`,
/// so no log-domain term is ever formed. Panics beyond `n = 8`.
pub fn lemma31_direct(n: u64, beta: f64, t: f64) -> f64 {
    assert!(
        (2..=lemma31::MAX_STREAM_N).contains(&n),
        "enumeration limited to 2..=8"
    );
    let nf = n as f64;
    let ell = (nf / nf.ln()).ln();
    let rho1 = nf / (1.0 + beta * ell / nf);
    let h = (-2.0 * nf).exp();
    let count = 9u64.pow(n as u32);
    let mut light = NeumaierSum::default();
    for k in 1..count {
        light.add((1.0 + k as f64 * h).powf(-t));
    }
    // factor out the heavier of the two blocks before leaving linear space
    let heavy_log = nf - rho1 * t;
    let light_log = -nf * (1.0 + t);
    let light_total = light.total();
    if heavy_log >= light_log {
        heavy_log + (1.0 + light_total * (light_log - heavy_log).exp()).ln()
    } else {
        light_log + (light_total + (heavy_log - light_log).exp()).ln()
    }
}

/// `(t_n, w_n, r_n)` of the two-scale family from enumerated linear terms.
pub fn lemma31_params_direct(n: u64, beta: f64) -> (f64, f64, f64) {
    assert!(
        (2..=lemma31::MAX_STREAM_N).contains(&n),
        "enumeration limited to 2..=8"
    );
    let nf = n as f64;
    let ell = (nf / nf.ln()).ln();
    let rho1 = nf / (1.0 + beta * ell / nf);
    let h = (-2.0 * nf).exp();
    let light_a = (-nf).exp();
    let mut running = nf.exp();
    let mut t = nf / rho1;
    for k in 1..9u64.pow(n as u32) {
        running += light_a;
        let rho = nf + (k as f64 * h).ln_1p();
        t = t.max(running.ln() / rho);
    }
    let w = 1.0 / rho1;
    let x = t / w;
    (t, w, w * (x.ln() - x.ln().ln()))
}
