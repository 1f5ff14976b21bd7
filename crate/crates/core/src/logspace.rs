//! Arithmetic on magnitudes stored as natural logarithms.
//!
//! Zero is `f64::NEG_INFINITY`. Nothing here ever exponentiates a value that
//! could overflow.

/// `ln(e^a + e^b)`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(e^a - e^b)` for `a >= b`; returns `NEG_INFINITY` when `a == b`.
#[inline]
pub fn log_sub_exp(a: f64, b: f64) -> f64 {
    debug_assert!(a >= b || a.is_nan() || b.is_nan());
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a == b {
        return f64::NEG_INFINITY;
    }
    a + log1m_exp(b - a)
}

/// `ln(1 - e^x)` for `x < 0`, accurate on both sides of `-ln 2`.
#[inline]
pub fn log1m_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// `ln(1 + e^x)`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        0.0
    } else if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln Σ e^{x_i}` with a single max-shift pass.
pub fn log_sum_exp<I>(values: I) -> f64
where
    I: IntoIterator<Item = f64>,
    I::IntoIter: Clone,
{
    let iter = values.into_iter();
    let max = iter.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_infinite() {
        return max;
    }
    let mut acc = NeumaierSum::default();
    for v in iter {
        acc.add((v - max).exp());
    }
    max + acc.total().ln()
}

/// Compensated summation (Neumaier's variant of Kahan).
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }

    fn scale(&mut self, factor: f64) {
        self.sum *= factor;
        self.comp *= factor;
    }
}

/// Running `ln Σ e^{x_i}` over a stream, exposing every prefix.
///
/// Terms are accumulated in a linear domain scaled by a moving reference so
/// that long streams of small terms onto one large term keep full precision.
#[derive(Debug, Clone, Copy)]
pub struct LogAccumulator {
    reference: f64,
    scaled: NeumaierSum,
}

impl Default for LogAccumulator {
    fn default() -> Self {
        Self {
            reference: f64::NEG_INFINITY,
            scaled: NeumaierSum::default(),
        }
    }
}

impl LogAccumulator {
    pub fn add(&mut self, log_x: f64) {
        if log_x == f64::NEG_INFINITY {
            return;
        }
        if self.reference == f64::NEG_INFINITY {
            self.reference = log_x;
            self.scaled = NeumaierSum::default();
            self.scaled.add(1.0);
            return;
        }
        if log_x > self.reference {
            self.scaled.scale((self.reference - log_x).exp());
            self.reference = log_x;
        }
        self.scaled.add((log_x - self.reference).exp());
        let total = self.scaled.total();
        if total > 1e64 {
            self.scaled.scale(total.recip());
            self.reference += total.ln();
        }
    }

    /// Log of the running sum; `NEG_INFINITY` while empty.
    pub fn value(&self) -> f64 {
        if self.reference == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.reference + self.scaled.total().ln()
        }
    }
}
