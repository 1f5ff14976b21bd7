use serde::{Deserialize, Serialize};

use crate::logspace::log_add_exp;

/// Enclosure `[e^log_lo, e^log_hi]` of a nonnegative magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogInterval {
    pub log_lo: f64,
    pub log_hi: f64,
}

impl LogInterval {
    pub fn new(log_lo: f64, log_hi: f64) -> Self {
        assert!(log_lo <= log_hi, "inverted interval [{log_lo}, {log_hi}]");
        Self { log_lo, log_hi }
    }

    /// Degenerate interval holding one exactly computed value.
    pub fn point(log_value: f64) -> Self {
        Self {
            log_lo: log_value,
            log_hi: log_value,
        }
    }

    /// Widens both ends outward by `pad` log-units.
    pub fn widen(self, pad: f64) -> Self {
        Self::new(self.log_lo - pad, self.log_hi + pad)
    }

    pub fn contains(&self, log_value: f64) -> bool {
        self.log_lo <= log_value && log_value <= self.log_hi
    }

    /// `hi / lo - 1`.
    pub fn relative_width(&self) -> f64 {
        (self.log_hi - self.log_lo).exp_m1()
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.log_lo + self.log_hi)
    }

    /// Interval of the sum of two enclosed magnitudes.
    pub fn log_add(self, other: Self) -> Self {
        Self::new(
            log_add_exp(self.log_lo, other.log_lo),
            log_add_exp(self.log_hi, other.log_hi),
        )
    }

    /// Largest distance from any point of the enclosure to `target`.
    pub fn max_abs_deviation(&self, target: f64) -> f64 {
        (self.log_lo - target).abs().max((self.log_hi - target).abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_has_zero_width() {
        let p = LogInterval::point(2.0);
        assert_eq!(p.relative_width(), 0.0);
        assert!(p.contains(2.0));
        assert!(!p.contains(2.0 + 1e-15));
    }

    #[test]
    fn log_add_of_points() {
        let s = LogInterval::point(0.0).log_add(LogInterval::point(0.0));
        assert!((s.log_lo - std::f64::consts::LN_2).abs() < 1e-16);
    }

    #[test]
    #[should_panic]
    fn inverted_rejected() {
        LogInterval::new(1.0, 0.0);
    }

    #[test]
    fn deviation_uses_worst_end() {
        let iv = LogInterval::new(-0.1, 0.3);
        assert!((iv.max_abs_deviation(0.0) - 0.3).abs() < 1e-15);
    }
}
