//! Cutoff analysis for distances to equilibrium that decompose into
//! exponential mixtures.
//!
//! A distance `d(t) = Σ a_i e^{-ρ_i t}` with nonnegative coefficients and
//! increasing rates determines a cutoff location `t`, a width `w = 1/ρ_1` and
//! a correction `r`. The [`cutoff`] module computes them and produces
//! finite-`n` certificates for the two sides of the window; [`families`]
//! holds the example sequences; [`lemma31`] evaluates the two-scale family
//! at any `n` through a rigorous integral sandwich; [`spectral`] turns a
//! reversible generator into the chi-square mixture; [`harness`] sweeps
//! `(n, c)` grids and writes reports.
//!
//! ```
//! use cutoff_lab::{CutoffParams, ExpMixture};
//!
//! let m = ExpMixture::new(&[(3.0, 2.0), (3.0, 4.0), (1.0, 6.0)]).unwrap();
//! let p = CutoffParams::from_mixture(&m).unwrap();
//! assert_eq!(p.argmax_index, 1);
//! assert!((p.t - 3f64.ln() / 2.0).abs() < 1e-15);
//! assert_eq!(p.w, 0.5);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cutoff;
pub mod error;
pub mod families;
pub mod harness;
pub mod interval;
pub mod lemma31;
pub mod logspace;
pub mod mixture;
pub mod oracle;
pub mod spectral;
pub mod verify;

pub use cutoff::{CutoffParams, LowerCertificate, UpperCertificate};
pub use error::{Error, Result};
pub use families::{BetaSchedule, ParametricFamily};
pub use interval::LogInterval;
pub use mixture::{split_signed, CumulativeMass, ExpMixture, ExpTerm};
