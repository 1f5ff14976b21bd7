//! Compiles every code listing of the guide in `book/src` as a doc-test.
//!
//! mdbook cannot run listings that depend on an external crate, so each
//! chapter is pulled in here as the docs of an empty module.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/mixtures.md")]
pub mod mixtures {}

#[doc = include_str!("../../../book/src/cutoff-parameters.md")]
pub mod cutoff_parameters {}

#[doc = include_str!("../../../book/src/certificates.md")]
pub mod certificates {}

#[doc = include_str!("../../../book/src/two-scale.md")]
pub mod two_scale {}

#[doc = include_str!("../../../book/src/spectral.md")]
pub mod spectral {}

#[doc = include_str!("../../../book/src/sweeps.md")]
pub mod sweeps {}
