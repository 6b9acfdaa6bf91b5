//! Numerical laboratory for the tail behavior of rotation-invariant random
//! matrix series.
//!
//! The quantity of interest is `S = Σ dₙ·tr(εₙ Aₙ)` where each `εₙ` is a
//! Haar-uniform orthogonal matrix. The crate computes the (ℓ₁, ℓ₂)
//! K-functional machinery that calibrates the tails of `S`, runs
//! reproducible Monte Carlo over several comparison series (Gaussian,
//! truncated Gaussian, scalar sign surrogate), and verifies the two-sided
//! tail formula and its norm-equivalence corollaries as empirical checks
//! with fitted constants.
//!
//! Modules follow the pipeline: [`sequences`] (scalar norms and
//! K-functionals), [`matrices`] (singular values, Schatten norms, block
//! lists), [`sampling`] (deterministic substreams and random matrices),
//! [`series`] (Monte Carlo), [`ri_norms`] (Orlicz/Lorentz norms of sample
//! laws), [`verify`] (scenario checks and reports), and [`cli`].

pub mod cli;
pub mod error;
pub mod matrices;
pub mod ri_norms;
pub mod sampling;
pub mod sequences;
pub mod series;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
