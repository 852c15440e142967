//! Exact computation of the radius of convergence of p-adic linear
//! differential systems dy/dT = G y on disks and annuli.
//!
//! Everything is carried in exact rational arithmetic over an Eisenstein
//! extension Q(pi), pi^e = u*p. Norms appear in additive valuation form
//! v(x) = -log_p |x| and radii in log form t = -log_p rho, so statements
//! about log-concave radius functions become statements about convex
//! piecewise-linear functions of t with exactly representable slopes.
//!
//! The main entry points:
//! - [`field`]: the coefficient field and its exact valuation.
//! - [`laurent`]: Laurent polynomials, Gauss valuations, Newton polygons,
//!   covering substitutions.
//! - [`diffsys`]: systems dy/dT = G y, the iterated matrices G_[n],
//!   companion systems of delta-operators, domain-aware pullbacks.
//! - [`radius`]: convergence-radius enclosures (heuristic estimate plus a
//!   certified bound from the effective growth estimate), transfer checks.
//! - [`profile`]: piecewise-linear convergence profiles along a segment of
//!   Gauss points, concavity verification, side decomposition.
//! - [`explorer`]: recursive residue-disk exploration producing a
//!   controlling graph, with JSON/CSV serialization.
//! - [`oracle`]: independent cross-check solvers (Taylor recurrences,
//!   Young's formula, seeded random systems).
//! - [`expr`] / [`config`] / [`cli`]: expression parsing, job configuration
//!   and the command-line driver.

// pub mod cli;
// pub mod config;
pub mod diffsys;
pub mod error;
// pub mod explorer;
// pub mod expr;
pub mod field;
pub mod laurent;
pub mod oracle;
pub mod profile;
pub mod radius;

pub use error::{Error, Result};
pub use field::{FieldElem, PrimeConfig, Rat, Val};
pub use laurent::{LaurentPoly, LogRadius, RatFunc, SubstMap, TEnd};
