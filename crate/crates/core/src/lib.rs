//! Toolkit for locally dependent random systems.
//!
//! A family of random variables is *locally* dependent when each variable is
//! independent of everything outside a small neighborhood: neighborhoods may
//! be declared directly ([`depstruct::Ld1Neighborhoods`]), through a
//! dependency graph ([`depstruct::DependencyGraph`]), or by exhibiting each
//! variable as a function of a few shared independent sources
//! ([`depstruct::HyperDependence`]). This crate turns such declarations into
//! quantitative tail bounds and checks them:
//!
//! * [`depstruct`]: the three structure declarations and the reductions
//!   between them (derived graphs, source-block grouping, `(k, l)` usage
//!   parameters).
//! * [`covers`]: proper and fractional covers of a dependency graph by
//!   independent sets, including the exact rational fractional chromatic
//!   number and weight-preserving exactification.
//! * [`selfbound`]: brute-force certification of self-bounding properties
//!   for functions tabulated on finite product domains, with Talagrand
//!   convex-distance helpers.
//! * [`bounds`]: closed-form tail and moment-generating-function bounds
//!   driven by cover sizes, `(k, l)` parameters, and self-bounding
//!   certificates.
//! * [`ensembles`]: small seedable random ensembles whose dependence
//!   structures are declared alongside their samplers.
//! * [`montecarlo`]: deterministic Monte Carlo estimation of tails, MGFs,
//!   and eigenvalue deviations, with exact binomial confidence intervals and
//!   bound-versus-estimate verdicts.
//! * [`experiment`]: file-level orchestration, a JSON experiment
//!   configuration in and CSV/JSON reports out.
//!
//! All randomness flows through explicit 64-bit seeds with per-replica
//! substreams, so every result in this crate is reproducible byte for byte.

pub mod bounds;
pub mod covers;
pub mod depstruct;
pub mod ensembles;
pub mod experiment;
pub mod montecarlo;
pub mod rational;
pub mod selfbound;

mod eigen;
mod lp;

pub use bounds::BoundCurve;
pub use covers::FractionalCover;
pub use depstruct::{DependencyGraph, HdParams, HyperDependence, Ld1Neighborhoods};
pub use ensembles::{Ensemble, Realization, Statistic};
pub use experiment::ExperimentConfig;
pub use montecarlo::{ComplexMatrix, SimulationReport, SymMatrix};
pub use rational::Rational;
pub use selfbound::{CertificateReport, TabulatedFunction, Variant};
