//! Harmonic measure and Dirichlet problems on compact sets built from balls.
//!
//! The library represents a compact set `K` (closed outer ball minus disjoint
//! open balls), approximates its harmonic measure by running walk-on-spheres
//! over a shrinking schedule of neighborhoods, certifies the output through
//! sub-averaging and maximality checks, classifies fine boundary points with
//! a capacity series, solves boundary value problems from continuous data,
//! and brackets sub-envelope values through a pair of linear programs.
//!
//! The numeric core is generic over the scalar type; the aliases below fix
//! `f64`, which everything user-facing uses.

// `!(x > y)` guards are deliberate: they must stay true for NaN so invalid
// inputs fail closed; a `<=` rewrite would accept NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod dirichlet;
pub mod domain;
pub mod edwards;
pub mod fineboundary;
pub mod geom;
pub mod jensen;
pub mod measure;
pub mod rng;
pub mod scalar;
pub mod scene;
pub mod simplex;
pub mod wos;

pub use scalar::{lit, SampleScalar, Scalar};

/// Scalar type used by the command-line tools and the acceptance suite.
pub type Real = f64;
/// Point in ambient space.
pub type Point = Vec<Real>;
pub type Scene = scene::BallScene<Real>;
pub type Domain = domain::Domain<Real>;
pub type Measure = measure::EmpiricalMeasure<Real>;
pub type TestFunction = jensen::TestFunction<Real>;
