//! Reduced Kähler–Ricci flow on horosymmetric Fano manifolds.
//!
//! The core is generic over the scalar type through [`Real`]; the aliases at
//! the bottom of this file fix `f64`, which is what the CLI uses.

// `!(a < b)` is deliberate throughout: NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod flow;
pub mod functionals;
pub mod linalg;
pub mod polytope;
pub mod quadrature;
pub mod real;
pub mod root_datum;
pub mod soliton;

pub use error::{Error, Result};
pub use real::{Field, Real};
pub use root_datum::{build_classical_roots, DerivedRoots, RootDatum, RootFamily};

pub type Matrix64 = linalg::Matrix<f64>;
pub type RootDatum64 = RootDatum<f64>;
pub type DerivedRoots64 = DerivedRoots<f64>;
pub type Polytope64 = polytope::Polytope<f64>;
pub type Ellipsoid64 = polytope::Ellipsoid<f64>;
pub type WeightedPolytope64 = quadrature::WeightedPolytope<f64>;
pub type SolitonReport64 = soliton::SolitonReport<f64>;
