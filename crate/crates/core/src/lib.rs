//! Locality-sensitive hashing for generalized Jensen-Shannon divergence,
//! triangular discrimination and mutual-information loss.
//!
//! The [`scheme`] module holds the interchangeable hashing strategies and
//! their registry; [`index`] builds and queries approximate k-NN indexes over
//! any of them.

// NaN must fail parameter checks, so the negated forms are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod band;
pub mod bounds;
pub mod divergence;
pub mod error;
pub mod index;
pub mod krein;
pub mod lsh_l2;
pub mod numeric;
pub mod persist;
pub mod prob;
pub mod quadrature;
pub mod rng;
pub mod scheme;
pub mod srp;

pub use divergence::DivergenceKind;
pub use error::{Error, Result};
pub use index::{brute_force, evaluate, AnnIndex, BenchRecord, QueryReport};
pub use prob::{FeatureColumn, JointDist, ProbVec};
pub use scheme::{Dataset, IndexConfig, Point, Scheme, SchemeRegistry};
pub use srp::Direction;
