//! Non-flat Z²-periodic Finsler metrics on the plane and their quotient tori.

pub mod expr;
pub mod field;
pub mod graph;
pub mod torus;

pub use expr::{Expr, ParseError};
pub use field::{curve_length, FieldSpec, MetricField};
pub use graph::{primitive_stencil, Anchor, GraphParams, PeriodicGraph};
pub use torus::{
    AreaEstimate, DiameterEstimate, DistanceEstimate, ErrorModel, PeriodicTorus,
    StableNormEstimate, StableNormValue,
};
