//! Systoles, areas, polar bodies and stable norms of Finsler two-tori.

pub mod convex2d;
pub mod error;
pub mod flat_finsler;
pub mod geom;
pub mod lattice;
pub mod par;
pub mod periodic;
pub mod polygon_reduce;
pub mod svg;
pub mod verify;

pub use convex2d::ConvexBody;
pub use error::{Error, Result};
pub use flat_finsler::{AreaKind, FlatFinslerTorus};
pub use geom::{IVec2, Vec2};
pub use lattice::Lattice2;
pub use par::Execution;
pub use periodic::{MetricField, PeriodicTorus};
