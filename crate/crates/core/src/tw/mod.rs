//! Traveling-wave connections: manifold integration, the connection-finding
//! algorithms, and the sweep that assembles the undercompressive surface.

pub mod connection;
pub mod manifold;
pub mod sweep;

pub use connection::{
    connection_search, connection_search_near, difference_vector, verify_connection, difference_vector_auto, find_boundary_point, find_saddle_saddle, find_saddle_saddlenode, CharCondition,
    ConnectionOptions, DifferenceVector, FieldSpec, SearchOptions,
};
pub use manifold::{integrate_manifold, manifold_direction, ManifoldKind, ManifoldLimits, Orbit, SotomayorLine, Terminal};
pub use sweep::{boundary_tag, seed_near_line, sweep_near_line, sweep_uc_region, NumericBoundaryPoint, SweepNode, SweepOptions, UCSurfaceNumeric};
