//! Generator coherency grouping and grid integrity indices.
//!
//! Pairwise coupling between generators is measured either by the synchronization
//! coefficient (from a network and one snapshot of rotor angles) or by the correlation of
//! recent angle trajectories. Generators are grouped by greedy modularity clustering of that
//! matrix, and the grouped matrix yields three scalar indices that track how tightly the grid
//! is holding together. A classical swing-equation simulator produces test trajectories.

pub mod clustering;
pub mod coherency;
pub mod error;
pub mod indices;
pub mod model;
pub mod pipeline;
pub mod swingsim;

pub use error::{Error, Result};
