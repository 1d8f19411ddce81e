//! Compositional plan search over 2-D occupancy-grid mazes.
//!
//! Long goal-reaching trajectories are composed out of short proposer-drawn
//! plans. Three composers share one evaluation substrate:
//!
//! - **Online composer** — plan-level tree search with stitching expansion,
//!   guidance-set meta-actions, and fast-replanning simulation.
//! - **Distributed composer** — parallel trees from waypoint origins,
//!   strategic connections into a connectivity graph, shortest-path
//!   synthesis under the episode-length constraint.
//! - **Preplan composer** — offline all-pairs plan graph, then fast
//!   inference that only plans short local connections per query.
//!
//! The trajectory proposer is guided shooting behind a narrow interface;
//! everything above it is proposer-agnostic. All operations are
//! deterministic given a seed: every stochastic draw comes from a stream
//! derived from `(master seed, tree id, node id, candidate index)`.

pub mod bench;
pub mod cache;
pub mod composer;
pub mod config;
pub mod error;
pub mod graph;
pub mod maze;
pub mod plan;
pub mod proposer;
pub mod render;
pub mod rng;
pub mod tree;
pub mod waypoints;

pub use error::{Error, Result};
