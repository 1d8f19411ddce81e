//! The three plan composers: online tree search, distributed multi-origin
//! search with strategic connections, and preplan graph build + inference.

pub mod distributed;
pub mod online;
pub mod preplan;

pub use distributed::{run_distributed_composer, try_connect, DcConfig, DcReport};
pub use online::{run_online_composer, run_online_composer_with_target, OcConfig, OcReport};
pub use preplan::{
    build_plan_graph, run_preplan_inference, PcBuildConfig, PcInferConfig, PcReport,
};

/// Default stitching threshold: half a cell. The reference value of 1.0
/// world units corresponds to coarser grids; desk-scale mazes use unit cells.
pub fn default_eps_stitch(cell_size: f64) -> f64 {
    0.5 * cell_size
}
