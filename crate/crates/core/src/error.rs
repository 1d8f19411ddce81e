use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("maze parse error: {0}")]
    MazeParse(String),

    #[error("no task satisfying the separation constraint after {attempts} attempts")]
    TaskSampling { attempts: usize },

    #[error("stitch junction mismatch: parent ends at ({px}, {py}), child starts at ({cx}, {cy})")]
    JunctionMismatch { px: f64, py: f64, cx: f64, cy: f64 },

    #[error("plan text parse error: {0}")]
    PlanParse(String),

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("graph edge endpoint contract violated: {0}")]
    EdgeEndpoint(String),

    #[error("graph synthesis junction gap {gap} exceeds eps_stitch {eps}")]
    JunctionGap { gap: f64, eps: f64 },

    #[error("graph codec: unsupported format version {found} (expected {expected})")]
    CodecVersion { found: String, expected: u32 },

    #[error("graph codec: malformed document: {0}")]
    CodecMalformed(String),

    #[error("graph was built for a different maze (hash {graph} vs {maze})")]
    MazeHashMismatch { graph: String, maze: String },

    #[error("k-means requires at least k points (got {points} points for k = {k})")]
    TooFewPoints { points: usize, k: usize },

    #[error("search tree is saturated: no expandable node")]
    TreeSaturated,

    #[error("node {0} cannot be expanded: {1}")]
    NodeNotExpandable(usize, String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid task: {0}")]
    InvalidTask(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
