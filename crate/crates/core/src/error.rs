use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown fixture `{0}` (expected disk1d, bidisk, disk_x_segment or two_disks)")]
    UnknownFixture(String),

    #[error("resolution {0} outside (0, 0.5]")]
    ResolutionOutOfRange(f64),

    #[error("invalid point set: {0}")]
    InvalidPointSet(String),

    #[error("nodes {first} and {second} coincide within spacing/10")]
    DuplicateNode { first: usize, second: usize },

    #[error("mask has {found} entries, grid has {expected} nodes")]
    MaskLength { expected: usize, found: usize },

    #[error("node index {index} out of range for {len} nodes")]
    NodeOutOfRange { index: usize, len: usize },

    #[error("cone count {count} below the mandatory member count {required}")]
    ConeCountTooSmall { count: usize, required: usize },

    #[error("cone degree cap must be at least 1")]
    DegreeCapTooSmall,

    #[error("empty support for Jensen polytope at node {node}")]
    EmptySupport { node: usize },

    #[error("Jensen polytope at node {node} is infeasible (phase-one residual {residual:.3e})")]
    Infeasible { node: usize, residual: f64 },

    #[error("boundary polytope at node {node} is infeasible; cone or grid too coarse (residual {residual:.3e})")]
    DiscretizationFailure { node: usize, residual: f64 },

    #[error("no peak points detected; the discretization contradicts nonemptiness of the peak set")]
    EmptyPeakSet,

    #[error("set is not O-regular at this resolution ({extra} closure nodes outside the peak set)")]
    NotORegular { extra: usize },

    #[error("peak function at boundary node {node} did not converge")]
    PeakFunctionFailure { node: usize },

    #[error("simplex iteration limit reached after {iterations} iterations")]
    IterationLimit { iterations: usize },

    #[error("simplex basis became singular")]
    SingularBasis,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("disc image strays {distance:.3e} from the grid (allowed {allowed:.3e})")]
    DiscOutsideSet { distance: f64, allowed: f64 },

    #[error("boundary sample count {0} must be a power of two and at least 256")]
    SampleCount(usize),

    #[error("self-map must fix the origin (|g(0)| = {0:.3e})")]
    SelfMapMovesOrigin(f64),

    #[error("self-map leaves the closed disc (sup |g| = {0:.6})")]
    SelfMapTooLarge(f64),

    #[error("grid function has {found} values, grid has {expected} nodes")]
    FunctionLength { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
