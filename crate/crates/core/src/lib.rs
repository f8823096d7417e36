pub mod branching;
pub mod dimension;
pub mod error;
pub mod estimators;
pub mod graph;
pub mod inequalities;
pub mod mc;
pub mod oracle;
pub mod records;
pub mod sampler;
pub mod stats;

pub use error::{PercolabError, Result};
pub use graph::{EdgeKey, EdgeKind, Family, Fiber, GraphSpec, SiteId, SlabWindow, TreeVertex};
pub use mc::McConfig;
pub use inequalities::{CheckReport, Tolerance, Verdict};
pub use oracle::Instance;
pub use records::{EstimateRecord, SeriesRecord};
pub use stats::{LinearFit, Mean};
