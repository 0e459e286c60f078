//! Density-based clustering with a build-once, query-many cluster ordering.
//!
//! The ordering is generated for a pair `(epsilon, MinPts)` and then answers
//! exact clusterings for any `epsilon* <= epsilon` or `MinPts* >= MinPts`
//! without starting from scratch. Reference DBSCAN and OPTICS implementations
//! live alongside it as oracles and accuracy baselines.
//!
//! ```
//! use std::sync::Arc;
//! use finex_core::{finex_build, epsilon_star_query, Backend, Dataset, NeighborProvider};
//!
//! let data = Arc::new(Dataset::from_vectors(vec![vec![0.0, 0.0], vec![0.1, 0.0], vec![5.0, 5.0]])?);
//! let provider = NeighborProvider::build(Arc::clone(&data), 1.0, Backend::KdTree)?;
//! let index = finex_build(&provider, 1.0, 2)?;
//! let clustering = epsilon_star_query(&index, &provider, 0.5)?;
//! assert_eq!(clustering.labeling.num_clusters(), 1);
//! # Ok::<(), finex_core::Error>(())
//! ```

pub mod baseline;
pub mod error;
pub mod extract;
pub mod finex;
pub mod io;
pub mod model;
pub mod neighbors;
pub mod pqueue;
pub mod queries;
pub mod validate;

pub use baseline::{dbscan_exact, optics_build, ClusterOrdering, Flavor, IndexEntry, SeedOrder};
pub use error::{Error, Result};
pub use extract::{border_recall, query_clustering, scan_ordering, ApproxScan};
pub use finex::{finex_build, BuildReport, FinexIndex};
pub use model::{Dataset, GeneratingParams, Labeling, Metric, ObjectId, RecordMap, TokenSet};
pub use neighbors::{Backend, NeighborProvider, Neighborhood};
pub use queries::{
    compute_core_clustering, enclosing_cluster_map, epsilon_star_query, minpts_star_query, QueryOutcome,
    QueryStats,
};
