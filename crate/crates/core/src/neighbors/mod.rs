//! Range-query backends and the density primitives built on top of them:
//! MinPts-distance, core distance and reachability distance.

mod inverted;
mod kdtree;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{check_epsilon, Dataset, Metric, ObjectId};

pub use inverted::all_neighborhoods;
pub use kdtree::KdTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Backend {
    BruteForce,
    SetInvertedList,
    KdTree,
    ExplicitMatrix,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::BruteForce => "brute-force",
            Backend::SetInvertedList => "inverted-list",
            Backend::KdTree => "kd-tree",
            Backend::ExplicitMatrix => "matrix",
        }
    }

    /// The specialised backend for a metric.
    pub fn default_for(metric: Metric) -> Self {
        match metric {
            Metric::Jaccard => Backend::SetInvertedList,
            Metric::Euclidean => Backend::KdTree,
            Metric::ExplicitMatrix => Backend::ExplicitMatrix,
        }
    }

    pub fn supports(self, metric: Metric) -> bool {
        matches!(
            (self, metric),
            (Backend::BruteForce, _)
                | (Backend::SetInvertedList, Metric::Jaccard)
                | (Backend::KdTree, Metric::Euclidean)
                | (Backend::ExplicitMatrix, Metric::ExplicitMatrix)
        )
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brute-force" | "brute" => Ok(Backend::BruteForce),
            "inverted-list" | "inverted" => Ok(Backend::SetInvertedList),
            "kd-tree" | "kdtree" => Ok(Backend::KdTree),
            "matrix" => Ok(Backend::ExplicitMatrix),
            other => Err(Error::InvalidParameter(format!("unknown backend {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub id: ObjectId,
    pub distance: f64,
}

/// The objects within some radius of a query object, in ascending id order.
/// `size` is duplicate-weighted and always counts the query object itself.
#[derive(Clone, Debug, PartialEq)]
pub struct Neighborhood {
    entries: Vec<Neighbor>,
    size: u64,
    distance_computations: u64,
}

impl Neighborhood {
    pub fn entries(&self) -> &[Neighbor] {
        &self.entries
    }

    pub fn ids(&self) -> impl Iterator<Item = ObjectId> + '_ {
        self.entries.iter().map(|e| e.id)
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distance evaluations spent answering this query.
    pub fn distance_computations(&self) -> u64 {
        self.distance_computations
    }

    /// Smallest radius at which the weighted neighborhood reaches `min_pts`,
    /// or infinity if it never does within this neighborhood.
    pub fn min_pts_distance(&self, data: &Dataset, min_pts: u64) -> f64 {
        if self.size < min_pts {
            return f64::INFINITY;
        }
        let mut by_distance: Vec<(f64, u64)> = self
            .entries
            .iter()
            .map(|e| (e.distance, data.weight(e.id)))
            .collect();
        by_distance.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = 0u64;
        for (d, w) in by_distance {
            acc += w;
            if acc >= min_pts {
                return d;
            }
        }
        f64::INFINITY
    }

    /// Core distance w.r.t. the radius this neighborhood was queried with.
    pub fn core_distance(&self, data: &Dataset, min_pts: u64) -> f64 {
        if self.size >= min_pts {
            self.min_pts_distance(data, min_pts)
        } else {
            f64::INFINITY
        }
    }
}

enum Index {
    Scan,
    Materialized(Vec<Vec<Neighbor>>),
    Tree(KdTree),
}

/// Answers exact range queries over a dataset for any radius up to the
/// epsilon it was built for. Immutable after construction.
pub struct NeighborProvider {
    data: Arc<Dataset>,
    epsilon: f64,
    backend: Backend,
    index: Index,
    build_distance_computations: u64,
}

impl fmt::Debug for NeighborProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NeighborProvider")
            .field("n", &self.data.len())
            .field("epsilon", &self.epsilon)
            .field("backend", &self.backend)
            .finish()
    }
}

impl NeighborProvider {
    pub fn build(data: Arc<Dataset>, epsilon: f64, backend: Backend) -> Result<Self> {
        check_epsilon(epsilon)?;
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let metric = data.metric();
        if !backend.supports(metric) {
            return Err(Error::IncompatibleBackend {
                backend: backend.name(),
                metric: metric.name(),
            });
        }
        let (index, build_distance_computations) = match backend {
            Backend::BruteForce | Backend::ExplicitMatrix => (Index::Scan, 0),
            Backend::SetInvertedList => {
                let (lists, count) = all_neighborhoods(&data, epsilon)?;
                (Index::Materialized(lists), count)
            }
            Backend::KdTree => (Index::Tree(KdTree::build(&data)?), 0),
        };
        Ok(NeighborProvider {
            data,
            epsilon,
            backend,
            index,
            build_distance_computations,
        })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn shared_data(&self) -> Arc<Dataset> {
        Arc::clone(&self.data)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Distance evaluations spent materializing neighborhoods at build time.
    pub fn build_distance_computations(&self) -> u64 {
        self.build_distance_computations
    }

    /// All objects within `radius` of `p` (inclusive).
    pub fn range_query(&self, p: ObjectId, radius: f64) -> Result<Neighborhood> {
        if radius.is_nan() || radius > self.epsilon {
            return Err(Error::RadiusExceedsEpsilon {
                radius,
                epsilon: self.epsilon,
            });
        }
        let n = self.data.len();
        if p.index() >= n {
            return Err(Error::IdOutOfRange { id: p.index(), n });
        }
        let data = &*self.data;
        let (entries, computations) = match &self.index {
            Index::Scan => {
                let entries: Vec<Neighbor> = data
                    .ids()
                    .filter_map(|q| {
                        let distance = data.distance(p, q);
                        (distance <= radius).then_some(Neighbor { id: q, distance })
                    })
                    .collect();
                (entries, n as u64)
            }
            Index::Materialized(lists) => {
                let entries = lists[p.index()]
                    .iter()
                    .filter(|e| e.distance <= radius)
                    .copied()
                    .collect();
                (entries, 0)
            }
            Index::Tree(tree) => {
                let mut entries = Vec::new();
                let computations = tree.range(data, p, radius, &mut entries);
                entries.sort_unstable_by_key(|e| e.id);
                (entries, computations)
            }
        };
        let size = entries.iter().map(|e| data.weight(e.id)).sum();
        Ok(Neighborhood {
            entries,
            size,
            distance_computations: computations,
        })
    }

    /// `M(p)`: the smallest dataset distance at which `p`'s weighted
    /// neighborhood holds `min_pts` objects; infinity if that radius exceeds
    /// the build epsilon.
    pub fn min_pts_distance(&self, p: ObjectId, min_pts: u64) -> Result<f64> {
        check_min_pts(min_pts)?;
        Ok(self
            .range_query(p, self.epsilon)?
            .min_pts_distance(&self.data, min_pts))
    }

    pub fn core_distance(&self, p: ObjectId, epsilon: f64, min_pts: u64) -> Result<f64> {
        check_min_pts(min_pts)?;
        Ok(self.range_query(p, epsilon)?.core_distance(&self.data, min_pts))
    }

    /// `R(q, p)`: `max(C(p), d(p, q))` if `p` is core, infinity otherwise.
    /// In general `R(q, p) != R(p, q)`.
    pub fn reachability_distance(&self, q: ObjectId, p: ObjectId, epsilon: f64, min_pts: u64) -> Result<f64> {
        let core = self.core_distance(p, epsilon, min_pts)?;
        if core.is_infinite() {
            return Ok(f64::INFINITY);
        }
        Ok(core.max(self.data.try_distance(p, q)?))
    }
}

fn check_min_pts(min_pts: u64) -> Result<()> {
    if min_pts == 0 {
        return Err(Error::InvalidParameter("MinPts must be at least 1".into()));
    }
    Ok(())
}
