//! Linear-time cluster extraction from a cluster ordering, and the border
//! recall measure used to compare approximate clusterings.

use std::ops::Range;

use crate::baseline::ClusterOrdering;
use crate::error::{Error, Result};
use crate::model::{Labeling, ObjectId};

/// Result of one left-to-right scan at `epsilon*`.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxScan {
    /// Slot span (first member to last member) of each approximate cluster,
    /// in ordering order. Cluster `i` of `labeling` spans `segments[i]`.
    pub segments: Vec<Range<usize>>,
    pub labeling: Labeling,
}

pub(crate) fn check_epsilon_star(ordering: &ClusterOrdering, epsilon_star: f64) -> Result<()> {
    let params = ordering.params();
    if epsilon_star.is_nan() || epsilon_star < 0.0 || epsilon_star > params.epsilon {
        return Err(Error::EpsilonOutOfRange {
            requested: epsilon_star,
            epsilon: params.epsilon,
            min_pts: params.min_pts,
        });
    }
    Ok(())
}

/// Scans the ordering once: an object whose reachability exceeds `epsilon*`
/// opens a new cluster if it is an `epsilon*`-core and is noise otherwise;
/// every other object joins the most recently opened cluster. No distances
/// are computed.
pub fn scan_ordering(ordering: &ClusterOrdering, epsilon_star: f64) -> Result<ApproxScan> {
    check_epsilon_star(ordering, epsilon_star)?;
    let n = ordering.len();
    let mut labels: Vec<Option<u32>> = vec![None; n];
    let mut core = vec![false; n];
    let mut segments: Vec<Range<usize>> = Vec::new();
    for (slot, e) in ordering.entries().iter().enumerate() {
        let i = e.object.index();
        let is_core = e.core_distance <= epsilon_star;
        if e.reachability > epsilon_star {
            if is_core {
                segments.push(slot..slot + 1);
            } else {
                // noise; the current cluster stays open
                continue;
            }
        } else if let Some(current) = segments.last_mut() {
            current.end = slot + 1;
        } else {
            // Reachable within epsilon* before any cluster was opened; the
            // object that reached it would have opened one, so this never
            // happens on a well-formed ordering.
            continue;
        }
        labels[i] = Some(segments.len() as u32 - 1);
        core[i] = is_core;
    }
    let labeling = Labeling::new(labels, core, segments.len());
    Ok(ApproxScan { segments, labeling })
}

/// The approximate clustering of `ordering` at `epsilon*`.
pub fn query_clustering(ordering: &ClusterOrdering, epsilon_star: f64) -> Result<Labeling> {
    scan_ordering(ordering, epsilon_star).map(|s| s.labeling)
}

/// Fraction of `exact`'s border objects (clustered, non-core) that `approx`
/// places in some cluster. 1.0 when there are no border objects.
pub fn border_recall(approx: &Labeling, exact: &Labeling) -> Result<f64> {
    if approx.len() != exact.len() {
        return Err(Error::LabelingMismatch {
            left: approx.len(),
            right: exact.len(),
        });
    }
    let (mut borders, mut hits) = (0usize, 0usize);
    for i in 0..exact.len() {
        let id = ObjectId::from_index(i);
        if exact.label(id).is_some() && !exact.is_core(id) {
            borders += 1;
            if approx.label(id).is_some() {
                hits += 1;
            }
        }
    }
    Ok(if borders == 0 {
        1.0
    } else {
        hits as f64 / borders as f64
    })
}
