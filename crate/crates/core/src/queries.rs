//! Exact queries against a FINEX index: `epsilon* <= epsilon` and
//! `MinPts* >= MinPts`.

use std::collections::HashSet;
use std::time::Instant;

use crate::baseline::ClusterOrdering;
use crate::error::{Error, Result};
use crate::extract::scan_ordering;
use crate::finex::FinexIndex;
use crate::model::{Labeling, ObjectId};
use crate::neighbors::NeighborProvider;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct QueryStats {
    pub distance_computations: u64,
    pub range_queries: u64,
    /// Noise-labeled former cores considered for a cluster.
    pub candidates: u64,
    /// Candidates that were verified and added.
    pub candidates_added: u64,
    pub millis: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryOutcome {
    pub labeling: Labeling,
    pub stats: QueryStats,
}

/// The exact cluster id (w.r.t. the generating pair) of every ordering slot,
/// obtained from a single scan at `epsilon* = epsilon`.
pub fn enclosing_cluster_map(ordering: &ClusterOrdering) -> Result<Vec<Option<u32>>> {
    let scan = scan_ordering(ordering, ordering.params().epsilon)?;
    Ok(ordering
        .entries()
        .iter()
        .map(|e| scan.labeling.label(e.object))
        .collect())
}

fn check_provider(index: &FinexIndex, provider: &NeighborProvider) -> Result<()> {
    index.check_dataset(provider.data())
}

/// Exact clustering w.r.t. `(epsilon*, MinPts)`.
///
/// The linear scan already places every core and every non-core border
/// correctly; only former cores (`epsilon* < C <= epsilon`) labeled noise can
/// be missing. Each such candidate is tested against the clusters that start
/// after it inside the same generating-epsilon cluster, in ordering order,
/// and joins the first one holding an `epsilon*`-core within `epsilon*`.
pub fn epsilon_star_query(
    index: &FinexIndex,
    provider: &NeighborProvider,
    epsilon_star: f64,
) -> Result<QueryOutcome> {
    let started = Instant::now();
    check_provider(index, provider)?;
    let ordering = index.ordering();
    let epsilon = ordering.params().epsilon;
    let scan = scan_ordering(ordering, epsilon_star)?;
    let mut stats = QueryStats::default();
    let data = provider.data();

    let (mut labels, core) = {
        let l = &scan.labeling;
        (l.labels().to_vec(), l.core_flags().to_vec())
    };

    if epsilon_star < epsilon {
        let enclosing = enclosing_cluster_map(ordering)?;
        let entries = ordering.entries();

        // approximate clusters grouped by their enclosing cluster, ascending start
        let enclosing_clusters = enclosing
            .iter()
            .flatten()
            .map(|&e| e as usize + 1)
            .max()
            .unwrap_or(0);
        let mut by_enclosing: Vec<Vec<usize>> = vec![Vec::new(); enclosing_clusters];
        for (k, seg) in scan.segments.iter().enumerate() {
            let e = enclosing[seg.start].expect("an epsilon*-core is an epsilon-core");
            by_enclosing[e as usize].push(k);
        }
        let mut cores_of: Vec<Vec<ObjectId>> = vec![Vec::new(); scan.segments.len()];
        for e in entries {
            if let Some(k) = scan.labeling.label(e.object) {
                if scan.labeling.is_core(e.object) {
                    cores_of[k as usize].push(e.object);
                }
            }
        }

        for (slot, e) in entries.iter().enumerate() {
            let o = e.object;
            if labels[o.index()].is_some() || !(e.core_distance > epsilon_star && e.core_distance <= epsilon)
            {
                continue;
            }
            let Some(enc) = enclosing[slot] else { continue };
            let eligible = by_enclosing[enc as usize]
                .iter()
                .copied()
                .filter(|&k| scan.segments[k].start > slot);
            let mut counted = false;
            for k in eligible {
                if !counted {
                    stats.candidates += 1;
                    counted = true;
                }
                let mut found = false;
                for &c in &cores_of[k] {
                    stats.distance_computations += 1;
                    if data.distance(o, c) <= epsilon_star {
                        found = true;
                        break;
                    }
                }
                if found {
                    labels[o.index()] = Some(k as u32);
                    stats.candidates_added += 1;
                    break;
                }
            }
        }
    }

    stats.millis = started.elapsed().as_secs_f64() * 1e3;
    let labeling = Labeling::new(labels, core, scan.segments.len());
    Ok(QueryOutcome { labeling, stats })
}

/// Density-connected components among `cores` (edges: distance <= epsilon).
/// Neighborhoods are intersected with the shrinking set of unassigned cores.
#[derive(Clone, Debug, PartialEq)]
pub struct CoreClustering {
    pub components: Vec<Vec<ObjectId>>,
    pub range_queries: u64,
    pub distance_computations: u64,
}

pub fn compute_core_clustering(
    cores: &[ObjectId],
    provider: &NeighborProvider,
    epsilon: f64,
) -> Result<CoreClustering> {
    let mut remaining: HashSet<ObjectId> = cores.iter().copied().collect();
    let mut out = CoreClustering {
        components: Vec::new(),
        range_queries: 0,
        distance_computations: 0,
    };
    let mut stack: Vec<ObjectId> = Vec::new();
    for &x in cores {
        if !remaining.remove(&x) {
            continue;
        }
        let mut component = Vec::new();
        stack.push(x);
        while let Some(y) = stack.pop() {
            component.push(y);
            let nb = provider.range_query(y, epsilon)?;
            out.range_queries += 1;
            out.distance_computations += nb.distance_computations();
            for z in nb.ids() {
                if remaining.remove(&z) {
                    stack.push(z);
                }
            }
        }
        component.sort_unstable();
        out.components.push(component);
    }
    Ok(out)
}

/// Exact clustering w.r.t. `(epsilon, MinPts*)`.
///
/// Noise at the generating pair stays noise. Inside every exact cluster the
/// objects with `N >= MinPts*` are the new cores; they are regrouped only
/// when the cluster lost a core. Every other member follows its finder
/// reference if that reference is still a core, and becomes noise otherwise.
pub fn minpts_star_query(
    index: &FinexIndex,
    provider: &NeighborProvider,
    min_pts_star: u64,
) -> Result<QueryOutcome> {
    let started = Instant::now();
    check_provider(index, provider)?;
    let ordering = index.ordering();
    let params = ordering.params();
    if min_pts_star < params.min_pts {
        return Err(Error::MinPtsOutOfRange {
            requested: min_pts_star,
            epsilon: params.epsilon,
            min_pts: params.min_pts,
        });
    }
    if provider.epsilon() < params.epsilon {
        return Err(Error::RadiusExceedsEpsilon {
            radius: params.epsilon,
            epsilon: provider.epsilon(),
        });
    }
    let mut stats = QueryStats::default();
    let sparse = scan_ordering(ordering, params.epsilon)?;
    let entries = ordering.entries();
    let n = ordering.len();

    let mut dense_of: Vec<Option<u32>> = vec![None; n];
    let mut dense_clusters = 0u32;
    let mut members_of: Vec<Vec<ObjectId>> = vec![Vec::new(); sparse.segments.len()];
    for e in entries {
        if let Some(k) = sparse.labeling.label(e.object) {
            members_of[k as usize].push(e.object);
        }
    }

    for members in &members_of {
        let mut cores = Vec::new();
        let mut demoted = false;
        for &o in members {
            let size = ordering.entry(o).neighborhood_size;
            if size >= min_pts_star {
                cores.push(o);
            } else if size >= params.min_pts {
                demoted = true;
            }
        }
        if cores.is_empty() {
            continue;
        }
        let components = if demoted {
            let cc = compute_core_clustering(&cores, provider, params.epsilon)?;
            stats.range_queries += cc.range_queries;
            stats.distance_computations += cc.distance_computations;
            cc.components
        } else {
            vec![cores]
        };
        for component in components {
            for o in component {
                dense_of[o.index()] = Some(dense_clusters);
            }
            dense_clusters += 1;
        }
    }

    let mut labels: Vec<Option<u32>> = vec![None; n];
    let mut core = vec![false; n];
    for members in &members_of {
        for &o in members {
            let i = o.index();
            if dense_of[i].is_some() {
                labels[i] = dense_of[i];
                core[i] = true;
                continue;
            }
            let finder = ordering.entry(o).finder;
            if ordering.entry(finder).neighborhood_size >= min_pts_star {
                labels[i] = dense_of[finder.index()];
            }
        }
    }

    stats.millis = started.elapsed().as_secs_f64() * 1e3;
    Ok(QueryOutcome {
        labeling: Labeling::new(labels, core, dense_clusters as usize),
        stats,
    })
}
