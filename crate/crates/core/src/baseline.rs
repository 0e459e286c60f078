//! Reference DBSCAN (the exact-clustering oracle) and the classic OPTICS
//! cluster ordering (the accuracy baseline), plus the ordering types shared
//! with the FINEX build.

use crate::error::{Error, Result};
use crate::model::{GeneratingParams, Labeling, ObjectId};
use crate::neighbors::{NeighborProvider, Neighborhood};
use crate::pqueue::StableQueue;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    Optics,
    Finex,
}

/// One position of a cluster ordering.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IndexEntry {
    pub object: ObjectId,
    /// 1-based position in the ordering.
    pub position: u64,
    pub core_distance: f64,
    pub reachability: f64,
    /// Duplicate-weighted size of the generating-epsilon neighborhood.
    pub neighborhood_size: u64,
    /// Densest core neighbor; the object itself for noise (and for OPTICS).
    pub finder: ObjectId,
}

impl IndexEntry {
    pub fn is_core(&self, epsilon: f64) -> bool {
        self.core_distance <= epsilon
    }
}

/// A permutation of the dataset annotated with per-object distances.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterOrdering {
    entries: Vec<IndexEntry>,
    // object id -> index into `entries`
    slot_of: Vec<u32>,
    params: GeneratingParams,
    flavor: Flavor,
}

impl ClusterOrdering {
    /// Validates that `entries` is a permutation with positions `1..=n`.
    pub fn new(entries: Vec<IndexEntry>, params: GeneratingParams, flavor: Flavor) -> Result<Self> {
        let n = entries.len();
        let mut slot_of = vec![u32::MAX; n];
        for (i, e) in entries.iter().enumerate() {
            let id = e.object.index();
            if id >= n {
                return Err(Error::CorruptIndex(format!("object id {id} out of range")));
            }
            if slot_of[id] != u32::MAX {
                return Err(Error::CorruptIndex(format!("object {id} appears twice")));
            }
            if e.position != i as u64 + 1 {
                return Err(Error::CorruptIndex(format!(
                    "entry {i} carries position {}",
                    e.position
                )));
            }
            if e.finder.index() >= n {
                return Err(Error::CorruptIndex(format!("finder of object {id} out of range")));
            }
            slot_of[id] = i as u32;
        }
        Ok(ClusterOrdering {
            entries,
            slot_of,
            params,
            flavor,
        })
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn params(&self) -> GeneratingParams {
        self.params
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn entry(&self, id: ObjectId) -> &IndexEntry {
        &self.entries[self.slot_of[id.index()] as usize]
    }

    /// 0-based slot of an object in the ordering.
    pub fn slot(&self, id: ObjectId) -> usize {
        self.slot_of[id.index()] as usize
    }

    pub fn core_count(&self) -> usize {
        let eps = self.params.epsilon;
        self.entries.iter().filter(|e| e.is_core(eps)).count()
    }
}

/// Order in which the outer loop of a build (or a DBSCAN scan) picks seeds.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum SeedOrder {
    /// Smallest unprocessed id first.
    #[default]
    Ascending,
    /// An explicit permutation of all ids.
    Custom(Vec<ObjectId>),
}

impl SeedOrder {
    pub(crate) fn resolve(&self, n: usize) -> Result<Vec<ObjectId>> {
        match self {
            SeedOrder::Ascending => Ok((0..n).map(ObjectId::from_index).collect()),
            SeedOrder::Custom(order) => {
                let mut seen = vec![false; n];
                for id in order {
                    if id.index() >= n || std::mem::replace(&mut seen[id.index()], true) {
                        return Err(Error::InvalidParameter(
                            "seed order is not a permutation of the dataset".into(),
                        ));
                    }
                }
                if order.len() != n {
                    return Err(Error::InvalidParameter(
                        "seed order is not a permutation of the dataset".into(),
                    ));
                }
                Ok(order.clone())
            }
        }
    }
}

pub(crate) fn check_query_radius(provider: &NeighborProvider, epsilon: f64, min_pts: u64) -> Result<()> {
    GeneratingParams::new(epsilon, min_pts)?;
    if epsilon > provider.epsilon() {
        return Err(Error::RadiusExceedsEpsilon {
            radius: epsilon,
            epsilon: provider.epsilon(),
        });
    }
    Ok(())
}

/// Exact DBSCAN clustering w.r.t. `(epsilon, min_pts)`.
///
/// Seeds are visited in `seed` order; an ambiguous border joins the first
/// cluster that reaches it.
pub fn dbscan_exact(
    provider: &NeighborProvider,
    epsilon: f64,
    min_pts: u64,
    seed: &SeedOrder,
) -> Result<Labeling> {
    dbscan_exact_counted(provider, epsilon, min_pts, seed).map(|(l, _)| l)
}

/// As [`dbscan_exact`], also returning the distance evaluations spent in
/// range queries.
pub fn dbscan_exact_counted(
    provider: &NeighborProvider,
    epsilon: f64,
    min_pts: u64,
    seed: &SeedOrder,
) -> Result<(Labeling, u64)> {
    check_query_radius(provider, epsilon, min_pts)?;
    let n = provider.len();
    let order = seed.resolve(n)?;
    let mut labels: Vec<Option<u32>> = vec![None; n];
    let mut core = vec![false; n];
    let mut queried = vec![false; n];
    let mut computations = 0u64;
    let mut clusters = 0u32;

    let neighborhood = |p: ObjectId, computations: &mut u64| -> Result<Neighborhood> {
        let nb = provider.range_query(p, epsilon)?;
        *computations += nb.distance_computations();
        Ok(nb)
    };

    for seed_id in order {
        if queried[seed_id.index()] || labels[seed_id.index()].is_some() {
            continue;
        }
        let nb = neighborhood(seed_id, &mut computations)?;
        queried[seed_id.index()] = true;
        if nb.size() < min_pts {
            continue;
        }
        let cluster = clusters;
        clusters += 1;
        core[seed_id.index()] = true;
        labels[seed_id.index()] = Some(cluster);
        let mut stack: Vec<ObjectId> = Vec::new();
        for q in nb.ids() {
            if labels[q.index()].is_none() {
                labels[q.index()] = Some(cluster);
                stack.push(q);
            }
        }
        while let Some(q) = stack.pop() {
            if queried[q.index()] {
                // visited earlier as a non-core seed
                continue;
            }
            let nb = neighborhood(q, &mut computations)?;
            queried[q.index()] = true;
            if nb.size() < min_pts {
                continue;
            }
            core[q.index()] = true;
            for r in nb.ids() {
                if labels[r.index()].is_none() {
                    labels[r.index()] = Some(cluster);
                    stack.push(r);
                }
            }
        }
    }
    Ok((Labeling::new(labels, core, clusters as usize), computations))
}

/// Per-build counters.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BuildCounters {
    pub range_queries: u64,
    pub distance_computations: u64,
}

/// Classic OPTICS ordering w.r.t. `(epsilon, min_pts)`: every object is
/// processed exactly once and records the reachability at which it left the
/// queue (infinity for outer-loop seeds).
pub fn optics_build(
    provider: &NeighborProvider,
    epsilon: f64,
    min_pts: u64,
    seed: &SeedOrder,
) -> Result<ClusterOrdering> {
    optics_build_counted(provider, epsilon, min_pts, seed).map(|(o, _)| o)
}

pub fn optics_build_counted(
    provider: &NeighborProvider,
    epsilon: f64,
    min_pts: u64,
    seed: &SeedOrder,
) -> Result<(ClusterOrdering, BuildCounters)> {
    check_query_radius(provider, epsilon, min_pts)?;
    let params = GeneratingParams::new(epsilon, min_pts)?;
    let data = provider.data();
    let n = provider.len();
    let order = seed.resolve(n)?;
    let mut processed = vec![false; n];
    let mut queue = StableQueue::new(n);
    let mut entries: Vec<IndexEntry> = Vec::with_capacity(n);
    let mut counters = BuildCounters::default();

    let mut process = |p: ObjectId,
                       reachability: f64,
                       entries: &mut Vec<IndexEntry>,
                       processed: &mut Vec<bool>,
                       queue: &mut StableQueue|
     -> Result<()> {
        let nb = provider.range_query(p, epsilon)?;
        counters.range_queries += 1;
        counters.distance_computations += nb.distance_computations();
        let core_distance = nb.core_distance(data, min_pts);
        processed[p.index()] = true;
        entries.push(IndexEntry {
            object: p,
            position: entries.len() as u64 + 1,
            core_distance,
            reachability,
            neighborhood_size: nb.size(),
            finder: p,
        });
        if core_distance <= epsilon {
            for e in nb.entries() {
                if processed[e.id.index()] {
                    continue;
                }
                let rdist = core_distance.max(e.distance);
                match queue.priority(e.id) {
                    None => queue.insert(e.id, rdist),
                    Some(current) if rdist < current => queue.update(e.id, rdist),
                    Some(_) => {}
                }
            }
        }
        Ok(())
    };

    for o in order {
        if processed[o.index()] {
            continue;
        }
        process(o, f64::INFINITY, &mut entries, &mut processed, &mut queue)?;
        while let Some((p, r)) = queue.pop() {
            process(p, r, &mut entries, &mut processed, &mut queue)?;
        }
    }
    let ordering = ClusterOrdering::new(entries, params, Flavor::Optics)?;
    Ok((ordering, counters))
}
