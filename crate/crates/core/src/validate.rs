//! Brute-force checks used by the test suites and the `compare` command.
//!
//! Everything here recomputes distances directly from the dataset and never
//! goes through a [`NeighborProvider`](crate::neighbors::NeighborProvider), so
//! it can audit the providers as well as the algorithms built on them.

use std::collections::HashMap;

use crate::baseline::{ClusterOrdering, Flavor};
use crate::model::{Dataset, Labeling, ObjectId};

/// A failed check, with a human-readable description of the first offence.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct Violation(pub String);

type Check = std::result::Result<(), Violation>;

macro_rules! violation {
    ($($arg:tt)*) => {
        return Err(Violation(format!($($arg)*)))
    };
}

/// All pairwise distances up to `radius`, computed once in O(n^2).
#[derive(Clone, Debug)]
pub struct BruteNeighborhoods<'a> {
    data: &'a Dataset,
    radius: f64,
    // sorted by id, self included
    lists: Vec<Vec<(ObjectId, f64)>>,
}

impl<'a> BruteNeighborhoods<'a> {
    pub fn new(data: &'a Dataset, radius: f64) -> Self {
        let n = data.len();
        let mut lists: Vec<Vec<(ObjectId, f64)>> = vec![Vec::new(); n];
        for a in 0..n {
            let pa = ObjectId::from_index(a);
            lists[a].push((pa, data.distance(pa, pa)));
            for b in a + 1..n {
                let pb = ObjectId::from_index(b);
                let d = data.distance(pa, pb);
                if d <= radius {
                    lists[a].push((pb, d));
                    lists[b].push((pa, d));
                }
            }
        }
        for l in &mut lists {
            l.sort_unstable_by_key(|e| e.0);
        }
        BruteNeighborhoods { data, radius, lists }
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Neighbors of `p` within `r <= radius`, self included.
    pub fn within(&self, p: ObjectId, r: f64) -> impl Iterator<Item = (ObjectId, f64)> + '_ {
        assert!(
            r <= self.radius,
            "radius {r} exceeds the precomputed {}",
            self.radius
        );
        self.lists[p.index()].iter().copied().filter(move |e| e.1 <= r)
    }

    pub fn size(&self, p: ObjectId, r: f64) -> u64 {
        self.within(p, r).map(|(q, _)| self.data.weight(q)).sum()
    }

    pub fn is_core(&self, p: ObjectId, r: f64, min_pts: u64) -> bool {
        self.size(p, r) >= min_pts
    }

    /// `C(p)` at `(r, min_pts)`.
    pub fn core_distance(&self, p: ObjectId, r: f64, min_pts: u64) -> f64 {
        let mut by_distance: Vec<(ObjectId, f64)> = self.within(p, r).collect();
        by_distance.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut total = 0u64;
        for (q, d) in by_distance {
            total += self.data.weight(q);
            if total >= min_pts {
                return d;
            }
        }
        f64::INFINITY
    }

    /// Textbook DBSCAN with no index, smallest-id seeds first.
    pub fn dbscan(&self, r: f64, min_pts: u64) -> Labeling {
        let n = self.data.len();
        let core: Vec<bool> = self.data.ids().map(|p| self.is_core(p, r, min_pts)).collect();
        let mut labels: Vec<Option<u32>> = vec![None; n];
        let mut clusters = 0u32;
        for seed in 0..n {
            if !core[seed] || labels[seed].is_some() {
                continue;
            }
            labels[seed] = Some(clusters);
            let mut stack = vec![ObjectId::from_index(seed)];
            while let Some(p) = stack.pop() {
                for (q, _) in self.within(p, r) {
                    if labels[q.index()].is_none() {
                        labels[q.index()] = Some(clusters);
                        if core[q.index()] {
                            stack.push(q);
                        }
                    }
                }
            }
            clusters += 1;
        }
        Labeling::new(labels, core, clusters as usize)
    }
}

/// Checks that `labeling` is an exact clustering w.r.t. `(r, min_pts)`: core
/// flags are right, cores are partitioned by density-connectivity, every
/// border sits in a cluster holding one of its core neighbors, and only
/// objects without a core neighbor are noise.
pub fn check_exact(nb: &BruteNeighborhoods<'_>, labeling: &Labeling, r: f64, min_pts: u64) -> Check {
    let data = nb.data();
    if labeling.len() != data.len() {
        violation!(
            "labeling covers {} objects, dataset has {}",
            labeling.len(),
            data.len()
        );
    }
    let mut cores_per_cluster = vec![0usize; labeling.num_clusters()];
    for p in data.ids() {
        let core = nb.is_core(p, r, min_pts);
        if labeling.is_core(p) != core {
            violation!("object {p}: core flag {} but core is {core}", labeling.is_core(p));
        }
        if core {
            cores_per_cluster[labeling.label(p).expect("cores are clustered") as usize] += 1;
            for (q, _) in nb.within(p, r) {
                if nb.is_core(q, r, min_pts) && labeling.label(q) != labeling.label(p) {
                    violation!("neighboring cores {p} and {q} are split");
                }
            }
            continue;
        }
        let core_labels: Vec<Option<u32>> = nb
            .within(p, r)
            .filter(|&(q, _)| nb.is_core(q, r, min_pts))
            .map(|(q, _)| labeling.label(q))
            .collect();
        match labeling.label(p) {
            None if !core_labels.is_empty() => violation!("object {p} is noise next to a core"),
            Some(l) if !core_labels.contains(&Some(l)) => {
                violation!("border {p} has no core neighbor in its cluster {l}")
            }
            _ => {}
        }
    }
    if let Some(k) = cores_per_cluster.iter().position(|&c| c == 0) {
        violation!("cluster {k} has no core");
    }
    // Neighboring cores share a label, so each label is a union of
    // components; a BFS per label confirms it is exactly one.
    let mut seen = vec![false; data.len()];
    let mut components_per_label = vec![0usize; labeling.num_clusters()];
    for p in data.ids() {
        if !labeling.is_core(p) || seen[p.index()] {
            continue;
        }
        components_per_label[labeling.label(p).unwrap() as usize] += 1;
        seen[p.index()] = true;
        let mut stack = vec![p];
        while let Some(x) = stack.pop() {
            for (q, _) in nb.within(x, r) {
                if labeling.is_core(q) && !seen[q.index()] {
                    seen[q.index()] = true;
                    stack.push(q);
                }
            }
        }
    }
    if let Some(k) = components_per_label.iter().position(|&c| c > 1) {
        violation!(
            "cluster {k} joins {} unconnected core groups",
            components_per_label[k]
        );
    }
    Ok(())
}

/// Exact equivalence of two clusterings at the same parameters: identical
/// noise sets, identical core flags and core partitions, and every border
/// of `candidate` has a core neighbor (within `r`) in its own cluster.
/// Borders are allowed to differ where they are ambiguous.
pub fn exact_equivalent(
    nb: &BruteNeighborhoods<'_>,
    candidate: &Labeling,
    reference: &Labeling,
    r: f64,
) -> Check {
    if candidate.len() != reference.len() {
        violation!(
            "labelings cover {} and {} objects",
            candidate.len(),
            reference.len()
        );
    }
    let mut forward: HashMap<u32, u32> = HashMap::new();
    let mut backward: HashMap<u32, u32> = HashMap::new();
    for p in nb.data().ids() {
        let (a, b) = (candidate.label(p), reference.label(p));
        if a.is_none() != b.is_none() {
            violation!("object {p} is noise in only one clustering");
        }
        if candidate.is_core(p) != reference.is_core(p) {
            violation!("object {p} has different core flags");
        }
        if candidate.is_core(p) {
            let (a, b) = (a.unwrap(), b.unwrap());
            if *forward.entry(a).or_insert(b) != b || *backward.entry(b).or_insert(a) != a {
                violation!("core partitions differ at object {p}");
            }
        }
    }
    for p in nb.data().ids() {
        if let Some(l) = candidate.label(p) {
            if !candidate.is_core(p)
                && !nb
                    .within(p, r)
                    .any(|(q, _)| candidate.is_core(q) && candidate.label(q) == Some(l))
            {
                violation!("border {p} is not reachable from its cluster {l}");
            }
        }
    }
    Ok(())
}

/// Checks that every cluster of `dense` lies within one cluster of
/// `sparse`. Dense cores must share their sparse cluster; a dense border may
/// sit elsewhere in `sparse` only if it is an ambiguous sparse border, i.e.
/// some sparse core of the enclosing cluster is within `sparse_radius`.
pub fn check_nested(
    nb: &BruteNeighborhoods<'_>,
    dense: &Labeling,
    sparse: &Labeling,
    sparse_radius: f64,
) -> Check {
    let mut enclosing: Vec<Option<u32>> = vec![None; dense.num_clusters()];
    for p in nb.data().ids() {
        if !dense.is_core(p) {
            continue;
        }
        let d = dense.label(p).unwrap() as usize;
        if !sparse.is_core(p) {
            violation!("dense core {p} is not a sparse core");
        }
        match enclosing[d] {
            None => enclosing[d] = sparse.label(p),
            Some(s) if sparse.label(p) != Some(s) => {
                violation!(
                    "dense cluster {d} spans sparse clusters {s} and {:?}",
                    sparse.label(p)
                )
            }
            Some(_) => {}
        }
    }
    for p in nb.data().ids() {
        let Some(d) = dense.label(p) else { continue };
        let Some(s) = enclosing[d as usize] else {
            violation!("dense cluster {d} has no core");
        };
        match sparse.label(p) {
            None => violation!("object {p} is clustered in dense but noise in sparse"),
            Some(l) if l == s => {}
            Some(_) => {
                if sparse.is_core(p)
                    || !nb
                        .within(p, sparse_radius)
                        .any(|(q, _)| sparse.is_core(q) && sparse.label(q) == Some(s))
                {
                    violation!("object {p} of dense cluster {d} lies outside sparse cluster {s}");
                }
            }
        }
    }
    Ok(())
}

/// Recomputes every attribute of `ordering` from scratch. `nb` must have
/// been built with at least the generating epsilon.
///
/// For both flavors: `C` and `N` are exact and cores carry the minimum
/// reachability from the cores preceding them. For FINEX orderings a
/// non-core carries the minimum reachability from all cores, and its finder
/// is a core neighbor of maximal size (itself if there is none).
pub fn audit_ordering(nb: &BruteNeighborhoods<'_>, ordering: &ClusterOrdering) -> Check {
    let params = ordering.params();
    let (eps, min_pts) = (params.epsilon, params.min_pts);
    let data = nb.data();
    if ordering.len() != data.len() {
        violation!("ordering has {} entries, dataset {}", ordering.len(), data.len());
    }
    let core_distance: Vec<f64> = data.ids().map(|p| nb.core_distance(p, eps, min_pts)).collect();
    let size: Vec<u64> = data.ids().map(|p| nb.size(p, eps)).collect();
    let is_core = |p: ObjectId| core_distance[p.index()] <= eps;

    for (slot, e) in ordering.entries().iter().enumerate() {
        let p = e.object;
        if e.core_distance.to_bits() != core_distance[p.index()].to_bits() {
            violation!(
                "object {p}: C = {} expected {}",
                e.core_distance,
                core_distance[p.index()]
            );
        }
        if e.neighborhood_size != size[p.index()] {
            violation!(
                "object {p}: N = {} expected {}",
                e.neighborhood_size,
                size[p.index()]
            );
        }
        let global = ordering.flavor() == Flavor::Finex && !is_core(p);
        let expected = nb
            .within(p, eps)
            .filter(|&(c, _)| is_core(c) && c != p && (global || ordering.slot(c) < slot))
            .map(|(c, d)| core_distance[c.index()].max(d))
            .fold(f64::INFINITY, f64::min);
        if e.reachability.to_bits() != expected.to_bits() {
            violation!(
                "object {p} at slot {slot}: R = {} expected {expected}",
                e.reachability
            );
        }
        match ordering.flavor() {
            Flavor::Optics => {
                if e.finder != p {
                    violation!("OPTICS entry {p} carries finder {}", e.finder);
                }
            }
            Flavor::Finex => {
                let best = nb
                    .within(p, eps)
                    .filter(|&(c, _)| is_core(c))
                    .map(|(c, _)| size[c.index()])
                    .max();
                match best {
                    None if e.finder != p => violation!("noise {p} has finder {}", e.finder),
                    None => {}
                    Some(best) => {
                        let f = e.finder;
                        if !is_core(f) || size[f.index()] != best || data.distance(p, f) > eps {
                            violation!("object {p}: finder {f} is not a densest core neighbor");
                        }
                    }
                }
            }
        }
    }
    Ok(())
}
