//! Construction of the FINEX ordering.
//!
//! The outer/inner loop mirrors OPTICS, but the queue update differs: a
//! processed non-core object that becomes reachable at a smaller distance is
//! pulled out of the ordering and queued again, so every non-core ends up with
//! its globally minimal reachability. Each update also moves an object's
//! finder reference to the densest core that reached it.

use std::time::Instant;

use crate::baseline::{check_query_radius, ClusterOrdering, Flavor, IndexEntry, SeedOrder};
use crate::error::{Error, Result};
use crate::model::{Dataset, GeneratingParams, Metric, ObjectId};
use crate::neighbors::{NeighborProvider, Neighborhood};
use crate::pqueue::StableQueue;

/// A FINEX ordering bound to the dataset it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct FinexIndex {
    ordering: ClusterOrdering,
    metric: Metric,
    fingerprint: [u8; 32],
}

impl FinexIndex {
    /// Wraps an already validated ordering (used when loading from disk).
    pub fn from_parts(ordering: ClusterOrdering, metric: Metric, fingerprint: [u8; 32]) -> Result<Self> {
        if ordering.flavor() != Flavor::Finex {
            return Err(Error::CorruptIndex("ordering is not a FINEX ordering".into()));
        }
        Ok(FinexIndex {
            ordering,
            metric,
            fingerprint,
        })
    }

    pub fn ordering(&self) -> &ClusterOrdering {
        &self.ordering
    }

    pub fn params(&self) -> GeneratingParams {
        self.ordering.params()
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn fingerprint(&self) -> &[u8; 32] {
        &self.fingerprint
    }

    pub fn len(&self) -> usize {
        self.ordering.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordering.is_empty()
    }

    pub fn core_count(&self) -> usize {
        self.ordering.core_count()
    }

    /// Fails unless `data` is the dataset this index was built from.
    pub fn check_dataset(&self, data: &Dataset) -> Result<()> {
        if data.fingerprint() != &self.fingerprint || data.len() != self.len() || data.metric() != self.metric
        {
            return Err(Error::FingerprintMismatch);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BuildReport {
    pub range_queries: u64,
    pub distance_computations: u64,
    /// How often each object was pulled back out of the ordering.
    pub reinsertions: Vec<u32>,
    pub millis: f64,
}

impl BuildReport {
    pub fn total_reinsertions(&self) -> u64 {
        self.reinsertions.iter().map(|&r| r as u64).sum()
    }

    pub fn max_reinsertions(&self) -> u32 {
        self.reinsertions.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Unprocessed,
    Queued,
    // slot in the build-time ordering buffer
    Processed(usize),
}

struct Builder<'a> {
    provider: &'a NeighborProvider,
    epsilon: f64,
    min_pts: u64,
    core_distance: Vec<f64>,
    reachability: Vec<f64>,
    size: Vec<u64>,
    finder: Vec<ObjectId>,
    computed: Vec<bool>,
    state: Vec<State>,
    // removed objects leave a hole; compacted once the build finishes
    ordering: Vec<Option<ObjectId>>,
    queue: StableQueue,
    report: BuildReport,
}

impl<'a> Builder<'a> {
    fn new(provider: &'a NeighborProvider, epsilon: f64, min_pts: u64) -> Self {
        let n = provider.len();
        Builder {
            provider,
            epsilon,
            min_pts,
            core_distance: vec![f64::INFINITY; n],
            reachability: vec![f64::INFINITY; n],
            size: vec![0; n],
            finder: (0..n).map(ObjectId::from_index).collect(),
            computed: vec![false; n],
            state: vec![State::Unprocessed; n],
            ordering: Vec::with_capacity(n),
            queue: StableQueue::new(n),
            report: BuildReport {
                reinsertions: vec![0; n],
                ..BuildReport::default()
            },
        }
    }

    fn process(&mut self, p: ObjectId) -> Result<()> {
        let i = p.index();
        // Core distance and size do not depend on the processing order, so a
        // reinserted non-core keeps the values from its first visit.
        let neighbors: Option<Neighborhood> = if self.computed[i] {
            None
        } else {
            let nb = self.provider.range_query(p, self.epsilon)?;
            self.report.range_queries += 1;
            self.report.distance_computations += nb.distance_computations();
            self.core_distance[i] = nb.core_distance(self.provider.data(), self.min_pts);
            self.size[i] = nb.size();
            self.computed[i] = true;
            Some(nb)
        };
        self.state[i] = State::Processed(self.ordering.len());
        self.ordering.push(Some(p));
        if self.core_distance[i] <= self.epsilon {
            let nb = neighbors.expect("a core is processed exactly once");
            self.update(p, &nb);
        }
        Ok(())
    }

    fn update(&mut self, c: ObjectId, neighbors: &Neighborhood) {
        let core_c = self.core_distance[c.index()];
        let size_c = self.size[c.index()];
        for e in neighbors.entries() {
            let q = e.id.index();
            let rdist = core_c.max(e.distance);
            match self.state[q] {
                State::Unprocessed => {
                    self.reachability[q] = rdist;
                    self.queue.insert(e.id, rdist);
                    self.state[q] = State::Queued;
                }
                State::Queued => {
                    if rdist < self.reachability[q] {
                        self.reachability[q] = rdist;
                        self.queue.update(e.id, rdist);
                    }
                }
                State::Processed(slot) => {
                    if self.core_distance[q] > self.epsilon && rdist < self.reachability[q] {
                        self.ordering[slot] = None;
                        self.reachability[q] = rdist;
                        self.queue.insert(e.id, rdist);
                        self.state[q] = State::Queued;
                        self.report.reinsertions[q] += 1;
                    }
                }
            }
            if size_c > self.size[self.finder[q].index()] {
                self.finder[q] = c;
            }
        }
    }

    fn run(mut self, seeds: Vec<ObjectId>) -> Result<(ClusterOrdering, BuildReport)> {
        for o in seeds {
            if self.state[o.index()] != State::Unprocessed {
                continue;
            }
            self.reachability[o.index()] = f64::INFINITY;
            self.process(o)?;
            while let Some((p, _)) = self.queue.pop() {
                self.process(p)?;
            }
        }
        let entries: Vec<IndexEntry> = self
            .ordering
            .iter()
            .flatten()
            .enumerate()
            .map(|(slot, &id)| {
                let i = id.index();
                IndexEntry {
                    object: id,
                    position: slot as u64 + 1,
                    core_distance: self.core_distance[i],
                    reachability: self.reachability[i],
                    neighborhood_size: self.size[i],
                    finder: self.finder[i],
                }
            })
            .collect();
        let params = GeneratingParams::new(self.epsilon, self.min_pts)?;
        let ordering = ClusterOrdering::new(entries, params, Flavor::Finex)?;
        Ok((ordering, self.report))
    }
}

/// Builds the FINEX ordering for `(epsilon, min_pts)` with seeds drawn
/// smallest-id first.
pub fn finex_build(provider: &NeighborProvider, epsilon: f64, min_pts: u64) -> Result<FinexIndex> {
    finex_build_report(provider, epsilon, min_pts, &SeedOrder::Ascending).map(|(idx, _)| idx)
}

pub fn finex_build_report(
    provider: &NeighborProvider,
    epsilon: f64,
    min_pts: u64,
    seed: &SeedOrder,
) -> Result<(FinexIndex, BuildReport)> {
    check_query_radius(provider, epsilon, min_pts)?;
    let started = Instant::now();
    let seeds = seed.resolve(provider.len())?;
    let (ordering, mut report) = Builder::new(provider, epsilon, min_pts).run(seeds)?;
    report.millis = started.elapsed().as_secs_f64() * 1e3;
    let data = provider.data();
    let index = FinexIndex {
        ordering,
        metric: data.metric(),
        fingerprint: *data.fingerprint(),
    };
    Ok((index, report))
}
