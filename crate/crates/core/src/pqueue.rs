//! Indexed binary min-heap over object ids with stable tie-breaking.
//!
//! Elements with equal priority pop in insertion order. Changing an element's
//! priority re-stamps it, so it queues behind every element that already
//! holds the new priority, exactly as if it had just been inserted.

use std::cmp::Ordering;

use crate::model::ObjectId;

const ABSENT: usize = usize::MAX;

#[derive(Clone, Copy, Debug)]
struct Slot {
    id: ObjectId,
    priority: f64,
    stamp: u64,
}

impl Slot {
    fn before(&self, other: &Slot) -> bool {
        match self.priority.total_cmp(&other.priority) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => self.stamp < other.stamp,
        }
    }
}

#[derive(Clone, Debug)]
pub struct StableQueue {
    heap: Vec<Slot>,
    position: Vec<usize>,
    next_stamp: u64,
}

impl StableQueue {
    /// A queue able to hold ids in `0..capacity`.
    pub fn new(capacity: usize) -> Self {
        StableQueue {
            heap: Vec::new(),
            position: vec![ABSENT; capacity],
            next_stamp: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn contains(&self, id: ObjectId) -> bool {
        self.position[id.index()] != ABSENT
    }

    pub fn priority(&self, id: ObjectId) -> Option<f64> {
        let at = self.position[id.index()];
        (at != ABSENT).then(|| self.heap[at].priority)
    }

    fn stamp(&mut self) -> u64 {
        let s = self.next_stamp;
        self.next_stamp += 1;
        s
    }

    /// Panics if `id` is already queued.
    pub fn insert(&mut self, id: ObjectId, priority: f64) {
        assert!(!self.contains(id), "object {id} is already queued");
        let stamp = self.stamp();
        self.heap.push(Slot { id, priority, stamp });
        let at = self.heap.len() - 1;
        self.position[id.index()] = at;
        self.sift_up(at);
    }

    /// Moves a queued element to `priority`, behind existing equals.
    /// Panics if `id` is not queued.
    pub fn update(&mut self, id: ObjectId, priority: f64) {
        let at = self.position[id.index()];
        assert!(at != ABSENT, "object {id} is not queued");
        let stamp = self.stamp();
        self.heap[at].priority = priority;
        self.heap[at].stamp = stamp;
        let at = self.sift_up(at);
        self.sift_down(at);
    }

    pub fn peek(&self) -> Option<(ObjectId, f64)> {
        self.heap.first().map(|s| (s.id, s.priority))
    }

    pub fn pop(&mut self) -> Option<(ObjectId, f64)> {
        if self.heap.is_empty() {
            return None;
        }
        let last = self.heap.len() - 1;
        self.swap(0, last);
        let top = self.heap.pop().expect("non-empty");
        self.position[top.id.index()] = ABSENT;
        if !self.heap.is_empty() {
            self.sift_down(0);
        }
        Some((top.id, top.priority))
    }

    fn swap(&mut self, a: usize, b: usize) {
        self.heap.swap(a, b);
        self.position[self.heap[a].id.index()] = a;
        self.position[self.heap[b].id.index()] = b;
    }

    fn sift_up(&mut self, mut at: usize) -> usize {
        while at > 0 {
            let parent = (at - 1) / 2;
            if self.heap[at].before(&self.heap[parent]) {
                self.swap(at, parent);
                at = parent;
            } else {
                break;
            }
        }
        at
    }

    fn sift_down(&mut self, mut at: usize) {
        let len = self.heap.len();
        loop {
            let (l, r) = (2 * at + 1, 2 * at + 2);
            let mut best = at;
            if l < len && self.heap[l].before(&self.heap[best]) {
                best = l;
            }
            if r < len && self.heap[r].before(&self.heap[best]) {
                best = r;
            }
            if best == at {
                return;
            }
            self.swap(at, best);
            at = best;
        }
    }
}
