//! Exact Euclidean range search over a kd-tree stored in flat arrays.
//! Nodes split at the median of their widest dimension; leaves hold at most
//! [`LEAF_SIZE`] points.

use super::Neighbor;
use crate::error::{Error, Result};
use crate::model::{euclidean_distance, Dataset, ObjectId};

pub const LEAF_SIZE: usize = 16;

#[derive(Clone, Debug)]
struct Node {
    start: usize,
    end: usize,
    // children; `usize::MAX` marks a leaf
    left: usize,
    right: usize,
}

#[derive(Clone, Debug)]
pub struct KdTree {
    dim: usize,
    points: Vec<u32>,
    nodes: Vec<Node>,
    // per-node bounding box, `dim` lows followed by `dim` highs
    bounds: Vec<f64>,
}

impl KdTree {
    pub fn build(data: &Dataset) -> Result<Self> {
        let dim = data
            .dim()
            .ok_or_else(|| Error::InvalidParameter("kd-tree requires vector data".into()))?;
        let mut tree = KdTree {
            dim,
            points: (0..data.len() as u32).collect(),
            nodes: Vec::new(),
            bounds: Vec::new(),
        };
        if !tree.points.is_empty() {
            tree.build_node(data, 0, tree.points.len());
        }
        Ok(tree)
    }

    fn coords<'a>(&self, data: &'a Dataset, p: u32) -> &'a [f64] {
        data.vector(ObjectId(p)).expect("vector dataset")
    }

    fn build_node(&mut self, data: &Dataset, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node {
            start,
            end,
            left: usize::MAX,
            right: usize::MAX,
        });
        let dim = self.dim;
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &p in &self.points[start..end] {
            for (d, &x) in self.coords(data, p).iter().enumerate() {
                lo[d] = lo[d].min(x);
                hi[d] = hi[d].max(x);
            }
        }
        self.bounds.extend_from_slice(&lo);
        self.bounds.extend_from_slice(&hi);

        if end - start > LEAF_SIZE {
            let split_dim = (0..dim)
                .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
                .unwrap_or(0);
            let mid = start + (end - start) / 2;
            let slice = &mut self.points[start..end];
            slice.select_nth_unstable_by(mid - start, |&a, &b| {
                let xa = data.vector(ObjectId(a)).unwrap()[split_dim];
                let xb = data.vector(ObjectId(b)).unwrap()[split_dim];
                xa.total_cmp(&xb).then(a.cmp(&b))
            });
            let left = self.build_node(data, start, mid);
            let right = self.build_node(data, mid, end);
            self.nodes[id].left = left;
            self.nodes[id].right = right;
        }
        id
    }

    /// Lower bound on the distance from `q` to any point inside node `id`'s box.
    /// Per-dimension gaps never exceed the gap to an actual point of the box,
    /// so with identical summation order the bound cannot overshoot the
    /// computed point distance.
    fn box_distance(&self, id: usize, q: &[f64]) -> f64 {
        let b = &self.bounds[2 * self.dim * id..2 * self.dim * (id + 1)];
        let (lo, hi) = b.split_at(self.dim);
        q.iter()
            .enumerate()
            .map(|(d, &x)| {
                let gap = if x < lo[d] {
                    lo[d] - x
                } else if x > hi[d] {
                    x - hi[d]
                } else {
                    0.0
                };
                gap * gap
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Appends every point within `radius` of `p` to `out` (unordered) and
    /// returns the number of point distances evaluated.
    pub fn range(&self, data: &Dataset, p: ObjectId, radius: f64, out: &mut Vec<Neighbor>) -> u64 {
        if self.nodes.is_empty() {
            return 0;
        }
        let q = self.coords(data, p.0);
        let mut computations = 0;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            if self.box_distance(id, q) > radius {
                continue;
            }
            let node = &self.nodes[id];
            if node.left == usize::MAX {
                for &other in &self.points[node.start..node.end] {
                    let distance = euclidean_distance(q, self.coords(data, other));
                    computations += 1;
                    if distance <= radius {
                        out.push(Neighbor {
                            id: ObjectId(other),
                            distance,
                        });
                    }
                }
            } else {
                stack.push(node.right);
                stack.push(node.left);
            }
        }
        computations
    }
}
