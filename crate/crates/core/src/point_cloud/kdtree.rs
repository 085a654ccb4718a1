//! Static kd-tree for exact k-nearest-neighbor queries.
//!
//! Results are ordered by `(squared distance, index)`, so equal distances are
//! broken by ascending point index and the answer is identical to a brute-force
//! sort over all points.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone, Copy)]
struct Candidate {
    dist2: f64,
    index: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.index.cmp(&other.index))
    }
}

#[derive(Debug)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug)]
pub struct KdTree<'a> {
    dim: usize,
    coords: &'a [f64],
    order: Vec<usize>,
    nodes: Vec<Node>,
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl<'a> KdTree<'a> {
    /// Builds a tree over the flat `N × dim` coordinate array.
    pub fn new(dim: usize, coords: &'a [f64]) -> Self {
        let n = coords.len() / dim;
        let mut tree = Self {
            dim,
            coords,
            order: (0..n).collect(),
            nodes: Vec::new(),
        };
        if n > 0 {
            tree.build(0, n);
        }
        tree
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        // split along the widest extent
        let mut best_axis = 0;
        let mut best_span = -1.0;
        for axis in 0..self.dim {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in &self.order[start..end] {
                let v = self.coords[i * self.dim + axis];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo > best_span {
                best_span = hi - lo;
                best_axis = axis;
            }
        }
        let mid = (start + end) / 2;
        let (dim, coords) = (self.dim, self.coords);
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            coords[a * dim + best_axis].total_cmp(&coords[b * dim + best_axis])
        });
        let value = coords[self.order[mid] * dim + best_axis];
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            axis: best_axis,
            value,
            left,
            right,
        };
        id
    }

    /// The `k` nearest points to `query`, skipping `exclude`, nearest first.
    pub fn nearest(&self, query: &[f64], k: usize, exclude: Option<usize>) -> Vec<usize> {
        if k == 0 || self.nodes.is_empty() {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, query, k, exclude, &mut heap);
        let mut found = heap.into_vec();
        found.sort();
        found.into_iter().map(|c| c.index).collect()
    }

    fn search(
        &self,
        node: usize,
        query: &[f64],
        k: usize,
        exclude: Option<usize>,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if Some(i) == exclude {
                        continue;
                    }
                    let cand = Candidate {
                        dist2: squared_distance(query, self.point(i)),
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let delta = query[axis] - value;
                let (near, far) = if delta < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, query, k, exclude, heap);
                // ties at equal distance may still win on index, so only prune strictly farther slabs
                if heap.len() < k || delta * delta <= heap.peek().unwrap().dist2 {
                    self.search(far, query, k, exclude, heap);
                }
            }
        }
    }
}

/// Reference implementation used to validate the tree.
pub fn brute_force_nearest(
    dim: usize,
    coords: &[f64],
    query: &[f64],
    k: usize,
    exclude: Option<usize>,
) -> Vec<usize> {
    let n = coords.len() / dim;
    let mut all: Vec<Candidate> = (0..n)
        .filter(|&i| Some(i) != exclude)
        .map(|i| Candidate {
            dist2: squared_distance(query, &coords[i * dim..(i + 1) * dim]),
            index: i,
        })
        .collect();
    all.sort();
    all.truncate(k);
    all.into_iter().map(|c| c.index).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_brute_force_on_random_and_lattice_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in 1..=4 {
            let coords: Vec<f64> = (0..300 * dim).map(|_| rng.random::<f64>()).collect();
            let tree = KdTree::new(dim, &coords);
            for i in (0..300).step_by(7) {
                let q = &coords[i * dim..(i + 1) * dim];
                for k in [1, 5, 17] {
                    assert_eq!(
                        tree.nearest(q, k, Some(i)),
                        brute_force_nearest(dim, &coords, q, k, Some(i))
                    );
                }
            }
        }
        // lattice with many exact ties
        let mut lattice = Vec::new();
        for i in 0..9 {
            for j in 0..9 {
                lattice.extend([i as f64 * 0.1, j as f64 * 0.1]);
            }
        }
        let tree = KdTree::new(2, &lattice);
        for i in 0..81 {
            let q = &lattice[2 * i..2 * i + 2];
            for k in [4, 8, 12, 20] {
                assert_eq!(
                    tree.nearest(q, k, Some(i)),
                    brute_force_nearest(2, &lattice, q, k, Some(i))
                );
            }
        }
    }
}
