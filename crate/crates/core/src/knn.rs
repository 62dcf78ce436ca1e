//! Exact k-nearest-neighbor search over a static point set.
//!
//! A median-split kd-tree with small leaf buckets. Results are ordered by
//! ascending distance with ties broken by ascending point index, so every
//! query is fully deterministic even with duplicate points.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geom::Point3;

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

#[derive(Debug)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

/// Immutable spatial index bound to one point set. `Sync`, so a single index
/// can serve queries from many threads.
#[derive(Debug)]
pub struct NeighborIndex {
    points: Vec<Point3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist2: f64,
    index: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Search<'a> {
    query: &'a Point3,
    exclude: Option<usize>,
    k: usize,
    heap: BinaryHeap<Entry>,
}

impl Search<'_> {
    fn worst(&self) -> f64 {
        if self.heap.len() < self.k {
            f64::INFINITY
        } else {
            self.heap.peek().map_or(f64::INFINITY, |e| e.dist2)
        }
    }

    fn offer(&mut self, entry: Entry) {
        if self.heap.len() < self.k {
            self.heap.push(entry);
        } else if let Some(top) = self.heap.peek() {
            if entry < *top {
                self.heap.pop();
                self.heap.push(entry);
            }
        }
    }
}

impl NeighborIndex {
    pub fn build(cloud: &PointCloud) -> Result<Self> {
        Self::from_points(cloud.points())
    }

    pub fn from_points(points: &[Point3]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let mut index = Self {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::with_capacity(2 * points.len() / LEAF_SIZE + 1),
        };
        index.build_node(0, points.len());
        Ok(index)
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mut lo = self.points[self.order[start]];
        let mut hi = lo;
        for &i in &self.order[start..end] {
            lo = lo.inf(&self.points[i]);
            hi = hi.sup(&self.points[i]);
        }
        let extent = hi - lo;
        let axis = extent.imax();
        if extent[axis] == 0.0 {
            // All points coincide.
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][axis].total_cmp(&points[b][axis])
        });
        let value = self.points[self.order[mid]][axis];
        self.nodes.push(Node::Split {
            axis,
            value,
            left: 0,
            right: 0,
        });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        if let Node::Split {
            left: l, right: r, ..
        } = &mut self.nodes[id]
        {
            *l = left;
            *r = right;
        }
        id
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Point3 {
        &self.points[i]
    }

    /// The `k` nearest neighbors of point `query_idx`, excluding itself.
    pub fn knn(&self, query_idx: usize, k: usize) -> Result<Vec<Neighbor>> {
        let max = self.points.len().saturating_sub(1);
        if k == 0 || k > max || query_idx >= self.points.len() {
            return Err(Error::KOutOfRange { k, max });
        }
        Ok(self.search(&self.points[query_idx], k, Some(query_idx)))
    }

    /// The `k` nearest indexed points to an arbitrary location.
    pub fn knn_point(&self, query: &Point3, k: usize) -> Result<Vec<Neighbor>> {
        let max = self.points.len();
        if k == 0 || k > max {
            return Err(Error::KOutOfRange { k, max });
        }
        Ok(self.search(query, k, None))
    }

    pub fn nearest(&self, query: &Point3) -> Neighbor {
        self.search(query, 1, None)[0]
    }

    fn search(&self, query: &Point3, k: usize, exclude: Option<usize>) -> Vec<Neighbor> {
        let mut s = Search {
            query,
            exclude,
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        };
        self.visit(0, &mut s);
        s.heap
            .into_sorted_vec()
            .into_iter()
            .map(|e| Neighbor {
                index: e.index,
                distance: e.dist2.sqrt(),
            })
            .collect()
    }

    fn visit(&self, node: usize, s: &mut Search<'_>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if Some(i) == s.exclude {
                        continue;
                    }
                    let dist2 = (self.points[i] - s.query).norm_squared();
                    s.offer(Entry { dist2, index: i });
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = s.query[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.visit(near, s);
                // Ties at the bound may still improve the index order.
                if diff * diff <= s.worst() {
                    self.visit(far, s);
                }
            }
        }
    }
}
