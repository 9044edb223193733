use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use super::PointCloud;
use crate::error::{Error, Result};

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone, Copy)]
struct Candidate {
    d2: f64,
    idx: usize,
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
    // Distance first, lower index wins ties.
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.idx.cmp(&other.idx))
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { dim: usize, value: f64, left: usize, right: usize },
}

/// Static kd-tree over 3D points answering exact k-nearest queries.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<[f64; 3]>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub fn new(points: &[[f64; 3]]) -> Self {
        let mut tree = Self {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            tree.build(0, points.len());
        }
        tree
    }

    pub fn from_planar(points: &[[f64; 2]]) -> Self {
        Self::new(&points.iter().map(|p| [p[0], p[1], 0.0]).collect::<Vec<_>>())
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.order[start..end] {
            for d in 0..3 {
                lo[d] = lo[d].min(self.points[i][d]);
                hi[d] = hi[d].max(self.points[i][d]);
            }
        }
        let dim = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0);
        let mid = (start + end) / 2;
        let pts = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            pts[a][dim].total_cmp(&pts[b][dim]).then(a.cmp(&b))
        });
        let value = self.points[self.order[mid]][dim];
        self.nodes.push(Node::Split {
            dim,
            value,
            left: 0,
            right: 0,
        });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
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

    /// The `k` nearest points to `q`, sorted by distance then index.
    pub fn nearest(&self, q: &[f64; 3], k: usize) -> Vec<(usize, f64)> {
        let k = k.min(self.points.len());
        if k == 0 {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, q, k, &mut heap);
        let mut out = heap.into_vec();
        out.sort();
        out.into_iter().map(|c| (c.idx, c.d2.sqrt())).collect()
    }

    fn search(&self, node: usize, q: &[f64; 3], k: usize, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let p = &self.points[i];
                    let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2);
                    let c = Candidate { d2, idx: i };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = q[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, k, heap);
                // Points equal to the split value may sit on either side, so only
                // strictly farther planes are pruned.
                if heap.len() < k || diff * diff <= heap.peek().expect("non-empty").d2 {
                    self.search(far, q, k, heap);
                }
            }
        }
    }
}

/// Exact k-nearest neighborhoods; each point is its own first neighbor.
#[derive(Debug, Clone)]
pub struct Neighborhood {
    k: usize,
    indices: Vec<usize>,
    distances: Vec<f64>,
}

impl Neighborhood {
    /// Builds neighborhoods for arbitrary query points against `tree`.
    pub fn from_tree(tree: &KdTree, queries: &[[f64; 3]], k: usize) -> Self {
        let rows: Vec<Vec<(usize, f64)>> = queries.par_iter().map(|q| tree.nearest(q, k)).collect();
        let mut indices = Vec::with_capacity(queries.len() * k);
        let mut distances = Vec::with_capacity(queries.len() * k);
        for row in rows {
            for (i, d) in row {
                indices.push(i);
                distances.push(d);
            }
        }
        Self {
            k,
            indices,
            distances,
        }
    }

    pub fn planar(points: &[[f64; 2]], k: usize) -> Result<Self> {
        let n = points.len();
        if k == 0 || k > n {
            return Err(Error::KOutOfRange { k, n });
        }
        let tree = KdTree::from_planar(points);
        let q: Vec<[f64; 3]> = points.iter().map(|p| [p[0], p[1], 0.0]).collect();
        Ok(Self::from_tree(&tree, &q, k))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.indices.len() / self.k.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[i * self.k..(i + 1) * self.k]
    }

    pub fn distances(&self, i: usize) -> &[f64] {
        &self.distances[i * self.k..(i + 1) * self.k]
    }

    /// Maximal neighbor distance `D` of point `i`.
    pub fn support(&self, i: usize) -> f64 {
        self.distances(i)[self.k - 1]
    }
}

/// Exact k-nearest neighborhoods of every cloud point (self included, so `k`
/// counts the point itself). Ties are broken by lower index.
pub fn build_knn(cloud: &PointCloud, k: usize) -> Result<Neighborhood> {
    let n = cloud.len();
    if k == 0 || k >= n.max(1) {
        return Err(Error::KOutOfRange { k, n });
    }
    let tree = KdTree::new(cloud.points());
    Ok(Neighborhood::from_tree(&tree, cloud.points(), k))
}
