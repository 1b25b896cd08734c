use std::cmp::Ordering;
use std::collections::BinaryHeap;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::{Error, Result};

/// One neighbor of a query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

/// Search structure behind a [`NeighborIndex`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum IndexKind {
    /// kd-tree in low dimension, brute force otherwise.
    #[default]
    Auto,
    BruteForce,
    KdTree,
}

const LEAF_SIZE: usize = 16;
const AUTO_TREE_MAX_DIM: usize = 16;
const BATCH_ROWS: usize = 256;

/// Exact k-nearest-neighbor search over a fixed point set.
///
/// Results are sorted by `(distance, index)`. When the query coincides with
/// a data point, one zero-distance point (the lowest index) is treated as
/// the query itself and dropped; further coincident points are returned.
#[derive(Clone, Debug)]
pub struct NeighborIndex {
    points: Array2<f64>,
    sq_norms: Array1<f64>,
    tree: Option<KdTree>,
}

#[derive(Clone, Debug)]
struct KdTree {
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(Clone, Debug)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        dim: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Copy, PartialEq)]
struct Cand {
    d2: f64,
    index: usize,
}

impl Eq for Cand {}

impl Ord for Cand {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2.total_cmp(&other.d2).then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn sq_dist(a: ArrayView1<f64>, b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl NeighborIndex {
    pub fn new(points: Array2<f64>) -> Result<Self> {
        Self::with_kind(points, IndexKind::Auto)
    }

    pub fn with_kind(points: Array2<f64>, kind: IndexKind) -> Result<Self> {
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("neighbor index input is not finite".into()));
        }
        let use_tree = match kind {
            IndexKind::BruteForce => false,
            IndexKind::KdTree => true,
            IndexKind::Auto => points.ncols() <= AUTO_TREE_MAX_DIM && points.nrows() > 4 * LEAF_SIZE,
        };
        let tree = use_tree.then(|| KdTree::build(&points));
        let sq_norms = points.map_axis(Axis(1), |r| r.dot(&r));
        Ok(NeighborIndex { points, sq_norms, tree })
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn is_tree(&self) -> bool {
        self.tree.is_some()
    }

    fn check_query(&self, dim: usize, k: usize) -> Result<()> {
        if dim != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: dim,
            });
        }
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        Ok(())
    }

    /// The `k` nearest neighbors of `x`.
    pub fn query(&self, x: &[f64], k: usize) -> Result<Vec<Neighbor>> {
        self.check_query(x.len(), k)?;
        let want = (k + 1).min(self.len());
        let mut heap = BinaryHeap::with_capacity(want + 1);
        match &self.tree {
            Some(tree) => tree.search(&self.points, x, want, 0, &mut heap),
            None => {
                for (i, row) in self.points.outer_iter().enumerate() {
                    push(&mut heap, Cand { d2: sq_dist(row, x), index: i }, want);
                }
            }
        }
        finish(heap.into_sorted_vec(), k)
    }

    /// [`query`](Self::query) for every row of `queries`, with identical
    /// results. Without a tree, candidates are screened in blocks through
    /// `|q|² + |x|² − 2 q·x` under a rounding-error margin and then
    /// re-ranked by exact distances.
    pub fn query_many(&self, queries: ArrayView2<f64>, k: usize) -> Result<Vec<Vec<Neighbor>>> {
        self.check_query(queries.ncols(), k)?;
        if self.tree.is_some() || queries.nrows() < 2 {
            return queries
                .outer_iter()
                .map(|q| self.query(&q.to_vec(), k))
                .collect();
        }
        let want = (k + 1).min(self.len());
        let unit = f64::EPSILON / 2.0;
        let gamma = 4.0 * (self.dim() as f64 + 4.0) * unit;
        let mut out = Vec::with_capacity(queries.nrows());
        for start in (0..queries.nrows()).step_by(BATCH_ROWS) {
            let end = (start + BATCH_ROWS).min(queries.nrows());
            let block = queries.slice(s![start..end, ..]);
            let gram = block.dot(&self.points.t());
            for (r, q) in block.outer_iter().enumerate() {
                let q = q.to_vec();
                let qn: f64 = q.iter().map(|v| v * v).sum();
                let mut upper: BinaryHeap<Cand> = BinaryHeap::with_capacity(want + 1);
                let approx: Vec<(f64, f64)> = gram
                    .row(r)
                    .iter()
                    .zip(self.sq_norms.iter())
                    .enumerate()
                    .map(|(i, (g, xn))| {
                        let d2 = qn + xn - 2.0 * g;
                        let err = gamma * (qn + xn);
                        push(&mut upper, Cand { d2: d2 + err, index: i }, want);
                        (d2, err)
                    })
                    .collect();
                let cutoff = upper.peek().map_or(f64::INFINITY, |c| c.d2);
                let mut heap = BinaryHeap::with_capacity(want + 1);
                for (i, &(d2, err)) in approx.iter().enumerate() {
                    if d2 - err <= cutoff {
                        push(&mut heap, Cand { d2: sq_dist(self.points.row(i), &q), index: i }, want);
                    }
                }
                out.push(finish(heap.into_sorted_vec(), k)?);
            }
        }
        Ok(out)
    }

    /// Neighbors of data point `i`, excluding itself.
    pub fn query_point(&self, i: usize, k: usize) -> Result<Vec<Neighbor>> {
        if i >= self.len() {
            return Err(Error::InvalidArgument(format!("point {i} out of range")));
        }
        let x = self.points.row(i).to_vec();
        self.query(&x, k)
    }
}

fn finish(mut cands: Vec<Cand>, k: usize) -> Result<Vec<Neighbor>> {
    if cands.first().is_some_and(|c| c.d2 == 0.0) {
        cands.remove(0);
    }
    if cands.len() < k {
        return Err(Error::InvalidArgument(format!(
            "asked for {k} neighbors but only {} are available",
            cands.len()
        )));
    }
    cands.truncate(k);
    Ok(cands
        .into_iter()
        .map(|c| Neighbor {
            index: c.index,
            distance: c.d2.sqrt(),
        })
        .collect())
}

fn push(heap: &mut BinaryHeap<Cand>, c: Cand, cap: usize) {
    if heap.len() < cap {
        heap.push(c);
    } else if heap.peek().is_some_and(|worst| c < *worst) {
        heap.pop();
        heap.push(c);
    }
}

impl KdTree {
    fn build(points: &Array2<f64>) -> Self {
        let mut tree = KdTree {
            order: (0..points.nrows()).collect(),
            nodes: Vec::new(),
        };
        if points.nrows() > 0 {
            tree.build_node(points, 0, points.nrows());
        }
        tree
    }

    fn build_node(&mut self, points: &Array2<f64>, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let dim = (0..points.ncols())
            .map(|j| {
                let (lo, hi) = self.order[start..end].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    let v = points[(i, j)];
                    (lo.min(v), hi.max(v))
                });
                (j, hi - lo)
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(j, _)| j)
            .unwrap_or(0);
        let mid = (start + end) / 2;
        self.order[start..end]
            .select_nth_unstable_by(mid - start, |&a, &b| points[(a, dim)].total_cmp(&points[(b, dim)]));
        let value = points[(self.order[mid], dim)];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build_node(points, start, mid);
        let right = self.build_node(points, mid, end);
        self.nodes[id] = Node::Split {
            dim,
            value,
            left,
            right,
        };
        id
    }

    // Left subtree holds values ≤ `value`, right ≥ `value`.
    fn search(&self, points: &Array2<f64>, x: &[f64], cap: usize, node: usize, heap: &mut BinaryHeap<Cand>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    push(heap, Cand { d2: sq_dist(points.row(i), x), index: i }, cap);
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = x[dim] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.search(points, x, cap, near, heap);
                let bound = diff * diff;
                if heap.len() < cap || heap.peek().is_some_and(|w| bound <= w.d2) {
                    self.search(points, x, cap, far, heap);
                }
            }
        }
    }
}
