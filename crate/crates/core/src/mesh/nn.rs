//! Exact Euclidean nearest-neighbour search.
//!
//! Ties are broken towards the lowest reference index, so results are identical to a
//! brute-force scan regardless of tree shape.

use rayon::prelude::*;

use super::{Correspondence, Correspondences, Point, TriMesh};
use crate::error::{Error, Result};

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

/// Static 3-d tree over a borrowed point slice.
#[derive(Debug, Clone)]
pub struct KdTree<'a> {
    points: &'a [Point],
    order: Vec<usize>,
    nodes: Vec<Node>,
}

/// Result of a nearest-neighbour query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

impl<'a> KdTree<'a> {
    pub fn new(points: &'a [Point]) -> Self {
        let mut tree = Self {
            points,
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            tree.build(0, points.len());
        }
        tree
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let slice = &mut self.order[start..end];
        let mut lo = self.points[slice[0]];
        let mut hi = lo;
        for &i in slice.iter() {
            lo = lo.inf(&self.points[i]);
            hi = hi.sup(&self.points[i]);
        }
        let axis = (hi - lo).imax();
        let mid = slice.len() / 2;
        let pts = self.points;
        slice.select_nth_unstable_by(mid, |&a, &b| pts[a][axis].total_cmp(&pts[b][axis]));
        let value = pts[slice[mid]][axis];
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build(start, start + mid);
        let right = self.build(start + mid, end);
        self.nodes[id] = Node::Split { axis, value, left, right };
        id
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Nearest reference point to `q`; `None` only for an empty tree.
    pub fn nearest(&self, q: &Point) -> Option<Neighbor> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (f64::INFINITY, usize::MAX);
        self.search(0, q, &mut best);
        Some(Neighbor {
            index: best.1,
            distance: best.0.sqrt(),
        })
    }

    fn search(&self, node: usize, q: &Point, best: &mut (f64, usize)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d2 = (self.points[i] - q).norm_squared();
                    if d2 < best.0 || (d2 == best.0 && i < best.1) {
                        *best = (d2, i);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, best);
                // `<=` keeps equidistant candidates reachable for the index tie-break
                if diff * diff <= best.0 {
                    self.search(far, q, best);
                }
            }
        }
    }
}

pub fn nearest_neighbors(query: &[Point], reference: &[Point]) -> Result<Vec<Neighbor>> {
    if reference.is_empty() {
        return Err(Error::argument("nearest-neighbour reference set is empty"));
    }
    if query.is_empty() {
        return Err(Error::argument("nearest-neighbour query set is empty"));
    }
    let tree = KdTree::new(reference);
    Ok(query
        .par_iter()
        .map(|q| tree.nearest(q).expect("reference is non-empty"))
        .collect())
}

/// Pairs `(i, j)` such that `b_j` is the nearest neighbour of `a_i` in `b` and `a_i` is
/// the nearest neighbour of `b_j` in `a`. All weights are 1.
pub fn mutual_nearest_neighbors(a: &[Point], b: &[Point]) -> Result<Correspondences> {
    let ab = nearest_neighbors(a, b)?;
    let ba = nearest_neighbors(b, a)?;
    let pairs = ab
        .iter()
        .enumerate()
        .filter(|(i, n)| ba[n.index].index == *i)
        .map(|(i, n)| Correspondence {
            src: i,
            dst: n.index,
            weight: 1.0,
        })
        .collect();
    Correspondences::new(pairs)
}

/// Per-vertex distance from a morphed mesh to the closest scan vertex, plus the mean.
#[derive(Debug, Clone, PartialEq)]
pub struct NearestDistances {
    pub distances: Vec<f64>,
    pub mean: f64,
}

pub fn per_vertex_nearest_distance(morphed: &TriMesh, scan: &TriMesh) -> Result<NearestDistances> {
    let nn = nearest_neighbors(morphed.vertices(), scan.vertices())?;
    let distances: Vec<f64> = nn.iter().map(|n| n.distance).collect();
    let mean = distances.iter().sum::<f64>() / distances.len() as f64;
    Ok(NearestDistances { distances, mean })
}

/// Deterministic farthest-point sampling seeded at index 0. Returns `budget` indices in
/// ascending order (all indices when `budget >= points.len()`). Ties pick the lowest index.
pub fn farthest_point_sampling(points: &[Point], budget: usize) -> Vec<usize> {
    let n = points.len();
    if budget >= n {
        return (0..n).collect();
    }
    if budget == 0 {
        return Vec::new();
    }
    let mut chosen = Vec::with_capacity(budget);
    let mut dist = vec![f64::INFINITY; n];
    let mut current = 0;
    for _ in 0..budget {
        chosen.push(current);
        let c = points[current];
        let mut next = (f64::NEG_INFINITY, usize::MAX);
        for (i, p) in points.iter().enumerate() {
            let d = (p - c).norm_squared();
            if d < dist[i] {
                dist[i] = d;
            }
            if dist[i] > next.0 {
                next = (dist[i], i);
            }
        }
        current = next.1;
    }
    chosen.sort_unstable();
    chosen
}
