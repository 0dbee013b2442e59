//! Triangle meshes, OBJ I/O, the cotangent Laplacian and exact nearest-neighbour queries.

mod laplacian;
mod nn;
mod obj;

pub use laplacian::{cotangent_laplacian, edge_weights, EdgeWeights, MIN_EDGE_WEIGHT};
pub use nn::{
    farthest_point_sampling, mutual_nearest_neighbors, nearest_neighbors, per_vertex_nearest_distance,
    KdTree, Neighbor, NearestDistances,
};
pub use obj::{parse_obj, read_obj, write_obj, write_obj_file};

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// A 3D position in model units.
pub type Point = Vector3<f64>;

/// Vertex positions plus triangle connectivity (0-based indices).
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Point>,
    faces: Vec<[usize; 3]>,
}

impl TriMesh {
    /// Builds a mesh, checking index range, degenerate faces and finiteness.
    pub fn new(vertices: Vec<Point>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        if let Some(i) = vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::Structure(format!("vertex {i} is not finite")));
        }
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&i| i >= n) {
                return Err(Error::Structure(format!(
                    "face {fi} references vertex {bad} but the mesh has {n} vertices"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::Structure(format!(
                    "face {fi} repeats a vertex index: {f:?}"
                )));
            }
        }
        Ok(Self { vertices, faces })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    /// Same connectivity, new positions.
    pub fn with_vertices(&self, vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::argument(format!(
                "expected {} vertices, got {}",
                self.vertices.len(),
                vertices.len()
            )));
        }
        if let Some(i) = vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::Structure(format!("vertex {i} is not finite")));
        }
        Ok(Self {
            vertices,
            faces: self.faces.clone(),
        })
    }

    /// Applies `f` to every vertex, keeping connectivity.
    pub fn map_vertices(&self, f: impl Fn(&Point) -> Point) -> Result<Self> {
        self.with_vertices(self.vertices.iter().map(f).collect())
    }

    pub fn into_vertices(self) -> Vec<Point> {
        self.vertices
    }

    pub fn bbox_diagonal(&self) -> f64 {
        bbox_diagonal(&self.vertices)
    }

    /// Connected components over face adjacency; isolated vertices are their own component.
    /// Returns the component id of every vertex and the number of components.
    /// Component ids are assigned in order of their lowest vertex index.
    pub fn connected_components(&self) -> (Vec<usize>, usize) {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for f in &self.faces {
            for k in 0..3 {
                let a = find(&mut parent, f[k]);
                let b = find(&mut parent, f[(k + 1) % 3]);
                if a != b {
                    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                    parent[hi] = lo;
                }
            }
        }
        let mut ids = vec![usize::MAX; n];
        let mut root_id = vec![usize::MAX; n];
        let mut count = 0;
        for i in 0..n {
            let r = find(&mut parent, i);
            if root_id[r] == usize::MAX {
                root_id[r] = count;
                count += 1;
            }
            ids[i] = root_id[r];
        }
        (ids, count)
    }
}

/// Length of the axis-aligned bounding-box diagonal; 0 for empty input.
pub fn bbox_diagonal(points: &[Point]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (hi - lo).norm()
}

pub fn centroid(points: &[Point]) -> Point {
    if points.is_empty() {
        return Point::zeros();
    }
    points.iter().sum::<Point>() / points.len() as f64
}

/// One source-to-destination pairing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

/// A set of (template index, scan index, weight) pairs with unique source indices,
/// stored sorted by source index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Correspondences {
    pairs: Vec<Correspondence>,
}

impl Correspondences {
    pub fn new(mut pairs: Vec<Correspondence>) -> Result<Self> {
        pairs.sort_by_key(|c| c.src);
        for w in pairs.windows(2) {
            if w[0].src == w[1].src {
                return Err(Error::argument(format!(
                    "duplicate source index {} in correspondences",
                    w[0].src
                )));
            }
        }
        if let Some(c) = pairs.iter().find(|c| !(c.weight.is_finite() && c.weight >= 0.0)) {
            return Err(Error::argument(format!(
                "correspondence weight {} for source {} is not finite and non-negative",
                c.weight, c.src
            )));
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[Correspondence] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Checks every index against the sizes of the source and destination sets.
    pub fn validate(&self, src_len: usize, dst_len: usize) -> Result<()> {
        for c in &self.pairs {
            if c.src >= src_len || c.dst >= dst_len {
                return Err(Error::argument(format!(
                    "correspondence ({}, {}) out of range for sets of size {src_len} and {dst_len}",
                    c.src, c.dst
                )));
            }
        }
        Ok(())
    }

    pub fn dst_of(&self, src: usize) -> Option<usize> {
        self.pairs
            .binary_search_by_key(&src, |c| c.src)
            .ok()
            .map(|i| self.pairs[i].dst)
    }

    /// Number of source indices whose partner differs between the two sets,
    /// counting indices present in only one of them.
    pub fn count_changed(&self, other: &Correspondences) -> usize {
        let (mut i, mut j, mut changed) = (0, 0, 0);
        let (a, b) = (&self.pairs, &other.pairs);
        while i < a.len() || j < b.len() {
            match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) if x.src == y.src => {
                    if x.dst != y.dst {
                        changed += 1;
                    }
                    i += 1;
                    j += 1;
                }
                (Some(x), Some(y)) if x.src < y.src => {
                    changed += 1;
                    i += 1;
                }
                (Some(_), Some(_)) => {
                    changed += 1;
                    j += 1;
                }
                (Some(_), None) => {
                    changed += 1;
                    i += 1;
                }
                (None, Some(_)) => {
                    changed += 1;
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        changed
    }

    /// Swaps source and destination roles.
    pub fn swapped(&self) -> Result<Self> {
        Self::new(
            self.pairs
                .iter()
                .map(|c| Correspondence {
                    src: c.dst,
                    dst: c.src,
                    weight: c.weight,
                })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> Vec<Point> {
        vec![Point::zeros(), Point::x(), Point::y()]
    }

    #[test]
    fn rejects_out_of_range_and_degenerate_faces() {
        assert!(matches!(
            TriMesh::new(tri(), vec![[0, 1, 3]]),
            Err(Error::Structure(_))
        ));
        assert!(matches!(
            TriMesh::new(tri(), vec![[0, 1, 1]]),
            Err(Error::Structure(_))
        ));
        let mut v = tri();
        v[1].x = f64::NAN;
        assert!(TriMesh::new(v, vec![[0, 1, 2]]).is_err());
    }

    #[test]
    fn components_are_numbered_by_lowest_vertex() {
        let mut v = tri();
        v.extend(tri().iter().map(|p| p + Point::new(5.0, 0.0, 0.0)));
        v.push(Point::new(9.0, 9.0, 9.0));
        let m = TriMesh::new(v, vec![[3, 4, 5], [0, 1, 2]]).unwrap();
        let (ids, n) = m.connected_components();
        assert_eq!(n, 3);
        assert_eq!(ids, vec![0, 0, 0, 1, 1, 1, 2]);
    }

    #[test]
    fn correspondences_reject_duplicates_and_count_changes() {
        let c = |s, d| Correspondence { src: s, dst: d, weight: 1.0 };
        assert!(Correspondences::new(vec![c(1, 2), c(1, 3)]).is_err());
        let a = Correspondences::new(vec![c(0, 0), c(1, 1), c(2, 2)]).unwrap();
        let b = Correspondences::new(vec![c(0, 0), c(1, 5), c(3, 3)]).unwrap();
        // 1 differs, 2 only in a, 3 only in b
        assert_eq!(a.count_changed(&b), 3);
        assert_eq!(a.count_changed(&a), 0);
        assert_eq!(b.dst_of(1), Some(5));
        assert_eq!(b.dst_of(2), None);
    }
}
