use std::collections::BTreeMap;

use super::TriMesh;
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Lower bound applied to every cotangent edge weight. Keeps `L` factorizable on meshes
/// with obtuse (non-Delaunay) edges; well-shaped meshes never reach it.
pub const MIN_EDGE_WEIGHT: f64 = 1e-10;

/// Symmetric per-edge cotangent weights `w_ij = ½(cot α_ij + cot β_ij)`, with a single
/// cotangent on boundary edges.
#[derive(Debug, Clone)]
pub struct EdgeWeights {
    /// `(i, j, w)` with `i < j`, sorted.
    pub edges: Vec<(usize, usize, f64)>,
    /// One-ring neighbours and weights per vertex, sorted by neighbour index.
    pub neighbors: Vec<Vec<(usize, f64)>>,
}

pub fn edge_weights(mesh: &TriMesh) -> Result<EdgeWeights> {
    let v = mesh.vertices();
    let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (fi, f) in mesh.faces().iter().enumerate() {
        for k in 0..3 {
            let (o, a, b) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
            let ea = v[a] - v[o];
            let eb = v[b] - v[o];
            let cross = ea.cross(&eb).norm();
            if cross <= 1e-12 * ea.norm() * eb.norm() || cross == 0.0 {
                return Err(Error::DegenerateFace { face: fi });
            }
            let cot = ea.dot(&eb) / cross;
            let key = if a < b { (a, b) } else { (b, a) };
            *acc.entry(key).or_insert(0.0) += 0.5 * cot;
        }
    }
    let mut neighbors = vec![Vec::new(); v.len()];
    let edges: Vec<_> = acc
        .into_iter()
        .map(|((i, j), w)| {
            let w = w.max(MIN_EDGE_WEIGHT);
            neighbors[i].push((j, w));
            neighbors[j].push((i, w));
            (i, j, w)
        })
        .collect();
    for n in &mut neighbors {
        n.sort_by_key(|e| e.0);
    }
    Ok(EdgeWeights { edges, neighbors })
}

/// Cotangent Laplacian: `L_ij = -w_ij`, `L_ii = Σ_j w_ij`. Symmetric with zero row sums.
pub fn cotangent_laplacian(mesh: &TriMesh) -> Result<SparseMatrix> {
    let w = edge_weights(mesh)?;
    laplacian_from_weights(mesh.num_vertices(), &w)
}

pub(crate) fn laplacian_from_weights(n: usize, w: &EdgeWeights) -> Result<SparseMatrix> {
    let mut t = Vec::with_capacity(2 * w.edges.len() + n);
    let mut diag = vec![0.0; n];
    for &(i, j, wij) in &w.edges {
        t.push((i, j, -wij));
        t.push((j, i, -wij));
        diag[i] += wij;
        diag[j] += wij;
    }
    t.extend(diag.into_iter().enumerate().map(|(i, d)| (i, i, d)));
    SparseMatrix::from_triplets(n, n, &t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Point;

    #[test]
    fn right_triangle_weights() {
        let m = TriMesh::new(
            vec![Point::zeros(), Point::x(), Point::y()],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let l = cotangent_laplacian(&m).unwrap();
        // legs are opposite 45° corners, the hypotenuse is opposite the right angle
        assert!((-l.get(0, 1) - 0.5).abs() < 1e-12);
        assert!((-l.get(0, 2) - 0.5).abs() < 1e-12);
        assert!(-l.get(1, 2) < 1e-9);
        for r in 0..3 {
            let s: f64 = (0..3).map(|c| l.get(r, c)).sum();
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn zero_area_face_is_named() {
        let m = TriMesh::new(
            vec![Point::zeros(), Point::x(), Point::y(), Point::new(2.0, 0.0, 0.0)],
            vec![[0, 1, 2], [0, 1, 3]],
        )
        .unwrap();
        assert!(matches!(
            cotangent_laplacian(&m),
            Err(Error::DegenerateFace { face: 1 })
        ));
    }

    #[test]
    fn obtuse_edges_are_clamped() {
        // two very obtuse triangles sharing edge (0, 1): cot α + cot β < 0
        let m = TriMesh::new(
            vec![
                Point::zeros(),
                Point::new(2.0, 0.0, 0.0),
                Point::new(1.0, 0.1, 0.0),
                Point::new(1.0, -0.1, 0.0),
            ],
            vec![[0, 1, 2], [1, 0, 3]],
        )
        .unwrap();
        let w = edge_weights(&m).unwrap();
        let (_, _, w01) = w.edges.iter().find(|e| (e.0, e.1) == (0, 1)).copied().unwrap();
        assert_eq!(w01, MIN_EDGE_WEIGHT);
    }
}
