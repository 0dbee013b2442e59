//! Laplacian-regularised projection of a deformed template onto a scan.

use crate::error::{Error, Result};
use crate::mesh::{cotangent_laplacian, mutual_nearest_neighbors, Point, TriMesh};

use super::soft::{solve_positions, SoftConstraintSystem};

/// Mutual-nearest-neighbour constraints: deformed vertex indices and matched scan positions.
pub fn lbrp_constraints(deformed: &TriMesh, scan: &TriMesh) -> Result<(Vec<usize>, Vec<Point>)> {
    let pairs = mutual_nearest_neighbors(deformed.vertices(), scan.vertices())?;
    if pairs.is_empty() {
        return Err(Error::Projection(
            "no mutual nearest neighbours between the deformed template and the scan".into(),
        ));
    }
    Ok(pairs
        .pairs()
        .iter()
        .map(|c| (c.src, scan.vertices()[c.dst]))
        .unzip())
}

/// Snaps mutually matched vertices towards the scan while the deformed shape's Laplacian
/// keeps the rest of the surface coherent.
pub fn lbrp_project(deformed: &TriMesh, scan: &TriMesh, lambda: f64) -> Result<TriMesh> {
    let (indices, targets) = lbrp_constraints(deformed, scan)?;
    let sys = SoftConstraintSystem::new(cotangent_laplacian(deformed)?, indices, targets, lambda)?;
    deformed.with_vertices(solve_positions(deformed.vertices(), &sys)?)
}
