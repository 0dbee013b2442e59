//! As-rigid-as-possible surface deformation with hard positional constraints.
//!
//! Cell weights are 1 and edge weights are the clamped cotangent weights. Rotations start
//! at identity; each iteration fits per-vertex rotations (local step, skipped on the
//! first iteration) and then solves the Laplacian system with constrained rows and columns
//! eliminated (global step).

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::mesh::{edge_weights, EdgeWeights, Point, TriMesh};
use crate::sparse::{solve_refined, SparseCholesky, SparseMatrix};

use super::{matrix_components, require_constrained_components};

pub const DEFAULT_ARAP_ITERATIONS: usize = 10;

/// Reference shape, rotations and weights of an ARAP solve with a fixed constraint set.
#[derive(Debug, Clone)]
pub struct ArapState {
    pub reference: TriMesh,
    pub rotations: Vec<Matrix3<f64>>,
    pub edge_weights: EdgeWeights,
    pub cell_weights: Vec<f64>,
    constrained: Vec<usize>,
    /// Position of each vertex among the free unknowns.
    free_slot: Vec<Option<usize>>,
    free_laplacian: SparseMatrix,
    factor: SparseCholesky,
}

#[derive(Debug, Clone)]
pub struct ArapResult {
    pub mesh: TriMesh,
    /// ARAP energy (with optimal rotations) after each iteration.
    pub energies: Vec<f64>,
    pub rotations: Vec<Matrix3<f64>>,
}

impl ArapState {
    pub fn new(reference: &TriMesh, constrained: &[usize]) -> Result<Self> {
        let n = reference.num_vertices();
        let mut seen = vec![false; n];
        for &c in constrained {
            if c >= n {
                return Err(Error::argument(format!("constrained vertex {c} out of range ({n})")));
            }
            if std::mem::replace(&mut seen[c], true) {
                return Err(Error::argument(format!("vertex {c} is constrained twice")));
            }
        }
        let weights = edge_weights(reference)?;
        let full = crate::mesh::cotangent_laplacian(reference)?;
        let (comp, lowest) = matrix_components(&full);
        require_constrained_components(&comp, &lowest, constrained)?;

        let mut free_slot = vec![None; n];
        let mut k = 0;
        for i in 0..n {
            if !seen[i] {
                free_slot[i] = Some(k);
                k += 1;
            }
        }
        let t: Vec<_> = full
            .triplets()
            .filter_map(|(r, c, v)| Some((free_slot[r]?, free_slot[c]?, v)))
            .collect();
        let free_laplacian = SparseMatrix::from_triplets(k, k, &t)?;
        let factor = SparseCholesky::factor(&free_laplacian)?;
        Ok(Self {
            reference: reference.clone(),
            rotations: vec![Matrix3::identity(); n],
            edge_weights: weights,
            cell_weights: vec![1.0; n],
            constrained: constrained.to_vec(),
            free_slot,
            free_laplacian,
            factor,
        })
    }

    /// Best-fit proper rotation per vertex for the given deformed positions.
    pub fn local_step(&self, deformed: &[Point]) -> Vec<Matrix3<f64>> {
        let p = self.reference.vertices();
        self.edge_weights
            .neighbors
            .iter()
            .enumerate()
            .map(|(i, nbrs)| {
                let mut cov = Matrix3::zeros();
                for &(j, w) in nbrs {
                    cov += w * (deformed[i] - deformed[j]) * (p[i] - p[j]).transpose();
                }
                nearest_rotation(&cov)
            })
            .collect()
    }

    /// Solves `L p' = b` for the free vertices with constrained vertices at `targets`.
    pub fn global_step(&self, rotations: &[Matrix3<f64>], targets: &[Point]) -> Result<Vec<Point>> {
        if targets.len() != self.constrained.len() {
            return Err(Error::argument(format!(
                "{} targets for {} constrained vertices",
                targets.len(),
                self.constrained.len()
            )));
        }
        let p = self.reference.vertices();
        let n = p.len();
        let mut fixed: Vec<Option<Point>> = vec![None; n];
        for (&c, t) in self.constrained.iter().zip(targets) {
            fixed[c] = Some(*t);
        }
        let k = self.free_laplacian.nrows();
        let mut rhs = vec![[0.0; 3]; k];
        for i in 0..n {
            let Some(slot) = self.free_slot[i] else { continue };
            let mut b = Point::zeros();
            for &(j, w) in &self.edge_weights.neighbors[i] {
                b += 0.5 * w * (rotations[i] + rotations[j]) * (p[i] - p[j]);
                if let Some(c) = fixed[j] {
                    b += w * c;
                }
            }
            rhs[slot] = [b.x, b.y, b.z];
        }
        let mut out: Vec<Point> = fixed.iter().map(|f| f.unwrap_or_else(Point::zeros)).collect();
        for d in 0..3 {
            let col: Vec<f64> = rhs.iter().map(|r| r[d]).collect();
            let (x, _) = solve_refined(&self.free_laplacian, &self.factor, &col, 1e-13, 1e-8)?;
            for i in 0..n {
                if let Some(slot) = self.free_slot[i] {
                    out[i][d] = x[slot];
                }
            }
        }
        Ok(out)
    }

    /// `Σ_i w_i Σ_{j∈N(i)} w_ij ‖(p'_i − p'_j) − R_i (p_i − p_j)‖²`.
    pub fn energy(&self, deformed: &[Point], rotations: &[Matrix3<f64>]) -> f64 {
        let p = self.reference.vertices();
        self.edge_weights
            .neighbors
            .iter()
            .enumerate()
            .map(|(i, nbrs)| {
                self.cell_weights[i]
                    * nbrs
                        .iter()
                        .map(|&(j, w)| {
                            w * ((deformed[i] - deformed[j]) - rotations[i] * (p[i] - p[j])).norm_squared()
                        })
                        .sum::<f64>()
            })
            .sum()
    }

    /// Energy with rotations fitted to `deformed`.
    pub fn optimal_energy(&self, deformed: &[Point]) -> f64 {
        self.energy(deformed, &self.local_step(deformed))
    }
}

/// Closest proper rotation to `cov = Σ w e' eᵀ`, i.e. the maximizer of `tr(Rᵀ cov)`.
pub(crate) fn nearest_rotation(cov: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = cov.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let mut d = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    u * d * v_t
}

pub fn arap_deform(
    mesh: &TriMesh,
    constrained_indices: &[usize],
    targets: &[Point],
    iterations: usize,
) -> Result<ArapResult> {
    if constrained_indices.len() < 3 {
        return Err(Error::argument("ARAP needs at least 3 constrained vertices"));
    }
    if iterations == 0 {
        return Err(Error::argument("ARAP needs at least one iteration"));
    }
    let mut state = ArapState::new(mesh, constrained_indices)?;
    let mut deformed = mesh.vertices().to_vec();
    let mut energies = Vec::with_capacity(iterations);
    for it in 0..iterations {
        if it > 0 {
            state.rotations = state.local_step(&deformed);
        }
        deformed = state.global_step(&state.rotations, targets)?;
        energies.push(state.optimal_energy(&deformed));
    }
    state.rotations = state.local_step(&deformed);
    Ok(ArapResult {
        mesh: mesh.with_vertices(deformed)?,
        energies,
        rotations: state.rotations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rotation_is_proper() {
        let m = Matrix3::new(1.0, 0.2, 0.0, 0.1, -1.0, 0.3, 0.0, 0.0, 0.5);
        let r = nearest_rotation(&m);
        assert!((r.transpose() * r - Matrix3::identity()).amax() < 1e-12);
        assert!((r.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn requires_three_constraints() {
        let m = TriMesh::new(vec![Point::zeros(), Point::x(), Point::y()], vec![[0, 1, 2]]).unwrap();
        assert!(arap_deform(&m, &[0, 1], &[Point::zeros(), Point::x()], 3).is_err());
    }
}
