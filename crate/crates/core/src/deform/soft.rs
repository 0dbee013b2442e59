//! `min ‖λ L (X − X_ref)‖² + ‖S X − targets‖²` through the normal equations.
//!
//! The unknown displacement is re-parameterised per connected component as a common
//! translation plus offsets relative to the component's lowest vertex. The translation
//! spans the null space of `L`, so the normal matrix stays well conditioned both for
//! λ → 0 and λ → ∞.

use crate::error::{Error, Result};
use crate::mesh::{cotangent_laplacian, Point, TriMesh};
use crate::sparse::{solve_refined, SparseCholesky, SparseMatrix};

use super::{matrix_components, require_constrained_components};

/// Residual target tried first; solves are refined towards it.
const RESIDUAL_TARGET: f64 = 1e-13;
/// Largest accepted relative residual of the normal equations.
const RESIDUAL_LIMIT: f64 = 1e-8;

/// Soft positional constraints regularised by a Laplacian.
#[derive(Debug, Clone)]
pub struct SoftConstraintSystem {
    pub laplacian: SparseMatrix,
    pub constrained_indices: Vec<usize>,
    pub targets: Vec<Point>,
    pub lambda: f64,
}

impl SoftConstraintSystem {
    pub fn new(
        laplacian: SparseMatrix,
        constrained_indices: Vec<usize>,
        targets: Vec<Point>,
        lambda: f64,
    ) -> Result<Self> {
        let n = laplacian.nrows();
        if laplacian.ncols() != n {
            return Err(Error::argument("Laplacian must be square"));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::argument(format!("lambda must be positive, got {lambda}")));
        }
        if constrained_indices.is_empty() {
            return Err(Error::argument("at least one constraint is required"));
        }
        if constrained_indices.len() != targets.len() {
            return Err(Error::argument(format!(
                "{} constrained indices but {} targets",
                constrained_indices.len(),
                targets.len()
            )));
        }
        let mut seen = vec![false; n];
        for &i in &constrained_indices {
            if i >= n {
                return Err(Error::argument(format!("constrained vertex {i} out of range ({n})")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::argument(format!("vertex {i} is constrained twice")));
            }
        }
        if targets.iter().any(|t| !t.iter().all(|c| c.is_finite())) {
            return Err(Error::argument("constraint target is not finite"));
        }
        Ok(Self {
            laplacian,
            constrained_indices,
            targets,
            lambda,
        })
    }

    /// Builds the system with the mesh's own cotangent Laplacian.
    pub fn for_mesh(mesh: &TriMesh, indices: Vec<usize>, targets: Vec<Point>, lambda: f64) -> Result<Self> {
        Self::new(cotangent_laplacian(mesh)?, indices, targets, lambda)
    }

    /// Objective value at `x` for reference positions `reference`.
    pub fn objective(&self, reference: &[Point], x: &[Point]) -> f64 {
        let mut reg = 0.0;
        for d in 0..3 {
            let diff: Vec<f64> = x.iter().zip(reference).map(|(a, b)| a[d] - b[d]).collect();
            reg += self.laplacian.mul_vec(&diff).iter().map(|v| v * v).sum::<f64>();
        }
        let fit: f64 = self
            .constrained_indices
            .iter()
            .zip(&self.targets)
            .map(|(&i, t)| (x[i] - t).norm_squared())
            .sum();
        self.lambda * self.lambda * reg + fit
    }
}

/// Solves the soft-constraint system with `mesh` as the reference shape.
pub fn lb_soft_solve(mesh: &TriMesh, system: &SoftConstraintSystem) -> Result<TriMesh> {
    let x = solve_positions(mesh.vertices(), system)?;
    mesh.with_vertices(x)
}

pub(crate) fn solve_positions(reference: &[Point], sys: &SoftConstraintSystem) -> Result<Vec<Point>> {
    let n = reference.len();
    if sys.laplacian.nrows() != n {
        return Err(Error::argument(format!(
            "Laplacian is {}x{} but the mesh has {n} vertices",
            sys.laplacian.nrows(),
            sys.laplacian.ncols()
        )));
    }
    let (comp, lowest) = matrix_components(&sys.laplacian);
    require_constrained_components(&comp, &lowest, &sys.constrained_indices)?;
    let pin = |v: usize| lowest[comp[v]];

    // λ L T and S T, where T maps the component's lowest column to its all-ones vector
    let mut lt = Vec::with_capacity(2 * sys.laplacian.nnz());
    for (i, j, v) in sys.laplacian.triplets() {
        let r = pin(j);
        if j != r {
            lt.push((i, j, sys.lambda * v));
        }
        lt.push((i, r, sys.lambda * v));
    }
    let lt = SparseMatrix::from_triplets(n, n, &lt)?;
    let l = sys.constrained_indices.len();
    let mut st = Vec::with_capacity(2 * l);
    for (k, &v) in sys.constrained_indices.iter().enumerate() {
        let r = pin(v);
        if v != r {
            st.push((k, v, 1.0));
        }
        st.push((k, r, 1.0));
    }
    let st = SparseMatrix::from_triplets(l, n, &st)?;
    let st_t = st.transpose();
    let normal = lt.transpose().matmul(&lt)?.add(&st_t.matmul(&st)?)?;
    let chol = SparseCholesky::factor(&normal)?;

    let mut x = reference.to_vec();
    for d in 0..3 {
        let misfit: Vec<f64> = sys
            .constrained_indices
            .iter()
            .zip(&sys.targets)
            .map(|(&i, t)| t[d] - reference[i][d])
            .collect();
        let rhs = st_t.mul_vec(&misfit);
        let (y, _) = solve_refined(&normal, &chol, &rhs, RESIDUAL_TARGET, RESIDUAL_LIMIT)?;
        for i in 0..n {
            let r = pin(i);
            let disp = if i == r { y[r] } else { y[i] + y[r] };
            x[i][d] += disp;
        }
    }
    Ok(x)
}
