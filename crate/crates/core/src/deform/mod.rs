//! Laplace-Beltrami regularised deformations: soft-constraint mesh editing, ARAP, landmark
//! driven template adaptation and the final regularised projection onto a scan.

mod adapt;
mod arap;
mod lbrp;
mod soft;

pub use adapt::{adapt_template_lb, part_targets};
pub use arap::{arap_deform, ArapResult, ArapState, DEFAULT_ARAP_ITERATIONS};
pub use lbrp::{lbrp_constraints, lbrp_project};
pub use soft::{lb_soft_solve, SoftConstraintSystem};

/// Default stiffness for editing and projection.
pub const DEFAULT_LAMBDA: f64 = 0.1;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Connected components of a square matrix's sparsity graph.
/// Returns per-row component ids (numbered by lowest row) and the lowest row of each component.
pub(crate) fn matrix_components(a: &SparseMatrix) -> (Vec<usize>, Vec<usize>) {
    let n = a.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for (r, c, _) in a.triplets() {
        let (x, y) = (find(&mut parent, r), find(&mut parent, c));
        if x != y {
            parent[x.max(y)] = x.min(y);
        }
    }
    let mut ids = vec![usize::MAX; n];
    let mut roots: Vec<usize> = Vec::new();
    let mut root_id = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_id[r] == usize::MAX {
            root_id[r] = roots.len();
            roots.push(i);
        }
        ids[i] = root_id[r];
    }
    (ids, roots)
}

/// Errors unless every component contains at least one constrained row.
pub(crate) fn require_constrained_components(
    comp: &[usize],
    lowest: &[usize],
    constrained: &[usize],
) -> Result<()> {
    let mut has = vec![false; lowest.len()];
    for &v in constrained {
        has[comp[v]] = true;
    }
    if let Some(c) = has.iter().position(|h| !h) {
        let size = comp.iter().filter(|&&x| x == c).count();
        return Err(Error::Solver(format!(
            "mesh component {c} (lowest vertex {}, {size} vertices) has no constrained vertex, \
             so its position is undetermined",
            lowest[c]
        )));
    }
    Ok(())
}
