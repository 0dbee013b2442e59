//! Landmark-driven template adaptation: each facial part is rigidly aligned to its scan
//! landmarks and the template is bent towards the moved landmarks under a Laplacian prior.

use crate::error::{Error, Result};
use crate::landmarks::{LandmarkSpec, PartMap};
use crate::mesh::{Point, TriMesh};
use crate::rigid::procrustes;

use super::soft::{solve_positions, SoftConstraintSystem};

/// Constrained template vertices and their targets: each part's template landmarks after
/// the rigid (no-scale) map of that part onto its scan landmarks.
pub fn part_targets(template: &TriMesh, lm: &LandmarkSpec, parts: &PartMap) -> Result<(Vec<usize>, Vec<Point>)> {
    lm.validate(template.num_vertices())?;
    parts.validate(lm.len())?;
    let mut indices = Vec::new();
    let mut targets = Vec::new();
    for (label, ordinals) in &parts.parts {
        if ordinals.len() < 3 {
            return Err(Error::argument(format!(
                "part `{label}` has {} landmarks, at least 3 are needed",
                ordinals.len()
            )));
        }
        let src: Vec<Point> = ordinals
            .iter()
            .map(|&o| template.vertices()[lm.template_indices[o]])
            .collect();
        let dst: Vec<Point> = ordinals.iter().map(|&o| lm.scan_points[o]).collect();
        let t = procrustes(&src, &dst, false)
            .map_err(|e| match e {
                Error::RankDeficient(m) => Error::RankDeficient(format!("part `{label}`: {m}")),
                other => other,
            })?;
        for (&o, p) in ordinals.iter().zip(&src) {
            indices.push(lm.template_indices[o]);
            targets.push(t.apply(p));
        }
    }
    let mut sorted = indices.clone();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::argument(format!("template vertex {} is used by two landmarks", w[0])));
    }
    Ok((indices, targets))
}

/// Adaptive template from per-part rigid landmark targets and Laplacian smoothing.
pub fn adapt_template_lb(template: &TriMesh, lm: &LandmarkSpec, parts: &PartMap, lambda: f64) -> Result<TriMesh> {
    let (indices, targets) = part_targets(template, lm, parts)?;
    let sys = SoftConstraintSystem::for_mesh(template, indices, targets, lambda)?;
    template.with_vertices(solve_positions(template.vertices(), &sys)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landmarks::PartLabel;

    fn grid() -> TriMesh {
        let n = 5;
        let mut v = Vec::new();
        for j in 0..n {
            for i in 0..n {
                v.push(Point::new(i as f64, j as f64, 0.1 * ((i * j) as f64).sin()));
            }
        }
        let mut f = Vec::new();
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let a = j * n + i;
                f.push([a, a + 1, a + n + 1]);
                f.push([a, a + n + 1, a + n]);
            }
        }
        TriMesh::new(v, f).unwrap()
    }

    #[test]
    fn short_part_is_rejected() {
        let m = grid();
        let idx = vec![0, 4, 20, 24];
        let pts = idx.iter().map(|&i| m.vertices()[i]).collect();
        let labels = vec![PartLabel::Nose, PartLabel::Nose, PartLabel::Eyes, PartLabel::Eyes];
        let lm = LandmarkSpec::new(idx, pts, Some(labels)).unwrap();
        let parts = PartMap::from_landmarks(&lm);
        assert!(matches!(adapt_template_lb(&m, &lm, &parts, 0.1), Err(Error::Argument(_))));
    }

    #[test]
    fn matching_landmarks_leave_template() {
        let m = grid();
        let idx = vec![0, 4, 12, 20, 24];
        let pts = idx.iter().map(|&i| m.vertices()[i]).collect();
        let lm = LandmarkSpec::new(idx, pts, None).unwrap();
        let out = adapt_template_lb(&m, &lm, &PartMap::from_landmarks(&lm), 0.1).unwrap();
        for (a, b) in out.vertices().iter().zip(m.vertices()) {
            assert!((a - b).norm() < 1e-9);
        }
    }
}
