//! Landmark-driven rigid and similarity alignment.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::landmarks::LandmarkSpec;
use crate::mesh::{Point, TriMesh};

/// `x ↦ s R x + t` with `R` a proper rotation and `s > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    pub scale: f64,
}

impl Default for SimilarityTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl SimilarityTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
            scale: 1.0,
        }
    }

    pub fn apply(&self, p: &Point) -> Point {
        self.scale * (self.rotation * p) + self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self {
            rotation: rt,
            translation: -(rt * self.translation) / self.scale,
            scale: 1.0 / self.scale,
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &SimilarityTransform) -> Self {
        Self {
            rotation: self.rotation * other.rotation,
            translation: self.apply(&other.translation),
            scale: self.scale * other.scale,
        }
    }

    /// Checks orthonormality, det = +1 and positive scale to `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        (self.rotation.transpose() * self.rotation - Matrix3::identity()).amax() <= tol
            && (self.rotation.determinant() - 1.0).abs() <= tol
            && self.scale > 0.0
    }
}

/// Least-squares similarity (or rigid, when `with_scale` is false) mapping `src` onto `dst`.
pub fn procrustes(src: &[Point], dst: &[Point], with_scale: bool) -> Result<SimilarityTransform> {
    procrustes_weighted(src, dst, None, with_scale)
}

/// Weighted variant minimizing `Σ w_i ‖s R src_i + t − dst_i‖²`.
pub fn procrustes_weighted(
    src: &[Point],
    dst: &[Point],
    weights: Option<&[f64]>,
    with_scale: bool,
) -> Result<SimilarityTransform> {
    let k = src.len();
    if dst.len() != k {
        return Err(Error::argument(format!(
            "procrustes needs equal point counts, got {k} and {}",
            dst.len()
        )));
    }
    if k < 3 {
        return Err(Error::argument(format!("procrustes needs at least 3 points, got {k}")));
    }
    let uniform = vec![1.0; k];
    let w = weights.unwrap_or(&uniform);
    if w.len() != k || w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::argument("procrustes weights must be finite, non-negative and one per point"));
    }
    let wsum: f64 = w.iter().sum();
    if wsum <= 0.0 {
        return Err(Error::argument("procrustes weights sum to zero"));
    }
    let mu_s = src.iter().zip(w).map(|(p, wi)| p * *wi).sum::<Point>() / wsum;
    let mu_d = dst.iter().zip(w).map(|(p, wi)| p * *wi).sum::<Point>() / wsum;

    let mut cov = Matrix3::zeros();
    let mut src_cov = Matrix3::zeros();
    let mut dst_cov = Matrix3::zeros();
    let mut src_var = 0.0;
    for i in 0..k {
        let a = src[i] - mu_s;
        let b = dst[i] - mu_d;
        cov += w[i] * b * a.transpose();
        src_cov += w[i] * a * a.transpose();
        dst_cov += w[i] * b * b.transpose();
        src_var += w[i] * a.norm_squared();
    }
    check_spread(&src_cov, "source")?;
    check_spread(&dst_cov, "target")?;

    let svd = cov.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let mut d = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    let rotation = u * d * v_t;
    let scale = if with_scale {
        let trace: f64 = (0..3).map(|i| svd.singular_values[i] * d[(i, i)]).sum();
        trace / src_var
    } else {
        1.0
    };
    if !(scale > 0.0) {
        return Err(Error::RankDeficient(format!("estimated scale {scale} is not positive")));
    }
    let translation = mu_d - scale * rotation * mu_s;
    Ok(SimilarityTransform {
        rotation,
        translation,
        scale,
    })
}

fn check_spread(cov: &Matrix3<f64>, which: &str) -> Result<()> {
    let mut ev: Vec<f64> = cov.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    if ev[0] <= 0.0 || ev[1] <= 1e-12 * ev[0] {
        return Err(Error::RankDeficient(format!(
            "{which} landmarks are collinear or coincident"
        )));
    }
    Ok(())
}

pub fn apply_transform(mesh: &TriMesh, t: &SimilarityTransform) -> TriMesh {
    mesh.map_vertices(|p| t.apply(p))
        .expect("a finite similarity keeps vertices finite")
}

/// Result of moving a scan into the template frame.
#[derive(Debug, Clone)]
pub struct AlignedScan {
    pub scan: TriMesh,
    /// Landmarks with scan points mapped into the template frame.
    pub landmarks: LandmarkSpec,
    /// Scan frame → template frame.
    pub transform: SimilarityTransform,
}

/// Rigidly (no scale) aligns the scan so its landmarks match the template's landmark vertices.
pub fn align_scan_to_template(scan: &TriMesh, lm: &LandmarkSpec, template: &TriMesh) -> Result<AlignedScan> {
    lm.validate(template.num_vertices())?;
    let target = lm.template_points(template);
    let transform = procrustes(&lm.scan_points, &target, false)?;
    Ok(AlignedScan {
        scan: apply_transform(scan, &transform),
        landmarks: lm.transformed(&transform),
        transform,
    })
}

/// Root-mean-square distance between paired points.
pub fn rms_distance(a: &[Point], b: &[Point]) -> f64 {
    let n = a.len().max(1) as f64;
    (a.iter().zip(b).map(|(x, y)| (x - y).norm_squared()).sum::<f64>() / n).sqrt()
}
