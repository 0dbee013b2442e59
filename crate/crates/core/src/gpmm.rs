//! Gaussian-process prior over deformation fields and its posterior mean given landmark
//! displacements. The prior mean is the zero field and coordinates are independent.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::landmarks::LandmarkSpec;
use crate::mesh::{Point, TriMesh};

/// Sum of isotropic Gaussian kernels `Σ a exp(−r²/ℓ²)` plus observation noise variance.
#[derive(Debug, Clone, PartialEq)]
pub struct GpKernelConfig {
    /// `(amplitude, length_scale)` pairs.
    pub scales: Vec<(f64, f64)>,
    pub noise_variance: f64,
}

impl GpKernelConfig {
    pub fn new(scales: Vec<(f64, f64)>, noise_variance: f64) -> Result<Self> {
        let cfg = Self { scales, noise_variance };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Two scales at 0.25 and 0.05 of `diag` with amplitudes 1 and 0.25; noise 1e-4 of the total amplitude.
    pub fn default_for_diagonal(diag: f64) -> Self {
        let scales = vec![(1.0, 0.25 * diag), (0.25, 0.05 * diag)];
        let total: f64 = scales.iter().map(|s| s.0).sum();
        Self {
            scales,
            noise_variance: 1e-4 * total,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.scales.is_empty() {
            return Err(Error::argument("GP kernel needs at least one scale"));
        }
        for &(a, l) in &self.scales {
            if !(a > 0.0 && a.is_finite() && l > 0.0 && l.is_finite()) {
                return Err(Error::argument(format!(
                    "GP kernel scale ({a}, {l}) must have positive amplitude and length"
                )));
            }
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::argument("GP noise variance must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn max_amplitude(&self) -> f64 {
        self.scales.iter().map(|s| s.0).fold(0.0, f64::max)
    }

    pub fn max_length(&self) -> f64 {
        self.scales.iter().map(|s| s.1).fold(0.0, f64::max)
    }

    pub fn eval(&self, a: &Point, b: &Point) -> f64 {
        let r2 = (a - b).norm_squared();
        self.scales.iter().map(|&(amp, l)| amp * (-r2 / (l * l)).exp()).sum()
    }
}

/// Per-vertex displacement, one row per reference vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationField {
    pub displacements: Vec<Point>,
}

impl DeformationField {
    pub fn max_norm(&self) -> f64 {
        self.displacements.iter().map(|d| d.norm()).fold(0.0, f64::max)
    }
}

pub fn kernel_matrix(a: &[Point], b: &[Point], cfg: &GpKernelConfig) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| cfg.eval(&a[i], &b[j]))
}

/// `u = K_pk (K_kk + δ² I)⁻¹ d` with `d` the scan-minus-template landmark offsets.
pub fn gp_posterior_mean(template: &TriMesh, lm: &LandmarkSpec, cfg: &GpKernelConfig) -> Result<DeformationField> {
    cfg.validate()?;
    lm.validate(template.num_vertices())?;
    if lm.is_empty() {
        return Err(Error::argument("GP regression needs at least one landmark"));
    }
    let xk = lm.template_points(template);
    let k = xk.len();
    let mut kkk = kernel_matrix(&xk, &xk, cfg);
    for i in 0..k {
        kkk[(i, i)] += cfg.noise_variance;
    }
    let chol = kkk.cholesky().ok_or_else(|| {
        Error::Conditioning(format!(
            "landmark kernel matrix is numerically singular with noise variance {}; \
             increase the noise variance or remove coincident landmarks",
            cfg.noise_variance
        ))
    })?;
    let d = DMatrix::from_fn(k, 3, |i, c| lm.scan_points[i][c] - xk[i][c]);
    let alpha = chol.solve(&d);
    if alpha.iter().any(|v| !v.is_finite()) {
        return Err(Error::Conditioning("GP posterior weights are not finite".into()));
    }
    let displacements = template
        .vertices()
        .iter()
        .map(|p| {
            let kp = DVector::from_iterator(k, xk.iter().map(|q| cfg.eval(p, q)));
            let row = alpha.tr_mul(&kp);
            Point::new(row[0], row[1], row[2])
        })
        .collect();
    Ok(DeformationField { displacements })
}

/// Template plus the posterior-mean field.
pub fn adapt_template_gp(template: &TriMesh, lm: &LandmarkSpec, cfg: &GpKernelConfig) -> Result<TriMesh> {
    let u = gp_posterior_mean(template, lm, cfg)?;
    template.with_vertices(
        template
            .vertices()
            .iter()
            .zip(&u.displacements)
            .map(|(p, d)| p + d)
            .collect(),
    )
}
