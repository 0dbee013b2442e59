//! The registration pipeline on in-memory data: rigid alignment, optional template
//! adaptation, ICPD morphing, Laplacian-regularised projection and evaluation.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::deform::{adapt_template_lb, lbrp_project, DEFAULT_LAMBDA};
use crate::error::{Error, Result};
use crate::gpmm::{adapt_template_gp, GpKernelConfig};
use crate::icpd::{icpd_register_logged, IcpdConfig, IcpdResult, InnerLogs};
use crate::landmarks::{LandmarkSpec, PartMap};
use crate::mesh::{Point, TriMesh};
use crate::rigid::{align_scan_to_template, apply_transform, SimilarityTransform};

use super::eval::{landmark_errors, EvaluationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adaptation {
    None,
    Lb,
    Gp,
}

impl Adaptation {
    pub fn as_str(self) -> &'static str {
        match self {
            Adaptation::None => "none",
            Adaptation::Lb => "lb",
            Adaptation::Gp => "gp",
        }
    }
}

impl fmt::Display for Adaptation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Adaptation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Adaptation::None),
            "lb" => Ok(Adaptation::Lb),
            "gp" => Ok(Adaptation::Gp),
            _ => Err(Error::argument(format!("unknown adaptation `{s}`, expected none, lb or gp"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationOptions {
    pub adaptation: Adaptation,
    /// Stiffness of both template adaptation and the final projection.
    pub lambda: f64,
    /// `None` derives the kernel from the template's bbox diagonal.
    pub gp: Option<GpKernelConfig>,
    pub icpd: IcpdConfig,
}

impl Default for RegistrationOptions {
    fn default() -> Self {
        Self {
            adaptation: Adaptation::Lb,
            lambda: DEFAULT_LAMBDA,
            gp: None,
            icpd: IcpdConfig::default(),
        }
    }
}

impl RegistrationOptions {
    /// Kernel actually used for `template`.
    pub fn gp_kernel(&self, template: &TriMesh) -> GpKernelConfig {
        self.gp
            .clone()
            .unwrap_or_else(|| GpKernelConfig::default_for_diagonal(template.bbox_diagonal()))
    }
}

#[derive(Debug, Clone)]
pub struct Registration {
    /// Template morphed onto the scan, in the scan's own frame.
    pub registered: TriMesh,
    /// Template entering ICPD, in the template frame.
    pub adapted_template: TriMesh,
    /// Scan frame → template frame.
    pub transform: SimilarityTransform,
    pub icpd: IcpdResult,
    pub inner_logs: InnerLogs,
    pub report: EvaluationReport,
}

/// Runs every stage; errors carry the name of the failing stage.
pub fn register(
    template: &TriMesh,
    scan: &TriMesh,
    landmarks: &LandmarkSpec,
    parts: &PartMap,
    options: &RegistrationOptions,
    truth: Option<&[Point]>,
) -> Result<Registration> {
    register_observed(template, scan, landmarks, parts, options, truth, &mut |_, _| Ok(()))
}

/// As [`register`], handing each intermediate mesh to `observer` as soon as its stage ends.
///
/// Stages reported: `adapt` and `icpd` (template frame), `lbrp` (scan frame).
pub fn register_observed(
    template: &TriMesh,
    scan: &TriMesh,
    landmarks: &LandmarkSpec,
    parts: &PartMap,
    options: &RegistrationOptions,
    truth: Option<&[Point]>,
    observer: &mut dyn FnMut(&'static str, &TriMesh) -> Result<()>,
) -> Result<Registration> {
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &'static str, timings: &mut Vec<(&'static str, f64)>| {
        let now = Instant::now();
        timings.push((name, now.duration_since(clock).as_secs_f64()));
        clock = now;
    };

    let aligned = align_scan_to_template(scan, landmarks, template).map_err(|e| e.in_stage("align"))?;
    lap("align", &mut timings);

    let adapted = match options.adaptation {
        Adaptation::None => Ok(template.clone()),
        Adaptation::Lb => adapt_template_lb(template, &aligned.landmarks, parts, options.lambda),
        Adaptation::Gp => adapt_template_gp(template, &aligned.landmarks, &options.gp_kernel(template)),
    }
    .map_err(|e| e.in_stage("adapt"))?;
    let initial_landmark_error = {
        let e = landmark_errors(&adapted, &aligned.landmarks)?;
        e.iter().sum::<f64>() / e.len().max(1) as f64
    };
    lap("adapt", &mut timings);
    observer("adapt", &adapted)?;

    let (icpd, inner_logs) =
        icpd_register_logged(&adapted, &aligned.scan, &options.icpd).map_err(|e| e.in_stage("icpd"))?;
    lap("icpd", &mut timings);
    observer("icpd", &icpd.deformed_template)?;

    let projected = lbrp_project(&icpd.deformed_template, &aligned.scan, options.lambda)
        .map_err(|e| e.in_stage("lbrp"))?;
    let registered = apply_transform(&projected, &aligned.transform.inverse());
    lap("lbrp", &mut timings);
    observer("lbrp", &registered)?;

    let mut report = EvaluationReport::new(&registered, scan, landmarks, truth).map_err(|e| e.in_stage("evaluate"))?;
    lap("evaluate", &mut timings);
    report.initial_landmark_error = initial_landmark_error;
    report.icpd_outer_iterations = icpd.outer_log.len();
    report.icpd_inner_iterations = icpd.total_inner_iterations();
    report.timings = timings;
    Ok(Registration {
        registered,
        adapted_template: adapted,
        transform: aligned.transform,
        icpd,
        inner_logs,
        report,
    })
}
