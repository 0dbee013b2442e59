//! Registration quality metrics.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::landmarks::LandmarkSpec;
use crate::mesh::{per_vertex_nearest_distance, Point, TriMesh};

/// Thresholds of the cumulative error curve, in input units (millimetres for head scans).
pub const CURVE_THRESHOLDS: [f64; 5] = [0.5, 1.0, 2.0, 3.0, 5.0];

/// Fraction of `errors` at or below each threshold.
pub fn cumulative_curve(errors: &[f64], thresholds: &[f64]) -> Vec<(f64, f64)> {
    let n = errors.len().max(1) as f64;
    thresholds
        .iter()
        .map(|&t| (t, errors.iter().filter(|&&e| e <= t).count() as f64 / n))
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Per-vertex errors against known true positions.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthErrors {
    pub errors: Vec<f64>,
    pub mean: f64,
    pub curve: Vec<(f64, f64)>,
}

impl GroundTruthErrors {
    /// Fraction of vertices with error at most `threshold`.
    pub fn fraction_within(&self, threshold: f64) -> f64 {
        cumulative_curve(&self.errors, &[threshold])[0].1
    }
}

pub fn evaluate_against_ground_truth(registered: &TriMesh, truth: &[Point]) -> Result<GroundTruthErrors> {
    if registered.num_vertices() != truth.len() {
        return Err(Error::argument(format!(
            "registered mesh has {} vertices but the ground truth has {}",
            registered.num_vertices(),
            truth.len()
        )));
    }
    let errors: Vec<f64> = registered
        .vertices()
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b).norm())
        .collect();
    Ok(GroundTruthErrors {
        mean: mean(&errors),
        curve: cumulative_curve(&errors, &CURVE_THRESHOLDS),
        errors,
    })
}

/// Distances from registered landmark vertices to the scan landmark points.
pub fn landmark_errors(registered: &TriMesh, lm: &LandmarkSpec) -> Result<Vec<f64>> {
    lm.validate(registered.num_vertices())?;
    Ok(lm
        .template_points(registered)
        .iter()
        .zip(&lm.scan_points)
        .map(|(a, b)| (a - b).norm())
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub nn_distances: Vec<f64>,
    pub mean_nn_distance: f64,
    pub scan_bbox_diagonal: f64,
    pub landmark_errors: Vec<f64>,
    pub mean_landmark_error: f64,
    /// Landmark error of the template entering ICPD (after optional adaptation).
    pub initial_landmark_error: f64,
    pub curve: Vec<(f64, f64)>,
    pub ground_truth: Option<GroundTruthErrors>,
    pub icpd_outer_iterations: usize,
    pub icpd_inner_iterations: usize,
    /// Wall-clock seconds per stage, in execution order.
    pub timings: Vec<(&'static str, f64)>,
}

impl EvaluationReport {
    pub fn new(registered: &TriMesh, scan: &TriMesh, lm: &LandmarkSpec, truth: Option<&[Point]>) -> Result<Self> {
        let nn = per_vertex_nearest_distance(registered, scan)?;
        let landmark_errors = landmark_errors(registered, lm)?;
        let ground_truth = truth.map(|t| evaluate_against_ground_truth(registered, t)).transpose()?;
        Ok(Self {
            curve: cumulative_curve(&nn.distances, &CURVE_THRESHOLDS),
            mean_nn_distance: nn.mean,
            nn_distances: nn.distances,
            scan_bbox_diagonal: scan.bbox_diagonal(),
            mean_landmark_error: mean(&landmark_errors),
            landmark_errors,
            initial_landmark_error: 0.0,
            ground_truth,
            icpd_outer_iterations: 0,
            icpd_inner_iterations: 0,
            timings: Vec::new(),
        })
    }

    fn pct(&self, v: f64) -> f64 {
        if self.scan_bbox_diagonal > 0.0 {
            100.0 * v / self.scan_bbox_diagonal
        } else {
            0.0
        }
    }

    /// `metric,value` rows; timing is kept out so the file is reproducible.
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<(String, String)> = vec![
            ("mean_nn_dist".into(), format!("{:.9e}", self.mean_nn_distance)),
            ("mean_nn_dist_pct_bbox".into(), format!("{:.9e}", self.pct(self.mean_nn_distance))),
            ("mean_landmark_error".into(), format!("{:.9e}", self.mean_landmark_error)),
            ("mean_landmark_error_pct_bbox".into(), format!("{:.9e}", self.pct(self.mean_landmark_error))),
            ("initial_landmark_error".into(), format!("{:.9e}", self.initial_landmark_error)),
            ("scan_bbox_diagonal".into(), format!("{:.9e}", self.scan_bbox_diagonal)),
            ("icpd_outer_iterations".into(), self.icpd_outer_iterations.to_string()),
            ("icpd_inner_iterations".into(), self.icpd_inner_iterations.to_string()),
        ];
        for (t, f) in &self.curve {
            rows.push((format!("nn_fraction_within_{t}"), format!("{f:.9}")));
        }
        if let Some(gt) = &self.ground_truth {
            rows.push(("gt_mean_error".into(), format!("{:.9e}", gt.mean)));
            rows.push(("gt_mean_error_pct_bbox".into(), format!("{:.9e}", self.pct(gt.mean))));
            rows.push((
                "gt_fraction_within_2pct_bbox".into(),
                format!("{:.9}", gt.fraction_within(0.02 * self.scan_bbox_diagonal)),
            ));
            for (t, f) in &gt.curve {
                rows.push((format!("gt_fraction_within_{t}"), format!("{f:.9}")));
            }
        }
        let mut out = String::from("metric,value\n");
        for (k, v) in rows {
            let _ = writeln!(out, "{k},{v}");
        }
        out
    }

    pub fn timing_text(&self) -> String {
        let mut out = String::new();
        for (stage, s) in &self.timings {
            let _ = writeln!(out, "{stage} {s:.6}");
        }
        out
    }
}
