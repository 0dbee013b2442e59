//! Iterative CPD: alternates closest-point correspondences with prior-biased CPD until the
//! mutual correspondences stop changing.

use std::fmt::Write as _;
use std::time::Instant;

use crate::cpd::{cpd_affine, cpd_nonrigid, CpdConfig};
use crate::error::{Error, Result};
use crate::mesh::{
    farthest_point_sampling, mutual_nearest_neighbors, nearest_neighbors, per_vertex_nearest_distance,
    Correspondences, Point, TriMesh,
};

#[derive(Debug, Clone, PartialEq)]
pub struct IcpdConfig {
    pub outer_max_iter: usize,
    /// Stop once fewer than this fraction of template points change partner.
    pub corr_stable_fraction: f64,
    /// Scan point budget; `None` uses the template vertex count.
    pub subsample_target: Option<usize>,
    pub affine: CpdConfig,
    pub nonrigid: CpdConfig,
    /// Run the affine adjustment in every outer iteration rather than only the first.
    pub affine_every_iteration: bool,
}

impl Default for IcpdConfig {
    fn default() -> Self {
        Self {
            outer_max_iter: 10,
            corr_stable_fraction: 0.005,
            subsample_target: None,
            affine: CpdConfig::affine(),
            nonrigid: CpdConfig::nonrigid(),
            affine_every_iteration: true,
        }
    }
}

impl IcpdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.outer_max_iter == 0 {
            return Err(Error::argument("ICPD needs at least one outer iteration"));
        }
        if !(self.corr_stable_fraction > 0.0 && self.corr_stable_fraction < 1.0) {
            return Err(Error::argument(format!(
                "correspondence stability fraction must lie in (0, 1), got {}",
                self.corr_stable_fraction
            )));
        }
        if self.subsample_target == Some(0) {
            return Err(Error::argument("scan subsample budget must be positive"));
        }
        self.affine.validate()?;
        self.nonrigid.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcpdIteration {
    pub outer_iter: usize,
    pub corr_changed: usize,
    /// Mean distance from the template vertices to their nearest full-scan vertex.
    pub mean_nn_dist: f64,
    pub inner_affine_iters: usize,
    pub inner_nonrigid_iters: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct IcpdResult {
    pub deformed_template: TriMesh,
    /// Mutual nearest neighbours between the final template and the scan sample,
    /// with destinations indexing the full scan.
    pub final_correspondences: Correspondences,
    pub outer_log: Vec<IcpdIteration>,
    /// Scan vertex indices used as the CPD target, ascending.
    pub sample: Vec<usize>,
}

impl IcpdResult {
    pub fn total_inner_iterations(&self) -> usize {
        self.outer_log
            .iter()
            .map(|r| r.inner_affine_iters + r.inner_nonrigid_iters)
            .sum()
    }
}

/// Outer log as CSV; the `seconds` column reads `NA` unless `with_timing` is set.
pub fn format_icpd_log(log: &[IcpdIteration], with_timing: bool) -> String {
    let mut out =
        String::from("outer_iter,corr_changed,mean_nn_dist,inner_affine_iters,inner_nonrigid_iters,seconds\n");
    for r in log {
        let _ = write!(
            out,
            "{},{},{:.12e},{},{},",
            r.outer_iter, r.corr_changed, r.mean_nn_dist, r.inner_affine_iters, r.inner_nonrigid_iters
        );
        if with_timing {
            let _ = writeln!(out, "{:.6}", r.seconds);
        } else {
            out.push_str("NA\n");
        }
    }
    out
}

/// Inner CPD logs of one registration, kept for auditing.
#[derive(Debug, Clone, Default)]
pub struct InnerLogs {
    pub affine: Vec<Vec<crate::cpd::CpdIteration>>,
    pub nonrigid: Vec<Vec<crate::cpd::CpdIteration>>,
}

pub fn icpd_register(template: &TriMesh, scan: &TriMesh, cfg: &IcpdConfig) -> Result<IcpdResult> {
    icpd_register_logged(template, scan, cfg).map(|(r, _)| r)
}

/// As [`icpd_register`], also returning every inner CPD iteration log.
pub fn icpd_register_logged(template: &TriMesh, scan: &TriMesh, cfg: &IcpdConfig) -> Result<(IcpdResult, InnerLogs)> {
    cfg.validate()?;
    let m = template.num_vertices();
    let budget = cfg.subsample_target.unwrap_or(m);
    let sample = farthest_point_sampling(scan.vertices(), budget);
    let target: Vec<Point> = sample.iter().map(|&i| scan.vertices()[i]).collect();

    let mut current = template.vertices().to_vec();
    let mut log = Vec::new();
    let mut inner = InnerLogs::default();
    let mut final_pairs = None;
    for outer in 1..=cfg.outer_max_iter {
        let start = Instant::now();
        let mut affine_iters = 0;
        if outer == 1 || cfg.affine_every_iteration {
            let idx1 = nearest_neighbors(&current, &target)?;
            let closest: Vec<Point> = idx1.iter().map(|nb| target[nb.index]).collect();
            let aff = cpd_affine(&current, &closest, &cfg.affine).map_err(|e| e.in_stage("icpd affine"))?;
            current = current.iter().map(|p| aff.b * p + aff.t).collect();
            affine_iters = aff.log.len();
            inner.affine.push(aff.log);
        }
        let idx2 = mutual_nearest_neighbors(&current, &target)?;
        if idx2.is_empty() {
            return Err(Error::Alignment(
                "no mutual nearest neighbours between template and scan; check the rigid alignment".into(),
            ));
        }
        let nr = cpd_nonrigid(&current, &target, &cfg.nonrigid, Some(&idx2))
            .map_err(|e| e.in_stage("icpd nonrigid"))?;
        current = nr.deformed;
        let nonrigid_iters = nr.log.len();
        inner.nonrigid.push(nr.log);

        let after = mutual_nearest_neighbors(&current, &target)?;
        let changed = idx2.count_changed(&after);
        let deformed = template.with_vertices(current.clone())?;
        let mean_nn_dist = per_vertex_nearest_distance(&deformed, scan)?.mean;
        log.push(IcpdIteration {
            outer_iter: outer,
            corr_changed: changed,
            mean_nn_dist,
            inner_affine_iters: affine_iters,
            inner_nonrigid_iters: nonrigid_iters,
            seconds: start.elapsed().as_secs_f64(),
        });
        final_pairs = Some(after);
        if (changed as f64) < cfg.corr_stable_fraction * m as f64 {
            break;
        }
    }
    let pairs = final_pairs.expect("at least one outer iteration ran");
    let final_correspondences = Correspondences::new(
        pairs
            .pairs()
            .iter()
            .map(|c| crate::mesh::Correspondence {
                src: c.src,
                dst: sample[c.dst],
                weight: c.weight,
            })
            .collect(),
    )?;
    Ok((
        IcpdResult {
            deformed_template: template.with_vertices(current)?,
            final_correspondences,
            outer_log: log,
            sample,
        },
        inner,
    ))
}
