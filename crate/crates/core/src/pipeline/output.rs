//! File-based registration runs: input loading, output files and the failure marker.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::cpd::format_cpd_log;
use crate::error::{Error, Result};
use crate::icpd::format_icpd_log;
use crate::landmarks::{LandmarkSpec, PartMap};
use crate::mesh::{read_obj, write_obj_file, TriMesh};

use super::config::PipelineConfig;
use super::eval::EvaluationReport;
use super::run::{register_observed, Adaptation, Registration};

/// Name of the marker file left in the output directory when a run fails.
pub const FAILED_MARKER: &str = "FAILED";

/// Everything a registration run reads from disk.
#[derive(Debug, Clone)]
pub struct RegistrationInputs {
    pub template: TriMesh,
    pub scan: TriMesh,
    pub landmarks: LandmarkSpec,
    pub parts: PartMap,
    pub truth: Option<TriMesh>,
}

impl RegistrationInputs {
    pub fn load(cfg: &PipelineConfig) -> Result<Self> {
        let template = read_obj(&cfg.template)?;
        let scan = read_obj(&cfg.scan)?;
        let landmarks = LandmarkSpec::from_texts(
            &fs::read_to_string(&cfg.template_landmarks)?,
            &fs::read_to_string(&cfg.scan_landmarks)?,
        )?;
        landmarks.validate(template.num_vertices())?;
        let parts = match &cfg.parts {
            Some(p) => PartMap::parse(&fs::read_to_string(p)?)?,
            None => PartMap::from_landmarks(&landmarks),
        };
        parts.validate(landmarks.len())?;
        let truth = cfg.truth.as_ref().map(read_obj).transpose()?;
        Ok(Self {
            template,
            scan,
            landmarks,
            parts,
            truth,
        })
    }
}

/// `vertex,nn_dist[,gt_error]` rows.
pub fn per_vertex_csv(report: &EvaluationReport) -> String {
    let mut out = String::from("vertex,nn_dist");
    if report.ground_truth.is_some() {
        out.push_str(",gt_error");
    }
    out.push('\n');
    for (i, d) in report.nn_distances.iter().enumerate() {
        let _ = write!(out, "{i},{d:.9e}");
        if let Some(gt) = &report.ground_truth {
            let _ = write!(out, ",{:.9e}", gt.errors[i]);
        }
        out.push('\n');
    }
    out
}

/// `landmark,error` rows.
pub fn landmarks_csv(report: &EvaluationReport) -> String {
    let mut out = String::from("landmark,error\n");
    for (i, e) in report.landmark_errors.iter().enumerate() {
        let _ = writeln!(out, "{i},{e:.9e}");
    }
    out
}

/// Writes the final meshes, reports and logs of a finished registration into `dir`.
pub fn write_registration_outputs(dir: &Path, reg: &Registration, record_timing: bool) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_obj_file(dir.join("registered.obj"), &reg.registered, None)?;
    write_obj_file(
        dir.join("registered_error.obj"),
        &reg.registered,
        Some(&reg.report.nn_distances),
    )?;
    fs::write(dir.join("report.csv"), reg.report.to_csv())?;
    fs::write(dir.join("per_vertex.csv"), per_vertex_csv(&reg.report))?;
    fs::write(dir.join("landmarks.csv"), landmarks_csv(&reg.report))?;
    fs::write(dir.join("icpd_log.csv"), format_icpd_log(&reg.icpd.outer_log, record_timing))?;
    let cpd_dir = dir.join("cpd");
    fs::create_dir_all(&cpd_dir)?;
    for (k, log) in reg.inner_logs.affine.iter().enumerate() {
        fs::write(cpd_dir.join(format!("affine_{:02}.csv", k + 1)), format_cpd_log(log))?;
    }
    for (k, log) in reg.inner_logs.nonrigid.iter().enumerate() {
        fs::write(cpd_dir.join(format!("nonrigid_{:02}.csv", k + 1)), format_cpd_log(log))?;
    }
    if record_timing {
        fs::write(dir.join("timing.txt"), reg.report.timing_text())?;
    }
    Ok(())
}

/// Removes a stale failure marker and makes sure `dir` exists.
pub fn prepare_output_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let marker = dir.join(FAILED_MARKER);
    if marker.exists() {
        fs::remove_file(marker)?;
    }
    Ok(())
}

/// Records `err` in the failure marker; a failure to write the marker is ignored.
pub fn mark_failed(dir: &Path, err: &Error) {
    let _ = fs::create_dir_all(dir);
    let _ = fs::write(dir.join(FAILED_MARKER), format!("{err}\n"));
}

/// Runs the whole pipeline from files, writing outputs into `cfg.out_dir`.
///
/// Intermediate meshes are written as each stage ends, so a failed run leaves the outputs
/// of every completed stage plus a `FAILED` marker.
pub fn run_registration(cfg: &PipelineConfig) -> Result<(TriMesh, EvaluationReport)> {
    let dir = cfg.out_dir.clone();
    if dir.as_os_str().is_empty() {
        return Err(Error::argument("no output directory given"));
    }
    prepare_output_dir(&dir)?;
    let result = run_in(cfg, &dir);
    if let Err(e) = &result {
        mark_failed(&dir, e);
    }
    result
}

fn run_in(cfg: &PipelineConfig, dir: &Path) -> Result<(TriMesh, EvaluationReport)> {
    cfg.validate()?;
    let inputs = RegistrationInputs::load(cfg).map_err(|e| e.in_stage("load"))?;
    let gp = (cfg.options.adaptation == Adaptation::Gp).then(|| cfg.options.gp_kernel(&inputs.template));
    fs::write(dir.join("manifest.txt"), cfg.to_ini(gp.as_ref()).to_text())?;

    let mut observer = |stage: &'static str, mesh: &TriMesh| -> Result<()> {
        let name: PathBuf = match stage {
            "adapt" => "adapted_template.obj".into(),
            "icpd" => "icpd_template.obj".into(),
            _ => return Ok(()),
        };
        write_obj_file(dir.join(name), mesh, None)
    };
    let reg = register_observed(
        &inputs.template,
        &inputs.scan,
        &inputs.landmarks,
        &inputs.parts,
        &cfg.options,
        inputs.truth.as_ref().map(|t| t.vertices()),
        &mut observer,
    )?;
    write_registration_outputs(dir, &reg, cfg.record_timing)?;
    Ok((reg.registered, reg.report))
}
