//! Command-line front end. Exit codes: 0 success, 2 argument error, 3 data error,
//! 4 solver error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::deform::{adapt_template_lb, lbrp_project, DEFAULT_LAMBDA};
use crate::error::{Error, Result};
use crate::gpmm::{adapt_template_gp, GpKernelConfig};
use crate::landmarks::{LandmarkSpec, PartMap};
use crate::mesh::{read_obj, write_obj_file};
use crate::rigid::procrustes;

use super::config::PipelineConfig;
use super::eval::EvaluationReport;
use super::ini::Ini;
use super::output::{landmarks_csv, per_vertex_csv, run_registration};
use super::run::Adaptation;
use super::synth::{make_synthetic_case, SynthSpec, CASE_FILES, DEFAULT_HEAD_FREQUENCY};

#[derive(Debug, Parser)]
#[command(name = "morphreg", version, about = "Non-rigid template-to-scan mesh registration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Register a template onto one scan and write meshes, reports and a manifest.
    Register(RegisterArgs),
    /// Deform the template to the scan's landmark layout.
    Adapt(AdaptArgs),
    /// Snap a morphed template onto a scan under Laplacian regularisation.
    Project(ProjectArgs),
    /// Generate seeded synthetic template/scan pairs with ground truth.
    Synth(SynthArgs),
    /// Score a registered mesh against a scan and optional ground truth.
    Evaluate(EvaluateArgs),
    /// Register every case directory under an input directory in parallel.
    Batch(BatchArgs),
}

#[derive(Debug, Args)]
pub struct RegisterArgs {
    #[arg(long)]
    pub template: Option<PathBuf>,
    #[arg(long)]
    pub scan: Option<PathBuf>,
    #[arg(long)]
    pub template_landmarks: Option<PathBuf>,
    #[arg(long)]
    pub scan_landmarks: Option<PathBuf>,
    #[arg(long)]
    pub parts: Option<PathBuf>,
    /// Ground-truth mesh with template connectivity, for error statistics.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub adaptation: Option<Adaptation>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Config or manifest file; command-line flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Record wall-clock timings (makes outputs run-dependent).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct AdaptArgs {
    #[arg(long)]
    pub template: PathBuf,
    #[arg(long)]
    pub template_landmarks: PathBuf,
    #[arg(long)]
    pub scan_landmarks: PathBuf,
    #[arg(long)]
    pub parts: Option<PathBuf>,
    #[arg(long, default_value = "lb")]
    pub method: Adaptation,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Output OBJ of the adapted template, in the template frame.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// Morphed template, already in the scan frame.
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long)]
    pub scan: PathBuf,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of cases; case `k` uses seed `seed + k`.
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_HEAD_FREQUENCY)]
    pub frequency: usize,
    /// Scan resolution; defaults to the template sampling.
    #[arg(long)]
    pub scan_frequency: Option<usize>,
    #[arg(long, default_value_t = 0.03)]
    pub part_shift: f64,
    #[arg(long, default_value_t = 0.05)]
    pub warp: f64,
    #[arg(long, default_value_t = 0.5)]
    pub warp_smoothness: f64,
    #[arg(long, default_value_t = 0.002)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.0)]
    pub occlusion: f64,
    #[arg(long, default_value_t = 10.0)]
    pub pose: f64,
    /// Manifest of an earlier `synth` run; replaces every option except `--out`.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub registered: PathBuf,
    #[arg(long)]
    pub scan: PathBuf,
    #[arg(long)]
    pub template_landmarks: PathBuf,
    #[arg(long)]
    pub scan_landmarks: PathBuf,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    /// Directory of case subdirectories in the `synth` layout (`truth.obj` optional).
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Config applied to every case; its paths are replaced per case.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub adaptation: Option<Adaptation>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Worker threads; 0 uses one per core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Register(a) => register(a),
        Command::Adapt(a) => adapt(a),
        Command::Project(a) => project(a),
        Command::Synth(a) => synth(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Batch(a) => batch(a),
    }
}

fn register(a: RegisterArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::default(),
    };
    let overrides = [
        (a.template, &mut cfg.template),
        (a.scan, &mut cfg.scan),
        (a.template_landmarks, &mut cfg.template_landmarks),
        (a.scan_landmarks, &mut cfg.scan_landmarks),
        (a.out, &mut cfg.out_dir),
    ];
    for (flag, slot) in overrides {
        if let Some(v) = flag {
            *slot = v;
        }
    }
    if a.parts.is_some() {
        cfg.parts = a.parts;
    }
    if a.truth.is_some() {
        cfg.truth = a.truth;
    }
    if let Some(v) = a.adaptation {
        cfg.options.adaptation = v;
    }
    if let Some(v) = a.lambda {
        cfg.options.lambda = v;
    }
    cfg.record_timing |= a.timing;
    let (_, report) = run_registration(&cfg)?;
    print_summary(&cfg.out_dir, &report);
    Ok(())
}

fn print_summary(dir: &Path, report: &EvaluationReport) {
    let mut line = format!(
        "{}: mean nn {:.4}, mean landmark {:.4}",
        dir.display(),
        report.mean_nn_distance,
        report.mean_landmark_error
    );
    if let Some(gt) = &report.ground_truth {
        let _ = write!(
            line,
            ", ground truth mean {:.4}, within 2% bbox {:.3}",
            gt.mean,
            gt.fraction_within(0.02 * report.scan_bbox_diagonal)
        );
    }
    println!("{line}");
}

fn read_landmarks(template: &Path, scan: &Path) -> Result<LandmarkSpec> {
    LandmarkSpec::from_texts(&fs::read_to_string(template)?, &fs::read_to_string(scan)?)
}

fn adapt(a: AdaptArgs) -> Result<()> {
    let template = read_obj(&a.template)?;
    let lm = read_landmarks(&a.template_landmarks, &a.scan_landmarks)?;
    let parts = match &a.parts {
        Some(p) => PartMap::parse(&fs::read_to_string(p)?)?,
        None => PartMap::from_landmarks(&lm),
    };
    lm.validate(template.num_vertices())?;
    let aligned = lm.transformed(&procrustes(&lm.scan_points, &lm.template_points(&template), false)?);
    let adapted = match a.method {
        Adaptation::None => template.clone(),
        Adaptation::Lb => adapt_template_lb(&template, &aligned, &parts, a.lambda)?,
        Adaptation::Gp => adapt_template_gp(
            &template,
            &aligned,
            &GpKernelConfig::default_for_diagonal(template.bbox_diagonal()),
        )?,
    };
    write_obj_file(&a.out, &adapted, None)
}

fn project(a: ProjectArgs) -> Result<()> {
    let mesh = read_obj(&a.mesh)?;
    let scan = read_obj(&a.scan)?;
    write_obj_file(&a.out, &lbrp_project(&mesh, &scan, a.lambda)?, None)
}

/// Applies the `[synth]` section of a manifest to `a`.
fn synth_from_manifest(a: &mut SynthArgs, path: &Path) -> Result<()> {
    let ini = Ini::parse(&fs::read_to_string(path)?)?;
    let allowed = [
        "seed",
        "count",
        "frequency",
        "scan_frequency",
        "part_shift",
        "warp",
        "warp_smoothness",
        "noise",
        "occlusion",
        "pose",
    ];
    let unknown = ini.unknown_keys(&allowed.map(|k| ("synth", k)));
    if !unknown.is_empty() {
        return Err(Error::argument(format!("unknown manifest keys: {}", unknown.join(", "))));
    }
    let get = |k: &str| ini.get_parsed::<f64>("synth", k);
    a.seed = ini.get_parsed("synth", "seed")?.unwrap_or(a.seed);
    a.count = ini.get_parsed("synth", "count")?.unwrap_or(a.count);
    a.frequency = ini.get_parsed("synth", "frequency")?.unwrap_or(a.frequency);
    a.scan_frequency = ini.get_parsed("synth", "scan_frequency")?;
    a.part_shift = get("part_shift")?.unwrap_or(a.part_shift);
    a.warp = get("warp")?.unwrap_or(a.warp);
    a.warp_smoothness = get("warp_smoothness")?.unwrap_or(a.warp_smoothness);
    a.noise = get("noise")?.unwrap_or(a.noise);
    a.occlusion = get("occlusion")?.unwrap_or(a.occlusion);
    a.pose = get("pose")?.unwrap_or(a.pose);
    Ok(())
}

fn synth(mut a: SynthArgs) -> Result<()> {
    if let Some(path) = a.config.clone() {
        synth_from_manifest(&mut a, &path)?;
    }
    let spec = SynthSpec {
        head_frequency: a.frequency,
        scan_frequency: a.scan_frequency,
        part_shift: a.part_shift,
        warp: a.warp,
        warp_smoothness: a.warp_smoothness,
        noise: a.noise,
        occlusion: a.occlusion,
        pose_degrees: a.pose,
    };
    spec.validate()?;
    fs::create_dir_all(&a.out)?;
    let mut manifest = Ini::default();
    manifest.set("synth", "seed", a.seed);
    manifest.set("synth", "count", a.count);
    manifest.set("synth", "frequency", spec.head_frequency);
    if let Some(f) = spec.scan_frequency {
        manifest.set("synth", "scan_frequency", f);
    }
    for (k, v) in [
        ("part_shift", spec.part_shift),
        ("warp", spec.warp),
        ("warp_smoothness", spec.warp_smoothness),
        ("noise", spec.noise),
        ("occlusion", spec.occlusion),
        ("pose", spec.pose_degrees),
    ] {
        manifest.set("synth", k, format!("{v:?}"));
    }
    fs::write(a.out.join("manifest.txt"), manifest.to_text())?;
    for k in 0..a.count {
        let seed = a.seed + k;
        make_synthetic_case(seed, &spec)?.write_to(&a.out.join(format!("case_{seed:03}")))?;
    }
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let registered = read_obj(&a.registered)?;
    let scan = read_obj(&a.scan)?;
    let lm = read_landmarks(&a.template_landmarks, &a.scan_landmarks)?;
    let truth = a.truth.as_ref().map(read_obj).transpose()?;
    let report = EvaluationReport::new(&registered, &scan, &lm, truth.as_ref().map(|t| t.vertices()))?;
    fs::create_dir_all(&a.out)?;
    fs::write(a.out.join("report.csv"), report.to_csv())?;
    fs::write(a.out.join("per_vertex.csv"), per_vertex_csv(&report))?;
    fs::write(a.out.join("landmarks.csv"), landmarks_csv(&report))?;
    print_summary(&a.out, &report);
    Ok(())
}

/// Subdirectories of `dir` that contain a scan, sorted by name.
fn case_dirs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut cases = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() && path.join(CASE_FILES[2]).is_file() {
            cases.push(path);
        }
    }
    cases.sort();
    Ok(cases)
}

fn aggregate_row(name: &str, result: &Result<(crate::mesh::TriMesh, EvaluationReport)>) -> String {
    match result {
        Ok((_, r)) => {
            let (gt_mean, gt_frac) = match &r.ground_truth {
                Some(gt) => (
                    format!("{:.9e}", gt.mean),
                    format!("{:.9}", gt.fraction_within(0.02 * r.scan_bbox_diagonal)),
                ),
                None => ("NA".into(), "NA".into()),
            };
            format!(
                "{name},ok,{:.9e},{:.9e},{gt_mean},{gt_frac},{},{}\n",
                r.mean_nn_distance, r.mean_landmark_error, r.icpd_outer_iterations, r.icpd_inner_iterations
            )
        }
        Err(e) => format!("{name},failed_exit_{},NA,NA,NA,NA,NA,NA\n", e.exit_code()),
    }
}

fn batch(a: BatchArgs) -> Result<()> {
    let base = match &a.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::default(),
    };
    let cases = case_dirs(&a.input)?;
    if cases.is_empty() {
        return Err(Error::argument(format!("no case directories under `{}`", a.input.display())));
    }
    fs::create_dir_all(&a.out)?;
    let configs: Vec<(String, PipelineConfig)> = cases
        .iter()
        .map(|dir| {
            let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            let mut cfg = base.clone();
            cfg.template = dir.join(CASE_FILES[0]);
            cfg.template_landmarks = dir.join(CASE_FILES[1]);
            cfg.scan = dir.join(CASE_FILES[2]);
            cfg.scan_landmarks = dir.join(CASE_FILES[3]);
            cfg.parts = Some(dir.join(CASE_FILES[4])).filter(|p| p.is_file());
            cfg.truth = Some(dir.join(CASE_FILES[5])).filter(|p| p.is_file());
            cfg.out_dir = a.out.join(&name);
            if let Some(v) = a.adaptation {
                cfg.options.adaptation = v;
            }
            if let Some(v) = a.lambda {
                cfg.options.lambda = v;
            }
            (name, cfg)
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| Error::argument(format!("cannot start worker pool: {e}")))?;
    let results: Vec<_> = pool.install(|| configs.par_iter().map(|(_, cfg)| run_registration(cfg)).collect());

    let mut aggregate = String::from(
        "case,status,mean_nn_dist,mean_landmark_error,gt_mean_error,gt_fraction_within_2pct_bbox,\
         icpd_outer_iterations,icpd_inner_iterations\n",
    );
    let mut failures = 0;
    for ((name, _), result) in configs.iter().zip(&results) {
        aggregate.push_str(&aggregate_row(name, result));
        match result {
            Ok((_, report)) => print_summary(&a.out.join(name), report),
            Err(e) => {
                failures += 1;
                eprintln!("{name}: {e}");
            }
        }
    }
    fs::write(a.out.join("aggregate.csv"), aggregate)?;
    println!("{} of {} cases registered", results.len() - failures, results.len());
    Ok(())
}
