//! File-driven pipeline configuration and its INI representation.
//!
//! The manifest written next to every run is the same format with every value filled in,
//! so feeding it back as a config reproduces the run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::cpd::CpdConfig;
use crate::error::{Error, Result};
use crate::gpmm::GpKernelConfig;
use crate::icpd::IcpdConfig;

use super::ini::Ini;
use super::run::{Adaptation, RegistrationOptions};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PipelineConfig {
    pub template: PathBuf,
    pub template_landmarks: PathBuf,
    pub scan: PathBuf,
    pub scan_landmarks: PathBuf,
    /// `None` takes parts from the scan landmark labels.
    pub parts: Option<PathBuf>,
    /// Optional ground-truth mesh with template connectivity, in the scan frame.
    pub truth: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub options: RegistrationOptions,
    /// Write wall-clock timings; off by default so outputs are bit-reproducible.
    pub record_timing: bool,
}

const CPD_KEYS: [&str; 6] = ["outlier_weight", "beta", "lambda", "max_iter", "tol", "prior_strength"];

fn allowed_keys() -> Vec<(&'static str, &'static str)> {
    let mut keys = vec![
        ("paths", "template"),
        ("paths", "template_landmarks"),
        ("paths", "scan"),
        ("paths", "scan_landmarks"),
        ("paths", "parts"),
        ("paths", "truth"),
        ("paths", "out"),
        ("registration", "adaptation"),
        ("registration", "lambda"),
        ("registration", "record_timing"),
        ("gp", "scales"),
        ("gp", "noise_variance"),
        ("icpd", "outer_max_iter"),
        ("icpd", "corr_stable_fraction"),
        ("icpd", "subsample_target"),
        ("icpd", "affine_every_iteration"),
    ];
    for s in ["cpd_affine", "cpd_nonrigid"] {
        keys.extend(CPD_KEYS.iter().map(|k| (s, *k)));
    }
    keys
}

/// `amplitude:length` pairs separated by commas.
fn parse_scales(text: &str) -> Result<Vec<(f64, f64)>> {
    text.split(',')
        .map(|pair| {
            let (a, l) = pair
                .split_once(':')
                .ok_or_else(|| Error::argument(format!("GP scale `{pair}` is not `amplitude:length`")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::argument(format!("GP scale `{pair}` is not numeric")))
            };
            Ok((parse(a)?, parse(l)?))
        })
        .collect()
}

fn format_scales(scales: &[(f64, f64)]) -> String {
    let mut out = String::new();
    for (i, (a, l)) in scales.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{a:?}:{l:?}");
    }
    out
}

fn read_cpd(ini: &Ini, section: &str, mut cfg: CpdConfig) -> Result<CpdConfig> {
    if let Some(v) = ini.get_parsed(section, "outlier_weight")? {
        cfg.outlier_weight = v;
    }
    if let Some(v) = ini.get_parsed(section, "beta")? {
        cfg.beta = v;
    }
    if let Some(v) = ini.get_parsed(section, "lambda")? {
        cfg.lambda = v;
    }
    if let Some(v) = ini.get_parsed(section, "max_iter")? {
        cfg.max_iter = v;
    }
    if let Some(v) = ini.get_parsed(section, "tol")? {
        cfg.tol = v;
    }
    if let Some(v) = ini.get_parsed(section, "prior_strength")? {
        cfg.prior_strength = v;
    }
    Ok(cfg)
}

fn write_cpd(ini: &mut Ini, section: &str, cfg: &CpdConfig) {
    ini.set(section, "outlier_weight", format!("{:?}", cfg.outlier_weight));
    ini.set(section, "beta", format!("{:?}", cfg.beta));
    ini.set(section, "lambda", format!("{:?}", cfg.lambda));
    ini.set(section, "max_iter", cfg.max_iter);
    ini.set(section, "tol", format!("{:?}", cfg.tol));
    ini.set(section, "prior_strength", format!("{:?}", cfg.prior_strength));
}

impl PipelineConfig {
    /// Unknown keys are rejected so typos cannot silently fall back to defaults.
    pub fn from_ini(ini: &Ini) -> Result<Self> {
        let unknown = ini.unknown_keys(&allowed_keys());
        if !unknown.is_empty() {
            return Err(Error::argument(format!("unknown config keys: {}", unknown.join(", "))));
        }
        let path = |k: &str| ini.get("paths", k).map(PathBuf::from);
        let mut options = RegistrationOptions::default();
        if let Some(a) = ini.get("registration", "adaptation") {
            options.adaptation = a.parse::<Adaptation>()?;
        }
        if let Some(v) = ini.get_parsed("registration", "lambda")? {
            options.lambda = v;
        }
        if let Some(s) = ini.get("gp", "scales") {
            let noise = ini
                .get_parsed("gp", "noise_variance")?
                .ok_or_else(|| Error::argument("[gp] scales given without noise_variance"))?;
            options.gp = Some(GpKernelConfig::new(parse_scales(s)?, noise)?);
        } else if ini.get("gp", "noise_variance").is_some() {
            return Err(Error::argument("[gp] noise_variance given without scales"));
        }
        let mut icpd = IcpdConfig::default();
        if let Some(v) = ini.get_parsed("icpd", "outer_max_iter")? {
            icpd.outer_max_iter = v;
        }
        if let Some(v) = ini.get_parsed("icpd", "corr_stable_fraction")? {
            icpd.corr_stable_fraction = v;
        }
        match ini.get("icpd", "subsample_target") {
            None | Some("template") => {}
            Some(_) => icpd.subsample_target = ini.get_parsed("icpd", "subsample_target")?,
        }
        if let Some(v) = ini.get_parsed("icpd", "affine_every_iteration")? {
            icpd.affine_every_iteration = v;
        }
        icpd.affine = read_cpd(ini, "cpd_affine", icpd.affine)?;
        icpd.nonrigid = read_cpd(ini, "cpd_nonrigid", icpd.nonrigid)?;
        options.icpd = icpd;
        Ok(Self {
            template: path("template").unwrap_or_default(),
            template_landmarks: path("template_landmarks").unwrap_or_default(),
            scan: path("scan").unwrap_or_default(),
            scan_landmarks: path("scan_landmarks").unwrap_or_default(),
            parts: path("parts"),
            truth: path("truth"),
            out_dir: path("out").unwrap_or_default(),
            options,
            record_timing: ini.get_parsed("registration", "record_timing")?.unwrap_or(false),
        })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_ini(&Ini::parse(&std::fs::read_to_string(path)?)?)
    }

    /// Every parameter; `gp` is the kernel actually used, which the options may leave implicit.
    pub fn to_ini(&self, gp: Option<&GpKernelConfig>) -> Ini {
        let mut ini = Ini::default();
        let p = |p: &Path| p.display().to_string();
        ini.set("paths", "template", p(&self.template));
        ini.set("paths", "template_landmarks", p(&self.template_landmarks));
        ini.set("paths", "scan", p(&self.scan));
        ini.set("paths", "scan_landmarks", p(&self.scan_landmarks));
        if let Some(parts) = &self.parts {
            ini.set("paths", "parts", p(parts));
        }
        if let Some(truth) = &self.truth {
            ini.set("paths", "truth", p(truth));
        }
        ini.set("paths", "out", p(&self.out_dir));
        let o = &self.options;
        ini.set("registration", "adaptation", o.adaptation);
        ini.set("registration", "lambda", format!("{:?}", o.lambda));
        ini.set("registration", "record_timing", self.record_timing);
        if let Some(gp) = gp.or(o.gp.as_ref()) {
            ini.set("gp", "scales", format_scales(&gp.scales));
            ini.set("gp", "noise_variance", format!("{:?}", gp.noise_variance));
        }
        ini.set("icpd", "outer_max_iter", o.icpd.outer_max_iter);
        ini.set("icpd", "corr_stable_fraction", format!("{:?}", o.icpd.corr_stable_fraction));
        match o.icpd.subsample_target {
            Some(n) => ini.set("icpd", "subsample_target", n),
            None => ini.set("icpd", "subsample_target", "template"),
        }
        ini.set("icpd", "affine_every_iteration", o.icpd.affine_every_iteration);
        write_cpd(&mut ini, "cpd_affine", &o.icpd.affine);
        write_cpd(&mut ini, "cpd_nonrigid", &o.icpd.nonrigid);
        ini
    }

    /// Checks option ranges and that every input path exists.
    pub fn validate(&self) -> Result<()> {
        if !(self.options.lambda > 0.0 && self.options.lambda.is_finite()) {
            return Err(Error::argument(format!("lambda must be positive, got {}", self.options.lambda)));
        }
        self.options.icpd.validate()?;
        if let Some(gp) = &self.options.gp {
            gp.validate()?;
        }
        let inputs = [
            ("template", Some(&self.template)),
            ("template landmarks", Some(&self.template_landmarks)),
            ("scan", Some(&self.scan)),
            ("scan landmarks", Some(&self.scan_landmarks)),
            ("parts", self.parts.as_ref()),
            ("truth", self.truth.as_ref()),
        ];
        for (name, path) in inputs {
            if let Some(path) = path {
                if path.as_os_str().is_empty() {
                    return Err(Error::argument(format!("no {name} path given")));
                }
                if !path.is_file() {
                    return Err(Error::argument(format!("{name} file `{}` does not exist", path.display())));
                }
            }
        }
        if self.out_dir.as_os_str().is_empty() {
            return Err(Error::argument("no output directory given"));
        }
        Ok(())
    }
}
