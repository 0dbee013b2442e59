//! Writes a synthetic case to disk, runs the file-based pipeline on it and lists the outputs.

use morphreg::pipeline::{make_synthetic_case, run_registration, PipelineConfig, SynthSpec, CASE_FILES};

fn main() -> morphreg::Result<()> {
    let root = std::env::temp_dir().join("morphreg_full_pipeline");
    let input = root.join("case");
    make_synthetic_case(0, &SynthSpec::standard(6))?.write_to(&input)?;

    let cfg = PipelineConfig {
        template: input.join(CASE_FILES[0]),
        template_landmarks: input.join(CASE_FILES[1]),
        scan: input.join(CASE_FILES[2]),
        scan_landmarks: input.join(CASE_FILES[3]),
        parts: Some(input.join(CASE_FILES[4])),
        truth: Some(input.join(CASE_FILES[5])),
        out_dir: root.join("out"),
        record_timing: true,
        ..Default::default()
    };
    let (_, report) = run_registration(&cfg)?;
    print!("{}", report.to_csv());
    print!("{}", report.timing_text());

    let mut files: Vec<_> = std::fs::read_dir(&cfg.out_dir)?
        .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect();
    files.sort();
    println!("outputs in {}: {}", cfg.out_dir.display(), files.join(", "));
    Ok(())
}
