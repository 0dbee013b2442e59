//! Recovers a rigid pose from noisy landmark pairs.

use morphreg::pipeline::{make_synthetic_case, SynthSpec};
use morphreg::rigid::{align_scan_to_template, rms_distance};

fn main() -> morphreg::Result<()> {
    let mut spec = SynthSpec::zero(6);
    spec.pose_degrees = 35.0;
    spec.noise = 0.002;
    let case = make_synthetic_case(7, &spec)?;

    let before = rms_distance(&case.landmarks.scan_points, &case.landmarks.template_points(&case.template));
    let aligned = align_scan_to_template(&case.scan, &case.landmarks, &case.template)?;
    let after = rms_distance(&aligned.landmarks.scan_points, &aligned.landmarks.template_points(&case.template));
    println!("landmark RMS before {before:.2} mm, after {after:.3} mm");

    let recovered = aligned.transform.compose(&case.pose);
    let angle = nalgebra::Rotation3::from_matrix(&recovered.rotation).angle().to_degrees();
    println!(
        "residual rotation {angle:.3} deg, residual translation {:.3} mm",
        recovered.translation.norm()
    );
    Ok(())
}
