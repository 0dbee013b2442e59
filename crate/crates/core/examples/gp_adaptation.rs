//! Adapts the head template to displaced landmarks with a Gaussian-process posterior mean.

use morphreg::gpmm::{gp_posterior_mean, GpKernelConfig};
use morphreg::landmarks::LandmarkSpec;
use morphreg::pipeline::{head_landmarks, head_mesh};
use nalgebra::Vector3;

fn main() -> morphreg::Result<()> {
    let head = head_mesh(6)?;
    let (idx, labels) = head_landmarks(6)?;
    let shift = Vector3::new(0.0, 6.0, 4.0);
    let scan_points = idx.iter().map(|&i| head.vertices()[i] + shift).collect();
    let lm = LandmarkSpec::new(idx.clone(), scan_points, Some(labels))?;

    let cfg = GpKernelConfig::default_for_diagonal(head.bbox_diagonal());
    println!("kernel scales (amplitude, length): {:?}, noise {:.3e}", cfg.scales, cfg.noise_variance);
    let field = gp_posterior_mean(&head, &lm, &cfg)?;

    let at_landmarks = idx
        .iter()
        .map(|&i| (field.displacements[i] - shift).norm())
        .fold(0.0, f64::max);
    let back = (0..head.num_vertices())
        .min_by(|&a, &b| head.vertices()[a].z.total_cmp(&head.vertices()[b].z))
        .unwrap_or(0);
    println!("largest miss at a landmark: {at_landmarks:.3} mm of {:.1} mm", shift.norm());
    println!("displacement at the back of the head: {:.3} mm", field.displacements[back].norm());
    Ok(())
}
