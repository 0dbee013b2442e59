//! Affine and non-rigid coherent point drift between two point clouds.

use morphreg::cpd::{cpd_affine, cpd_nonrigid, CpdConfig};
use morphreg::pipeline::head_mesh;
use morphreg::Point;
use nalgebra::Matrix3;

fn main() -> morphreg::Result<()> {
    let head = head_mesh(4)?;
    let template: Vec<Point> = head.vertices().to_vec();

    let b = Matrix3::new(1.1, 0.05, 0.0, -0.04, 0.95, 0.1, 0.0, 0.02, 1.05);
    let t = nalgebra::Vector3::new(5.0, -3.0, 2.0);
    let target: Vec<Point> = template.iter().map(|p| b * p + t).collect();
    let affine = cpd_affine(&template, &target, &CpdConfig::affine())?;
    println!(
        "affine: {} iterations ({:?}), relative error of B {:.2e}",
        affine.log.len(),
        affine.termination,
        (affine.b - b).norm() / b.norm()
    );

    let bent: Vec<Point> = template
        .iter()
        .map(|p| p + nalgebra::Vector3::new(0.0, 8.0 * (p.x / 60.0).sin(), 0.0))
        .collect();
    let nonrigid = cpd_nonrigid(&template, &bent, &CpdConfig::nonrigid(), None)?;
    let err = nonrigid
        .deformed
        .iter()
        .zip(&bent)
        .map(|(a, b)| (a - b).norm())
        .sum::<f64>()
        / bent.len() as f64;
    println!(
        "non-rigid: {} iterations ({:?}), mean error {err:.3} mm, final sigma^2 {:.2e}",
        nonrigid.log.len(),
        nonrigid.termination,
        nonrigid.sigma2
    );
    Ok(())
}
