//! Twists one end of a bar by 90 degrees with as-rigid-as-possible deformation.

use morphreg::deform::arap_deform;
use morphreg::pipeline::bar_mesh;
use nalgebra::{Rotation3, Vector3};

fn main() -> morphreg::Result<()> {
    let sides = 8;
    let bar = bar_mesh(21, sides, 10.0)?;
    let twist = Rotation3::from_axis_angle(&Vector3::x_axis(), std::f64::consts::FRAC_PI_2);

    let fixed: Vec<usize> = (0..sides).collect();
    let moved: Vec<usize> = (20 * sides..21 * sides).collect();
    let mut handles = fixed.clone();
    handles.extend(&moved);
    let targets: Vec<_> = fixed
        .iter()
        .map(|&i| bar.vertices()[i])
        .chain(moved.iter().map(|&i| twist * bar.vertices()[i]))
        .collect();

    let result = arap_deform(&bar, &handles, &targets, 200)?;
    for (k, e) in result.energies.iter().enumerate().filter(|(k, _)| k % 20 == 0 || *k == 199) {
        println!("iteration {:3}: energy {e:.6}", k + 1);
    }
    let mid = &result.mesh.vertices()[10 * sides..11 * sides];
    let angle = mid[0].z.atan2(mid[0].y).to_degrees();
    println!("middle ring turned by {angle:.1} deg (a uniform twist gives 45)");
    Ok(())
}
