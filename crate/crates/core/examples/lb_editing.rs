//! Pulls the nose of the head forward with soft Laplace-Beltrami constraints and shows how
//! the stiffness trades constraint fit against smoothness.

use morphreg::deform::{lb_soft_solve, SoftConstraintSystem};
use morphreg::pipeline::{head_landmarks, head_mesh};
use morphreg::Point;

fn main() -> morphreg::Result<()> {
    let head = head_mesh(6)?;
    let (landmarks, _) = head_landmarks(6)?;
    let nose = landmarks[4];
    let back = (0..head.num_vertices())
        .min_by(|&a, &b| head.vertices()[a].z.total_cmp(&head.vertices()[b].z))
        .unwrap_or(0);

    let pull = Point::new(0.0, 0.0, 15.0);
    let targets = vec![head.vertices()[nose] + pull, head.vertices()[back]];
    for lambda in [1e-4, 0.1, 10.0] {
        let sys = SoftConstraintSystem::for_mesh(&head, vec![nose, back], targets.clone(), lambda)?;
        let edited = lb_soft_solve(&head, &sys)?;
        let miss = (edited.vertices()[nose] - targets[0]).norm();
        let moved = head
            .vertices()
            .iter()
            .zip(edited.vertices())
            .filter(|(a, b)| (*a - *b).norm() > 1.0)
            .count();
        println!("lambda {lambda:>7}: nose misses its target by {miss:6.3} mm, {moved:3} vertices moved > 1 mm");
    }
    Ok(())
}
