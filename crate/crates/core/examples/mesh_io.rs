//! Builds the procedural head, writes it as OBJ, reads it back and queries nearest neighbours.

use morphreg::mesh::{farthest_point_sampling, nearest_neighbors, parse_obj, write_obj};
use morphreg::pipeline::{head_mesh, DEFAULT_HEAD_FREQUENCY};

fn main() -> morphreg::Result<()> {
    let head = head_mesh(DEFAULT_HEAD_FREQUENCY)?;
    println!(
        "head: {} vertices, {} faces, bbox diagonal {:.1} mm",
        head.num_vertices(),
        head.num_faces(),
        head.bbox_diagonal()
    );

    let bytes = write_obj(&head, None)?;
    let back = parse_obj(&bytes)?;
    let drift = head
        .vertices()
        .iter()
        .zip(back.vertices())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    println!("OBJ round trip: {} bytes, max coordinate change {drift:.1e}", bytes.len());

    let sample = farthest_point_sampling(head.vertices(), 40);
    let pts: Vec<_> = sample.iter().map(|&i| head.vertices()[i]).collect();
    let nn = nearest_neighbors(head.vertices(), &pts)?;
    let worst = nn.iter().map(|n| n.distance).fold(0.0, f64::max);
    println!("40 farthest-point samples cover every vertex within {worst:.1} mm");
    Ok(())
}
