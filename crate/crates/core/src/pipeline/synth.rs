//! Procedural head template and seeded synthetic registration cases.
//!
//! The head is a geodesic sphere shaped into an egg with a narrowed jaw (millimetre scale,
//! face towards +z) with radial bumps for the nose, eye sockets, mouth and ears. Synthetic scans apply
//! smooth per-part shifts, a random smooth warp, an optional rigid pose, vertex noise and
//! a planar crop from below.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use nalgebra::{Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::landmarks::{format_scan_landmarks, format_template_landmarks, LandmarkSpec, PartLabel, PartMap};
use crate::mesh::{write_obj_file, Point, TriMesh};
use crate::rigid::SimilarityTransform;

/// Subdivision frequency of the default head (362 vertices).
pub const DEFAULT_HEAD_FREQUENCY: usize = 6;

/// Geodesic unit sphere: every icosahedron face split into `f²` triangles, `10f² + 2` vertices.
pub fn unit_sphere(frequency: usize) -> Result<TriMesh> {
    if frequency == 0 {
        return Err(Error::argument("sphere frequency must be at least 1"));
    }
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let ico = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .map(|c| Point::new(c[0], c[1], c[2]).normalize());
    let ico_faces: [[usize; 3]; 20] = [
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let f = frequency;
    let mut index: HashMap<[(usize, usize); 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for face in &ico_faces {
        // (i, j) addresses the point with weights (f − i − j, i, j) on the face corners
        let mut id = |i: usize, j: usize| -> usize {
            let mut key = [(face[0], f - i - j), (face[1], i), (face[2], j)];
            for k in &mut key {
                if k.1 == 0 {
                    *k = (usize::MAX, 0);
                }
            }
            key.sort_unstable();
            *index.entry(key).or_insert_with(|| {
                let p = key
                    .iter()
                    .filter(|k| k.1 > 0)
                    .map(|&(v, w)| ico[v] * w as f64)
                    .sum::<Point>();
                vertices.push(p.normalize());
                vertices.len() - 1
            })
        };
        for j in 0..f {
            for i in 0..f - j {
                let (a, b, c) = (id(i, j), id(i + 1, j), id(i, j + 1));
                faces.push([a, b, c]);
                if i + j + 1 < f {
                    let d = id(i + 1, j + 1);
                    faces.push([b, d, c]);
                }
            }
        }
    }
    TriMesh::new(vertices, faces)
}

fn bump(d: &Point, centre: &Point, width: f64, height: f64) -> f64 {
    let angle = d.dot(centre).clamp(-1.0, 1.0).acos();
    height * (-(angle / width).powi(2)).exp()
}

/// Radial offset of the facial features along unit direction `d`.
fn relief(d: &Point) -> f64 {
    let dir = |x: f64, y: f64, z: f64| Point::new(x, y, z).normalize();
    let mut h = bump(d, &dir(0.0, -0.05, 1.0), 0.22, 20.0);
    h += bump(d, &dir(0.0, 0.15, 1.0), 0.18, 6.0);
    for s in [-1.0, 1.0] {
        h += bump(d, &dir(0.32 * s, 0.26, 0.91), 0.17, -9.0);
        h += bump(d, &dir(s, 0.05, 0.0), 0.2, 12.0);
    }
    // mouth: stretched horizontally
    let m = Point::new(d.x * 0.55, d.y, d.z).normalize();
    h += bump(&m, &dir(0.0, -0.42, 0.9), 0.12, 6.0);
    // brow ridge and chin
    let b = Point::new(d.x * 0.4, d.y, d.z).normalize();
    h += bump(&b, &dir(0.0, 0.4, 0.92), 0.1, 6.0);
    h += bump(d, &dir(0.0, -0.75, 0.66), 0.18, 10.0);
    h
}

fn head_point(d: &Point) -> Point {
    let r = relief(d);
    // egg-shaped skull: deeper at the back, jaw narrowing towards the chin
    let depth = if d.z < 0.0 { 100.0 } else { 82.0 };
    let jaw = 1.0 - 0.3 * (-d.y).max(0.0).powi(2);
    let height = if d.y < 0.0 { 105.0 } else { 95.0 };
    Point::new(72.0 * jaw * d.x, height * d.y, depth * jaw.sqrt() * d.z) + r * d
}

/// Procedural head with `10f² + 2` vertices.
pub fn head_mesh(frequency: usize) -> Result<TriMesh> {
    unit_sphere(frequency)?.map_vertices(head_point)
}

/// Landmark directions: four per eye/nose/mouth part.
fn landmark_directions() -> Vec<(PartLabel, Point)> {
    let d = |x: f64, y: f64, z: f64| Point::new(x, y, z).normalize();
    vec![
        (PartLabel::Eyes, d(-0.46, 0.28, 0.84)),
        (PartLabel::Eyes, d(-0.16, 0.23, 0.96)),
        (PartLabel::Eyes, d(0.16, 0.23, 0.96)),
        (PartLabel::Eyes, d(0.46, 0.28, 0.84)),
        (PartLabel::Nose, d(0.0, 0.12, 1.0)),
        (PartLabel::Nose, d(0.0, -0.05, 1.0)),
        (PartLabel::Nose, d(-0.2, -0.17, 1.0)),
        (PartLabel::Nose, d(0.2, -0.17, 1.0)),
        (PartLabel::Mouth, d(-0.3, -0.45, 0.85)),
        (PartLabel::Mouth, d(0.0, -0.33, 0.94)),
        (PartLabel::Mouth, d(0.3, -0.45, 0.85)),
        (PartLabel::Mouth, d(0.0, -0.6, 0.8)),
    ]
}

/// The 12 landmark vertices of a head of the given frequency, with part labels.
/// Each is the unused sphere vertex closest in angle to a fixed facial direction.
pub fn head_landmarks(frequency: usize) -> Result<(Vec<usize>, Vec<PartLabel>)> {
    let sphere = unit_sphere(frequency)?;
    let mut taken = vec![false; sphere.num_vertices()];
    let mut idx = Vec::new();
    let mut labels = Vec::new();
    for (label, dir) in landmark_directions() {
        let best = sphere
            .vertices()
            .iter()
            .enumerate()
            .filter(|(i, _)| !taken[*i])
            .max_by(|a, b| a.1.dot(&dir).total_cmp(&b.1.dot(&dir)).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .expect("sphere has more vertices than landmarks");
        taken[best] = true;
        idx.push(best);
        labels.push(label);
    }
    Ok((idx, labels))
}

/// Closed capped tube along +x: `rings` circles of `sides` vertices spanning `length`, radius 1.
pub fn bar_mesh(rings: usize, sides: usize, length: f64) -> Result<TriMesh> {
    if rings < 2 || sides < 3 || !(length > 0.0) {
        return Err(Error::argument("a bar needs at least 2 rings, 3 sides and a positive length"));
    }
    let mut vertices = Vec::with_capacity(rings * sides + 2);
    for r in 0..rings {
        let x = length * r as f64 / (rings - 1) as f64;
        for s in 0..sides {
            let a = std::f64::consts::TAU * s as f64 / sides as f64;
            vertices.push(Point::new(x, a.cos(), a.sin()));
        }
    }
    let at = |r: usize, s: usize| r * sides + s % sides;
    let mut faces = Vec::new();
    for r in 0..rings - 1 {
        for s in 0..sides {
            faces.push([at(r, s), at(r + 1, s), at(r + 1, s + 1)]);
            faces.push([at(r, s), at(r + 1, s + 1), at(r, s + 1)]);
        }
    }
    let (start, end) = (vertices.len(), vertices.len() + 1);
    vertices.push(Point::new(0.0, 0.0, 0.0));
    vertices.push(Point::new(length, 0.0, 0.0));
    for s in 0..sides {
        faces.push([start, at(0, s), at(0, s + 1)]);
        faces.push([end, at(rings - 1, s + 1), at(rings - 1, s)]);
    }
    TriMesh::new(vertices, faces)
}

/// Magnitudes are fractions of the template bbox diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub head_frequency: usize,
    /// Scan resolution; `None` reuses the template sampling.
    pub scan_frequency: Option<usize>,
    /// Translation of each facial part.
    pub part_shift: f64,
    /// Mean displacement of the smooth warp.
    pub warp: f64,
    /// Length scale of the warp.
    pub warp_smoothness: f64,
    /// Standard deviation of per-vertex Gaussian noise.
    pub noise: f64,
    /// Fraction of scan vertices removed by a horizontal cut from below.
    pub occlusion: f64,
    /// Rotation angle of the scan pose in degrees.
    pub pose_degrees: f64,
}

impl SynthSpec {
    /// No deformation, noise, crop or pose.
    pub fn zero(head_frequency: usize) -> Self {
        Self {
            head_frequency,
            scan_frequency: None,
            part_shift: 0.0,
            warp: 0.0,
            warp_smoothness: 0.5,
            noise: 0.0,
            occlusion: 0.0,
            pose_degrees: 0.0,
        }
    }

    /// 5% warp, 3% part shifts, 0.2% noise and a 10° pose on the template sampling.
    pub fn standard(head_frequency: usize) -> Self {
        Self {
            part_shift: 0.03,
            warp: 0.05,
            noise: 0.002,
            pose_degrees: 10.0,
            ..Self::zero(head_frequency)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.head_frequency == 0 || self.scan_frequency == Some(0) {
            return Err(Error::argument("head frequency must be at least 1"));
        }
        for (name, v) in [
            ("part shift", self.part_shift),
            ("warp", self.warp),
            ("noise", self.noise),
            ("pose angle", self.pose_degrees),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::argument(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if !(self.warp_smoothness > 0.0 && self.warp_smoothness.is_finite()) {
            return Err(Error::argument("warp smoothness must be positive"));
        }
        if !(0.0..0.5).contains(&self.occlusion) {
            return Err(Error::argument(format!("occlusion must lie in [0, 0.5), got {}", self.occlusion)));
        }
        Ok(())
    }
}

/// A generated template/scan pair with exact ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticCase {
    pub template: TriMesh,
    pub scan: TriMesh,
    /// Where each template vertex truly lies in the scan frame.
    pub truth: TriMesh,
    pub landmarks: LandmarkSpec,
    pub parts: PartMap,
    /// Template frame → scan frame.
    pub pose: SimilarityTransform,
}

/// Smooth vector field in template coordinates built from the seeded RNG.
struct Deformation {
    shifts: Vec<(Point, f64, f64, Vector3<f64>)>,
    centres: Vec<Point>,
    amplitudes: Vec<Vector3<f64>>,
    length: f64,
    warp_scale: f64,
}

impl Deformation {
    fn eval(&self, p: &Point) -> Vector3<f64> {
        let mut u = Vector3::zeros();
        for (c, inner, outer, v) in &self.shifts {
            let r = (p - c).norm();
            let w = if r <= *inner {
                1.0
            } else if r >= *outer {
                0.0
            } else {
                let s = (outer - r) / (outer - inner);
                s * s * (3.0 - 2.0 * s)
            };
            u += w * v;
        }
        u + self.warp_scale * self.raw_warp(p)
    }

    fn raw_warp(&self, p: &Point) -> Vector3<f64> {
        let inv = 1.0 / (self.length * self.length);
        self.centres
            .iter()
            .zip(&self.amplitudes)
            .map(|(c, a)| (-(p - c).norm_squared() * inv).exp() * a)
            .sum()
    }
}

fn gaussian3(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    Vector3::from_fn(|_, _| StandardNormal.sample(rng))
}

pub fn make_synthetic_case(seed: u64, spec: &SynthSpec) -> Result<SyntheticCase> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let template = head_mesh(spec.head_frequency)?;
    let (idx, labels) = head_landmarks(spec.head_frequency)?;
    let diag = template.bbox_diagonal();

    let mut shifts = Vec::new();
    for part in [PartLabel::Eyes, PartLabel::Nose, PartLabel::Mouth] {
        let pts: Vec<Point> = idx
            .iter()
            .zip(&labels)
            .filter(|(_, l)| **l == part)
            .map(|(&i, _)| template.vertices()[i])
            .collect();
        let centre = pts.iter().sum::<Point>() / pts.len() as f64;
        let reach = pts.iter().map(|p| (p - centre).norm()).fold(0.0, f64::max);
        let dir = gaussian3(&mut rng).normalize();
        let inner = 1.15 * reach;
        shifts.push((centre, inner, inner + 0.08 * diag, spec.part_shift * diag * dir));
    }
    let n_centres = 12;
    let centres: Vec<Point> = (0..n_centres)
        .map(|_| template.vertices()[rng.random_range(0..template.num_vertices())])
        .collect();
    let amplitudes: Vec<Vector3<f64>> = (0..n_centres).map(|_| gaussian3(&mut rng)).collect();
    let mut deformation = Deformation {
        shifts,
        centres,
        amplitudes,
        length: spec.warp_smoothness * diag,
        warp_scale: 0.0,
    };
    let raw_mean = template
        .vertices()
        .iter()
        .map(|p| deformation.raw_warp(p).norm())
        .sum::<f64>()
        / template.num_vertices() as f64;
    deformation.warp_scale = if raw_mean > 0.0 { spec.warp * diag / raw_mean } else { 0.0 };

    let angle = spec.pose_degrees.to_radians();
    let axis = Unit::new_normalize(gaussian3(&mut rng));
    let pose = SimilarityTransform {
        rotation: *Rotation3::from_axis_angle(&axis, angle).matrix(),
        translation: if spec.pose_degrees > 0.0 { 0.1 * diag * gaussian3(&mut rng) } else { Vector3::zeros() },
        scale: 1.0,
    };

    let truth = template.map_vertices(|p| pose.apply(&(p + deformation.eval(p))))?;
    let base = match spec.scan_frequency {
        Some(f) if f != spec.head_frequency => head_mesh(f)?,
        _ => template.clone(),
    };
    let noise = spec.noise * diag;
    let mut scan_vertices: Vec<Point> = base
        .vertices()
        .iter()
        .map(|p| pose.apply(&(p + deformation.eval(p))))
        .collect();
    if noise > 0.0 {
        for v in &mut scan_vertices {
            *v += noise * gaussian3(&mut rng);
        }
    }
    let scan = crop_from_below(&base, scan_vertices, spec.occlusion)?;

    let mut lm_points: Vec<Point> = idx.iter().map(|&i| truth.vertices()[i]).collect();
    if noise > 0.0 {
        for p in &mut lm_points {
            *p += noise * gaussian3(&mut rng);
        }
    }
    let landmarks = LandmarkSpec::new(idx, lm_points, Some(labels))?;
    let parts = PartMap::from_landmarks(&landmarks);
    Ok(SyntheticCase {
        template,
        scan,
        truth,
        landmarks,
        parts,
        pose,
    })
}

/// Removes the `fraction` of vertices lowest in the base mesh's y coordinate.
fn crop_from_below(base: &TriMesh, vertices: Vec<Point>, fraction: f64) -> Result<TriMesh> {
    let n = vertices.len();
    let drop = (fraction * n as f64).floor() as usize;
    if drop == 0 {
        return base.with_vertices(vertices);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| base.vertices()[a].y.total_cmp(&base.vertices()[b].y).then(a.cmp(&b)));
    let mut keep = vec![true; n];
    for &i in &order[..drop] {
        keep[i] = false;
    }
    let mut new_index = vec![usize::MAX; n];
    let mut kept = Vec::with_capacity(n - drop);
    for i in 0..n {
        if keep[i] {
            new_index[i] = kept.len();
            kept.push(vertices[i]);
        }
    }
    let faces = base
        .faces()
        .iter()
        .filter(|f| f.iter().all(|&v| keep[v]))
        .map(|f| f.map(|v| new_index[v]))
        .collect();
    TriMesh::new(kept, faces)
}

/// File names written by [`SyntheticCase::write_to`].
pub const CASE_FILES: [&str; 6] = [
    "template.obj",
    "template_landmarks.txt",
    "scan.obj",
    "scan_landmarks.txt",
    "parts.txt",
    "truth.obj",
];

impl SyntheticCase {
    /// Writes the case in the pipeline's input formats under [`CASE_FILES`] names.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_obj_file(dir.join(CASE_FILES[0]), &self.template, None)?;
        fs::write(dir.join(CASE_FILES[1]), format_template_landmarks(&self.landmarks.template_indices))?;
        write_obj_file(dir.join(CASE_FILES[2]), &self.scan, None)?;
        fs::write(
            dir.join(CASE_FILES[3]),
            format_scan_landmarks(&self.landmarks.scan_points, self.landmarks.part_labels.as_deref()),
        )?;
        fs::write(dir.join(CASE_FILES[4]), self.parts.to_text())?;
        write_obj_file(dir.join(CASE_FILES[5]), &self.truth, None)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_counts() {
        for f in [1, 2, 5] {
            let s = unit_sphere(f).unwrap();
            assert_eq!(s.num_vertices(), 10 * f * f + 2);
            assert_eq!(s.num_faces(), 20 * f * f);
            assert_eq!(s.connected_components().1, 1);
        }
    }

    #[test]
    fn landmarks_are_distinct() {
        let (idx, _) = head_landmarks(4).unwrap();
        let mut s = idx.clone();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 12);
    }
}
