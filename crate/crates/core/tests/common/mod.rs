//! Fixtures and brute-force oracles shared by the integration tests. Every oracle here is
//! written from the defining formulas with dense linear algebra and no library solver code.

#![allow(dead_code)]

use morphreg::pipeline::unit_sphere;
use morphreg::{Point, TriMesh};
use nalgebra::{DMatrix, Matrix3, Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_point(rng: &mut impl Rng, scale: f64) -> Point {
    Point::new(
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
    )
}

pub fn random_cloud(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<Point> {
    (0..n).map(|_| random_point(rng, scale)).collect()
}

pub fn random_rotation(rng: &mut impl Rng) -> Matrix3<f64> {
    let axis = Unit::new_normalize(random_point(rng, 1.0) + Vector3::new(1e-3, 0.0, 0.0));
    *Rotation3::from_axis_angle(&axis, rng.random_range(-3.0..3.0)).matrix()
}

/// Unit sphere with every vertex pushed radially by up to `bump`.
pub fn bumpy_sphere(rng: &mut impl Rng, frequency: usize, bump: f64) -> TriMesh {
    let s = unit_sphere(frequency).unwrap();
    let v = s
        .vertices()
        .iter()
        .map(|p| p * (1.0 + rng.random_range(-bump..bump)))
        .collect();
    s.with_vertices(v).unwrap()
}

/// `n × n` vertex planar grid with unit spacing in the z = 0 plane.
pub fn grid(n: usize) -> TriMesh {
    let mut v = Vec::new();
    for y in 0..n {
        for x in 0..n {
            v.push(Point::new(x as f64, y as f64, 0.0));
        }
    }
    let mut f = Vec::new();
    for y in 0..n - 1 {
        for x in 0..n - 1 {
            let a = y * n + x;
            f.push([a, a + 1, a + n + 1]);
            f.push([a, a + n + 1, a + n]);
        }
    }
    TriMesh::new(v, f).unwrap()
}

fn cot(a: Point, b: Point) -> f64 {
    a.dot(&b) / a.cross(&b).norm()
}

/// Dense `W` with `W_ij = ½ Σ cot` of the angles opposite edge `ij`.
pub fn dense_cot_weights(mesh: &TriMesh) -> DMatrix<f64> {
    let n = mesh.num_vertices();
    let v = mesh.vertices();
    let mut w = DMatrix::zeros(n, n);
    for f in mesh.faces() {
        for k in 0..3 {
            let (i, j, o) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
            let c = 0.5 * cot(v[i] - v[o], v[j] - v[o]);
            w[(i, j)] += c;
            w[(j, i)] += c;
        }
    }
    w
}

/// Dense cotangent Laplacian `L = diag(W 1) − W`.
pub fn dense_laplacian(mesh: &TriMesh) -> DMatrix<f64> {
    let w = dense_cot_weights(mesh);
    let mut l = -w.clone();
    for i in 0..w.nrows() {
        l[(i, i)] = w.row(i).sum();
    }
    l
}

pub fn to_matrix(points: &[Point]) -> DMatrix<f64> {
    DMatrix::from_fn(points.len(), 3, |i, d| points[i][d])
}

pub fn to_points(m: &DMatrix<f64>) -> Vec<Point> {
    (0..m.nrows()).map(|i| Point::new(m[(i, 0)], m[(i, 1)], m[(i, 2)])).collect()
}

pub fn max_dist(a: &[Point], b: &[Point]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

/// Largest row distance relative to the largest row norm of `b`.
pub fn rel_err(a: &[Point], b: &[Point]) -> f64 {
    let scale = b.iter().map(|p| p.norm()).fold(0.0, f64::max).max(1e-300);
    max_dist(a, b) / scale
}

/// Minimiser of `‖λ L (X − X_ref)‖² + Σ ‖X_c − t_c‖²` from the dense normal equations.
pub fn dense_soft_solve(
    mesh: &TriMesh,
    indices: &[usize],
    targets: &[Point],
    lambda: f64,
) -> Vec<Point> {
    let l = dense_laplacian(mesh);
    let ltl = l.transpose() * &l * (lambda * lambda);
    let mut a = ltl.clone();
    let mut b = &ltl * to_matrix(mesh.vertices());
    for (&i, t) in indices.iter().zip(targets) {
        a[(i, i)] += 1.0;
        for d in 0..3 {
            b[(i, d)] += t[d];
        }
    }
    to_points(&a.lu().solve(&b).expect("dense normal equations are singular"))
}

/// ARAP energy `Σ_i Σ_{j∈N(i)} w_ij ‖(p'_i − p'_j) − R_i (p_i − p_j)‖²` with each `R_i`
/// fitted independently from its one-ring.
pub fn arap_energy(reference: &TriMesh, deformed: &[Point]) -> f64 {
    let w = dense_cot_weights(reference);
    let p = reference.vertices();
    let n = p.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut cov = Matrix3::zeros();
        for j in 0..n {
            if j != i && w[(i, j)] != 0.0 {
                cov += w[(i, j)] * (deformed[i] - deformed[j]) * (p[i] - p[j]).transpose();
            }
        }
        let svd = cov.svd(true, true);
        let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut d = Matrix3::identity();
        if (u * vt).determinant() < 0.0 {
            d[(2, 2)] = -1.0;
        }
        let r = u * d * vt;
        for j in 0..n {
            if j != i && w[(i, j)] != 0.0 {
                total += w[(i, j)] * ((deformed[i] - deformed[j]) - r * (p[i] - p[j])).norm_squared();
            }
        }
    }
    total
}

/// Global ARAP step solved densely: rows of constrained vertices are replaced by the
/// identity and their targets.
pub fn dense_arap_global(
    reference: &TriMesh,
    rotations: &[Matrix3<f64>],
    constrained: &[usize],
    targets: &[Point],
) -> Vec<Point> {
    let w = dense_cot_weights(reference);
    let p = reference.vertices();
    let n = p.len();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, 3);
    for i in 0..n {
        for j in 0..n {
            if j != i && w[(i, j)] != 0.0 {
                a[(i, i)] += w[(i, j)];
                a[(i, j)] -= w[(i, j)];
                let r = 0.5 * w[(i, j)] * (rotations[i] + rotations[j]) * (p[i] - p[j]);
                for d in 0..3 {
                    b[(i, d)] += r[d];
                }
            }
        }
    }
    for (&c, t) in constrained.iter().zip(targets) {
        a.row_mut(c).fill(0.0);
        a[(c, c)] = 1.0;
        for d in 0..3 {
            b[(c, d)] = t[d];
        }
    }
    to_points(&a.lu().solve(&b).expect("dense ARAP system is singular"))
}

/// Responsibilities `P (M × N)` and outlier masses from the E-step formula, looped directly.
pub fn brute_estep(
    y: &[Point],
    x: &[Point],
    sigma2: f64,
    w: f64,
    priors: &[(usize, usize)],
    gamma: f64,
) -> (DMatrix<f64>, Vec<f64>) {
    let (m, n) = (y.len(), x.len());
    let c = (2.0 * std::f64::consts::PI * sigma2).powf(1.5) * (w / (1.0 - w)) * (m as f64 / n as f64);
    let mut p = DMatrix::zeros(m, n);
    let mut outlier = vec![0.0; n];
    for j in 0..n {
        let mut pi = vec![1.0; m];
        for &(a, b) in priors {
            if b == j {
                pi[a] = gamma;
            }
        }
        let s: f64 = pi.iter().sum();
        for v in &mut pi {
            *v *= m as f64 / s;
        }
        let mut denom = c;
        for i in 0..m {
            let g = pi[i] * (-(x[j] - y[i]).norm_squared() / (2.0 * sigma2)).exp();
            p[(i, j)] = g;
            denom += g;
        }
        for i in 0..m {
            p[(i, j)] /= denom;
        }
        outlier[j] = c / denom;
    }
    (p, outlier)
}

/// `G_ij = exp(−‖y_i − y_j‖² / (2β²))`.
pub fn dense_gaussian_kernel(y: &[Point], beta: f64) -> DMatrix<f64> {
    DMatrix::from_fn(y.len(), y.len(), |i, j| {
        (-(y[i] - y[j]).norm_squared() / (2.0 * beta * beta)).exp()
    })
}

/// `W` solving `(G + λσ² d(P1)⁻¹) W = d(P1)⁻¹ P X − Y`, and the resulting deformed points.
pub fn dense_nonrigid_step(
    y: &[Point],
    x: &[Point],
    p: &DMatrix<f64>,
    g: &DMatrix<f64>,
    lambda: f64,
    sigma2: f64,
) -> (DMatrix<f64>, Vec<Point>) {
    let m = y.len();
    let p1: Vec<f64> = (0..m).map(|i| p.row(i).sum()).collect();
    let px = p * to_matrix(x);
    let mut a = g.clone();
    let mut b = DMatrix::zeros(m, 3);
    for i in 0..m {
        a[(i, i)] += lambda * sigma2 / p1[i];
        for d in 0..3 {
            b[(i, d)] = px[(i, d)] / p1[i] - y[i][d];
        }
    }
    let w = a.lu().solve(&b).expect("dense non-rigid system is singular");
    let t = to_matrix(y) + g * &w;
    (w, to_points(&t))
}

/// `K_ij = Σ a exp(−‖p_i − q_j‖² / ℓ²)`.
pub fn dense_kernel(a: &[Point], b: &[Point], scales: &[(f64, f64)]) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| {
        let r2 = (a[i] - b[j]).norm_squared();
        scales.iter().map(|(amp, l)| amp * (-r2 / (l * l)).exp()).sum()
    })
}

/// GP posterior mean `K_pk (K_kk + δ² I)⁻¹ d` evaluated at every vertex.
pub fn dense_gp_mean(
    vertices: &[Point],
    landmark_vertices: &[usize],
    observed: &[Point],
    scales: &[(f64, f64)],
    noise: f64,
) -> Vec<Point> {
    let lp: Vec<Point> = landmark_vertices.iter().map(|&i| vertices[i]).collect();
    let mut kkk = dense_kernel(&lp, &lp, scales);
    for i in 0..lp.len() {
        kkk[(i, i)] += noise;
    }
    let alpha = kkk.lu().solve(&to_matrix(observed)).expect("dense GP system is singular");
    to_points(&(dense_kernel(vertices, &lp, scales) * alpha))
}
