//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use common::*;
use morphreg::cpd::{cpd_affine, cpd_nonrigid, estep, gaussian_kernel, mstep_nonrigid, CpdConfig};
use morphreg::deform::{arap_deform, lb_soft_solve, lbrp_constraints, lbrp_project, ArapState, SoftConstraintSystem};
use morphreg::gpmm::{gp_posterior_mean, GpKernelConfig};
use morphreg::landmarks::LandmarkSpec;
use morphreg::mesh::bbox_diagonal;
use morphreg::pipeline::{
    bar_mesh, make_synthetic_case, register, Adaptation, EvaluationReport, RegistrationOptions, SynthSpec,
    SyntheticCase, CASE_FILES,
};
use morphreg::rigid::{apply_transform, SimilarityTransform};
use morphreg::{Point, TriMesh};
use nalgebra::{DMatrix, Matrix3, Rotation3, Vector3};
use rand::Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn rel_matrix_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

fn soft(mesh: &TriMesh, idx: &[usize], targets: &[Point], lambda: f64) -> TriMesh {
    let sys = SoftConstraintSystem::for_mesh(mesh, idx.to_vec(), targets.to_vec(), lambda).unwrap();
    lb_soft_solve(mesh, &sys).unwrap()
}

fn twist_about_x(p: &Point, degrees: f64) -> Point {
    Rotation3::from_axis_angle(&Vector3::x_axis(), degrees.to_radians()) * p
}

/// Bar fixed at its first ring with the last ring and end cap twisted about the bar axis.
fn twisted_bar(rings: usize, degrees: f64) -> (TriMesh, Vec<usize>, Vec<Point>) {
    let sides = 10;
    let bar = bar_mesh(rings, sides, 8.0).unwrap();
    let mut idx: Vec<usize> = (0..sides).collect();
    idx.extend((rings - 1) * sides..rings * sides);
    idx.push(rings * sides + 1);
    let targets = idx
        .iter()
        .map(|&i| {
            let p = bar.vertices()[i];
            if i < sides { p } else { twist_about_x(&p, degrees) }
        })
        .collect();
    (bar, idx, targets)
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;

    let mesh = bumpy_sphere(&mut rng(101), 2, 0.1);
    assert!(mesh.num_vertices() <= 50);
    let idx = vec![0, 7, 15, 22, 30, 38];
    let targets: Vec<Point> = idx.iter().map(|&i| mesh.vertices()[i] + random_point(&mut rng(i as u64), 0.2)).collect();
    for lambda in [0.01, 0.1, 1.0, 10.0] {
        let got = soft(&mesh, &idx, &targets, lambda);
        worst = worst.max(rel_err(got.vertices(), &dense_soft_solve(&mesh, &idx, &targets, lambda)));
    }

    let (bar, bidx, btargets) = twisted_bar(4, 40.0);
    assert!(bar.num_vertices() <= 50);
    let state = ArapState::new(&bar, &bidx).unwrap();
    let mut g = rng(102);
    for _ in 0..3 {
        let rotations: Vec<Matrix3<f64>> = (0..bar.num_vertices()).map(|_| random_rotation(&mut g)).collect();
        let got = state.global_step(&rotations, &btargets).unwrap();
        worst = worst.max(rel_err(&got, &dense_arap_global(&bar, &rotations, &bidx, &btargets)));
    }

    for seed in 0..3 {
        let mut g = rng(103 + seed);
        let y = random_cloud(&mut g, 40, 1.0);
        let x = random_cloud(&mut g, 45, 1.0);
        let r = estep(&y, &x, 0.3, 0.1, None, 1.0).unwrap();
        let k = gaussian_kernel(&y, 1.2);
        let step = mstep_nonrigid(&y, &x, &r, &k, 2.0, 0.3).unwrap();
        let (w, moved) = dense_nonrigid_step(&y, &x, &r.p, &k, 2.0, 0.3);
        worst = worst.max(rel_matrix_err(&step.w, &w));
        worst = worst.max(rel_err(&step.deformed, &moved));
    }

    let gidx = [1, 9, 17, 26, 33, 41];
    let offsets = random_cloud(&mut rng(104), gidx.len(), 0.3);
    let pts = gidx.iter().zip(&offsets).map(|(&i, o)| mesh.vertices()[i] + o).collect();
    let lm = LandmarkSpec::new(gidx.to_vec(), pts, None).unwrap();
    let scales = vec![(1.0, 0.9), (0.2, 0.25)];
    let u = gp_posterior_mean(&mesh, &lm, &GpKernelConfig::new(scales.clone(), 1e-3).unwrap()).unwrap();
    let want = dense_gp_mean(mesh.vertices(), &gidx, &offsets, &scales, 1e-3);
    worst = worst.max(rel_err(&u.displacements, &want));

    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst < 1e-8 && secs < 5.0,
        format!("worst relative error {worst:.2e} (< 1e-8), {secs:.2} s (< 5 s)"),
    )
}

fn criterion_2() -> Verdict {
    let mut worst_rise = f64::NEG_INFINITY;
    let mut worst_sum: f64 = 0.0;
    for run in 0..50u64 {
        let mut g = rng(200 + run);
        let (m, n) = (g.random_range(10..=500), g.random_range(10..=500));
        let y = random_cloud(&mut g, m, 1.0);
        let a = Matrix3::identity() + Matrix3::from_fn(|_, _| g.random_range(-0.2..0.2));
        let t = random_point(&mut g, 0.3);
        let x: Vec<Point> = (0..n)
            .map(|k| {
                let p = a * y[k % m] + t + random_point(&mut g, 0.05);
                p + 0.1 * Point::new(p.y.sin(), p.z.cos(), p.x.sin())
            })
            .collect();
        let affine = run % 2 == 0;
        let mut cfg = if affine { CpdConfig::affine() } else { CpdConfig::nonrigid() };
        cfg.outlier_weight = g.random_range(0.0..0.5);
        cfg.max_iter = 60;
        let (log, deformed) = if affine {
            let r = cpd_affine(&y, &x, &cfg).unwrap();
            (r.log, r.deformed)
        } else {
            let r = cpd_nonrigid(&y, &x, &cfg, None).unwrap();
            (r.log, r.deformed)
        };
        for w in log.windows(2) {
            worst_rise = worst_rise.max(w[1].objective - w[0].objective);
        }
        for (pts, s2) in [(&y, log[0].sigma2), (&deformed, log.last().unwrap().sigma2)] {
            let r = estep(pts, &x, s2, cfg.outlier_weight, None, 1.0).unwrap();
            for j in 0..n {
                worst_sum = worst_sum.max((r.p.column(j).sum() + r.outlier[j] - 1.0).abs());
            }
        }
    }
    verdict(
        worst_rise <= 1e-9 && worst_sum < 1e-12,
        format!("largest objective rise {worst_rise:.2e} (<= 1e-9), worst mass deviation {worst_sum:.2e} (< 1e-12)"),
    )
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut max_iters = 0;
    for seed in 0..20u64 {
        let mut g = rng(300 + seed);
        // Orientation-preserving general linear maps around the identity, rejected unless
        // well conditioned.
        let a = loop {
            let a = Matrix3::identity() + Matrix3::from_fn(|_, _| g.random_range(-0.5..0.5));
            let sv = a.singular_values();
            if a.determinant() > 0.0 && sv.max() / sv.min() < 10.0 {
                break a;
            }
        };
        let t = random_point(&mut g, 1.0);
        let y = random_cloud(&mut g, 150, 1.0);
        let x: Vec<Point> = y.iter().map(|p| a * p + t).collect();
        let r = cpd_affine(&y, &x, &CpdConfig::affine()).unwrap();
        worst = worst.max((r.b - a).norm() / a.norm());
        max_iters = max_iters.max(r.log.len());
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst < 1e-3 && max_iters <= 200 && secs < 10.0,
        format!("worst relative Frobenius error {worst:.2e} (< 1e-3), {max_iters} iterations (<= 200), {secs:.2} s (< 10 s)"),
    )
}

fn criterion_4() -> Verdict {
    let mesh = bumpy_sphere(&mut rng(400), 4, 0.1);
    let diag = bbox_diagonal(mesh.vertices());
    let n = mesh.num_vertices();
    let mut g = rng(401);
    let idx: Vec<usize> = (0..12).map(|k| k * n / 12).collect();
    let mut offsets: Vec<Point> = (0..12).map(|_| random_point(&mut g, 0.2)).collect();
    let mean = offsets.iter().sum::<Point>() / 12.0;
    offsets.iter_mut().for_each(|o| *o -= mean);
    let targets: Vec<Point> = idx.iter().zip(&offsets).map(|(&i, o)| mesh.vertices()[i] + o).collect();

    let pinned = soft(&mesh, &idx, &targets, 1e-6);
    let soft_pin = idx
        .iter()
        .zip(&targets)
        .map(|(&i, t)| (pinned.vertices()[i] - t).norm())
        .fold(0.0, f64::max);
    let soft_stiff = max_dist(soft(&mesh, &idx, &targets, 1e6).vertices(), mesh.vertices());

    // Scan vertices displaced by zero-mean offsets well below the edge length, so each
    // vertex's mutual nearest neighbour is its own displaced copy.
    let mut jitter: Vec<Point> = (0..n).map(|_| random_point(&mut g, 1e-3 * diag)).collect();
    let jmean = jitter.iter().sum::<Point>() / n as f64;
    jitter.iter_mut().for_each(|o| *o -= jmean);
    let scan = mesh
        .with_vertices(mesh.vertices().iter().zip(&jitter).map(|(p, o)| p + o).collect())
        .unwrap();
    let (cidx, ctargets) = lbrp_constraints(&mesh, &scan).unwrap();
    let projected = lbrp_project(&mesh, &scan, 1e-6).unwrap();
    let lbrp_pin = cidx
        .iter()
        .zip(&ctargets)
        .map(|(&i, t)| (projected.vertices()[i] - t).norm())
        .fold(0.0, f64::max);
    let lbrp_stiff = max_dist(lbrp_project(&mesh, &scan, 1e6).unwrap().vertices(), mesh.vertices());

    verdict(
        soft_pin < 1e-5 && lbrp_pin < 1e-5 && soft_stiff < 1e-4 * diag && lbrp_stiff < 1e-4 * diag,
        format!(
            "pinning {soft_pin:.1e} / {lbrp_pin:.1e} (< 1e-5), stiff motion {:.1e} / {:.1e} bbox (< 1e-4) for soft solve / projection",
            soft_stiff / diag,
            lbrp_stiff / diag
        ),
    )
}

fn criterion_5() -> Verdict {
    let mesh = bumpy_sphere(&mut rng(500), 3, 0.1);
    let t = SimilarityTransform {
        rotation: random_rotation(&mut rng(501)),
        translation: Vector3::new(1.0, -2.0, 0.5),
        scale: 1.0,
    };
    let idx: Vec<usize> = (0..mesh.num_vertices()).step_by(4).collect();
    let targets: Vec<Point> = idx.iter().map(|&i| t.apply(&mesh.vertices()[i])).collect();
    let rigid = arap_deform(&mesh, &idx, &targets, 30).unwrap();
    let rigid_energy = *rigid.energies.last().unwrap();
    let rigid_dev = max_dist(rigid.mesh.vertices(), apply_transform(&mesh, &t).vertices());

    let (bar, bidx, btargets) = twisted_bar(9, 30.0);
    let twist = arap_deform(&bar, &bidx, &btargets, 10).unwrap();
    let monotone = twist.energies.windows(2).all(|w| w[1] <= w[0]);
    verdict(
        rigid_energy < 1e-8 && monotone,
        format!(
            "rigid-motion energy {rigid_energy:.1e} (< 1e-8, 30 iterations, deviation from the rigid motion {rigid_dev:.1e}), \
             twisted bar energies {} over 10 iterations",
            if monotone { "non-increasing" } else { "increase" }
        ),
    )
}

fn displaced(template: &TriMesh, idx: &[usize], offsets: &[Point]) -> LandmarkSpec {
    let pts = idx.iter().zip(offsets).map(|(&i, o)| template.vertices()[i] + o).collect();
    LandmarkSpec::new(idx.to_vec(), pts, None).unwrap()
}

fn criterion_6() -> Verdict {
    let mesh = bumpy_sphere(&mut rng(600), 3, 0.1);
    let idx = [2, 30, 61, 90];
    let offsets = random_cloud(&mut rng(601), 4, 0.2);
    let u = gp_posterior_mean(&mesh, &displaced(&mesh, &idx, &offsets), &GpKernelConfig::new(vec![(1.0, 0.8)], 0.0).unwrap())
        .unwrap();
    let interp = idx
        .iter()
        .zip(&offsets)
        .map(|(&i, o)| (u.displacements[i] - o).norm())
        .fold(0.0, f64::max);

    let (a, l, noise) = (0.8, 0.6, 0.05);
    let u = gp_posterior_mean(
        &mesh,
        &displaced(&mesh, &[7], &[Point::new(1.0, 0.0, 0.0)]),
        &GpKernelConfig::new(vec![(a, l)], noise).unwrap(),
    )
    .unwrap();
    let c = mesh.vertices()[7];
    let closed = mesh
        .vertices()
        .iter()
        .zip(&u.displacements)
        .map(|(p, d)| {
            let want = (-(p - c).norm_squared() / (l * l)).exp() / (1.0 + noise / a);
            (d - Point::new(want, 0.0, 0.0)).norm()
        })
        .fold(0.0, f64::max);

    let l_max = 0.08;
    let k = 4;
    let offsets = random_cloud(&mut rng(602), k, 0.3);
    let fidx: Vec<usize> = (0..k).collect();
    let lm = displaced(&mesh, &fidx, &offsets);
    let u = gp_posterior_mean(&mesh, &lm, &GpKernelConfig::new(vec![(1.0, l_max), (0.5, 0.03)], 1e-4).unwrap()).unwrap();
    let landmarks = lm.template_points(&mesh);
    let dmax = offsets.iter().map(|o| o.norm()).fold(0.0, f64::max);
    let far: Vec<f64> = mesh
        .vertices()
        .iter()
        .zip(&u.displacements)
        .filter(|(p, _)| landmarks.iter().all(|q| (*p - q).norm() > 6.0 * l_max))
        .map(|(_, d)| d.norm() / dmax)
        .collect();
    let decay = far.iter().copied().fold(0.0, f64::max);
    verdict(
        interp < 1e-6 && closed < 1e-10 && decay < 1e-6 && !far.is_empty(),
        format!(
            "interpolation {interp:.1e} (< 1e-6), closed form {closed:.1e} (< 1e-10), far field {decay:.1e} max|d| over {} vertices (< 1e-6)",
            far.len()
        ),
    )
}

fn options(adaptation: Adaptation) -> RegistrationOptions {
    RegistrationOptions {
        adaptation,
        ..RegistrationOptions::default()
    }
}

fn run_case(case: &SyntheticCase, adaptation: Adaptation) -> EvaluationReport {
    register(
        &case.template,
        &case.scan,
        &case.landmarks,
        &case.parts,
        &options(adaptation),
        Some(case.truth.vertices()),
    )
    .unwrap()
    .report
}

fn gt_fraction(r: &EvaluationReport) -> f64 {
    r.ground_truth.as_ref().unwrap().fraction_within(0.02 * r.scan_bbox_diagonal)
}

fn gt_mean(r: &EvaluationReport) -> f64 {
    r.ground_truth.as_ref().unwrap().mean
}

/// The twenty standard cases registered with `lb` adaptation, reused by criterion 8.
fn criterion_7() -> (Verdict, Vec<(SyntheticCase, EvaluationReport)>) {
    let start = Instant::now();
    let spec = SynthSpec::standard(morphreg::pipeline::DEFAULT_HEAD_FREQUENCY);
    let mut within = 0.0;
    let mut total = 0.0;
    let mut runs = Vec::new();
    let mut below = Vec::new();
    for seed in 0..20u64 {
        let case = make_synthetic_case(seed, &spec).unwrap();
        let report = run_case(&case, Adaptation::Lb);
        let n = case.template.num_vertices() as f64;
        let f = gt_fraction(&report);
        println!("    case {seed:2}: {:.1}% of vertices within 2% bbox", 100.0 * f);
        if f < 0.9 {
            below.push(seed);
        }
        within += f * n;
        total += n;
        runs.push((case, report));
    }
    let pooled = within / total;
    let secs = start.elapsed().as_secs_f64();
    (
        verdict(
            pooled >= 0.9 && secs < 600.0,
            format!(
                "{:.1}% of all vertices within 2% bbox (>= 90%), cases below 90%: {below:?}, {secs:.0} s (< 600 s)",
                100.0 * pooled
            ),
        ),
        runs,
    )
}

fn criterion_8(standard: &[(SyntheticCase, EvaluationReport)]) -> Verdict {
    let mut landmark_failures = Vec::new();
    let mut iteration_failures = Vec::new();
    let mut gp_failures = Vec::new();
    let mut check = |name: String, case: &SyntheticCase, lb: &EvaluationReport, with_gp: bool| {
        let none = run_case(case, Adaptation::None);
        let mut line = format!(
            "    {name}: landmark {:.4} vs {:.4}, inner iterations {} vs {}",
            lb.mean_landmark_error, none.mean_landmark_error, lb.icpd_inner_iterations, none.icpd_inner_iterations
        );
        if lb.mean_landmark_error > none.mean_landmark_error {
            landmark_failures.push(name.clone());
        }
        if lb.icpd_inner_iterations >= none.icpd_inner_iterations {
            iteration_failures.push(name.clone());
        }
        if with_gp {
            let gp = run_case(case, Adaptation::Gp);
            line.push_str(&format!(", ground truth lb {:.4} vs gp {:.4}", gt_mean(lb), gt_mean(&gp)));
            if gt_mean(lb) > 1.05 * gt_mean(&gp) {
                gp_failures.push(name.clone());
            }
        }
        println!("{line}");
    };
    for (seed, (case, lb)) in standard.iter().enumerate() {
        check(format!("standard {seed:2}"), case, lb, false);
    }
    let spec = SynthSpec {
        part_shift: 0.03,
        ..SynthSpec::zero(morphreg::pipeline::DEFAULT_HEAD_FREQUENCY)
    };
    for seed in 0..10u64 {
        let case = make_synthetic_case(seed, &spec).unwrap();
        let lb = run_case(&case, Adaptation::Lb);
        check(format!("part shift {seed:2}"), &case, &lb, true);
    }
    verdict(
        landmark_failures.is_empty() && iteration_failures.is_empty() && gp_failures.is_empty(),
        format!(
            "landmark error lb <= none fails on {landmark_failures:?}; fewer inner iterations fails on {iteration_failures:?}; \
             lb <= 1.05 gp fails on {gp_failures:?}"
        ),
    )
}

/// Runs the binary with `{}` arguments replaced by `paths` in order.
fn morphreg(args: &[&str], paths: &[&Path]) -> bool {
    let out = Command::new(env!("CARGO_BIN_EXE_morphreg"))
        .args(paths_into(args, paths))
        .output()
        .expect("binary runs");
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    out.status.success()
}

fn paths_into(args: &[&str], paths: &[&Path]) -> Vec<std::ffi::OsString> {
    let mut it = paths.iter();
    args.iter()
        .map(|a| if *a == "{}" { it.next().expect("path for placeholder").as_os_str().to_owned() } else { a.into() })
        .collect()
}

/// OBJ, CSV and text files under `dir` keyed by relative path.
fn outputs(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else if matches!(path.extension().and_then(|e| e.to_str()), Some("obj" | "csv" | "txt")) {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    if dir.is_file() {
        out.insert(PathBuf::new(), fs::read(dir).unwrap());
    } else {
        walk(dir, dir, &mut out);
    }
    out
}

/// Runs `first`, snapshots `dir`, runs `again` and compares the snapshot with the new outputs.
fn rerun_identical(dir: &Path, first: impl Fn() -> bool, again: impl Fn() -> bool) -> bool {
    if !first() {
        return false;
    }
    let before = outputs(dir);
    again() && !before.is_empty() && before == outputs(dir)
}

fn criterion_9() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    let mut results: Vec<(&str, bool)> = Vec::new();

    let cases = t.join("cases");
    let cases2 = t.join("cases2");
    let ran = morphreg(&["synth", "--seed", "5", "--count", "3", "--frequency", "3", "--out", "{}"], &[&cases])
        && morphreg(&["synth", "--config", "{}", "--out", "{}"], &[&cases.join("manifest.txt"), &cases2]);
    results.push(("synth", ran && outputs(&cases) == outputs(&cases2)));

    let case = cases.join("case_005");
    let f = |i: usize| case.join(CASE_FILES[i]);
    let reg = t.join("reg");
    let ok = rerun_identical(
        &reg,
        || {
            morphreg(
                &[
                    "register", "--template", "{}", "--template-landmarks", "{}", "--scan", "{}", "--scan-landmarks",
                    "{}", "--parts", "{}", "--truth", "{}", "--adaptation", "gp", "--out", "{}",
                ],
                &[&f(0), &f(1), &f(2), &f(3), &f(4), &f(5), &reg],
            )
        },
        || {
            let manifest = t.join("register_manifest.txt");
            fs::copy(reg.join("manifest.txt"), &manifest).is_ok()
                && morphreg(&["register", "--config", "{}"], &[&manifest])
        },
    );
    results.push(("register", ok));

    let adapted = t.join("adapted.obj");
    let adapt = || {
        morphreg(
            &["adapt", "--template", "{}", "--template-landmarks", "{}", "--scan-landmarks", "{}", "--out", "{}"],
            &[&f(0), &f(1), &f(3), &adapted],
        )
    };
    results.push(("adapt", rerun_identical(&adapted, adapt, adapt)));

    let projected = t.join("projected.obj");
    let project = || {
        morphreg(
            &["project", "--mesh", "{}", "--scan", "{}", "--out", "{}"],
            &[&reg.join("registered.obj"), &f(2), &projected],
        )
    };
    results.push(("project", rerun_identical(&projected, project, project)));

    let eval = t.join("eval");
    let evaluate = || {
        morphreg(
            &[
                "evaluate", "--registered", "{}", "--scan", "{}", "--template-landmarks", "{}", "--scan-landmarks", "{}",
                "--truth", "{}", "--out", "{}",
            ],
            &[&reg.join("registered.obj"), &f(2), &f(1), &f(3), &f(5), &eval],
        )
    };
    results.push(("evaluate", rerun_identical(&eval, evaluate, evaluate)));

    let batch = t.join("batch");
    let ok = rerun_identical(
        &batch,
        || morphreg(&["batch", "--in", "{}", "--out", "{}"], &[&cases, &batch]),
        || morphreg(&["batch", "--in", "{}", "--out", "{}", "--jobs", "2"], &[&cases, &batch]),
    );
    results.push(("batch", ok));

    let failed: Vec<&str> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    verdict(
        failed.is_empty(),
        format!("{} of {} subcommands re-run bit-identically, differing: {failed:?}", results.len() - failed.len(), results.len()),
    )
}

fn main() {
    let start = Instant::now();
    let mut passed = Vec::new();
    let mut emit = |n: usize, name: &str, v: Verdict| {
        println!("criterion {n} {}: {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        passed.push(v.pass);
    };
    emit(1, "solver oracles", criterion_1());
    emit(2, "EM monotonicity", criterion_2());
    emit(3, "affine recovery", criterion_3());
    emit(4, "stiffness limits", criterion_4());
    emit(5, "as-rigid-as-possible energy", criterion_5());
    emit(6, "GP posterior", criterion_6());
    let (v7, standard) = criterion_7();
    emit(7, "synthetic registration accuracy", v7);
    emit(8, "adaptive template relations", criterion_8(&standard));
    emit(9, "CLI determinism", criterion_9());
    let failed = passed.iter().filter(|p| !**p).count();
    println!(
        "acceptance: {} of {} criteria passed in {:.0} s",
        passed.len() - failed,
        passed.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
