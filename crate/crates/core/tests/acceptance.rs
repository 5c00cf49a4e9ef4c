//! Acceptance checks, one status line per criterion. Exits non-zero when
//! any criterion fails.

use std::panic;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use morphreduce::activesubspace::{
    analyze, decompose, estimate_gradients, AnalysisSettings, GradientOptions, SampleTable,
};
use morphreduce::campaign::run_campaign;
use morphreduce::dmd::{fit, DmdOptions, RankRule, SnapshotSet};
use morphreduce::ffd::{bernstein_all, FfdLattice};
use morphreduce::geometry::shapes::{icosphere, unit_cube};
use morphreduce::geometry::{enclosed_volume, integrate_pressure_force, ittc57_coefficient, Point3};
use morphreduce::rigidbody::{
    angular_momentum, rotational_energy, step, BodyProperties, NoLoads, Quaternion, RigidBodyState,
};
use morphreduce::surrogate::{generate_timeseries, ModeSpec, TimeSeriesSpec};
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

fn uniform_points(rng: &mut ChaCha8Rng, n: usize, m: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| rng.random_range(lo..=hi))
}

fn unit_vector(rng: &mut ChaCha8Rng, m: usize) -> DVector<f64> {
    let v = DVector::from_fn(m, |_, _| StandardNormal.sample(rng));
    v.normalize()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mesh = icosphere::<f64>(5, 1.0);
    let n = mesh.num_vertices();
    let lattice = FfdLattice::from_box(Point3::new(-0.8, -0.9, -0.7), Point3::new(0.9, 0.6, 0.8), [4, 5, 3]).unwrap();
    let identical = lattice.deform_mesh(&mesh).vertices() == mesh.vertices();

    let mut moved_lattice = lattice.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..4 {
        for j in 0..5 {
            for k in 0..3 {
                let d = Vector3::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2));
                moved_lattice.set_displacement([i, j, k], d).unwrap();
            }
        }
    }
    let moved = moved_lattice.deform_mesh(&mesh);
    let mut outside = 0;
    let mut outside_ok = true;
    for (p, q) in mesh.vertices().iter().zip(moved.vertices()) {
        let r = lattice.to_reference(p);
        if r.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            outside += 1;
            outside_ok &= p == q;
        }
    }

    let mut pou = 0.0f64;
    for _ in 0..1000 {
        let (s, t, u): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
        let (bs, bt, bu) = (bernstein_all(3, s), bernstein_all(4, t), bernstein_all(2, u));
        let mut sum = 0.0;
        for a in &bs {
            for b in &bt {
                for c in &bu {
                    sum += a * b * c;
                }
            }
        }
        pou = pou.max((sum - 1.0).abs());
    }
    let elapsed = start.elapsed();
    outcome(
        n >= 10_000 && identical && outside > 0 && outside_ok && pou <= 1e-12 && elapsed < Duration::from_secs(1),
        format!(
            "{n} vertices identical={identical}; {outside} out-of-box points unchanged={outside_ok}; \
             partition-of-unity error {pou:.1e}; {:.3}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut lattice = FfdLattice::from_box(Point3::origin(), Point3::new(1.0, 1.0, 1.0), [2, 2, 2]).unwrap();
    let d = Vector3::new(0.8, -0.4, 0.2);
    lattice.set_displacement([1, 1, 1], d).unwrap();
    let moved = lattice.deform_point(&Point3::new(0.5, 0.5, 0.5));
    let expected = Point3::new(0.5, 0.5, 0.5) + d / 8.0;
    let err = (moved - expected).norm();
    outcome(err < 1e-14, format!("midpoint displacement error {err:.1e} against d/8"))
}

fn criterion_3() -> Outcome {
    let spec = TimeSeriesSpec {
        state_dim: 1000,
        modes: vec![
            ModeSpec {
                growth: -0.1,
                frequency: 2.0,
                amplitude: 1.0,
                seed: 11,
            },
            ModeSpec {
                growth: -0.05,
                frequency: 5.0,
                amplitude: 0.7,
                seed: 12,
            },
        ],
        offset: Vec::new(),
    };
    let (t0, dt, l) = (7.0, 0.1, 80);
    let start = Instant::now();
    let snaps = generate_timeseries(&spec, t0, dt, l).unwrap();
    let model = fit(&snaps, DmdOptions::default()).unwrap();
    let k_end = 230; // t = 30
    let forecast = model.reconstruct_series(k_end);
    let elapsed = start.elapsed();

    let mut worst_eig = 0.0f64;
    for exact in spec.exact_eigenvalues(dt) {
        let nearest = model
            .eigenvalues()
            .iter()
            .map(|z| (z - exact).norm())
            .fold(f64::INFINITY, f64::min);
        worst_eig = worst_eig.max(nearest);
    }
    let analytic = generate_timeseries(&spec, t0, dt, k_end + 1).unwrap();
    let tail = 80; // t = 15 .. 30
    let err = rel(
        &forecast.columns(tail, k_end + 1 - tail).into_owned(),
        &analytic.data().columns(tail, k_end + 1 - tail).into_owned(),
    );
    outcome(
        model.rank() == 4 && worst_eig <= 1e-6 && err <= 1e-4 && elapsed < Duration::from_secs(2),
        format!(
            "rank {}; eigenvalue error {worst_eig:.1e}; forecast 15..30 relative error {err:.1e}; {:.3}s",
            model.rank(),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(2..=8);
        let l = rng.random_range(3..=10);
        let x = DMatrix::from_fn(n, l, |_, _| StandardNormal.sample(&mut rng));
        let snaps = SnapshotSet::new(x.clone(), 0.0, 1.0).unwrap();
        let model = fit(&snaps, DmdOptions::with_rank(RankRule::Full)).unwrap();
        let s = x.columns(0, l - 1).into_owned();
        let s_next = x.columns(1, l - 1).into_owned();
        // S^+ from the normal equations of the full-rank side
        let pinv = if n <= l - 1 {
            s.transpose() * (&s * s.transpose()).try_inverse().unwrap()
        } else {
            (s.transpose() * &s).try_inverse().unwrap() * s.transpose()
        };
        let a = &s_next * pinv;
        let mut probes: Vec<DVector<f64>> = x.column_iter().map(|c| c.into_owned()).collect();
        probes.push(DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng)));
        for p in probes {
            let want = &a * &p;
            let got = model.advance(&p);
            worst = worst.max((got - &want).norm() / want.norm());
        }
    }
    outcome(worst <= 1e-9, format!("worst one-step relative mismatch {worst:.1e} over 20 systems"))
}

fn ridge_table(
    rng: &mut ChaCha8Rng,
    c: &DVector<f64>,
    n: usize,
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
) -> SampleTable<f64> {
    let m = c.len();
    let x = uniform_points(rng, n, m, -0.3, 0.3);
    let t: Vec<f64> = x.row_iter().map(|r| r.dot(&c.transpose())).collect();
    let out = DVector::from_iterator(n, t.iter().map(|&v| f(v)));
    let grads = DMatrix::from_fn(n, m, |i, j| df(t[i]) * c[j]);
    SampleTable::new(x, out, vec![[-0.3, 0.3]; m]).unwrap().with_gradients(grads).unwrap()
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let c = unit_vector(&mut rng, 8);
    let table = ridge_table(&mut rng, &c, 400, |t| t * t + 0.5 * t, |t| 2.0 * t + 0.5);
    let exact = decompose(&table.normalized_gradients().unwrap(), 0, 0).unwrap();
    let cos_exact = exact.eigenvectors().column(0).dot(&c).abs();
    let ratio = exact.eigenvalues()[1] / exact.eigenvalues()[0];

    let plain = SampleTable::new(table.inputs().clone(), table.outputs().clone(), table.bounds().to_vec()).unwrap();
    let est = estimate_gradients(&plain, &GradientOptions::default(), None).unwrap();
    let ll = decompose(&est.normalized_gradients().unwrap(), 0, 0).unwrap();
    let cos_ll = ll.eigenvectors().column(0).dot(&c).abs();
    let elapsed = start.elapsed();
    outcome(
        cos_exact >= 0.999 && ratio <= 1e-8 && cos_ll >= 0.99 && elapsed < Duration::from_secs(5),
        format!(
            "exact |cos| {cos_exact:.12}, lambda2/lambda1 {ratio:.1e}; local-linear |cos| {cos_ll:.6}; {:.3}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let c = unit_vector(&mut rng, 8);
    let h = |t: f64| 3.0 * t.powi(4) - t.powi(3) + 0.5 * t * t + t;
    let dh = |t: f64| 12.0 * t.powi(3) - 3.0 * t * t + t + 1.0;
    let settings = AnalysisSettings {
        n_boot: 0,
        replicates: 1,
        ..Default::default()
    };
    let clean = ridge_table(&mut rng, &c, 400, h, dh);
    let clean_err = analyze(&clean, &settings, None).unwrap().mean_test_error;

    let mut noisy_errs = Vec::new();
    for r in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + r);
        let base = ridge_table(&mut rng, &c, 400, h, dh);
        let range = base.outputs().max() - base.outputs().min();
        let noisy = base.outputs().map(|v| v + 0.05 * range * { let z: f64 = StandardNormal.sample(&mut rng); z });
        let table = SampleTable::new(base.inputs().clone(), noisy, base.bounds().to_vec()).unwrap();
        let s = AnalysisSettings { seed: r, ..settings };
        noisy_errs.push(analyze(&table, &s, None).unwrap().mean_test_error);
    }
    let lo = noisy_errs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = noisy_errs.iter().copied().fold(0.0, f64::max);
    outcome(
        clean_err < 1e-6 && lo >= 0.03 && hi <= 0.08,
        format!(
            "noiseless normalized test error {clean_err:.1e}; with 5% noise {:.2}%..{:.2}% over 10 replicates",
            100.0 * lo,
            100.0 * hi
        ),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn criterion_7() -> Outcome {
    let row = DVector::from_row_slice(&[0.3, -1.0, 0.2, 0.7]);
    let same = DMatrix::from_fn(50, 4, |_, j| row[j]);
    let d = decompose(&same, 200, 3).unwrap();
    let zero_width = (0..4).all(|i| d.bootstrap_hi()[i] - d.bootstrap_lo()[i] == 0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let c = unit_vector(&mut rng, 8);
    let width = |n: usize, set: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(700 + set);
        let t = ridge_table(&mut rng, &c, n, |t| t * t + 0.5 * t, |t| 2.0 * t + 0.5);
        let d = decompose(&t.normalized_gradients().unwrap(), 200, set).unwrap();
        d.bootstrap_hi()[0] - d.bootstrap_lo()[0]
    };
    let small = median((0..20).map(|s| width(100, s)).collect());
    let large = median((0..20).map(|s| width(400, s)).collect());
    let ratio = small / large;
    outcome(
        zero_width && (1.4..=2.6).contains(&ratio),
        format!("identical rows zero width={zero_width}; median lambda1 width N=100 / N=400 = {ratio:.3}"),
    )
}

fn criterion_8() -> Outcome {
    let g = Vector3::new(0.0, 0.0, -9.81);
    let props = BodyProperties::new(2.0, Matrix3::identity(), g).unwrap();
    let v0 = Vector3::new(1.0, -0.5, 3.0);
    let mut s = RigidBodyState {
        velocity: v0,
        ..RigidBodyState::at_rest()
    };
    for k in 0..100 {
        s = step(&s, &props, &NoLoads, 0.01 * k as f64, 0.01).unwrap();
    }
    let fall_err = (s.position - (v0 + g * 0.5)).norm();

    let top = BodyProperties::new(1.0, Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 2.0)), Vector3::zeros()).unwrap();
    let mut s = RigidBodyState {
        omega: Vector3::new(0.5, 0.3, 2.0),
        attitude: Quaternion::from_axis_angle(&Vector3::new(1.0, 2.0, -0.5), 0.7),
        ..RigidBodyState::at_rest()
    };
    let (l0, e0) = (angular_momentum(&s, &top), rotational_energy(&s, &top));
    let mut norm_dev = 0.0f64;
    for k in 0..10_000 {
        s = step(&s, &top, &NoLoads, 1e-3 * k as f64, 1e-3).unwrap();
        norm_dev = norm_dev.max((s.attitude.norm() - 1.0).abs());
    }
    let l_err = (angular_momentum(&s, &top) - l0).norm() / l0.norm();
    let e_err = ((rotational_energy(&s, &top) - e0) / e0).abs();

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut random_q = || {
        let v: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        Quaternion::new(v[0], v[1], v[2], v[3]).normalized()
    };
    let mut comp = 0.0f64;
    for _ in 0..100 {
        let (a, b) = (random_q(), random_q());
        let lhs = (a * b).normalized().to_rotation().unwrap();
        let rhs = a.to_rotation().unwrap() * b.to_rotation().unwrap();
        comp = comp.max((lhs - rhs).abs().max());
    }
    outcome(
        fall_err < 1e-12 && l_err <= 1e-5 && e_err <= 1e-5 && norm_dev <= 1e-12 && comp <= 1e-10,
        format!(
            "free fall {fall_err:.1e}; top |dL|/|L| {l_err:.1e}, dE/E {e_err:.1e}, max ||q|-1| {norm_dev:.1e}; \
             R(q1 q2) mismatch {comp:.1e}"
        ),
    )
}

fn criterion_9() -> Outcome {
    let sphere_force = |mesh: morphreduce::geometry::TriMesh<f64>| {
        let n = mesh.num_vertices();
        let m = mesh.with_scalar_field("p", vec![100.0; n]).unwrap();
        integrate_pressure_force(&m, "p").unwrap().force.norm()
    };
    let coarse = icosphere::<f64>(2, 1.0);
    let f0 = sphere_force(coarse.clone());
    let f1 = sphere_force(coarse.subdivided());
    let sphere_ok = f1 < f0;

    let (rho, g) = (1025.0, 9.81);
    let cube = unit_cube::<f64>().translated(&Vector3::new(-0.5, -0.5, -3.0));
    let p: Vec<f64> = cube.vertices().iter().map(|v| -rho * g * v.z).collect();
    let cube = cube.with_scalar_field("p", p).unwrap();
    let buoy = integrate_pressure_force(&cube, "p").unwrap().force;
    let volume = enclosed_volume(&cube).unwrap();
    let buoy_err = (buoy.z.abs() - rho * g * volume).abs() / (rho * g * volume);

    let unit_volume = enclosed_volume(&unit_cube::<f64>()).unwrap();
    let cf = ittc57_coefficient(1e7f64).unwrap();
    outcome(
        sphere_ok && buoy_err <= 0.01 && unit_volume == 1.0 && cf == 0.003,
        format!(
            "sphere |F| {f0:.2e} -> {f1:.2e} after refinement (decreases={sphere_ok}); \
             buoyancy error {buoy_err:.1e}; unit cube volume {unit_volume}; C_f(1e7) = {cf}"
        ),
    )
}

fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for f in ["demo.json", "hull.obj", "lattice.json"] {
        std::fs::copy(from.join(f), to.join(f)).unwrap();
    }
}

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn criterion_10() -> Outcome {
    let demo = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../demo");
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    copy_dir(&demo, &a);
    copy_dir(&demo, &b);
    let start = Instant::now();
    let (results, report) = run_campaign(&a.join("demo.json")).unwrap();
    let elapsed = start.elapsed();
    run_campaign(&b.join("demo.json")).unwrap();
    let run = a.join("run");
    let layout = ["manifest.json", "analysis/eigenvalues.csv", "analysis/bootstrap.csv", "analysis/summary_1d.csv",
        "analysis/summary_2d.csv", "analysis/surface.json", "analysis/report.json"]
    .iter()
    .all(|f| run.join(f).is_file())
        && (0..130).all(|i| {
            ["mu.csv", "mesh.obj", "series.csv", "record.json"]
                .iter()
                .all(|f| run.join(format!("samples/{i:03}/{f}")).is_file())
        });
    let identical = files(&run) == files(&b.join("run"));
    let ok = results.ok_count();
    let res = &report.outputs["resistance"];
    outcome(
        ok == 130 && layout && identical && elapsed < Duration::from_secs(60),
        format!(
            "{ok}/130 ok; layout complete={layout}; rerun byte-identical={identical}; {:.1}s; \
             resistance M={} gap {:.1e} test error {:.2}%",
            elapsed.as_secs_f64(),
            res.active_dim,
            res.gap_ratio,
            100.0 * res.mean_test_error
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("FFD identity and locality", criterion_1),
        ("FFD trilinear hand oracle", criterion_2),
        ("DMD spectral recovery and forecast", criterion_3),
        ("DMD operator equivalence", criterion_4),
        ("active-subspace ridge recovery", criterion_5),
        ("response-surface error metric", criterion_6),
        ("bootstrap intervals", criterion_7),
        ("rigid-body integrator", criterion_8),
        ("force and volume integrals", criterion_9),
        ("end-to-end demo campaign", criterion_10),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2}: {}: {name}: {}",
            i + 1,
            if result.pass { "PASS" } else { "FAIL" },
            result.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
