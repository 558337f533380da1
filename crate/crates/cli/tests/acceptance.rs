//! Acceptance suite: eight criteria at pinned tolerances, one verdict line
//! each. Exits nonzero when any criterion fails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semihelix::construct::{frame_fields, sweep_point, unsigned_sweep_point};
use semihelix::curves::plane_angle;
use semihelix::direction_fit::{grid_cloud, sample_cloud};
use semihelix::reconstruct::ReconstructOptions;
use semihelix::{
    build_product_surface, check_immersion_rank, fit_circle, fit_direction, reconstruct_local, theta_linearity,
    trace_integral_curve, verify_construction, verify_semihelix, AngleWindow, ClosedFormArc, Direction, JacobianMode,
    OrientedPointCloud, ParamImmersion, Preset, SampleGrid, SemiHelixSpec, VecN,
};

const FRAC_PI_12: f64 = PI / 12.0;
const FRAC_PI_24: f64 = PI / 24.0;

type Check = Result<String, String>;
type Outputs = Vec<(String, Vec<u8>)>;
type Criterion = (&'static str, Duration, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

struct Case {
    label: String,
    spec: SemiHelixSpec<f64>,
}

/// Three bases × two radii × two windows.
fn suite() -> Vec<Case> {
    let mut cases = Vec::new();
    for (base, n) in [
        (Preset::Circle(1.0), 3),
        (Preset::Sphere(1.0), 4),
        (Preset::Graph(0.5), 4),
    ] {
        for r in [1.0, 0.25] {
            for (theta0, eps) in [(0.0, FRAC_PI_6), (FRAC_PI_12, FRAC_PI_24)] {
                let surface = base.immersion(n - 1).expect("preset");
                let window = AngleWindow::new(theta0, eps).expect("window");
                let spec = SemiHelixSpec::from_surface(surface, r, window, false).expect("spec");
                cases.push(Case {
                    label: format!("{base} r={r} window=({:.4},{:.4})", window.lo(), window.hi()),
                    spec,
                });
            }
        }
    }
    cases
}

fn random_param(rng: &mut ChaCha8Rng, m: &ParamImmersion<f64>, inset: f64) -> Vec<f64> {
    m.domain()
        .axes()
        .iter()
        .map(|iv| iv.lo + iv.width() * rng.gen_range(inset..1.0 - inset))
        .collect()
}

fn random_base_param(rng: &mut ChaCha8Rng, spec: &SemiHelixSpec<f64>) -> Vec<f64> {
    spec.base
        .domain()
        .axes()
        .iter()
        .map(|iv| iv.lo + iv.width() * rng.gen_range(0.0..1.0))
        .collect()
}

fn criterion_1() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let bases: Vec<SemiHelixSpec<f64>> = suite()
        .into_iter()
        .filter(|c| c.label.contains("r=1 ") && c.spec.window.theta0 == 0.0)
        .map(|c| c.spec)
        .collect();
    let mut worst: f64 = 0.0;
    let samples = 10_000;
    for i in 0..samples {
        let spec = &bases[i % bases.len()];
        let b = spec
            .sample(&random_base_param(&mut rng, spec))
            .map_err(|e| e.to_string())?;
        let theta = rng.gen_range(-FRAC_PI_2..FRAC_PI_2);
        let f = frame_fields(&b, theta, &spec.d);
        let tt = f.t_theta.as_vec();
        let xi = f.xi_theta.as_vec();
        for v in [
            tt.norm() - 1.0,
            xi.norm() - 1.0,
            xi.dot(tt),
            spec.d.dot(xi) - theta.sin(),
        ] {
            worst = worst.max(v.abs());
        }
    }
    ensure(worst < 1e-12, || format!("max identity defect {worst:e}"))?;
    Ok(format!(
        "{samples} samples over {} bases, max defect {worst:.2e}",
        bases.len()
    ))
}

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let bases: Vec<SemiHelixSpec<f64>> = suite().into_iter().map(|c| c.spec).collect();
    let (mut signed, mut unsigned): (f64, f64) = (0.0, 0.0);
    let samples = 10_000;
    for i in 0..samples {
        let spec = &bases[i % bases.len()];
        let b = spec
            .sample(&random_base_param(&mut rng, spec))
            .map_err(|e| e.to_string())?;
        let theta = rng.gen_range(-PI + 0.01..PI - 0.01);
        let r = spec.r;
        let chord = &sweep_point(&b, theta, r, &spec.d) - &b.x;
        let expanded = b
            .eta
            .as_vec()
            .scale(r * (1.0 - theta.cos()))
            .axpy(r * theta.sin(), spec.d.as_vec());
        signed = signed.max(chord.distance(&expanded));
        if theta >= 0.0 {
            let u = &unsigned_sweep_point(&b, theta, r, &spec.d) - &b.x;
            unsigned = unsigned.max(chord.distance(&u));
        }
    }
    ensure(signed < 1e-12, || format!("signed chord defect {signed:e}"))?;
    ensure(unsigned < 1e-12, || format!("unsigned chord defect {unsigned:e}"))?;
    Ok(format!(
        "{samples} samples, signed {signed:.2e}, unsigned (θ ≥ 0) {unsigned:.2e}"
    ))
}

fn certification_grid(m: &ParamImmersion<f64>) -> SampleGrid {
    match m.domain_dim() {
        2 => SampleGrid::new(vec![128, 65]),
        _ => SampleGrid::new(vec![32, 17, 65]),
    }
    .expect("grid")
}

fn criterion_3() -> Check {
    let (mut worst_an, mut worst_fd): (f64, f64) = (0.0, 0.0);
    let mut nodes = 0;
    for case in suite() {
        for (mode, tol) in [(JacobianMode::Analytic, 1e-9), (JacobianMode::FiniteDifference, 1e-6)] {
            let m = build_product_surface(&case.spec, mode).map_err(|e| e.to_string())?;
            let grid = certification_grid(&m);
            let rep = verify_construction(&case.spec, &grid, mode).map_err(|e| e.to_string())?;
            let err = rep.max_theta_error.unwrap_or(f64::INFINITY);
            ensure(rep.pass, || format!("{} {mode:?}: certification failed", case.label))?;
            ensure(rep.violations == 0, || {
                format!("{}: {} violations", case.label, rep.violations)
            })?;
            ensure(err < tol, || format!("{} {mode:?}: angle error {err:e}", case.label))?;
            match mode {
                JacobianMode::Analytic => worst_an = worst_an.max(err),
                JacobianMode::FiniteDifference => worst_fd = worst_fd.max(err),
            }
            nodes += rep.nodes;
        }
    }
    Ok(format!(
        "12 specs, {nodes} frames, angle error analytic {worst_an:.2e}, fd {worst_fd:.2e}"
    ))
}

fn criterion_4() -> Check {
    let d_tol = 1e-8;
    let mut worst = [0.0f64; 6];
    let mut traces = 0;
    for case in suite() {
        let spec = &case.spec;
        let m = build_product_surface(spec, JacobianMode::Analytic).map_err(|e| e.to_string())?;
        let w = spec.window;
        let center = spec.base.domain().center();
        let starts = [
            center.clone(),
            spec.base
                .domain()
                .axes()
                .iter()
                .map(|a| a.lo + 0.3 * a.width())
                .collect(),
        ];
        for ub in starts {
            let theta_start = w.lo() + 1e-6;
            let mut u0 = ub.clone();
            u0.push(theta_start);
            let span = (2.0 * w.epsilon - 2e-6) * spec.r;
            let curve = trace_integral_curve(&m, &spec.d, &u0, span, 1e-3).map_err(|e| e.to_string())?;
            ensure(!curve.domain_exit, || format!("{}: trace left the chart", case.label))?;
            let b = spec.sample(&ub).map_err(|e| e.to_string())?;
            let arc = ClosedFormArc::from_construction(&b, theta_start, spec.r, &spec.d).map_err(|e| e.to_string())?;
            let dev = curve
                .t
                .iter()
                .zip(&curve.points)
                .map(|(&t, p)| p.distance(&arc.eval(t)))
                .fold(0.0, f64::max);
            let fit = fit_circle(&curve.points).map_err(|e| e.to_string())?;
            let line = theta_linearity(&curve).map_err(|e| e.to_string())?;
            let expected_center = b.x.axpy(spec.r, b.eta.as_vec());
            let plane = [b.eta.as_vec().clone(), spec.d.as_vec().clone()];
            let values = [
                dev,
                (fit.radius - spec.r).abs(),
                (line.slope - 1.0 / spec.r).abs().max(line.max_residual),
                fit.planarity_rms,
                fit.center.distance(&expected_center),
                curve.max_speed_error(),
            ];
            let limits = [d_tol, 1e-6, 1e-6, 1e-8, 1e-6, 1e-6];
            let names = ["closed form", "radius", "slope", "planarity", "center", "speed"];
            for i in 0..6 {
                ensure(values[i] < limits[i], || {
                    format!("{} {}: {:e} >= {:e}", case.label, names[i], values[i], limits[i])
                })?;
                worst[i] = worst[i].max(values[i]);
            }
            let tilt = plane_angle(&fit.plane_basis, &plane);
            ensure(tilt < 1e-6, || {
                format!("{}: circle plane tilted by {tilt:e}", case.label)
            })?;
            traces += 1;
        }
    }
    Ok(format!(
        "{traces} traces, closed form {:.1e}, radius {:.1e}, slope {:.1e}, planarity {:.1e}, center {:.1e}",
        worst[0], worst[1], worst[2], worst[3], worst[4]
    ))
}

fn rebuild_grid(m: &ParamImmersion<f64>) -> SampleGrid {
    match m.domain_dim() {
        2 => SampleGrid::new(vec![32, 9]),
        _ => SampleGrid::new(vec![12, 7, 7]),
    }
    .expect("grid")
}

fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut r_err, mut res, mut haus): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut points = 0;
    for case in suite() {
        let spec = &case.spec;
        let m = build_product_surface(spec, JacobianMode::Analytic).map_err(|e| e.to_string())?;
        let opts = ReconstructOptions {
            rebuild: Some((spec.window, rebuild_grid(&m))),
            ..Default::default()
        };
        for _ in 0..3 {
            let u = random_param(&mut rng, &m, 0.1);
            let rep = reconstruct_local(&m, &spec.d, &u, &opts).map_err(|e| format!("{} at {u:?}: {e}", case.label))?;
            let rel = (rep.r_hat - spec.r).abs() / spec.r;
            let h = rep.rebuild.as_ref().map_or(f64::INFINITY, |r| r.hausdorff);
            ensure(rel < 1e-4, || format!("{} at {u:?}: radius error {rel:e}", case.label))?;
            ensure(rep.max_residual < 1e-6, || {
                format!("{} at {u:?}: residual {:e}", case.label, rep.max_residual)
            })?;
            ensure(h < 1e-5, || format!("{} at {u:?}: Hausdorff {h:e}", case.label))?;
            ensure(rep.pass, || {
                format!("{} at {u:?}: report did not pass: {rep:?}", case.label)
            })?;
            r_err = r_err.max(rel);
            res = res.max(rep.max_residual);
            haus = haus.max(h);
            points += 1;
        }
    }
    Ok(format!(
        "{points} points, relative radius error {r_err:.1e}, residual {res:.1e}, Hausdorff {haus:.1e}"
    ))
}

fn criterion_6() -> Check {
    let d = Direction::<f64>::last_axis(3);
    let cyl = Preset::Cylinder(1.0).immersion(3).map_err(|e| e.to_string())?;
    let helix = AngleWindow::new(0.0, 0.0).map_err(|e| e.to_string())?;
    let rep =
        verify_semihelix(&cyl, &d, &helix, &SampleGrid::new(vec![64, 16]).expect("grid")).map_err(|e| e.to_string())?;
    let spread = rep.angle_max.abs().max(rep.angle_min.abs());
    ensure(rep.pass && spread < 1e-9, || {
        format!("cylinder: pass={} angle {spread:e}", rep.pass)
    })?;

    let plane = Preset::Plane.immersion(3).map_err(|e| e.to_string())?;
    let window = AngleWindow::new(0.0, FRAC_PI_6).map_err(|e| e.to_string())?;
    let rep =
        verify_semihelix(&plane, &d, &window, &SampleGrid::uniform(2, 9).expect("grid")).map_err(|e| e.to_string())?;
    let angle = rep.angle_max.abs();
    ensure(!rep.pass && (angle - FRAC_PI_2).abs() < 1e-7, || {
        format!("plane: pass={} angle {angle}", rep.pass)
    })?;

    let circle = Preset::Circle(1.0).immersion(2).map_err(|e| e.to_string())?;
    let inward = SemiHelixSpec::from_surface(circle, 5.0, AngleWindow::new(0.0, PI / 3.0).unwrap(), true)
        .map_err(|e| e.to_string())?;
    let m = build_product_surface(&inward, JacobianMode::Analytic).map_err(|e| e.to_string())?;
    let rank = check_immersion_rank(&m, &SampleGrid::new(vec![64, 33]).expect("grid")).map_err(|e| e.to_string())?;
    ensure(rank.below_gate, || {
        format!("inward sweep: minimum {:e} not below gate", rank.refined_min)
    })?;
    Ok(format!(
        "cylinder angle {spread:.1e}, plane angle {angle:.6}, inward sweep σ_min {:.1e} (grid {:.1e})",
        rank.refined_min, rank.node_min
    ))
}

fn rotate(v: &VecN<f64>, rot: &[Vec<f64>]) -> VecN<f64> {
    VecN::new(
        rot.iter()
            .map(|row| row.iter().zip(v.as_slice()).map(|(a, b)| a * b).sum())
            .collect(),
    )
    .unwrap()
}

fn rotation(rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let (a, b, c): (f64, f64, f64) = (rng.gen_range(0.0..PI), rng.gen_range(0.0..PI), rng.gen_range(0.0..PI));
    let rz = |t: f64| {
        vec![
            vec![t.cos(), -t.sin(), 0.0],
            vec![t.sin(), t.cos(), 0.0],
            vec![0.0, 0.0, 1.0],
        ]
    };
    let rx = |t: f64| {
        vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, t.cos(), -t.sin()],
            vec![0.0, t.sin(), t.cos()],
        ]
    };
    let mul = |p: &Vec<Vec<f64>>, q: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        (0..3)
            .map(|i| (0..3).map(|j| (0..3).map(|k| p[i][k] * q[k][j]).sum()).collect())
            .collect()
    };
    mul(&mul(&rz(a), &rx(b)), &rz(c))
}

fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let d = Direction::<f64>::last_axis(3);
    let cyl = Preset::Cylinder(1.0).immersion(3).map_err(|e| e.to_string())?;
    let cloud = sample_cloud(&cyl, &d, 300, 17).map_err(|e| e.to_string())?;
    let mut worst_dir: f64 = 0.0;
    let mut worst_spread: f64 = 0.0;
    for trial in 0..4 {
        let rot = if trial == 0 {
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]
        } else {
            rotation(&mut rng)
        };
        let normals: Vec<VecN<f64>> = cloud.normals.iter().map(|n| rotate(n.as_vec(), &rot)).collect();
        let points: Vec<VecN<f64>> = cloud.points.iter().map(|p| rotate(p, &rot)).collect();
        let rotated = OrientedPointCloud::new(points, normals).map_err(|e| e.to_string())?;
        let fit = fit_direction(&rotated).map_err(|e| e.to_string())?;
        let truth = rotate(d.as_vec(), &rot);
        let angle = fit.direction.dot(&truth).abs().min(1.0).acos();
        worst_dir = worst_dir.max(angle);
        worst_spread = worst_spread.max(fit.spread);
    }
    ensure(worst_dir < 1e-4, || format!("helix axis off by {worst_dir:e} rad"))?;
    ensure(worst_spread < 1e-6, || format!("helix spread {worst_spread:e}"))?;

    let mut excess: f64 = f64::NEG_INFINITY;
    let mut grid_axis: f64 = 0.0;
    for (i, case) in suite().into_iter().enumerate() {
        let m = build_product_surface(&case.spec, JacobianMode::Analytic).map_err(|e| e.to_string())?;
        let cloud = sample_cloud(&m, &case.spec.d, 300, 100 + i as u64).map_err(|e| e.to_string())?;
        let fit = fit_direction(&cloud).map_err(|e| e.to_string())?;
        let over = fit.spread - case.spec.window.epsilon;
        ensure(over <= 1e-6, || {
            format!("{}: spread exceeds epsilon by {over:e}", case.label)
        })?;
        excess = excess.max(over);
        if m.domain_dim() == 2 && case.spec.window.theta0 == 0.0 {
            let cloud =
                grid_cloud(&m, &case.spec.d, &SampleGrid::new(vec![48, 17]).unwrap()).map_err(|e| e.to_string())?;
            let fit = fit_direction(&cloud).map_err(|e| e.to_string())?;
            let angle = fit.direction.dot(case.spec.d.as_vec()).abs().min(1.0).acos();
            ensure(angle < 1e-4, || {
                format!("{}: grid-cloud axis off by {angle:e}", case.label)
            })?;
            grid_axis = grid_axis.max(angle);
        }
    }
    Ok(format!(
        "helix axis {worst_dir:.1e} rad, helix spread {worst_spread:.1e}, max spread − ε {excess:.1e}, grid-cloud axis {grid_axis:.1e}"
    ))
}

fn run_cli(args: &[&str], config: &Path, out: &Path) -> Result<(i32, Outputs), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_semihelix"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    let mut files: Outputs = std::fs::read_dir(out)
        .map_err(|e| format!("{args:?}: {e}; stderr: {}", String::from_utf8_lossy(&status.stderr)))?
        .map(|e| {
            let e = e.expect("dir entry");
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).expect("read output"),
            )
        })
        .collect();
    files.sort();
    Ok((status.status.code().unwrap_or(-1), files))
}

fn criterion_8() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let configs = [
        (
            "fixture.cfg",
            "n = 3\nbase = circle(1)\nr = 1\nepsilon = 0.5236\ngrid = 24,9\nseed = 3\ncloud_samples = 200\n",
        ),
        (
            "sphere.cfg",
            "n = 4\nbase = sphere(1)\nr = 0.25\ntheta0 = 0.2618\nepsilon = 0.1309\ngrid = 8,5,5\nseed = 9\n",
        ),
        (
            "cylinder.cfg",
            "n = 3\nsurface = cylinder(1)\nepsilon = 0\ngrid = 16,8\nseed = 1\n",
        ),
    ];
    let commands: [&[&str]; 5] = [
        &["build"],
        &["verify"],
        &["trace", "--start", "1,0.1", "--span", "0.3", "--step", "0.001"],
        &["reconstruct", "--start", "1,0.1"],
        &["fit-direction"],
    ];
    let mut runs = 0;
    for (name, text) in configs {
        let cfg = dir.path().join(name);
        std::fs::write(&cfg, text).map_err(|e| e.to_string())?;
        for cmd in commands {
            let mut args: Vec<&str> = cmd.to_vec();
            if name == "sphere.cfg" && cmd[0] != "build" && cmd[0] != "verify" && cmd[0] != "fit-direction" {
                let idx = args.iter().position(|a| *a == "1,0.1").expect("start");
                args[idx] = "1,0.2,0.25";
            }
            let first = dir.path().join(format!("{name}-{}-a", cmd[0]));
            let second = dir.path().join(format!("{name}-{}-b", cmd[0]));
            let a = run_cli(&args, &cfg, &first)?;
            let b = run_cli(&args, &cfg, &second)?;
            ensure(!a.1.is_empty(), || {
                format!("{name} {}: no outputs (exit {})", cmd[0], a.0)
            })?;
            ensure(a == b, || format!("{name} {}: outputs differ between runs", cmd[0]))?;
            runs += 1;
        }
    }
    Ok(format!("{runs} command/config pairs byte-identical across two runs"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("frame identities", Duration::from_secs(1), criterion_1),
        ("chord identities", Duration::from_secs(1), criterion_2),
        ("certification", Duration::from_secs(30), criterion_3),
        ("integral curves are circles", Duration::from_secs(10), criterion_4),
        ("local reconstruction round trip", Duration::from_secs(60), criterion_5),
        ("degenerate and helix cases", Duration::from_secs(5), criterion_6),
        ("inverse direction fit", Duration::from_secs(5), criterion_7),
        ("determinism", Duration::from_secs(600), criterion_8),
    ];
    let mut failures = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let verdict = match outcome {
            Ok(detail) if elapsed <= *limit => format!("PASS {detail}"),
            Ok(detail) => format!("FAIL runtime {elapsed:.2?} exceeds {limit:?}; {detail}"),
            Err(reason) => format!("FAIL {reason}"),
        };
        if verdict.starts_with("FAIL") {
            failures += 1;
        }
        println!("criterion {} [{name}] {verdict} ({elapsed:.2?})", i + 1);
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
