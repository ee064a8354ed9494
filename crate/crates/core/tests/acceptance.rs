//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use conformal_kuramoto::cli::{bench_rows, ScenarioConfig};
use conformal_kuramoto::conformal::{
    boost_apply, boost_denominator, cross_ratio, stereographic_project, stereographic_unproject, Boost, MobiusParam,
};
use conformal_kuramoto::diagnostics::{
    compare_angle_trajectories, compare_trajectories, quad_sampler, track_cross_ratios, track_ws_inner_products,
};
use conformal_kuramoto::integrate::{integrate, EventKind, IntegratorSpec, Method};
use conformal_kuramoto::model::{order_parameter, CouplingSpec, ModelSpec, SphereConfig};
use conformal_kuramoto::numlin::{dot, mat_exp, norm, Antisym, Vector};
use conformal_kuramoto::sampling::random_unit_vector;
use conformal_kuramoto::scenario::{seeded_constant_field, seeded_scenario, ClassicalScenario, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::Value;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn random_mobius(rng: &mut ChaCha20Rng, n: usize) -> MobiusParam {
    let upper = (0..n * (n - 1) / 2).map(|_| rng.random_range(-3.0..3.0)).collect();
    let r = mat_exp(&Antisym::from_upper(n, upper).unwrap());
    let w = random_unit_vector(rng, n).scaled(rng.random_range(0.0..0.95));
    MobiusParam::new(r, Boost::new(w).unwrap()).unwrap()
}

fn boundary_preservation() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(101);
    let mut worst: f64 = 0.0;
    for n in [2, 3, 4, 8] {
        for _ in 0..2500 {
            let m = random_mobius(&mut rng, n);
            let z = random_unit_vector(&mut rng, n);
            worst = worst.max((m.apply(&z).unwrap().norm() - 1.0).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(worst < 1e-12 && secs < 1.0, format!("max | |M(z)| - 1 | = {worst:.2e} (< 1e-12), {secs:.3} s (< 1 s)"))
}

fn norm_identity() -> Outcome {
    let mut rng = rng(102);
    let mut worst: f64 = 0.0;
    for k in 0..10_000 {
        let n = [2, 3, 4, 8][k % 4];
        let w = Boost::new(random_unit_vector(&mut rng, n).scaled(rng.random_range(0.0..0.95))).unwrap();
        let z = random_unit_vector(&mut rng, n).scaled(rng.random_range(0.0..=1.0));
        let image = boost_apply(&w, &z).unwrap();
        let w2 = dot(w.vector(), w.vector());
        let lhs = dot(&image, &image) - 1.0;
        let rhs = (1.0 - w2) * (dot(&z, &z) - 1.0) / boost_denominator(w.vector(), &z);
        worst = worst.max((lhs - rhs).abs());
    }
    check(worst < 1e-12, format!("max residual {worst:.2e} (< 1e-12)"))
}

fn group_laws() -> Outcome {
    let mut rng = rng(103);
    let (mut inv, mut comp): (f64, f64) = (0.0, 0.0);
    for n in [2, 3, 5] {
        for _ in 0..1000 {
            let (a, b) = (random_mobius(&mut rng, n), random_mobius(&mut rng, n));
            let z = random_unit_vector(&mut rng, n);
            inv = inv.max(a.inverse().apply(&a.apply(&z).unwrap()).unwrap().distance(&z));
            let seq = a.apply(&b.apply(&z).unwrap()).unwrap();
            comp = comp.max(a.compose(&b).unwrap().apply(&z).unwrap().distance(&seq));
        }
    }
    check(
        inv < 1e-10 && comp < 1e-10,
        format!("inverse round-trip {inv:.2e}, composition vs pointwise {comp:.2e} (< 1e-10)"),
    )
}

fn cross_ratio_invariance() -> Outcome {
    let mut rng = rng(104);
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let n = [2, 3, 4][k % 3];
        let m = random_mobius(&mut rng, n);
        let p: Vec<Vector> = (0..4).map(|_| random_unit_vector(&mut rng, n)).collect();
        let q: Vec<Vector> = p.iter().map(|x| m.apply(x).unwrap()).collect();
        let before = cross_ratio(&p[0], &p[1], &p[2], &p[3]).unwrap();
        let after = cross_ratio(&q[0], &q[1], &q[2], &q[3]).unwrap();
        worst = worst.max((before - after).abs() / before);
    }
    check(worst < 1e-12, format!("max relative error {worst:.2e} (< 1e-12)"))
}

/// N=8, n=3, σ=1, |X|=0.5, T=10, RK4 h=1e-3.
fn constant_field_scenario() -> Scenario {
    let seed = 7;
    let x = seeded_constant_field(seed, 3, 0.5);
    seeded_scenario(seed, 3, 8, 1.0, CouplingSpec::Constant(x), 10.0)
        .unwrap()
        .with_method(Method::Rk4 { step: 1e-3 })
        .with_sampling(0.1)
}

fn cross_ratio_conservation() -> Outcome {
    let start = Instant::now();
    let sc = constant_field_scenario();
    let full = sc.run_full().unwrap();
    let quads = quad_sampler(8, 500, 7).unwrap();
    let drift = track_cross_ratios(&full, 3, &quads).unwrap().max();
    let secs = start.elapsed().as_secs_f64();
    check(
        drift < 1e-6 && secs < 10.0,
        format!("max relative drift {drift:.2e} over {} quadruples (< 1e-6), {secs:.2} s (< 10 s)", quads.len()),
    )
}

fn inner_product_conservation() -> Outcome {
    let sc = constant_field_scenario();
    let drift = track_ws_inner_products(&sc.run_full().unwrap(), &sc.run_reduced().unwrap(), 3)
        .unwrap()
        .max();
    check(drift < 1e-6, format!("max |<u_i,u_j>(t) - <u_i,u_j>(0)| = {drift:.2e} (< 1e-6)"))
}

fn full_vs_reduced() -> Outcome {
    let start = Instant::now();
    let constant = constant_field_scenario();
    let err_c = compare_trajectories(
        &constant.run_full().unwrap(),
        &constant.reconstruct(&constant.run_reduced().unwrap()).unwrap(),
        3,
    )
    .unwrap();
    let mean = seeded_scenario(7, 3, 8, 1.0, CouplingSpec::MeanField(0.5), 10.0)
        .unwrap()
        .with_method(Method::Rk4 { step: 1e-3 })
        .with_sampling(0.1);
    let err_m = compare_trajectories(
        &mean.run_full().unwrap(),
        &mean.reconstruct(&mean.run_reduced().unwrap()).unwrap(),
        3,
    )
    .unwrap();
    let secs = start.elapsed().as_secs_f64();
    check(
        err_c < 1e-5 && err_m < 1e-4 && secs < 30.0,
        format!("constant X {err_c:.2e} (< 1e-5), mean field {err_m:.2e} (< 1e-4), {secs:.2} s (< 30 s)"),
    )
}

fn classical_scenario() -> ClassicalScenario {
    ClassicalScenario::seeded_sin_coupling(11, 20, 1.0, 0.8, 5.0)
        .unwrap()
        .with_method(Method::Rk4 { step: 1e-3 })
        .with_sampling(0.05)
}

fn classical_reduction() -> Outcome {
    let sc = classical_scenario();
    let rec = sc.reconstruct(&sc.run_reduced().unwrap()).unwrap();
    let err = compare_angle_trajectories(&sc.run_full().unwrap(), &rec).unwrap();
    check(err < 1e-5, format!("sup circle distance {err:.2e} (< 1e-5)"))
}

fn circle_cross_check() -> Outcome {
    let classical = classical_scenario();
    let rec = classical.reconstruct(&classical.run_reduced().unwrap()).unwrap();
    let model = ModelSpec::new(Antisym::planar(1.0), CouplingSpec::MeanField(0.8)).unwrap();
    let planar = Scenario::new(model, SphereConfig::from_angles(&classical.initial_thetas).unwrap(), 5.0)
        .unwrap()
        .with_method(Method::Rk4 { step: 1e-3 })
        .with_sampling(0.05);
    let general = planar.reconstruct(&planar.run_reduced().unwrap()).unwrap();
    let angles = general
        .map_samples(|_, s| Ok(s.chunks_exact(2).map(|p| p[1].atan2(p[0])).collect()))
        .unwrap();
    let err = compare_angle_trajectories(&angles, &rec).unwrap();
    check(err < 1e-8, format!("generalized (n=2) vs classical {err:.2e} (< 1e-8)"))
}

fn stereographic() -> Outcome {
    let mut rng = rng(110);
    let mut equator: f64 = 0.0;
    let mut round: f64 = 0.0;
    let mut conformal: f64 = 0.0;
    for _ in 0..1000 {
        let e = random_unit_vector(&mut rng, 2);
        let y = stereographic_project(&[e[0], e[1], 0.0]).unwrap();
        equator = equator.max(y.distance(&e));

        let n = rng.random_range(2..6);
        let y = Vector::new((0..n).map(|_| rng.random_range(-5.0..5.0)).collect()).unwrap();
        round = round.max(stereographic_project(&stereographic_unproject(&y)).unwrap().distance(&y));

        // Orthonormal tangent pair at x on S², pushed forward by central differences.
        let x = random_unit_vector(&mut rng, 3);
        if x[2] > 0.5 {
            continue;
        }
        let tangent = |v: Vector| {
            let t = v.sub(&x.scaled(v.dot(&x)));
            t.scaled(1.0 / t.norm())
        };
        let a = tangent(random_unit_vector(&mut rng, 3));
        let b0 = tangent(random_unit_vector(&mut rng, 3));
        let b = tangent(b0.sub(&a.scaled(b0.dot(&a))));
        let h = 1e-5;
        let push = |t: &Vector| {
            let at = |s: f64| stereographic_project(&x.scaled(s.cos()).add(&t.scaled(s.sin()))).unwrap();
            at(h).sub(&at(-h)).scaled(0.5 / h)
        };
        let (ja, jb) = (push(&a), push(&b));
        let cos = ja.dot(&jb) / (ja.norm() * jb.norm());
        conformal = conformal.max(cos.abs()).max((ja.norm() / jb.norm() - 1.0).abs());
    }
    check(
        equator < 1e-15 && round < 1e-12 && conformal < 1e-8,
        format!("equator {equator:.2e} (< 1e-15), round trip {round:.2e} (< 1e-12), conformality {conformal:.2e} (< 1e-8)"),
    )
}

fn rk4_order() -> Outcome {
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> conformal_kuramoto::Result<()> {
        dy[0] = y[0];
        Ok(())
    };
    let err = |h: f64| {
        let traj = integrate(&rhs, &[1.0], (0.0, 1.0), &IntegratorSpec::new(Method::Rk4 { step: h }), 1.0).unwrap();
        (traj.last_state().unwrap()[0] - 1f64.exp()).abs()
    };
    let ratio = err(0.1) / err(0.05);
    check(ratio >= 12.0, format!("error ratio {ratio:.2} (>= 12)"))
}

fn n_independence() -> Outcome {
    let start = Instant::now();
    let cfg = ScenarioConfig::from_json(
        r#"{"schema_version": 1, "ambient_dim": 3, "body_count": 10, "t_end": 1.0, "sample_every": 1.0,
            "seed": 7, "integrator": {"method": "rk4", "step": 0.001},
            "omega": {"random": {"scale": 1.0}}, "coupling": {"random_constant": {"magnitude": 0.5}},
            "bench": {"body_counts": [10, 10000], "steps": 500, "repeats": 5}}"#,
    )
    .unwrap();
    let rows = bench_rows(&cfg).unwrap();
    let cost = |system: &str, n: usize| {
        rows.iter()
            .find(|r| r.system == system && r.body_count == n)
            .unwrap()
            .median_step_seconds
    };
    let reduced = cost("reduced", 10000) / cost("reduced", 10);
    let full = cost("full", 10000) / cost("full", 10);
    let secs = start.elapsed().as_secs_f64();
    check(
        reduced < 2.0 && full >= 100.0 && secs < 60.0,
        format!("reduced cost ratio {reduced:.2} (< 2), full growth {full:.0}x (>= 100), {secs:.1} s (< 60 s)"),
    )
}

fn synchronization() -> Outcome {
    let sc = seeded_scenario(7, 3, 50, 1.0, CouplingSpec::MeanField(2.0), 50.0)
        .unwrap()
        .with_method(Method::Rk4 { step: 1e-3 })
        .with_sampling(1.0);
    let full = sc.run_full().unwrap();
    let r = order_parameter(&SphereConfig::from_flat(3, full.last_state().unwrap().to_vec()).unwrap());
    let reduced = sc.run_reduced().unwrap();
    let event = reduced.events.iter().find(|e| e.kind == EventKind::SyncBoundary);
    let boundary = reduced.last_state().map(|y| 1.0 - norm(&y[9..])).unwrap();
    check(
        r > 0.99 && event.is_some(),
        format!(
            "order parameter {r:.12} (> 0.99), sync event at t = {} with 1 - |w| = {boundary:.1e}",
            event.map_or("none".into(), |e| format!("{:.3}", e.time))
        ),
    )
}

fn run_cli(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_ckuramoto"))
        .args(args)
        .arg("--quiet")
        .status()
        .unwrap()
        .code()
        .unwrap()
}

/// Outputs of two runs, byte for byte; the manifest without its timings.
fn same_outputs(a: &Path, b: &Path) -> Result<usize, String> {
    let mut files = 0;
    for entry in fs::read_dir(a).unwrap() {
        let name = entry.unwrap().file_name();
        let (x, y) = (fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).map_err(|e| e.to_string())?);
        let same = if name == "timing.csv" {
            continue;
        } else if name == "manifest.json" {
            let strip = |bytes: &[u8]| {
                let mut v: Value = serde_json::from_slice(bytes).unwrap();
                v.as_object_mut().unwrap().remove("timings");
                v
            };
            strip(&x) == strip(&y)
        } else {
            x == y
        };
        if !same {
            return Err(format!("{name:?} differs"));
        }
        files += 1;
    }
    Ok(files)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, coupling: &str| {
        let path = dir.path().join(name);
        let text = r#"{"schema_version": 1, "ambient_dim": 3, "body_count": 8, "t_end": 2.0, "sample_every": 0.1,
            "seed": 7, "integrator": {"method": "rk4", "step": 0.001},
            "omega": {"random": {"scale": 1.0}}, "coupling": COUPLING,
            "bench": {"body_counts": [10], "steps": 10, "repeats": 1},
            "classical": {"drive": {"sin_coupling": {"omega": 1.0, "k": 0.8}}}}"#;
        fs::write(&path, text.replace("COUPLING", coupling)).unwrap();
        path.to_string_lossy().into_owned()
    };
    let mean_field = write("mean_field.json", r#"{"mean_field": 0.5}"#);
    let constant = write("constant.json", r#"{"random_constant": {"magnitude": 0.5}}"#);
    let mut files = 0;
    for cmd in ["simulate", "reduce", "compare", "bench", "classical"] {
        let config = if cmd == "bench" { &constant } else { &mean_field };
        let runs = ["a", "b"].map(|s| dir.path().join(format!("{cmd}_{s}")));
        for out in &runs {
            let code = run_cli(&[cmd, "--config", config, "--out-dir", out.to_str().unwrap()]);
            if code != 0 {
                return check(false, format!("{cmd} exited with {code}"));
            }
        }
        match same_outputs(&runs[0], &runs[1]) {
            Ok(n) => files += n,
            Err(e) => return check(false, format!("{cmd}: {e}")),
        }
    }
    check(true, format!("{files} files identical across two runs of 5 commands"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 14] = [
        ("Mobius boundary preservation", boundary_preservation),
        ("norm identity", norm_identity),
        ("group laws", group_laws),
        ("cross-ratio invariance", cross_ratio_invariance),
        ("cross-ratio conservation along dynamics", cross_ratio_conservation),
        ("WS inner-product conservation", inner_product_conservation),
        ("full vs reduced equivalence", full_vs_reduced),
        ("classical S1 reduction", classical_reduction),
        ("n=2 cross-check", circle_cross_check),
        ("stereographic projection", stereographic),
        ("RK4 order", rk4_order),
        ("N-independence benchmark", n_independence),
        ("synchronization", synchronization),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = f();
        failures += usize::from(!outcome.pass);
        println!(
            "{} [{:>2}] {name}: {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            i + 1,
            outcome.detail
        );
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
