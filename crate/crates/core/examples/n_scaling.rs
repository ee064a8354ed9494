//! Per-step cost of the full and reduced systems as N grows.

use conformal_kuramoto::cli::{bench_rows, ScenarioConfig};

fn main() {
    let cfg = ScenarioConfig::from_json(
        r#"{
            "schema_version": 1,
            "ambient_dim": 3,
            "body_count": 10,
            "t_end": 1.0,
            "sample_every": 1.0,
            "seed": 3,
            "omega": {"random": {"scale": 1.0}},
            "coupling": {"random_constant": {"magnitude": 0.5}},
            "bench": {"body_counts": [10, 100, 1000, 10000], "steps": 300, "repeats": 3}
        }"#,
    )
    .expect("valid config");
    let rows = bench_rows(&cfg).expect("bench runs");
    println!("{:>8} {:>7} {:>12}", "system", "N", "s/step");
    for r in rows {
        println!("{:>8} {:>7} {:>12.3e}", r.system, r.body_count, r.median_step_seconds);
    }
}
