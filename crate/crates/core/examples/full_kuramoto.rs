//! Full N-body integration with conserved cross-ratios and order parameter.

use conformal_kuramoto::diagnostics::{norm_drift, order_parameter_series, quad_sampler, track_cross_ratios};
use conformal_kuramoto::model::CouplingSpec;
use conformal_kuramoto::scenario::{seeded_constant_field, seeded_scenario};

fn main() -> conformal_kuramoto::Result<()> {
    let seed = 7;
    let x = seeded_constant_field(seed, 3, 0.5);
    let sc = seeded_scenario(seed, 3, 8, 1.0, CouplingSpec::Constant(x), 10.0)?.with_sampling(0.5);
    let traj = sc.run_full()?;

    let quads = quad_sampler(8, 500, seed)?;
    let drift = track_cross_ratios(&traj, 3, &quads)?;
    println!("{} samples, {} quadruples", traj.len(), quads.len());
    println!("max cross-ratio drift {:.2e}", drift.max());
    println!("max norm drift {:.2e}", norm_drift(&traj, 3));
    for (t, r) in order_parameter_series(&traj, 3).iter().step_by(4) {
        println!("t = {t:5.2}  r = {r:.6}");
    }
    Ok(())
}
