//! The reduced (R, w) system against the full system, for a constant field
//! and for mean-field coupling.

use conformal_kuramoto::diagnostics::{compare_trajectories, orthogonality_drift, track_ws_inner_products};
use conformal_kuramoto::model::CouplingSpec;
use conformal_kuramoto::reduction::ReducedState;
use conformal_kuramoto::scenario::{seeded_constant_field, seeded_scenario};

fn main() -> conformal_kuramoto::Result<()> {
    let seed = 7;
    for coupling in [CouplingSpec::Constant(seeded_constant_field(seed, 3, 0.5)), CouplingSpec::MeanField(0.5)] {
        let sc = seeded_scenario(seed, 3, 8, 1.0, coupling.clone(), 10.0)?.with_sampling(0.1);
        let full = sc.run_full()?;
        let reduced = sc.run_reduced()?;
        let rec = sc.reconstruct(&reduced)?;

        let last = ReducedState::from_flat(3, reduced.last_state().unwrap())?;
        println!("{coupling:?}");
        println!("  |w(T)| = {:.6}", last.boost.vector().norm());
        println!("  reconstruction error {:.2e}", compare_trajectories(&full, &rec, 3)?);
        println!("  inner-product drift  {:.2e}", track_ws_inner_products(&full, &reduced, 3)?.max());
        println!("  orthogonality drift  {:.2e}", orthogonality_drift(&reduced, 3));
    }
    Ok(())
}
