//! Phase oscillators on the circle reduced to (ζ, w), and the same model
//! run through the general pipeline with n = 2.

use conformal_kuramoto::diagnostics::compare_angle_trajectories;
use conformal_kuramoto::model::{CouplingSpec, ModelSpec, SphereConfig};
use conformal_kuramoto::numlin::Antisym;
use conformal_kuramoto::reduction::ClassicalReducedState;
use conformal_kuramoto::scenario::{ClassicalScenario, Scenario};

fn main() -> conformal_kuramoto::Result<()> {
    let (omega, k) = (1.0, 0.8);
    let classical = ClassicalScenario::seeded_sin_coupling(11, 20, omega, k, 5.0)?.with_sampling(0.05);
    let full = classical.run_full()?;
    let reduced = classical.run_reduced()?;
    let rec = classical.reconstruct(&reduced)?;
    println!("circle error (ζ, w) vs full: {:.2e}", compare_angle_trajectories(&full, &rec)?);
    let end = ClassicalReducedState::from_flat(reduced.last_state().unwrap());
    println!("ζ(T) = {:.6}, w(T) = {:.6}", end.zeta, end.w);

    // The sine coupling is the planar mean field with K; Ω is rotation by ω.
    let model = ModelSpec::new(Antisym::planar(omega), CouplingSpec::MeanField(k))?;
    let planar = Scenario::new(model, SphereConfig::from_angles(&classical.initial_thetas)?, 5.0)?.with_sampling(0.05);
    let general = planar.reconstruct(&planar.run_reduced()?)?;
    let general_angles = general.map_samples(|_, s| Ok(s.chunks_exact(2).map(|p| p[1].atan2(p[0])).collect()))?;
    println!("general pipeline vs classical: {:.2e}", compare_angle_trajectories(&general_angles, &rec)?);
    Ok(())
}
