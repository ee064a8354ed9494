//! Strong mean-field coupling drives |w| to the boundary of the ball.

use conformal_kuramoto::integrate::EventKind;
use conformal_kuramoto::model::{order_parameter, CouplingSpec, SphereConfig};
use conformal_kuramoto::scenario::seeded_scenario;

fn main() -> conformal_kuramoto::Result<()> {
    let sc = seeded_scenario(7, 3, 50, 1.0, CouplingSpec::MeanField(2.0), 50.0)?.with_sampling(1.0);

    let reduced = sc.run_reduced()?;
    for e in &reduced.events {
        println!("reduced run: {:?} at t = {:.3}", e.kind, e.time);
    }
    assert!(reduced.has_event(EventKind::SyncBoundary));

    let full = sc.run_full()?;
    let last = SphereConfig::from_flat(3, full.last_state().unwrap().to_vec())?;
    println!("full run: order parameter {:.12} at t = 50", order_parameter(&last));
    Ok(())
}
