//! Boosts and rotations of the unit ball: apply, invert, compose.

use conformal_kuramoto::conformal::{cross_ratio, Boost, MobiusParam};
use conformal_kuramoto::numlin::{mat_exp, Antisym, Vector};

fn main() -> conformal_kuramoto::Result<()> {
    let rotation = mat_exp(&Antisym::from_upper(3, vec![0.4, -0.2, 0.9])?);
    let m1 = MobiusParam::new(rotation, Boost::from_slice(&[0.3, -0.1, 0.5])?)?;
    let m2 = MobiusParam::boost_only(Boost::from_slice(&[-0.6, 0.2, 0.0])?);

    let z = Vector::from_slice(&[0.0, 0.6, 0.8])?;
    let image = m1.apply(&z)?;
    println!("|M(z)| = {:.15} for |z| = 1", image.norm());
    println!("M⁻¹(M(z)) - z = {:.2e}", m1.inverse().apply(&image)?.distance(&z));

    let composite = m2.compose(&m1)?;
    let sequential = m2.apply(&m1.apply(&z)?)?;
    println!("composite vs sequential: {:.2e}", composite.apply(&z)?.distance(&sequential));
    println!("composite boost = {:?}", composite.boost().vector().as_slice());

    let pts = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, -0.6, -0.8]];
    let moved: Vec<Vector> = pts.iter().map(|p| m1.apply(p)).collect::<Result<_, _>>()?;
    println!(
        "cross-ratio before {:.12}, after {:.12}",
        cross_ratio(&pts[0], &pts[1], &pts[2], &pts[3])?,
        cross_ratio(&moved[0], &moved[1], &moved[2], &moved[3])?
    );
    Ok(())
}
