use conformal_kuramoto::conformal::{stereographic_project, stereographic_unproject};

fn main() -> conformal_kuramoto::Result<()> {
    // Equator is fixed, south pole goes to the origin.
    println!("{:?}", stereographic_project(&[0.6, 0.8, 0.0])?.as_slice());
    println!("{:?}", stereographic_project(&[0.0, 0.0, -1.0])?.as_slice());

    for y in [[0.5, -1.5], [3.0, 4.0], [1e-3, 0.0]] {
        let x = stereographic_unproject(&y);
        let back = stereographic_project(&x)?;
        println!("{y:?} -> {:?} -> {:?}", x.as_slice(), back.as_slice());
    }

    match stereographic_project(&[0.0, 0.0, 1.0]) {
        Err(e) => println!("north pole: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
