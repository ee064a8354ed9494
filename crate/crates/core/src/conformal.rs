//! The group of conformal maps of the closed unit n-ball that preserve the
//! boundary sphere, parametrized as (R, w) ∈ SO(n) × Dⁿ.
//!
//! A boost `b_w` is the Möbius-addition map
//!
//! ```text
//! b_w(z) = [(1 + 2⟨w,z⟩ + |z|²) w + (1 − |w|²) z] / (1 + 2⟨w,z⟩ + |w|²|z|²)
//! ```
//!
//! so that `b_0` is the identity and `b_w(0) = w`. A general element applies
//! the boost first and the rotation second: `M_{R,w}(z) = R · b_w(z)`.
//! With these conventions `b_w⁻¹ = b_{−w}` and `(R, w)⁻¹ = (Rᵀ, −R w)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numlin::{self, dot, reorthonormalize, Matrix, Vector};

/// Boost parameters must satisfy |w| < 1 − BALL_MARGIN.
pub const BALL_MARGIN: f64 = 1e-12;
/// Points with |z| > 1 + CLOSED_BALL_SLACK are rejected.
pub const CLOSED_BALL_SLACK: f64 = 1e-9;
/// Tolerance for accepting a matrix as a member of SO(n).
pub const ROTATION_TOLERANCE: f64 = 1e-12;

/// A point of the open unit ball, used as a boost parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Boost {
    w: Vector,
}

impl Boost {
    pub fn new(w: Vector) -> Result<Self> {
        let norm = w.norm();
        if !(norm < 1.0 - BALL_MARGIN) {
            return Err(Error::BoostOutsideBall { norm });
        }
        Ok(Boost { w })
    }

    pub fn from_slice(w: &[f64]) -> Result<Self> {
        Self::new(Vector::from_slice(w)?)
    }

    /// Skips the ball check; for states recorded at the synchronization boundary.
    pub(crate) fn unchecked(w: Vec<f64>) -> Self {
        Boost { w: Vector::from_raw(w) }
    }

    pub fn zero(n: usize) -> Self {
        Boost { w: Vector::zeros(n) }
    }

    pub fn dim(&self) -> usize {
        self.w.dim()
    }

    pub fn vector(&self) -> &Vector {
        &self.w
    }

    pub fn neg(&self) -> Boost {
        Boost { w: self.w.neg() }
    }

    /// b_w(z), checked: |z| must lie in the closed unit ball.
    pub fn apply(&self, z: &[f64]) -> Result<Vector> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: z.len(),
            });
        }
        let norm = numlin::norm(z);
        if norm > 1.0 + CLOSED_BALL_SLACK {
            return Err(Error::OutsideClosedBall { norm });
        }
        let mut out = vec![0.0; z.len()];
        boost_into(&self.w, z, &mut out);
        Ok(Vector::from_raw(out))
    }
}

/// Denominator D(w, z) = 1 + 2⟨w,z⟩ + |w|²|z|² of the boost.
pub fn boost_denominator(w: &[f64], z: &[f64]) -> f64 {
    1.0 + 2.0 * dot(w, z) + dot(w, w) * dot(z, z)
}

/// Unchecked boost kernel on raw slices; `out` may not alias `z`.
#[inline]
pub(crate) fn boost_into(w: &[f64], z: &[f64], out: &mut [f64]) {
    let wz = dot(w, z);
    let ww = dot(w, w);
    let zz = dot(z, z);
    let denom = 1.0 + 2.0 * wz + ww * zz;
    let cw = (1.0 + 2.0 * wz + zz) / denom;
    let cz = (1.0 - ww) / denom;
    for ((o, wi), zi) in out.iter_mut().zip(w).zip(z) {
        *o = cw * wi + cz * zi;
    }
}

/// b_w(z) for a validated boost parameter.
pub fn boost_apply(w: &Boost, z: &[f64]) -> Result<Vector> {
    w.apply(z)
}

/// Element (R, w) of the sphere-preserving conformal group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MobiusParam {
    rotation: Matrix,
    boost: Boost,
}

impl MobiusParam {
    pub fn new(rotation: Matrix, boost: Boost) -> Result<Self> {
        if rotation.dim() != boost.dim() {
            return Err(Error::DimensionMismatch {
                expected: boost.dim(),
                found: rotation.dim(),
            });
        }
        let defect = rotation.orthogonality_defect();
        if !(defect < ROTATION_TOLERANCE) || rotation.determinant() <= 0.0 {
            return Err(Error::NotRotation { defect });
        }
        Ok(MobiusParam { rotation, boost })
    }

    pub fn identity(n: usize) -> Self {
        MobiusParam {
            rotation: Matrix::identity(n),
            boost: Boost::zero(n),
        }
    }

    pub fn rotation_only(rotation: Matrix) -> Result<Self> {
        let n = rotation.dim();
        Self::new(rotation, Boost::zero(n))
    }

    pub fn boost_only(boost: Boost) -> Self {
        MobiusParam {
            rotation: Matrix::identity(boost.dim()),
            boost,
        }
    }

    pub fn dim(&self) -> usize {
        self.boost.dim()
    }

    pub fn rotation(&self) -> &Matrix {
        &self.rotation
    }

    pub fn boost(&self) -> &Boost {
        &self.boost
    }

    /// R · b_w(z).
    pub fn apply(&self, z: &[f64]) -> Result<Vector> {
        let b = self.boost.apply(z)?;
        Ok(self.rotation.mul_vec(&b))
    }

    /// (Rᵀ, −R w).
    pub fn inverse(&self) -> MobiusParam {
        let w = self.rotation.mul_vec(self.boost.vector()).neg();
        MobiusParam {
            rotation: self.rotation.transpose(),
            // |R w| = |w|, so the ball invariant carries over.
            boost: Boost { w },
        }
    }

    /// The parameters of `self ∘ first`.
    pub fn compose(&self, first: &MobiusParam) -> Result<MobiusParam> {
        mobius_compose(self, first)
    }
}

pub fn mobius_apply(m: &MobiusParam, z: &[f64]) -> Result<Vector> {
    m.apply(z)
}

pub fn mobius_inverse(m: &MobiusParam) -> MobiusParam {
    m.inverse()
}

/// Parameters of `m2 ∘ m1`, extracted numerically.
///
/// Every element can be written either as `R ∘ b_w` or as `b_{Rw} ∘ R`. The
/// image of the origin gives `R w`; undoing that boost leaves the linear map
/// `R`, read off column by column from the images of the basis vectors.
pub fn mobius_compose(m2: &MobiusParam, m1: &MobiusParam) -> Result<MobiusParam> {
    let n = m1.dim();
    if m2.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m2.dim(),
        });
    }
    let composite = |z: &[f64]| -> Result<Vector> { m2.apply(&m1.apply(z)?) };
    let rotated_w = composite(&Vector::zeros(n))?;
    let undo = Boost::new(rotated_w.neg())?;
    let columns = (0..n)
        .map(|k| undo.apply(&composite(&Vector::basis(n, k))?))
        .collect::<Result<Vec<_>>>()?;
    let raw = Matrix::from_columns(&columns)?;
    let defect = raw.orthogonality_defect();
    if !(defect < 1e-8) {
        return Err(Error::CompositionLeftGroup { defect });
    }
    let rotation = reorthonormalize(&raw)?;
    let w = rotation.transpose().mul_vec(&rotated_w);
    Ok(MobiusParam {
        rotation,
        boost: Boost::new(w)?,
    })
}

/// Stereographic projection from the north pole (0, …, 0, 1) of Sⁿ onto the
/// equatorial plane Rⁿ: y_i = x_i / (1 − x_{n+1}).
pub fn stereographic_project(x: &[f64]) -> Result<Vector> {
    let Some((&last, head)) = x.split_last() else {
        return Err(Error::InvalidVector);
    };
    if !(last < 1.0 - 1e-12) {
        return Err(Error::NorthPole);
    }
    let scale = 1.0 / (1.0 - last);
    Vector::new(head.iter().map(|v| v * scale).collect())
}

/// Inverse stereographic projection: y ↦ (2y, |y|² − 1) / (1 + |y|²).
pub fn stereographic_unproject(y: &[f64]) -> Vector {
    let yy = dot(y, y);
    let denom = 1.0 + yy;
    let mut x: Vec<f64> = y.iter().map(|v| 2.0 * v / denom).collect();
    x.push((yy - 1.0) / denom);
    Vector::from_raw(x)
}

/// Indices (i, j, k, l) of a cross-ratio; pairwise distinct.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CrossRatioIndex {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub l: usize,
}

impl CrossRatioIndex {
    pub fn new(i: usize, j: usize, k: usize, l: usize, bodies: usize) -> Result<Self> {
        let idx = [i, j, k, l];
        let distinct = (0..4).all(|a| (a + 1..4).all(|b| idx[a] != idx[b]));
        if !distinct || idx.iter().any(|&v| v >= bodies) {
            return Err(Error::InvalidQuad(i, j, k, l, bodies));
        }
        Ok(CrossRatioIndex { i, j, k, l })
    }
}

/// λ = (|z_i − z_k| / |z_i − z_l|) · (|z_j − z_l| / |z_j − z_k|), the absolute
/// value of the complex cross-ratio when n = 2.
pub fn cross_ratio(zi: &[f64], zj: &[f64], zk: &[f64], zl: &[f64]) -> Result<f64> {
    let d_il = numlin::distance(zi, zl);
    let d_jk = numlin::distance(zj, zk);
    if d_il < 1e-13 || d_jk < 1e-13 {
        return Err(Error::DegenerateQuad);
    }
    Ok(numlin::distance(zi, zk) / d_il * (numlin::distance(zj, zl) / d_jk))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numlin::{mat_exp, Antisym};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(rng: &mut ChaCha8Rng, n: usize) -> Vector {
        loop {
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = numlin::norm(&v);
            if norm > 0.1 && norm <= 1.0 {
                return Vector::new(v).unwrap().normalized();
            }
        }
    }

    fn random_param(rng: &mut ChaCha8Rng, n: usize) -> MobiusParam {
        let upper = (0..n * (n - 1) / 2).map(|_| rng.random_range(-2.0..2.0)).collect();
        let r = mat_exp(&Antisym::from_upper(n, upper).unwrap());
        let w = unit(rng, n).scaled(rng.random_range(0.0..0.9));
        MobiusParam::new(r, Boost::new(w).unwrap()).unwrap()
    }

    #[test]
    fn identity_boost_and_origin_image() {
        let z = [0.3, -0.4, 0.1];
        assert_eq!(Boost::zero(3).apply(&z).unwrap().as_slice(), &z);
        let w = Boost::from_slice(&[0.2, 0.1, -0.5]).unwrap();
        assert_eq!(w.apply(&[0.0; 3]).unwrap(), *w.vector());
    }

    #[test]
    fn planar_boost_matches_complex_disc_automorphism() {
        // Oracle: (w + z) / (1 + w̄ z) in complex arithmetic.
        let w = Complex64::new(0.5, 0.0);
        let z = Complex64::new(0.0, 1.0);
        let oracle = (w + z) / (Complex64::new(1.0, 0.0) + w.conj() * z);
        assert!((oracle.re - 0.8).abs() < 1e-15 && (oracle.im - 0.6).abs() < 1e-15);
        let b = Boost::from_slice(&[0.5, 0.0]).unwrap().apply(&[0.0, 1.0]).unwrap();
        assert!((b[0] - 0.8).abs() < 1e-15 && (b[1] - 0.6).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let wv = unit(&mut rng, 2).scaled(rng.random_range(0.0..0.95));
            let zv = unit(&mut rng, 2).scaled(rng.random_range(0.0..1.0));
            let wc = Complex64::new(wv[0], wv[1]);
            let zc = Complex64::new(zv[0], zv[1]);
            let oc = (wc + zc) / (1.0 + wc.conj() * zc);
            let b = Boost::new(wv).unwrap().apply(&zv).unwrap();
            assert!((b[0] - oc.re).abs() < 1e-13 && (b[1] - oc.im).abs() < 1e-13);
        }
    }

    #[test]
    fn boost_rejects_invalid_inputs() {
        assert!(Boost::from_slice(&[1.0, 0.0]).is_err());
        assert!(Boost::from_slice(&[1.0 - 1e-13, 0.0]).is_err());
        let w = Boost::from_slice(&[0.1, 0.0]).unwrap();
        assert!(matches!(
            w.apply(&[1.1, 0.0]),
            Err(Error::OutsideClosedBall { .. })
        ));
        assert!(w.apply(&[1.0 + 1e-10, 0.0]).is_ok());
    }

    #[test]
    fn rotation_only_and_boost_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = random_param(&mut rng, 3);
        let rot = MobiusParam::rotation_only(m.rotation().clone()).unwrap();
        let z = [0.1, 0.2, 0.3];
        let expected = m.rotation().mul_vec(&z);
        assert!(rot.apply(&z).unwrap().distance(&expected) < 1e-15);
        let bo = MobiusParam::boost_only(m.boost().clone());
        assert_eq!(bo.apply(&[0.0; 3]).unwrap(), *m.boost().vector());
    }

    #[test]
    fn inverse_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(MobiusParam::identity(3).inverse(), MobiusParam::identity(3));
        for n in [2, 3, 4] {
            let w = Boost::new(unit(&mut rng, n).scaled(0.7)).unwrap();
            let m = MobiusParam::boost_only(w.clone());
            let inv = m.inverse();
            assert_eq!(inv.rotation(), &Matrix::identity(n));
            assert_eq!(inv.boost().vector(), &w.vector().neg());
            for _ in 0..100 {
                let z = unit(&mut rng, n).scaled(rng.random_range(0.0..1.0));
                let back = inv.apply(&m.apply(&z).unwrap()).unwrap();
                assert!(back.distance(&z) < 1e-12);
            }
            let general = random_param(&mut rng, n);
            let ginv = general.inverse();
            for _ in 0..50 {
                let z = unit(&mut rng, n);
                let back = ginv.apply(&general.apply(&z).unwrap()).unwrap();
                assert!(back.distance(&z) < 1e-12);
            }
        }
    }

    #[test]
    fn compose_identity_and_inverse_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = random_param(&mut rng, 3);
        let id = MobiusParam::identity(3);
        let c = m.compose(&id).unwrap();
        assert!(c.rotation().max_abs_diff(m.rotation()) < 1e-12);
        assert!(c.boost().vector().distance(m.boost().vector()) < 1e-12);
        let e = m.inverse().compose(&m).unwrap();
        assert!(e.rotation().max_abs_diff(&Matrix::identity(3)) < 1e-10);
        assert!(e.boost().vector().norm() < 1e-10);
    }

    #[test]
    fn composing_boosts_produces_gyration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b1 = MobiusParam::boost_only(Boost::new(unit(&mut rng, 3).scaled(0.6)).unwrap());
        let b2 = MobiusParam::boost_only(Boost::new(unit(&mut rng, 3).scaled(0.7)).unwrap());
        let c = b2.compose(&b1).unwrap();
        assert!(c.rotation().max_abs_diff(&Matrix::identity(3)) > 1e-3);
        for _ in 0..100 {
            let z = unit(&mut rng, 3).scaled(rng.random_range(0.0..1.0));
            let direct = b2.apply(&b1.apply(&z).unwrap()).unwrap();
            assert!(c.apply(&z).unwrap().distance(&direct) < 1e-10);
        }
    }

    #[test]
    fn rotation_conjugates_boost() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let m = random_param(&mut rng, 4);
        let r = MobiusParam::rotation_only(m.rotation().clone()).unwrap();
        let b = MobiusParam::boost_only(m.boost().clone());
        let conj = r.compose(&b).unwrap().compose(&r.inverse()).unwrap();
        let expected = m.rotation().mul_vec(m.boost().vector());
        assert!(conj.boost().vector().distance(&expected) < 1e-10);
        assert!(conj.rotation().max_abs_diff(&Matrix::identity(4)) < 1e-10);
    }

    #[test]
    fn stereographic_examples() {
        assert_eq!(
            stereographic_project(&[1.0, 0.0, 0.0]).unwrap().as_slice(),
            &[1.0, 0.0]
        );
        assert_eq!(
            stereographic_project(&[0.0, 0.0, -1.0]).unwrap().as_slice(),
            &[0.0, 0.0]
        );
        let y = stereographic_project(&[0.0, 0.6, -0.8]).unwrap();
        // Oracle: intersect the line N + s (x − N) with the plane x_3 = 0.
        let north = [0.0, 0.0, 1.0];
        let x = [0.0, 0.6, -0.8];
        let s = north[2] / (north[2] - x[2]);
        let hit = [north[0] + s * (x[0] - north[0]), north[1] + s * (x[1] - north[1])];
        assert!((y[0] - hit[0]).abs() < 1e-15 && (y[1] - hit[1]).abs() < 1e-15);
        assert!((y[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            stereographic_project(&[0.0, 0.0, 1.0]),
            Err(Error::NorthPole)
        ));
    }

    #[test]
    fn stereographic_unproject_examples() {
        assert_eq!(stereographic_unproject(&[0.0, 0.0]).as_slice(), &[0.0, 0.0, -1.0]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x = stereographic_unproject(&[s, s]);
        assert!((x[0] - s).abs() < 1e-15 && (x[1] - s).abs() < 1e-15 && x[2].abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let y: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..5.0)).collect();
            let x = stereographic_unproject(&y);
            assert!((x.norm() - 1.0).abs() < 1e-14);
            let back = stereographic_project(&x).unwrap();
            assert!(numlin::distance(&back, &y) < 1e-12 * (1.0 + numlin::norm(&y)));
        }
    }

    #[test]
    fn cross_ratio_examples() {
        let sq = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        // (2/√2)·(2/√2) for the symmetric square.
        let lam = cross_ratio(&sq[0], &sq[1], &sq[2], &sq[3]).unwrap();
        assert!((lam - 2.0).abs() < 1e-15);
        assert_eq!(cross_ratio(&sq[2], &sq[1], &sq[2], &sq[3]).unwrap(), 0.0);
        assert_eq!(cross_ratio(&sq[0], &sq[3], &sq[2], &sq[3]).unwrap(), 0.0);
        assert!(matches!(
            cross_ratio(&sq[0], &sq[1], &sq[2], &sq[0]),
            Err(Error::DegenerateQuad)
        ));
        assert!(matches!(
            cross_ratio(&sq[0], &sq[2], &sq[2], &sq[3]),
            Err(Error::DegenerateQuad)
        ));
    }

    #[test]
    fn cross_ratio_invariant_under_mobius_on_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for n in [2, 3] {
            for _ in 0..50 {
                let pts: Vec<Vector> = (0..4).map(|_| unit(&mut rng, n)).collect();
                let m = random_param(&mut rng, n);
                let imgs: Vec<Vector> = pts.iter().map(|p| m.apply(p).unwrap()).collect();
                let before = cross_ratio(&pts[0], &pts[1], &pts[2], &pts[3]).unwrap();
                let after = cross_ratio(&imgs[0], &imgs[1], &imgs[2], &imgs[3]).unwrap();
                assert!((before - after).abs() < 1e-12 * before.max(1.0));
            }
        }
    }

    #[test]
    fn quad_index_validation() {
        assert!(CrossRatioIndex::new(0, 1, 2, 3, 4).is_ok());
        assert!(CrossRatioIndex::new(0, 1, 2, 2, 4).is_err());
        assert!(CrossRatioIndex::new(0, 1, 2, 4, 4).is_err());
    }
}
