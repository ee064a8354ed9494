//! Reduced dynamics.
//!
//! For the generalized model, every trajectory has the form
//! `x_i(t) = b_{w(t)}(R(t) x_i(0))` where
//!
//! ```text
//! ẇ = Ω w + ½ (1 + |w|²) X − ⟨w, X⟩ w
//! Ṙ = (Ω + A) R,   A = X wᵀ − w Xᵀ
//! ```
//!
//! starting from `(R, w) = (I, 0)`. Equivalently the transformed bodies
//! `u_i = b_{−w}(x_i)` move rigidly, `u_i(t) = R(t) x_i(0)`, so their pairwise
//! inner products are constant.
//!
//! On the circle the classical system is carried by `(ζ, w) ∈ S¹ × D²` with
//! `z_j(t) = ζ (z_j(0) − w) / (1 − w̄ z_j(0))`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conformal::{boost_into, Boost};
use crate::error::{Error, Result};
use crate::integrate::{IntegratorSpec, Method, OdeSystem, Projection};
use crate::model::{
    classical_coeffs_sin_coupling, coupling_field_into, ClassicalCoefficients, CouplingSpec,
    ExternalSeries, ModelSpec, SphereConfig,
};
use crate::numlin::{antisym_from_outer, dot, mat_mul_into, mat_vec_into, Antisym, Matrix, Vector};

/// The reduced state (R, w) ∈ SO(n) × Dⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState {
    pub rotation: Matrix,
    pub boost: Boost,
}

impl ReducedState {
    pub fn identity(n: usize) -> Self {
        ReducedState {
            rotation: Matrix::identity(n),
            boost: Boost::zero(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.boost.dim()
    }

    /// Flat layout: R row-major (n² entries) followed by w (n entries).
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = self.rotation.as_slice().to_vec();
        out.extend_from_slice(self.boost.vector());
        out
    }

    pub fn from_flat(n: usize, flat: &[f64]) -> Result<Self> {
        if flat.len() != n * n + n {
            return Err(Error::DimensionMismatch {
                expected: n * n + n,
                found: flat.len(),
            });
        }
        Ok(ReducedState {
            rotation: Matrix::from_row_major(n, flat[..n * n].to_vec())?,
            boost: Boost::from_slice(&flat[n * n..])?,
        })
    }

    /// Length of the flat state for ambient dimension n.
    pub fn flat_len(n: usize) -> usize {
        n * n + n
    }
}

/// Integrator settings for reduced states: polar repair on R, boundary check on w.
pub fn reduced_integrator(method: Method, n: usize) -> IntegratorSpec {
    IntegratorSpec::new(method)
        .with(0, Projection::ReorthonormalizeRotation { n })
        .with(n * n, Projection::BallCheck { n })
}

/// The sign variants of the transform `u = a · b_{s·w}(a · x)`.
///
/// `DisplayedForm` is the boost exactly as usually written in the
/// `(w − z)/(1 − w̄z)` convention, which equals `b_w(−x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WsConvention {
    /// u = b_{−w}(x). Selected by the convention-resolution test.
    NegatedBoost,
    /// u = b_w(x).
    DirectBoost,
    /// u = b_w(−x).
    DisplayedForm,
    /// u = b_{−w}(−x).
    DisplayedNegated,
}

impl WsConvention {
    pub const RESOLVED: WsConvention = WsConvention::NegatedBoost;
    pub const ALL: [WsConvention; 4] = [
        WsConvention::NegatedBoost,
        WsConvention::DirectBoost,
        WsConvention::DisplayedForm,
        WsConvention::DisplayedNegated,
    ];

    /// (boost sign s, point sign a) in u = b_{s·w}(a·x).
    fn signs(self) -> (f64, f64) {
        match self {
            WsConvention::NegatedBoost => (-1.0, 1.0),
            WsConvention::DirectBoost => (1.0, 1.0),
            WsConvention::DisplayedForm => (1.0, -1.0),
            WsConvention::DisplayedNegated => (-1.0, -1.0),
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            WsConvention::NegatedBoost => "negated-boost",
            WsConvention::DirectBoost => "direct-boost",
            WsConvention::DisplayedForm => "displayed-form",
            WsConvention::DisplayedNegated => "displayed-negated",
        }
    }

    /// u = b_{s·w}(a·x)
    fn forward_into(self, w: &[f64], x: &[f64], out: &mut [f64]) {
        let (s, a) = self.signs();
        let sw: Vec<f64> = w.iter().map(|v| s * v).collect();
        let ax: Vec<f64> = x.iter().map(|v| a * v).collect();
        boost_into(&sw, &ax, out);
    }

    /// x = a · b_{−s·w}(u)
    fn inverse_into(self, w: &[f64], u: &[f64], out: &mut [f64]) {
        let (s, a) = self.signs();
        let sw: Vec<f64> = w.iter().map(|v| -s * v).collect();
        boost_into(&sw, u, out);
        out.iter_mut().for_each(|v| *v *= a);
    }

    /// u(0) for w(0) = 0.
    fn initial_frame(self, x: &[f64]) -> Vec<f64> {
        let (_, a) = self.signs();
        x.iter().map(|v| a * v).collect()
    }
}

/// Bodies seen in the transformed frame.
#[derive(Debug, Clone, PartialEq)]
pub struct WsFrame {
    pub u: SphereConfig,
}

impl WsFrame {
    /// ⟨u_i, u_j⟩ for i < j, row by row.
    pub fn inner_products(&self) -> Vec<f64> {
        let n = self.u.len();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(dot(self.u.body(i), self.u.body(j)));
            }
        }
        out
    }
}

/// ẇ = Ω w + ½(1 + |w|²) X − ⟨w, X⟩ w.
pub fn ws_velocity(w: &Boost, omega: &Antisym, x: &[f64]) -> Result<Vector> {
    let n = w.dim();
    for found in [omega.dim(), x.len()] {
        if found != n {
            return Err(Error::DimensionMismatch { expected: n, found });
        }
    }
    let mut out = vec![0.0; n];
    ws_velocity_into(n, omega.to_matrix().as_slice(), x, w.vector(), &mut out);
    Vector::new(out)
}

#[inline]
fn ws_velocity_into(n: usize, omega: &[f64], x: &[f64], w: &[f64], out: &mut [f64]) {
    let ww = dot(w, w);
    let wx = dot(w, x);
    mat_vec_into(n, omega, w, out);
    for i in 0..n {
        out[i] += 0.5 * (1.0 + ww) * x[i] - wx * w[i];
    }
}

/// Ṙ = (Ω + A) R with A = X wᵀ − w Xᵀ.
pub fn rotation_velocity(r: &Matrix, w: &Boost, omega: &Antisym, x: &[f64]) -> Result<Matrix> {
    let n = w.dim();
    for found in [r.dim(), omega.dim(), x.len()] {
        if found != n {
            return Err(Error::DimensionMismatch { expected: n, found });
        }
    }
    let generator = omega.add(&antisym_from_outer(x, w.vector())?);
    Ok(generator.to_matrix().mul(r))
}

/// Flat reduced vector field for a known X.
fn reduced_rhs_into(n: usize, omega: &[f64], x: &[f64], y: &[f64], dy: &mut [f64]) {
    let (r, w) = y.split_at(n * n);
    let (dr, dw) = dy.split_at_mut(n * n);
    // (Ω + X wᵀ − w Xᵀ) R = Ω R + X (wᵀR) − w (XᵀR)
    mat_mul_into(n, omega, r, dr);
    let mut w_r = vec![0.0; n];
    let mut x_r = vec![0.0; n];
    for k in 0..n {
        for j in 0..n {
            w_r[j] += w[k] * r[k * n + j];
            x_r[j] += x[k] * r[k * n + j];
        }
    }
    for i in 0..n {
        for j in 0..n {
            dr[i * n + j] += x[i] * w_r[j] - w[i] * x_r[j];
        }
    }
    ws_velocity_into(n, omega, x, w, dw);
}

/// u_i = b_{−w}(x_i).
pub fn ws_transform(state: &SphereConfig, w: &Boost) -> Result<WsFrame> {
    ws_transform_with(WsConvention::RESOLVED, state, w)
}

pub fn ws_transform_with(conv: WsConvention, state: &SphereConfig, w: &Boost) -> Result<WsFrame> {
    let n = state.dim();
    if w.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: w.dim(),
        });
    }
    let mut u = vec![0.0; state.as_flat().len()];
    for (x, out) in state.bodies().zip(u.chunks_exact_mut(n)) {
        conv.forward_into(w.vector(), x, out);
    }
    Ok(WsFrame {
        u: SphereConfig::from_flat_unchecked(n, u),
    })
}

/// x_i(t) = b_{w(t)}(R(t) x_i(0)).
pub fn reconstruct(initial: &SphereConfig, rs: &ReducedState) -> Result<SphereConfig> {
    reconstruct_with(WsConvention::RESOLVED, initial, rs)
}

pub fn reconstruct_with(
    conv: WsConvention,
    initial: &SphereConfig,
    rs: &ReducedState,
) -> Result<SphereConfig> {
    let n = initial.dim();
    if rs.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rs.dim(),
        });
    }
    let mut out = vec![0.0; initial.as_flat().len()];
    reconstruct_into(conv, n, initial.as_flat(), rs.rotation.as_slice(), rs.boost.vector(), &mut out);
    let mut config = SphereConfig::from_flat_unchecked(n, out);
    config.renormalize();
    Ok(config)
}

/// Bodies for one flat reduced sample, renormalized. No ball check, so samples
/// recorded at the synchronization boundary still reconstruct.
pub(crate) fn reconstruct_flat(conv: WsConvention, n: usize, initial: &[f64], y: &[f64]) -> Vec<f64> {
    let (r, w) = y.split_at(n * n);
    let mut out = vec![0.0; initial.len()];
    reconstruct_into(conv, n, initial, r, w, &mut out);
    crate::model::normalize_blocks(&mut out, n);
    out
}

fn reconstruct_into(conv: WsConvention, n: usize, initial: &[f64], r: &[f64], w: &[f64], out: &mut [f64]) {
    let mut rotated = vec![0.0; n];
    for (x0, x) in initial.chunks_exact(n).zip(out.chunks_exact_mut(n)) {
        let u0 = conv.initial_frame(x0);
        mat_vec_into(n, r, &u0, &mut rotated);
        conv.inverse_into(w, &rotated, x);
    }
}

/// (Ṙ, ẇ) with X evaluated on the reconstructed configuration.
pub fn reduced_rhs_coupled(
    rs: &ReducedState,
    initial: &SphereConfig,
    spec: &ModelSpec,
    t: f64,
) -> Result<(Matrix, Vector)> {
    let n = spec.dim();
    let system = ReducedSystem::new(spec, initial)?;
    let y = rs.to_flat();
    let mut dy = vec![0.0; y.len()];
    system.rhs(t, &y, &mut dy)?;
    Ok((
        Matrix::from_row_major(n, dy[..n * n].to_vec())?,
        Vector::new(dy[n * n..].to_vec())?,
    ))
}

/// The reduced vector field on flat (R, w) states.
pub struct ReducedSystem<'a> {
    spec: &'a ModelSpec,
    initial: &'a SphereConfig,
    omega: Vec<f64>,
    convention: WsConvention,
}

impl<'a> ReducedSystem<'a> {
    pub fn new(spec: &'a ModelSpec, initial: &'a SphereConfig) -> Result<Self> {
        Self::with_convention(spec, initial, WsConvention::RESOLVED)
    }

    pub fn with_convention(
        spec: &'a ModelSpec,
        initial: &'a SphereConfig,
        convention: WsConvention,
    ) -> Result<Self> {
        if initial.dim() != spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                found: initial.dim(),
            });
        }
        Ok(ReducedSystem {
            spec,
            initial,
            omega: spec.omega.to_matrix().as_slice().to_vec(),
            convention,
        })
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }
}

impl OdeSystem for ReducedSystem<'_> {
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let n = self.dim();
        let mut x = vec![0.0; n];
        match &self.spec.coupling {
            CouplingSpec::Constant(c) => x.copy_from_slice(c),
            coupling => {
                let (r, w) = y.split_at(n * n);
                let mut bodies = vec![0.0; self.initial.as_flat().len()];
                reconstruct_into(self.convention, n, self.initial.as_flat(), r, w, &mut bodies);
                coupling_field_into(coupling, n, &bodies, t, &mut x)?;
            }
        }
        reduced_rhs_into(n, &self.omega, &x, y, dy);
        Ok(())
    }
}

/// The classical reduced state (ζ, w) ∈ S¹ × D².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalReducedState {
    pub zeta: Complex64,
    pub w: Complex64,
}

impl ClassicalReducedState {
    pub fn new(zeta: Complex64, w: Complex64) -> Result<Self> {
        if ((zeta.norm() - 1.0).abs() >= 1e-10) || !(w.norm() < 1.0) {
            return Err(Error::BoostOutsideBall { norm: w.norm() });
        }
        Ok(ClassicalReducedState { zeta, w })
    }

    /// The parameters of the identity map under `conv`.
    pub fn identity(conv: DiscConvention) -> Self {
        let zeta = match conv {
            DiscConvention::WMinusZ => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(1.0, 0.0),
        };
        ClassicalReducedState {
            zeta,
            w: Complex64::new(0.0, 0.0),
        }
    }

    /// Flat layout: [Re w, Im w, Re ζ, Im ζ].
    pub fn to_flat(&self) -> [f64; 4] {
        [self.w.re, self.w.im, self.zeta.re, self.zeta.im]
    }

    pub fn from_flat(flat: &[f64]) -> Self {
        ClassicalReducedState {
            w: Complex64::new(flat[0], flat[1]),
            zeta: Complex64::new(flat[2], flat[3]),
        }
    }
}

/// Integrator settings for classical reduced states.
pub fn classical_reduced_integrator(method: Method) -> IntegratorSpec {
    IntegratorSpec::new(method)
        .with(0, Projection::BallCheck { n: 2 })
        .with(2, Projection::NormalizeSphere { dim: 2, count: 1 })
}

/// Sign conventions for the disc map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscConvention {
    /// ζ (z − w) / (1 − w̄ z). Selected by the convention-resolution test.
    ZMinusW,
    /// ζ (w − z) / (1 − w̄ z).
    WMinusZ,
    /// ζ (z + w) / (1 + w̄ z).
    ZPlusW,
}

impl DiscConvention {
    pub const RESOLVED: DiscConvention = DiscConvention::ZMinusW;
    pub const ALL: [DiscConvention; 3] = [
        DiscConvention::ZMinusW,
        DiscConvention::WMinusZ,
        DiscConvention::ZPlusW,
    ];

    pub fn apply(self, s: &ClassicalReducedState, z: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        match self {
            DiscConvention::ZMinusW => s.zeta * (z - s.w) / (one - s.w.conj() * z),
            DiscConvention::WMinusZ => s.zeta * (s.w - z) / (one - s.w.conj() * z),
            DiscConvention::ZPlusW => s.zeta * (z + s.w) / (one + s.w.conj() * z),
        }
    }
}

/// (ẇ, ζ̇) with a = −C + iB:
///
/// ```text
/// ẇ = −½ (1 − |w|²) ζ̄ a
/// ζ̇ = i A ζ − ½ (w̄ a − w ā ζ²)
/// ```
pub fn classical_reduced_velocity(
    s: &ClassicalReducedState,
    coeffs: &ClassicalCoefficients,
) -> (Complex64, Complex64) {
    let a = coeffs.forcing();
    let (w, zeta) = (s.w, s.zeta);
    let w_dot = -0.5 * (1.0 - w.norm_sqr()) * zeta.conj() * a;
    let zeta_dot = Complex64::i() * coeffs.a * zeta - 0.5 * (w.conj() * a - w * a.conj() * zeta * zeta);
    (w_dot, zeta_dot)
}

/// θ_j = arg M_{ζ,w}(e^{iθ_j(0)}).
pub fn classical_reconstruct(initial_thetas: &[f64], s: &ClassicalReducedState) -> Vec<f64> {
    classical_reconstruct_with(DiscConvention::RESOLVED, initial_thetas, s)
}

pub fn classical_reconstruct_with(
    conv: DiscConvention,
    initial_thetas: &[f64],
    s: &ClassicalReducedState,
) -> Vec<f64> {
    initial_thetas
        .iter()
        .map(|&t| conv.apply(s, Complex64::from_polar(1.0, t)).arg())
        .collect()
}

/// Source of the classical coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassicalDrive {
    /// θ̇_j = ω + (K/N) Σ sin(θ_i − θ_j).
    SinCoupling { omega: f64, k: f64 },
    /// (A, B, C) given as a time table, linearly interpolated.
    Table(ExternalSeries),
}

impl ClassicalDrive {
    pub fn constant(coeffs: ClassicalCoefficients, t_span: (f64, f64)) -> Result<Self> {
        let v = Vector::new(vec![coeffs.a, coeffs.b, coeffs.c])?;
        Ok(ClassicalDrive::Table(ExternalSeries::new(
            vec![t_span.0, t_span.1],
            vec![v.clone(), v],
        )?))
    }

    pub fn coefficients(&self, thetas: &[f64], t: f64) -> Result<ClassicalCoefficients> {
        match self {
            ClassicalDrive::SinCoupling { omega, k } => {
                Ok(classical_coeffs_sin_coupling(thetas, *omega, *k))
            }
            ClassicalDrive::Table(series) => {
                let v = series.at(t)?;
                Ok(ClassicalCoefficients::new(v[0], v[1], v[2]))
            }
        }
    }

    fn depends_on_state(&self) -> bool {
        matches!(self, ClassicalDrive::SinCoupling { .. })
    }
}

/// θ̇_j = A + B cos θ_j + C sin θ_j on flat angle states.
pub struct ClassicalFullSystem<'a> {
    pub drive: &'a ClassicalDrive,
}

impl OdeSystem for ClassicalFullSystem<'_> {
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let c = self.drive.coefficients(y, t)?;
        for (d, &theta) in dy.iter_mut().zip(y) {
            *d = c.rate(theta);
        }
        Ok(())
    }
}

/// The (ζ, w) system on flat states [Re w, Im w, Re ζ, Im ζ].
pub struct ClassicalReducedSystem<'a> {
    pub drive: &'a ClassicalDrive,
    pub initial_thetas: &'a [f64],
    pub convention: DiscConvention,
}

impl OdeSystem for ClassicalReducedSystem<'_> {
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let s = ClassicalReducedState::from_flat(y);
        let thetas = if self.drive.depends_on_state() {
            classical_reconstruct_with(self.convention, self.initial_thetas, &s)
        } else {
            Vec::new()
        };
        let c = self.drive.coefficients(&thetas, t)?;
        let (w_dot, zeta_dot) = classical_reduced_velocity(&s, &c);
        dy.copy_from_slice(&[w_dot.re, w_dot.im, zeta_dot.re, zeta_dot.im]);
        Ok(())
    }
}
