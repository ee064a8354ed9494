//! Vector fields of the unreduced dynamics.
//!
//! The generalized model moves N unit vectors by
//! `ẋ_i = Ω x_i + X − ⟨x_i, X⟩ x_i` with a shared antisymmetric Ω and a shared
//! coupling field X. The classical circle model is `θ̇_j = A + B cos θ_j + C sin θ_j`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::OdeSystem;
use crate::numlin::{dot, norm, Antisym, Vector};

/// Bodies further than this from the unit sphere are rejected.
pub const SPHERE_TOLERANCE: f64 = 1e-9;

/// N points on the unit sphere S^{n−1} ⊂ Rⁿ, stored body-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereConfig {
    dim: usize,
    data: Vec<f64>,
}

impl SphereConfig {
    pub fn new(bodies: &[Vector]) -> Result<Self> {
        let Some(first) = bodies.first() else {
            return Err(Error::TooFewBodies {
                needed: 1,
                found: 0,
            });
        };
        let dim = first.dim();
        let mut data = Vec::with_capacity(dim * bodies.len());
        for b in bodies {
            if b.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: b.dim(),
                });
            }
            data.extend_from_slice(b);
        }
        Self::from_flat(dim, data)
    }

    /// Wrap body-major data, checking that every body is unit length.
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidVector);
        }
        if data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: data.len(),
            });
        }
        for (index, body) in data.chunks_exact(dim).enumerate() {
            let r = norm(body);
            if !((r - 1.0).abs() <= SPHERE_TOLERANCE) {
                return Err(Error::NotOnSphere { index, norm: r });
            }
        }
        Ok(SphereConfig { dim, data })
    }

    /// Wrap data that the caller guarantees to be unit length up to drift.
    pub(crate) fn from_flat_unchecked(dim: usize, data: Vec<f64>) -> Self {
        SphereConfig { dim, data }
    }

    /// Embed angles on S¹ as (cos θ, sin θ).
    pub fn from_angles(thetas: &[f64]) -> Result<Self> {
        let data = thetas.iter().flat_map(|t| [t.cos(), t.sin()]).collect();
        Self::from_flat(2, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn body(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn bodies(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    /// Rescale every body back to unit length.
    pub fn renormalize(&mut self) {
        normalize_blocks(&mut self.data, self.dim);
    }

    pub fn angles(&self) -> Vec<f64> {
        self.bodies().map(|b| b[1].atan2(b[0])).collect()
    }
}

pub(crate) fn normalize_blocks(data: &mut [f64], dim: usize) {
    for body in data.chunks_exact_mut(dim) {
        let r = norm(body);
        body.iter_mut().for_each(|v| *v /= r);
    }
}

/// Time-indexed table of field values with linear interpolation and no
/// extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalSeries {
    times: Vec<f64>,
    values: Vec<Vector>,
}

impl ExternalSeries {
    pub fn new(times: Vec<f64>, values: Vec<Vector>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::InvalidSeries(format!(
                "{} timestamps for {} samples",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidSeries(
                "timestamps must be finite and strictly increasing".into(),
            ));
        }
        let dim = values[0].dim();
        if values.iter().any(|v| v.dim() != dim) {
            return Err(Error::InvalidSeries("samples differ in dimension".into()));
        }
        Ok(ExternalSeries { times, values })
    }

    pub fn dim(&self) -> usize {
        self.values[0].dim()
    }

    pub fn span(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }

    pub fn at(&self, t: f64) -> Result<Vector> {
        let (start, end) = self.span();
        if !(t >= start && t <= end) {
            return Err(Error::OutOfRange { t, start, end });
        }
        let hi = self.times.partition_point(|&s| s < t).max(1).min(self.times.len() - 1);
        if self.times.len() == 1 {
            return Ok(self.values[0].clone());
        }
        let lo = hi - 1;
        let (t0, t1) = (self.times[lo], self.times[hi]);
        let frac = (t - t0) / (t1 - t0);
        let (a, b) = (&self.values[lo], &self.values[hi]);
        Ok(Vector::from_raw(
            a.iter().zip(b.iter()).map(|(x, y)| x + frac * (y - x)).collect(),
        ))
    }
}

/// How the shared coupling field X is produced.
#[derive(Debug, Clone, PartialEq)]
pub enum CouplingSpec {
    Constant(Vector),
    /// X = (K/N) Σ x_j.
    MeanField(f64),
    External(ExternalSeries),
}

impl CouplingSpec {
    /// True when X does not depend on the body positions.
    pub fn is_state_independent(&self) -> bool {
        !matches!(self, CouplingSpec::MeanField(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub omega: Antisym,
    pub coupling: CouplingSpec,
}

impl ModelSpec {
    pub fn new(omega: Antisym, coupling: CouplingSpec) -> Result<Self> {
        let n = omega.dim();
        let coupling_dim = match &coupling {
            CouplingSpec::Constant(x) => Some(x.dim()),
            CouplingSpec::External(s) => Some(s.dim()),
            CouplingSpec::MeanField(k) => {
                if !k.is_finite() {
                    return Err(Error::InvalidSeries("coupling strength must be finite".into()));
                }
                None
            }
        };
        if let Some(found) = coupling_dim.filter(|&d| d != n) {
            return Err(Error::DimensionMismatch { expected: n, found });
        }
        Ok(ModelSpec { omega, coupling })
    }

    pub fn dim(&self) -> usize {
        self.omega.dim()
    }
}

/// The coupling field X(t) for the given state.
pub fn coupling_field(spec: &CouplingSpec, state: &SphereConfig, t: f64) -> Result<Vector> {
    let mut out = vec![0.0; state.dim()];
    coupling_field_into(spec, state.dim(), state.as_flat(), t, &mut out)?;
    Ok(Vector::from_raw(out))
}

pub(crate) fn coupling_field_into(
    spec: &CouplingSpec,
    dim: usize,
    bodies: &[f64],
    t: f64,
    out: &mut [f64],
) -> Result<()> {
    match spec {
        CouplingSpec::Constant(x) => out.copy_from_slice(x),
        CouplingSpec::MeanField(k) => {
            out.iter_mut().for_each(|v| *v = 0.0);
            // Fixed left-to-right order keeps the sum reproducible.
            for body in bodies.chunks_exact(dim) {
                for (o, b) in out.iter_mut().zip(body) {
                    *o += b;
                }
            }
            let scale = k / (bodies.len() / dim) as f64;
            out.iter_mut().for_each(|v| *v *= scale);
        }
        CouplingSpec::External(series) => out.copy_from_slice(&series.at(t)?),
    }
    Ok(())
}

/// Per-body velocities Ω x_i + X − ⟨x_i, X⟩ x_i.
pub fn kuramoto_rhs(state: &SphereConfig, omega: &Antisym, x: &[f64]) -> Result<Vec<Vector>> {
    let n = state.dim();
    for found in [omega.dim(), x.len()] {
        if found != n {
            return Err(Error::DimensionMismatch { expected: n, found });
        }
    }
    let mut out = vec![0.0; state.as_flat().len()];
    kuramoto_rhs_into(n, omega.to_matrix().as_slice(), x, state.as_flat(), &mut out);
    Ok(out.chunks_exact(n).map(|c| Vector::from_raw(c.to_vec())).collect())
}

/// Flat kernel: `omega` is the dense row-major generator.
#[inline]
pub(crate) fn kuramoto_rhs_into(n: usize, omega: &[f64], x: &[f64], bodies: &[f64], out: &mut [f64]) {
    for (body, vel) in bodies.chunks_exact(n).zip(out.chunks_exact_mut(n)) {
        let proj = dot(body, x);
        for i in 0..n {
            vel[i] = dot(&omega[i * n..(i + 1) * n], body) + x[i] - proj * body[i];
        }
    }
}

/// The generalized vector field on flat body-major states.
pub struct KuramotoSystem<'a> {
    spec: &'a ModelSpec,
    omega: Vec<f64>,
}

impl<'a> KuramotoSystem<'a> {
    pub fn new(spec: &'a ModelSpec) -> Self {
        KuramotoSystem {
            spec,
            omega: spec.omega.to_matrix().as_slice().to_vec(),
        }
    }
}

impl OdeSystem for KuramotoSystem<'_> {
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let n = self.spec.dim();
        let mut x = vec![0.0; n];
        coupling_field_into(&self.spec.coupling, n, y, t, &mut x)?;
        kuramoto_rhs_into(n, &self.omega, &x, y, dy);
        Ok(())
    }
}

/// Coefficients of θ̇ = A + B cos θ + C sin θ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ClassicalCoefficients {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        ClassicalCoefficients { a, b, c }
    }

    /// The complex forcing −C + iB that drives the reduced equations.
    pub fn forcing(&self) -> Complex64 {
        Complex64::new(-self.c, self.b)
    }

    pub fn rate(&self, theta: f64) -> f64 {
        self.a + self.b * theta.cos() + self.c * theta.sin()
    }
}

pub fn classical_rhs(thetas: &[f64], coeffs: &ClassicalCoefficients) -> Vec<f64> {
    thetas.iter().map(|&t| coeffs.rate(t)).collect()
}

/// Rewrites θ̇_j = ω + (K/N) Σ_i sin(θ_i − θ_j) in coefficient form:
/// A = ω, B = (K/N) Σ sin θ_i, C = −(K/N) Σ cos θ_i.
pub fn classical_coeffs_sin_coupling(thetas: &[f64], omega: f64, k: f64) -> ClassicalCoefficients {
    let scale = k / thetas.len() as f64;
    let (sin_sum, cos_sum) = thetas
        .iter()
        .fold((0.0, 0.0), |(s, c), t| (s + t.sin(), c + t.cos()));
    ClassicalCoefficients::new(omega, scale * sin_sum, -scale * cos_sum)
}

/// |(1/N) Σ x_i|.
pub fn order_parameter(state: &SphereConfig) -> f64 {
    let n = state.dim();
    let mut centroid = vec![0.0; n];
    for body in state.bodies() {
        centroid.iter_mut().zip(body).for_each(|(c, b)| *c += b);
    }
    norm(&centroid) / state.len() as f64
}
