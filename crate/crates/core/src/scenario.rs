//! End-to-end runs: full and reduced integration of one model on a shared
//! sampling grid, plus seeded scenario builders.

use crate::error::{Error, Result};
use crate::integrate::{integrate, IntegratorSpec, Method, Projection, Trajectory};
use crate::model::{CouplingSpec, KuramotoSystem, ModelSpec, SphereConfig};
use crate::numlin::Vector;
use crate::reduction::{
    classical_reconstruct_with, classical_reduced_integrator, reconstruct_flat, reduced_integrator,
    ClassicalDrive, ClassicalFullSystem, ClassicalReducedState, ClassicalReducedSystem,
    DiscConvention, ReducedState, ReducedSystem, WsConvention,
};
use crate::sampling::{random_angles, random_antisym, random_sphere_config, random_unit_vector, stream_rng, Stream};

/// A generalized model, its initial configuration and run settings.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub model: ModelSpec,
    pub initial: SphereConfig,
    pub t_end: f64,
    pub sample_every: f64,
    pub method: Method,
    pub convention: WsConvention,
}

impl Scenario {
    pub fn new(model: ModelSpec, initial: SphereConfig, t_end: f64) -> Result<Self> {
        if model.dim() != initial.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                found: initial.dim(),
            });
        }
        Ok(Scenario {
            model,
            initial,
            t_end,
            sample_every: (t_end / 100.0).max(1e-3),
            method: Method::default(),
            convention: WsConvention::RESOLVED,
        })
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_sampling(mut self, sample_every: f64) -> Self {
        self.sample_every = sample_every;
        self
    }

    pub fn with_convention(mut self, convention: WsConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn full_integrator(&self) -> IntegratorSpec {
        IntegratorSpec::new(self.method).with(
            0,
            Projection::NormalizeSphere {
                dim: self.dim(),
                count: self.initial.len(),
            },
        )
    }

    /// Integrates all N bodies; samples are flat body-major configurations.
    pub fn run_full(&self) -> Result<Trajectory> {
        integrate(
            &KuramotoSystem::new(&self.model),
            self.initial.as_flat(),
            (0.0, self.t_end),
            &self.full_integrator(),
            self.sample_every,
        )
    }

    /// Integrates (R, w) from the identity; samples are flat `[R row-major, w]`.
    pub fn run_reduced(&self) -> Result<Trajectory> {
        let system = ReducedSystem::with_convention(&self.model, &self.initial, self.convention)?;
        integrate(
            &system,
            &ReducedState::identity(self.dim()).to_flat(),
            (0.0, self.t_end),
            &reduced_integrator(self.method, self.dim()),
            self.sample_every,
        )
    }

    /// Maps every reduced sample back to body positions.
    pub fn reconstruct(&self, reduced: &Trajectory) -> Result<Trajectory> {
        let n = self.dim();
        let flat_len = ReducedState::flat_len(n);
        if let Some(bad) = reduced.samples.iter().find(|s| s.len() != flat_len) {
            return Err(Error::ShapeMismatch(format!(
                "reduced sample of length {}, expected {flat_len}",
                bad.len()
            )));
        }
        reduced.map_samples(|_, y| Ok(reconstruct_flat(self.convention, n, self.initial.as_flat(), y)))
    }
}

/// Seeded generalized scenario: Ω with N(0, σ²) entries, uniform bodies and
/// the given coupling. Each ingredient draws from its own stream.
pub fn seeded_scenario(
    seed: u64,
    dim: usize,
    bodies: usize,
    omega_scale: f64,
    coupling: CouplingSpec,
    t_end: f64,
) -> Result<Scenario> {
    let omega = random_antisym(&mut stream_rng(seed, Stream::Omega), dim, omega_scale)?;
    let initial = random_sphere_config(&mut stream_rng(seed, Stream::Bodies), dim, bodies)?;
    Scenario::new(ModelSpec::new(omega, coupling)?, initial, t_end)
}

/// A constant coupling field of the given magnitude in a seeded direction.
pub fn seeded_constant_field(seed: u64, dim: usize, magnitude: f64) -> Vector {
    random_unit_vector(&mut stream_rng(seed, Stream::Coupling), dim).scaled(magnitude)
}

/// A classical S¹ model with angle states.
#[derive(Debug, Clone)]
pub struct ClassicalScenario {
    pub drive: ClassicalDrive,
    pub initial_thetas: Vec<f64>,
    pub t_end: f64,
    pub sample_every: f64,
    pub method: Method,
    pub convention: DiscConvention,
}

impl ClassicalScenario {
    pub fn new(drive: ClassicalDrive, initial_thetas: Vec<f64>, t_end: f64) -> Result<Self> {
        if initial_thetas.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidVector);
        }
        Ok(ClassicalScenario {
            drive,
            initial_thetas,
            t_end,
            sample_every: (t_end / 100.0).max(1e-3),
            method: Method::default(),
            convention: DiscConvention::RESOLVED,
        })
    }

    /// Sin coupling with ω and K and seeded uniform initial phases.
    pub fn seeded_sin_coupling(seed: u64, bodies: usize, omega: f64, k: f64, t_end: f64) -> Result<Self> {
        let thetas = random_angles(&mut stream_rng(seed, Stream::Bodies), bodies);
        Self::new(ClassicalDrive::SinCoupling { omega, k }, thetas, t_end)
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_sampling(mut self, sample_every: f64) -> Self {
        self.sample_every = sample_every;
        self
    }

    pub fn with_convention(mut self, convention: DiscConvention) -> Self {
        self.convention = convention;
        self
    }

    /// Integrates θ_j directly; angles are not wrapped.
    pub fn run_full(&self) -> Result<Trajectory> {
        integrate(
            &ClassicalFullSystem { drive: &self.drive },
            &self.initial_thetas,
            (0.0, self.t_end),
            &IntegratorSpec::new(self.method),
            self.sample_every,
        )
    }

    /// Integrates (w, ζ); samples are `[Re w, Im w, Re ζ, Im ζ]`.
    pub fn run_reduced(&self) -> Result<Trajectory> {
        let system = ClassicalReducedSystem {
            drive: &self.drive,
            initial_thetas: &self.initial_thetas,
            convention: self.convention,
        };
        integrate(
            &system,
            &ClassicalReducedState::identity(self.convention).to_flat(),
            (0.0, self.t_end),
            &classical_reduced_integrator(self.method),
            self.sample_every,
        )
    }

    /// Angles in (−π, π] for every reduced sample.
    pub fn reconstruct(&self, reduced: &Trajectory) -> Result<Trajectory> {
        reduced.map_samples(|_, y| {
            if y.len() != 4 {
                return Err(Error::ShapeMismatch("classical reduced samples have 4 entries".into()));
            }
            Ok(classical_reconstruct_with(
                self.convention,
                &self.initial_thetas,
                &ClassicalReducedState::from_flat(y),
            ))
        })
    }
}
