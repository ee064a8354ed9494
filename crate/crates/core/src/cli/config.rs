//! JSON scenario configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::DEFAULT_QUAD_BUDGET;
use crate::integrate::Method;
use crate::model::{CouplingSpec, ExternalSeries, ModelSpec, SphereConfig, SPHERE_TOLERANCE};
use crate::numlin::{Antisym, Vector};
use crate::reduction::{ClassicalDrive, DiscConvention, WsConvention};
use crate::sampling::{random_angles, random_antisym, random_sphere_config, stream_rng, Stream};
use crate::scenario::{seeded_constant_field, ClassicalScenario, Scenario};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub ambient_dim: usize,
    pub body_count: usize,
    pub t_end: f64,
    pub sample_every: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub integrator: Method,
    pub omega: OmegaConfig,
    pub coupling: CouplingConfig,
    #[serde(default)]
    pub initial_bodies: BodiesConfig,
    #[serde(default = "default_quad_budget")]
    pub quad_budget: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bench: Option<BenchConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classical: Option<ClassicalConfig>,
    /// Test hook: override the resolved transform convention.
    #[serde(default = "default_ws_convention")]
    pub ws_convention: WsConvention,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

fn default_quad_budget() -> usize {
    DEFAULT_QUAD_BUDGET
}

fn default_ws_convention() -> WsConvention {
    WsConvention::RESOLVED
}

fn default_disc_convention() -> DiscConvention {
    DiscConvention::RESOLVED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OmegaConfig {
    /// Upper entries drawn N(0, scale²) from the Ω stream.
    Random { scale: f64 },
    /// Strict upper triangle, row by row.
    Upper(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingConfig {
    Constant(Vec<f64>),
    /// Constant field of this magnitude in a seeded direction.
    RandomConstant { magnitude: f64 },
    MeanField(f64),
    /// CSV with header `t,c0,...`, linearly interpolated.
    External(PathBuf),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BodiesConfig {
    #[default]
    Random,
    Explicit(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub position: f64,
    pub cross_ratio: f64,
    pub inner_product: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            position: 1e-5,
            cross_ratio: 1e-6,
            inner_product: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub body_counts: Vec<usize>,
    pub steps: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
}

fn default_repeats() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalConfig {
    pub drive: ClassicalDriveConfig,
    /// Position tolerance on the circle metric.
    #[serde(default = "default_circle_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_disc_convention")]
    pub disc_convention: DiscConvention,
}

fn default_circle_tolerance() -> f64 {
    1e-5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassicalDriveConfig {
    /// θ̇_j = ω + (K/N) Σ sin(θ_i − θ_j).
    SinCoupling { omega: f64, k: f64 },
    /// Fixed coefficients A, B, C.
    Constant { a: f64, b: f64, c: f64 },
    /// CSV with header `t,a,b,c`.
    Table(PathBuf),
}

/// A config that failed to parse or validate.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| bad(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads the file and resolves relative data paths against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let CouplingConfig::External(p) = &mut cfg.coupling {
            resolve(p);
        }
        if let Some(ClassicalConfig {
            drive: ClassicalDriveConfig::Table(p),
            ..
        }) = &mut cfg.classical
        {
            resolve(p);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(bad(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.ambient_dim < 2 {
            return Err(bad("ambient_dim must be at least 2"));
        }
        if self.body_count < 1 {
            return Err(bad("body_count must be at least 1"));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(bad("t_end must be positive"));
        }
        if !(self.sample_every > 0.0 && self.sample_every.is_finite()) {
            return Err(bad("sample_every must be positive"));
        }
        if let BodiesConfig::Explicit(bodies) = &self.initial_bodies {
            if bodies.len() != self.body_count {
                return Err(bad(format!(
                    "{} explicit bodies for body_count {}",
                    bodies.len(),
                    self.body_count
                )));
            }
            for (i, b) in bodies.iter().enumerate() {
                if b.len() != self.ambient_dim {
                    return Err(bad(format!("body {i} has dimension {}", b.len())));
                }
                let r = crate::numlin::norm(b);
                if (r - 1.0).abs() > SPHERE_TOLERANCE {
                    return Err(bad(format!("body {i} has norm {r}, expected 1")));
                }
            }
        }
        if let Some(bench) = &self.bench {
            if bench.body_counts.is_empty() || bench.steps == 0 || bench.repeats == 0 {
                return Err(bad("bench needs body_counts, steps > 0 and repeats > 0"));
            }
        }
        crate::integrate::IntegratorSpec::new(self.integrator)
            .validate(1)
            .map_err(|e| bad(format!("integrator: {e}")))?;
        Ok(())
    }

    pub fn omega(&self) -> Result<Antisym, ConfigError> {
        let n = self.ambient_dim;
        match &self.omega {
            OmegaConfig::Random { scale } => random_antisym(&mut stream_rng(self.seed, Stream::Omega), n, *scale),
            OmegaConfig::Upper(upper) => Antisym::from_upper(n, upper.clone()),
        }
        .map_err(|e| bad(format!("omega: {e}")))
    }

    pub fn coupling(&self) -> Result<CouplingSpec, ConfigError> {
        let n = self.ambient_dim;
        Ok(match &self.coupling {
            CouplingConfig::Constant(x) => CouplingSpec::Constant(
                Vector::new(x.clone()).map_err(|e| bad(format!("coupling: {e}")))?,
            ),
            CouplingConfig::RandomConstant { magnitude } => {
                CouplingSpec::Constant(seeded_constant_field(self.seed, n, *magnitude))
            }
            CouplingConfig::MeanField(k) => CouplingSpec::MeanField(*k),
            CouplingConfig::External(path) => CouplingSpec::External(read_series(path, n)?),
        })
    }

    pub fn initial_config(&self) -> Result<SphereConfig, ConfigError> {
        match &self.initial_bodies {
            BodiesConfig::Random => random_sphere_config(
                &mut stream_rng(self.seed, Stream::Bodies),
                self.ambient_dim,
                self.body_count,
            ),
            BodiesConfig::Explicit(bodies) => {
                let vs = bodies
                    .iter()
                    .map(|b| Vector::new(b.clone()))
                    .collect::<crate::Result<Vec<_>>>()
                    .map_err(|e| bad(format!("initial_bodies: {e}")))?;
                SphereConfig::new(&vs)
            }
        }
        .map_err(|e| bad(format!("initial_bodies: {e}")))
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        let model = ModelSpec::new(self.omega()?, self.coupling()?).map_err(|e| bad(format!("model: {e}")))?;
        Ok(Scenario::new(model, self.initial_config()?, self.t_end)
            .map_err(|e| bad(e.to_string()))?
            .with_method(self.integrator)
            .with_sampling(self.sample_every)
            .with_convention(self.ws_convention))
    }

    /// The S¹ scenario; initial angles come from explicit planar bodies or the
    /// bodies stream.
    pub fn classical_scenario(&self) -> Result<(ClassicalScenario, &ClassicalConfig), ConfigError> {
        let cc = self
            .classical
            .as_ref()
            .ok_or_else(|| bad("the classical command needs a `classical` section"))?;
        let thetas = match &self.initial_bodies {
            BodiesConfig::Random => random_angles(&mut stream_rng(self.seed, Stream::Bodies), self.body_count),
            BodiesConfig::Explicit(_) => {
                if self.ambient_dim != 2 {
                    return Err(bad("explicit classical bodies must be planar"));
                }
                self.initial_config()?.angles()
            }
        };
        let drive = match &cc.drive {
            ClassicalDriveConfig::SinCoupling { omega, k } => ClassicalDrive::SinCoupling { omega: *omega, k: *k },
            ClassicalDriveConfig::Constant { a, b, c } => ClassicalDrive::constant(
                crate::model::ClassicalCoefficients::new(*a, *b, *c),
                (0.0, self.t_end),
            )
            .map_err(|e| bad(e.to_string()))?,
            ClassicalDriveConfig::Table(path) => ClassicalDrive::Table(read_series(path, 3)?),
        };
        let sc = ClassicalScenario::new(drive, thetas, self.t_end)
            .map_err(|e| bad(e.to_string()))?
            .with_method(self.integrator)
            .with_sampling(self.sample_every)
            .with_convention(cc.disc_convention);
        Ok((sc, cc))
    }
}

/// Reads `t,v0,...,v{dim-1}` rows after a header line.
pub fn read_series(path: &Path, dim: usize) -> Result<ExternalSeries, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (line_no, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("{}:{}: {e}", path.display(), line_no + 1)))?;
        if fields.len() != dim + 1 {
            return Err(bad(format!(
                "{}:{}: expected {} columns, found {}",
                path.display(),
                line_no + 1,
                dim + 1,
                fields.len()
            )));
        }
        times.push(fields[0]);
        values.push(Vector::new(fields[1..].to_vec()).map_err(|e| bad(e.to_string()))?);
    }
    ExternalSeries::new(times, values).map_err(|e| bad(format!("{}: {e}", path.display())))
}
