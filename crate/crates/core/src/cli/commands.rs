//! The five subcommands. Each writes its files into `out_dir` and fills the
//! manifest; the dispatcher writes the manifest whatever the outcome.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::{CouplingConfig, ScenarioConfig};
use super::output::{write_json_atomic, write_jsonl, write_state_csv, write_trajectory_csv};
use super::CliError;
use crate::diagnostics::{
    circle_distance, norm_drift, orthogonality_drift, quad_sampler, track_cross_ratios, track_ws_inner_products,
};
use crate::error::Error;
use crate::integrate::{Event, Method, Trajectory};
use crate::model::{order_parameter, SphereConfig};
use crate::numlin::{norm, orthogonality_defect, distance};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub status: String,
    pub ws_convention: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disc_convention: Option<String>,
    pub config: Option<ScenarioConfig>,
    pub events: Vec<Event>,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    /// Wall-clock seconds per phase; the only nondeterministic field.
    pub timings: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str, config: Option<&ScenarioConfig>) -> Self {
        let config = config.cloned().map(|mut c| {
            c.out_dir = None;
            c
        });
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            status: "running".into(),
            ws_convention: config
                .as_ref()
                .map_or(crate::reduction::WsConvention::RESOLVED, |c| c.ws_convention)
                .id(),
            disc_convention: config
                .as_ref()
                .and_then(|c| c.classical.as_ref())
                .map(|c| format!("{:?}", c.disc_convention)),
            config,
            events: vec![],
            outputs: vec![],
            message: None,
            timings: BTreeMap::new(),
        }
    }
}

/// Per-command state: output directory, manifest under construction.
pub struct RunContext {
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
}

impl RunContext {
    fn path(&mut self, name: &str) -> PathBuf {
        self.manifest.outputs.push(name.to_string());
        self.out_dir.join(name)
    }

    fn timed<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.manifest.timings.insert(phase.to_string(), start.elapsed().as_secs_f64());
        out
    }

    fn write_trajectory(&mut self, name: &str, traj: &Trajectory, dim: usize) -> Result<(), CliError> {
        let path = self.path(name);
        write_trajectory_csv(&path, traj, dim)?;
        Ok(())
    }

    pub fn write_manifest(&self) -> std::io::Result<()> {
        write_json_atomic(&self.out_dir.join("manifest.json"), &self.manifest)
    }
}

/// On a blow-up, keep what was integrated so it can be written out.
fn split_partial(result: crate::Result<Trajectory>) -> (Trajectory, Option<Error>) {
    match result {
        Ok(t) => (t, None),
        Err(Error::NonFiniteState { t, partial }) => {
            let partial = *partial;
            (partial, Some(Error::NonFiniteState { t, partial: Box::default() }))
        }
        Err(e) => (Trajectory::default(), Some(e)),
    }
}

fn fail_numerical(ctx: &mut RunContext, err: Error) -> CliError {
    ctx.manifest.message = Some(err.to_string());
    CliError::Numerical(err)
}

#[derive(Serialize)]
struct SimulateRecord {
    t: f64,
    order_parameter: f64,
    norm_drift: f64,
    cross_ratio_drift: Option<f64>,
}

pub fn cmd_simulate(cfg: &ScenarioConfig, ctx: &mut RunContext) -> Result<(), CliError> {
    let sc = cfg.scenario()?;
    let n = sc.dim();
    let (traj, failure) = split_partial(ctx.timed("integrate_full", || sc.run_full()));
    ctx.manifest.events = traj.events.clone();
    ctx.write_trajectory("trajectory.csv", &traj, n)?;

    let cross = if sc.initial.len() >= 4 && !traj.is_empty() {
        let quads = quad_sampler(sc.initial.len(), cfg.quad_budget, cfg.seed)?;
        Some(ctx.timed("diagnostics", || track_cross_ratios(&traj, n, &quads))?)
    } else {
        None
    };
    let records: Vec<SimulateRecord> = (0..traj.len())
        .map(|k| {
            let config = SphereConfig::from_flat_unchecked(n, traj.samples[k].clone());
            SimulateRecord {
                t: traj.times[k],
                order_parameter: order_parameter(&config),
                norm_drift: config.bodies().fold(0.0, |m, x| m.max((norm(x) - 1.0).abs())),
                cross_ratio_drift: cross.as_ref().map(|c| c.values[k]),
            }
        })
        .collect();
    let path = ctx.path("diagnostics.jsonl");
    write_jsonl(&path, &records)?;
    match failure {
        Some(e) => Err(fail_numerical(ctx, e)),
        None => Ok(()),
    }
}

fn reduced_columns(n: usize) -> Vec<String> {
    let mut cols: Vec<String> = (0..n * n).map(|k| format!("r{}{}", k / n, k % n)).collect();
    cols.extend((0..n).map(|k| format!("w{k}")));
    cols
}

#[derive(Serialize)]
struct ReduceRecord {
    t: f64,
    orthogonality_defect: f64,
    boost_norm: f64,
    order_parameter: f64,
}

pub fn cmd_reduce(cfg: &ScenarioConfig, ctx: &mut RunContext) -> Result<(), CliError> {
    let sc = cfg.scenario()?;
    let n = sc.dim();
    let (reduced, failure) = split_partial(ctx.timed("integrate_reduced", || sc.run_reduced()));
    ctx.manifest.events = reduced.events.clone();
    let path = ctx.path("reduced.csv");
    write_state_csv(&path, &reduced, &reduced_columns(n))?;
    let rec = ctx.timed("reconstruct", || sc.reconstruct(&reduced))?;
    ctx.write_trajectory("reconstructed.csv", &rec, n)?;
    let records: Vec<ReduceRecord> = (0..reduced.len())
        .map(|k| ReduceRecord {
            t: reduced.times[k],
            orthogonality_defect: orthogonality_defect(n, &reduced.samples[k][..n * n]),
            boost_norm: norm(&reduced.samples[k][n * n..]),
            order_parameter: order_parameter(&SphereConfig::from_flat_unchecked(n, rec.samples[k].clone())),
        })
        .collect();
    let path = ctx.path("diagnostics.jsonl");
    write_jsonl(&path, &records)?;
    match failure {
        Some(e) => Err(fail_numerical(ctx, e)),
        None => Ok(()),
    }
}

/// Summary written by `compare`.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub samples_compared: usize,
    pub position_error: f64,
    pub cross_ratio_drift: Option<f64>,
    pub inner_product_drift: f64,
    pub norm_drift: f64,
    pub orthogonality_drift: f64,
    pub tolerances: super::config::Tolerances,
    pub pass: bool,
}

#[derive(Serialize)]
struct CompareRecord {
    t: f64,
    position_error: f64,
    cross_ratio_drift: Option<f64>,
    inner_product_drift: f64,
}

fn truncate(traj: &Trajectory, len: usize) -> Trajectory {
    Trajectory {
        times: traj.times[..len].to_vec(),
        samples: traj.samples[..len].to_vec(),
        events: traj.events.clone(),
    }
}

/// Runs both pipelines on the shared grid. A reduced run that stops at the
/// synchronization boundary is compared on the samples it has.
pub fn compare(sc: &Scenario, cfg: &ScenarioConfig, ctx: &mut RunContext) -> Result<(ComparisonReport, Trajectory, Trajectory), CliError> {
    let n = sc.dim();
    let full = ctx.timed("integrate_full", || sc.run_full()).map_err(|e| fail_numerical(ctx, e))?;
    let reduced = ctx.timed("integrate_reduced", || sc.run_reduced()).map_err(|e| fail_numerical(ctx, e))?;
    ctx.manifest.events = reduced.events.clone();
    let len = full.len().min(reduced.len());
    let (full, reduced) = (truncate(&full, len), truncate(&reduced, len));
    let rec = sc.reconstruct(&reduced)?;

    let start = Instant::now();
    let position: Vec<f64> = full
        .samples
        .iter()
        .zip(&rec.samples)
        .map(|(a, b)| {
            a.chunks_exact(n)
                .zip(b.chunks_exact(n))
                .fold(0.0f64, |m, (x, y)| m.max(distance(x, y)))
        })
        .collect();
    let cross = if sc.initial.len() >= 4 {
        let quads = quad_sampler(sc.initial.len(), cfg.quad_budget, cfg.seed)?;
        Some(track_cross_ratios(&full, n, &quads)?)
    } else {
        None
    };
    let inner = track_ws_inner_products(&full, &reduced, n)?;
    ctx.manifest.timings.insert("diagnostics".into(), start.elapsed().as_secs_f64());

    let tol = cfg.tolerances;
    let position_error = position.iter().copied().fold(0.0, f64::max);
    let cross_ratio_drift = cross.as_ref().map(|c| c.max());
    let inner_product_drift = inner.max();
    let pass = position_error <= tol.position
        && cross_ratio_drift.is_none_or(|c| c <= tol.cross_ratio)
        && inner_product_drift <= tol.inner_product;
    let report = ComparisonReport {
        samples_compared: len,
        position_error,
        cross_ratio_drift,
        inner_product_drift,
        norm_drift: norm_drift(&full, n),
        orthogonality_drift: orthogonality_drift(&reduced, n),
        tolerances: tol,
        pass,
    };
    let records: Vec<CompareRecord> = (0..len)
        .map(|k| CompareRecord {
            t: full.times[k],
            position_error: position[k],
            cross_ratio_drift: cross.as_ref().map(|c| c.values[k]),
            inner_product_drift: inner.values[k],
        })
        .collect();
    let path = ctx.path("diagnostics.jsonl");
    write_jsonl(&path, &records)?;
    Ok((report, full, rec))
}

pub fn cmd_compare(cfg: &ScenarioConfig, ctx: &mut RunContext) -> Result<ComparisonReport, CliError> {
    let sc = cfg.scenario()?;
    let (report, full, rec) = compare(&sc, cfg, ctx)?;
    ctx.write_trajectory("trajectory.csv", &full, sc.dim())?;
    ctx.write_trajectory("reconstructed.csv", &rec, sc.dim())?;
    let path = ctx.path("comparison.json");
    write_json_atomic(&path, &report)?;
    if report.pass {
        Ok(report)
    } else {
        ctx.manifest.message = Some(format!(
            "tolerance violated: position {:e}, cross-ratio {:?}, inner product {:e}",
            report.position_error, report.cross_ratio_drift, report.inner_product_drift
        ));
        Err(CliError::Tolerance(Box::new(report)))
    }
}

/// Median wall-clock cost of one integration step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub system: &'static str,
    pub body_count: usize,
    pub steps: usize,
    pub median_step_seconds: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Per-step cost of the full and the reduced systems for each body count.
/// The reduced run is timed without reconstruction.
pub fn bench_rows(cfg: &ScenarioConfig) -> Result<Vec<BenchRow>, CliError> {
    let bench = cfg
        .bench
        .as_ref()
        .ok_or_else(|| CliError::config("the bench command needs a `bench` section"))?;
    if !matches!(cfg.coupling, CouplingConfig::Constant(_) | CouplingConfig::RandomConstant { .. }) {
        return Err(CliError::config("bench requires a constant coupling field"));
    }
    let step = match cfg.integrator {
        Method::Rk4 { step } => step,
        Method::Rk45 { .. } => return Err(CliError::config("bench requires the fixed-step rk4 integrator")),
    };
    let t_end = step * bench.steps as f64;
    let mut rows = Vec::new();
    for &count in &bench.body_counts {
        let mut c = cfg.clone();
        c.body_count = count;
        c.initial_bodies = super::config::BodiesConfig::Random;
        c.t_end = t_end;
        c.sample_every = t_end;
        let sc = c.scenario()?;
        for (system, full) in [("full", true), ("reduced", false)] {
            let mut costs = Vec::with_capacity(bench.repeats);
            let warm_up = if full { sc.run_full() } else { sc.run_reduced() }?;
            std::hint::black_box(&warm_up);
            for _ in 0..bench.repeats {
                let start = Instant::now();
                let traj = if full { sc.run_full() } else { sc.run_reduced() }?;
                std::hint::black_box(&traj);
                costs.push(start.elapsed().as_secs_f64() / bench.steps as f64);
            }
            rows.push(BenchRow {
                system,
                body_count: count,
                steps: bench.steps,
                median_step_seconds: median(costs),
            });
        }
    }
    Ok(rows)
}

pub fn cmd_bench(cfg: &ScenarioConfig, ctx: &mut RunContext) -> Result<Vec<BenchRow>, CliError> {
    let rows = ctx.timed("bench", || bench_rows(cfg))?;
    let path = ctx.path("timing.csv");
    let mut text = String::from("system,body_count,steps,median_step_seconds\n");
    for r in &rows {
        text.push_str(&format!(
            "{},{},{},{}\n",
            r.system,
            r.body_count,
            r.steps,
            super::output::fmt_f64(r.median_step_seconds)
        ));
    }
    std::fs::write(path, text)?;
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassicalReport {
    pub samples_compared: usize,
    pub circle_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn angles_to_points(traj: &Trajectory) -> Trajectory {
    let mut out = traj.clone();
    for s in &mut out.samples {
        *s = s.iter().flat_map(|t| [t.cos(), t.sin()]).collect();
    }
    out
}

pub fn cmd_classical(cfg: &ScenarioConfig, ctx: &mut RunContext) -> Result<ClassicalReport, CliError> {
    let (sc, cc) = cfg.classical_scenario()?;
    let full = ctx.timed("integrate_full", || sc.run_full()).map_err(|e| fail_numerical(ctx, e))?;
    let reduced = ctx.timed("integrate_reduced", || sc.run_reduced()).map_err(|e| fail_numerical(ctx, e))?;
    ctx.manifest.events = reduced.events.clone();
    let rec = sc.reconstruct(&reduced)?;
    let len = full.len().min(rec.len());
    let circle_error = full.samples[..len]
        .iter()
        .zip(&rec.samples[..len])
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| circle_distance(*x, *y)))
        .fold(0.0, f64::max);
    ctx.write_trajectory("classical_full.csv", &angles_to_points(&full), 2)?;
    ctx.write_trajectory("classical_reconstructed.csv", &angles_to_points(&rec), 2)?;
    let path = ctx.path("classical_reduced.csv");
    let cols = ["w_re", "w_im", "zeta_re", "zeta_im"].map(String::from);
    write_state_csv(&path, &reduced, &cols)?;
    let report = ClassicalReport {
        samples_compared: len,
        circle_error,
        tolerance: cc.tolerance,
        pass: circle_error <= cc.tolerance,
    };
    let path = ctx.path("comparison.json");
    write_json_atomic(&path, &report)?;
    Ok(report)
}

pub(super) fn context(out_dir: &Path, command: &str, cfg: Option<&ScenarioConfig>) -> RunContext {
    RunContext {
        out_dir: out_dir.to_path_buf(),
        manifest: RunManifest::new(command, cfg),
    }
}
