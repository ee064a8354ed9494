//! Fixed-step RK4 and adaptive Dormand–Prince 4(5) on flat state vectors,
//! with post-step manifold projection and synchronization-boundary detection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::normalize_blocks;
use crate::numlin::{norm, orthogonality_defect, reorthonormalize, Matrix};

/// Reduced runs halt once 1 − |w| drops below this.
pub const SYNC_BOUNDARY: f64 = 1e-9;

/// Right-hand side of an autonomous-or-not ODE on a flat state.
pub trait OdeSystem {
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;
}

impl<F> OdeSystem for F
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<()>,
{
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        self(t, y, dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum Method {
    Rk4 {
        step: f64,
    },
    Rk45 {
        abs_tol: f64,
        rel_tol: f64,
        min_step: f64,
        max_step: f64,
    },
}

impl Default for Method {
    fn default() -> Self {
        Method::Rk4 { step: 1e-3 }
    }
}

impl Method {
    pub fn rk45_default() -> Self {
        Method::Rk45 {
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            min_step: 1e-12,
            max_step: 0.1,
        }
    }
}

/// Projection applied to one component of the state after each accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Projection {
    None,
    /// `count` consecutive unit vectors of length `dim`.
    NormalizeSphere { dim: usize, count: usize },
    /// An n×n row-major rotation matrix.
    ReorthonormalizeRotation { n: usize },
    /// A point of the open n-ball; reaching the boundary halts the run.
    BallCheck { n: usize },
}

impl Projection {
    fn len(&self) -> usize {
        match *self {
            Projection::None => 0,
            Projection::NormalizeSphere { dim, count } => dim * count,
            Projection::ReorthonormalizeRotation { n } => n * n,
            Projection::BallCheck { n } => n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub offset: usize,
    pub projection: Projection,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntegratorSpec {
    pub method: Method,
    pub projection: Vec<Segment>,
}

impl IntegratorSpec {
    pub fn new(method: Method) -> Self {
        IntegratorSpec {
            method,
            projection: Vec::new(),
        }
    }

    pub fn rk4(step: f64) -> Self {
        Self::new(Method::Rk4 { step })
    }

    pub fn with(mut self, offset: usize, projection: Projection) -> Self {
        self.projection.push(Segment { offset, projection });
        self
    }

    pub fn validate(&self, state_len: usize) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidIntegrator(msg.to_string()));
        match self.method {
            Method::Rk4 { step } if !(step > 0.0 && step.is_finite()) => {
                return bad("step must be positive")
            }
            Method::Rk45 {
                abs_tol,
                rel_tol,
                min_step,
                max_step,
            } => {
                if !(abs_tol > 0.0 && rel_tol > 0.0) {
                    return bad("tolerances must be positive");
                }
                if !(min_step > 0.0 && min_step <= max_step) {
                    return bad("need 0 < min_step <= max_step");
                }
            }
            _ => {}
        }
        for seg in &self.projection {
            if seg.offset + seg.projection.len() > state_len {
                return bad("projection segment exceeds state length");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    SyncBoundary,
    StepFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

/// Sampled solution. `samples[k]` is the flat state at `times[k]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
    pub events: Vec<Event>,
}

impl Trajectory {
    fn push(&mut self, t: f64, y: &[f64]) {
        if self.times.last().is_some_and(|&last| t <= last) {
            return;
        }
        self.times.push(t);
        self.samples.push(y.to_vec());
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> Option<&[f64]> {
        self.samples.last().map(Vec::as_slice)
    }

    pub fn has_event(&self, kind: EventKind) -> bool {
        self.events.iter().any(|e| e.kind == kind)
    }

    /// Transform every sample, keeping times and events.
    pub fn map_samples(&self, mut f: impl FnMut(f64, &[f64]) -> Result<Vec<f64>>) -> Result<Trajectory> {
        let samples = self
            .times
            .iter()
            .zip(&self.samples)
            .map(|(&t, s)| f(t, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Trajectory {
            times: self.times.clone(),
            samples,
            events: self.events.clone(),
        })
    }
}

enum StepOutcome {
    Continue,
    Halt(EventKind),
}

fn project(spec: &IntegratorSpec, y: &mut [f64]) -> Result<StepOutcome> {
    let mut outcome = StepOutcome::Continue;
    for seg in &spec.projection {
        let part = &mut y[seg.offset..seg.offset + seg.projection.len()];
        match seg.projection {
            Projection::None => {}
            Projection::NormalizeSphere { dim, .. } => normalize_blocks(part, dim),
            Projection::ReorthonormalizeRotation { n } => {
                // Already orthogonal to rounding: leave untouched.
                if orthogonality_defect(n, part) > 1e-15 {
                    let r = Matrix::from_row_major(n, part.to_vec())?;
                    part.copy_from_slice(reorthonormalize(&r)?.as_slice());
                }
            }
            Projection::BallCheck { .. } => {
                if 1.0 - norm(part) < SYNC_BOUNDARY {
                    outcome = StepOutcome::Halt(EventKind::SyncBoundary);
                }
            }
        }
    }
    Ok(outcome)
}

/// Integrate from `t_span.0` to `t_span.1`, recording the state at
/// `t0 + k·sample_every` and at `t1`.
///
/// Fixed-step runs subdivide each sampling interval into equal steps no
/// longer than the requested step, so sample times are hit exactly and two
/// systems sharing a grid see identical step times.
pub fn integrate<S: OdeSystem + ?Sized>(
    system: &S,
    initial: &[f64],
    t_span: (f64, f64),
    spec: &IntegratorSpec,
    sample_every: f64,
) -> Result<Trajectory> {
    let (t0, t1) = t_span;
    if !(t1 > t0) || !(sample_every > 0.0) {
        return Err(Error::InvalidIntegrator(
            "need t1 > t0 and sample_every > 0".into(),
        ));
    }
    spec.validate(initial.len())?;

    let mut traj = Trajectory::default();
    let mut y = initial.to_vec();
    if let StepOutcome::Halt(kind) = project(spec, &mut y)? {
        traj.push(t0, &y);
        traj.events.push(Event { time: t0, kind });
        return Ok(traj);
    }
    traj.push(t0, &y);

    let intervals = ((t1 - t0) / sample_every - 1e-9).ceil().max(1.0) as usize;
    let mut work = Workspace::new(y.len());
    let mut adaptive_step = match spec.method {
        Method::Rk45 { max_step, .. } => max_step.min(sample_every),
        Method::Rk4 { step } => step,
    };

    for k in 1..=intervals {
        let t_start = t0 + (k - 1) as f64 * sample_every;
        let t_end = if k == intervals {
            t1
        } else {
            t0 + k as f64 * sample_every
        };
        let result = match spec.method {
            Method::Rk4 { step } => {
                rk4_interval(system, spec, &mut y, t_start, t_end, step, &mut work)
            }
            Method::Rk45 {
                abs_tol,
                rel_tol,
                min_step,
                max_step,
            } => rk45_interval(
                system,
                spec,
                &mut y,
                (t_start, t_end),
                Tolerances {
                    abs_tol,
                    rel_tol,
                    min_step,
                    max_step,
                },
                &mut adaptive_step,
                &mut work,
            ),
        };
        match result {
            Ok(IntervalEnd::Reached) => traj.push(t_end, &y),
            Ok(IntervalEnd::Stopped { time, kind }) => {
                traj.push(time, &y);
                traj.events.push(Event { time, kind });
                return Ok(traj);
            }
            Err(Failure::NonFinite(t)) => {
                return Err(Error::NonFiniteState {
                    t,
                    partial: Box::new(traj),
                })
            }
            Err(Failure::Other(e)) => return Err(e),
        }
    }
    Ok(traj)
}

enum IntervalEnd {
    Reached,
    Stopped { time: f64, kind: EventKind },
}

enum Failure {
    NonFinite(f64),
    Other(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Other(e)
    }
}

struct Workspace {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    next: Vec<f64>,
}

impl Workspace {
    fn new(len: usize) -> Self {
        Workspace {
            k: std::array::from_fn(|_| vec![0.0; len]),
            tmp: vec![0.0; len],
            next: vec![0.0; len],
        }
    }
}

fn rk4_interval<S: OdeSystem + ?Sized>(
    system: &S,
    spec: &IntegratorSpec,
    y: &mut [f64],
    t_start: f64,
    t_end: f64,
    max_step: f64,
    w: &mut Workspace,
) -> std::result::Result<IntervalEnd, Failure> {
    let span = t_end - t_start;
    let steps = (span / max_step - 1e-9).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    for s in 0..steps {
        let t = t_start + s as f64 * h;
        rk4_step(system, t, y, h, w)?;
        let t_new = if s + 1 == steps { t_end } else { t + h };
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Failure::NonFinite(t_new));
        }
        if let StepOutcome::Halt(kind) = project(spec, y)? {
            return Ok(IntervalEnd::Stopped { time: t_new, kind });
        }
    }
    Ok(IntervalEnd::Reached)
}

/// One classic RK4 step, in place.
fn rk4_step<S: OdeSystem + ?Sized>(
    system: &S,
    t: f64,
    y: &mut [f64],
    h: f64,
    w: &mut Workspace,
) -> Result<()> {
    let [k1, k2, k3, k4, ..] = &mut w.k;
    let tmp = &mut w.tmp;
    system.rhs(t, y, k1)?;
    for i in 0..y.len() {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    system.rhs(t + 0.5 * h, tmp, k2)?;
    for i in 0..y.len() {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    system.rhs(t + 0.5 * h, tmp, k3)?;
    for i in 0..y.len() {
        tmp[i] = y[i] + h * k3[i];
    }
    system.rhs(t + h, tmp, k4)?;
    for i in 0..y.len() {
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(())
}

#[derive(Clone, Copy)]
struct Tolerances {
    abs_tol: f64,
    rel_tol: f64,
    min_step: f64,
    max_step: f64,
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn rk45_interval<S: OdeSystem + ?Sized>(
    system: &S,
    spec: &IntegratorSpec,
    y: &mut [f64],
    (t_start, t_end): (f64, f64),
    tol: Tolerances,
    h_next: &mut f64,
    w: &mut Workspace,
) -> std::result::Result<IntervalEnd, Failure> {
    let mut t = t_start;
    let n = y.len();
    while t < t_end {
        let remaining = t_end - t;
        let mut h = h_next.min(tol.max_step);
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        system.rhs(t, y, &mut w.k[0])?;
        for stage in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, a) in A[stage].iter().enumerate().take(stage) {
                    acc += h * a * w.k[j][i];
                }
                w.tmp[i] = acc;
            }
            let (_, rest) = w.k.split_at_mut(stage);
            system.rhs(t + C[stage] * h, &w.tmp, &mut rest[0])?;
        }
        let mut err: f64 = 0.0;
        for i in 0..n {
            let mut high = y[i];
            let mut diff = 0.0;
            for s in 0..7 {
                high += h * B5[s] * w.k[s][i];
                diff += h * (B5[s] - B4[s]) * w.k[s][i];
            }
            w.next[i] = high;
            let scale = tol.abs_tol + tol.rel_tol * y[i].abs().max(high.abs());
            err = err.max(diff.abs() / scale);
        }
        if !err.is_finite() {
            return Err(Failure::NonFinite(t + h));
        }
        if err <= 1.0 {
            t = if last { t_end } else { t + h };
            y.copy_from_slice(&w.next);
            let growth = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            // A step clipped to the sample time should not shrink the next proposal.
            let proposal = h * growth;
            *h_next = if last { h_next.max(proposal) } else { proposal }.min(tol.max_step);
            if let StepOutcome::Halt(kind) = project(spec, y)? {
                return Ok(IntervalEnd::Stopped { time: t, kind });
            }
        } else {
            let shrink = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            *h_next = h * shrink;
            if *h_next < tol.min_step {
                return Ok(IntervalEnd::Stopped {
                    time: t,
                    kind: EventKind::StepFailure,
                });
            }
        }
    }
    Ok(IntervalEnd::Reached)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_growth(_t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        dy[0] = y[0];
        Ok(())
    }

    #[test]
    fn zero_rhs_gives_constant_trajectory() {
        let rhs = |_t: f64, _y: &[f64], dy: &mut [f64]| -> Result<()> {
            dy.iter_mut().for_each(|v| *v = 0.0);
            Ok(())
        };
        let traj = integrate(&rhs, &[1.0, 2.0], (0.0, 1.0), &IntegratorSpec::rk4(0.01), 0.25).unwrap();
        assert_eq!(traj.times, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(traj.samples.iter().all(|s| s == &[1.0, 2.0]));
    }

    #[test]
    fn rk4_exponential_oracle() {
        let traj = integrate(&exp_growth, &[1.0], (0.0, 1.0), &IntegratorSpec::rk4(1e-3), 0.5).unwrap();
        let end = traj.last_state().unwrap()[0];
        assert!((end - std::f64::consts::E).abs() < 1e-10);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let err = |h: f64| {
            let traj = integrate(&exp_growth, &[1.0], (0.0, 1.0), &IntegratorSpec::rk4(h), 1.0).unwrap();
            (traj.last_state().unwrap()[0] - std::f64::consts::E).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!(ratio >= 12.0, "ratio {ratio}");
    }

    #[test]
    fn rk45_exponential_oracle() {
        let spec = IntegratorSpec::new(Method::Rk45 {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            min_step: 1e-12,
            max_step: 0.5,
        });
        let traj = integrate(&exp_growth, &[1.0], (0.0, 2.0), &spec, 0.3).unwrap();
        assert_eq!(traj.times.len(), 8);
        assert!((traj.times[7] - 2.0).abs() < 1e-15);
        let end = traj.last_state().unwrap()[0];
        assert!((end - 2f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn rk45_reports_step_failure() {
        // A jump in the right-hand side at t = 0.7 cannot be resolved above min_step.
        let rhs = |t: f64, _y: &[f64], dy: &mut [f64]| -> Result<()> {
            dy[0] = if t < 0.7 { 0.0 } else { 1.0 };
            Ok(())
        };
        let spec = IntegratorSpec::new(Method::Rk45 {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            min_step: 1e-6,
            max_step: 0.1,
        });
        let traj = integrate(&rhs, &[1.0], (0.0, 2.0), &spec, 0.5).unwrap();
        assert!(traj.has_event(EventKind::StepFailure));
        assert!((traj.times.last().unwrap() - 0.7).abs() < 1e-5);
    }

    #[test]
    fn non_finite_state_is_an_error_with_partial_trajectory() {
        let rhs = |t: f64, _y: &[f64], dy: &mut [f64]| -> Result<()> {
            dy[0] = if t > 0.5 { f64::NAN } else { 0.0 };
            Ok(())
        };
        match integrate(&rhs, &[1.0], (0.0, 1.0), &IntegratorSpec::rk4(0.1), 0.25) {
            Err(Error::NonFiniteState { t, partial }) => {
                assert!(t > 0.5);
                assert_eq!(partial.times, vec![0.0, 0.25, 0.5]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rigid_rotation_returns_to_start() {
        let omega = 1.7;
        let rhs = move |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
            dy[0] = -omega * y[1];
            dy[1] = omega * y[0];
            dy[2] = 0.0;
            Ok(())
        };
        let x0 = [0.6, 0.0, 0.8];
        let spec = IntegratorSpec::rk4(1e-3).with(0, Projection::NormalizeSphere { dim: 3, count: 1 });
        let period = std::f64::consts::TAU / omega;
        let traj = integrate(&rhs, &x0, (0.0, period), &spec, period / 4.0).unwrap();
        let end = traj.last_state().unwrap();
        assert!(crate::numlin::distance(end, &x0) < 1e-8);
    }

    #[test]
    fn projection_is_idempotent_on_manifold() {
        let spec = IntegratorSpec::default()
            .with(0, Projection::NormalizeSphere { dim: 2, count: 1 })
            .with(2, Projection::ReorthonormalizeRotation { n: 2 });
        let (s, c) = 0.3f64.sin_cos();
        let mut y = vec![c, s, c, -s, s, c];
        let before = y.clone();
        project(&spec, &mut y).unwrap();
        let diff = y.iter().zip(&before).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff < 1e-15);
    }

    #[test]
    fn ball_check_halts_on_boundary() {
        // w' = 1 − w drives w to 1 exponentially.
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
            dy[0] = 2.0 * (1.0 - y[0]);
            dy[1] = 0.0;
            Ok(())
        };
        let spec = IntegratorSpec::rk4(1e-3).with(0, Projection::BallCheck { n: 2 });
        let traj = integrate(&rhs, &[0.0, 0.0], (0.0, 50.0), &spec, 1.0).unwrap();
        assert!(traj.has_event(EventKind::SyncBoundary));
        let t = traj.events[0].time;
        assert!(t > 9.0 && t < 12.0, "halted at {t}");
        assert_eq!(*traj.times.last().unwrap(), t);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(integrate(&exp_growth, &[1.0], (1.0, 0.0), &IntegratorSpec::rk4(0.1), 0.1).is_err());
        assert!(integrate(&exp_growth, &[1.0], (0.0, 1.0), &IntegratorSpec::rk4(-0.1), 0.1).is_err());
        let spec = IntegratorSpec::rk4(0.1).with(0, Projection::BallCheck { n: 3 });
        assert!(integrate(&exp_growth, &[1.0], (0.0, 1.0), &spec, 0.1).is_err());
    }

    #[test]
    fn deterministic() {
        let run = || integrate(&exp_growth, &[0.3], (0.0, 3.0), &IntegratorSpec::rk4(1e-2), 0.1).unwrap();
        let (a, b) = (run(), run());
        let bits = |t: &Trajectory| t.samples.iter().map(|s| s[0].to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }
}
