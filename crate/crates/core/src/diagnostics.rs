//! Conserved-quantity drift and trajectory comparison over stored samples.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conformal::{cross_ratio, Boost, CrossRatioIndex};
use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::model::{order_parameter, SphereConfig};
use crate::numlin::{distance, norm, orthogonality_defect};
use crate::reduction::{ws_transform, ReducedState};
use crate::sampling::{stream_rng, Stream};

/// Quadruple budget above which cross-ratios are sampled rather than enumerated.
pub const DEFAULT_QUAD_BUDGET: usize = 500;

/// Per-sample maximum of a drift quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl DriftSeries {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub cross_ratio_drift: f64,
    pub inner_product_drift: f64,
    pub norm_drift: f64,
    pub orthogonality_drift: f64,
    pub order_parameter_series: Vec<(f64, f64)>,
    pub comparison_error: Option<f64>,
}

fn config_at(traj: &Trajectory, dim: usize, k: usize) -> SphereConfig {
    SphereConfig::from_flat_unchecked(dim, traj.samples[k].clone())
}

/// Relative deviation |λ(t) − λ(0)| / λ(0), maximized over quads at each sample.
pub fn track_cross_ratios(
    traj: &Trajectory,
    dim: usize,
    quads: &[CrossRatioIndex],
) -> Result<DriftSeries> {
    let Some(first) = traj.samples.first() else {
        return Ok(DriftSeries { times: vec![], values: vec![] });
    };
    let bodies = first.len() / dim;
    if bodies < 4 {
        return Err(Error::TooFewBodies { needed: 4, found: bodies });
    }
    let lambda = |s: &[f64], q: &CrossRatioIndex| {
        let b = |i: usize| &s[i * dim..(i + 1) * dim];
        cross_ratio(b(q.i), b(q.j), b(q.k), b(q.l))
    };
    let initial = quads
        .iter()
        .map(|q| {
            let v = lambda(first, q)?;
            if v < 1e-13 {
                return Err(Error::DegenerateQuad);
            }
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    let values = traj
        .samples
        .iter()
        .map(|s| {
            quads.iter().zip(&initial).try_fold(0.0f64, |m, (q, l0)| {
                Ok(m.max((lambda(s, q)? - l0).abs() / l0))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DriftSeries {
        times: traj.times.clone(),
        values,
    })
}

fn check_aligned(a: &Trajectory, b: &Trajectory) -> Result<()> {
    if a.times.len() != b.times.len() || a.times.iter().zip(&b.times).any(|(x, y)| (x - y).abs() > 1e-12) {
        return Err(Error::ShapeMismatch(format!(
            "sample times differ ({} vs {} samples)",
            a.times.len(),
            b.times.len()
        )));
    }
    Ok(())
}

/// Absolute deviation of ⟨u_i, u_j⟩ from its initial value, maximized over
/// pairs, with u = b_{−w}(x) built from the full trajectory and the reduced w.
pub fn track_ws_inner_products(
    traj_full: &Trajectory,
    traj_reduced: &Trajectory,
    dim: usize,
) -> Result<DriftSeries> {
    check_aligned(traj_full, traj_reduced)?;
    let mut initial: Option<Vec<f64>> = None;
    let mut values = Vec::with_capacity(traj_full.len());
    for k in 0..traj_full.len() {
        let sample = &traj_reduced.samples[k];
        if sample.len() != ReducedState::flat_len(dim) {
            return Err(Error::ShapeMismatch("reduced state length".into()));
        }
        // Samples at the synchronization boundary may sit past the Boost margin.
        let w = Boost::unchecked(sample[dim * dim..].to_vec());
        let frame = ws_transform(&config_at(traj_full, dim, k), &w)?;
        let products = frame.inner_products();
        let reference = initial.get_or_insert_with(|| products.clone());
        values.push(
            products
                .iter()
                .zip(reference.iter())
                .fold(0.0f64, |m, (p, p0)| m.max((p - p0).abs())),
        );
    }
    Ok(DriftSeries {
        times: traj_full.times.clone(),
        values,
    })
}

/// Same as [`track_ws_inner_products`] for a boost path given directly.
pub fn track_inner_products_with_boosts(traj_full: &Trajectory, dim: usize, boosts: &[Boost]) -> Result<DriftSeries> {
    if boosts.len() != traj_full.len() {
        return Err(Error::ShapeMismatch("one boost per sample required".into()));
    }
    let mut values = Vec::new();
    let mut initial: Option<Vec<f64>> = None;
    for (k, w) in boosts.iter().enumerate() {
        let products = ws_transform(&config_at(traj_full, dim, k), w)?.inner_products();
        let reference = initial.get_or_insert_with(|| products.clone());
        values.push(
            products
                .iter()
                .zip(reference.iter())
                .fold(0.0f64, |m, (p, p0)| m.max((p - p0).abs())),
        );
    }
    Ok(DriftSeries {
        times: traj_full.times.clone(),
        values,
    })
}

/// Sup over samples and bodies of the Euclidean position difference.
pub fn compare_trajectories(a: &Trajectory, b: &Trajectory, dim: usize) -> Result<f64> {
    check_aligned(a, b)?;
    let mut worst: f64 = 0.0;
    for (sa, sb) in a.samples.iter().zip(&b.samples) {
        if sa.len() != sb.len() || sa.len() % dim != 0 {
            return Err(Error::ShapeMismatch(format!(
                "state lengths {} and {}",
                sa.len(),
                sb.len()
            )));
        }
        for (xa, xb) in sa.chunks_exact(dim).zip(sb.chunks_exact(dim)) {
            worst = worst.max(distance(xa, xb));
        }
    }
    Ok(worst)
}

/// Sup over samples and bodies of the arc distance between angles.
pub fn compare_angle_trajectories(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    check_aligned(a, b)?;
    let mut worst: f64 = 0.0;
    for (sa, sb) in a.samples.iter().zip(&b.samples) {
        if sa.len() != sb.len() {
            return Err(Error::ShapeMismatch("different body counts".into()));
        }
        for (ta, tb) in sa.iter().zip(sb) {
            worst = worst.max(circle_distance(*ta, *tb));
        }
    }
    Ok(worst)
}

/// Arc length between two angles, in [0, π].
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

/// max | |x_i| − 1 | over samples and bodies.
pub fn norm_drift(traj: &Trajectory, dim: usize) -> f64 {
    traj.samples
        .iter()
        .flat_map(|s| s.chunks_exact(dim))
        .fold(0.0, |m, x| m.max((norm(x) - 1.0).abs()))
}

/// max ‖RᵀR − I‖_max over a reduced trajectory.
pub fn orthogonality_drift(traj_reduced: &Trajectory, dim: usize) -> f64 {
    traj_reduced
        .samples
        .iter()
        .fold(0.0, |m, s| m.max(orthogonality_defect(dim, &s[..dim * dim])))
}

pub fn order_parameter_series(traj: &Trajectory, dim: usize) -> Vec<(f64, f64)> {
    (0..traj.len())
        .map(|k| (traj.times[k], order_parameter(&config_at(traj, dim, k))))
        .collect()
}

fn binomial4(n: usize) -> u128 {
    if n < 4 {
        return 0;
    }
    let n = n as u128;
    n * (n - 1) * (n - 2) * (n - 3) / 24
}

/// All C(N,4) quadruples when that fits in `max_quads`, else `max_quads`
/// distinct ones drawn from the seeded quad stream.
pub fn quad_sampler(bodies: usize, max_quads: usize, seed: u64) -> Result<Vec<CrossRatioIndex>> {
    if bodies < 4 {
        return Err(Error::TooFewBodies { needed: 4, found: bodies });
    }
    if binomial4(bodies) <= max_quads as u128 {
        let mut out = Vec::new();
        for i in 0..bodies {
            for j in (i + 1)..bodies {
                for k in (j + 1)..bodies {
                    for l in (k + 1)..bodies {
                        out.push(CrossRatioIndex { i, j, k, l });
                    }
                }
            }
        }
        return Ok(out);
    }
    let mut rng = stream_rng(seed, Stream::Quads);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(max_quads);
    while out.len() < max_quads {
        let mut idx = [0usize; 4];
        for slot in 0..4 {
            idx[slot] = loop {
                let c = rng.random_range(0..bodies);
                if !idx[..slot].contains(&c) {
                    break c;
                }
            };
        }
        let mut key = idx;
        key.sort_unstable();
        if seen.insert(key) {
            out.push(CrossRatioIndex {
                i: idx[0],
                j: idx[1],
                k: idx[2],
                l: idx[3],
            });
        }
    }
    Ok(out)
}
