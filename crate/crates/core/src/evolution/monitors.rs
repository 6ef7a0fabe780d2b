//! Post-run checks on a [`TrajectoryRecord`].

use serde::{Deserialize, Serialize};

use super::{series, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::grid::GeometryMode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirialSample {
    pub time: f64,
    /// Central difference of `M_{φ_R}`.
    pub rate: f64,
    pub eight_g: f64,
    /// `|rate - 8G| / |8G|`.
    pub rel_error: f64,
    /// `|rate - 8G| / (8K)`, meaningful when `G ≈ 0`.
    pub kinetic_scaled_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirialRateReport {
    pub radius: f64,
    pub samples: Vec<VirialSample>,
    pub max_rel_error: f64,
    pub max_kinetic_scaled_error: f64,
    /// Smallest `C` with `rate <= 8G + C (R^{-2} K + R^{-2})` (radial) or
    /// `rate <= 8G + C (R^{-1} K + R^{-2})` (cylindrical) on every sample.
    pub fitted_c: Option<f64>,
}

fn need<'a>(record: &'a TrajectoryRecord, name: &str) -> Result<&'a Vec<f64>> {
    record
        .monitor_series
        .get(name)
        .ok_or_else(|| Error::Validation(vec![format!("series `{name}` was not recorded")]))
}

/// Compares `dM_{φ_R}/dt` with `8G` at every interior report.
pub fn virial_rate_check(record: &TrajectoryRecord) -> Result<VirialRateReport> {
    let m = need(record, series::VIRIAL)?;
    let n = record.reports.len();
    if n < 3 {
        return Err(Error::Validation(vec![format!("virial rate check needs 3 reports, have {n}")]));
    }
    let r = record.virial_radius;
    let mut samples = Vec::with_capacity(n - 2);
    let mut fitted: Option<f64> = None;
    for i in 1..n - 1 {
        let (a, b, c) = (&record.reports[i - 1], &record.reports[i], &record.reports[i + 1]);
        let rate = (m[i + 1] - m[i - 1]) / (c.time - a.time);
        let eight_g = 8.0 * b.pohozaev;
        let diff = rate - eight_g;
        samples.push(VirialSample {
            time: b.time,
            rate,
            eight_g,
            rel_error: diff.abs() / eight_g.abs(),
            kinetic_scaled_error: diff.abs() / (8.0 * b.kinetic),
        });
        let envelope = match record.geometry {
            GeometryMode::Radial3D => Some((b.kinetic + 1.0) / (r * r)),
            GeometryMode::Cyl3D => Some(b.kinetic / r + 1.0 / (r * r)),
            GeometryMode::Cart3D => None,
        };
        if let Some(e) = envelope {
            let c = (diff / e).max(0.0);
            fitted = Some(fitted.map_or(c, |f: f64| f.max(c)));
        }
    }
    let max_rel_error = samples.iter().map(|s| s.rel_error).fold(0.0, f64::max);
    let max_kinetic_scaled_error = samples.iter().map(|s| s.kinetic_scaled_error).fold(0.0, f64::max);
    Ok(VirialRateReport { radius: r, samples, max_rel_error, max_kinetic_scaled_error, fitted_c: fitted })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxLawReport {
    pub beta: f64,
    /// `(t, d/dt[||u||² + γβ||v||²], (2/3)(1 - β/3) ∫ Im(u³ conj v))`.
    pub samples: Vec<(f64, f64, f64)>,
    /// Largest `|lhs - rhs|` relative to the largest `|rhs|`; `None` for `β = 3`.
    pub max_rel_error: Option<f64>,
    /// `max |Q(t) - Q(0)| / Q(0)` of `Q = ||u||² + γβ||v||²`.
    pub max_drift: f64,
}

/// Mass flux law `d/dt[||u||² + γβ||v||²] = (2/3)(1 - β/3) ∫ Im(u³ conj v)`
/// by central differences over the recorded reports.
pub fn flux_law_check(record: &TrajectoryRecord, beta: f64) -> Result<FluxLawReport> {
    let nu = need(record, series::NORM_U)?;
    let nv = need(record, series::NORM_V)?;
    let src = need(record, series::FLUX_SOURCE)?;
    let n = record.reports.len();
    if n < 3 {
        return Err(Error::Validation(vec![format!("flux law check needs 3 reports, have {n}")]));
    }
    let gamma = record.final_state.gamma();
    let q: Vec<f64> = nu.iter().zip(nv).map(|(a, b)| a + gamma * beta * b).collect();
    let coef = (2.0 / 3.0) * (1.0 - beta / 3.0);
    let t = record.times();
    let samples: Vec<(f64, f64, f64)> =
        (1..n - 1).map(|i| (t[i], (q[i + 1] - q[i - 1]) / (t[i + 1] - t[i - 1]), coef * src[i])).collect();
    let scale = samples.iter().map(|s| s.2.abs()).fold(0.0, f64::max);
    let max_rel_error = if coef != 0.0 && scale > 0.0 {
        Some(samples.iter().map(|s| (s.1 - s.2).abs()).fold(0.0, f64::max) / scale)
    } else {
        None
    };
    let max_drift = q.iter().map(|x| relative(*x, q[0]).abs()).fold(0.0, f64::max);
    Ok(FluxLawReport { beta, samples, max_rel_error, max_drift })
}

fn relative(x: f64, x0: f64) -> f64 {
    if x0 != 0.0 {
        (x - x0) / x0.abs()
    } else {
        x - x0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorawetzReport {
    pub radius: f64,
    pub horizon: f64,
    /// `(1/T) ∫_0^T ∫_{|x| <= R/2} |u|^{10/3} + |v|^{10/3}` (trapezoid in time).
    pub local_average: f64,
    pub envelope: f64,
    /// `local_average / (R/T + R^{-2})`.
    pub fitted_c: f64,
    /// `max_t |M^{⊗2}_R(t)| / R` when the interaction monitor ran.
    pub interaction_over_r: Option<f64>,
}

pub fn morawetz_monitor(record: &TrajectoryRecord) -> Result<MorawetzReport> {
    let local = need(record, series::LOCAL_L103)?;
    let t = record.times();
    let horizon = t.last().copied().unwrap_or(0.0) - t.first().copied().unwrap_or(0.0);
    let r = record.virial_radius;
    let integral: f64 = (1..t.len()).map(|i| 0.5 * (t[i] - t[i - 1]) * (local[i] + local[i - 1])).sum();
    let local_average = if horizon > 0.0 { integral / horizon } else { 0.0 };
    let envelope = if horizon > 0.0 { r / horizon + 1.0 / (r * r) } else { f64::INFINITY };
    let interaction_over_r = match (record.monitor_series.get(series::INTERACTION_MORAWETZ), record.morawetz_radius) {
        (Some(s), Some(rm)) => Some(s.iter().map(|x| x.abs()).fold(0.0, f64::max) / rm),
        _ => None,
    };
    Ok(MorawetzReport { radius: r, horizon, local_average, envelope, fitted_c: local_average / envelope, interaction_over_r })
}

/// Discrete `L⁵_{t,x}` norm over `(t_a, t_b]`: right-endpoint sum of the
/// recorded `∫ |u|⁵ + |v|⁵`, then the fifth root.
pub fn spacetime_norm_window(record: &TrajectoryRecord, t_a: f64, t_b: f64) -> Result<f64> {
    let l5 = need(record, series::L5)?;
    let t = record.times();
    let mut acc = 0.0;
    for i in 1..t.len() {
        if t[i] > t_a && t[i] <= t_b {
            acc += (t[i] - t[i - 1].max(t_a)) * l5[i];
        }
    }
    Ok(acc.powf(0.2))
}

/// Index of the first entry with `k[i] >= trigger * k[0]`.
pub fn kinetic_trigger_index(k: &[f64], trigger: f64) -> Option<usize> {
    let k0 = *k.first()?;
    if !(k0 > 0.0) {
        return None;
    }
    k.iter().position(|&x| x >= trigger * k0)
}

/// Comparison estimate `t* = t1 + 1 / (A² z(t1))` from `M <= -A z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupEstimate {
    pub t1: f64,
    pub z_t1: f64,
    pub a: f64,
    pub t_star: f64,
}

pub(super) fn blowup_estimate(record: &TrajectoryRecord) -> Option<BlowupEstimate> {
    let m = record.monitor_series.get(series::VIRIAL)?;
    let z = &record.z_series;
    let t = record.times();
    let start = (0..m.len()).find(|&i| m[i] < 0.0 && z[i] > 0.0)?;
    if m[start..].iter().any(|&x| x >= 0.0) {
        return None;
    }
    let a = (start..m.len()).map(|i| -m[i] / z[i]).fold(f64::INFINITY, f64::min);
    if !(a > 0.0 && a.is_finite()) {
        return None;
    }
    let last = m.len() - 1;
    let (t1, z1) = (t[last], z[last]);
    Some(BlowupEstimate { t1, z_t1: z1, a, t_star: t1 + 1.0 / (a * a * z1) })
}
