//! Strang-split time integration with runtime monitors.
//!
//! One step is `N(dt/2) ∘ L(dt) ∘ N(dt/2)` where `L` is the exact free
//! flow on the grid and `N` the pointwise nonlinear flow (RK4, four
//! substeps). [`evolve`] drives the stepper, records a
//! [`FunctionalReport`] every `output_stride` steps, evaluates the enabled
//! monitors on each report and watches `K(t)` for blow-up.

mod monitors;
mod step;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::StatePair;
use crate::functionals::{self, FunctionalReport};
use crate::grid::{GeometryMode, GridSpec};
use crate::spectral;
use crate::weights::{self, MorawetzWeights, VirialWeight};

pub use monitors::{
    flux_law_check, kinetic_trigger_index, morawetz_monitor, spacetime_norm_window, virial_rate_check, BlowupEstimate, FluxLawReport,
    MorawetzReport, VirialRateReport, VirialSample,
};
pub use step::{
    galilean_boost, h1_distance, linear_step, nonlinear_step, scattering_profile, strang_step, Propagator, Stepper,
    NONLINEAR_SUBSTEPS,
};

/// Runtime monitors that can be enabled on a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monitor {
    /// `M_{φ_R}` and the cumulative `z(t) = ∫ |M_{φ_R}|²`.
    Virial,
    /// `∫_{|x| <= R} |u|² + 3γ|v|²`.
    LocalMass,
    /// `∫ |u|⁵ + |v|⁵` per report; windows are integrated afterwards.
    WindowL5,
    /// `G + εK`.
    Coercivity,
    /// Interaction-Morawetz quantity (Cartesian runs).
    InteractionMorawetz,
    /// `∫_{|x| <= R/2} |u|^{10/3} + |v|^{10/3}`.
    LocalL103,
    /// `||u||²`, `||v||²` and `∫ Im(u³ conj v)` for the mass flux laws.
    Flux,
}

impl Monitor {
    pub const ALL: [Monitor; 7] = [
        Monitor::Virial,
        Monitor::LocalMass,
        Monitor::WindowL5,
        Monitor::Coercivity,
        Monitor::InteractionMorawetz,
        Monitor::LocalL103,
        Monitor::Flux,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Monitor::Virial => "virial",
            Monitor::LocalMass => "local_mass",
            Monitor::WindowL5 => "window_l5",
            Monitor::Coercivity => "coercivity",
            Monitor::InteractionMorawetz => "interaction_morawetz",
            Monitor::LocalL103 => "local_l10_3",
            Monitor::Flux => "flux",
        }
    }

    /// Series names this monitor writes into [`TrajectoryRecord::monitor_series`].
    pub fn series(self) -> &'static [&'static str] {
        match self {
            Monitor::Virial => &[series::VIRIAL, series::Z],
            Monitor::LocalMass => &[series::LOCAL_MASS],
            Monitor::WindowL5 => &[series::L5],
            Monitor::Coercivity => &[series::COERCIVITY],
            Monitor::InteractionMorawetz => &[series::INTERACTION_MORAWETZ],
            Monitor::LocalL103 => &[series::LOCAL_L103],
            Monitor::Flux => &[series::NORM_U, series::NORM_V, series::FLUX_SOURCE],
        }
    }
}

impl fmt::Display for Monitor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Monitor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Monitor::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Validation(vec![format!("unknown monitor `{s}`")]))
    }
}

/// Names of the recorded series.
pub mod series {
    pub const MASS_DRIFT: &str = "mass_drift";
    pub const ENERGY_DRIFT: &str = "energy_drift";
    pub const DT: &str = "dt";
    pub const VIRIAL: &str = "virial";
    pub const Z: &str = "z";
    pub const LOCAL_MASS: &str = "local_mass";
    pub const L5: &str = "l5_power";
    pub const COERCIVITY: &str = "coercivity";
    pub const INTERACTION_MORAWETZ: &str = "interaction_morawetz";
    pub const LOCAL_L103: &str = "local_l10_3";
    pub const NORM_U: &str = "norm_u";
    pub const NORM_V: &str = "norm_v";
    pub const FLUX_SOURCE: &str = "flux_source";
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptConfig {
    pub enabled: bool,
    /// Halve `dt` whenever `K` has grown by this factor since the last halving.
    pub growth_trigger: f64,
    pub dt_floor: f64,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        AdaptConfig { enabled: false, growth_trigger: 2.0, dt_floor: 1e-7 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorawetzSpec {
    pub radius: f64,
    pub sigma: f64,
    /// Points per axis of the Cartesian grid the weight tables are built on.
    pub build_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_end: f64,
    pub output_stride: usize,
    pub adapt: AdaptConfig,
    pub monitors: BTreeSet<Monitor>,
    /// `R` of the virial weight and of the local mass; defaults to half the
    /// grid extent.
    pub virial_radius: Option<f64>,
    pub morawetz: Option<MorawetzSpec>,
    /// `ε` in `G + εK`.
    pub epsilon: f64,
    /// Blow-up fires once `K(t) >= blowup_trigger * K(0)`.
    pub blowup_trigger: f64,
    pub omega: f64,
    /// Times at which the state is captured into [`TrajectoryRecord::snapshots`].
    pub snapshot_times: Vec<f64>,
}

impl EvolutionConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        EvolutionConfig {
            dt,
            t_end,
            output_stride: 1,
            adapt: AdaptConfig::default(),
            monitors: BTreeSet::new(),
            virial_radius: None,
            morawetz: None,
            epsilon: 0.25,
            blowup_trigger: 100.0,
            omega: 0.0,
            snapshot_times: Vec::new(),
        }
    }

    pub fn with_monitors(mut self, monitors: impl IntoIterator<Item = Monitor>) -> Self {
        self.monitors.extend(monitors);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.dt.is_finite() && self.dt > 0.0) {
            bad.push(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            bad.push(format!("t_end must be positive, got {}", self.t_end));
        }
        if self.output_stride == 0 {
            bad.push("output_stride must be at least 1".into());
        }
        if self.adapt.enabled {
            if !(self.adapt.dt_floor > 0.0 && self.adapt.dt_floor < self.dt) {
                bad.push(format!("dt_floor {} must lie in (0, dt)", self.adapt.dt_floor));
            }
            if !(self.adapt.growth_trigger > 1.0) {
                bad.push(format!("growth_trigger must exceed 1, got {}", self.adapt.growth_trigger));
            }
        }
        if !(self.blowup_trigger > 1.0) {
            bad.push(format!("blowup_trigger must exceed 1, got {}", self.blowup_trigger));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            bad.push(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if let Some(r) = self.virial_radius {
            if !(r.is_finite() && r > 0.0) {
                bad.push(format!("virial_radius must be positive, got {r}"));
            }
        }
        if self.monitors.contains(&Monitor::InteractionMorawetz) && self.morawetz.is_none() {
            bad.push("interaction_morawetz monitor needs morawetz weight parameters".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    HorizonReached,
    BlowUpDetected,
    DtFloor,
    NumericalFault,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupEvent {
    pub time: f64,
    /// `K(t) / K(0)` when the detector fired.
    pub kinetic_ratio: f64,
    pub dt: f64,
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub reports: Vec<FunctionalReport>,
    /// Every series has one entry per report.
    pub monitor_series: BTreeMap<String, Vec<f64>>,
    pub blowup: Option<BlowupEvent>,
    pub termination: Termination,
    pub fault: Option<String>,
    /// Cumulative `∫ |M_{φ_R}|²` (empty unless the virial monitor ran).
    pub z_series: Vec<f64>,
    pub virial_radius: f64,
    pub morawetz_radius: Option<f64>,
    pub epsilon: f64,
    pub geometry: GeometryMode,
    pub steps: usize,
    pub snapshots: Vec<StatePair>,
    pub final_state: StatePair,
}

impl TrajectoryRecord {
    pub fn times(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.time).collect()
    }

    pub fn series(&self, name: &str) -> Result<Vec<f64>> {
        if let Some(i) = FunctionalReport::FIELDS.iter().position(|f| *f == name) {
            return Ok(self.reports.iter().map(|r| r.values()[i]).collect());
        }
        self.monitor_series.get(name).cloned().ok_or_else(|| Error::UnknownSeries(name.to_string()))
    }

    /// All series names, report fields first.
    pub fn series_names(&self) -> Vec<String> {
        FunctionalReport::FIELDS
            .iter()
            .skip(1)
            .map(|s| s.to_string())
            .chain(self.monitor_series.keys().cloned())
            .collect()
    }

    pub fn blowup_fired(&self) -> bool {
        self.blowup.is_some()
    }

    /// Turns a numerical fault into an error, leaving other terminations alone.
    pub fn check(&self) -> Result<()> {
        match self.termination {
            Termination::NumericalFault => Err(Error::NumericalFault {
                time: self.reports.last().map_or(0.0, |r| r.time),
                reason: self.fault.clone().unwrap_or_default(),
            }),
            _ => Ok(()),
        }
    }

    /// One JSON object per report with every recorded value.
    pub fn rows(&self) -> Vec<serde_json::Value> {
        self.reports
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut row = serde_json::Map::new();
                for (k, v) in FunctionalReport::FIELDS.iter().zip(r.values()) {
                    row.insert(k.to_string(), v.into());
                }
                for (k, s) in &self.monitor_series {
                    row.insert(k.clone(), s[i].into());
                }
                serde_json::Value::Object(row)
            })
            .collect()
    }

    /// Wide CSV: report fields, then monitor series in name order.
    pub fn to_csv(&self) -> String {
        let mut out = FunctionalReport::csv_header();
        for k in self.monitor_series.keys() {
            out.push(',');
            out.push_str(k);
        }
        out.push('\n');
        for (i, r) in self.reports.iter().enumerate() {
            out.push_str(&r.to_csv_row());
            for s in self.monitor_series.values() {
                out.push(',');
                out.push_str(&functionals::fmt_f64(s[i]));
            }
            out.push('\n');
        }
        out
    }

    /// Blow-up time estimate from the recorded virial series.
    pub fn blowup_estimate(&self) -> Option<BlowupEstimate> {
        monitors::blowup_estimate(self)
    }
}

fn relative_change(x: f64, x0: f64) -> f64 {
    if x0 != 0.0 {
        (x - x0) / x0.abs()
    } else {
        x - x0
    }
}

/// Per-run monitor context built once from the initial grid.
struct MonitorSet {
    enabled: BTreeSet<Monitor>,
    virial_weight: Option<VirialWeight>,
    virial_radius: f64,
    morawetz: Option<MorawetzWeights>,
    epsilon: f64,
}

impl MonitorSet {
    fn new(grid: &GridSpec, config: &EvolutionConfig) -> Result<Self> {
        let virial_radius = config.virial_radius.unwrap_or(0.5 * grid.extent());
        let virial_weight = if config.monitors.contains(&Monitor::Virial) {
            Some(match grid.mode() {
                GeometryMode::Cyl3D => weights::cylindrical_weight(virial_radius, grid)?,
                _ => weights::radial_virial_weight(virial_radius, grid)?,
            })
        } else {
            None
        };
        let morawetz = match (config.monitors.contains(&Monitor::InteractionMorawetz), config.morawetz) {
            (true, Some(spec)) => {
                if grid.mode() != GeometryMode::Cart3D {
                    return Err(Error::UnsupportedMode { op: "interaction_morawetz", mode: grid.mode().as_str() });
                }
                let half = (2.0 * spec.radius).max(grid.extent());
                let build_grid = GridSpec::cartesian(spec.build_points, half)?;
                Some(MorawetzWeights::build_with(spec.radius, spec.sigma, &build_grid, false)?)
            }
            _ => None,
        };
        Ok(MonitorSet { enabled: config.monitors.clone(), virial_weight, virial_radius, morawetz, epsilon: config.epsilon })
    }

    fn sample(&self, state: &StatePair, report: &FunctionalReport, out: &mut Vec<(&'static str, f64)>) -> Result<()> {
        for m in &self.enabled {
            match m {
                Monitor::Virial => {
                    let w = self.virial_weight.as_ref().expect("built with the monitor");
                    out.push((series::VIRIAL, functionals::virial_quantity(state, &w.gradient)?));
                }
                Monitor::LocalMass => out.push((series::LOCAL_MASS, functionals::local_mass(state, self.virial_radius)?)),
                Monitor::WindowL5 => out.push((series::L5, functionals::local_lp(state, 5.0, f64::INFINITY))),
                Monitor::Coercivity => out.push((series::COERCIVITY, report.pohozaev + self.epsilon * report.kinetic)),
                Monitor::InteractionMorawetz => {
                    let w = self.morawetz.as_ref().expect("built with the monitor");
                    out.push((series::INTERACTION_MORAWETZ, functionals::interaction_morawetz(state, w)?));
                }
                Monitor::LocalL103 => {
                    out.push((series::LOCAL_L103, functionals::local_lp(state, 10.0 / 3.0, 0.5 * self.virial_radius)))
                }
                Monitor::Flux => {
                    out.push((series::NORM_U, spectral::l2_norm_sq(&state.u)));
                    out.push((series::NORM_V, spectral::l2_norm_sq(&state.v)));
                    out.push((series::FLUX_SOURCE, functionals::flux_source(state)));
                }
            }
        }
        Ok(())
    }
}

struct Recorder {
    record_reports: Vec<FunctionalReport>,
    series: BTreeMap<String, Vec<f64>>,
    z: Vec<f64>,
    m0: f64,
    e0: f64,
}

impl Recorder {
    fn push(&mut self, report: FunctionalReport, dt: f64, values: Vec<(&'static str, f64)>) {
        if let Some(&m) = values.iter().find(|(k, _)| *k == series::VIRIAL).map(|(_, v)| v) {
            // trapezoid in time for z(t) = ∫ |M|²
            let z = match (self.z.last(), self.series.get(series::VIRIAL).and_then(|s| s.last()), self.record_reports.last()) {
                (Some(&z0), Some(&m_prev), Some(prev)) => z0 + 0.5 * (report.time - prev.time) * (m * m + m_prev * m_prev),
                _ => 0.0,
            };
            self.z.push(z);
            self.series.entry(series::Z.into()).or_default().push(z);
        }
        self.series.entry(series::MASS_DRIFT.into()).or_default().push(relative_change(report.mass_3gamma, self.m0));
        self.series.entry(series::ENERGY_DRIFT.into()).or_default().push(relative_change(report.energy_mu, self.e0));
        self.series.entry(series::DT.into()).or_default().push(dt);
        for (k, v) in values {
            self.series.entry(k.into()).or_default().push(v);
        }
        self.record_reports.push(report);
    }
}

/// Runs the stepper from `state` to `config.t_end`.
///
/// Numerical faults end the run with [`Termination::NumericalFault`] and
/// keep everything recorded so far; use [`TrajectoryRecord::check`] to
/// turn that into an error.
pub fn evolve(state: &StatePair, config: &EvolutionConfig) -> Result<TrajectoryRecord> {
    config.validate()?;
    if !state.is_finite() {
        return Err(Error::NumericalFault { time: state.time, reason: "initial state is not finite".into() });
    }
    let grid = *state.grid();
    let margin = spectral::support_margin(&state.u).max(spectral::support_margin(&state.v));
    if margin > spectral::SUPPORT_MARGIN_TOL {
        return Err(Error::Validation(vec![format!(
            "initial data reaches the boundary shell (relative magnitude {margin:.3e})"
        )]));
    }
    let monitors = MonitorSet::new(&grid, config)?;

    let t0 = state.time;
    let t_end = t0 + config.t_end;
    let first = FunctionalReport::compute(state, config.omega)?;
    let mut rec = Recorder {
        record_reports: Vec::new(),
        series: BTreeMap::new(),
        z: Vec::new(),
        m0: first.mass_3gamma,
        e0: first.energy_mu,
    };
    let mut buf = Vec::new();
    monitors.sample(state, &first, &mut buf)?;
    rec.push(first, config.dt, std::mem::take(&mut buf));

    let mut snapshot_queue: Vec<f64> = config.snapshot_times.iter().map(|t| t0 + t).collect();
    snapshot_queue.sort_by(f64::total_cmp);
    let mut snapshots = Vec::new();
    let mut take_snapshots = |s: &StatePair, queue: &mut Vec<f64>| {
        while queue.first().is_some_and(|&t| t <= s.time + 1e-12) {
            queue.remove(0);
            snapshots.push(s.clone());
        }
    };
    take_snapshots(state, &mut snapshot_queue);

    let k0 = first.kinetic;
    let mut k_anchor = k0;
    let mut dt = config.dt;
    let mut cur = state.clone();
    let mut stepper = Stepper::new();
    let mut steps = 0usize;
    let mut termination = Termination::HorizonReached;
    let mut blowup = None;
    let mut fault = None;

    while cur.time < t_end - 1e-12 * config.t_end.max(1.0) {
        let h = dt.min(t_end - cur.time);
        let next = match stepper.step(&cur, h) {
            Ok(s) => s,
            Err(Error::NumericalFault { reason, .. }) => {
                termination = Termination::NumericalFault;
                fault = Some(reason);
                break;
            }
            Err(e) => return Err(e),
        };
        steps += 1;
        cur = next;
        let at_end = cur.time >= t_end - 1e-12 * config.t_end.max(1.0);
        if at_end {
            cur.time = t_end;
        }

        // K is needed every step for adaptivity, otherwise only at reports
        let is_report = steps % config.output_stride == 0 || at_end;
        let mut stop = None;
        if config.adapt.enabled || is_report {
            let k = functionals::kinetic(&cur)?;
            if !k.is_finite() {
                termination = Termination::NumericalFault;
                fault = Some("kinetic energy is not finite".into());
                break;
            }
            if k0 > 0.0 && k >= config.blowup_trigger * k0 {
                blowup = Some(BlowupEvent { time: cur.time, kinetic_ratio: k / k0, dt });
                stop = Some(Termination::BlowUpDetected);
            } else if config.adapt.enabled && k >= config.adapt.growth_trigger * k_anchor {
                k_anchor = k;
                dt *= 0.5;
                if dt < config.adapt.dt_floor {
                    blowup = Some(BlowupEvent { time: cur.time, kinetic_ratio: if k0 > 0.0 { k / k0 } else { f64::INFINITY }, dt });
                    stop = Some(Termination::DtFloor);
                }
            }
        }

        if is_report || stop.is_some() {
            let report = FunctionalReport::compute(&cur, config.omega)?;
            monitors.sample(&cur, &report, &mut buf)?;
            rec.push(report, dt, std::mem::take(&mut buf));
        }
        take_snapshots(&cur, &mut snapshot_queue);
        if let Some(t) = stop {
            termination = t;
            break;
        }
    }

    Ok(TrajectoryRecord {
        reports: rec.record_reports,
        monitor_series: rec.series,
        blowup,
        termination,
        fault,
        z_series: rec.z,
        virial_radius: monitors.virial_radius,
        morawetz_radius: monitors.morawetz.as_ref().map(|w| w.radius),
        epsilon: monitors.epsilon,
        geometry: grid.mode(),
        steps,
        snapshots,
        final_state: cur,
    })
}
