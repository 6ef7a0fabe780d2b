//! Experiment configuration: TOML with one table per stage.
//!
//! ```toml
//! [grid]
//! mode = "radial"          # radial | cartesian | cylindrical
//! points = 1024            # radial / cartesian points per axis
//! extent = 24.0
//!
//! [params]
//! gamma = 3.0
//! mu = 9.0                 # defaults to 3 * gamma
//!
//! [initial]
//! kind = "ground_state"    # gaussian | ground_state | snapshot
//! scale = 0.5
//!
//! [evolve]
//! dt = 1e-3
//! t_end = 4.0
//! monitors = ["virial", "coercivity"]
//!
//! [evolve.adapt]
//! enabled = true
//! ```
//!
//! Every key outside the schema is reported at once by [`ExperimentConfig::parse`].

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classify::{ClassifyOptions, EnergyConvention, Symmetry};
use crate::error::{Error, Result};
use crate::evolution::{AdaptConfig, EvolutionConfig, Monitor, MorawetzSpec};
use crate::field::{ComplexField, StatePair};
use crate::grid::{GeometryMode, GridSpec};
use crate::groundstate::{GroundStateSolution, SolverOptions};
use crate::spectral::snapshot;

/// Environment variable that may override the output directory.
pub const OUTPUT_ENV: &str = "SNLS_OUT";

const SCHEMA: &[(&str, &[&str])] = &[
    ("", &["grid", "params", "groundstate", "initial", "evolve", "classify", "weights", "report", "output"]),
    ("grid", &["mode", "points", "extent", "rho_points", "z_points", "rho_extent", "z_extent"]),
    ("params", &["gamma", "mu"]),
    ("groundstate", &["tol", "max_iter", "seed"]),
    ("initial", &["kind", "amplitudes", "width", "center", "boost", "scale", "snapshot"]),
    (
        "evolve",
        &[
            "dt",
            "t_end",
            "output_stride",
            "monitors",
            "epsilon",
            "blowup_trigger",
            "virial_radius",
            "snapshot_times",
            "omega",
            "adapt",
            "morawetz",
        ],
    ),
    ("evolve.adapt", &["enabled", "growth_trigger", "dt_floor"]),
    ("evolve.morawetz", &["radius", "sigma", "build_points"]),
    ("classify", &["symmetry", "band", "energy_convention", "constants"]),
    ("weights", &["radius", "sigma", "points", "extent"]),
    ("report", &["series", "trajectory"]),
    ("output", &["dir"]),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub mode: String,
    pub points: usize,
    pub extent: f64,
    pub rho_points: usize,
    pub z_points: usize,
    pub rho_extent: f64,
    pub z_extent: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            mode: "radial".into(),
            points: 1024,
            extent: 24.0,
            rho_points: 128,
            z_points: 128,
            rho_extent: 12.0,
            z_extent: 12.0,
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<GridSpec> {
        match self.mode.as_str() {
            "radial" => GridSpec::radial(self.points, self.extent),
            "cartesian" => GridSpec::cartesian(self.points, self.extent),
            "cylindrical" => GridSpec::cylindrical(self.rho_points, self.z_points, self.rho_extent, self.z_extent),
            other => Err(Error::Validation(vec![format!(
                "grid.mode must be radial, cartesian or cylindrical, got `{other}`"
            )])),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    pub gamma: f64,
    pub mu: Option<f64>,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        ParamsConfig { gamma: 3.0, mu: None }
    }
}

impl ParamsConfig {
    pub fn mu(&self) -> f64 {
        self.mu.unwrap_or(3.0 * self.gamma)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroundStateConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: [f64; 2],
}

impl Default for GroundStateConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        GroundStateConfig { tol: d.tol, max_iter: d.max_iter, seed: [d.seed_amplitudes.0, d.seed_amplitudes.1] }
    }
}

impl GroundStateConfig {
    pub fn options(&self) -> SolverOptions {
        SolverOptions { tol: self.tol, max_iter: self.max_iter, seed_amplitudes: (self.seed[0], self.seed[1]) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub kind: String,
    /// `(a, b)` of `(a e^{-|x-c|²/w²}, b e^{-|x-c|²/w²})`.
    pub amplitudes: [f64; 2],
    pub width: f64,
    pub center: [f64; 3],
    /// Phase `e^{ix·ξ}` on `u` and `e^{3ix·ξ}` on `v`.
    pub boost: [f64; 3],
    pub scale: f64,
    pub snapshot: Option<PathBuf>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            kind: "gaussian".into(),
            amplitudes: [1.0, 0.5],
            width: 1.0,
            center: [0.0; 3],
            boost: [0.0; 3],
            scale: 1.0,
            snapshot: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaptSection {
    pub enabled: bool,
    pub growth_trigger: f64,
    pub dt_floor: f64,
}

impl Default for AdaptSection {
    fn default() -> Self {
        let d = AdaptConfig::default();
        AdaptSection { enabled: d.enabled, growth_trigger: d.growth_trigger, dt_floor: d.dt_floor }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MorawetzSection {
    pub radius: f64,
    pub sigma: f64,
    pub build_points: usize,
}

impl Default for MorawetzSection {
    fn default() -> Self {
        MorawetzSection { radius: 4.0, sigma: 0.1, build_points: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_end: f64,
    pub output_stride: usize,
    pub monitors: Vec<String>,
    pub epsilon: f64,
    pub blowup_trigger: f64,
    pub virial_radius: Option<f64>,
    pub snapshot_times: Vec<f64>,
    pub omega: f64,
    pub adapt: AdaptSection,
    pub morawetz: Option<MorawetzSection>,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        let d = EvolutionConfig::new(1e-3, 1.0);
        EvolveConfig {
            dt: d.dt,
            t_end: d.t_end,
            output_stride: 10,
            monitors: Vec::new(),
            epsilon: d.epsilon,
            blowup_trigger: d.blowup_trigger,
            virial_radius: None,
            snapshot_times: Vec::new(),
            omega: 0.0,
            adapt: AdaptSection::default(),
            morawetz: None,
        }
    }
}

impl EvolveConfig {
    pub fn build(&self) -> Result<EvolutionConfig> {
        let monitors = self.monitors.iter().map(|m| m.parse::<Monitor>()).collect::<Result<BTreeSet<_>>>()?;
        let cfg = EvolutionConfig {
            dt: self.dt,
            t_end: self.t_end,
            output_stride: self.output_stride,
            adapt: AdaptConfig {
                enabled: self.adapt.enabled,
                growth_trigger: self.adapt.growth_trigger,
                dt_floor: self.adapt.dt_floor,
            },
            monitors,
            virial_radius: self.virial_radius,
            morawetz: self.morawetz.as_ref().map(|m| MorawetzSpec {
                radius: m.radius,
                sigma: m.sigma,
                build_points: m.build_points,
            }),
            epsilon: self.epsilon,
            blowup_trigger: self.blowup_trigger,
            omega: self.omega,
            snapshot_times: self.snapshot_times.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyConfig {
    /// Defaults to `radial` on radial grids, `cylindrical` on cylindrical
    /// grids and `none` otherwise.
    pub symmetry: Option<Symmetry>,
    pub band: f64,
    pub energy_convention: EnergyConvention,
    /// Ground-state constants JSON; solved on the fly when absent.
    pub constants: Option<PathBuf>,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        let d = ClassifyOptions::default();
        ClassifyConfig { symmetry: None, band: d.band, energy_convention: d.convention, constants: None }
    }
}

impl ClassifyConfig {
    pub fn options(&self) -> ClassifyOptions {
        ClassifyOptions { band: self.band, convention: self.energy_convention }
    }

    pub fn symmetry_for(&self, grid: &GridSpec) -> Symmetry {
        self.symmetry.unwrap_or(match grid.mode() {
            GeometryMode::Radial3D => Symmetry::Radial,
            GeometryMode::Cyl3D => Symmetry::Cylindrical,
            GeometryMode::Cart3D => Symmetry::None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightsConfig {
    pub radius: f64,
    pub sigma: f64,
    pub points: usize,
    /// Half-width of the Cartesian build grid; defaults to `2R`.
    pub extent: Option<f64>,
}

impl Default for WeightsConfig {
    fn default() -> Self {
        WeightsConfig { radius: 4.0, sigma: 0.1, points: 64, extent: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportConfig {
    pub series: Vec<String>,
    /// Row-JSON trajectory log to read; defaults to `<out>/trajectory.jsonl`.
    pub trajectory: Option<PathBuf>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig { series: vec!["all".into()], trajectory: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub params: ParamsConfig,
    pub groundstate: GroundStateConfig,
    pub initial: InitialConfig,
    pub evolve: EvolveConfig,
    pub classify: ClassifyConfig,
    pub weights: WeightsConfig,
    pub report: ReportConfig,
    pub output: OutputConfig,
}

fn unknown_keys(table: &toml::Table, section: &str, out: &mut Vec<String>) {
    let Some((_, known)) = SCHEMA.iter().find(|(s, _)| *s == section) else {
        return;
    };
    for (k, v) in table {
        let path = if section.is_empty() { k.clone() } else { format!("{section}.{k}") };
        if !known.contains(&k.as_str()) {
            out.push(path);
        } else if let toml::Value::Table(t) = v {
            unknown_keys(t, &path, out);
        }
    }
}

impl ExperimentConfig {
    /// Parses TOML text; an empty document and unknown keys are validation
    /// errors.
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Validation(vec![e.to_string()]))?;
        if table.is_empty() {
            return Err(Error::Validation(vec!["configuration is empty".into()]));
        }
        let mut unknown = Vec::new();
        unknown_keys(&table, "", &mut unknown);
        if !unknown.is_empty() {
            return Err(Error::Validation(unknown.into_iter().map(|k| format!("unknown key `{k}`")).collect()));
        }
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| Error::Validation(vec![e.to_string()]))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// SHA-256 of the canonical JSON form of the effective configuration,
    /// leaving out the output location.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output = OutputConfig::default();
        let canonical = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn grid(&self) -> Result<GridSpec> {
        self.grid.build()
    }

    /// Builds the initial pair. `gs` is required for `kind = "ground_state"`.
    pub fn initial_state(&self, grid: &GridSpec, gs: Option<&GroundStateSolution>) -> Result<StatePair> {
        let (gamma, mu) = (self.params.gamma, self.params.mu());
        let ini = &self.initial;
        let base = match ini.kind.as_str() {
            "gaussian" => {
                if !(ini.width > 0.0) {
                    return Err(Error::Validation(vec![format!("initial.width must be positive, got {}", ini.width)]));
                }
                let c = ini.center;
                let w2 = ini.width * ini.width;
                let e = move |p: [f64; 3]| {
                    let d = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
                    (-(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / w2).exp()
                };
                let [a, b] = ini.amplitudes;
                StatePair::new(
                    ComplexField::from_fn(*grid, |p| Complex64::new(a * e(p), 0.0))?,
                    ComplexField::from_fn(*grid, |p| Complex64::new(b * e(p), 0.0))?,
                    gamma,
                    mu,
                )?
            }
            "ground_state" => {
                let gs = gs.ok_or_else(|| Error::Validation(vec!["initial.kind = ground_state needs a ground state".into()]))?;
                if gs.phi.grid() != grid {
                    return Err(Error::Validation(vec!["initial.kind = ground_state needs a radial grid".into()]));
                }
                StatePair::new(gs.phi.clone(), gs.psi.clone(), gamma, mu)?
            }
            "snapshot" => {
                let path = ini
                    .snapshot
                    .as_ref()
                    .ok_or_else(|| Error::Validation(vec!["initial.kind = snapshot needs initial.snapshot".into()]))?;
                snapshot::read_pair(path, gamma, mu)?
            }
            other => {
                return Err(Error::Validation(vec![format!(
                    "initial.kind must be gaussian, ground_state or snapshot, got `{other}`"
                )]))
            }
        };
        let mut state = base.scaled(ini.scale);
        if ini.boost != [0.0; 3] {
            if grid.mode() != GeometryMode::Cart3D {
                return Err(Error::Validation(vec!["initial.boost needs a cartesian grid".into()]));
            }
            let xi = ini.boost;
            let pos = grid.positions();
            for ((u, v), p) in state.u.samples_mut().iter_mut().zip(state.v.samples_mut().iter_mut()).zip(&pos) {
                let th = xi[0] * p[0] + xi[1] * p[1] + xi[2] * p[2];
                *u *= Complex64::from_polar(1.0, th);
                *v *= Complex64::from_polar(1.0, 3.0 * th);
            }
        }
        Ok(state)
    }
}
