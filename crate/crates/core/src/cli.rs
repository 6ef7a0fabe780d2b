//! `snls` command line: `groundstate`, `evolve`, `classify`, `verify`,
//! `weights` and `report`.
//!
//! Exit codes: 0 success, 1 other failure, 2 invalid configuration or
//! arguments, 3 numerical fault during evolution.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::classify::{classify, validate_symmetry};
use crate::config::{ExperimentConfig, OUTPUT_ENV};
use crate::error::{Error, Result};
use crate::evolution::{evolve, Termination};
use crate::grid::{GeometryMode, GridSpec};
use crate::groundstate::{
    gn_constant, gn_test, random_sample, solve_ground_state, threshold_constants, GroundStateConstants,
    GroundStateSolution,
};
use crate::output::{self, GridSummary, RunManifest, SeriesTable, TOOL_VERSION};
use crate::spectral::snapshot;
use crate::weights::MorawetzWeights;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_FAULT: i32 = 3;

/// Grid used for on-the-fly ground states when the run grid is not radial.
const FALLBACK_GS_GRID: (usize, f64) = (4096, 16.0);

#[derive(Debug, Parser)]
#[command(name = "snls", version, about = "Ground states, evolution and threshold classification for a coupled cubic NLS pair")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the ground state and write its constants and profile.
    Groundstate,
    /// Evolve the configured initial data.
    Evolve,
    /// Classify the configured initial data against the ground state.
    Classify,
    /// Sharp-constant audit on seeded random samples.
    Verify {
        #[arg(long, default_value_t = 16)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build, check and export the interaction-Morawetz weights.
    Weights,
    /// Write plot files from a trajectory log.
    Report {
        /// Series to write (aliases: energy, mass, kinetic; `all` for every series).
        #[arg(long, value_delimiter = ',')]
        series: Vec<String>,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides SNLS_OUT and the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// CRF1 pair: the seed for `groundstate`, the initial data otherwise.
    #[arg(long, global = true)]
    pub seed_snapshot: Option<PathBuf>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    /// Points per axis (radial or Cartesian grids).
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Half-width of the computational domain.
    #[arg(long, global = true)]
    pub extent: Option<f64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    #[arg(long, global = true)]
    pub t_end: Option<f64>,
}

impl CommonArgs {
    fn resolve(&self, command: &Command) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(g) = self.gamma {
            cfg.params.gamma = g;
        }
        if self.mu.is_some() {
            cfg.params.mu = self.mu;
        }
        if let Some(n) = self.grid {
            cfg.grid.points = n;
        }
        if let Some(l) = self.extent {
            cfg.grid.extent = l;
        }
        if let Some(dt) = self.dt {
            cfg.evolve.dt = dt;
        }
        if let Some(t) = self.t_end {
            cfg.evolve.t_end = t;
        }
        if let (Some(p), false) = (&self.seed_snapshot, matches!(command, Command::Groundstate)) {
            cfg.initial.kind = "snapshot".into();
            cfg.initial.snapshot = Some(p.clone());
        }
        if let Some(o) = &self.out {
            cfg.output.dir = o.clone();
        } else if let Some(o) = std::env::var_os(OUTPUT_ENV) {
            cfg.output.dir = PathBuf::from(o);
        }
        Ok(cfg)
    }
}

/// Maps an error to its exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Validation(_) | Error::Configuration(_) | Error::UnknownSeries(_) | Error::UnsupportedMode { .. } => {
            EXIT_VALIDATION
        }
        Error::NumericalFault { .. } => EXIT_FAULT,
        _ => EXIT_FAILURE,
    }
}

/// Parses `args` (program name first), runs and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

struct Ctx {
    cfg: ExperimentConfig,
    out: PathBuf,
    seed_snapshot: Option<PathBuf>,
}

impl Ctx {
    fn gamma(&self) -> f64 {
        self.cfg.params.gamma
    }

    fn mu(&self) -> f64 {
        self.cfg.params.mu()
    }

    fn manifest(&self, command: &str, grid: &GridSpec, gs: Option<GroundStateConstants>, outputs: &[PathBuf]) -> Result<()> {
        let mut names: Vec<String> = outputs
            .iter()
            .map(|p| p.strip_prefix(&self.out).unwrap_or(p).display().to_string())
            .collect();
        names.push("manifest.json".into());
        RunManifest {
            command: command.into(),
            config_digest: self.cfg.digest(),
            grid: GridSummary::from(grid),
            gamma: self.gamma(),
            mu: self.mu(),
            ground_state: gs,
            outputs: names,
            tool_version: TOOL_VERSION.into(),
        }
        .write(&self.out)?;
        Ok(())
    }

    /// Ground state on the run grid when radial, else on the fallback grid.
    fn ground_state(&self, grid: &GridSpec, seed: Option<&Path>) -> Result<GroundStateSolution> {
        let gs_grid = if grid.mode() == GeometryMode::Radial3D {
            *grid
        } else {
            GridSpec::radial(FALLBACK_GS_GRID.0, FALLBACK_GS_GRID.1)?
        };
        let seed_pair = seed.map(|p| snapshot::read_pair(p, self.gamma(), 3.0 * self.gamma())).transpose()?;
        let gs = solve_ground_state(
            self.gamma(),
            &gs_grid,
            seed_pair.as_ref().map(|s| (&s.u, &s.v)),
            &self.cfg.groundstate.options(),
        )?;
        if !gs.converged() {
            return Err(Error::Convergence {
                iterations: gs.iterations,
                last: gs.residual_1.max(gs.residual_2),
                history: gs.residual_history.clone(),
            });
        }
        Ok(gs)
    }

    fn constants(&self, grid: &GridSpec) -> Result<GroundStateConstants> {
        match &self.cfg.classify.constants {
            Some(p) => output::read_constants(p),
            None => Ok(self.ground_state(grid, None)?.constants),
        }
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<PathBuf> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(path.to_path_buf())
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = cli.common.resolve(&cli.command)?;
    let out = cfg.output.dir.clone();
    fs::create_dir_all(&out)?;
    let ctx = Ctx { cfg, out, seed_snapshot: cli.common.seed_snapshot.clone() };
    let grid = ctx.cfg.grid()?;
    match &cli.command {
        Command::Groundstate => cmd_groundstate(&ctx, &grid),
        Command::Evolve => cmd_evolve(&ctx, &grid),
        Command::Classify => cmd_classify(&ctx, &grid),
        Command::Verify { samples, seed } => cmd_verify(&ctx, &grid, *samples, *seed),
        Command::Weights => cmd_weights(&ctx),
        Command::Report { series } => cmd_report(&ctx, &grid, series),
    }
}

fn cmd_groundstate(ctx: &Ctx, grid: &GridSpec) -> Result<()> {
    let gs = ctx.ground_state(grid, ctx.seed_snapshot.as_deref())?;
    let c = gn_constant(&gs)?;
    let t = threshold_constants(&gs)?;
    let mut outputs = vec![output::write_constants(&ctx.out, &gs.constants)?];
    let profile = ctx.out.join("groundstate.crf");
    snapshot::write_pair(&profile, &gs.state())?;
    outputs.push(profile);
    outputs.push(write_json(
        &ctx.out.join("groundstate_report.json"),
        &serde_json::json!({
            "branch": format!("{:?}", gs.branch),
            "gn_constant": c,
            "thresholds": t,
            "pohozaev_ratios": gs.pohozaev_ratios(),
        }),
    )?);
    ctx.manifest("groundstate", gs.phi.grid(), Some(gs.constants), &outputs)?;
    let k = &gs.constants;
    println!(
        "ground state: branch {:?}, K = {:.10e}, M = {:.10e}, P = {:.10e}, C_opt = {:.10e}, {} iterations",
        gs.branch, k.k_gs, k.m_gs, k.p_gs, k.c_opt, k.iterations
    );
    Ok(())
}

fn cmd_evolve(ctx: &Ctx, grid: &GridSpec) -> Result<()> {
    let evo = ctx.cfg.evolve.build()?;
    let gs = if ctx.cfg.initial.kind == "ground_state" { Some(ctx.ground_state(grid, None)?) } else { None };
    let state = ctx.cfg.initial_state(grid, gs.as_ref())?;
    let record = evolve(&state, &evo)?;
    let mut outputs = output::write_trajectory(&ctx.out, &record)?;
    for (i, snap) in record.snapshots.iter().enumerate() {
        let p = ctx.out.join(format!("snapshot_{i:03}.crf"));
        snapshot::write_pair(&p, snap)?;
        outputs.push(p);
    }
    let fin = ctx.out.join("final.crf");
    snapshot::write_pair(&fin, &record.final_state)?;
    outputs.push(fin);
    outputs.push(write_json(
        &ctx.out.join("summary.json"),
        &serde_json::json!({
            "termination": record.termination,
            "fault": record.fault,
            "blowup": record.blowup,
            "steps": record.steps,
            "final_time": record.final_state.time,
            "blowup_estimate": record.blowup_estimate(),
        }),
    )?);
    ctx.manifest("evolve", grid, gs.map(|g| g.constants), &outputs)?;
    println!(
        "evolve: {:?} at t = {:.6e} after {} steps",
        record.termination, record.final_state.time, record.steps
    );
    if let Some(b) = &record.blowup {
        println!("blow-up trigger at t = {:.6e} (K/K0 = {:.3e})", b.time, b.kinetic_ratio);
    }
    if record.termination == Termination::NumericalFault {
        record.check()?;
    }
    Ok(())
}

fn cmd_classify(ctx: &Ctx, grid: &GridSpec) -> Result<()> {
    let constants = ctx.constants(grid)?;
    let gs = if ctx.cfg.initial.kind == "ground_state" { Some(ctx.ground_state(grid, None)?) } else { None };
    let state = ctx.cfg.initial_state(grid, gs.as_ref())?;
    let symmetry = ctx.cfg.classify.symmetry_for(grid);
    let check = validate_symmetry(&state, symmetry)?;
    if !check.passed {
        return Err(Error::Validation(vec![format!(
            "initial data are not {symmetry:?}-symmetric (deviation {:.3e})",
            check.max_deviation
        )]));
    }
    let verdict = classify(&state, &constants, symmetry, &ctx.cfg.classify.options())?;
    let outputs = vec![
        write_json(&ctx.out.join("verdict.json"), &serde_json::json!({ "verdict": verdict, "symmetry_check": check }))?,
        output::write_constants(&ctx.out, &constants)?,
    ];
    ctx.manifest("classify", grid, Some(constants), &outputs)?;
    println!("verdict: {:?} ({:?}), caveats {:?}", verdict.kind, verdict.basis, verdict.caveats);
    Ok(())
}

fn cmd_verify(ctx: &Ctx, grid: &GridSpec, samples: usize, seed: u64) -> Result<()> {
    let constants = ctx.constants(grid)?;
    let boosts = [([0.0; 3], [0.0; 3]), ([0.3, 0.0, 0.0], [0.9, 0.0, 0.0]), ([0.0, 0.5, -0.2], [0.0, 1.5, -0.6])];
    let mut reports = Vec::with_capacity(samples);
    let mut worst = f64::INFINITY;
    let mut failures = 0;
    for i in 0..samples {
        let s = random_sample(grid, ctx.gamma(), ctx.mu(), seed.wrapping_add(i as u64))?;
        let boosts: &[_] = if grid.mode() == GeometryMode::Cart3D { &boosts } else { &boosts[..1] };
        let r = gn_test(&s, &constants, boosts)?;
        worst = worst.min(r.slack);
        failures += usize::from(!r.holds) + r.refined.iter().filter(|c| !c.holds).count();
        reports.push(r);
    }
    let outputs = vec![write_json(
        &ctx.out.join("verify.json"),
        &serde_json::json!({ "samples": samples, "seed": seed, "min_slack": worst, "failures": failures, "reports": reports }),
    )?];
    ctx.manifest("verify", grid, Some(constants), &outputs)?;
    println!("verify: {samples} samples, min slack {worst:.3e}, {failures} failures");
    if failures > 0 {
        return Err(Error::Validation(vec![format!("{failures} inequality checks failed")]));
    }
    Ok(())
}

fn cmd_weights(ctx: &Ctx) -> Result<()> {
    let w = &ctx.cfg.weights;
    let grid = GridSpec::cartesian(w.points, w.extent.unwrap_or(2.0 * w.radius))?;
    let weights = MorawetzWeights::build(w.radius, w.sigma, &grid)?;
    let mut outputs = weights.export(&ctx.out.join("weights"))?;
    outputs.push(write_json(&ctx.out.join("weights_check.json"), &weights.verify())?);
    ctx.manifest("weights", &grid, None, &outputs)?;
    println!("weights: R = {}, sigma = {}, {} table entries", w.radius, w.sigma, weights.phi.len());
    Ok(())
}

fn cmd_report(ctx: &Ctx, grid: &GridSpec, series: &[String]) -> Result<()> {
    let path = ctx.cfg.report.trajectory.clone().unwrap_or_else(|| ctx.out.join("trajectory.jsonl"));
    let table = SeriesTable::from_jsonl(&fs::read_to_string(&path)?)?;
    let selection = if series.is_empty() { ctx.cfg.report.series.clone() } else { series.to_vec() };
    let outputs = output::emit_plot_data(&table, &selection, &ctx.out.join("plots"))?;
    ctx.manifest("report", grid, None, &outputs)?;
    println!("report: {} files in {}", outputs.len(), ctx.out.join("plots").display());
    Ok(())
}
