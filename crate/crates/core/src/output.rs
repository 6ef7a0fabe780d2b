//! Run manifests and plot-ready series files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::TrajectoryRecord;
use crate::functionals::FunctionalReport;
use crate::grid::GridSpec;
use crate::groundstate::GroundStateConstants;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Short names accepted in a series selection.
pub const ALIASES: &[(&str, &str)] = &[("energy", "energy_mu"), ("mass", "mass_3gamma"), ("kinetic", "kinetic")];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub mode: String,
    pub counts: [usize; 3],
    pub extents: [f64; 3],
}

impl From<&GridSpec> for GridSummary {
    fn from(g: &GridSpec) -> Self {
        GridSummary { mode: g.mode().as_str().to_string(), counts: g.counts(), extents: g.extents() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub grid: GridSummary,
    pub gamma: f64,
    pub mu: f64,
    pub ground_state: Option<GroundStateConstants>,
    pub outputs: Vec<String>,
    pub tool_version: String,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// Named columns sharing one time axis.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeriesTable {
    pub time: Vec<f64>,
    pub columns: BTreeMap<String, Vec<f64>>,
}

impl SeriesTable {
    pub fn from_record(record: &TrajectoryRecord) -> Result<Self> {
        let mut columns = BTreeMap::new();
        for name in record.series_names() {
            columns.insert(name.clone(), record.series(&name)?);
        }
        Ok(SeriesTable { time: record.times(), columns })
    }

    /// Reads the row-JSON log written by `evolve`.
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut table = SeriesTable::default();
        for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let row: BTreeMap<String, serde_json::Value> = serde_json::from_str(line)?;
            let num = |k: &str, v: &serde_json::Value| {
                v.as_f64().ok_or_else(|| Error::Validation(vec![format!("line {}: `{k}` is not a number", n + 1)]))
            };
            for (k, v) in &row {
                if k == "time" {
                    table.time.push(num(k, v)?);
                } else {
                    table.columns.entry(k.clone()).or_default().push(num(k, v)?);
                }
            }
        }
        if table.columns.values().any(|c| c.len() != table.time.len()) {
            return Err(Error::Validation(vec!["trajectory rows have differing columns".into()]));
        }
        Ok(table)
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.keys().cloned().collect()
    }

    fn resolve(&self, name: &str) -> Result<String> {
        let name = ALIASES.iter().find(|(a, _)| *a == name).map_or(name, |(_, full)| full);
        if self.columns.contains_key(name) {
            Ok(name.to_string())
        } else {
            Err(Error::UnknownSeries(name.to_string()))
        }
    }
}

/// Writes `<dir>/<name>.dat` per selected series: a `# time <name>` header
/// and two whitespace-separated columns with 17 significant digits.
/// `"all"` selects every series. Unknown names fail before anything is
/// written.
pub fn emit_plot_data(table: &SeriesTable, selection: &[String], dir: &Path) -> Result<Vec<PathBuf>> {
    let mut names = Vec::new();
    for s in selection {
        if s == "all" {
            names.extend(table.names());
        } else {
            names.push(table.resolve(s)?);
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    names.retain(|n| seen.insert(n.clone()));
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for name in names {
        let col = &table.columns[&name];
        let mut text = format!("# time {name}\n");
        for (t, y) in table.time.iter().zip(col) {
            text.push_str(&format!("{t:.16e} {y:.16e}\n"));
        }
        let path = dir.join(format!("{name}.dat"));
        fs::write(&path, text)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Reads a file written by [`emit_plot_data`] into `(name, times, values)`.
pub fn read_plot_data(path: &Path) -> Result<(String, Vec<f64>, Vec<f64>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let name = header
        .strip_prefix("# time ")
        .ok_or_else(|| Error::Validation(vec![format!("{}: bad header `{header}`", path.display())]))?
        .to_string();
    let (mut ts, mut ys) = (Vec::new(), Vec::new());
    for line in lines {
        let mut it = line.split_whitespace().map(str::parse::<f64>);
        match (it.next(), it.next()) {
            (Some(Ok(t)), Some(Ok(y))) => {
                ts.push(t);
                ys.push(y);
            }
            _ => return Err(Error::Validation(vec![format!("{}: bad row `{line}`", path.display())])),
        }
    }
    Ok((name, ts, ys))
}

/// Writes `constants.json`.
pub fn write_constants(dir: &Path, constants: &GroundStateConstants) -> Result<PathBuf> {
    let path = dir.join("constants.json");
    fs::write(&path, serde_json::to_string_pretty(constants)?)?;
    Ok(path)
}

pub fn read_constants(path: &Path) -> Result<GroundStateConstants> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Writes `reports.csv` and `trajectory.jsonl`.
pub fn write_trajectory(dir: &Path, record: &TrajectoryRecord) -> Result<Vec<PathBuf>> {
    let csv = dir.join("reports.csv");
    fs::write(&csv, record.to_csv())?;
    let jsonl = dir.join("trajectory.jsonl");
    let mut text = String::new();
    for row in record.rows() {
        text.push_str(&serde_json::to_string(&row)?);
        text.push('\n');
    }
    fs::write(&jsonl, text)?;
    Ok(vec![csv, jsonl])
}

/// Report fields that are always present in a table.
pub fn report_fields() -> &'static [&'static str] {
    &FunctionalReport::FIELDS[1..]
}
