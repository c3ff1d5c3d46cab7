//! CSV results and the TOML sidecar that records how they were produced.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::{Table, Value};

use super::{ScenarioConfig, SweepResult};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 13] = [
    "scenario",
    "system",
    "N",
    "alpha1",
    "alpha2",
    "L1_km",
    "L2_km",
    "metric",
    "mean",
    "sd",
    "n",
    "converged_fraction",
    "seed",
];

/// One parsed CSV line.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub system: String,
    #[serde(rename = "N")]
    pub produced: u64,
    pub alpha1: f64,
    pub alpha2: Option<f64>,
    #[serde(rename = "L1_km")]
    pub l1_km: f64,
    #[serde(rename = "L2_km")]
    pub l2_km: Option<f64>,
    pub metric: String,
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
    pub converged_fraction: f64,
    pub seed: u64,
}

/// 17 significant digits, enough to read back the identical `f64`.
fn exact(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("toml")
}

/// Writes one CSV with every scenario's rows in order, plus the sidecar.
pub fn write_results_many(runs: &[(&ScenarioConfig, &SweepResult)], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(CSV_HEADER).map_err(csv_err(path))?;
    for (config, result) in runs {
        let alpha2 = config
            .fibers
            .get(1)
            .map(|f| f.alpha.to_string())
            .unwrap_or_default();
        let alpha1 = config.fibers[0].alpha.to_string();
        let produced = config.produced.to_string();
        let seed = config.seed.to_string();
        for (index, row) in result.cells.iter().enumerate() {
            let lengths = result.lengths_at(index);
            let l1 = lengths[0].to_string();
            let l2 = lengths.get(1).map(f64::to_string).unwrap_or_default();
            for (metric, cell) in result.metrics.iter().zip(row) {
                w.write_record([
                    config.scenario.as_str(),
                    config.system.name(),
                    &produced,
                    &alpha1,
                    &alpha2,
                    &l1,
                    &l2,
                    metric.name(),
                    &exact(cell.mean),
                    &exact(cell.sd),
                    &cell.n.to_string(),
                    &exact(cell.converged_fraction),
                    &seed,
                ])
                .map_err(csv_err(path))?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    let configs: Vec<&ScenarioConfig> = runs.iter().map(|(c, _)| *c).collect();
    write_sidecar(&configs, &sidecar_path(path))
}

pub fn write_results(result: &SweepResult, config: &ScenarioConfig, path: &Path) -> Result<()> {
    write_results_many(&[(config, result)], path)
}

fn write_sidecar(configs: &[&ScenarioConfig], path: &Path) -> Result<()> {
    let mut table = Table::new();
    table.insert(
        "code_version".into(),
        Value::String(env!("CARGO_PKG_VERSION").into()),
    );
    let scenarios = configs
        .iter()
        .map(|c| Value::try_from(c).map_err(|e| Error::Config(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    table.insert("run".into(), Value::Array(scenarios));
    let text = toml::to_string_pretty(&table).map_err(|e| Error::Config(e.to_string()))?;
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Config(format!(
            "{}: unexpected CSV header {:?}",
            path.display(),
            header.iter().collect::<Vec<_>>()
        )));
    }
    r.deserialize()
        .collect::<std::result::Result<Vec<ResultRow>, _>>()
        .map_err(csv_err(path))
}
