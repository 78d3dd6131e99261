//! CSV results and the JSON sidecar.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::sweep::{ResultRow, RowStatus, SweepOutcome};
use crate::LabError;

pub const CSV_HEADER: [&str; 17] = [
    "alpha",
    "px",
    "py",
    "pt",
    "subdomains",
    "cells_per_subdomain",
    "steps_per_slab",
    "cfl_beta",
    "cfl_nu",
    "peclet",
    "linear_iterations",
    "picard_iterations",
    "local_solves",
    "setup_seconds",
    "solve_seconds",
    "l2_error",
    "oracle_difference",
];

/// Writes the header and one line per row. An empty slice gives a
/// header-only file.
pub fn write_csv<W: Write>(out: W, rows: &[ResultRow]) -> Result<(), LabError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Sidecar<'a> {
    config: &'a ExperimentConfig,
    columns: &'a [&'a str],
    status: &'a [RowStatus],
}

/// `results.csv` -> `results.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Writes the CSV and its sidecar carrying the resolved configuration.
pub fn write_outputs(cfg: &ExperimentConfig, outcome: &SweepOutcome) -> Result<(), LabError> {
    if let Some(dir) = cfg.output.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_csv(std::fs::File::create(&cfg.output)?, &outcome.rows)?;
    let sidecar = Sidecar { config: cfg, columns: &CSV_HEADER, status: &outcome.status };
    let file = std::fs::File::create(sidecar_path(&cfg.output))?;
    serde_json::to_writer_pretty(file, &sidecar)?;
    Ok(())
}
