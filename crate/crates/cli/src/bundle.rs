//! Result-bundle layout for `optimize`: one directory, one artifact per
//! file, each independently consumable.

use std::fs::File;
use std::io;
use std::path::{Path, PathBuf};

use minpoly_core::consensus::ConsensusPlan;
use minpoly_core::laplacian::WeightMap;
use minpoly_core::minpoly::AlgorithmState;

use crate::formats::{self, LedgerFile, MatrixFile, PlanFile};

pub const LAPLACIAN_FILE: &str = "laplacian.json";
pub const WEIGHTS_FILE: &str = "weights.json";
pub const LEDGER_FILE: &str = "ledger.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const PLAN_FILE: &str = "plan.json";

/// Paths of everything a bundle holds.
pub fn artifact_paths(dir: &Path) -> [PathBuf; 5] {
    [
        dir.join(LAPLACIAN_FILE),
        dir.join(WEIGHTS_FILE),
        dir.join(LEDGER_FILE),
        dir.join(HISTORY_FILE),
        dir.join(PLAN_FILE),
    ]
}

fn create(dir: &Path, name: &str) -> io::Result<File> {
    File::create(dir.join(name))
}

/// Writes the final Laplacian, its edge weights, the confirmed-eigenvalue
/// ledger, the per-pass history table, and the consensus plan into `dir`,
/// creating the directory if needed.
pub fn write_bundle(
    dir: &Path,
    state: &AlgorithmState,
    weights: &WeightMap,
    plan: &ConsensusPlan,
) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    formats::write_json(
        create(dir, LAPLACIAN_FILE)?,
        &MatrixFile::from_sym(state.laplacian()),
    )?;
    formats::write_json(create(dir, WEIGHTS_FILE)?, &formats::weight_entries(weights))?;
    formats::write_json(create(dir, LEDGER_FILE)?, &LedgerFile::from_ledger(state.ledger()))?;
    formats::write_history_csv(create(dir, HISTORY_FILE)?, state.history())
        .map_err(io::Error::other)?;
    formats::write_json(
        create(dir, PLAN_FILE)?,
        &PlanFile::from_plan(state.graph(), plan),
    )?;
    Ok(())
}
