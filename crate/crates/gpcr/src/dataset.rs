//! JSON form of a hybrid dataset.
//!
//! ```json
//! {"dim": 1, "stable": [{"x": [0.1], "y": 0.5}], "unstable": [[0.7]]}
//! ```

use std::path::Path;

use gpcr_core::gpcr::HybridDataset;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StablePoint {
    pub x: Vec<f64>,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    pub dim: usize,
    pub stable: Vec<StablePoint>,
    pub unstable: Vec<Vec<f64>>,
}

impl From<&HybridDataset> for DatasetFile {
    fn from(d: &HybridDataset) -> Self {
        Self {
            dim: d.dim(),
            stable: d
                .stable_x()
                .iter()
                .zip(d.stable_y())
                .map(|(x, &y)| StablePoint { x: x.clone(), y })
                .collect(),
            unstable: d.unstable_x().to_vec(),
        }
    }
}

impl TryFrom<DatasetFile> for HybridDataset {
    type Error = CliError;

    fn try_from(f: DatasetFile) -> CliResult<Self> {
        let (xs, ys) = f.stable.into_iter().map(|p| (p.x, p.y)).unzip();
        HybridDataset::from_parts(f.dim, xs, ys, f.unstable).map_err(CliError::runtime)
    }
}

pub fn to_json(d: &HybridDataset) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(&DatasetFile::from(d))?)
}

pub fn from_json(s: &str) -> CliResult<HybridDataset> {
    serde_json::from_str::<DatasetFile>(s)?.try_into()
}

pub fn save(d: &HybridDataset, path: &Path) -> CliResult<()> {
    std::fs::write(path, to_json(d)?)?;
    Ok(())
}

pub fn load(path: &Path) -> CliResult<HybridDataset> {
    from_json(&std::fs::read_to_string(path)?)
}
