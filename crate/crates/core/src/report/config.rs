use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::apex::HealthMonitorTable;
use crate::timebase::{ClockKind, CostTable, Rate};
use crate::workloads::{WorkloadData, WorkloadError};

/// Optional dataset files replacing the seeded defaults.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetPaths {
    /// P2 or P5 PGM, 8-bit.
    pub image: Option<PathBuf>,
    /// Edge list: `nodes N`, then `from to weight` per line.
    pub graph: Option<PathBuf>,
    /// Raw signed 16-bit little-endian PCM.
    pub signal: Option<PathBuf>,
}

impl DatasetPaths {
    /// Seeded defaults with any configured file swapped in.
    pub fn build(&self, seed: u64) -> Result<WorkloadData, WorkloadError> {
        let mut data = WorkloadData::generate(seed);
        if let Some(p) = &self.image {
            data.image = WorkloadData::load_image(p)?;
        }
        if let Some(p) = &self.graph {
            data.graph = WorkloadData::load_graph(p)?;
        }
        if let Some(p) = &self.signal {
            data.signal = WorkloadData::load_signal(p)?;
        }
        Ok(data)
    }
}

/// The `--config` file: TOML with the platform keys of the system
/// configuration plus run selection. Command-line flags win over it.
///
/// ```toml
/// group = "grey"
/// clock = "virtual"
/// ticks_per_us = "75"
/// iterations = 200
/// seed = 7
///
/// [costs]
/// process_switch_cost = 150
/// [costs.ops]
/// WAIT_SEMAPHORE = 130
///
/// [datasets]
/// image = "lena.pgm"
/// ```
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub benches: Vec<String>,
    pub group: Option<String>,
    pub clock: Option<ClockKind>,
    pub ticks_per_us: Option<Rate>,
    pub process_cap: Option<usize>,
    pub iterations: Option<u32>,
    pub seed: Option<u64>,
    /// Processes taking part in the process switch test.
    pub process_count: Option<usize>,
    pub costs: Option<CostTable>,
    pub health_monitor: Option<HealthMonitorTable>,
    pub datasets: DatasetPaths,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}
