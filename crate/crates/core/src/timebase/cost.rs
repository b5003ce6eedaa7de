use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Tick;

/// Names of the synthetic work units that workload kernels charge per
/// operation in virtual mode.
pub mod work {
    pub const CHECKSUM_BYTE: &str = "WORK_CHECKSUM_BYTE";
    pub const CRC_BYTE: &str = "WORK_CRC_BYTE";
    pub const ADPCM_SAMPLE: &str = "WORK_ADPCM_SAMPLE";
    pub const SOBEL_PIXEL: &str = "WORK_SOBEL_PIXEL";
    pub const DIJKSTRA_STEP: &str = "WORK_DIJKSTRA_STEP";
    pub const MATMUL_MAC: &str = "WORK_MATMUL_MAC";
}

/// Deterministic timing model for the virtual clock.
///
/// Every kernel service is looked up by its APEX name; anything absent from
/// the table costs `default_cost`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostTable {
    /// In a config file, `[costs.ops]` entries override the calibrated
    /// ones rather than replacing the whole table.
    #[serde(rename = "ops", deserialize_with = "over_calibrated")]
    pub costs: BTreeMap<String, Tick>,
    pub default_cost: Tick,
    pub process_switch_cost: Tick,
    pub partition_switch_cost: Tick,
}

fn over_calibrated<'de, D: serde::Deserializer<'de>>(d: D) -> Result<BTreeMap<String, Tick>, D::Error> {
    let mut ops = CostTable::calibrated().costs;
    ops.extend(BTreeMap::<String, Tick>::deserialize(d)?);
    Ok(ops)
}

impl CostTable {
    pub const BASE_COST: Tick = 10;

    /// A table with no per-service entries.
    pub fn flat(default_cost: Tick) -> Self {
        CostTable {
            costs: BTreeMap::new(),
            default_cost,
            process_switch_cost: default_cost,
            partition_switch_cost: default_cost,
        }
    }

    /// Average latencies observed on a P2020 board at 75 ticks/us, used as
    /// the default virtual platform. Services without a published figure
    /// fall back to the grey-box averages or to the base cost.
    pub fn calibrated() -> Self {
        let entries: &[(&str, Tick)] = &[
            ("CREATE_PROCESS", 8054),
            ("START", 2796),
            ("CREATE_SEMAPHORE", 1004),
            ("CREATE_BUFFER", 388),
            ("CREATE_BLACKBOARD", 349),
            ("CREATE_EVENT", 407),
            ("GET_PARTITION_STATUS", 58),
            ("LOCK_PREEMPTION", 157),
            ("UNLOCK_PREEMPTION", 129),
            ("DISPLAY_BLACKBOARD", 51),
            ("READ_BLACKBOARD", 83),
            ("SEND_BUFFER", 134),
            ("SIGNAL_SEMAPHORE", 42),
            ("WAIT_SEMAPHORE", 119),
            ("SET_PRIORITY", 101),
            ("GET_MY_ID", 52),
            ("GET_PROCESS_ID", 36),
            ("GET_PROCESS_STATUS", 91),
            ("GET_SEMAPHORE_ID", 44),
            ("GET_SEMAPHORE_STATUS", 57),
            ("SET_EVENT", 50),
            ("GET_EVENT_ID", 65),
            ("GET_EVENT_STATUS", 48),
            ("CREATE_SAMPLING_PORT", 1436),
            ("CREATE_QUEUING_PORT", 1683),
            ("GET_SAMPLING_PORT_ID", 279),
            ("GET_SAMPLING_PORT_STATUS", 26),
            ("GET_QUEUING_PORT_STATUS", 295),
            ("GET_QUEUING_PORT_ID", 30),
            ("SEND_QUEUING_MESSAGE", 1261),
            ("WRITE_SAMPLING_MESSAGE", 546),
            ("READ_SAMPLING_MESSAGE", 475),
            ("ACQUIRE_MUTEX", 76),
            ("RELEASE_MUTEX", 79),
            (work::CHECKSUM_BYTE, 1),
            (work::CRC_BYTE, 2),
            (work::ADPCM_SAMPLE, 6),
            (work::SOBEL_PIXEL, 96),
            (work::DIJKSTRA_STEP, 8),
            (work::MATMUL_MAC, 3),
        ];
        CostTable {
            costs: entries.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            default_cost: Self::BASE_COST,
            process_switch_cost: 113,
            partition_switch_cost: 1682,
        }
    }

    pub fn cost(&self, op: &str) -> Tick {
        self.costs.get(op).copied().unwrap_or(self.default_cost)
    }

    pub fn set(&mut self, op: impl Into<String>, cost: Tick) -> &mut Self {
        self.costs.insert(op.into(), cost);
        self
    }
}

impl Default for CostTable {
    fn default() -> Self {
        CostTable::calibrated()
    }
}
