use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::handle::Entry;
use super::types::{ErrorCode, HealthAction, PartitionId};
use crate::timebase::{ClockKind, CostTable, Rate, Tick};

pub const DEFAULT_PROCESS_CAP: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("cannot read configuration: {0}")]
    Io(String),
    #[error("configuration declares no partitions")]
    NoPartitions,
    #[error("partition {0} is declared twice")]
    DuplicatePartition(PartitionId),
    #[error("partition {0} has a zero memory quota")]
    ZeroQuota(PartitionId),
    #[error("schedule window references unknown partition {0}")]
    UnknownPartition(PartitionId),
    #[error("major time frame must be positive")]
    ZeroFrame,
    #[error("schedule has no windows")]
    NoWindows,
    #[error("window at offset {0} has zero duration")]
    ZeroDuration(Tick),
    #[error("window at offset {offset} ends at {end}, past the major frame of {frame}")]
    BeyondFrame { offset: Tick, end: Tick, frame: Tick },
    #[error("windows are not sorted by offset")]
    Unsorted,
    #[error("windows at offsets {0} and {1} overlap")]
    Overlap(Tick, Tick),
    #[error("process cap must be at least 1")]
    ZeroProcessCap,
    #[error("invalid channel `{0}`: {1}")]
    Channel(String, String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionDescriptor {
    pub id: PartitionId,
    pub name: String,
    /// Abstract byte budget shared by every object the partition creates.
    pub memory_quota: u64,
    /// Overrides the system-wide process cap for this partition.
    #[serde(default)]
    pub process_cap: Option<usize>,
    /// Allows CREATE_PROCESS after the partition reached NORMAL mode.
    #[serde(default)]
    pub runtime_creation: bool,
    #[serde(skip)]
    pub entry: Option<Entry>,
}

impl PartitionDescriptor {
    pub fn new(id: u32, name: impl Into<String>, memory_quota: u64) -> Self {
        PartitionDescriptor {
            id: PartitionId(id),
            name: name.into(),
            memory_quota,
            process_cap: None,
            runtime_creation: false,
            entry: None,
        }
    }

    pub fn with_entry(mut self, entry: Entry) -> Self {
        self.entry = Some(entry);
        self
    }

    pub fn with_process_cap(mut self, cap: usize) -> Self {
        self.process_cap = Some(cap);
        self
    }

    pub fn with_runtime_creation(mut self) -> Self {
        self.runtime_creation = true;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleWindow {
    pub partition_id: PartitionId,
    pub offset_ticks: Tick,
    pub duration_ticks: Tick,
}

impl ScheduleWindow {
    pub fn new(partition: u32, offset_ticks: Tick, duration_ticks: Tick) -> Self {
        ScheduleWindow {
            partition_id: PartitionId(partition),
            offset_ticks,
            duration_ticks,
        }
    }

    pub fn end(&self) -> Tick {
        self.offset_ticks + self.duration_ticks
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSchedule {
    pub major_frame_ticks: Tick,
    pub windows: Vec<ScheduleWindow>,
    /// Overrides the cost table's partition switch cost when present.
    #[serde(default)]
    pub switch_cost_ticks: Option<Tick>,
}

impl PartitionSchedule {
    pub fn new(major_frame_ticks: Tick, windows: Vec<ScheduleWindow>) -> Self {
        PartitionSchedule {
            major_frame_ticks,
            windows,
            switch_cost_ticks: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HealthMonitorTable {
    pub entries: BTreeMap<ErrorCode, HealthAction>,
}

impl HealthMonitorTable {
    pub fn action(&self, code: ErrorCode) -> HealthAction {
        self.entries.get(&code).copied().unwrap_or_default()
    }

    pub fn set(&mut self, code: ErrorCode, action: HealthAction) -> &mut Self {
        self.entries.insert(code, action);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Sampling,
    Queuing,
}

/// A static source-to-destination port binding.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub kind: ChannelKind,
    pub source: String,
    pub destination: String,
    pub max_size: usize,
    /// Queue depth; ignored for sampling channels.
    #[serde(default)]
    pub capacity: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default = "default_clock")]
    pub clock: ClockKind,
    #[serde(default)]
    pub ticks_per_us: Rate,
    #[serde(default = "default_cap")]
    pub process_cap: usize,
    #[serde(default)]
    pub record_trace: bool,
    pub partitions: Vec<PartitionDescriptor>,
    pub schedule: PartitionSchedule,
    #[serde(default)]
    pub costs: CostTable,
    #[serde(default)]
    pub health_monitor: HealthMonitorTable,
    #[serde(default)]
    pub channels: Vec<ChannelConfig>,
}

fn default_clock() -> ClockKind {
    ClockKind::Virtual
}

fn default_cap() -> usize {
    DEFAULT_PROCESS_CAP
}

impl SystemConfig {
    pub fn new(partitions: Vec<PartitionDescriptor>, schedule: PartitionSchedule) -> Self {
        SystemConfig {
            clock: ClockKind::Virtual,
            ticks_per_us: Rate::DEFAULT,
            process_cap: DEFAULT_PROCESS_CAP,
            record_trace: false,
            partitions,
            schedule,
            costs: CostTable::default(),
            health_monitor: HealthMonitorTable::default(),
            channels: Vec::new(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: SystemConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    pub fn partition_switch_cost(&self) -> Tick {
        self.schedule
            .switch_cost_ticks
            .unwrap_or(self.costs.partition_switch_cost)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.partitions.is_empty() {
            return Err(ConfigError::NoPartitions);
        }
        if self.process_cap == 0 || self.partitions.iter().any(|p| p.process_cap == Some(0)) {
            return Err(ConfigError::ZeroProcessCap);
        }
        let mut ids = BTreeSet::new();
        for p in &self.partitions {
            if !ids.insert(p.id) {
                return Err(ConfigError::DuplicatePartition(p.id));
            }
            if p.memory_quota == 0 {
                return Err(ConfigError::ZeroQuota(p.id));
            }
        }

        let s = &self.schedule;
        if s.major_frame_ticks == 0 {
            return Err(ConfigError::ZeroFrame);
        }
        if s.windows.is_empty() {
            return Err(ConfigError::NoWindows);
        }
        let mut prev: Option<&ScheduleWindow> = None;
        for w in &s.windows {
            if !ids.contains(&w.partition_id) {
                return Err(ConfigError::UnknownPartition(w.partition_id));
            }
            if w.duration_ticks == 0 {
                return Err(ConfigError::ZeroDuration(w.offset_ticks));
            }
            let end = w.offset_ticks.checked_add(w.duration_ticks).unwrap_or(Tick::MAX);
            if end > s.major_frame_ticks {
                return Err(ConfigError::BeyondFrame {
                    offset: w.offset_ticks,
                    end,
                    frame: s.major_frame_ticks,
                });
            }
            if let Some(p) = prev {
                if w.offset_ticks < p.offset_ticks {
                    return Err(ConfigError::Unsorted);
                }
                if w.offset_ticks < p.end() {
                    return Err(ConfigError::Overlap(p.offset_ticks, w.offset_ticks));
                }
            }
            prev = Some(w);
        }

        let mut endpoints = BTreeSet::new();
        for c in &self.channels {
            let bad = |why: &str| ConfigError::Channel(format!("{}->{}", c.source, c.destination), why.into());
            if c.source == c.destination {
                return Err(bad("source and destination are the same port"));
            }
            if c.max_size == 0 {
                return Err(bad("max_size must be positive"));
            }
            if c.kind == ChannelKind::Queuing && c.capacity == 0 {
                return Err(bad("queuing channels need a positive capacity"));
            }
            if !endpoints.insert(c.source.clone()) || !endpoints.insert(c.destination.clone()) {
                return Err(bad("a port may belong to only one channel"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_partitions(windows: Vec<ScheduleWindow>) -> SystemConfig {
        SystemConfig::new(
            vec![
                PartitionDescriptor::new(1, "P1", 4096),
                PartitionDescriptor::new(2, "P2", 4096),
            ],
            PartitionSchedule::new(10_000, windows),
        )
    }

    #[test]
    fn accepts_back_to_back_windows() {
        let cfg = two_partitions(vec![
            ScheduleWindow::new(1, 0, 5000),
            ScheduleWindow::new(2, 5000, 5000),
        ]);
        assert_eq!(cfg.validate(), Ok(()));
    }

    #[test]
    fn rejects_overlap() {
        let cfg = two_partitions(vec![
            ScheduleWindow::new(1, 0, 6000),
            ScheduleWindow::new(2, 5000, 5000),
        ]);
        assert_eq!(cfg.validate(), Err(ConfigError::Overlap(0, 5000)));
    }

    #[test]
    fn rejects_empty_partition_list() {
        let cfg = SystemConfig::new(vec![], PartitionSchedule::new(10, vec![ScheduleWindow::new(1, 0, 10)]));
        assert_eq!(cfg.validate(), Err(ConfigError::NoPartitions));
    }

    #[test]
    fn rejects_unknown_partition_and_overrun() {
        let cfg = two_partitions(vec![ScheduleWindow::new(3, 0, 10)]);
        assert_eq!(cfg.validate(), Err(ConfigError::UnknownPartition(PartitionId(3))));
        let cfg = two_partitions(vec![ScheduleWindow::new(1, 9000, 2000)]);
        assert!(matches!(cfg.validate(), Err(ConfigError::BeyondFrame { .. })));
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
            clock = "virtual"
            ticks_per_us = "75"

            [[partitions]]
            id = 1
            name = "P1"
            memory_quota = 65536

            [[partitions]]
            id = 2
            name = "P2"
            memory_quota = 65536

            [schedule]
            major_frame_ticks = 10000
            switch_cost_ticks = 1682
            windows = [
                { partition_id = 1, offset_ticks = 0, duration_ticks = 5000 },
                { partition_id = 2, offset_ticks = 5000, duration_ticks = 5000 },
            ]

            [health_monitor]
            DEADLINE_MISS = "RESTART_PROCESS"

            [costs]
            default_cost = 12
            [costs.ops]
            WAIT_SEMAPHORE = 7

            [[channels]]
            kind = "sampling"
            source = "OUT"
            destination = "IN"
            max_size = 64
        "#;
        let cfg = SystemConfig::from_toml(text).unwrap();
        assert_eq!(cfg.partition_switch_cost(), 1682);
        assert_eq!(cfg.costs.cost("WAIT_SEMAPHORE"), 7);
        assert_eq!(cfg.costs.cost("SOMETHING_ELSE"), 12);
        assert_eq!(
            cfg.health_monitor.action(ErrorCode::DeadlineMiss),
            HealthAction::RestartProcess
        );
        assert_eq!(cfg.health_monitor.action(ErrorCode::NumericError), HealthAction::Ignore);
        let again = SystemConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again.schedule, cfg.schedule);
        assert_eq!(again.costs, cfg.costs);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "bogus = 1\npartitions = []\n[schedule]\nmajor_frame_ticks = 1\nwindows = []\n";
        assert!(matches!(SystemConfig::from_toml(text), Err(ConfigError::Parse(_))));
    }
}
