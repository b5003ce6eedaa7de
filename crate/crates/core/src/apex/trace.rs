use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::types::{PartitionId, ProcessId};
use crate::timebase::Tick;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TraceKind {
    /// A schedule window opened.
    WindowStart,
    /// The window belongs to a different partition than the previous one.
    PartitionSwitch,
    /// A different process than the last one got the CPU in this partition.
    ProcessSwitch,
    /// A process was handed the CPU.
    Dispatch,
    /// A kernel service completed.
    Call,
    /// A process became ready through start or release.
    Ready,
    Block,
    Wake,
    Timeout,
    Terminate,
    Preempt,
    ModeChange,
    Health,
    Idle,
}

impl TraceKind {
    const ALL: [TraceKind; 14] = [
        TraceKind::WindowStart,
        TraceKind::PartitionSwitch,
        TraceKind::ProcessSwitch,
        TraceKind::Dispatch,
        TraceKind::Call,
        TraceKind::Ready,
        TraceKind::Block,
        TraceKind::Wake,
        TraceKind::Timeout,
        TraceKind::Terminate,
        TraceKind::Preempt,
        TraceKind::ModeChange,
        TraceKind::Health,
        TraceKind::Idle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TraceKind::WindowStart => "WINDOW_START",
            TraceKind::PartitionSwitch => "PARTITION_SWITCH",
            TraceKind::ProcessSwitch => "PROCESS_SWITCH",
            TraceKind::Dispatch => "DISPATCH",
            TraceKind::Call => "CALL",
            TraceKind::Ready => "READY",
            TraceKind::Block => "BLOCK",
            TraceKind::Wake => "WAKE",
            TraceKind::Timeout => "TIMEOUT",
            TraceKind::Terminate => "TERMINATE",
            TraceKind::Preempt => "PREEMPT",
            TraceKind::ModeChange => "MODE_CHANGE",
            TraceKind::Health => "HEALTH",
            TraceKind::Idle => "IDLE",
        }
    }
}

impl FromStr for TraceKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TraceKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown trace kind `{s}`"))
    }
}

/// One scheduling event. Rendered as
/// `tick KIND partition process detail`, with `-` for an absent field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub tick: Tick,
    pub kind: TraceKind,
    pub partition: Option<PartitionId>,
    pub process: Option<ProcessId>,
    pub detail: String,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.tick, self.kind.as_str())?;
        match self.partition {
            Some(p) => write!(f, " {p}")?,
            None => f.write_str(" -")?,
        }
        match self.process {
            Some(p) => write!(f, " {p}")?,
            None => f.write_str(" -")?,
        }
        if self.detail.is_empty() {
            f.write_str(" -")
        } else {
            write!(f, " {}", self.detail)
        }
    }
}

impl FromStr for TraceEvent {
    type Err = String;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let mut it = line.splitn(5, ' ');
        let mut field = |what: &str| it.next().ok_or_else(|| format!("trace line lacks {what}: `{line}`"));
        let tick = field("tick")?.parse().map_err(|_| format!("bad tick in `{line}`"))?;
        let kind = field("kind")?.parse()?;
        let opt = |s: &str| -> Result<Option<u32>, String> {
            if s == "-" {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| format!("bad id `{s}`"))
            }
        };
        let partition = opt(field("partition")?)?.map(PartitionId);
        let process = opt(field("process")?)?.map(ProcessId);
        let detail = match field("detail")? {
            "-" => String::new(),
            d => d.to_string(),
        };
        Ok(TraceEvent {
            tick,
            kind,
            partition,
            process,
            detail,
        })
    }
}

pub fn write_trace<W: Write>(mut out: W, events: &[TraceEvent]) -> io::Result<()> {
    for e in events {
        writeln!(out, "{e}")?;
    }
    Ok(())
}

/// Parses trace text; blank lines and `#` comment lines are skipped.
pub fn parse_trace(text: &str) -> Result<Vec<TraceEvent>, String> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(str::parse)
        .collect()
}
