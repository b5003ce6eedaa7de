use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timebase::Tick;

macro_rules! id_type {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(PartitionId);
id_type!(
    /// Process identifiers are global. Zero is reserved for partition main
    /// contexts; user processes are numbered from one in creation order.
    ProcessId
);
id_type!(SemaphoreId);
id_type!(EventId);
id_type!(MutexId);
id_type!(BlackboardId);
id_type!(BufferId);
id_type!(SamplingPortId);
id_type!(QueuingPortId);

impl ProcessId {
    pub const MAIN: ProcessId = ProcessId(0);
}

pub type Priority = i32;
pub const MIN_PRIORITY: Priority = 1;
pub const MAX_PRIORITY: Priority = 255;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProcessState {
    Dormant,
    Ready,
    Running,
    Waiting,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PartitionMode {
    ColdStart,
    Normal,
    Idle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    DeadlineMiss,
    ApplicationError,
    NumericError,
    StackOverflow,
    IllegalRequest,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 5] = [
        ErrorCode::DeadlineMiss,
        ErrorCode::ApplicationError,
        ErrorCode::NumericError,
        ErrorCode::StackOverflow,
        ErrorCode::IllegalRequest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::DeadlineMiss => "DEADLINE_MISS",
            ErrorCode::ApplicationError => "APPLICATION_ERROR",
            ErrorCode::NumericError => "NUMERIC_ERROR",
            ErrorCode::StackOverflow => "STACK_OVERFLOW",
            ErrorCode::IllegalRequest => "ILLEGAL_REQUEST",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum HealthAction {
    #[default]
    Ignore,
    RestartProcess,
    RestartPartition,
    StopPartition,
}

impl HealthAction {
    pub fn as_str(self) -> &'static str {
        match self {
            HealthAction::Ignore => "IGNORE",
            HealthAction::RestartProcess => "RESTART_PROCESS",
            HealthAction::RestartPartition => "RESTART_PARTITION",
            HealthAction::StopPartition => "STOP_PARTITION",
        }
    }
}

/// How long a blocking service may wait. `Ticks(0)` polls without blocking.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Timeout {
    Ticks(Tick),
    Infinite,
}

impl Timeout {
    pub const POLL: Timeout = Timeout::Ticks(0);

    pub fn is_poll(self) -> bool {
        self == Timeout::Ticks(0)
    }

    pub fn deadline(self, now: Tick) -> Option<Tick> {
        match self {
            Timeout::Ticks(t) => Some(now.saturating_add(t)),
            Timeout::Infinite => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PortDirection {
    Source,
    Destination,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventState {
    Up,
    Down,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Validity {
    Valid,
    Invalid,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ApexError {
    #[error("name `{0}` is already in use")]
    DuplicateName(String),
    #[error("resource exhausted: {0}")]
    ResourceExhausted(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("unknown identifier {0}")]
    UnknownId(String),
    #[error("preemption unlocked at level 0")]
    Underflow,
    #[error("timed out")]
    TimedOut,
    #[error("counter would exceed its maximum")]
    Overflow,
    #[error("caller does not own the mutex")]
    NotOwner,
    #[error("message of {len} bytes exceeds the {max} byte limit")]
    MsgTooLong { len: usize, max: usize },
    #[error("port direction does not allow this operation")]
    DirectionMismatch,
    #[error("no message has been written")]
    NoMessage,
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("operation not allowed in the current partition mode")]
    InvalidMode,
}

pub type ApexResult<T> = Result<T, ApexError>;
