use serde::{Deserialize, Serialize};

use super::handle::Entry;
use super::types::*;
use crate::timebase::Tick;

pub const DEFAULT_STACK_SIZE: u64 = 4096;

#[derive(Clone, Debug)]
pub struct ProcessAttributes {
    pub name: String,
    pub priority: Priority,
    pub period: Option<Tick>,
    pub deadline: Option<Tick>,
    pub stack_size: u64,
    pub entry: Entry,
}

impl ProcessAttributes {
    pub fn new(name: impl Into<String>, priority: Priority, entry: Entry) -> Self {
        ProcessAttributes {
            name: name.into(),
            priority,
            period: None,
            deadline: None,
            stack_size: DEFAULT_STACK_SIZE,
            entry,
        }
    }

    pub fn periodic(mut self, period: Tick) -> Self {
        self.period = Some(period);
        self
    }

    pub fn deadline(mut self, deadline: Tick) -> Self {
        self.deadline = Some(deadline);
        self
    }

    pub fn stack_size(mut self, bytes: u64) -> Self {
        self.stack_size = bytes;
        self
    }
}

/// Every kernel service a process can request. Each one is charged its
/// cost-table entry (looked up by [`ApexCall::name`]) before taking effect.
#[derive(Clone, Debug)]
pub enum ApexCall {
    CreateProcess(ProcessAttributes),
    StartProcess(ProcessId),
    StopProcess(ProcessId),
    SetPriority {
        id: ProcessId,
        priority: Priority,
    },
    GetMyId,
    GetProcessId(String),
    GetProcessStatus(ProcessId),
    GetPartitionStatus,
    LockPreemption,
    UnlockPreemption,
    PeriodicWait,
    TimedWait(Tick),
    GetCurrentTicks,
    RaiseError(ErrorCode),

    CreateSemaphore {
        name: String,
        initial: u32,
        max: u32,
    },
    WaitSemaphore {
        id: SemaphoreId,
        timeout: Timeout,
    },
    SignalSemaphore(SemaphoreId),
    GetSemaphoreId(String),
    GetSemaphoreStatus(SemaphoreId),

    CreateEvent(String),
    SetEvent(EventId),
    ResetEvent(EventId),
    WaitEvent {
        id: EventId,
        timeout: Timeout,
    },
    GetEventId(String),
    GetEventStatus(EventId),

    CreateMutex(String),
    AcquireMutex {
        id: MutexId,
        timeout: Timeout,
    },
    ReleaseMutex(MutexId),
    GetMutexId(String),

    CreateBlackboard {
        name: String,
        max_size: usize,
    },
    DisplayBlackboard {
        id: BlackboardId,
        msg: Vec<u8>,
    },
    ReadBlackboard {
        id: BlackboardId,
        timeout: Timeout,
    },
    ClearBlackboard(BlackboardId),
    GetBlackboardId(String),

    CreateBuffer {
        name: String,
        capacity: usize,
        max_size: usize,
    },
    SendBuffer {
        id: BufferId,
        msg: Vec<u8>,
        timeout: Timeout,
    },
    ReceiveBuffer {
        id: BufferId,
        timeout: Timeout,
    },
    GetBufferId(String),

    CreateSamplingPort {
        name: String,
        max_size: usize,
        direction: PortDirection,
        refresh: Tick,
    },
    WriteSamplingMessage {
        id: SamplingPortId,
        msg: Vec<u8>,
    },
    ReadSamplingMessage(SamplingPortId),
    GetSamplingPortId(String),
    GetSamplingPortStatus(SamplingPortId),

    CreateQueuingPort {
        name: String,
        capacity: usize,
        max_size: usize,
        direction: PortDirection,
    },
    SendQueuingMessage {
        id: QueuingPortId,
        msg: Vec<u8>,
        timeout: Timeout,
    },
    ReceiveQueuingMessage {
        id: QueuingPortId,
        timeout: Timeout,
    },
    GetQueuingPortId(String),
    GetQueuingPortStatus(QueuingPortId),

    /// Busy computation lasting exactly `ticks` on either clock.
    Work(Tick),
    /// `units` repetitions of a cost-table work unit. Free on the host clock,
    /// where the real computation has already consumed real time.
    ModeledWork {
        op: String,
        units: u64,
    },
}

impl ApexCall {
    /// Service name used for cost lookup and tracing.
    pub fn name(&self) -> &str {
        use ApexCall::*;
        match self {
            CreateProcess(_) => "CREATE_PROCESS",
            StartProcess(_) => "START",
            StopProcess(_) => "STOP",
            SetPriority { .. } => "SET_PRIORITY",
            GetMyId => "GET_MY_ID",
            GetProcessId(_) => "GET_PROCESS_ID",
            GetProcessStatus(_) => "GET_PROCESS_STATUS",
            GetPartitionStatus => "GET_PARTITION_STATUS",
            LockPreemption => "LOCK_PREEMPTION",
            UnlockPreemption => "UNLOCK_PREEMPTION",
            PeriodicWait => "PERIODIC_WAIT",
            TimedWait(_) => "TIMED_WAIT",
            GetCurrentTicks => "GET_CURRENT_TICKS",
            RaiseError(_) => "RAISE_APPLICATION_ERROR",
            CreateSemaphore { .. } => "CREATE_SEMAPHORE",
            WaitSemaphore { .. } => "WAIT_SEMAPHORE",
            SignalSemaphore(_) => "SIGNAL_SEMAPHORE",
            GetSemaphoreId(_) => "GET_SEMAPHORE_ID",
            GetSemaphoreStatus(_) => "GET_SEMAPHORE_STATUS",
            CreateEvent(_) => "CREATE_EVENT",
            SetEvent(_) => "SET_EVENT",
            ResetEvent(_) => "RESET_EVENT",
            WaitEvent { .. } => "WAIT_EVENT",
            GetEventId(_) => "GET_EVENT_ID",
            GetEventStatus(_) => "GET_EVENT_STATUS",
            CreateMutex(_) => "CREATE_MUTEX",
            AcquireMutex { .. } => "ACQUIRE_MUTEX",
            ReleaseMutex(_) => "RELEASE_MUTEX",
            GetMutexId(_) => "GET_MUTEX_ID",
            CreateBlackboard { .. } => "CREATE_BLACKBOARD",
            DisplayBlackboard { .. } => "DISPLAY_BLACKBOARD",
            ReadBlackboard { .. } => "READ_BLACKBOARD",
            ClearBlackboard(_) => "CLEAR_BLACKBOARD",
            GetBlackboardId(_) => "GET_BLACKBOARD_ID",
            CreateBuffer { .. } => "CREATE_BUFFER",
            SendBuffer { .. } => "SEND_BUFFER",
            ReceiveBuffer { .. } => "RECEIVE_BUFFER",
            GetBufferId(_) => "GET_BUFFER_ID",
            CreateSamplingPort { .. } => "CREATE_SAMPLING_PORT",
            WriteSamplingMessage { .. } => "WRITE_SAMPLING_MESSAGE",
            ReadSamplingMessage(_) => "READ_SAMPLING_MESSAGE",
            GetSamplingPortId(_) => "GET_SAMPLING_PORT_ID",
            GetSamplingPortStatus(_) => "GET_SAMPLING_PORT_STATUS",
            CreateQueuingPort { .. } => "CREATE_QUEUING_PORT",
            SendQueuingMessage { .. } => "SEND_QUEUING_MESSAGE",
            ReceiveQueuingMessage { .. } => "RECEIVE_QUEUING_MESSAGE",
            GetQueuingPortId(_) => "GET_QUEUING_PORT_ID",
            GetQueuingPortStatus(_) => "GET_QUEUING_PORT_STATUS",
            Work(_) => "WORK",
            ModeledWork { op, .. } => op,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessStatus {
    pub id: ProcessId,
    pub name: String,
    pub partition: PartitionId,
    pub base_priority: Priority,
    pub current_priority: Priority,
    pub period: Option<Tick>,
    pub deadline: Option<Tick>,
    pub state: ProcessState,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionStatus {
    pub id: PartitionId,
    pub mode: PartitionMode,
    pub lock_level: u32,
    /// Ticks left in the current window when the call completed.
    pub window_remaining: Tick,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemaphoreStatus {
    pub value: u32,
    pub max_value: u32,
    pub waiting: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventStatus {
    pub state: EventState,
    pub waiting: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPortStatus {
    pub max_size: usize,
    pub direction: PortDirection,
    pub refresh: Tick,
    /// Validity of the most recent read, `Invalid` before any read.
    pub last_validity: Validity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueuingPortStatus {
    pub max_size: usize,
    pub capacity: usize,
    pub direction: PortDirection,
    pub messages: usize,
    pub waiting: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reply {
    Unit,
    Process(ProcessId),
    Semaphore(SemaphoreId),
    Event(EventId),
    Mutex(MutexId),
    Blackboard(BlackboardId),
    Buffer(BufferId),
    SamplingPort(SamplingPortId),
    QueuingPort(QueuingPortId),
    ProcessStatus(ProcessStatus),
    PartitionStatus(PartitionStatus),
    SemaphoreStatus(SemaphoreStatus),
    EventStatus(EventStatus),
    SamplingStatus(SamplingPortStatus),
    QueuingStatus(QueuingPortStatus),
    Message(Vec<u8>),
    Sampled(Vec<u8>, Validity),
    LockLevel(u32),
    Ticks(Tick),
    Health(HealthAction),
}
