//! The porting layer bound to the emulated ARINC-653 executive.

use std::cell::RefCell;

use super::*;
use crate::apex::{
    Apex, ApexCall, ApexError, BlackboardId, BufferId, ChannelConfig, ChannelKind, Entry, ErrorCode, EventId,
    EventState, HealthAction, HealthMonitorTable, MutexId, PartitionDescriptor, PartitionMode, PartitionSchedule,
    PortDirection, ProcessAttributes, ProcessId, ProcessState, QueuingPortId, Reply, SamplingPortId, ScheduleWindow,
    SemaphoreId, StopReason, System, SystemConfig, Timeout, TraceEvent, Validity, DEFAULT_PROCESS_CAP,
};
use crate::timebase::{ClockKind, CostTable};

/// Platform knobs that are not part of a deployment.
#[derive(Clone, Debug)]
pub struct ApexSettings {
    pub clock: ClockKind,
    pub rate: Rate,
    pub costs: CostTable,
    pub health_monitor: HealthMonitorTable,
    pub process_cap: usize,
    pub record_trace: bool,
}

impl Default for ApexSettings {
    fn default() -> Self {
        ApexSettings {
            clock: ClockKind::Virtual,
            rate: Rate::DEFAULT,
            costs: CostTable::calibrated(),
            health_monitor: HealthMonitorTable::default(),
            process_cap: DEFAULT_PROCESS_CAP,
            record_trace: false,
        }
    }
}

/// Runs deployments on a freshly booted [`System`] each time.
#[derive(Debug, Default)]
pub struct ApexPlatform {
    settings: ApexSettings,
    traces: RefCell<Vec<TraceEvent>>,
}

impl ApexPlatform {
    pub fn new(settings: ApexSettings) -> Self {
        ApexPlatform {
            settings,
            traces: RefCell::new(Vec::new()),
        }
    }

    pub fn settings(&self) -> &ApexSettings {
        &self.settings
    }

    /// Trace events of every run so far (only when `record_trace` is set).
    pub fn take_trace(&self) -> Vec<TraceEvent> {
        std::mem::take(&mut self.traces.borrow_mut())
    }

    fn config(&self, d: Deployment<ApexBackend>) -> SystemConfig {
        let partitions = d
            .partitions
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                let main = p.main;
                let mut desc = PartitionDescriptor::new(i as u32 + 1, p.name, p.memory_quota)
                    .with_entry(Entry::new(move |apex| main.spawn(ApexBackend { apex })));
                desc.process_cap = p.process_cap;
                desc.runtime_creation = p.runtime_creation;
                desc
            })
            .collect();
        let windows = d
            .windows
            .iter()
            .map(|w| ScheduleWindow::new(w.partition as u32 + 1, w.offset, w.duration))
            .collect();
        let mut cfg = SystemConfig::new(partitions, PartitionSchedule::new(d.frame, windows));
        cfg.clock = self.settings.clock;
        cfg.ticks_per_us = self.settings.rate;
        cfg.costs = self.settings.costs.clone();
        cfg.health_monitor = self.settings.health_monitor.clone();
        cfg.process_cap = self.settings.process_cap;
        cfg.record_trace = self.settings.record_trace;
        cfg.channels = d
            .channels
            .into_iter()
            .map(|c| {
                let (kind, capacity) = match c.link {
                    Link::Sampling => (ChannelKind::Sampling, 0),
                    Link::Queuing { capacity } => (ChannelKind::Queuing, capacity),
                };
                ChannelConfig {
                    kind,
                    source: c.source,
                    destination: c.destination,
                    max_size: c.max_size,
                    capacity,
                }
            })
            .collect();
        cfg
    }
}

impl Platform for ApexPlatform {
    type Backend = ApexBackend;

    fn rate(&self) -> Rate {
        self.settings.rate
    }

    fn run(&self, deployment: Deployment<ApexBackend>, budget: Tick, done: &dyn Fn() -> bool) -> PerfResult<RunEnd> {
        let mut sys = System::boot(self.config(deployment)).map_err(|e| PerfError::Deployment(e.to_string()))?;
        let reason = sys.run_until(budget, |_| done());
        if self.settings.record_trace {
            self.traces.borrow_mut().extend(sys.take_trace());
        }
        match reason {
            StopReason::TickLimit => Err(PerfError::Budget(budget)),
            r => Ok(RunEnd {
                ticks: sys.now(),
                completed: r == StopReason::Done,
            }),
        }
    }
}

/// A process's view of the executive, as seen through the porting layer.
#[derive(Clone, Debug)]
pub struct ApexBackend {
    apex: Apex,
}

fn timeout(w: Wait) -> Timeout {
    match w {
        Wait::Poll => Timeout::POLL,
        Wait::Ticks(t) => Timeout::Ticks(t),
        Wait::Forever => Timeout::Infinite,
    }
}

fn direction(d: Direction) -> PortDirection {
    match d {
        Direction::Source => PortDirection::Source,
        Direction::Destination => PortDirection::Destination,
    }
}

fn error_code(f: Fault) -> ErrorCode {
    match f {
        Fault::DeadlineMiss => ErrorCode::DeadlineMiss,
        Fault::Application => ErrorCode::ApplicationError,
        Fault::Numeric => ErrorCode::NumericError,
        Fault::StackOverflow => ErrorCode::StackOverflow,
        Fault::IllegalRequest => ErrorCode::IllegalRequest,
    }
}

fn error(e: ApexError) -> PerfError {
    match e {
        ApexError::DuplicateName(n) => PerfError::Duplicate(n),
        ApexError::ResourceExhausted(s) => PerfError::Exhausted(s),
        ApexError::InvalidState(s) => PerfError::InvalidState(s),
        ApexError::UnknownName(n) | ApexError::UnknownId(n) => PerfError::NotFound(n),
        ApexError::TimedOut => PerfError::TimedOut,
        e @ (ApexError::Underflow
        | ApexError::Overflow
        | ApexError::NotOwner
        | ApexError::NoMessage
        | ApexError::InvalidMode) => PerfError::InvalidState(e.to_string()),
        e @ (ApexError::MsgTooLong { .. } | ApexError::DirectionMismatch | ApexError::InvalidParam(_)) => {
            PerfError::Rejected(e.to_string())
        }
    }
}

fn task_state(s: ProcessState) -> TaskState {
    match s {
        ProcessState::Dormant => TaskState::Dormant,
        ProcessState::Ready => TaskState::Ready,
        ProcessState::Running => TaskState::Running,
        ProcessState::Waiting => TaskState::Waiting,
    }
}

fn translate_op(op: PerfOp) -> ApexCall {
    use PerfOp::*;
    let pid = |t: TaskHandle| ProcessId(t.0);
    match op {
        StartTask(t) => ApexCall::StartProcess(pid(t)),
        StopTask(t) => ApexCall::StopProcess(pid(t)),
        SetPriority(t, priority) => ApexCall::SetPriority { id: pid(t), priority },
        CurrentTask => ApexCall::GetMyId,
        FindTask(n) => ApexCall::GetProcessId(n),
        TaskStatus(t) => ApexCall::GetProcessStatus(pid(t)),
        PartitionStatus => ApexCall::GetPartitionStatus,
        LockPreemption => ApexCall::LockPreemption,
        UnlockPreemption => ApexCall::UnlockPreemption,
        PeriodicWait => ApexCall::PeriodicWait,
        Delay(t) => ApexCall::TimedWait(t),
        Ticks => ApexCall::GetCurrentTicks,
        RaiseFault(f) => ApexCall::RaiseError(error_code(f)),

        CreateSem { name, initial, max } => ApexCall::CreateSemaphore { name, initial, max },
        WaitSem(s, w) => ApexCall::WaitSemaphore {
            id: SemaphoreId(s.0),
            timeout: timeout(w),
        },
        SignalSem(s) => ApexCall::SignalSemaphore(SemaphoreId(s.0)),
        FindSem(n) => ApexCall::GetSemaphoreId(n),
        SemStatus(s) => ApexCall::GetSemaphoreStatus(SemaphoreId(s.0)),

        CreateEvent(n) => ApexCall::CreateEvent(n),
        SetEvent(e) => ApexCall::SetEvent(EventId(e.0)),
        ResetEvent(e) => ApexCall::ResetEvent(EventId(e.0)),
        WaitEvent(e, w) => ApexCall::WaitEvent {
            id: EventId(e.0),
            timeout: timeout(w),
        },
        FindEvent(n) => ApexCall::GetEventId(n),
        EventStatus(e) => ApexCall::GetEventStatus(EventId(e.0)),

        CreateMutex(n) => ApexCall::CreateMutex(n),
        Lock(m, w) => ApexCall::AcquireMutex {
            id: MutexId(m.0),
            timeout: timeout(w),
        },
        Unlock(m) => ApexCall::ReleaseMutex(MutexId(m.0)),
        FindMutex(n) => ApexCall::GetMutexId(n),

        CreateBoard { name, max_size } => ApexCall::CreateBlackboard { name, max_size },
        Display(b, msg) => ApexCall::DisplayBlackboard {
            id: BlackboardId(b.0),
            msg,
        },
        ReadBoard(b, w) => ApexCall::ReadBlackboard {
            id: BlackboardId(b.0),
            timeout: timeout(w),
        },
        ClearBoard(b) => ApexCall::ClearBlackboard(BlackboardId(b.0)),
        FindBoard(n) => ApexCall::GetBlackboardId(n),

        CreateBuffer {
            name,
            capacity,
            max_size,
        } => ApexCall::CreateBuffer {
            name,
            capacity,
            max_size,
        },
        SendBuffer(b, msg, w) => ApexCall::SendBuffer {
            id: BufferId(b.0),
            msg,
            timeout: timeout(w),
        },
        ReceiveBuffer(b, w) => ApexCall::ReceiveBuffer {
            id: BufferId(b.0),
            timeout: timeout(w),
        },
        FindBuffer(n) => ApexCall::GetBufferId(n),

        CreateSampling {
            name,
            max_size,
            direction: d,
            refresh,
        } => ApexCall::CreateSamplingPort {
            name,
            max_size,
            direction: direction(d),
            refresh,
        },
        WriteSampling(p, msg) => ApexCall::WriteSamplingMessage {
            id: SamplingPortId(p.0),
            msg,
        },
        ReadSampling(p) => ApexCall::ReadSamplingMessage(SamplingPortId(p.0)),
        FindSampling(n) => ApexCall::GetSamplingPortId(n),
        SamplingStatus(p) => ApexCall::GetSamplingPortStatus(SamplingPortId(p.0)),

        CreateQueuing {
            name,
            capacity,
            max_size,
            direction: d,
        } => ApexCall::CreateQueuingPort {
            name,
            capacity,
            max_size,
            direction: direction(d),
        },
        SendQueuing(q, msg, w) => ApexCall::SendQueuingMessage {
            id: QueuingPortId(q.0),
            msg,
            timeout: timeout(w),
        },
        ReceiveQueuing(q, w) => ApexCall::ReceiveQueuingMessage {
            id: QueuingPortId(q.0),
            timeout: timeout(w),
        },
        FindQueuing(n) => ApexCall::GetQueuingPortId(n),
        QueuingStatus(q) => ApexCall::GetQueuingPortStatus(QueuingPortId(q.0)),

        Work(t) => ApexCall::Work(t),
        Modeled { op, units } => ApexCall::ModeledWork {
            op: op.to_string(),
            units,
        },
    }
}

fn translate_reply(r: Reply) -> PerfReply {
    match r {
        Reply::Unit => PerfReply::Unit,
        Reply::Process(id) => PerfReply::Task(TaskHandle(id.0)),
        Reply::Semaphore(id) => PerfReply::Sem(SemHandle(id.0)),
        Reply::Event(id) => PerfReply::Event(EventHandle(id.0)),
        Reply::Mutex(id) => PerfReply::Mutex(MutexHandle(id.0)),
        Reply::Blackboard(id) => PerfReply::Board(BoardHandle(id.0)),
        Reply::Buffer(id) => PerfReply::Buffer(BufferHandle(id.0)),
        Reply::SamplingPort(id) => PerfReply::Sampling(SamplingHandle(id.0)),
        Reply::QueuingPort(id) => PerfReply::Queuing(QueuingHandle(id.0)),
        Reply::ProcessStatus(s) => PerfReply::TaskInfo(TaskInfo {
            priority: s.current_priority,
            state: task_state(s.state),
        }),
        Reply::PartitionStatus(s) => PerfReply::PartitionInfo(PartitionInfo {
            normal: s.mode == PartitionMode::Normal,
            lock_level: s.lock_level,
            window_remaining: s.window_remaining,
        }),
        Reply::SemaphoreStatus(s) => PerfReply::SemInfo(SemInfo {
            value: s.value,
            waiting: s.waiting,
        }),
        Reply::EventStatus(s) => PerfReply::EventInfo(EventInfo {
            up: s.state == EventState::Up,
            waiting: s.waiting,
        }),
        Reply::SamplingStatus(s) => PerfReply::SamplingInfo(SamplingInfo {
            max_size: s.max_size,
            fresh: s.last_validity == Validity::Valid,
        }),
        Reply::QueuingStatus(s) => PerfReply::QueuingInfo(QueuingInfo {
            messages: s.messages,
            waiting: s.waiting,
        }),
        Reply::Message(m) => PerfReply::Message(m),
        Reply::Sampled(data, v) => PerfReply::Sample {
            data,
            fresh: v == Validity::Valid,
        },
        Reply::LockLevel(l) => PerfReply::Level(l),
        Reply::Ticks(t) => PerfReply::Ticks(t),
        Reply::Health(a) => PerfReply::Recovery(match a {
            HealthAction::Ignore => Recovery::Ignore,
            HealthAction::RestartProcess => Recovery::RestartTask,
            HealthAction::RestartPartition => Recovery::RestartPartition,
            HealthAction::StopPartition => Recovery::StopPartition,
        }),
    }
}

impl PerfBackend for ApexBackend {
    fn now(&self) -> Tick {
        self.apex.now()
    }

    fn rate(&self) -> Rate {
        self.apex.rate()
    }

    fn invoke(&self, call: PerfCall<Self>) -> impl Future<Output = PerfResult<PerfReply>> {
        let call = match call {
            PerfCall::CreateTask(spec) => {
                let entry = spec.entry;
                let attrs = ProcessAttributes {
                    name: spec.name,
                    priority: spec.priority,
                    period: spec.period,
                    deadline: None,
                    stack_size: spec.stack_budget,
                    entry: Entry::new(move |apex| entry.spawn(ApexBackend { apex })),
                };
                ApexCall::CreateProcess(attrs)
            }
            PerfCall::Op(op) => translate_op(op),
        };
        let fut = self.apex.call(call);
        async move { fut.await.map(translate_reply).map_err(error) }
    }
}
