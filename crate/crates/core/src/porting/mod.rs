//! The benchmark abstraction layer.
//!
//! Benchmarks only ever talk to a [`PerfBackend`] (the services a process
//! may request) and a [`Platform`] (something that can deploy and run a set
//! of partitions). Porting the suite to another executive means implementing
//! these two traits; see `docs/PORTING.md` for the full contract.
//!
//! The vocabulary here deliberately mirrors no kernel type: handles are
//! opaque, statuses are reduced to what benchmarks look at, and every error
//! is folded into [`PerfError`].

mod binding;
mod deploy;
mod measure;
mod recording;

use std::fmt;
use std::future::Future;
use std::pin::Pin;
use std::rc::Rc;

use thiserror::Error;

use crate::timebase::{Rate, Tick};

pub use binding::{ApexBackend, ApexPlatform, ApexSettings};
pub use deploy::{ChannelPlan, Deployment, Link, PartitionPlan, Platform, RunEnd, WindowPlan};
pub use measure::MeasureContext;
pub use recording::{CallLog, Recording, RecordingPlatform};

pub type TaskFuture = Pin<Box<dyn Future<Output = ()>>>;

/// Body of a task, instantiated afresh every time the task starts.
pub struct TaskEntry<B>(Rc<dyn Fn(B) -> TaskFuture>);

impl<B: 'static> TaskEntry<B> {
    pub fn new<F, Fut>(f: F) -> Self
    where
        F: Fn(B) -> Fut + 'static,
        Fut: Future<Output = ()> + 'static,
    {
        TaskEntry(Rc::new(move |b| Box::pin(f(b))))
    }

    pub fn spawn(&self, backend: B) -> TaskFuture {
        (self.0)(backend)
    }

    /// Adapts the body to run on another backend type.
    pub fn rebind<C: 'static>(self, wrap: impl Fn(C) -> B + 'static) -> TaskEntry<C> {
        TaskEntry(Rc::new(move |c| (self.0)(wrap(c))))
    }
}

impl<B> Clone for TaskEntry<B> {
    fn clone(&self) -> Self {
        TaskEntry(self.0.clone())
    }
}

impl<B> fmt::Debug for TaskEntry<B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("TaskEntry(..)")
    }
}

#[derive(Clone, Debug)]
pub struct TaskSpec<B> {
    pub name: String,
    /// Higher is more urgent; backends accept at least 1..=255.
    pub priority: i32,
    pub period: Option<Tick>,
    pub stack_budget: u64,
    pub entry: TaskEntry<B>,
}

impl<B: 'static> TaskSpec<B> {
    pub const DEFAULT_STACK: u64 = 4096;

    pub fn new(name: impl Into<String>, priority: i32, entry: TaskEntry<B>) -> Self {
        TaskSpec {
            name: name.into(),
            priority,
            period: None,
            stack_budget: Self::DEFAULT_STACK,
            entry,
        }
    }

    pub fn periodic(mut self, period: Tick) -> Self {
        self.period = Some(period);
        self
    }
}

macro_rules! handle {
    ($($name:ident),*) => {$(
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub(crate) u32);
    )*};
}

handle!(
    TaskHandle,
    SemHandle,
    EventHandle,
    MutexHandle,
    BoardHandle,
    BufferHandle,
    SamplingHandle,
    QueuingHandle
);

/// How long a blocking service may wait.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wait {
    Poll,
    Ticks(Tick),
    Forever,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Source,
    Destination,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    DeadlineMiss,
    Application,
    Numeric,
    StackOverflow,
    IllegalRequest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Recovery {
    Ignore,
    RestartTask,
    RestartPartition,
    StopPartition,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskState {
    Dormant,
    Ready,
    Running,
    Waiting,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TaskInfo {
    pub priority: i32,
    pub state: TaskState,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PartitionInfo {
    pub normal: bool,
    pub lock_level: u32,
    pub window_remaining: Tick,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SemInfo {
    pub value: u32,
    pub waiting: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EventInfo {
    pub up: bool,
    pub waiting: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SamplingInfo {
    pub max_size: usize,
    pub fresh: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QueuingInfo {
    pub messages: usize,
    pub waiting: usize,
}

/// Every service except task creation, which carries a backend-typed body.
#[derive(Clone, Debug)]
pub enum PerfOp {
    StartTask(TaskHandle),
    StopTask(TaskHandle),
    SetPriority(TaskHandle, i32),
    CurrentTask,
    FindTask(String),
    TaskStatus(TaskHandle),
    PartitionStatus,
    LockPreemption,
    UnlockPreemption,
    PeriodicWait,
    Delay(Tick),
    Ticks,
    RaiseFault(Fault),

    CreateSem {
        name: String,
        initial: u32,
        max: u32,
    },
    WaitSem(SemHandle, Wait),
    SignalSem(SemHandle),
    FindSem(String),
    SemStatus(SemHandle),

    CreateEvent(String),
    SetEvent(EventHandle),
    ResetEvent(EventHandle),
    WaitEvent(EventHandle, Wait),
    FindEvent(String),
    EventStatus(EventHandle),

    CreateMutex(String),
    Lock(MutexHandle, Wait),
    Unlock(MutexHandle),
    FindMutex(String),

    CreateBoard {
        name: String,
        max_size: usize,
    },
    Display(BoardHandle, Vec<u8>),
    ReadBoard(BoardHandle, Wait),
    ClearBoard(BoardHandle),
    FindBoard(String),

    CreateBuffer {
        name: String,
        capacity: usize,
        max_size: usize,
    },
    SendBuffer(BufferHandle, Vec<u8>, Wait),
    ReceiveBuffer(BufferHandle, Wait),
    FindBuffer(String),

    CreateSampling {
        name: String,
        max_size: usize,
        direction: Direction,
        refresh: Tick,
    },
    WriteSampling(SamplingHandle, Vec<u8>),
    ReadSampling(SamplingHandle),
    FindSampling(String),
    SamplingStatus(SamplingHandle),

    CreateQueuing {
        name: String,
        capacity: usize,
        max_size: usize,
        direction: Direction,
    },
    SendQueuing(QueuingHandle, Vec<u8>, Wait),
    ReceiveQueuing(QueuingHandle, Wait),
    FindQueuing(String),
    QueuingStatus(QueuingHandle),

    /// Burn CPU for a number of ticks.
    Work(Tick),
    /// Charge `units` of a named work unit (free on a host clock, where the
    /// real computation already took real time).
    Modeled {
        op: &'static str,
        units: u64,
    },
}

impl PerfOp {
    pub fn name(&self) -> &'static str {
        use PerfOp::*;
        match self {
            StartTask(_) => "start_task",
            StopTask(_) => "stop_task",
            SetPriority(..) => "set_priority",
            CurrentTask => "current_task",
            FindTask(_) => "find_task",
            TaskStatus(_) => "task_status",
            PartitionStatus => "partition_status",
            LockPreemption => "lock_preemption",
            UnlockPreemption => "unlock_preemption",
            PeriodicWait => "periodic_wait",
            Delay(_) => "delay",
            Ticks => "ticks",
            RaiseFault(_) => "raise_fault",
            CreateSem { .. } => "create_sem",
            WaitSem(..) => "wait_sem",
            SignalSem(_) => "signal_sem",
            FindSem(_) => "find_sem",
            SemStatus(_) => "sem_status",
            CreateEvent(_) => "create_event",
            SetEvent(_) => "set_event",
            ResetEvent(_) => "reset_event",
            WaitEvent(..) => "wait_event",
            FindEvent(_) => "find_event",
            EventStatus(_) => "event_status",
            CreateMutex(_) => "create_mutex",
            Lock(..) => "lock",
            Unlock(_) => "unlock",
            FindMutex(_) => "find_mutex",
            CreateBoard { .. } => "create_board",
            Display(..) => "display",
            ReadBoard(..) => "read_board",
            ClearBoard(_) => "clear_board",
            FindBoard(_) => "find_board",
            CreateBuffer { .. } => "create_buffer",
            SendBuffer(..) => "send_buffer",
            ReceiveBuffer(..) => "receive_buffer",
            FindBuffer(_) => "find_buffer",
            CreateSampling { .. } => "create_sampling",
            WriteSampling(..) => "write_sampling",
            ReadSampling(_) => "read_sampling",
            FindSampling(_) => "find_sampling",
            SamplingStatus(_) => "sampling_status",
            CreateQueuing { .. } => "create_queuing",
            SendQueuing(..) => "send_queuing",
            ReceiveQueuing(..) => "receive_queuing",
            FindQueuing(_) => "find_queuing",
            QueuingStatus(_) => "queuing_status",
            Work(_) => "work",
            Modeled { .. } => "modeled",
        }
    }
}

#[derive(Debug)]
pub enum PerfCall<B> {
    /// Create a task in the dormant state.
    CreateTask(TaskSpec<B>),
    Op(PerfOp),
}

impl<B> PerfCall<B> {
    pub fn name(&self) -> &'static str {
        match self {
            PerfCall::CreateTask(_) => "create_task",
            PerfCall::Op(op) => op.name(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PerfReply {
    Unit,
    Task(TaskHandle),
    Sem(SemHandle),
    Event(EventHandle),
    Mutex(MutexHandle),
    Board(BoardHandle),
    Buffer(BufferHandle),
    Sampling(SamplingHandle),
    Queuing(QueuingHandle),
    TaskInfo(TaskInfo),
    PartitionInfo(PartitionInfo),
    SemInfo(SemInfo),
    EventInfo(EventInfo),
    SamplingInfo(SamplingInfo),
    QueuingInfo(QueuingInfo),
    Message(Vec<u8>),
    Sample { data: Vec<u8>, fresh: bool },
    Level(u32),
    Ticks(Tick),
    Recovery(Recovery),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PerfError {
    #[error("timed out")]
    TimedOut,
    #[error("not found: {0}")]
    NotFound(String),
    #[error("duplicate name `{0}`")]
    Duplicate(String),
    #[error("resources exhausted: {0}")]
    Exhausted(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("rejected by backend: {0}")]
    Rejected(String),
    #[error("measurement lifecycle violation: {0}")]
    Lifecycle(String),
    #[error("series `{0}` has no samples")]
    EmptySeries(String),
    #[error("deployment refused: {0}")]
    Deployment(String),
    #[error("run exceeded its budget of {0} ticks")]
    Budget(Tick),
    #[error("backend answered {0} with an unexpected reply")]
    Protocol(&'static str),
}

pub type PerfResult<T> = Result<T, PerfError>;

/// The services a task can request from its executive.
pub trait PerfBackend: Clone + 'static {
    /// Reads the measurement clock. Free: charges nothing.
    fn now(&self) -> Tick;

    fn rate(&self) -> Rate;

    fn invoke(&self, call: PerfCall<Self>) -> impl Future<Output = PerfResult<PerfReply>>;
}

/// What `yield_and_wait` blocks on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WaitTarget {
    Semaphore(SemHandle, Wait),
    Event(EventHandle, Wait),
    Period,
}

macro_rules! ops {
    ($( $(#[$m:meta])* fn $name:ident($($arg:ident: $ty:ty),*) -> $out:ty = $op:expr => $pat:pat => $val:expr; )*) => {
        $(
            $(#[$m])*
            async fn $name(&self, $($arg: $ty),*) -> PerfResult<$out> {
                let op = $op;
                let name = op.name();
                match self.invoke(PerfCall::Op(op)).await? {
                    $pat => Ok($val),
                    _ => Err(PerfError::Protocol(name)),
                }
            }
        )*
    };
}

/// Typed helpers over [`PerfBackend::invoke`]; implemented for every backend.
#[allow(async_fn_in_trait)]
pub trait Perf: PerfBackend {
    /// Creates a dormant task.
    async fn create_dormant(&self, spec: TaskSpec<Self>) -> PerfResult<TaskHandle> {
        match self.invoke(PerfCall::CreateTask(spec)).await? {
            PerfReply::Task(t) => Ok(t),
            _ => Err(PerfError::Protocol("create_task")),
        }
    }

    /// Creates a task and makes it ready.
    async fn create_task(&self, spec: TaskSpec<Self>) -> PerfResult<TaskHandle> {
        let t = self.create_dormant(spec).await?;
        self.start_task(t).await?;
        Ok(t)
    }

    /// Blocks on a semaphore, an event or the next periodic release.
    async fn yield_and_wait(&self, target: WaitTarget) -> PerfResult<()> {
        match target {
            WaitTarget::Semaphore(s, w) => self.wait_sem(s, w).await,
            WaitTarget::Event(e, w) => self.wait_event(e, w).await,
            WaitTarget::Period => self.periodic_wait().await,
        }
    }

    /// Lets equal-priority peers run.
    async fn yield_now(&self) -> PerfResult<()> {
        self.delay(0).await
    }

    ops! {
        fn start_task(t: TaskHandle) -> () = PerfOp::StartTask(t) => PerfReply::Unit => ();
        fn stop_task(t: TaskHandle) -> () = PerfOp::StopTask(t) => PerfReply::Unit => ();
        fn set_priority(t: TaskHandle, p: i32) -> () = PerfOp::SetPriority(t, p) => PerfReply::Unit => ();
        fn current_task() -> TaskHandle = PerfOp::CurrentTask => PerfReply::Task(t) => t;
        fn find_task(name: &str) -> TaskHandle = PerfOp::FindTask(name.into()) => PerfReply::Task(t) => t;
        fn task_status(t: TaskHandle) -> TaskInfo = PerfOp::TaskStatus(t) => PerfReply::TaskInfo(i) => i;
        fn partition_status() -> PartitionInfo = PerfOp::PartitionStatus => PerfReply::PartitionInfo(i) => i;
        fn lock_preemption() -> u32 = PerfOp::LockPreemption => PerfReply::Level(l) => l;
        fn unlock_preemption() -> u32 = PerfOp::UnlockPreemption => PerfReply::Level(l) => l;
        fn periodic_wait() -> () = PerfOp::PeriodicWait => PerfReply::Unit => ();
        fn delay(t: Tick) -> () = PerfOp::Delay(t) => PerfReply::Unit => ();
        /// The tick counter as a kernel service (charged like any call).
        fn ticks() -> Tick = PerfOp::Ticks => PerfReply::Ticks(t) => t;
        fn raise_fault(f: Fault) -> Recovery = PerfOp::RaiseFault(f) => PerfReply::Recovery(r) => r;

        fn create_sem(name: &str, initial: u32, max: u32) -> SemHandle =
            PerfOp::CreateSem { name: name.into(), initial, max } => PerfReply::Sem(h) => h;
        fn wait_sem(s: SemHandle, w: Wait) -> () = PerfOp::WaitSem(s, w) => PerfReply::Unit => ();
        fn signal_sem(s: SemHandle) -> () = PerfOp::SignalSem(s) => PerfReply::Unit => ();
        fn find_sem(name: &str) -> SemHandle = PerfOp::FindSem(name.into()) => PerfReply::Sem(h) => h;
        fn sem_status(s: SemHandle) -> SemInfo = PerfOp::SemStatus(s) => PerfReply::SemInfo(i) => i;

        fn create_event(name: &str) -> EventHandle = PerfOp::CreateEvent(name.into()) => PerfReply::Event(h) => h;
        fn set_event(e: EventHandle) -> () = PerfOp::SetEvent(e) => PerfReply::Unit => ();
        fn reset_event(e: EventHandle) -> () = PerfOp::ResetEvent(e) => PerfReply::Unit => ();
        fn wait_event(e: EventHandle, w: Wait) -> () = PerfOp::WaitEvent(e, w) => PerfReply::Unit => ();
        fn find_event(name: &str) -> EventHandle = PerfOp::FindEvent(name.into()) => PerfReply::Event(h) => h;
        fn event_status(e: EventHandle) -> EventInfo = PerfOp::EventStatus(e) => PerfReply::EventInfo(i) => i;

        fn create_mutex(name: &str) -> MutexHandle = PerfOp::CreateMutex(name.into()) => PerfReply::Mutex(h) => h;
        fn lock(m: MutexHandle, w: Wait) -> () = PerfOp::Lock(m, w) => PerfReply::Unit => ();
        fn unlock(m: MutexHandle) -> () = PerfOp::Unlock(m) => PerfReply::Unit => ();
        fn find_mutex(name: &str) -> MutexHandle = PerfOp::FindMutex(name.into()) => PerfReply::Mutex(h) => h;

        fn create_board(name: &str, max_size: usize) -> BoardHandle =
            PerfOp::CreateBoard { name: name.into(), max_size } => PerfReply::Board(h) => h;
        fn display(b: BoardHandle, msg: &[u8]) -> () = PerfOp::Display(b, msg.to_vec()) => PerfReply::Unit => ();
        fn read_board(b: BoardHandle, w: Wait) -> Vec<u8> = PerfOp::ReadBoard(b, w) => PerfReply::Message(m) => m;
        fn clear_board(b: BoardHandle) -> () = PerfOp::ClearBoard(b) => PerfReply::Unit => ();
        fn find_board(name: &str) -> BoardHandle = PerfOp::FindBoard(name.into()) => PerfReply::Board(h) => h;

        fn create_buffer(name: &str, capacity: usize, max_size: usize) -> BufferHandle =
            PerfOp::CreateBuffer { name: name.into(), capacity, max_size } => PerfReply::Buffer(h) => h;
        fn send_buffer(b: BufferHandle, msg: &[u8], w: Wait) -> () =
            PerfOp::SendBuffer(b, msg.to_vec(), w) => PerfReply::Unit => ();
        fn receive_buffer(b: BufferHandle, w: Wait) -> Vec<u8> =
            PerfOp::ReceiveBuffer(b, w) => PerfReply::Message(m) => m;
        fn find_buffer(name: &str) -> BufferHandle = PerfOp::FindBuffer(name.into()) => PerfReply::Buffer(h) => h;

        fn create_sampling(name: &str, max_size: usize, direction: Direction, refresh: Tick) -> SamplingHandle =
            PerfOp::CreateSampling { name: name.into(), max_size, direction, refresh } => PerfReply::Sampling(h) => h;
        fn write_sampling(p: SamplingHandle, msg: &[u8]) -> () =
            PerfOp::WriteSampling(p, msg.to_vec()) => PerfReply::Unit => ();
        fn read_sampling(p: SamplingHandle) -> (Vec<u8>, bool) =
            PerfOp::ReadSampling(p) => PerfReply::Sample { data, fresh } => (data, fresh);
        fn find_sampling(name: &str) -> SamplingHandle =
            PerfOp::FindSampling(name.into()) => PerfReply::Sampling(h) => h;
        fn sampling_status(p: SamplingHandle) -> SamplingInfo =
            PerfOp::SamplingStatus(p) => PerfReply::SamplingInfo(i) => i;

        fn create_queuing(name: &str, capacity: usize, max_size: usize, direction: Direction) -> QueuingHandle =
            PerfOp::CreateQueuing { name: name.into(), capacity, max_size, direction } => PerfReply::Queuing(h) => h;
        fn send_queuing(q: QueuingHandle, msg: &[u8], w: Wait) -> () =
            PerfOp::SendQueuing(q, msg.to_vec(), w) => PerfReply::Unit => ();
        fn receive_queuing(q: QueuingHandle, w: Wait) -> Vec<u8> =
            PerfOp::ReceiveQueuing(q, w) => PerfReply::Message(m) => m;
        fn find_queuing(name: &str) -> QueuingHandle =
            PerfOp::FindQueuing(name.into()) => PerfReply::Queuing(h) => h;
        fn queuing_status(q: QueuingHandle) -> QueuingInfo =
            PerfOp::QueuingStatus(q) => PerfReply::QueuingInfo(i) => i;

        fn work(t: Tick) -> () = PerfOp::Work(t) => PerfReply::Unit => ();
        fn modeled(op: &'static str, units: u64) -> () = PerfOp::Modeled { op, units } => PerfReply::Unit => ();
    }
}

impl<B: PerfBackend> Perf for B {}
