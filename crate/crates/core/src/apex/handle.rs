use std::cell::RefCell;
use std::fmt;
use std::future::Future;
use std::pin::Pin;
use std::rc::Rc;
use std::task::{Context, Poll};

use super::call::*;
use super::kernel::Kernel;
use super::types::*;
use crate::timebase::{Rate, Tick};

pub type ProcessFuture = Pin<Box<dyn Future<Output = ()>>>;

/// A process (or partition main) body. Called afresh on every start, so a
/// restarted process begins from the top.
#[derive(Clone)]
pub struct Entry(Rc<dyn Fn(Apex) -> ProcessFuture>);

impl Entry {
    pub fn new<F, Fut>(f: F) -> Self
    where
        F: Fn(Apex) -> Fut + 'static,
        Fut: Future<Output = ()> + 'static,
    {
        Entry(Rc::new(move |apex| Box::pin(f(apex))))
    }

    pub(crate) fn spawn(&self, apex: Apex) -> ProcessFuture {
        (self.0)(apex)
    }
}

impl fmt::Debug for Entry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Entry(..)")
    }
}

/// The APEX interface as seen by one process. Every service is an `await`
/// point: the calling process is charged the service cost and the effect
/// lands when the charge has been fully consumed.
#[derive(Clone)]
pub struct Apex {
    kernel: Rc<RefCell<Kernel>>,
    slot: usize,
    generation: u64,
}

impl fmt::Debug for Apex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Apex").field("slot", &self.slot).finish()
    }
}

pub struct SyscallFuture {
    apex: Apex,
    call: Option<ApexCall>,
}

impl Future for SyscallFuture {
    type Output = ApexResult<Reply>;

    fn poll(mut self: Pin<&mut Self>, _cx: &mut Context<'_>) -> Poll<Self::Output> {
        let this = &mut *self;
        let mut k = this.apex.kernel.borrow_mut();
        if let Some(call) = this.call.take() {
            k.issue(this.apex.slot, this.apex.generation, call);
            return Poll::Pending;
        }
        match k.take_result(this.apex.slot, this.apex.generation) {
            Some(r) => Poll::Ready(r),
            None => Poll::Pending,
        }
    }
}

fn unexpected<T>(reply: Reply) -> ApexResult<T> {
    panic!("kernel answered with mismatched reply {reply:?}")
}

macro_rules! typed {
    ($( $(#[$m:meta])* fn $name:ident($($arg:ident: $ty:ty),*) -> $out:ty = $call:expr => $pat:pat => $val:expr; )*) => {
        $(
            $(#[$m])*
            pub async fn $name(&self, $($arg: $ty),*) -> ApexResult<$out> {
                match self.call($call).await? {
                    $pat => Ok($val),
                    other => unexpected(other),
                }
            }
        )*
    };
}

impl Apex {
    pub(crate) fn new(kernel: Rc<RefCell<Kernel>>, slot: usize, generation: u64) -> Self {
        Apex {
            kernel,
            slot,
            generation,
        }
    }

    pub fn call(&self, call: ApexCall) -> SyscallFuture {
        SyscallFuture {
            apex: self.clone(),
            call: Some(call),
        }
    }

    /// Reads the time base directly, as measurement instrumentation does.
    /// Unlike [`Apex::get_current_ticks`] this is free.
    pub fn now(&self) -> Tick {
        self.kernel.borrow().now()
    }

    pub fn rate(&self) -> Rate {
        self.kernel.borrow().rate()
    }

    pub fn process_id(&self) -> ProcessId {
        self.kernel.borrow().process_id_of(self.slot)
    }

    pub fn partition_id(&self) -> PartitionId {
        self.kernel.borrow().partition_of(self.slot)
    }

    typed! {
        fn create_process(attrs: ProcessAttributes) -> ProcessId =
            ApexCall::CreateProcess(attrs) => Reply::Process(id) => id;
        fn start(id: ProcessId) -> () = ApexCall::StartProcess(id) => Reply::Unit => ();
        fn stop(id: ProcessId) -> () = ApexCall::StopProcess(id) => Reply::Unit => ();
        fn set_priority(id: ProcessId, priority: Priority) -> () =
            ApexCall::SetPriority { id, priority } => Reply::Unit => ();
        fn get_my_id() -> ProcessId = ApexCall::GetMyId => Reply::Process(id) => id;
        fn get_process_id(name: &str) -> ProcessId =
            ApexCall::GetProcessId(name.to_string()) => Reply::Process(id) => id;
        fn get_process_status(id: ProcessId) -> ProcessStatus =
            ApexCall::GetProcessStatus(id) => Reply::ProcessStatus(s) => s;
        fn get_partition_status() -> PartitionStatus =
            ApexCall::GetPartitionStatus => Reply::PartitionStatus(s) => s;
        fn lock_preemption() -> u32 = ApexCall::LockPreemption => Reply::LockLevel(l) => l;
        fn unlock_preemption() -> u32 = ApexCall::UnlockPreemption => Reply::LockLevel(l) => l;
        fn periodic_wait() -> () = ApexCall::PeriodicWait => Reply::Unit => ();
        /// `timed_wait(0)` yields to equal-priority peers.
        fn timed_wait(ticks: Tick) -> () = ApexCall::TimedWait(ticks) => Reply::Unit => ();
        fn get_current_ticks() -> Tick = ApexCall::GetCurrentTicks => Reply::Ticks(t) => t;
        fn raise_error(code: ErrorCode) -> HealthAction =
            ApexCall::RaiseError(code) => Reply::Health(a) => a;

        fn create_semaphore(name: &str, initial: u32, max: u32) -> SemaphoreId =
            ApexCall::CreateSemaphore { name: name.to_string(), initial, max } => Reply::Semaphore(id) => id;
        fn wait_semaphore(id: SemaphoreId, timeout: Timeout) -> () =
            ApexCall::WaitSemaphore { id, timeout } => Reply::Unit => ();
        fn signal_semaphore(id: SemaphoreId) -> () = ApexCall::SignalSemaphore(id) => Reply::Unit => ();
        fn get_semaphore_id(name: &str) -> SemaphoreId =
            ApexCall::GetSemaphoreId(name.to_string()) => Reply::Semaphore(id) => id;
        fn get_semaphore_status(id: SemaphoreId) -> SemaphoreStatus =
            ApexCall::GetSemaphoreStatus(id) => Reply::SemaphoreStatus(s) => s;

        fn create_event(name: &str) -> EventId =
            ApexCall::CreateEvent(name.to_string()) => Reply::Event(id) => id;
        fn set_event(id: EventId) -> () = ApexCall::SetEvent(id) => Reply::Unit => ();
        fn reset_event(id: EventId) -> () = ApexCall::ResetEvent(id) => Reply::Unit => ();
        fn wait_event(id: EventId, timeout: Timeout) -> () =
            ApexCall::WaitEvent { id, timeout } => Reply::Unit => ();
        fn get_event_id(name: &str) -> EventId =
            ApexCall::GetEventId(name.to_string()) => Reply::Event(id) => id;
        fn get_event_status(id: EventId) -> EventStatus =
            ApexCall::GetEventStatus(id) => Reply::EventStatus(s) => s;

        fn create_mutex(name: &str) -> MutexId =
            ApexCall::CreateMutex(name.to_string()) => Reply::Mutex(id) => id;
        fn acquire_mutex(id: MutexId, timeout: Timeout) -> () =
            ApexCall::AcquireMutex { id, timeout } => Reply::Unit => ();
        fn release_mutex(id: MutexId) -> () = ApexCall::ReleaseMutex(id) => Reply::Unit => ();
        fn get_mutex_id(name: &str) -> MutexId =
            ApexCall::GetMutexId(name.to_string()) => Reply::Mutex(id) => id;

        fn create_blackboard(name: &str, max_size: usize) -> BlackboardId =
            ApexCall::CreateBlackboard { name: name.to_string(), max_size } => Reply::Blackboard(id) => id;
        fn display_blackboard(id: BlackboardId, msg: &[u8]) -> () =
            ApexCall::DisplayBlackboard { id, msg: msg.to_vec() } => Reply::Unit => ();
        fn read_blackboard(id: BlackboardId, timeout: Timeout) -> Vec<u8> =
            ApexCall::ReadBlackboard { id, timeout } => Reply::Message(m) => m;
        fn clear_blackboard(id: BlackboardId) -> () = ApexCall::ClearBlackboard(id) => Reply::Unit => ();
        fn get_blackboard_id(name: &str) -> BlackboardId =
            ApexCall::GetBlackboardId(name.to_string()) => Reply::Blackboard(id) => id;

        fn create_buffer(name: &str, capacity: usize, max_size: usize) -> BufferId =
            ApexCall::CreateBuffer { name: name.to_string(), capacity, max_size } => Reply::Buffer(id) => id;
        fn send_buffer(id: BufferId, msg: &[u8], timeout: Timeout) -> () =
            ApexCall::SendBuffer { id, msg: msg.to_vec(), timeout } => Reply::Unit => ();
        fn receive_buffer(id: BufferId, timeout: Timeout) -> Vec<u8> =
            ApexCall::ReceiveBuffer { id, timeout } => Reply::Message(m) => m;
        fn get_buffer_id(name: &str) -> BufferId =
            ApexCall::GetBufferId(name.to_string()) => Reply::Buffer(id) => id;

        fn create_sampling_port(name: &str, max_size: usize, direction: PortDirection, refresh: Tick) -> SamplingPortId =
            ApexCall::CreateSamplingPort { name: name.to_string(), max_size, direction, refresh } => Reply::SamplingPort(id) => id;
        fn write_sampling_message(id: SamplingPortId, msg: &[u8]) -> () =
            ApexCall::WriteSamplingMessage { id, msg: msg.to_vec() } => Reply::Unit => ();
        fn read_sampling_message(id: SamplingPortId) -> (Vec<u8>, Validity) =
            ApexCall::ReadSamplingMessage(id) => Reply::Sampled(m, v) => (m, v);
        fn get_sampling_port_id(name: &str) -> SamplingPortId =
            ApexCall::GetSamplingPortId(name.to_string()) => Reply::SamplingPort(id) => id;
        fn get_sampling_port_status(id: SamplingPortId) -> SamplingPortStatus =
            ApexCall::GetSamplingPortStatus(id) => Reply::SamplingStatus(s) => s;

        fn create_queuing_port(name: &str, capacity: usize, max_size: usize, direction: PortDirection) -> QueuingPortId =
            ApexCall::CreateQueuingPort { name: name.to_string(), capacity, max_size, direction } => Reply::QueuingPort(id) => id;
        fn send_queuing_message(id: QueuingPortId, msg: &[u8], timeout: Timeout) -> () =
            ApexCall::SendQueuingMessage { id, msg: msg.to_vec(), timeout } => Reply::Unit => ();
        fn receive_queuing_message(id: QueuingPortId, timeout: Timeout) -> Vec<u8> =
            ApexCall::ReceiveQueuingMessage { id, timeout } => Reply::Message(m) => m;
        fn get_queuing_port_id(name: &str) -> QueuingPortId =
            ApexCall::GetQueuingPortId(name.to_string()) => Reply::QueuingPort(id) => id;
        fn get_queuing_port_status(id: QueuingPortId) -> QueuingPortStatus =
            ApexCall::GetQueuingPortStatus(id) => Reply::QueuingStatus(s) => s;

        fn work(ticks: Tick) -> () = ApexCall::Work(ticks) => Reply::Unit => ();
        fn modeled_work(op: &str, units: u64) -> () =
            ApexCall::ModeledWork { op: op.to_string(), units } => Reply::Unit => ();
    }
}
