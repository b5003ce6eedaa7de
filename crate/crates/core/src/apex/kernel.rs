use std::collections::{BTreeMap, BTreeSet};

use super::call::*;
use super::config::{ChannelConfig, ChannelKind, HealthMonitorTable, ScheduleWindow, SystemConfig};
use super::handle::Entry;
use super::ipc::{
    check_size, Acquire, Blackboard, Buffer, Event, Mutex, QueuingChannel, QueuingPort, SamplingChannel, SamplingPort,
    Semaphore, Slot,
};
use super::trace::{TraceEvent, TraceKind};
use super::types::*;
use crate::timebase::{ClockBackend, CostTable, Rate, Tick};

const SYNC_OBJECT_BYTES: u64 = 32;
const MESSAGE_OBJECT_BYTES: u64 = 64;

#[derive(Debug)]
pub(crate) enum WaitReason {
    Semaphore(usize),
    Event(usize),
    Mutex(usize),
    Blackboard(usize),
    Buffer(usize),
    Queuing(usize),
    Release,
    Delay,
}

#[derive(Debug)]
pub(crate) enum Activity {
    /// Executing process code (or not yet started).
    Runnable,
    Charging {
        call: ApexCall,
        remaining: Tick,
    },
    Blocked(WaitReason),
    /// A completed service whose result the process has not collected yet.
    Done(ApexResult<Reply>),
}

#[derive(Debug)]
pub(crate) struct Pcb {
    pub id: ProcessId,
    pub partition: usize,
    pub name: String,
    pub base_priority: Priority,
    pub priority: Priority,
    pub period: Option<Tick>,
    pub deadline: Option<Tick>,
    pub entry: Entry,
    pub state: ProcessState,
    pub seq: u64,
    pub ready_since: Tick,
    pub activity: Activity,
    pub wake_deadline: Option<Tick>,
    pub next_release: Option<Tick>,
    pub generation: u64,
    pub retired: bool,
    pub is_main: bool,
}

#[derive(Debug, Default)]
struct Names {
    processes: BTreeMap<String, Slot>,
    semaphores: BTreeMap<String, usize>,
    events: BTreeMap<String, usize>,
    mutexes: BTreeMap<String, usize>,
    blackboards: BTreeMap<String, usize>,
    buffers: BTreeMap<String, usize>,
}

#[derive(Debug)]
pub(crate) struct PartitionRt {
    pub id: PartitionId,
    pub name: String,
    pub quota: u64,
    pub used: u64,
    pub cap: usize,
    pub runtime_creation: bool,
    pub mode: PartitionMode,
    pub lock_level: u32,
    pub entry: Option<Entry>,
    pub needs_boot: bool,
    pub running: Option<Slot>,
    pub last_dispatched: Option<Slot>,
    pub processes: Vec<Slot>,
    /// The non-dormant subset of `processes`, in the same (slot) order; the
    /// only ones the scheduler and timers need to look at.
    live: Vec<Slot>,
    names: Names,
}

/// A health monitor intervention.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HealthRecord {
    pub tick: Tick,
    pub partition: PartitionId,
    pub process: ProcessId,
    pub code: ErrorCode,
    pub action: HealthAction,
}

/// What the scheduler decided for one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Decision {
    /// Resume the process at this slot.
    Poll(Slot),
    /// Time was consumed or state changed; nothing to poll.
    Progress,
    /// No process could run; the clock moved to the next interesting tick.
    Idle,
}

enum Effect {
    Done(ApexResult<Reply>),
    Block(WaitReason, Option<Tick>),
    /// The caller itself was stopped or restarted by the call.
    Gone,
}

struct Window {
    partition: usize,
    offset: Tick,
    duration: Tick,
}

pub struct Kernel {
    clock: ClockBackend,
    costs: CostTable,
    partition_switch_cost: Tick,
    hm: HealthMonitorTable,
    record_trace: bool,

    pub(crate) parts: Vec<PartitionRt>,
    part_index: BTreeMap<PartitionId, usize>,
    pub(crate) pcbs: Vec<Pcb>,
    by_id: BTreeMap<ProcessId, Slot>,
    next_pid: u32,
    seq: u64,

    semaphores: Vec<Option<Semaphore>>,
    events: Vec<Option<Event>>,
    mutexes: Vec<Option<Mutex>>,
    blackboards: Vec<Option<Blackboard>>,
    buffers: Vec<Option<Buffer>>,

    sampling_ports: Vec<Option<SamplingPort>>,
    sampling_channels: Vec<SamplingChannel>,
    sampling_names: BTreeMap<String, usize>,
    queuing_ports: Vec<Option<QueuingPort>>,
    queuing_channels: Vec<QueuingChannel>,
    queuing_names: BTreeMap<String, usize>,
    channel_cfg: Vec<ChannelConfig>,
    endpoints: BTreeMap<String, (usize, PortDirection)>,
    channel_inst: BTreeMap<usize, usize>,
    dirty_channels: BTreeSet<usize>,

    windows: Vec<Window>,
    frame: Tick,
    cur_window: Option<(u64, usize)>,
    window_start: Tick,
    window_end: Tick,
    pub(crate) active: Option<usize>,
    last_partition: Option<usize>,
    overhead: Tick,

    pub(crate) polling: Option<Slot>,
    pub(crate) discard: Vec<Slot>,
    trace: Vec<TraceEvent>,
    health_log: Vec<HealthRecord>,
    dispatches: u64,
}

impl Kernel {
    pub(crate) fn new(config: SystemConfig) -> Self {
        let part_index: BTreeMap<PartitionId, usize> =
            config.partitions.iter().enumerate().map(|(i, p)| (p.id, i)).collect();
        let parts = config
            .partitions
            .iter()
            .map(|p| PartitionRt {
                id: p.id,
                name: p.name.clone(),
                quota: p.memory_quota,
                used: 0,
                cap: p.process_cap.unwrap_or(config.process_cap),
                runtime_creation: p.runtime_creation,
                mode: PartitionMode::ColdStart,
                lock_level: 0,
                entry: p.entry.clone(),
                needs_boot: true,
                running: None,
                last_dispatched: None,
                processes: Vec::new(),
                live: Vec::new(),
                names: Names::default(),
            })
            .collect();
        let windows = config
            .schedule
            .windows
            .iter()
            .map(|w: &ScheduleWindow| Window {
                partition: part_index[&w.partition_id],
                offset: w.offset_ticks,
                duration: w.duration_ticks,
            })
            .collect();
        let mut endpoints = BTreeMap::new();
        for (i, c) in config.channels.iter().enumerate() {
            endpoints.insert(c.source.clone(), (i, PortDirection::Source));
            endpoints.insert(c.destination.clone(), (i, PortDirection::Destination));
        }
        Kernel {
            clock: ClockBackend::new(config.clock, config.ticks_per_us),
            partition_switch_cost: config.partition_switch_cost(),
            costs: config.costs,
            hm: config.health_monitor,
            record_trace: config.record_trace,
            parts,
            part_index,
            pcbs: Vec::new(),
            by_id: BTreeMap::new(),
            next_pid: 1,
            seq: 0,
            semaphores: Vec::new(),
            events: Vec::new(),
            mutexes: Vec::new(),
            blackboards: Vec::new(),
            buffers: Vec::new(),
            sampling_ports: Vec::new(),
            sampling_channels: Vec::new(),
            sampling_names: BTreeMap::new(),
            queuing_ports: Vec::new(),
            queuing_channels: Vec::new(),
            queuing_names: BTreeMap::new(),
            channel_cfg: config.channels,
            endpoints,
            channel_inst: BTreeMap::new(),
            dirty_channels: BTreeSet::new(),
            windows,
            frame: config.schedule.major_frame_ticks,
            cur_window: None,
            window_start: 0,
            window_end: 0,
            active: None,
            last_partition: None,
            overhead: 0,
            polling: None,
            discard: Vec::new(),
            trace: Vec::new(),
            health_log: Vec::new(),
            dispatches: 0,
        }
    }

    // ----- queries -------------------------------------------------------

    pub fn now(&self) -> Tick {
        self.clock.now()
    }

    pub fn rate(&self) -> Rate {
        self.clock.rate()
    }

    pub fn models_costs(&self) -> bool {
        self.clock.models_costs()
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    pub fn take_trace(&mut self) -> Vec<TraceEvent> {
        std::mem::take(&mut self.trace)
    }

    pub fn health_log(&self) -> &[HealthRecord] {
        &self.health_log
    }

    pub fn dispatch_count(&self) -> u64 {
        self.dispatches
    }

    pub fn partition_ids(&self) -> Vec<PartitionId> {
        self.parts.iter().map(|p| p.id).collect()
    }

    pub fn partition_mode(&self, id: PartitionId) -> Option<PartitionMode> {
        self.part_index.get(&id).map(|&i| self.parts[i].mode)
    }

    pub fn memory_used(&self, id: PartitionId) -> Option<(u64, u64)> {
        self.part_index
            .get(&id)
            .map(|&i| (self.parts[i].used, self.parts[i].quota))
    }

    /// Partition whose window covers the current tick, if any.
    pub fn active_partition(&self) -> Option<PartitionId> {
        self.active.map(|p| self.parts[p].id)
    }

    /// The process currently holding the CPU.
    pub fn running_process(&self) -> Option<ProcessId> {
        let p = self.active?;
        let r = self.parts[p].running?;
        (self.pcbs[r].state == ProcessState::Running).then_some(self.pcbs[r].id)
    }

    /// Status of every user process ever created, including retired ones.
    pub fn process_table(&self) -> Vec<ProcessStatus> {
        self.pcbs
            .iter()
            .filter(|p| !p.is_main)
            .map(|p| self.status_of(p))
            .collect()
    }

    pub fn process_status(&self, id: ProcessId) -> Option<ProcessStatus> {
        self.by_id.get(&id).map(|&s| self.status_of(&self.pcbs[s]))
    }

    pub(crate) fn process_id_of(&self, slot: Slot) -> ProcessId {
        self.pcbs[slot].id
    }

    pub(crate) fn partition_of(&self, slot: Slot) -> PartitionId {
        self.parts[self.pcbs[slot].partition].id
    }

    pub(crate) fn generation_of(&self, slot: Slot) -> u64 {
        self.pcbs[slot].generation
    }

    pub(crate) fn entry_of(&self, slot: Slot) -> Entry {
        self.pcbs[slot].entry.clone()
    }

    fn status_of(&self, p: &Pcb) -> ProcessStatus {
        ProcessStatus {
            id: p.id,
            name: p.name.clone(),
            partition: self.parts[p.partition].id,
            base_priority: p.base_priority,
            current_priority: p.priority,
            period: p.period,
            deadline: p.deadline,
            state: p.state,
        }
    }

    /// True when some partition could still make progress without an
    /// external stimulus.
    pub(crate) fn has_pending_work(&self) -> bool {
        self.parts.iter().any(|p| p.needs_boot && p.mode != PartitionMode::Idle)
            || self
                .parts
                .iter()
                .flat_map(|part| &part.live)
                .map(|&s| &self.pcbs[s])
                .any(|p| {
                    !p.retired
                        && match p.state {
                            ProcessState::Ready | ProcessState::Running => true,
                            ProcessState::Waiting => p.wake_deadline.is_some() || p.next_release.is_some(),
                            ProcessState::Dormant => false,
                        }
                })
            || !self.dirty_channels.is_empty() && self.has_serviceable_channel()
            || self.overhead > 0
    }

    fn has_serviceable_channel(&self) -> bool {
        self.dirty_channels.iter().any(|&c| {
            let q = &self.queuing_channels[c].queue;
            (!q.recv_waiters.is_empty() && !q.queue.is_empty()) || (!q.send_waiters.is_empty() && !q.is_full())
        })
    }

    // ----- tracing -------------------------------------------------------

    fn emit(&mut self, kind: TraceKind, partition: Option<usize>, slot: Option<Slot>, detail: impl FnOnce() -> String) {
        if !self.record_trace {
            return;
        }
        let tick = self.clock.now();
        let partition = partition.map(|p| self.parts[p].id);
        let process = slot.map(|s| self.pcbs[s].id);
        self.trace.push(TraceEvent {
            tick,
            kind,
            partition,
            process,
            detail: detail(),
        });
    }

    fn emit_proc(&mut self, kind: TraceKind, slot: Slot, detail: impl FnOnce() -> String) {
        let p = self.pcbs[slot].partition;
        self.emit(kind, Some(p), Some(slot), detail);
    }

    // ----- process side of a system call ---------------------------------

    pub(crate) fn issue(&mut self, slot: Slot, generation: u64, call: ApexCall) {
        assert_eq!(
            self.polling,
            Some(slot),
            "an APEX handle was used outside the process it belongs to"
        );
        assert_eq!(self.pcbs[slot].generation, generation, "stale APEX handle");
        let remaining = self.cost_of(&call);
        self.pcbs[slot].activity = Activity::Charging { call, remaining };
    }

    pub(crate) fn take_result(&mut self, slot: Slot, generation: u64) -> Option<ApexResult<Reply>> {
        let pcb = &mut self.pcbs[slot];
        if pcb.generation != generation {
            return None;
        }
        match std::mem::replace(&mut pcb.activity, Activity::Runnable) {
            Activity::Done(r) => Some(r),
            other => {
                pcb.activity = other;
                None
            }
        }
    }

    fn cost_of(&self, call: &ApexCall) -> Tick {
        match call {
            ApexCall::Work(t) => *t,
            _ if !self.models_costs() => 0,
            ApexCall::ModeledWork { op, units } => self.costs.cost(op).saturating_mul(*units),
            other => self.costs.cost(other.name()),
        }
    }

    /// Called by the executor after polling `slot`.
    pub(crate) fn after_poll(&mut self, slot: Slot, finished: bool) {
        self.polling = None;
        if finished {
            self.emit_proc(TraceKind::Terminate, slot, String::new);
            let was_main = self.pcbs[slot].is_main;
            self.reset_process(slot, true);
            if was_main {
                self.pcbs[slot].retired = true;
                let p = self.pcbs[slot].partition;
                if self.parts[p].mode == PartitionMode::ColdStart {
                    self.set_mode(p, PartitionMode::Normal);
                }
            }
            return;
        }
        match self.pcbs[slot].activity {
            Activity::Charging { .. } => {}
            _ => panic!(
                "process `{}` suspended on something other than a kernel service",
                self.pcbs[slot].name
            ),
        }
    }

    // ----- scheduling ----------------------------------------------------

    fn locate(&self, now: Tick) -> Result<(u64, usize), Tick> {
        let frame_no = now / self.frame;
        let base = frame_no * self.frame;
        let off = now - base;
        for (i, w) in self.windows.iter().enumerate() {
            if off < w.offset {
                return Err(base + w.offset);
            }
            if off < w.offset + w.duration {
                return Ok((frame_no, i));
            }
        }
        Err(base + self.frame + self.windows[0].offset)
    }

    pub(crate) fn schedule(&mut self) -> Decision {
        let now = self.now();
        let (frame_no, wi) = match self.locate(now) {
            Ok(w) => w,
            Err(next_start) => {
                self.leave_window();
                self.emit(TraceKind::Idle, None, None, || format!("gap until {next_start}"));
                self.clock.advance_to(next_start);
                return Decision::Idle;
            }
        };
        if self.cur_window != Some((frame_no, wi)) {
            self.enter_window(frame_no, wi);
        }
        let p = self.active.expect("window entered");
        let we = self.window_end;

        if self.overhead > 0 {
            let d = self.overhead.min(we - now);
            self.clock.advance_to(now + d);
            self.overhead -= d;
            return Decision::Progress;
        }
        if self.parts[p].mode == PartitionMode::Idle {
            self.clock.advance_to(we);
            return Decision::Idle;
        }

        self.service_partition(p);
        if self.parts[p].mode == PartitionMode::Idle || self.parts[p].needs_boot {
            // the health monitor stopped or restarted the partition
            self.clock.advance_to(we);
            return Decision::Idle;
        }

        let Some(slot) = self.pick(p) else {
            let until = self.next_timer(p).map_or(we, |t| t.min(we));
            self.clock.advance_to(until.max(now));
            return Decision::Idle;
        };

        if self.parts[p].running != Some(slot) || self.pcbs[slot].state != ProcessState::Running {
            self.dispatch(p, slot);
            if self.overhead > 0 {
                return Decision::Progress;
            }
        }

        match &mut self.pcbs[slot].activity {
            Activity::Runnable | Activity::Done(_) => {
                self.polling = Some(slot);
                Decision::Poll(slot)
            }
            Activity::Charging { remaining, .. } if *remaining > 0 => {
                let remaining = *remaining;
                let limit = self.next_timer(p).map_or(we, |t| t.min(we));
                let d = remaining.min(limit.saturating_sub(now)).max(1).min(we - now);
                self.clock.advance_to(now + d);
                let after = self.now();
                if let Activity::Charging { remaining, .. } = &mut self.pcbs[slot].activity {
                    // a host clock may overshoot; never charge beyond what is owed
                    *remaining = remaining.saturating_sub((after - now).max(d));
                }
                Decision::Progress
            }
            Activity::Charging { .. } => {
                self.complete_call(slot);
                Decision::Progress
            }
            Activity::Blocked(_) => unreachable!("blocked process selected"),
        }
    }

    fn leave_window(&mut self) {
        if let Some(prev) = self.active.take() {
            // a process holding the preemption lock keeps its claim on the
            // CPU across the gap and resumes first in the next window
            let part = &mut self.parts[prev];
            let r = if part.lock_level > 0 {
                part.running
            } else {
                part.running.take()
            };
            if let Some(r) = r {
                if self.pcbs[r].state == ProcessState::Running {
                    self.pcbs[r].state = ProcessState::Ready;
                }
            }
        }
        self.cur_window = None;
    }

    fn enter_window(&mut self, frame_no: u64, wi: usize) {
        self.leave_window();
        let w = &self.windows[wi];
        let p = w.partition;
        self.window_start = frame_no * self.frame + w.offset;
        self.window_end = self.window_start + w.duration;
        self.cur_window = Some((frame_no, wi));
        self.active = Some(p);
        self.overhead = 0;
        self.emit(TraceKind::WindowStart, Some(p), None, || {
            format!("frame={frame_no} window={wi}")
        });
        if self.last_partition.is_some() && self.last_partition != Some(p) {
            let from = self.last_partition.map(|q| self.parts[q].id).unwrap();
            self.emit(TraceKind::PartitionSwitch, Some(p), None, || format!("from={from}"));
            if self.models_costs() {
                self.overhead = self.partition_switch_cost;
            }
        }
        self.last_partition = Some(p);
        if self.parts[p].needs_boot && self.parts[p].mode != PartitionMode::Idle {
            self.boot(p);
        }
    }

    fn boot(&mut self, p: usize) {
        self.parts[p].needs_boot = false;
        let Some(entry) = self.parts[p].entry.clone() else {
            self.set_mode(p, PartitionMode::Normal);
            return;
        };
        let slot = self.pcbs.len();
        let name = format!("{}::main", self.parts[p].name);
        self.pcbs.push(Pcb {
            id: ProcessId::MAIN,
            partition: p,
            name,
            base_priority: MAX_PRIORITY,
            priority: MAX_PRIORITY,
            period: None,
            deadline: None,
            entry,
            state: ProcessState::Dormant,
            seq: 0,
            ready_since: 0,
            activity: Activity::Runnable,
            wake_deadline: None,
            next_release: None,
            generation: 0,
            retired: false,
            is_main: true,
        });
        self.parts[p].processes.push(slot);
        self.make_ready(slot);
    }

    fn set_mode(&mut self, p: usize, mode: PartitionMode) {
        self.parts[p].mode = mode;
        self.emit(TraceKind::ModeChange, Some(p), None, || {
            format!("{mode:?}").to_uppercase()
        });
    }

    fn pick(&self, p: usize) -> Option<Slot> {
        let part = &self.parts[p];
        if part.mode == PartitionMode::Idle {
            return None;
        }
        if part.lock_level > 0 {
            if let Some(r) = part.running {
                if matches!(self.pcbs[r].state, ProcessState::Running | ProcessState::Ready) {
                    return Some(r);
                }
            }
        }
        let cold = part.mode == PartitionMode::ColdStart;
        part.live
            .iter()
            .copied()
            .filter(|&s| {
                let pcb = &self.pcbs[s];
                matches!(pcb.state, ProcessState::Ready | ProcessState::Running) && (!cold || pcb.is_main)
            })
            .max_by_key(|&s| {
                let pcb = &self.pcbs[s];
                (
                    pcb.priority,
                    pcb.state == ProcessState::Running,
                    std::cmp::Reverse(pcb.seq),
                )
            })
    }

    fn dispatch(&mut self, p: usize, slot: Slot) {
        if let Some(r) = self.parts[p].running {
            if r != slot && self.pcbs[r].state == ProcessState::Running {
                self.pcbs[r].state = ProcessState::Ready;
                self.emit_proc(TraceKind::Preempt, r, String::new);
            }
        }
        self.parts[p].running = Some(slot);
        self.pcbs[slot].state = ProcessState::Running;
        self.dispatches += 1;
        self.emit_proc(TraceKind::Dispatch, slot, String::new);
        if self.parts[p].last_dispatched != Some(slot) {
            let from = self.parts[p].last_dispatched.map(|s| self.pcbs[s].id);
            self.emit_proc(TraceKind::ProcessSwitch, slot, || match from {
                Some(f) => format!("from={f}"),
                None => "from=-".into(),
            });
            self.parts[p].last_dispatched = Some(slot);
            if self.models_costs() {
                self.overhead += self.costs.process_switch_cost;
            }
        }
    }

    fn next_timer(&self, p: usize) -> Option<Tick> {
        self.parts[p]
            .live
            .iter()
            .filter_map(|&s| {
                let pcb = &self.pcbs[s];
                let wake = if pcb.state == ProcessState::Waiting {
                    pcb.wake_deadline
                } else {
                    None
                };
                match (wake, pcb.next_release) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                }
            })
            .min()
    }

    /// Expired timeouts, due periodic releases and deferred port deliveries
    /// for the partition that owns the current window.
    fn service_partition(&mut self, p: usize) {
        let now = self.now();
        let slots = self.parts[p].live.clone();
        for &s in &slots {
            if self.pcbs[s].state != ProcessState::Waiting {
                continue;
            }
            let Some(deadline) = self.pcbs[s].wake_deadline else {
                continue;
            };
            if deadline > now {
                continue;
            }
            self.pcbs[s].wake_deadline = None;
            let reason = match &self.pcbs[s].activity {
                Activity::Blocked(r) => std::mem::discriminant(r),
                _ => continue,
            };
            if reason == std::mem::discriminant(&WaitReason::Delay) {
                self.wake(s, Ok(Reply::Unit));
            } else {
                self.detach_waiter(s);
                self.emit_proc(TraceKind::Timeout, s, String::new);
                self.wake_quiet(s, Err(ApexError::TimedOut));
            }
        }
        for &s in &slots {
            while let (Some(release), Some(period)) = (self.pcbs[s].next_release, self.pcbs[s].period) {
                if release > now || self.parts[p].needs_boot || self.parts[p].mode == PartitionMode::Idle {
                    break;
                }
                self.pcbs[s].next_release = Some(release + period);
                let pcb = &self.pcbs[s];
                if pcb.state == ProcessState::Waiting && matches!(pcb.activity, Activity::Blocked(WaitReason::Release))
                {
                    self.pcbs[s].activity = Activity::Done(Ok(Reply::Unit));
                    self.ready_now(s);
                    self.emit_proc(TraceKind::Ready, s, || "release".into());
                } else if pcb.state != ProcessState::Dormant {
                    self.raise(ErrorCode::DeadlineMiss, s);
                }
            }
        }
        if !self.dirty_channels.is_empty() {
            self.service_channels(p);
        }
    }

    fn service_channels(&mut self, p: usize) {
        let pid = Some(p);
        let dirty: Vec<usize> = self.dirty_channels.iter().copied().collect();
        for c in dirty {
            loop {
                let mut moved = false;
                if self.queuing_channels[c].destination == pid {
                    while let Some((s, msg)) = self.queuing_channels[c].queue.feed_receiver() {
                        self.wake(s, Ok(Reply::Message(msg)));
                        moved = true;
                    }
                }
                if self.queuing_channels[c].source == pid {
                    while let Some(s) = self.queuing_channels[c].queue.admit_sender() {
                        self.wake(s, Ok(Reply::Unit));
                        moved = true;
                    }
                }
                if !moved {
                    break;
                }
            }
            if self.queuing_channels[c].queue.waiting() == 0 {
                self.dirty_channels.remove(&c);
            }
        }
    }

    fn next_seq(&mut self) -> u64 {
        self.seq += 1;
        self.seq
    }

    fn ready_now(&mut self, slot: Slot) {
        let seq = self.next_seq();
        let now = self.now();
        let pcb = &mut self.pcbs[slot];
        pcb.state = ProcessState::Ready;
        pcb.seq = seq;
        pcb.ready_since = now;
        pcb.wake_deadline = None;
    }

    fn make_ready(&mut self, slot: Slot) {
        let live = &mut self.parts[self.pcbs[slot].partition].live;
        if let Err(i) = live.binary_search(&slot) {
            live.insert(i, slot);
        }
        self.pcbs[slot].activity = Activity::Runnable;
        self.ready_now(slot);
        self.emit_proc(TraceKind::Ready, slot, || "start".into());
    }

    fn wake(&mut self, slot: Slot, result: ApexResult<Reply>) {
        self.emit_proc(TraceKind::Wake, slot, String::new);
        self.wake_quiet(slot, result);
    }

    fn wake_quiet(&mut self, slot: Slot, result: ApexResult<Reply>) {
        self.pcbs[slot].activity = Activity::Done(result);
        self.ready_now(slot);
    }

    fn block(&mut self, slot: Slot, reason: WaitReason, deadline: Option<Tick>) {
        let p = self.pcbs[slot].partition;
        let pcb = &mut self.pcbs[slot];
        pcb.state = ProcessState::Waiting;
        pcb.activity = Activity::Blocked(reason);
        pcb.wake_deadline = deadline;
        if self.parts[p].running == Some(slot) {
            self.parts[p].running = None;
        }
        self.emit_proc(TraceKind::Block, slot, String::new);
    }

    /// Removes a blocked process from whatever queue it sits in.
    fn detach_waiter(&mut self, slot: Slot) {
        let Activity::Blocked(reason) = &self.pcbs[slot].activity else {
            return;
        };
        match *reason {
            WaitReason::Semaphore(i) => {
                if let Some(o) = self.semaphores[i].as_mut() {
                    o.remove_waiter(slot)
                }
            }
            WaitReason::Event(i) => {
                if let Some(o) = self.events[i].as_mut() {
                    o.remove_waiter(slot)
                }
            }
            WaitReason::Mutex(i) => {
                if let Some(o) = self.mutexes[i].as_mut() {
                    o.remove_waiter(slot)
                }
            }
            WaitReason::Blackboard(i) => {
                if let Some(o) = self.blackboards[i].as_mut() {
                    o.remove_waiter(slot)
                }
            }
            WaitReason::Buffer(i) => {
                if let Some(o) = self.buffers[i].as_mut() {
                    o.queue.remove_waiter(slot)
                }
            }
            WaitReason::Queuing(c) => self.queuing_channels[c].queue.remove_waiter(slot),
            WaitReason::Release | WaitReason::Delay => {}
        }
    }

    /// Returns a process to DORMANT, dropping its body. With `handoff`,
    /// mutexes it owned pass to their next waiter.
    fn reset_process(&mut self, slot: Slot, handoff: bool) {
        self.detach_waiter(slot);
        let p = self.pcbs[slot].partition;
        if handoff {
            for i in 0..self.mutexes.len() {
                let next = match self.mutexes[i].as_mut() {
                    Some(m) if m.owner == Some(slot) || m.waiters.contains(&slot) => m.forget(slot),
                    _ => None,
                };
                if let Some(n) = next {
                    self.wake(n, Ok(Reply::Unit));
                }
            }
        }
        let pcb = &mut self.pcbs[slot];
        pcb.state = ProcessState::Dormant;
        pcb.activity = Activity::Runnable;
        pcb.wake_deadline = None;
        pcb.next_release = None;
        pcb.priority = pcb.base_priority;
        pcb.generation += 1;
        if self.parts[p].running == Some(slot) {
            self.parts[p].running = None;
        }
        if let Ok(i) = self.parts[p].live.binary_search(&slot) {
            self.parts[p].live.remove(i);
        }
        self.discard.push(slot);
    }

    fn complete_call(&mut self, slot: Slot) {
        let Activity::Charging { call, .. } = std::mem::replace(&mut self.pcbs[slot].activity, Activity::Runnable)
        else {
            unreachable!()
        };
        let name = call.name().to_string();
        let effect = self.apply(slot, call);
        match effect {
            Effect::Done(r) => {
                let ok = r.is_ok();
                self.emit_proc(TraceKind::Call, slot, || {
                    format!("{name} {}", if ok { "ok" } else { "err" })
                });
                self.pcbs[slot].activity = Activity::Done(r);
            }
            Effect::Block(reason, deadline) => {
                self.emit_proc(TraceKind::Call, slot, || format!("{name} wait"));
                self.block(slot, reason, deadline);
            }
            Effect::Gone => {}
        }
    }

    // ----- health monitor ------------------------------------------------

    /// Applies the configured action and reports whether `source` survived.
    fn raise(&mut self, code: ErrorCode, source: Slot) -> (HealthAction, bool) {
        let action = self.hm.action(code);
        let p = self.pcbs[source].partition;
        self.health_log.push(HealthRecord {
            tick: self.now(),
            partition: self.parts[p].id,
            process: self.pcbs[source].id,
            code,
            action,
        });
        self.emit_proc(TraceKind::Health, source, || {
            format!("{} {}", code.as_str(), action.as_str())
        });
        match action {
            HealthAction::Ignore => (action, true),
            HealthAction::RestartProcess => {
                self.reset_process(source, true);
                self.start_process(source);
                (action, false)
            }
            HealthAction::RestartPartition => {
                self.shutdown_partition(p);
                self.parts[p].needs_boot = true;
                self.set_mode(p, PartitionMode::ColdStart);
                (action, false)
            }
            HealthAction::StopPartition => {
                self.shutdown_partition(p);
                self.set_mode(p, PartitionMode::Idle);
                (action, false)
            }
        }
    }

    fn shutdown_partition(&mut self, p: usize) {
        for s in std::mem::take(&mut self.parts[p].processes) {
            self.reset_process(s, false);
            self.pcbs[s].retired = true;
            self.by_id.remove(&self.pcbs[s].id);
        }
        let part = &mut self.parts[p];
        part.names = Names::default();
        part.used = 0;
        part.lock_level = 0;
        part.running = None;
        part.last_dispatched = None;
        let owner = part.id;
        fn purge<T>(v: &mut [Option<T>], owned: impl Fn(&T) -> bool) {
            for o in v.iter_mut() {
                if o.as_ref().is_some_and(&owned) {
                    *o = None;
                }
            }
        }
        purge(&mut self.semaphores, |o| o.owner == owner);
        purge(&mut self.events, |o| o.owner == owner);
        purge(&mut self.mutexes, |o| o.partition == owner);
        purge(&mut self.blackboards, |o| o.owner == owner);
        purge(&mut self.buffers, |o| o.owner == owner);
        purge(&mut self.sampling_ports, |o| o.owner == owner);
        purge(&mut self.queuing_ports, |o| o.owner == owner);
        let live_s: BTreeSet<usize> = (0..self.sampling_ports.len())
            .filter(|&i| self.sampling_ports[i].is_some())
            .collect();
        self.sampling_names.retain(|_, i| live_s.contains(i));
        let live_q: BTreeSet<usize> = (0..self.queuing_ports.len())
            .filter(|&i| self.queuing_ports[i].is_some())
            .collect();
        self.queuing_names.retain(|_, i| live_q.contains(i));
    }

    // ----- call effects --------------------------------------------------

    fn alloc(&mut self, p: usize, bytes: u64) -> ApexResult<()> {
        let part = &mut self.parts[p];
        if part.used.saturating_add(bytes) > part.quota {
            return Err(ApexError::ResourceExhausted(format!(
                "partition {} memory quota of {} bytes",
                part.id, part.quota
            )));
        }
        part.used += bytes;
        Ok(())
    }

    fn own_process(&self, p: usize, id: ProcessId) -> ApexResult<Slot> {
        match self.by_id.get(&id) {
            Some(&s) if self.pcbs[s].partition == p => Ok(s),
            _ => Err(ApexError::UnknownId(format!("process {id}"))),
        }
    }

    fn start_process(&mut self, slot: Slot) {
        self.make_ready(slot);
        if let Some(period) = self.pcbs[slot].period {
            // releases are anchored to the window in which the process started
            self.pcbs[slot].next_release = Some(self.window_start + period);
        }
    }

    fn apply(&mut self, slot: Slot, call: ApexCall) -> Effect {
        use ApexCall::*;
        let p = self.pcbs[slot].partition;
        let now = self.now();
        let done = Effect::Done;
        let r = |res: ApexResult<Reply>| Effect::Done(res);
        match call {
            CreateProcess(attrs) => r(self.create_process(p, attrs)),
            StartProcess(id) => r(self.own_process(p, id).and_then(|s| {
                if self.pcbs[s].state != ProcessState::Dormant {
                    return Err(ApexError::InvalidState(format!("process {id} is not dormant")));
                }
                self.start_process(s);
                Ok(Reply::Unit)
            })),
            StopProcess(id) => match self.own_process(p, id) {
                Err(e) => r(Err(e)),
                Ok(s) if self.pcbs[s].state == ProcessState::Dormant => {
                    r(Err(ApexError::InvalidState(format!("process {id} is dormant"))))
                }
                Ok(s) => {
                    self.reset_process(s, true);
                    if s == slot {
                        Effect::Gone
                    } else {
                        done(Ok(Reply::Unit))
                    }
                }
            },
            SetPriority { id, priority } => r(self.own_process(p, id).and_then(|s| {
                if !(MIN_PRIORITY..=MAX_PRIORITY).contains(&priority) {
                    return Err(ApexError::InvalidParam(format!("priority {priority}")));
                }
                if self.pcbs[s].state == ProcessState::Dormant {
                    return Err(ApexError::InvalidState(format!("process {id} is dormant")));
                }
                self.pcbs[s].priority = priority;
                Ok(Reply::Unit)
            })),
            GetMyId => {
                if self.pcbs[slot].is_main {
                    r(Err(ApexError::InvalidMode))
                } else {
                    r(Ok(Reply::Process(self.pcbs[slot].id)))
                }
            }
            GetProcessId(name) => r(self.parts[p]
                .names
                .processes
                .get(&name)
                .map(|&s| Reply::Process(self.pcbs[s].id))
                .ok_or(ApexError::UnknownName(name))),
            GetProcessStatus(id) => r(self
                .own_process(p, id)
                .map(|s| Reply::ProcessStatus(self.status_of(&self.pcbs[s])))),
            GetPartitionStatus => {
                let part = &self.parts[p];
                r(Ok(Reply::PartitionStatus(PartitionStatus {
                    id: part.id,
                    mode: part.mode,
                    lock_level: part.lock_level,
                    window_remaining: self.window_end.saturating_sub(now),
                })))
            }
            LockPreemption => {
                if self.parts[p].mode != PartitionMode::Normal {
                    return r(Err(ApexError::InvalidMode));
                }
                self.parts[p].lock_level += 1;
                r(Ok(Reply::LockLevel(self.parts[p].lock_level)))
            }
            UnlockPreemption => {
                if self.parts[p].lock_level == 0 {
                    return r(Err(ApexError::Underflow));
                }
                self.parts[p].lock_level -= 1;
                r(Ok(Reply::LockLevel(self.parts[p].lock_level)))
            }
            PeriodicWait => {
                if self.pcbs[slot].period.is_none() || self.pcbs[slot].is_main {
                    return r(Err(ApexError::InvalidMode));
                }
                Effect::Block(WaitReason::Release, None)
            }
            TimedWait(0) => {
                let seq = self.next_seq();
                let pcb = &mut self.pcbs[slot];
                pcb.state = ProcessState::Ready;
                pcb.seq = seq;
                pcb.ready_since = now;
                r(Ok(Reply::Unit))
            }
            TimedWait(t) => Effect::Block(WaitReason::Delay, Some(now.saturating_add(t))),
            GetCurrentTicks => r(Ok(Reply::Ticks(now))),
            RaiseError(code) => {
                let (action, alive) = self.raise(code, slot);
                if alive {
                    r(Ok(Reply::Health(action)))
                } else {
                    Effect::Gone
                }
            }

            CreateSemaphore { name, initial, max } => r(self.create_named(
                p,
                name,
                |k, name| {
                    let sem = Semaphore::new(name.clone(), k.parts[p].id, initial, max)?;
                    k.alloc(p, SYNC_OBJECT_BYTES)?;
                    k.semaphores.push(Some(sem));
                    let i = k.semaphores.len() - 1;
                    k.parts[p].names.semaphores.insert(name, i);
                    Ok(Reply::Semaphore(SemaphoreId(i as u32 + 1)))
                },
                |n| &n.semaphores,
            )),
            WaitSemaphore { id, timeout } => match self.sem_index(p, id) {
                Err(e) => r(Err(e)),
                Ok(i) => {
                    let sem = self.semaphores[i].as_mut().unwrap();
                    if sem.try_wait() {
                        r(Ok(Reply::Unit))
                    } else if timeout.is_poll() {
                        r(Err(ApexError::TimedOut))
                    } else {
                        sem.waiters.push_back(slot);
                        Effect::Block(WaitReason::Semaphore(i), timeout.deadline(now))
                    }
                }
            },
            SignalSemaphore(id) => r(self.sem_index(p, id).and_then(|i| {
                if let Some(w) = self.semaphores[i].as_mut().unwrap().signal()? {
                    self.wake(w, Ok(Reply::Unit));
                }
                Ok(Reply::Unit)
            })),
            GetSemaphoreId(name) => r(self.parts[p]
                .names
                .semaphores
                .get(&name)
                .map(|&i| Reply::Semaphore(SemaphoreId(i as u32 + 1)))
                .ok_or(ApexError::UnknownName(name))),
            GetSemaphoreStatus(id) => r(self
                .sem_index(p, id)
                .map(|i| Reply::SemaphoreStatus(self.semaphores[i].as_ref().unwrap().status()))),

            CreateEvent(name) => r(self.create_named(
                p,
                name,
                |k, name| {
                    k.alloc(p, SYNC_OBJECT_BYTES)?;
                    k.events.push(Some(Event::new(name.clone(), k.parts[p].id)));
                    let i = k.events.len() - 1;
                    k.parts[p].names.events.insert(name, i);
                    Ok(Reply::Event(EventId(i as u32 + 1)))
                },
                |n| &n.events,
            )),
            SetEvent(id) => r(self.event_index(p, id).map(|i| {
                for w in self.events[i].as_mut().unwrap().set() {
                    self.wake(w, Ok(Reply::Unit));
                }
                Reply::Unit
            })),
            ResetEvent(id) => r(self.event_index(p, id).map(|i| {
                self.events[i].as_mut().unwrap().reset();
                Reply::Unit
            })),
            WaitEvent { id, timeout } => match self.event_index(p, id) {
                Err(e) => r(Err(e)),
                Ok(i) => {
                    let ev = self.events[i].as_mut().unwrap();
                    if ev.is_up() {
                        r(Ok(Reply::Unit))
                    } else if timeout.is_poll() {
                        r(Err(ApexError::TimedOut))
                    } else {
                        ev.waiters.push(slot);
                        Effect::Block(WaitReason::Event(i), timeout.deadline(now))
                    }
                }
            },
            GetEventId(name) => r(self.parts[p]
                .names
                .events
                .get(&name)
                .map(|&i| Reply::Event(EventId(i as u32 + 1)))
                .ok_or(ApexError::UnknownName(name))),
            GetEventStatus(id) => r(self
                .event_index(p, id)
                .map(|i| Reply::EventStatus(self.events[i].as_ref().unwrap().status()))),

            CreateMutex(name) => r(self.create_named(
                p,
                name,
                |k, name| {
                    k.alloc(p, SYNC_OBJECT_BYTES)?;
                    k.mutexes.push(Some(Mutex::new(name.clone(), k.parts[p].id)));
                    let i = k.mutexes.len() - 1;
                    k.parts[p].names.mutexes.insert(name, i);
                    Ok(Reply::Mutex(MutexId(i as u32 + 1)))
                },
                |n| &n.mutexes,
            )),
            AcquireMutex { id, timeout } => match self.mutex_index(p, id) {
                Err(e) => r(Err(e)),
                Ok(i) => {
                    let m = self.mutexes[i].as_mut().unwrap();
                    match m.acquire(slot) {
                        Err(e) => r(Err(e)),
                        Ok(Acquire::Acquired) => r(Ok(Reply::Unit)),
                        Ok(Acquire::MustBlock) if timeout.is_poll() => r(Err(ApexError::TimedOut)),
                        Ok(Acquire::MustBlock) => {
                            m.waiters.push_back(slot);
                            Effect::Block(WaitReason::Mutex(i), timeout.deadline(now))
                        }
                    }
                }
            },
            ReleaseMutex(id) => r(self.mutex_index(p, id).and_then(|i| {
                if let Some(next) = self.mutexes[i].as_mut().unwrap().release(slot)? {
                    self.wake(next, Ok(Reply::Unit));
                }
                Ok(Reply::Unit)
            })),
            GetMutexId(name) => r(self.parts[p]
                .names
                .mutexes
                .get(&name)
                .map(|&i| Reply::Mutex(MutexId(i as u32 + 1)))
                .ok_or(ApexError::UnknownName(name))),

            CreateBlackboard { name, max_size } => r(self.create_named(
                p,
                name,
                |k, name| {
                    if max_size == 0 {
                        return Err(ApexError::InvalidParam("blackboard max_size 0".into()));
                    }
                    k.alloc(p, MESSAGE_OBJECT_BYTES + max_size as u64)?;
                    k.blackboards
                        .push(Some(Blackboard::new(name.clone(), k.parts[p].id, max_size)));
                    let i = k.blackboards.len() - 1;
                    k.parts[p].names.blackboards.insert(name, i);
                    Ok(Reply::Blackboard(BlackboardId(i as u32 + 1)))
                },
                |n| &n.blackboards,
            )),
            DisplayBlackboard { id, msg } => r(self.bb_index(p, id).and_then(|i| {
                let readers = self.blackboards[i].as_mut().unwrap().display(msg.clone())?;
                for w in readers {
                    self.wake(w, Ok(Reply::Message(msg.clone())));
                }
                Ok(Reply::Unit)
            })),
            ReadBlackboard { id, timeout } => match self.bb_index(p, id) {
                Err(e) => r(Err(e)),
                Ok(i) => {
                    let bb = self.blackboards[i].as_mut().unwrap();
                    match bb.read() {
                        Some(m) => r(Ok(Reply::Message(m))),
                        None if timeout.is_poll() => r(Err(ApexError::TimedOut)),
                        None => {
                            bb.waiters.push(slot);
                            Effect::Block(WaitReason::Blackboard(i), timeout.deadline(now))
                        }
                    }
                }
            },
            ClearBlackboard(id) => r(self.bb_index(p, id).map(|i| {
                self.blackboards[i].as_mut().unwrap().clear();
                Reply::Unit
            })),
            GetBlackboardId(name) => r(self.parts[p]
                .names
                .blackboards
                .get(&name)
                .map(|&i| Reply::Blackboard(BlackboardId(i as u32 + 1)))
                .ok_or(ApexError::UnknownName(name))),

            CreateBuffer {
                name,
                capacity,
                max_size,
            } => r(self.create_named(
                p,
                name,
                |k, name| {
                    if capacity == 0 || max_size == 0 {
                        return Err(ApexError::InvalidParam(
                            "buffer capacity and max_size must be positive".into(),
                        ));
                    }
                    k.alloc(p, MESSAGE_OBJECT_BYTES + (capacity * max_size) as u64)?;
                    k.buffers
                        .push(Some(Buffer::new(name.clone(), k.parts[p].id, capacity, max_size)));
                    let i = k.buffers.len() - 1;
                    k.parts[p].names.buffers.insert(name, i);
                    Ok(Reply::Buffer(BufferId(i as u32 + 1)))
                },
                |n| &n.buffers,
            )),
            SendBuffer { id, msg, timeout } => match self.buf_index(p, id) {
                Err(e) => r(Err(e)),
                Ok(i) => {
                    let q = &mut self.buffers[i].as_mut().unwrap().queue;
                    if let Err(e) = check_size(&msg, q.max_size) {
                        return r(Err(e));
                    }
                    match q.push(msg) {
                        Ok(()) => {
                            if let Some((w, m)) = q.feed_receiver() {
                                self.wake(w, Ok(Reply::Message(m)));
                            }
                            r(Ok(Reply::Unit))
                        }
                        Err(_) if timeout.is_poll() => r(Err(ApexError::TimedOut)),
                        Err(msg) => {
                            q.send_waiters.push_back((slot, msg));
                            Effect::Block(WaitReason::Buffer(i), timeout.deadline(now))
                        }
                    }
                }
            },
            ReceiveBuffer { id, timeout } => match self.buf_index(p, id) {
                Err(e) => r(Err(e)),
                Ok(i) => {
                    let q = &mut self.buffers[i].as_mut().unwrap().queue;
                    match q.pop() {
                        Some(m) => {
                            if let Some(w) = q.admit_sender() {
                                self.wake(w, Ok(Reply::Unit));
                            }
                            r(Ok(Reply::Message(m)))
                        }
                        None if timeout.is_poll() => r(Err(ApexError::TimedOut)),
                        None => {
                            q.recv_waiters.push_back(slot);
                            Effect::Block(WaitReason::Buffer(i), timeout.deadline(now))
                        }
                    }
                }
            },
            GetBufferId(name) => r(self.parts[p]
                .names
                .buffers
                .get(&name)
                .map(|&i| Reply::Buffer(BufferId(i as u32 + 1)))
                .ok_or(ApexError::UnknownName(name))),

            CreateSamplingPort {
                name,
                max_size,
                direction,
                refresh,
            } => r(self.create_sampling_port(p, name, max_size, direction, refresh)),
            WriteSamplingMessage { id, msg } => r(self.sport_index(p, id).and_then(|i| {
                let port = self.sampling_ports[i].as_ref().unwrap();
                if port.direction != PortDirection::Source {
                    return Err(ApexError::DirectionMismatch);
                }
                check_size(&msg, port.max_size)?;
                let c = port.channel;
                self.sampling_channels[c].message = Some((msg, now));
                Ok(Reply::Unit)
            })),
            ReadSamplingMessage(id) => r(self.sport_index(p, id).and_then(|i| {
                let port = self.sampling_ports[i].as_ref().unwrap();
                if port.direction != PortDirection::Destination {
                    return Err(ApexError::DirectionMismatch);
                }
                let (msg, stamp) = self.sampling_channels[port.channel]
                    .message
                    .clone()
                    .ok_or(ApexError::NoMessage)?;
                let validity = port.validity(stamp, now);
                self.sampling_ports[i].as_mut().unwrap().last_validity = validity;
                Ok(Reply::Sampled(msg, validity))
            })),
            GetSamplingPortId(name) => r(match self.sampling_names.get(&name) {
                Some(&i)
                    if self.sampling_ports[i]
                        .as_ref()
                        .is_some_and(|s| s.owner == self.parts[p].id) =>
                {
                    Ok(Reply::SamplingPort(SamplingPortId(i as u32 + 1)))
                }
                _ => Err(ApexError::UnknownName(name)),
            }),
            GetSamplingPortStatus(id) => r(self.sport_index(p, id).map(|i| {
                let s = self.sampling_ports[i].as_ref().unwrap();
                Reply::SamplingStatus(SamplingPortStatus {
                    max_size: s.max_size,
                    direction: s.direction,
                    refresh: s.refresh,
                    last_validity: s.last_validity,
                })
            })),

            CreateQueuingPort {
                name,
                capacity,
                max_size,
                direction,
            } => r(self.create_queuing_port(p, name, capacity, max_size, direction)),
            SendQueuingMessage { id, msg, timeout } => match self.qport_index(p, id) {
                Err(e) => r(Err(e)),
                Ok(i) => {
                    let port = self.queuing_ports[i].as_ref().unwrap();
                    if port.direction != PortDirection::Source {
                        return r(Err(ApexError::DirectionMismatch));
                    }
                    if let Err(e) = check_size(&msg, port.max_size) {
                        return r(Err(e));
                    }
                    let c = port.channel;
                    let q = &mut self.queuing_channels[c].queue;
                    let full = q.is_full() || !q.send_waiters.is_empty();
                    if !full {
                        q.push(msg).expect("room checked");
                        if !q.recv_waiters.is_empty() {
                            self.dirty_channels.insert(c);
                        }
                        r(Ok(Reply::Unit))
                    } else if timeout.is_poll() {
                        r(Err(ApexError::TimedOut))
                    } else {
                        q.send_waiters.push_back((slot, msg));
                        self.dirty_channels.insert(c);
                        Effect::Block(WaitReason::Queuing(c), timeout.deadline(now))
                    }
                }
            },
            ReceiveQueuingMessage { id, timeout } => match self.qport_index(p, id) {
                Err(e) => r(Err(e)),
                Ok(i) => {
                    let port = self.queuing_ports[i].as_ref().unwrap();
                    if port.direction != PortDirection::Destination {
                        return r(Err(ApexError::DirectionMismatch));
                    }
                    let c = port.channel;
                    let q = &mut self.queuing_channels[c].queue;
                    let head = if q.recv_waiters.is_empty() { q.pop() } else { None };
                    match head {
                        Some(m) => {
                            if !q.send_waiters.is_empty() {
                                self.dirty_channels.insert(c);
                            }
                            r(Ok(Reply::Message(m)))
                        }
                        None if timeout.is_poll() => r(Err(ApexError::TimedOut)),
                        None => {
                            q.recv_waiters.push_back(slot);
                            self.dirty_channels.insert(c);
                            Effect::Block(WaitReason::Queuing(c), timeout.deadline(now))
                        }
                    }
                }
            },
            GetQueuingPortId(name) => r(match self.queuing_names.get(&name) {
                Some(&i)
                    if self.queuing_ports[i]
                        .as_ref()
                        .is_some_and(|s| s.owner == self.parts[p].id) =>
                {
                    Ok(Reply::QueuingPort(QueuingPortId(i as u32 + 1)))
                }
                _ => Err(ApexError::UnknownName(name)),
            }),
            GetQueuingPortStatus(id) => r(self.qport_index(p, id).map(|i| {
                let s = self.queuing_ports[i].as_ref().unwrap();
                let q = &self.queuing_channels[s.channel].queue;
                Reply::QueuingStatus(QueuingPortStatus {
                    max_size: s.max_size,
                    capacity: s.capacity,
                    direction: s.direction,
                    messages: q.queue.len(),
                    waiting: q.waiting(),
                })
            })),

            Work(_) | ModeledWork { .. } => r(Ok(Reply::Unit)),
        }
    }

    fn create_process(&mut self, p: usize, attrs: ProcessAttributes) -> ApexResult<Reply> {
        let part = &self.parts[p];
        if part.mode == PartitionMode::Normal && !part.runtime_creation {
            return Err(ApexError::InvalidMode);
        }
        if part.names.processes.contains_key(&attrs.name) {
            return Err(ApexError::DuplicateName(attrs.name));
        }
        let created = part.processes.iter().filter(|&&s| !self.pcbs[s].is_main).count();
        if created >= part.cap {
            return Err(ApexError::ResourceExhausted(format!(
                "partition {} process cap of {}",
                part.id, part.cap
            )));
        }
        if !(MIN_PRIORITY..=MAX_PRIORITY).contains(&attrs.priority) {
            return Err(ApexError::InvalidParam(format!("priority {}", attrs.priority)));
        }
        if attrs.period == Some(0) || attrs.name.is_empty() {
            return Err(ApexError::InvalidParam("empty name or zero period".into()));
        }
        self.alloc(p, attrs.stack_size)?;
        let id = ProcessId(self.next_pid);
        self.next_pid += 1;
        let slot = self.pcbs.len();
        self.pcbs.push(Pcb {
            id,
            partition: p,
            name: attrs.name.clone(),
            base_priority: attrs.priority,
            priority: attrs.priority,
            period: attrs.period,
            deadline: attrs.deadline,
            entry: attrs.entry,
            state: ProcessState::Dormant,
            seq: 0,
            ready_since: 0,
            activity: Activity::Runnable,
            wake_deadline: None,
            next_release: None,
            generation: 0,
            retired: false,
            is_main: false,
        });
        self.by_id.insert(id, slot);
        self.parts[p].processes.push(slot);
        self.parts[p].names.processes.insert(attrs.name, slot);
        Ok(Reply::Process(id))
    }

    fn create_named(
        &mut self,
        p: usize,
        name: String,
        make: impl FnOnce(&mut Self, String) -> ApexResult<Reply>,
        registry: impl Fn(&Names) -> &BTreeMap<String, usize>,
    ) -> ApexResult<Reply> {
        if name.is_empty() {
            return Err(ApexError::InvalidParam("empty name".into()));
        }
        if registry(&self.parts[p].names).contains_key(&name) {
            return Err(ApexError::DuplicateName(name));
        }
        make(self, name)
    }

    fn endpoint(&self, name: &str, kind: ChannelKind, direction: PortDirection) -> ApexResult<Option<usize>> {
        match self.endpoints.get(name) {
            None => Ok(None),
            Some(&(c, role)) => {
                if self.channel_cfg[c].kind != kind {
                    return Err(ApexError::InvalidParam(format!(
                        "port `{name}` is configured as another kind"
                    )));
                }
                if role != direction {
                    return Err(ApexError::DirectionMismatch);
                }
                Ok(Some(c))
            }
        }
    }

    fn create_sampling_port(
        &mut self,
        p: usize,
        name: String,
        max_size: usize,
        direction: PortDirection,
        refresh: Tick,
    ) -> ApexResult<Reply> {
        if self.sampling_names.contains_key(&name) || self.queuing_names.contains_key(&name) {
            return Err(ApexError::DuplicateName(name));
        }
        if max_size == 0 {
            return Err(ApexError::InvalidParam("port max_size 0".into()));
        }
        let cfg = self.endpoint(&name, ChannelKind::Sampling, direction)?;
        if let Some(c) = cfg {
            if self.channel_cfg[c].max_size != max_size {
                return Err(ApexError::InvalidParam(format!(
                    "port `{name}` size differs from its channel"
                )));
            }
        }
        self.alloc(p, MESSAGE_OBJECT_BYTES + max_size as u64)?;
        let channel = match cfg {
            Some(c) => *self.channel_inst.entry(c).or_insert_with(|| {
                self.sampling_channels.push(SamplingChannel::new(max_size));
                self.sampling_channels.len() - 1
            }),
            None => {
                self.sampling_channels.push(SamplingChannel::new(max_size));
                self.sampling_channels.len() - 1
            }
        };
        self.sampling_ports.push(Some(SamplingPort {
            name: name.clone(),
            owner: self.parts[p].id,
            direction,
            max_size,
            refresh,
            channel,
            last_validity: Validity::Invalid,
        }));
        let i = self.sampling_ports.len() - 1;
        self.sampling_names.insert(name, i);
        Ok(Reply::SamplingPort(SamplingPortId(i as u32 + 1)))
    }

    fn create_queuing_port(
        &mut self,
        p: usize,
        name: String,
        capacity: usize,
        max_size: usize,
        direction: PortDirection,
    ) -> ApexResult<Reply> {
        if self.sampling_names.contains_key(&name) || self.queuing_names.contains_key(&name) {
            return Err(ApexError::DuplicateName(name));
        }
        if max_size == 0 || capacity == 0 {
            return Err(ApexError::InvalidParam(
                "port capacity and max_size must be positive".into(),
            ));
        }
        let cfg = self.endpoint(&name, ChannelKind::Queuing, direction)?;
        if let Some(c) = cfg {
            let cc = &self.channel_cfg[c];
            if cc.max_size != max_size || cc.capacity != capacity {
                return Err(ApexError::InvalidParam(format!(
                    "port `{name}` shape differs from its channel"
                )));
            }
        }
        self.alloc(p, MESSAGE_OBJECT_BYTES + (capacity * max_size) as u64)?;
        let channel = match cfg {
            Some(c) => *self.channel_inst.entry(c).or_insert_with(|| {
                self.queuing_channels.push(QueuingChannel::new(capacity, max_size));
                self.queuing_channels.len() - 1
            }),
            None => {
                self.queuing_channels.push(QueuingChannel::new(capacity, max_size));
                self.queuing_channels.len() - 1
            }
        };
        match direction {
            PortDirection::Source => self.queuing_channels[channel].source = Some(p),
            PortDirection::Destination => self.queuing_channels[channel].destination = Some(p),
        }
        self.queuing_ports.push(Some(QueuingPort {
            name: name.clone(),
            owner: self.parts[p].id,
            direction,
            capacity,
            max_size,
            channel,
        }));
        let i = self.queuing_ports.len() - 1;
        self.queuing_names.insert(name, i);
        Ok(Reply::QueuingPort(QueuingPortId(i as u32 + 1)))
    }

    fn sem_index(&self, p: usize, id: SemaphoreId) -> ApexResult<usize> {
        let owner = self.parts[p].id;
        lookup(&self.semaphores, id.0, |o| o.owner == owner).ok_or_else(|| unknown("semaphore", id.0))
    }

    fn event_index(&self, p: usize, id: EventId) -> ApexResult<usize> {
        let owner = self.parts[p].id;
        lookup(&self.events, id.0, |o| o.owner == owner).ok_or_else(|| unknown("event", id.0))
    }

    fn mutex_index(&self, p: usize, id: MutexId) -> ApexResult<usize> {
        let owner = self.parts[p].id;
        lookup(&self.mutexes, id.0, |o| o.partition == owner).ok_or_else(|| unknown("mutex", id.0))
    }

    fn bb_index(&self, p: usize, id: BlackboardId) -> ApexResult<usize> {
        let owner = self.parts[p].id;
        lookup(&self.blackboards, id.0, |o| o.owner == owner).ok_or_else(|| unknown("blackboard", id.0))
    }

    fn buf_index(&self, p: usize, id: BufferId) -> ApexResult<usize> {
        let owner = self.parts[p].id;
        lookup(&self.buffers, id.0, |o| o.owner == owner).ok_or_else(|| unknown("buffer", id.0))
    }

    fn sport_index(&self, p: usize, id: SamplingPortId) -> ApexResult<usize> {
        let owner = self.parts[p].id;
        lookup(&self.sampling_ports, id.0, |o| o.owner == owner).ok_or_else(|| unknown("sampling port", id.0))
    }

    fn qport_index(&self, p: usize, id: QueuingPortId) -> ApexResult<usize> {
        let owner = self.parts[p].id;
        lookup(&self.queuing_ports, id.0, |o| o.owner == owner).ok_or_else(|| unknown("queuing port", id.0))
    }
}

fn lookup<T>(v: &[Option<T>], raw: u32, owned: impl Fn(&T) -> bool) -> Option<usize> {
    let i = (raw as usize).checked_sub(1)?;
    v.get(i)?.as_ref().filter(|o| owned(o)).map(|_| i)
}

fn unknown(what: &str, raw: u32) -> ApexError {
    ApexError::UnknownId(format!("{what} {raw}"))
}
