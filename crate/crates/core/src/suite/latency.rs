//! The APEX latency application: one series per service call.
//!
//! A single runner process times each call in turn. Whatever a call needs
//! to succeed without blocking (a message to receive, a set event, a
//! signalled semaphore) is arranged just before it, outside the sample,
//! and creation calls always get fresh names.

use std::rc::Rc;

use crate::porting::{
    ChannelPlan, Deployment, Direction, Link, MeasureContext, PartitionPlan, Perf, PerfResult, Platform, TaskEntry,
    TaskSpec, Wait,
};
use crate::timebase::Tick;

use super::{budget, BenchOutput, Session, SuiteError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ProbeKind {
    CreateProcess,
    StartProcess,
    CreateSem,
    CreateBuffer,
    CreateBoard,
    CreateEvent,
    PartitionStatus,
    LockPreemption,
    UnlockPreemption,
    DisplayBoard(usize),
    ReadBoard(usize),
    SendBuffer(usize),
    ReceiveBuffer(usize),
    BufferId,
    SignalSem,
    WaitSem,
    SetPriority,
    MyId,
    ProcessId,
    ProcessStatus,
    SemId,
    SemStatus,
    SetEvent,
    WaitEvent,
    EventId,
    EventStatus,
    CreateSampling,
    CreateQueuing,
    SamplingId,
    SamplingStatus,
    QueueStatus,
    QueueId,
    QueueWrite,
    QueueRead,
    SamplingWrite,
    SamplingRead,
    CurrentTicks,
}

/// One timed service call: its report row and the APEX service it exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Probe {
    pub row: &'static str,
    pub call: &'static str,
    pub(crate) kind: ProbeKind,
}

impl Probe {
    /// Creation calls are timed twice per iteration.
    pub fn samples_per_iteration(&self) -> u32 {
        if self.call.starts_with("CREATE_") || self.call == "START" {
            2
        } else {
            1
        }
    }
}

macro_rules! probes {
    ($($row:literal $call:literal $kind:expr;)*) => {
        pub const PROBES: &[Probe] = &[$(Probe { row: $row, call: $call, kind: $kind }),*];
    };
}

use ProbeKind::*;

probes! {
    "INIT_PROCESS1" "CREATE_PROCESS" CreateProcess;
    "INIT_PROCESS2" "START" StartProcess;
    "SEMAPHORE_CREATE" "CREATE_SEMAPHORE" CreateSem;
    "BUFFER_CREATE" "CREATE_BUFFER" CreateBuffer;
    "BB_CREATE" "CREATE_BLACKBOARD" CreateBoard;
    "CREATE_EVENT" "CREATE_EVENT" CreateEvent;
    "PARTITION_STATUS" "GET_PARTITION_STATUS" PartitionStatus;
    "PREEMPTION_LOCK" "LOCK_PREEMPTION" LockPreemption;
    "PREEMPTION_UNLOCK" "UNLOCK_PREEMPTION" UnlockPreemption;
    "DISPLAY_BB(16)" "DISPLAY_BLACKBOARD" DisplayBoard(16);
    "READ_BB(16)" "READ_BLACKBOARD" ReadBoard(16);
    "DISPLAY_BB(64)" "DISPLAY_BLACKBOARD" DisplayBoard(64);
    "READ_BB(64)" "READ_BLACKBOARD" ReadBoard(64);
    "SEND_BUFFER(16)" "SEND_BUFFER" SendBuffer(16);
    "SEMAPHORE_SIGNAL" "SIGNAL_SEMAPHORE" SignalSem;
    "PROCESS_PRIORITY" "SET_PRIORITY" SetPriority;
    "MY_ID" "GET_MY_ID" MyId;
    "PROCESS_ID" "GET_PROCESS_ID" ProcessId;
    "PROCESS_STATUS" "GET_PROCESS_STATUS" ProcessStatus;
    "SEMAPHORE_ID" "GET_SEMAPHORE_ID" SemId;
    "SEMAPHORE_STATUS" "GET_SEMAPHORE_STATUS" SemStatus;
    "EVENT_SET" "SET_EVENT" SetEvent;
    "EVENT_ID" "GET_EVENT_ID" EventId;
    "EVENT_STATUS" "GET_EVENT_STATUS" EventStatus;
    "CREATE_SAMPLING" "CREATE_SAMPLING_PORT" CreateSampling;
    "CREATE_QUEUE" "CREATE_QUEUING_PORT" CreateQueuing;
    "SAMPLING_ID" "GET_SAMPLING_PORT_ID" SamplingId;
    "SAMPLING_STATUS" "GET_SAMPLING_PORT_STATUS" SamplingStatus;
    "QUEUE_STATUS" "GET_QUEUING_PORT_STATUS" QueueStatus;
    "QUEUE_ID" "GET_QUEUING_PORT_ID" QueueId;
    "QUEUE_WRITE" "SEND_QUEUING_MESSAGE" QueueWrite;
    "SAMPLING_WRITE" "WRITE_SAMPLING_MESSAGE" SamplingWrite;
    "SAMPLING_READ" "READ_SAMPLING_MESSAGE" SamplingRead;
    "RECEIVE_BUFFER(16)" "RECEIVE_BUFFER" ReceiveBuffer(16);
    "SEND_BUFFER(64)" "SEND_BUFFER" SendBuffer(64);
    "RECEIVE_BUFFER(64)" "RECEIVE_BUFFER" ReceiveBuffer(64);
    "BUFFER_ID" "GET_BUFFER_ID" BufferId;
    "SEMAPHORE_WAIT" "WAIT_SEMAPHORE" WaitSem;
    "EVENT_WAIT" "WAIT_EVENT" WaitEvent;
    "CURRENT_TICKS" "GET_CURRENT_TICKS" CurrentTicks;
    "QUEUE_READ" "RECEIVE_QUEUING_MESSAGE" QueueRead;
}

/// The intra-partition services the application must cover.
pub const INTRA_PARTITION_CALLS: [&str; 34] = [
    "GET_PARTITION_STATUS",
    "CREATE_SEMAPHORE",
    "CREATE_BUFFER",
    "CREATE_BLACKBOARD",
    "READ_BLACKBOARD",
    "GET_BUFFER_ID",
    "SEND_BUFFER",
    "RECEIVE_BUFFER",
    "DISPLAY_BLACKBOARD",
    "WAIT_SEMAPHORE",
    "SET_PRIORITY",
    "GET_MY_ID",
    "GET_SEMAPHORE_STATUS",
    "CREATE_EVENT",
    "SET_EVENT",
    "GET_EVENT_ID",
    "GET_CURRENT_TICKS",
    "CREATE_QUEUING_PORT",
    "GET_QUEUING_PORT_ID",
    "GET_QUEUING_PORT_STATUS",
    "SEND_QUEUING_MESSAGE",
    "RECEIVE_QUEUING_MESSAGE",
    "WRITE_SAMPLING_MESSAGE",
    "READ_SAMPLING_MESSAGE",
    "SIGNAL_SEMAPHORE",
    "GET_PROCESS_STATUS",
    "WAIT_EVENT",
    "GET_SAMPLING_PORT_ID",
    "GET_SEMAPHORE_ID",
    "GET_PROCESS_ID",
    "GET_EVENT_STATUS",
    "CREATE_SAMPLING_PORT",
    "UNLOCK_PREEMPTION",
    "LOCK_PREEMPTION",
];

/// Resolves row or call names (any case) to probes, keeping catalog order.
/// A call name selects every row that exercises it.
pub fn select_probes(names: &[&str]) -> Result<Vec<&'static Probe>, SuiteError> {
    let mut picked = vec![false; PROBES.len()];
    for name in names {
        let mut hit = false;
        for (i, p) in PROBES.iter().enumerate() {
            if p.row.eq_ignore_ascii_case(name) || p.call.eq_ignore_ascii_case(name) {
                picked[i] = true;
                hit = true;
            }
        }
        if !hit {
            return Err(SuiteError::UnknownCall(name.to_string()));
        }
    }
    Ok(PROBES.iter().zip(picked).filter(|(_, k)| *k).map(|(p, _)| p).collect())
}

const RUNNER_PRIORITY: i32 = 100;
const MSG_MAX: usize = 64;
const SMALL: usize = 16;
const REFRESH: Tick = Tick::MAX / 4;

#[derive(Clone, Copy)]
struct Objects {
    helper: crate::porting::TaskHandle,
    sem: crate::porting::SemHandle,
    event: crate::porting::EventHandle,
    board: crate::porting::BoardHandle,
    buffer: crate::porting::BufferHandle,
    sp_out: crate::porting::SamplingHandle,
    sp_in: crate::porting::SamplingHandle,
    qp_out: crate::porting::QueuingHandle,
    qp_in: crate::porting::QueuingHandle,
}

/// Runs the selected probes (`None` for all of them) for `iters` iterations.
pub fn run_apex_latency<P: Platform>(
    platform: &P,
    probes: Option<&[&'static Probe]>,
    iters: u32,
) -> PerfResult<BenchOutput> {
    let probes: Rc<Vec<&'static Probe>> = Rc::new(probes.map(<[_]>::to_vec).unwrap_or_else(|| PROBES.iter().collect()));
    let session = Session::new(platform.rate());
    let ctxs: Rc<Vec<MeasureContext>> = Rc::new(probes.iter().map(|p| MeasureContext::named(p.row)).collect());

    // every iteration may create up to four processes and two of each object
    let per_iter_processes = 4 * iters as usize;
    let quota = (per_iter_processes as u64 + 8) * (TaskSpec::<P::Backend>::DEFAULT_STACK + 256)
        + iters as u64 * 4096
        + (1 << 20);

    let s = session.clone();
    let main = session.task(move |b: P::Backend| {
        let (s, probes, ctxs) = (s.clone(), probes.clone(), ctxs.clone());
        async move {
            let idle = TaskEntry::new(|_b: P::Backend| async {});
            let objects = Objects {
                helper: b.create_dormant(TaskSpec::new("LAT_HELPER", 1, idle)).await?,
                sem: b.create_sem("LAT_SEM", 0, 1).await?,
                event: b.create_event("LAT_EVT").await?,
                board: b.create_board("LAT_BB", MSG_MAX).await?,
                buffer: b.create_buffer("LAT_BUF", 4, MSG_MAX).await?,
                sp_out: b
                    .create_sampling("LAT_SP_OUT", MSG_MAX, Direction::Source, REFRESH)
                    .await?,
                sp_in: b
                    .create_sampling("LAT_SP_IN", MSG_MAX, Direction::Destination, REFRESH)
                    .await?,
                qp_out: b.create_queuing("LAT_QP_OUT", 4, MSG_MAX, Direction::Source).await?,
                qp_in: b
                    .create_queuing("LAT_QP_IN", 4, MSG_MAX, Direction::Destination)
                    .await?,
            };
            let s2 = s.clone();
            let runner = s.task(move |b: P::Backend| {
                let (s, probes, ctxs) = (s2.clone(), probes.clone(), ctxs.clone());
                async move {
                    for i in 0..iters {
                        for (probe, ctx) in probes.iter().zip(ctxs.iter()) {
                            run_probe(&b, probe.kind, ctx, &objects, i).await?;
                        }
                    }
                    s.validate_all(&ctxs)?;
                    s.finish();
                    Ok(())
                }
            });
            b.create_task(TaskSpec::new("LAT_RUNNER", RUNNER_PRIORITY, runner))
                .await?;
            Ok(())
        }
    });

    let mut plan = PartitionPlan::new("APEX", main);
    plan.runtime_creation = true;
    plan.process_cap = Some(per_iter_processes + 8);
    plan.memory_quota = quota;
    let mut d = Deployment::single(plan);
    d.channels = vec![
        ChannelPlan {
            link: Link::Sampling,
            source: "LAT_SP_OUT".into(),
            destination: "LAT_SP_IN".into(),
            max_size: MSG_MAX,
        },
        ChannelPlan {
            link: Link::Queuing { capacity: 4 },
            source: "LAT_QP_OUT".into(),
            destination: "LAT_QP_IN".into(),
            max_size: MSG_MAX,
        },
    ];
    session.drive(platform, d, budget(iters, 200_000))
}

async fn run_probe<B: Perf>(b: &B, kind: ProbeKind, ctx: &MeasureContext, o: &Objects, i: u32) -> PerfResult<()> {
    macro_rules! timed {
        ($e:expr) => {{
            ctx.start(b)?;
            let v = $e.await?;
            ctx.end(b)?;
            v
        }};
    }
    let msg = |n: usize| vec![i as u8; n];
    match kind {
        CreateProcess => {
            for k in 0..2 {
                let spec = TaskSpec::new(format!("LAT_P{i}_{k}"), 1, TaskEntry::new(|_b: B| async {}));
                timed!(b.create_dormant(spec));
            }
        }
        StartProcess => {
            for k in 0..2 {
                let spec = TaskSpec::new(format!("LAT_S{i}_{k}"), 1, TaskEntry::new(|_b: B| async {}));
                let t = b.create_dormant(spec).await?;
                timed!(b.start_task(t));
                b.stop_task(t).await?;
            }
        }
        CreateSem => {
            for k in 0..2 {
                timed!(b.create_sem(&format!("LAT_SEM{i}_{k}"), 0, 1));
            }
        }
        CreateBuffer => {
            for k in 0..2 {
                timed!(b.create_buffer(&format!("LAT_BUF{i}_{k}"), 1, SMALL));
            }
        }
        CreateBoard => {
            for k in 0..2 {
                timed!(b.create_board(&format!("LAT_BB{i}_{k}"), SMALL));
            }
        }
        CreateEvent => {
            for k in 0..2 {
                timed!(b.create_event(&format!("LAT_EVT{i}_{k}")));
            }
        }
        CreateSampling => {
            for k in 0..2 {
                timed!(b.create_sampling(&format!("LAT_SP{i}_{k}"), SMALL, Direction::Source, REFRESH));
            }
        }
        CreateQueuing => {
            for k in 0..2 {
                timed!(b.create_queuing(&format!("LAT_QP{i}_{k}"), 1, SMALL, Direction::Source));
            }
        }
        PartitionStatus => {
            timed!(b.partition_status());
        }
        LockPreemption => {
            timed!(b.lock_preemption());
            b.unlock_preemption().await?;
        }
        UnlockPreemption => {
            b.lock_preemption().await?;
            timed!(b.unlock_preemption());
        }
        DisplayBoard(n) => timed!(b.display(o.board, &msg(n))),
        ReadBoard(n) => {
            b.display(o.board, &msg(n)).await?;
            timed!(b.read_board(o.board, Wait::Forever));
        }
        SendBuffer(n) => {
            timed!(b.send_buffer(o.buffer, &msg(n), Wait::Forever));
            b.receive_buffer(o.buffer, Wait::Forever).await?;
        }
        ReceiveBuffer(n) => {
            b.send_buffer(o.buffer, &msg(n), Wait::Forever).await?;
            timed!(b.receive_buffer(o.buffer, Wait::Forever));
        }
        BufferId => {
            timed!(b.find_buffer("LAT_BUF"));
        }
        SignalSem => {
            timed!(b.signal_sem(o.sem));
            b.wait_sem(o.sem, Wait::Poll).await?;
        }
        WaitSem => {
            b.signal_sem(o.sem).await?;
            timed!(b.wait_sem(o.sem, Wait::Forever));
        }
        SetPriority => {
            let me = b.current_task().await?;
            timed!(b.set_priority(me, RUNNER_PRIORITY));
        }
        MyId => {
            timed!(b.current_task());
        }
        ProcessId => {
            timed!(b.find_task("LAT_HELPER"));
        }
        ProcessStatus => {
            timed!(b.task_status(o.helper));
        }
        SemId => {
            timed!(b.find_sem("LAT_SEM"));
        }
        SemStatus => {
            timed!(b.sem_status(o.sem));
        }
        SetEvent => timed!(b.set_event(o.event)),
        WaitEvent => {
            b.set_event(o.event).await?;
            timed!(b.wait_event(o.event, Wait::Forever));
        }
        EventId => {
            timed!(b.find_event("LAT_EVT"));
        }
        EventStatus => {
            timed!(b.event_status(o.event));
        }
        SamplingId => {
            timed!(b.find_sampling("LAT_SP_OUT"));
        }
        SamplingStatus => {
            timed!(b.sampling_status(o.sp_in));
        }
        QueueStatus => {
            timed!(b.queuing_status(o.qp_in));
        }
        QueueId => {
            timed!(b.find_queuing("LAT_QP_OUT"));
        }
        QueueWrite => {
            timed!(b.send_queuing(o.qp_out, &msg(SMALL), Wait::Forever));
            b.receive_queuing(o.qp_in, Wait::Forever).await?;
        }
        QueueRead => {
            b.send_queuing(o.qp_out, &msg(SMALL), Wait::Forever).await?;
            timed!(b.receive_queuing(o.qp_in, Wait::Forever));
        }
        SamplingWrite => timed!(b.write_sampling(o.sp_out, &msg(SMALL))),
        SamplingRead => {
            b.write_sampling(o.sp_out, &msg(SMALL)).await?;
            timed!(b.read_sampling(o.sp_in));
        }
        CurrentTicks => {
            timed!(b.ticks());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn rows_are_unique_and_cover_every_call() {
        let rows: BTreeSet<_> = PROBES.iter().map(|p| p.row).collect();
        assert_eq!(rows.len(), PROBES.len());
        let calls: BTreeSet<_> = PROBES.iter().map(|p| p.call).collect();
        for c in INTRA_PARTITION_CALLS {
            assert!(calls.contains(c), "{c} has no probe");
        }
        assert_eq!(INTRA_PARTITION_CALLS.iter().collect::<BTreeSet<_>>().len(), 34);
    }

    #[test]
    fn selection() {
        let p = select_probes(&["send_buffer", "MY_ID"]).unwrap();
        let rows: Vec<_> = p.iter().map(|p| p.row).collect();
        assert_eq!(rows, ["SEND_BUFFER(16)", "MY_ID", "SEND_BUFFER(64)"]);
        assert_eq!(select_probes(&["FOO"]), Err(SuiteError::UnknownCall("FOO".into())));
    }
}
