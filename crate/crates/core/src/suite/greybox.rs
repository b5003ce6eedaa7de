//! Grey-box tests: each one isolates a single kernel mechanism so that every
//! sample on the virtual clock is a small, fixed sum of cost entries.

use std::cell::RefCell;
use std::rc::Rc;

use crate::porting::{
    Deployment, MeasureContext, MutexHandle, PartitionPlan, Perf, PerfBackend, PerfError, PerfResult, Platform,
    SemHandle, TaskEntry, TaskSpec, Wait, WindowPlan,
};
use crate::timebase::{work, Tick};
use crate::workloads::{additive_checksum, WorkloadData};

use super::{budget, BenchOutput, Session};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MutexVariant {
    Acquire,
    Release,
    /// Whole-loop timing of two processes contending for one mutex.
    Looped,
    Workload,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SemVariant {
    Wait,
    Signal,
    Priority,
    /// Whole-loop timing of a two-semaphore ping-pong.
    Looped,
    Workload,
}

pub const PARTITION_WINDOW: Tick = 5_000;
pub const PARTITION_FRAME: Tick = 2 * PARTITION_WINDOW;

const WORKER_PRIORITY: i32 = 100;

fn single<B: 'static>(main: TaskEntry<B>) -> Deployment<B> {
    Deployment::single(PartitionPlan::new("BENCH", main))
}

async fn checksum_work<B: Perf>(b: &B, block: &[u8], session: &Session) -> PerfResult<()> {
    session.digest("checksum", additive_checksum(block) as u64);
    b.modeled(work::CHECKSUM_BYTE, block.len() as u64).await
}

/// `n` equal-priority workers are released together by a lower-priority
/// controller. Each sample spans one worker terminating to the next worker
/// running its first statement.
pub fn run_process_switch<P: Platform>(platform: &P, n: usize, iters: u32) -> PerfResult<BenchOutput> {
    if n < 2 {
        return Err(PerfError::InvalidState(format!(
            "process switch needs at least 2 processes, got {n}"
        )));
    }
    let session = Session::new(platform.rate());
    let ctx = MeasureContext::named("Process Switch");
    let s = session.clone();
    let main = session.task(move |b: P::Backend| {
        let (s, ctx) = (s.clone(), ctx.clone());
        async move {
            let mut workers = Vec::with_capacity(n);
            for i in 0..n {
                let ctx = ctx.clone();
                let entry = s.task(move |b: P::Backend| {
                    let ctx = ctx.clone();
                    async move {
                        if i > 0 {
                            ctx.end(&b)?;
                        }
                        if i + 1 < n {
                            ctx.start(&b)?;
                        }
                        Ok(())
                    }
                });
                workers.push(
                    b.create_dormant(TaskSpec::new(format!("WORKER{i}"), WORKER_PRIORITY, entry))
                        .await?,
                );
            }
            let s2 = s.clone();
            let controller = s.task(move |b: P::Backend| {
                let (s, ctx, workers) = (s2.clone(), ctx.clone(), workers.clone());
                async move {
                    for _ in 0..iters {
                        b.lock_preemption().await?;
                        for &w in &workers {
                            b.start_task(w).await?;
                        }
                        b.unlock_preemption().await?;
                    }
                    s.validate(&ctx)?;
                    s.finish();
                    Ok(())
                }
            });
            b.create_task(TaskSpec::new("CONTROLLER", WORKER_PRIORITY / 2, controller))
                .await?;
            Ok(())
        }
    });
    session.drive(platform, single(main), budget(iters, 50_000 * n as Tick))
}

/// Two equal-priority processes share one mutex.
///
/// The single-call variants alternate strictly: a round is lock, unlock,
/// yield, so the mutex is always free when locked. The looped variant times
/// the whole loop of each process while they contend: A locks and yields
/// holding the mutex, B blocks on it, A unlocks (handing it over) and
/// yields, B unlocks and yields.
pub fn run_mutex_pair<P: Platform>(
    platform: &P,
    variant: MutexVariant,
    iters: u32,
    data: &Rc<WorkloadData>,
) -> PerfResult<BenchOutput> {
    let session = Session::new(platform.rate());
    let ctxs: Vec<MeasureContext> = match variant {
        MutexVariant::Acquire => vec![MeasureContext::named("Mutex Acquire")],
        MutexVariant::Release => vec![MeasureContext::named("Mutex Release")],
        MutexVariant::Looped => vec![
            MeasureContext::named("Mutex Acquire 2"),
            MeasureContext::named("Mutex Release 2"),
        ],
        MutexVariant::Workload => vec![MeasureContext::named("Mutex Workload")],
    };
    let (s, data) = (session.clone(), data.clone());
    let main = session.task(move |b: P::Backend| {
        let (s, ctxs, data) = (s.clone(), ctxs.clone(), data.clone());
        async move {
            let m = b.create_mutex("M").await?;
            s.expect_parts(2);
            for who in 0..2usize {
                let (s, ctxs, data) = (s.clone(), ctxs.clone(), data.clone());
                let entry = s.clone().task(move |b: P::Backend| {
                    let (s, ctxs, data) = (s.clone(), ctxs.clone(), data.clone());
                    async move {
                        match variant {
                            MutexVariant::Looped if who == 0 => holder_loop(&b, m, &ctxs[0], iters).await?,
                            MutexVariant::Looped => contender_loop(&b, m, &ctxs[1], iters).await?,
                            _ => {
                                let rounds = if who == 0 { iters.div_ceil(2) } else { iters / 2 };
                                for _ in 0..rounds {
                                    alternating_round(&b, m, variant, &ctxs[0], &data, &s).await?;
                                }
                            }
                        }
                        if s.part_done() {
                            s.validate_all(&ctxs)?;
                            s.finish();
                        }
                        Ok(())
                    }
                });
                b.create_task(TaskSpec::new(["A", "B"][who], WORKER_PRIORITY, entry))
                    .await?;
            }
            Ok(())
        }
    });
    session.drive(platform, single(main), budget(iters, 20_000))
}

async fn alternating_round<B: Perf>(
    b: &B,
    m: MutexHandle,
    variant: MutexVariant,
    ctx: &MeasureContext,
    data: &WorkloadData,
    s: &Session,
) -> PerfResult<()> {
    match variant {
        MutexVariant::Acquire => {
            ctx.start(b)?;
            b.lock(m, Wait::Forever).await?;
            ctx.end(b)?;
            b.unlock(m).await?;
        }
        MutexVariant::Release => {
            b.lock(m, Wait::Forever).await?;
            ctx.start(b)?;
            b.unlock(m).await?;
            ctx.end(b)?;
        }
        _ => {
            ctx.start(b)?;
            b.lock(m, Wait::Forever).await?;
            checksum_work(b, &data.block, s).await?;
            b.unlock(m).await?;
            ctx.end(b)?;
        }
    }
    b.yield_now().await
}

// The holder runs one pass past its last sample so that the contender's
// final sample still sees the usual interleaving.
async fn holder_loop<B: Perf>(b: &B, m: MutexHandle, ctx: &MeasureContext, iters: u32) -> PerfResult<()> {
    for k in 0..=iters {
        if k > 0 {
            ctx.end(b)?;
        }
        if k < iters {
            ctx.start(b)?;
        }
        b.lock(m, Wait::Forever).await?;
        b.yield_now().await?;
        b.unlock(m).await?;
        b.yield_now().await?;
    }
    Ok(())
}

async fn contender_loop<B: Perf>(b: &B, m: MutexHandle, ctx: &MeasureContext, iters: u32) -> PerfResult<()> {
    for k in 0..=iters {
        if k > 0 {
            ctx.end(b)?;
        }
        if k == iters {
            break;
        }
        ctx.start(b)?;
        b.lock(m, Wait::Forever).await?;
        b.unlock(m).await?;
        b.yield_now().await?;
    }
    Ok(())
}

/// Semaphore tests.
///
/// Wait, Signal and Workload: A signals and yields, B waits (the count is
/// always 1 by then) and yields. Priority: a low-priority controller signals
/// a semaphore that three higher-priority waiters queue on; a sample spans
/// the signal to the woken waiter running. Looped: A signals SB then waits
/// on SA, B signals SA then waits on SB, and each loop is timed whole.
pub fn run_sem_family<P: Platform>(
    platform: &P,
    variant: SemVariant,
    iters: u32,
    data: &Rc<WorkloadData>,
) -> PerfResult<BenchOutput> {
    if variant == SemVariant::Priority {
        return run_priority_sem(platform, iters);
    }
    let session = Session::new(platform.rate());
    let ctxs: Vec<MeasureContext> = match variant {
        SemVariant::Wait => vec![MeasureContext::named("Sem Wait")],
        SemVariant::Signal => vec![MeasureContext::named("Sem Signal")],
        SemVariant::Looped => vec![
            MeasureContext::named("Sem Signal 2"),
            MeasureContext::named("Sem Wait 2"),
        ],
        _ => vec![MeasureContext::named("Sem Workload")],
    };
    let (s, data) = (session.clone(), data.clone());
    let main = session.task(move |b: P::Backend| {
        let (s, ctxs, data) = (s.clone(), ctxs.clone(), data.clone());
        async move {
            let sa = b.create_sem("SA", 0, 1).await?;
            let sb = b.create_sem("SB", 0, 1).await?;
            s.expect_parts(2);
            // in the looped variant B goes first so that it is already
            // blocked on SB when A signals it for the first time
            let order = if variant == SemVariant::Looped {
                [1usize, 0]
            } else {
                [0, 1]
            };
            for who in order {
                let (s, ctxs, data) = (s.clone(), ctxs.clone(), data.clone());
                let entry = s.clone().task(move |b: P::Backend| {
                    let (s, ctxs, data) = (s.clone(), ctxs.clone(), data.clone());
                    async move {
                        match (variant, who) {
                            (SemVariant::Looped, 0) => {
                                ping_loop(&b, sb, sa, &ctxs[0], iters).await?;
                                if s.part_done() {
                                    s.validate_all(&ctxs)?;
                                    s.finish();
                                }
                                // one more pass so B's last sample is a regular loop
                                b.signal_sem(sb).await?;
                                b.wait_sem(sa, Wait::Forever).await?;
                                return Ok(());
                            }
                            (SemVariant::Looped, _) => {
                                b.wait_sem(sb, Wait::Forever).await?;
                                ping_loop(&b, sa, sb, &ctxs[1], iters).await?;
                            }
                            (_, 0) => {
                                for _ in 0..iters {
                                    let measured = variant == SemVariant::Signal;
                                    if measured {
                                        ctxs[0].start(&b)?;
                                    }
                                    b.signal_sem(sa).await?;
                                    if measured {
                                        ctxs[0].end(&b)?;
                                    }
                                    b.yield_now().await?;
                                }
                            }
                            (_, _) => {
                                for _ in 0..iters {
                                    let measured = variant != SemVariant::Signal;
                                    if measured {
                                        ctxs[0].start(&b)?;
                                    }
                                    b.wait_sem(sa, Wait::Forever).await?;
                                    if variant == SemVariant::Workload {
                                        checksum_work(&b, &data.block, &s).await?;
                                    }
                                    if measured {
                                        ctxs[0].end(&b)?;
                                    }
                                    b.yield_now().await?;
                                }
                            }
                        }
                        if s.part_done() {
                            s.validate_all(&ctxs)?;
                            s.finish();
                        }
                        Ok(())
                    }
                });
                b.create_task(TaskSpec::new(["A", "B"][who], WORKER_PRIORITY, entry))
                    .await?;
            }
            Ok(())
        }
    });
    session.drive(platform, single(main), budget(iters, 20_000))
}

/// One side of the semaphore ping-pong; returns right after its last sample.
async fn ping_loop<B: Perf>(
    b: &B,
    give: SemHandle,
    take: SemHandle,
    ctx: &MeasureContext,
    iters: u32,
) -> PerfResult<()> {
    for k in 0..=iters {
        if k > 0 {
            ctx.end(b)?;
        }
        if k == iters {
            break;
        }
        ctx.start(b)?;
        b.signal_sem(give).await?;
        b.wait_sem(take, Wait::Forever).await?;
    }
    Ok(())
}

pub(crate) const WAITER_PRIORITIES: [i32; 3] = [30, 70, 50];

fn run_priority_sem<P: Platform>(platform: &P, iters: u32) -> PerfResult<BenchOutput> {
    let session = Session::new(platform.rate());
    let ctx = MeasureContext::named("Priority Sem");
    let wakes: Rc<RefCell<Vec<i32>>> = Rc::default();
    let s = session.clone();
    let main = session.task(move |b: P::Backend| {
        let (s, ctx, wakes) = (s.clone(), ctx.clone(), wakes.clone());
        async move {
            let sem = b.create_sem("S", 0, 1).await?;
            let mut waiters = Vec::new();
            for prio in WAITER_PRIORITIES {
                let (ctx, wakes) = (ctx.clone(), wakes.clone());
                let entry = s.task(move |b: P::Backend| {
                    let (ctx, wakes) = (ctx.clone(), wakes.clone());
                    async move {
                        loop {
                            b.wait_sem(sem, Wait::Forever).await?;
                            ctx.end(&b)?;
                            wakes.borrow_mut().push(prio);
                        }
                    }
                });
                waiters.push(b.create_dormant(TaskSpec::new(format!("W{prio}"), prio, entry)).await?);
            }
            let s2 = s.clone();
            let controller = s.task(move |b: P::Backend| {
                let (s, ctx, wakes, waiters) = (s2.clone(), ctx.clone(), wakes.clone(), waiters.clone());
                async move {
                    // each waiter preempts and queues as soon as it starts,
                    // so the queue order is the start order, not priority
                    for &w in &waiters {
                        b.start_task(w).await?;
                    }
                    for _ in 0..iters {
                        ctx.start(&b)?;
                        b.signal_sem(sem).await?;
                    }
                    let order = wakes.borrow().clone();
                    for cycle in order.chunks_exact(WAITER_PRIORITIES.len()) {
                        s.digest("wake_order", pack_order(cycle));
                    }
                    s.validate(&ctx)?;
                    s.finish();
                    Ok(())
                }
            });
            b.create_task(TaskSpec::new("CONTROLLER", 10, controller)).await?;
            Ok(())
        }
    });
    session.drive(platform, single(main), budget(iters, 20_000))
}

/// Priorities of one wake cycle packed into a digest, first wake in the
/// most significant byte.
pub(crate) fn pack_order(cycle: &[i32]) -> u64 {
    cycle.iter().fold(0, |acc, &p| acc << 8 | p as u64)
}

/// A busy partition and a probe partition with one window each per frame.
/// The probe is periodic with the frame as period, so it is released at
/// the start of its window; a sample spans the nominal window start to the
/// probe's first statement.
pub fn run_partition_switch<P: Platform>(platform: &P, iters: u32) -> PerfResult<BenchOutput> {
    let session = Session::new(platform.rate());
    let ctx = MeasureContext::named("Partition Switch");

    let s = session.clone();
    let busy_main = session.task(move |b: P::Backend| {
        let s = s.clone();
        async move {
            let spin = s.task(|b: P::Backend| async move {
                loop {
                    b.work(1_000).await?;
                }
            });
            b.create_task(TaskSpec::new("BUSY", 10, spin)).await?;
            Ok(())
        }
    });

    let s = session.clone();
    let probe_main = session.task(move |b: P::Backend| {
        let (s, ctx) = (s.clone(), ctx.clone());
        async move {
            let s2 = s.clone();
            let probe = s.task(move |b: P::Backend| {
                let (s, ctx) = (s2.clone(), ctx.clone());
                async move {
                    // the first activation happens wherever START ran
                    b.periodic_wait().await?;
                    for _ in 0..iters {
                        let now = b.now();
                        let window_start = now - (now - PARTITION_WINDOW) % PARTITION_FRAME;
                        ctx.start_at(window_start)?;
                        ctx.end(&b)?;
                        b.periodic_wait().await?;
                    }
                    s.validate(&ctx)?;
                    s.finish();
                    Ok(())
                }
            });
            b.create_task(TaskSpec::new("PROBE", 10, probe).periodic(PARTITION_FRAME))
                .await?;
            Ok(())
        }
    });

    let deployment = Deployment {
        frame: PARTITION_FRAME,
        partitions: vec![
            PartitionPlan::new("BUSY", busy_main),
            PartitionPlan::new("PROBE", probe_main),
        ],
        windows: vec![
            WindowPlan {
                partition: 0,
                offset: 0,
                duration: PARTITION_WINDOW,
            },
            WindowPlan {
                partition: 1,
                offset: PARTITION_WINDOW,
                duration: PARTITION_WINDOW,
            },
        ],
        channels: Vec::new(),
    };
    session.drive(platform, deployment, budget(iters, 2 * PARTITION_FRAME))
}
