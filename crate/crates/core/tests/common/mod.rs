//! Randomized kernel scenarios checked against small reference models.
//! Each runner returns `Err(description)` on the first violation.
#![allow(dead_code)]

pub mod audit;
pub mod oracles;

use std::cell::RefCell;
use std::collections::VecDeque;
use std::rc::Rc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sfpbench::apex::*;
use sfpbench::timebase::{CostTable, Tick};

type Shared<T> = Rc<RefCell<T>>;

fn shared<T>(v: T) -> Shared<T> {
    Rc::new(RefCell::new(v))
}

fn one_partition(main: Entry) -> SystemConfig {
    let mut c = SystemConfig::new(
        vec![PartitionDescriptor::new(1, "P1", 1 << 24).with_entry(main)],
        PartitionSchedule::new(1 << 40, vec![ScheduleWindow::new(1, 0, 1 << 40)]),
    );
    c.record_trace = true;
    c
}

fn run(c: SystemConfig) -> Result<System, String> {
    let mut sys = System::boot(c).map_err(|e| e.to_string())?;
    match sys.run_for(1 << 38) {
        StopReason::TickLimit => Err("scenario did not settle".into()),
        _ => Ok(sys),
    }
}

fn wake_order(trace: &[TraceEvent]) -> Vec<ProcessId> {
    trace
        .iter()
        .filter(|e| e.kind == TraceKind::Wake)
        .filter_map(|e| e.process)
        .collect()
}

/// Spawns processes with the given priorities running `body(index)`, after
/// which `controller` (priority 1) runs.
fn harness(
    prios: Vec<Priority>,
    body: impl Fn(usize) -> Entry + 'static,
    setup: impl Fn(Apex) -> std::pin::Pin<Box<dyn std::future::Future<Output = ()>>> + 'static,
    controller: Entry,
) -> Entry {
    let body = Rc::new(body);
    let setup = Rc::new(setup);
    Entry::new(move |apex: Apex| {
        let prios = prios.clone();
        let body = body.clone();
        let setup = setup.clone();
        let controller = controller.clone();
        async move {
            setup(apex.clone()).await;
            let mut ids = Vec::new();
            for (i, p) in prios.iter().enumerate() {
                ids.push(
                    apex.create_process(ProcessAttributes::new(format!("w{i}"), *p, body(i)))
                        .await
                        .unwrap(),
                );
            }
            let c = apex
                .create_process(ProcessAttributes::new("ctl", 1, controller))
                .await
                .unwrap();
            apex.start(c).await.unwrap();
        }
    })
}

// ----- semaphores ---------------------------------------------------------

#[derive(Clone, Debug)]
pub struct SemScenario {
    pub initial: u32,
    pub prios: Vec<Priority>,
    pub signals: usize,
}

pub fn random_sem(rng: &mut ChaCha8Rng) -> SemScenario {
    let n = rng.gen_range(1..=6);
    SemScenario {
        initial: rng.gen_range(0..=2),
        prios: (0..n).map(|_| rng.gen_range(2..=8)).collect(),
        signals: rng.gen_range(0..=n + 1),
    }
}

pub fn sem_fifo(s: &SemScenario) -> Result<(), String> {
    let arrivals: Shared<Vec<ProcessId>> = shared(Vec::new());
    let status: Shared<Option<SemaphoreStatus>> = shared(None);
    let a = arrivals.clone();
    let body = move |_i: usize| {
        let a = a.clone();
        Entry::new(move |apex: Apex| {
            let a = a.clone();
            async move {
                let sem = apex.get_semaphore_id("S").await.unwrap();
                a.borrow_mut().push(apex.process_id());
                apex.wait_semaphore(sem, Timeout::Infinite).await.unwrap();
            }
        })
    };
    let (initial, n, signals) = (s.initial, s.prios.len(), s.signals);
    let st = status.clone();
    let controller = Entry::new(move |apex: Apex| {
        let st = st.clone();
        async move {
            let sem = apex.get_semaphore_id("S").await.unwrap();
            for i in 0..n {
                let id = apex.get_process_id(&format!("w{i}")).await.unwrap();
                apex.start(id).await.unwrap();
            }
            for _ in 0..signals {
                apex.signal_semaphore(sem).await.unwrap();
            }
            *st.borrow_mut() = Some(apex.get_semaphore_status(sem).await.unwrap());
        }
    });
    let main = harness(
        s.prios.clone(),
        body,
        move |apex| Box::pin(async move { apex.create_semaphore("S", initial, 100).await.map(|_| ()).unwrap() }),
        controller,
    );
    let mut sys = run(one_partition(main))?;

    // reference: counter plus FIFO queue, fed in observed arrival order
    let mut value = s.initial;
    let mut queue = VecDeque::new();
    let mut passed = 0;
    for &p in arrivals.borrow().iter() {
        if value > 0 {
            value -= 1;
            passed += 1;
        } else {
            queue.push_back(p);
        }
    }
    let mut woken = Vec::new();
    for _ in 0..s.signals {
        match queue.pop_front() {
            Some(p) => woken.push(p),
            None => value += 1,
        }
    }
    let observed = wake_order(&sys.take_trace());
    if observed != woken {
        return Err(format!("wake order {observed:?}, expected {woken:?}"));
    }
    let st = (*status.borrow()).ok_or("controller did not finish")?;
    if st.value != value || st.waiting != queue.len() {
        return Err(format!("status {st:?}, model value {value} waiting {}", queue.len()));
    }
    // conservation: successful waits - signals consumed by waiters = initial - current
    let successful = (passed + woken.len()) as i64;
    let consumed = woken.len() as i64;
    let signalled_into_value = (s.signals - woken.len()) as i64;
    if successful - consumed != s.initial as i64 - st.value as i64 + signalled_into_value {
        return Err("semaphore conservation violated".into());
    }
    Ok(())
}

// ----- mutexes --------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct MutexScenario {
    pub prios: Vec<Priority>,
    pub work: Vec<Tick>,
}

pub fn random_mutex(rng: &mut ChaCha8Rng) -> MutexScenario {
    let n = rng.gen_range(1..=6);
    MutexScenario {
        prios: (0..n).map(|_| rng.gen_range(2..=8)).collect(),
        work: (0..n).map(|_| rng.gen_range(0..500)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum MutexLog {
    Try(ProcessId),
    Got(ProcessId),
    Rel(ProcessId),
}

pub fn mutex_handoff(s: &MutexScenario) -> Result<(), String> {
    let events: Shared<Vec<MutexLog>> = shared(Vec::new());
    let ev = events.clone();
    let work = s.work.clone();
    let body = move |i: usize| {
        let ev = ev.clone();
        let w = work[i];
        Entry::new(move |apex: Apex| {
            let ev = ev.clone();
            async move {
                let m = apex.get_mutex_id("M").await.unwrap();
                let me = apex.process_id();
                ev.borrow_mut().push(MutexLog::Try(me));
                apex.acquire_mutex(m, Timeout::Infinite).await.unwrap();
                ev.borrow_mut().push(MutexLog::Got(me));
                apex.work(w).await.unwrap();
                ev.borrow_mut().push(MutexLog::Rel(me));
                apex.release_mutex(m).await.unwrap();
            }
        })
    };
    let n = s.prios.len();
    let controller = Entry::new(move |apex: Apex| async move {
        let m = apex.get_mutex_id("M").await.unwrap();
        apex.acquire_mutex(m, Timeout::Infinite).await.unwrap();
        for i in 0..n {
            let id = apex.get_process_id(&format!("w{i}")).await.unwrap();
            apex.start(id).await.unwrap();
        }
        apex.release_mutex(m).await.unwrap();
    });
    let main = harness(
        s.prios.clone(),
        body,
        |apex| Box::pin(async move { apex.create_mutex("M").await.map(|_| ()).unwrap() }),
        controller,
    );
    run(one_partition(main))?;
    let events = events.borrow();
    let tries: Vec<_> = events
        .iter()
        .filter_map(|e| if let MutexLog::Try(p) = e { Some(*p) } else { None })
        .collect();
    let gots: Vec<_> = events
        .iter()
        .filter_map(|e| if let MutexLog::Got(p) = e { Some(*p) } else { None })
        .collect();
    if tries != gots {
        return Err(format!("acquired in {gots:?}, blocked in {tries:?}"));
    }
    // single owner: Got/Rel strictly alternate per process
    let mut owner = None;
    for e in events.iter() {
        match e {
            MutexLog::Got(p) if owner.is_none() => owner = Some(*p),
            MutexLog::Rel(p) if owner == Some(*p) => owner = None,
            MutexLog::Try(_) => {}
            other => return Err(format!("ownership violated at {other:?}")),
        }
    }
    Ok(())
}

// ----- events ---------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct EventScenario {
    pub prios: Vec<Priority>,
    pub preset: bool,
}

pub fn random_event(rng: &mut ChaCha8Rng) -> EventScenario {
    let n = rng.gen_range(1..=6);
    EventScenario {
        prios: (0..n).map(|_| rng.gen_range(2..=8)).collect(),
        preset: rng.gen_bool(0.2),
    }
}

pub fn event_broadcast(s: &EventScenario) -> Result<(), String> {
    let resumed: Shared<Vec<ProcessId>> = shared(Vec::new());
    let probe: Shared<Option<(usize, usize, Tick)>> = shared(None);
    let r = resumed.clone();
    let body = move |_i: usize| {
        let r = r.clone();
        Entry::new(move |apex: Apex| {
            let r = r.clone();
            async move {
                let e = apex.get_event_id("E").await.unwrap();
                apex.wait_event(e, Timeout::Infinite).await.unwrap();
                r.borrow_mut().push(apex.process_id());
            }
        })
    };
    let n = s.prios.len();
    let preset = s.preset;
    let pr = probe.clone();
    let controller = Entry::new(move |apex: Apex| {
        let pr = pr.clone();
        async move {
            let e = apex.get_event_id("E").await.unwrap();
            if preset {
                apex.set_event(e).await.unwrap();
            }
            for i in 0..n {
                let id = apex.get_process_id(&format!("w{i}")).await.unwrap();
                apex.start(id).await.unwrap();
            }
            let before = apex.get_event_status(e).await.unwrap().waiting;
            apex.set_event(e).await.unwrap();
            let after = apex.get_event_status(e).await.unwrap().waiting;
            *pr.borrow_mut() = Some((before, after, 0));
        }
    });
    let main = harness(
        s.prios.clone(),
        body,
        |apex| Box::pin(async move { apex.create_event("E").await.map(|_| ()).unwrap() }),
        controller,
    );
    let mut sys = run(one_partition(main))?;
    let (before, after, _) = probe.borrow().ok_or("controller did not finish")?;
    let expected_blocked = if s.preset { 0 } else { n };
    if before != expected_blocked || after != 0 {
        return Err(format!(
            "waiters before/after set: {before}/{after}, expected {expected_blocked}/0"
        ));
    }
    let trace = sys.take_trace();
    // the waiters preempt the controller right after the set, so take the
    // tick of the set from the trace
    let set_tick = trace
        .iter()
        .rfind(|e| e.kind == TraceKind::Call && e.detail.starts_with("SET_EVENT"))
        .ok_or("no SET_EVENT in trace")?
        .tick;
    let wakes: Vec<_> = trace.iter().filter(|e| e.kind == TraceKind::Wake).collect();
    if wakes.len() != expected_blocked || wakes.iter().any(|w| w.tick != set_tick) {
        return Err(format!(
            "{} wake-ups, ticks {:?}, set at {set_tick}",
            wakes.len(),
            wakes.iter().map(|w| w.tick).collect::<Vec<_>>()
        ));
    }
    if resumed.borrow().len() != n {
        return Err("not every waiter resumed".into());
    }
    Ok(())
}

// ----- buffers --------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct BufferScenario {
    pub capacity: usize,
    pub sender_prios: Vec<Priority>,
    pub receiver_prio: Priority,
    pub messages: Vec<Vec<Vec<u8>>>,
}

pub fn random_buffer(rng: &mut ChaCha8Rng) -> BufferScenario {
    let senders = rng.gen_range(1..=3);
    BufferScenario {
        capacity: rng.gen_range(1..=4),
        sender_prios: (0..senders).map(|_| rng.gen_range(2..=8)).collect(),
        receiver_prio: rng.gen_range(2..=8),
        messages: (0..senders)
            .map(|_| {
                (0..rng.gen_range(0..=8))
                    .map(|_| (0..rng.gen_range(0..=8)).map(|_| rng.gen()).collect())
                    .collect()
            })
            .collect(),
    }
}

pub fn buffer_fifo(s: &BufferScenario) -> Result<(), String> {
    let received: Shared<Vec<Vec<u8>>> = shared(Vec::new());
    run(one_partition(buffer_main(s, received.clone())))?;
    let got = received.borrow();
    let sent: usize = s.messages.iter().map(Vec::len).sum();
    if got.len() != sent {
        return Err(format!("received {} of {sent} messages", got.len()));
    }
    for (k, msgs) in s.messages.iter().enumerate() {
        let sub: Vec<_> = got.iter().filter(|m| m.first() == Some(&(k as u8))).cloned().collect();
        let want: Vec<_> = msgs.iter().map(|m| tagged(k, m)).collect();
        if sub != want {
            return Err(format!("sender {k} order broken: {sub:?} vs {want:?}"));
        }
    }
    Ok(())
}

fn tagged(sender: usize, m: &[u8]) -> Vec<u8> {
    let mut v = Vec::with_capacity(m.len() + 1);
    v.push(sender as u8);
    v.extend_from_slice(m);
    v
}

fn buffer_main(s: &BufferScenario, received: Shared<Vec<Vec<u8>>>) -> Entry {
    let total: usize = s.messages.iter().map(Vec::len).sum();
    let capacity = s.capacity;
    let messages = s.messages.clone();
    let sender_prios = s.sender_prios.clone();
    let receiver_prio = s.receiver_prio;
    let recv = received;
    Entry::new(move |apex: Apex| {
        let messages = messages.clone();
        let sender_prios = sender_prios.clone();
        let recv = recv.clone();
        async move {
            apex.create_buffer("B", capacity, 9).await.unwrap();
            let mut ids = Vec::new();
            for (k, msgs) in messages.into_iter().enumerate() {
                let body = Entry::new(move |apex: Apex| {
                    let msgs = msgs.clone();
                    async move {
                        let b = apex.get_buffer_id("B").await.unwrap();
                        for m in msgs {
                            apex.send_buffer(b, &tagged(k, &m), Timeout::Infinite).await.unwrap();
                        }
                    }
                });
                ids.push(
                    apex.create_process(ProcessAttributes::new(format!("s{k}"), sender_prios[k], body))
                        .await
                        .unwrap(),
                );
            }
            let rbody = Entry::new(move |apex: Apex| {
                let recv = recv.clone();
                async move {
                    let b = apex.get_buffer_id("B").await.unwrap();
                    for _ in 0..total {
                        let m = apex.receive_buffer(b, Timeout::Infinite).await.unwrap();
                        recv.borrow_mut().push(m);
                    }
                }
            });
            ids.push(
                apex.create_process(ProcessAttributes::new("r", receiver_prio, rbody))
                    .await
                    .unwrap(),
            );
            for id in ids {
                apex.start(id).await.unwrap();
            }
        }
    })
}

// ----- queuing ports across partitions --------------------------------------

#[derive(Clone, Debug)]
pub struct QueuingScenario {
    pub capacity: usize,
    pub messages: Vec<Vec<u8>>,
    pub receiver_first_delay: Tick,
}

pub fn random_queuing(rng: &mut ChaCha8Rng) -> QueuingScenario {
    QueuingScenario {
        capacity: rng.gen_range(1..=4),
        messages: (0..rng.gen_range(1..=10))
            .map(|_| (0..rng.gen_range(0..=8)).map(|_| rng.gen()).collect())
            .collect(),
        receiver_first_delay: rng.gen_range(0..3000),
    }
}

const QFRAME: Tick = 20_000;

pub fn queuing_fifo(s: &QueuingScenario) -> Result<(), String> {
    let got: Shared<Vec<(Tick, Vec<u8>)>> = shared(Vec::new());
    let (cap, msgs) = (s.capacity, s.messages.clone());
    let n = msgs.len();
    let tx = Entry::new(move |apex: Apex| {
        let msgs = msgs.clone();
        async move {
            let body = Entry::new(move |apex: Apex| {
                let msgs = msgs.clone();
                async move {
                    let q = apex.get_queuing_port_id("TX").await.unwrap();
                    for m in msgs {
                        apex.send_queuing_message(q, &m, Timeout::Infinite).await.unwrap();
                    }
                }
            });
            apex.create_queuing_port("TX", cap, 8, PortDirection::Source)
                .await
                .unwrap();
            let id = apex
                .create_process(ProcessAttributes::new("tx", 5, body))
                .await
                .unwrap();
            apex.start(id).await.unwrap();
        }
    });
    let g = got.clone();
    let delay = s.receiver_first_delay;
    let rx = Entry::new(move |apex: Apex| {
        let g = g.clone();
        async move {
            let body = Entry::new(move |apex: Apex| {
                let g = g.clone();
                async move {
                    let q = apex.get_queuing_port_id("RX").await.unwrap();
                    apex.timed_wait(delay).await.unwrap();
                    for _ in 0..n {
                        let m = apex.receive_queuing_message(q, Timeout::Infinite).await.unwrap();
                        g.borrow_mut().push((apex.now(), m));
                    }
                }
            });
            apex.create_queuing_port("RX", cap, 8, PortDirection::Destination)
                .await
                .unwrap();
            let id = apex
                .create_process(ProcessAttributes::new("rx", 5, body))
                .await
                .unwrap();
            apex.start(id).await.unwrap();
        }
    });
    let mut c = SystemConfig::new(
        vec![
            PartitionDescriptor::new(1, "TXP", 1 << 20).with_entry(tx),
            PartitionDescriptor::new(2, "RXP", 1 << 20).with_entry(rx),
        ],
        PartitionSchedule::new(
            QFRAME,
            vec![
                ScheduleWindow::new(1, 0, 10_000),
                ScheduleWindow::new(2, 10_000, 10_000),
            ],
        ),
    );
    c.channels.push(ChannelConfig {
        kind: ChannelKind::Queuing,
        source: "TX".into(),
        destination: "RX".into(),
        max_size: 8,
        capacity: cap,
    });
    let mut sys = System::boot(c).map_err(|e| e.to_string())?;
    let done = sys.run_until(QFRAME * 400, |_| false);
    let _ = done;
    let got = got.borrow();
    let bodies: Vec<_> = got.iter().map(|(_, m)| m.clone()).collect();
    if bodies != s.messages {
        return Err(format!("received {bodies:?}, sent {:?}", s.messages));
    }
    if let Some((t, _)) = got.iter().find(|(t, _)| t % QFRAME < 10_000) {
        return Err(format!("destination observed a message at {t}, outside its window"));
    }
    Ok(())
}

// ----- single-slot objects --------------------------------------------------

#[derive(Clone, Debug)]
pub enum SlotOp {
    Write(Vec<u8>),
    Read,
    Clear,
    Delay(Tick),
}

#[derive(Clone, Debug)]
pub struct SlotScenario {
    pub ops: Vec<SlotOp>,
    pub refresh: Tick,
}

pub fn random_slot(rng: &mut ChaCha8Rng) -> SlotScenario {
    SlotScenario {
        ops: (0..rng.gen_range(1..=16))
            .map(|_| match rng.gen_range(0..10) {
                0..=3 => SlotOp::Write((0..rng.gen_range(1..=8)).map(|_| rng.gen()).collect()),
                4..=7 => SlotOp::Read,
                8 => SlotOp::Clear,
                _ => SlotOp::Delay(rng.gen_range(1..2000)),
            })
            .collect(),
        refresh: rng.gen_range(100..3000),
    }
}

/// Runs the op list against a blackboard and against a sampling channel,
/// comparing every read with a one-slot reference. Clear only applies to
/// the blackboard.
pub fn single_slot(s: &SlotScenario) -> Result<(), String> {
    let verdict: Shared<Result<(), String>> = shared(Err("did not run".into()));
    let v = verdict.clone();
    let ops = s.ops.clone();
    let refresh = s.refresh;
    let main = Entry::new(move |apex: Apex| {
        let v = v.clone();
        let ops = ops.clone();
        async move {
            *v.borrow_mut() = slot_body(&apex, &ops, refresh).await;
        }
    });
    let mut c = one_partition(main);
    c.channels.push(ChannelConfig {
        kind: ChannelKind::Sampling,
        source: "OUT".into(),
        destination: "IN".into(),
        max_size: 8,
        capacity: 1,
    });
    run(c)?;
    let v = verdict.borrow().clone();
    v
}

async fn slot_body(apex: &Apex, ops: &[SlotOp], refresh: Tick) -> Result<(), String> {
    let bb = apex.create_blackboard("BB", 8).await.unwrap();
    let out = apex
        .create_sampling_port("OUT", 8, PortDirection::Source, refresh)
        .await
        .unwrap();
    let inp = apex
        .create_sampling_port("IN", 8, PortDirection::Destination, refresh)
        .await
        .unwrap();
    let mut board: Option<Vec<u8>> = None;
    let mut sample: Option<(Vec<u8>, Tick)> = None;
    for op in ops {
        match op {
            SlotOp::Write(m) => {
                apex.display_blackboard(bb, m).await.unwrap();
                board = Some(m.clone());
                apex.write_sampling_message(out, m).await.unwrap();
                sample = Some((m.clone(), apex.now()));
            }
            SlotOp::Clear => {
                apex.clear_blackboard(bb).await.unwrap();
                board = None;
            }
            SlotOp::Delay(t) => apex.timed_wait(*t).await.unwrap(),
            SlotOp::Read => {
                let got = apex.read_blackboard(bb, Timeout::POLL).await;
                match (&board, got) {
                    (Some(m), Ok(g)) if *m == g => {}
                    (None, Err(ApexError::TimedOut)) => {}
                    (m, g) => return Err(format!("blackboard read {g:?}, model {m:?}")),
                }
                let got = apex.read_sampling_message(inp).await;
                let now = apex.now();
                match (&sample, got) {
                    (Some((m, at)), Ok((g, validity))) => {
                        let fresh = now - at <= refresh;
                        let want = if fresh { Validity::Valid } else { Validity::Invalid };
                        if *m != g || validity != want {
                            return Err(format!("sampling read {g:?}/{validity:?}, model {m:?}/{want:?}"));
                        }
                    }
                    (None, Err(ApexError::NoMessage)) => {}
                    (m, g) => return Err(format!("sampling read {g:?}, model {m:?}")),
                }
            }
        }
    }
    let st = apex.get_blackboard_id("BB").await;
    st.map(|_| ()).map_err(|e| e.to_string())
}

// ----- partition isolation --------------------------------------------------

#[derive(Clone, Debug)]
pub struct ScheduleScenario {
    pub frame: Tick,
    /// (partition index, offset, duration)
    pub windows: Vec<(u32, Tick, Tick)>,
    pub partitions: u32,
    /// per partition: (priority, work chunk, delay) of each process
    pub procs: Vec<Vec<(Priority, Tick, Tick)>>,
}

pub fn random_schedule(rng: &mut ChaCha8Rng) -> ScheduleScenario {
    let partitions = rng.gen_range(1..=4u32);
    let slots = rng.gen_range(partitions..=partitions + 3);
    let frame = rng.gen_range(20_000..80_000u64);
    // random cut points, then maybe drop gaps between windows
    let mut cuts: Vec<Tick> = (0..slots - 1).map(|_| rng.gen_range(1..frame)).collect();
    cuts.push(0);
    cuts.push(frame);
    cuts.sort();
    cuts.dedup();
    let mut windows = Vec::new();
    for (k, w) in cuts.windows(2).enumerate() {
        let (start, end) = (w[0], w[1]);
        if rng.gen_bool(0.15) && k > 0 {
            continue; // leave a gap
        }
        let owner = if k < partitions as usize {
            k as u32
        } else {
            rng.gen_range(0..partitions)
        };
        windows.push((owner + 1, start, end - start));
    }
    let procs = (0..partitions)
        .map(|_| {
            // at least one looping process so that the system never stalls
            (0..rng.gen_range(1..=3))
                .map(|_| (rng.gen_range(1..=9), rng.gen_range(1..4000), rng.gen_range(0..6000)))
                .collect()
        })
        .collect();
    ScheduleScenario {
        frame,
        windows,
        partitions,
        procs,
    }
}

pub fn isolation(s: &ScheduleScenario, frames: u64) -> Result<(), String> {
    let parts = (0..s.partitions)
        .map(|p| {
            let procs = s.procs[p as usize].clone();
            let main = Entry::new(move |apex: Apex| {
                let procs = procs.clone();
                async move {
                    for (i, &(prio, chunk, delay)) in procs.iter().enumerate() {
                        let body = Entry::new(move |apex: Apex| async move {
                            loop {
                                apex.work(chunk).await.unwrap();
                                apex.get_current_ticks().await.unwrap();
                                apex.timed_wait(delay).await.unwrap();
                            }
                        });
                        let id = apex
                            .create_process(ProcessAttributes::new(format!("p{i}"), prio, body))
                            .await
                            .unwrap();
                        apex.start(id).await.unwrap();
                    }
                }
            });
            PartitionDescriptor::new(p + 1, format!("P{}", p + 1), 1 << 20).with_entry(main)
        })
        .collect();
    let windows = s
        .windows
        .iter()
        .map(|&(p, o, d)| ScheduleWindow::new(p, o, d))
        .collect();
    let mut c = SystemConfig::new(parts, PartitionSchedule::new(s.frame, windows));
    c.record_trace = true;
    c.costs = CostTable::calibrated();
    let mut sys = System::boot(c).map_err(|e| e.to_string())?;
    sys.run_for(s.frame * frames);
    let trace = sys.take_trace();

    let owner_at = |tick: Tick| -> Option<u32> {
        let off = tick % s.frame;
        s.windows
            .iter()
            .find(|&&(_, o, d)| off >= o && off < o + d)
            .map(|w| w.0)
    };
    for e in &trace {
        if let Some(p) = e.partition {
            if owner_at(e.tick) != Some(p.0) {
                return Err(format!("event `{e}` outside its partition's window"));
            }
        }
    }
    let mut per_frame: Vec<Vec<(u32, Tick)>> = vec![Vec::new(); frames as usize];
    for e in trace.iter().filter(|e| e.kind == TraceKind::WindowStart) {
        let f = (e.tick / s.frame) as usize;
        if f < per_frame.len() {
            per_frame[f].push((e.partition.unwrap().0, e.tick % s.frame));
        }
    }
    let expected: Vec<(u32, Tick)> = s.windows.iter().map(|&(p, o, _)| (p, o)).collect();
    for (f, seq) in per_frame.iter().enumerate() {
        if *seq != expected {
            return Err(format!("frame {f} window sequence {seq:?}, expected {expected:?}"));
        }
    }
    Ok(())
}
