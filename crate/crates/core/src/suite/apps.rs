//! Complete applications: the three computational kernels run as a single
//! process, and three multi-process programs built on APEX services.

use std::cell::{Cell, RefCell};
use std::collections::VecDeque;
use std::rc::Rc;

use crate::porting::{
    ChannelPlan, Deployment, Direction, Link, MeasureContext, PartitionPlan, Perf, PerfBackend, PerfError, PerfResult,
    Platform, TaskSpec, Wait, WindowPlan,
};
use crate::timebase::{work, Tick};
use crate::workloads::{additive_checksum, adpcm::adpcm_codec, crc32, data::matrices_from, data::random_bytes};
use crate::workloads::{data::BLOCK_LEN, sobel::sobel_pipeline, WorkloadData};

use super::{budget, BenchKind, BenchOutput, Session};

/// 64-bit FNV-1a, used to fingerprint kernel outputs.
pub fn fingerprint(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

pub(crate) fn le_bytes<T: Copy, const N: usize>(values: &[T], f: impl Fn(T) -> [u8; N]) -> Vec<u8> {
    values.iter().flat_map(|&v| f(v)).collect()
}

/// Outputs of one pass of a single-process kernel and its modeled cost.
struct KernelPass {
    digest: u64,
    op: &'static str,
    units: u64,
}

fn kernel_pass(kind: BenchKind, data: &WorkloadData) -> PerfResult<KernelPass> {
    let fail = |e: crate::workloads::WorkloadError| PerfError::InvalidState(e.to_string());
    Ok(match kind {
        BenchKind::Sobel => {
            let out = sobel_pipeline(&data.image).map_err(fail)?;
            KernelPass {
                digest: fingerprint(&out.pixels),
                op: work::SOBEL_PIXEL,
                units: out.pixels.len() as u64,
            }
        }
        BenchKind::Adpcm => {
            let out = adpcm_codec(&data.signal);
            let mut bytes = out.encoded.clone();
            bytes.extend(le_bytes(&out.decoded, i16::to_le_bytes));
            KernelPass {
                digest: fingerprint(&bytes),
                op: work::ADPCM_SAMPLE,
                units: 2 * data.signal.len() as u64,
            }
        }
        _ => {
            let (dist, steps) = data.graph.shortest_paths_counted(0);
            KernelPass {
                digest: fingerprint(&le_bytes(&dist, u64::to_le_bytes)),
                op: work::DIJKSTRA_STEP,
                units: steps,
            }
        }
    })
}

/// Digest names reported by the single-process kernels.
pub fn kernel_digest_name(kind: BenchKind) -> &'static str {
    match kind {
        BenchKind::Sobel => "sobel",
        BenchKind::Adpcm => "adpcm",
        _ => "dijkstra",
    }
}

/// Sobel, ADPCM or Dijkstra: each iteration runs the kernel on the same
/// input and charges its modeled cost.
pub fn run_complete<P: Platform>(
    platform: &P,
    kind: BenchKind,
    iters: u32,
    data: &Rc<WorkloadData>,
) -> PerfResult<BenchOutput> {
    let row = match kind {
        BenchKind::Sobel => "SOBEL",
        BenchKind::Adpcm => "ADPCM",
        BenchKind::Dijkstra => "DIJKSTRA",
        other => {
            return Err(PerfError::InvalidState(format!(
                "{other:?} is not a single-kernel application"
            )))
        }
    };
    let session = Session::new(platform.rate());
    let ctx = MeasureContext::named(row);
    let (s, data) = (session.clone(), data.clone());
    let main = session.task(move |b: P::Backend| {
        let (s, ctx, data) = (s.clone(), ctx.clone(), data.clone());
        async move {
            let s2 = s.clone();
            let body = s.task(move |b: P::Backend| {
                let (s, ctx, data) = (s2.clone(), ctx.clone(), data.clone());
                async move {
                    for _ in 0..iters {
                        ctx.start(&b)?;
                        let pass = kernel_pass(kind, &data)?;
                        b.modeled(pass.op, pass.units).await?;
                        ctx.end(&b)?;
                        s.digest(kernel_digest_name(kind), pass.digest);
                    }
                    s.validate(&ctx)?;
                    s.finish();
                    Ok(())
                }
            });
            b.create_task(TaskSpec::new(row, 100, body)).await?;
            Ok(())
        }
    });
    let per_iter = 500_000;
    session.drive(
        platform,
        Deployment::single(PartitionPlan::new(row, main)),
        budget(iters, per_iter),
    )
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AppOptions {
    /// APEX APP 2 only: set every event up front and never reset them, so
    /// no wait blocks and the stages simply run in priority order.
    pub preset_events: bool,
}

pub(crate) const STAGE_PRIORITIES: [i32; 4] = [40, 30, 20, 10];

#[derive(Clone, Copy)]
enum Sync {
    Sem([crate::porting::SemHandle; 4]),
    Event([crate::porting::EventHandle; 4], bool),
}

impl Sync {
    async fn enter<B: Perf>(&self, b: &B, stage: usize) -> PerfResult<()> {
        match *self {
            Sync::Sem(s) => b.wait_sem(s[stage], Wait::Forever).await,
            Sync::Event(e, preset) => {
                b.wait_event(e[stage], Wait::Forever).await?;
                if !preset {
                    b.reset_event(e[stage]).await?;
                }
                Ok(())
            }
        }
    }

    async fn pass_on<B: Perf>(&self, b: &B, stage: usize) -> PerfResult<()> {
        let next = (stage + 1) % 4;
        match *self {
            Sync::Sem(s) => b.signal_sem(s[next]).await,
            Sync::Event(e, _) => b.set_event(e[next]).await,
        }
    }
}

/// Stage work shared by APEX APP 1 and 2.
async fn stage_work<B: Perf>(b: &B, stage: usize, data: &WorkloadData, s: &Session) -> PerfResult<()> {
    let block = &data.block;
    match stage {
        0 => {
            s.digest("stage1", additive_checksum(block) as u64);
            b.modeled(work::CHECKSUM_BYTE, block.len() as u64).await
        }
        1 => {
            // status queries stand in for the control logic of this stage
            let me = b.current_task().await?;
            b.task_status(me).await?;
            b.partition_status().await?;
            b.ticks().await?;
            Ok(())
        }
        2 => {
            s.digest("stage3", crc32(block) as u64);
            b.modeled(work::CRC_BYTE, block.len() as u64).await
        }
        _ => {
            let (m1, m2) = matrices_from(block, data.matrix_dim);
            let product = m1.multiply(&m2).map_err(|e| PerfError::InvalidState(e.to_string()))?;
            s.digest("stage4", fingerprint(&le_bytes(product.as_slice(), i64::to_le_bytes)));
            b.modeled(work::MATMUL_MAC, m1.mac_count()).await
        }
    }
}

/// APEX APP 1 (semaphores) and 2 (events) chain four stage processes of
/// decreasing priority; a sample spans stage 1 starting to stage 4
/// finishing. APEX APP 3 is the two-partition pipeline of [`run_app3`].
pub fn run_apex_app<P: Platform>(
    platform: &P,
    which: u8,
    iters: u32,
    data: &Rc<WorkloadData>,
    options: AppOptions,
) -> PerfResult<BenchOutput> {
    match which {
        1 | 2 => run_chain(platform, which, iters, data, options),
        3 => run_app3(platform, iters, data),
        n => Err(PerfError::InvalidState(format!("there is no APEX APP {n}"))),
    }
}

fn run_chain<P: Platform>(
    platform: &P,
    which: u8,
    iters: u32,
    data: &Rc<WorkloadData>,
    options: AppOptions,
) -> PerfResult<BenchOutput> {
    let row = if which == 1 { "APEX APP 1" } else { "APEX APP 2" };
    let session = Session::new(platform.rate());
    let ctx = MeasureContext::named(row);
    let (s, data) = (session.clone(), data.clone());
    let main = session.task(move |b: P::Backend| {
        let (s, ctx, data) = (s.clone(), ctx.clone(), data.clone());
        async move {
            let sync = if which == 1 {
                let mut h = Vec::new();
                for k in 0..4 {
                    h.push(b.create_sem(&format!("S{}", k + 1), u32::from(k == 0), 1).await?);
                }
                Sync::Sem([h[0], h[1], h[2], h[3]])
            } else {
                let mut h = Vec::new();
                for k in 0..4 {
                    let e = b.create_event(&format!("E{}", k + 1)).await?;
                    if k == 0 || options.preset_events {
                        b.set_event(e).await?;
                    }
                    h.push(e);
                }
                Sync::Event([h[0], h[1], h[2], h[3]], options.preset_events)
            };
            let starts: Rc<RefCell<VecDeque<Tick>>> = Rc::default();
            for (stage, &prio) in STAGE_PRIORITIES.iter().enumerate() {
                let (s2, ctx, data, starts) = (s.clone(), ctx.clone(), data.clone(), starts.clone());
                let entry = s.task(move |b: P::Backend| {
                    let (s, ctx, data, starts) = (s2.clone(), ctx.clone(), data.clone(), starts.clone());
                    async move {
                        for _ in 0..iters {
                            sync.enter(&b, stage).await?;
                            if stage == 0 {
                                starts.borrow_mut().push_back(b.now());
                            }
                            stage_work(&b, stage, &data, &s).await?;
                            if stage == 3 {
                                let t0 = starts.borrow_mut().pop_front().ok_or(PerfError::InvalidState(
                                    "stage 4 finished an iteration stage 1 never began".into(),
                                ))?;
                                ctx.start_at(t0)?;
                                ctx.end(&b)?;
                            }
                            sync.pass_on(&b, stage).await?;
                        }
                        if stage == 3 {
                            s.validate(&ctx)?;
                            s.finish();
                        }
                        Ok(())
                    }
                });
                b.create_task(TaskSpec::new(format!("P{}", stage + 1), prio, entry))
                    .await?;
            }
            Ok(())
        }
    });
    session.drive(
        platform,
        Deployment::single(PartitionPlan::new(row, main)),
        budget(iters, 200_000),
    )
}

pub const APP3_WINDOW: Tick = 20_000;
pub const APP3_FRAME: Tick = 2 * APP3_WINDOW;
/// Sequence number, CRC, then the block.
pub const APP3_MESSAGE: usize = 8 + BLOCK_LEN;

/// Builds the message partition A sends for iteration `seq`.
pub fn app3_message(seq: u32, block: &[u8]) -> Vec<u8> {
    let mut m = Vec::with_capacity(8 + block.len());
    m.extend(seq.to_le_bytes());
    m.extend(crc32(block).to_le_bytes());
    m.extend_from_slice(block);
    m
}

/// Folds one received message into the APP 3 digest: its CRC and the
/// matrix product built from its block.
pub fn app3_fold(acc: u64, crc: u32, product: &[i64]) -> u64 {
    let mut bytes = acc.to_le_bytes().to_vec();
    bytes.extend(crc.to_le_bytes());
    bytes.extend(le_bytes(product, i64::to_le_bytes));
    fingerprint(&bytes)
}

/// Two partitions, each with a periodic and a sporadic process. In A the
/// periodic process draws a random block and wakes the sporadic one, which
/// computes its CRC and writes block and CRC to a sampling port. In B the
/// periodic process polls the port and wakes its sporadic partner on a new
/// message, which checks the CRC and multiplies two matrices filled from
/// the block. Each row spans one partition's periodic release to its
/// sporadic process finishing.
fn run_app3<P: Platform>(platform: &P, iters: u32, data: &Rc<WorkloadData>) -> PerfResult<BenchOutput> {
    let session = Session::new(platform.rate());
    let ctx_a = MeasureContext::named("APEX APP 3 A");
    let ctx_b = MeasureContext::named("APEX APP 3 B");

    let (s, data_a, ca) = (session.clone(), data.clone(), ctx_a.clone());
    let main_a = session.task(move |b: P::Backend| {
        let (s, data, ctx) = (s.clone(), data_a.clone(), ca.clone());
        async move {
            let go = b.create_sem("CRC_GO", 0, 1).await?;
            let port = b
                .create_sampling("CRC_OUT", APP3_MESSAGE, Direction::Source, APP3_FRAME)
                .await?;
            let block: Rc<RefCell<Vec<u8>>> = Rc::default();
            let seq = Rc::new(Cell::new(0u32));

            let (blk, sq, c, rng) = (
                block.clone(),
                seq.clone(),
                ctx.clone(),
                Rc::new(RefCell::new(data.payload_rng())),
            );
            let periodic = s.task(move |b: P::Backend| {
                let (blk, sq, ctx, rng) = (blk.clone(), sq.clone(), c.clone(), rng.clone());
                async move {
                    loop {
                        if sq.get() < iters {
                            ctx.start(&b)?;
                        }
                        *blk.borrow_mut() = random_bytes(&mut *rng.borrow_mut(), BLOCK_LEN);
                        b.signal_sem(go).await?;
                        b.periodic_wait().await?;
                    }
                }
            });
            let sporadic = s.task(move |b: P::Backend| {
                let (blk, sq, ctx) = (block.clone(), seq.clone(), ctx.clone());
                async move {
                    loop {
                        b.wait_sem(go, Wait::Forever).await?;
                        let msg = app3_message(sq.get(), &blk.borrow());
                        b.modeled(work::CRC_BYTE, BLOCK_LEN as u64).await?;
                        b.write_sampling(port, &msg).await?;
                        if sq.get() < iters {
                            ctx.end(&b)?;
                        }
                        sq.set(sq.get() + 1);
                    }
                }
            });
            b.create_task(TaskSpec::new("CRC_PERIODIC", 20, periodic).periodic(APP3_FRAME))
                .await?;
            b.create_task(TaskSpec::new("CRC_SPORADIC", 10, sporadic)).await?;
            Ok(())
        }
    });

    let (s, cb) = (session.clone(), ctx_b.clone());
    let main_b = session.task(move |b: P::Backend| {
        let (s, ctx, ctx_a) = (s.clone(), cb.clone(), ctx_a.clone());
        async move {
            let go = b.create_sem("MAT_GO", 0, 1).await?;
            let port = b
                .create_sampling("MAT_IN", APP3_MESSAGE, Direction::Destination, APP3_FRAME)
                .await?;
            let inbox: Rc<RefCell<Vec<u8>>> = Rc::default();
            let last = Rc::new(Cell::new(None::<u32>));

            let (ib, c) = (inbox.clone(), ctx.clone());
            let periodic = s.task(move |b: P::Backend| {
                let (ib, ctx, last) = (ib.clone(), c.clone(), last.clone());
                async move {
                    loop {
                        ctx.start(&b)?;
                        let fresh = match b.read_sampling(port).await {
                            Ok((msg, _)) if msg.len() >= 8 => {
                                let seq = u32::from_le_bytes(msg[..4].try_into().unwrap());
                                let new = last.get() != Some(seq);
                                last.set(Some(seq));
                                *ib.borrow_mut() = msg;
                                new
                            }
                            // nothing written yet
                            Ok(_) | Err(PerfError::InvalidState(_)) => false,
                            Err(e) => return Err(e),
                        };
                        if fresh {
                            b.signal_sem(go).await?;
                        } else {
                            ctx.cancel();
                        }
                        b.periodic_wait().await?;
                    }
                }
            });
            let s2 = s.clone();
            let sporadic = s.task(move |b: P::Backend| {
                let (s, ctx, ctx_a, ib) = (s2.clone(), ctx.clone(), ctx_a.clone(), inbox.clone());
                async move {
                    let mut received = 0;
                    let mut acc = 0u64;
                    loop {
                        b.wait_sem(go, Wait::Forever).await?;
                        let msg = ib.borrow().clone();
                        let crc = u32::from_le_bytes(msg[4..8].try_into().unwrap());
                        let block = &msg[8..];
                        if crc32(block) != crc {
                            return Err(PerfError::InvalidState("APP 3 message failed its CRC check".into()));
                        }
                        let (m1, m2) = matrices_from(block, crate::workloads::data::MATRIX_DIM);
                        let product = m1.multiply(&m2).map_err(|e| PerfError::InvalidState(e.to_string()))?;
                        b.modeled(work::MATMUL_MAC, m1.mac_count()).await?;
                        ctx.end(&b)?;
                        acc = app3_fold(acc, crc, product.as_slice());
                        received += 1;
                        if received == iters {
                            s.digest("app3", acc);
                            s.validate_all(&[ctx_a.clone(), ctx.clone()])?;
                            s.finish();
                            return Ok(());
                        }
                    }
                }
            });
            b.create_task(TaskSpec::new("MAT_PERIODIC", 20, periodic).periodic(APP3_FRAME))
                .await?;
            b.create_task(TaskSpec::new("MAT_SPORADIC", 10, sporadic)).await?;
            Ok(())
        }
    });

    let deployment = Deployment {
        frame: APP3_FRAME,
        partitions: vec![PartitionPlan::new("CRC", main_a), PartitionPlan::new("MATRIX", main_b)],
        windows: vec![
            WindowPlan {
                partition: 0,
                offset: 0,
                duration: APP3_WINDOW,
            },
            WindowPlan {
                partition: 1,
                offset: APP3_WINDOW,
                duration: APP3_WINDOW,
            },
        ],
        channels: vec![ChannelPlan {
            link: Link::Sampling,
            source: "CRC_OUT".into(),
            destination: "MAT_IN".into(),
            max_size: APP3_MESSAGE,
        }],
    };
    session.drive(platform, deployment, budget(iters, 2 * APP3_FRAME))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fingerprint(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fingerprint(b"a"), 0xaf63_dc4c_8601_ec8c);
    }

    #[test]
    fn message_layout() {
        let m = app3_message(7, &[1, 2, 3]);
        assert_eq!(&m[..4], &7u32.to_le_bytes());
        assert_eq!(&m[4..8], &crc32(&[1, 2, 3]).to_le_bytes());
        assert_eq!(&m[8..], &[1, 2, 3]);
    }
}
