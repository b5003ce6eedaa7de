//! On the virtual clock every grey-box and latency sample is a fixed sum of
//! cost-table entries. The expected sums are written out here by hand from
//! the scheduling sequence each test is built around.

use sfpbench::porting::{ApexPlatform, ApexSettings};
use sfpbench::suite::{self, find_bench, BenchOutput, SuiteParams, PROBES};
use sfpbench::timebase::{work, CostTable, Tick};

fn run(name: &str, iters: u32) -> BenchOutput {
    let platform = ApexPlatform::new(ApexSettings::default());
    let params = SuiteParams {
        iterations: Some(iters),
        ..SuiteParams::default()
    };
    suite::run_bench(&platform, find_bench(name).unwrap(), &params).unwrap()
}

fn assert_constant(out: &BenchOutput, row: &str, expected: Tick, samples: usize) {
    let m = out.row(row).unwrap_or_else(|| panic!("no row {row}"));
    assert_eq!(m.series.samples.len(), samples, "{row} sample count");
    assert!(
        m.series.samples.iter().all(|&s| s == expected),
        "{row}: expected every sample to be {expected}, got {:?}",
        &m.series.samples[..m.series.samples.len().min(8)]
    );
    assert_eq!(m.stats.bcet_ticks, expected);
    assert_eq!(m.stats.wcet_ticks, expected);
    assert_eq!(m.stats.stddev_us, 0.0);
}

fn c() -> CostTable {
    CostTable::calibrated()
}

#[test]
fn process_switch() {
    let out = run("Process Switch", 120);
    // four workers give three switches per round; 120 rounds cross a frame
    // boundary with the preemption lock held
    assert_constant(&out, "Process Switch", c().process_switch_cost, 360);
}

#[test]
fn single_mutex_calls() {
    assert_constant(
        &run("Mutex Acquire", 41),
        "Mutex Acquire",
        c().cost("ACQUIRE_MUTEX"),
        41,
    );
    assert_constant(
        &run("Mutex Release", 40),
        "Mutex Release",
        c().cost("RELEASE_MUTEX"),
        40,
    );
}

#[test]
fn looped_mutex() {
    let t = c();
    // lock, yield, switch, B blocks, switch, unlock, yield, switch,
    // B unlocks, yields, switch
    let expected = 2 * t.cost("ACQUIRE_MUTEX")
        + 2 * t.cost("RELEASE_MUTEX")
        + 3 * t.cost("TIMED_WAIT")
        + 4 * t.process_switch_cost;
    let out = run("Mutex Acquire 2", 30);
    assert_constant(&out, "Mutex Acquire 2", expected, 30);
    assert_constant(&out, "Mutex Release 2", expected, 30);
}

#[test]
fn mutex_workload() {
    let t = c();
    let expected = t.cost("ACQUIRE_MUTEX") + 1024 * t.cost(work::CHECKSUM_BYTE) + t.cost("RELEASE_MUTEX");
    let out = run("Mutex Workload", 20);
    assert_constant(&out, "Mutex Workload", expected, 20);
    assert_eq!(
        out.digest("checksum"),
        Some(sfpbench::workloads::additive_checksum(&sfpbench::workloads::WorkloadData::default().block) as u64)
    );
}

#[test]
fn single_semaphore_calls() {
    assert_constant(&run("Sem Wait", 25), "Sem Wait", c().cost("WAIT_SEMAPHORE"), 25);
    assert_constant(&run("Sem Signal", 25), "Sem Signal", c().cost("SIGNAL_SEMAPHORE"), 25);
    let t = c();
    assert_constant(
        &run("Sem Workload", 25),
        "Sem Workload",
        t.cost("WAIT_SEMAPHORE") + 1024 * t.cost(work::CHECKSUM_BYTE),
        25,
    );
}

#[test]
fn priority_semaphore_wakes_in_fifo_order() {
    let t = c();
    let out = run("Priority Sem", 30);
    assert_constant(
        &out,
        "Priority Sem",
        t.cost("SIGNAL_SEMAPHORE") + t.process_switch_cost,
        30,
    );
    // queued in start order 30, 70, 50; priority order would be 70, 50, 30
    assert_eq!(out.digest("wake_order"), Some(30 << 16 | 70 << 8 | 50));
}

#[test]
fn looped_semaphores() {
    let t = c();
    let expected = 2 * (t.cost("SIGNAL_SEMAPHORE") + t.cost("WAIT_SEMAPHORE") + t.process_switch_cost);
    let out = run("Sem Signal 2", 30);
    assert_constant(&out, "Sem Signal 2", expected, 30);
    assert_constant(&out, "Sem Wait 2", expected, 30);
}

#[test]
fn partition_switch() {
    let out = run("Partition Switch", 20);
    assert_constant(&out, "Partition Switch", c().partition_switch_cost, 20);
}

#[test]
fn every_latency_row_is_its_cost_entry() {
    let iters = 6;
    let out = run("APEX API", iters);
    assert_eq!(out.rows.len(), PROBES.len());
    let t = c();
    for p in PROBES {
        assert_constant(
            &out,
            p.row,
            t.cost(p.call),
            (iters * p.samples_per_iteration()) as usize,
        );
    }
}

#[test]
fn single_process_kernels_are_their_modeled_cost() {
    let d = sfpbench::workloads::WorkloadData::default();
    let t = c();
    let px = (d.image.width * d.image.height) as Tick;
    assert_constant(&run("Sobel", 3), "SOBEL", px * t.cost(work::SOBEL_PIXEL), 3);
    assert_constant(
        &run("ADPCM", 3),
        "ADPCM",
        2 * d.signal.len() as Tick * t.cost(work::ADPCM_SAMPLE),
        3,
    );
    // the generated graph is a ring plus chords, so every node is settled
    // once and every edge relaxed once
    assert_constant(
        &run("Dijkstra", 3),
        "DIJKSTRA",
        d.graph.edge_count() as Tick * t.cost(work::DIJKSTRA_STEP),
        3,
    );
}
