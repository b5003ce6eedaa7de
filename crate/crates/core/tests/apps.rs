//! The complete applications compute what their kernels compute outside
//! the harness, and the multi-process programs schedule as designed.

mod common;

use std::rc::Rc;

use rand::Rng;
use sfpbench::apex::{TraceEvent, TraceKind};
use sfpbench::porting::{ApexPlatform, ApexSettings};
use sfpbench::suite::{self, app3_fold, find_bench, run_apex_app, AppOptions, BenchOutput, SuiteParams, APP3_MESSAGE};
use sfpbench::timebase::{work, ClockKind, CostTable, Tick};
use sfpbench::workloads::data::{matrices_from, BLOCK_LEN, MATRIX_DIM};
use sfpbench::workloads::{adpcm::adpcm_codec, WorkloadData};

use common::oracles::{crc32_bitwise, floyd_warshall, matmul_triple_loop, sobel_reference};

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn run_traced(name: &str, iters: u32, data: &Rc<WorkloadData>) -> (BenchOutput, Vec<TraceEvent>) {
    let platform = ApexPlatform::new(ApexSettings {
        record_trace: true,
        ..ApexSettings::default()
    });
    let params = SuiteParams {
        iterations: Some(iters),
        data: data.clone(),
        ..SuiteParams::default()
    };
    let out = suite::run_bench(&platform, find_bench(name).unwrap(), &params).unwrap();
    (out, platform.take_trace())
}

fn data(seed: u64) -> Rc<WorkloadData> {
    Rc::new(WorkloadData::generate(seed))
}

#[test]
fn kernel_digests_equal_direct_computation() {
    for seed in [1, 77] {
        let d = data(seed);
        let (out, _) = run_traced("Sobel", 2, &d);
        assert_eq!(out.digest("sobel"), Some(fnv1a(&sobel_reference(&d.image))));

        let (out, _) = run_traced("ADPCM", 2, &d);
        let codec = adpcm_codec(&d.signal);
        let mut bytes = codec.encoded.clone();
        for v in &codec.decoded {
            bytes.extend(v.to_le_bytes());
        }
        assert_eq!(out.digest("adpcm"), Some(fnv1a(&bytes)));

        let (out, _) = run_traced("Dijkstra", 2, &d);
        let edges: Vec<(usize, usize, i64)> = d.graph.edges().map(|(u, v, w)| (u, v, w as i64)).collect();
        let fw = floyd_warshall(d.graph.nodes(), &edges);
        let dist: Vec<u8> = fw[0]
            .iter()
            .flat_map(|x| x.expect("ring makes every node reachable").to_le_bytes())
            .collect();
        assert_eq!(out.digest("dijkstra"), Some(fnv1a(&dist)));
    }
}

#[test]
fn dijkstra_cost_is_one_step_per_edge() {
    // every node is reachable from 0, so each node's out-edges are relaxed
    // exactly once when it is settled
    let d = data(5);
    let (out, _) = run_traced("Dijkstra", 3, &d);
    let expected = d.graph.edge_count() as Tick * CostTable::calibrated().cost(work::DIJKSTRA_STEP);
    let s = &out.row("DIJKSTRA").unwrap().series.samples;
    assert!(s.iter().all(|&x| x == expected), "{s:?} vs {expected}");
}

#[test]
fn app3_digest_regenerates_from_the_seed() {
    let iters = 12;
    for seed in [3, 1234] {
        let d = data(seed);
        let (out, _) = run_traced("APEX APP 3", iters, &d);

        let mut rng = d.payload_rng();
        let mut acc = 0u64;
        for _ in 0..iters {
            let mut block = vec![0u8; BLOCK_LEN];
            rng.fill(&mut block[..]);
            let crc = crc32_bitwise(&block);
            let (a, b) = matrices_from(&block, MATRIX_DIM);
            let product = matmul_triple_loop(MATRIX_DIM, a.as_slice(), b.as_slice());
            acc = app3_fold(acc, crc, &product);
        }
        assert_eq!(out.digest("app3"), Some(acc), "seed {seed}");
        for row in ["APEX APP 3 A", "APEX APP 3 B"] {
            assert_eq!(out.row(row).unwrap().series.samples.len(), iters as usize);
        }
    }
    assert_eq!(APP3_MESSAGE, 8 + BLOCK_LEN);
}

#[test]
fn app3_traffic_stays_in_each_partitions_window() {
    let (_, trace) = run_traced("APEX APP 3", 6, &data(9));
    for e in trace.iter().filter(|e| e.kind == TraceKind::Call) {
        let first_half = e.tick % suite::APP3_FRAME < suite::APP3_WINDOW;
        let p = e.partition.unwrap().0;
        if e.detail.starts_with("WRITE_SAMPLING_MESSAGE") {
            assert!(first_half && p == 1, "{e}");
        }
        if e.detail.starts_with("READ_SAMPLING_MESSAGE") {
            assert!(!first_half && p == 2, "{e}");
        }
    }
}

/// Stage index (0..4) of each stage's marker call, in trace order.
fn stage_sequence(trace: &[TraceEvent]) -> Vec<usize> {
    trace
        .iter()
        .filter(|e| e.kind == TraceKind::Call)
        .filter_map(|e| match e.detail.split_whitespace().next()? {
            "WORK_CHECKSUM_BYTE" => Some(0),
            "GET_CURRENT_TICKS" => Some(1),
            "WORK_CRC_BYTE" => Some(2),
            "WORK_MATMUL_MAC" => Some(3),
            _ => None,
        })
        .collect()
}

#[test]
fn app1_and_app2_run_their_stages_in_ring_order() {
    let d = data(11);
    for name in ["APEX APP 1", "APEX APP 2"] {
        let (out, trace) = run_traced(name, 25, &d);
        let seq = stage_sequence(&trace);
        assert_eq!(seq.len(), 100, "{name}");
        for (i, &s) in seq.iter().enumerate() {
            assert_eq!(s, i % 4, "{name}: stage order broken at marker {i}");
        }
        assert_eq!(
            out.digest("stage1"),
            Some(sfpbench::workloads::additive_checksum(&d.block) as u64)
        );
        assert_eq!(out.digest("stage3"), Some(crc32_bitwise(&d.block) as u64));
        let (a, b) = matrices_from(&d.block, d.matrix_dim);
        let product = matmul_triple_loop(d.matrix_dim, a.as_slice(), b.as_slice());
        let bytes: Vec<u8> = product.iter().flat_map(|v| v.to_le_bytes()).collect();
        assert_eq!(out.digest("stage4"), Some(fnv1a(&bytes)));
        assert!(trace.iter().any(|e| e.kind == TraceKind::Block), "{name} never blocked");
    }
}

#[test]
fn app2_with_preset_events_never_blocks() {
    let iters = 10;
    let platform = ApexPlatform::new(ApexSettings {
        record_trace: true,
        ..ApexSettings::default()
    });
    let out = run_apex_app(&platform, 2, iters, &data(2), AppOptions { preset_events: true }).unwrap();
    let trace = platform.take_trace();
    assert!(!trace.iter().any(|e| e.kind == TraceKind::Block));
    // nothing to wait for, so each stage runs all its iterations in turn
    let seq = stage_sequence(&trace);
    let expected: Vec<usize> = (0..4).flat_map(|s| std::iter::repeat_n(s, iters as usize)).collect();
    assert_eq!(seq, expected);
    assert_eq!(out.rows[0].series.samples.len(), iters as usize);
}

#[test]
fn host_clock_orders_statistics() {
    let platform = ApexPlatform::new(ApexSettings {
        clock: ClockKind::Host,
        ..ApexSettings::default()
    });
    let params = SuiteParams {
        iterations: Some(20),
        ..SuiteParams::default()
    };
    for name in [
        "Process Switch",
        "Sem Signal 2",
        "Partition Switch",
        "APEX API",
        "Sobel",
        "APEX APP 1",
    ] {
        let out = suite::run_bench(&platform, find_bench(name).unwrap(), &params).unwrap();
        for m in &out.rows {
            let s = &m.stats;
            assert!(s.samples > 0, "{}", m.series.name);
            assert!(
                s.bcet_ticks as f64 <= s.average_ticks && s.average_ticks <= s.wcet_ticks as f64,
                "{}: {s:?}",
                m.series.name
            );
            assert!(s.bcet_us <= s.average_us && s.average_us <= s.wcet_us && s.stddev_us >= 0.0);
        }
    }
}
