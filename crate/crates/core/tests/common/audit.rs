//! Porting-layer audit: benchmarks run on a recording stub backend, and the
//! stub's call log is reconciled with the kernel's own trace.

use std::collections::BTreeMap;
use std::path::Path;

use sfpbench::apex::TraceKind;
use sfpbench::porting::{ApexPlatform, ApexSettings, RecordingPlatform};
use sfpbench::suite::{self, BenchDescriptor, Group, SuiteParams};

/// Kernel service each porting-layer call must turn into. Modeled work
/// shows up as one of the `WORK_*` services, folded here into one bucket.
fn kernel_name(call: &str) -> Option<&'static str> {
    Some(match call {
        "create_task" => "CREATE_PROCESS",
        "start_task" => "START",
        "stop_task" => "STOP",
        "set_priority" => "SET_PRIORITY",
        "current_task" => "GET_MY_ID",
        "find_task" => "GET_PROCESS_ID",
        "task_status" => "GET_PROCESS_STATUS",
        "partition_status" => "GET_PARTITION_STATUS",
        "lock_preemption" => "LOCK_PREEMPTION",
        "unlock_preemption" => "UNLOCK_PREEMPTION",
        "periodic_wait" => "PERIODIC_WAIT",
        "delay" => "TIMED_WAIT",
        "ticks" => "GET_CURRENT_TICKS",
        "raise_fault" => "RAISE_APPLICATION_ERROR",
        "create_sem" => "CREATE_SEMAPHORE",
        "wait_sem" => "WAIT_SEMAPHORE",
        "signal_sem" => "SIGNAL_SEMAPHORE",
        "find_sem" => "GET_SEMAPHORE_ID",
        "sem_status" => "GET_SEMAPHORE_STATUS",
        "create_event" => "CREATE_EVENT",
        "set_event" => "SET_EVENT",
        "reset_event" => "RESET_EVENT",
        "wait_event" => "WAIT_EVENT",
        "find_event" => "GET_EVENT_ID",
        "event_status" => "GET_EVENT_STATUS",
        "create_mutex" => "CREATE_MUTEX",
        "lock" => "ACQUIRE_MUTEX",
        "unlock" => "RELEASE_MUTEX",
        "find_mutex" => "GET_MUTEX_ID",
        "create_board" => "CREATE_BLACKBOARD",
        "display" => "DISPLAY_BLACKBOARD",
        "read_board" => "READ_BLACKBOARD",
        "clear_board" => "CLEAR_BLACKBOARD",
        "find_board" => "GET_BLACKBOARD_ID",
        "create_buffer" => "CREATE_BUFFER",
        "send_buffer" => "SEND_BUFFER",
        "receive_buffer" => "RECEIVE_BUFFER",
        "find_buffer" => "GET_BUFFER_ID",
        "create_sampling" => "CREATE_SAMPLING_PORT",
        "write_sampling" => "WRITE_SAMPLING_MESSAGE",
        "read_sampling" => "READ_SAMPLING_MESSAGE",
        "find_sampling" => "GET_SAMPLING_PORT_ID",
        "sampling_status" => "GET_SAMPLING_PORT_STATUS",
        "create_queuing" => "CREATE_QUEUING_PORT",
        "send_queuing" => "SEND_QUEUING_MESSAGE",
        "receive_queuing" => "RECEIVE_QUEUING_MESSAGE",
        "find_queuing" => "GET_QUEUING_PORT_ID",
        "queuing_status" => "GET_QUEUING_PORT_STATUS",
        "work" => "WORK",
        "modeled" => "WORK_*",
        _ => return None,
    })
}

fn bucket(service: &str) -> String {
    if service.starts_with("WORK_") {
        "WORK_*".into()
    } else {
        service.into()
    }
}

#[derive(Debug, Default)]
pub struct AuditReport {
    pub benches: usize,
    pub calls: usize,
}

/// Runs `bench` on the recording stub and directly on the executive, then
/// checks that (1) every logged call maps to a kernel service, (2) the
/// kernel completed exactly the logged calls, less at most one in-flight
/// call per process when the run stopped, and (3) both runs measured the
/// same samples.
pub fn audit_bench(bench: &'static BenchDescriptor, iters: u32) -> Result<usize, String> {
    let params = SuiteParams {
        iterations: Some(iters),
        ..SuiteParams::default()
    };
    let settings = ApexSettings {
        record_trace: true,
        ..ApexSettings::default()
    };
    let stub = RecordingPlatform::new(ApexPlatform::new(settings));
    let via_stub = suite::run_bench(&stub, bench, &params).map_err(|e| e.to_string())?;
    let direct =
        suite::run_bench(&ApexPlatform::new(ApexSettings::default()), bench, &params).map_err(|e| e.to_string())?;

    let log = stub.log().entries();
    let mut issued: BTreeMap<String, usize> = BTreeMap::new();
    for call in &log {
        let k = kernel_name(call).ok_or_else(|| format!("{}: `{call}` maps to no kernel service", bench.name))?;
        *issued.entry(k.to_string()).or_default() += 1;
    }
    let mut completed: BTreeMap<String, usize> = BTreeMap::new();
    let mut processes = 0;
    for e in stub.inner().take_trace() {
        match e.kind {
            TraceKind::Call => {
                *completed
                    .entry(bucket(e.detail.split_whitespace().next().unwrap_or("")))
                    .or_default() += 1
            }
            TraceKind::Ready if e.detail == "start" => processes += 1,
            _ => {}
        }
    }
    let mut in_flight = 0;
    for (k, &n) in &completed {
        let m = issued.get(k).copied().unwrap_or(0);
        if n > m {
            return Err(format!(
                "{}: kernel ran {n} {k} but only {m} went through the porting layer",
                bench.name
            ));
        }
    }
    for (k, &m) in &issued {
        in_flight += m - completed.get(k).copied().unwrap_or(0);
    }
    if in_flight > processes {
        return Err(format!(
            "{}: {in_flight} logged calls never reached the kernel",
            bench.name
        ));
    }

    for (a, b) in via_stub.rows.iter().zip(&direct.rows) {
        if a.series.samples != b.series.samples {
            return Err(format!(
                "{}: row {} differs through the stub",
                bench.name, a.series.name
            ));
        }
    }
    if via_stub.rows.len() != direct.rows.len() || via_stub.digests != direct.digests {
        return Err(format!("{}: outputs differ through the stub", bench.name));
    }
    Ok(log.len())
}

pub fn audit_greybox(iters: u32) -> Result<AuditReport, String> {
    let mut r = AuditReport::default();
    for b in suite::group(Group::Greybox) {
        r.calls += audit_bench(b, iters)?;
        r.benches += 1;
    }
    Ok(r)
}

/// Lines of the benchmark sources that name a kernel module or type.
pub fn scan_suite_sources() -> Vec<String> {
    // any kernel type would have to come in through one of these paths
    const PATHS: [&str; 2] = ["crate::apex", "apex::"];
    // kernel types reachable under other paths (the porting re-exports) or
    // commonly glob-imported; enum variants that share a name with a kernel
    // type (`Group::Apex`, a probe called `ProcessId`) are left to PATHS
    const TYPES: [&str; 10] = [
        "ApexCall",
        "ApexError",
        "ApexPlatform",
        "ApexBackend",
        "ApexSettings",
        "System",
        "SystemConfig",
        "PartitionDescriptor",
        "ProcessAttributes",
        "TraceEvent",
    ];
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("src/suite");
    let mut hits = Vec::new();
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .expect("suite sources")
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    assert!(files.len() >= 4, "expected the suite sources in {}", dir.display());
    for path in files {
        let text = std::fs::read_to_string(&path).unwrap();
        for (i, line) in text.lines().enumerate() {
            let code = line.split("//").next().unwrap_or("");
            let named_type = code
                .split(|c: char| !(c.is_alphanumeric() || c == '_'))
                .any(|ident| TYPES.contains(&ident));
            if named_type || PATHS.iter().any(|p| code.contains(p)) {
                hits.push(format!("{}:{}: {}", path.display(), i + 1, line.trim()));
            }
        }
    }
    hits
}
