//! The benchmark catalog: grey-box tests, the APEX latency application and
//! the complete applications.
//!
//! Every benchmark is generic over [`Platform`] and talks to the executive
//! only through the porting layer.

mod apps;
mod greybox;
mod latency;

use std::cell::{Cell, RefCell};
use std::fmt;
use std::future::Future;
use std::rc::Rc;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::porting::{Deployment, MeasureContext, PerfBackend, PerfError, PerfResult, Platform, TaskEntry};
use crate::timebase::{MeasurementSeries, Rate, SummaryStats, Tick};
use crate::workloads::WorkloadData;

pub use apps::{
    app3_fold, app3_message, fingerprint, kernel_digest_name, run_apex_app, run_complete, AppOptions, APP3_FRAME,
    APP3_MESSAGE, APP3_WINDOW,
};
pub use greybox::{
    run_mutex_pair, run_partition_switch, run_process_switch, run_sem_family, MutexVariant, SemVariant,
    PARTITION_FRAME, PARTITION_WINDOW,
};
pub use latency::{run_apex_latency, select_probes, Probe, PROBES, INTRA_PARTITION_CALLS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Greybox,
    Apex,
    Complete,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::Greybox, Group::Apex, Group::Complete];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::Greybox => "grey",
            Group::Apex => "apex",
            Group::Complete => "complete",
        }
    }

    pub fn default_iterations(self) -> u32 {
        match self {
            Group::Complete => 100,
            _ => 1000,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Group {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "grey" | "gray" | "greybox" | "grey-box" => Ok(Group::Greybox),
            "apex" => Ok(Group::Apex),
            "complete" => Ok(Group::Complete),
            other => Err(format!("unknown group `{other}` (expected grey, apex or complete)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchKind {
    ProcessSwitch,
    Mutex(MutexVariant),
    Sem(SemVariant),
    PartitionSwitch,
    ApexLatency,
    Sobel,
    Adpcm,
    Dijkstra,
    App1,
    App2,
    App3,
}

/// One application of the catalog and the report rows it produces.
#[derive(Clone, Copy, Debug)]
pub struct BenchDescriptor {
    pub name: &'static str,
    pub group: Group,
    pub kind: BenchKind,
    /// Empty for the APEX latency application, whose rows are [`PROBES`].
    pub rows: &'static [&'static str],
}

impl BenchDescriptor {
    pub fn default_iterations(&self) -> u32 {
        self.group.default_iterations()
    }

    pub fn row_names(&self) -> Vec<&'static str> {
        match self.kind {
            BenchKind::ApexLatency => PROBES.iter().map(|p| p.row).collect(),
            _ => self.rows.to_vec(),
        }
    }
}

macro_rules! bench {
    ($name:expr, $group:ident, $kind:expr, [$($row:expr),*]) => {
        BenchDescriptor { name: $name, group: Group::$group, kind: $kind, rows: &[$($row),*] }
    };
}

/// All eighteen applications, in report order.
pub const CATALOG: [BenchDescriptor; 18] = [
    bench!("Process Switch", Greybox, BenchKind::ProcessSwitch, ["Process Switch"]),
    bench!(
        "Mutex Acquire",
        Greybox,
        BenchKind::Mutex(MutexVariant::Acquire),
        ["Mutex Acquire"]
    ),
    bench!(
        "Mutex Release",
        Greybox,
        BenchKind::Mutex(MutexVariant::Release),
        ["Mutex Release"]
    ),
    bench!(
        "Mutex Acquire 2 and Mutex Release 2",
        Greybox,
        BenchKind::Mutex(MutexVariant::Looped),
        ["Mutex Acquire 2", "Mutex Release 2"]
    ),
    bench!(
        "Mutex Workload",
        Greybox,
        BenchKind::Mutex(MutexVariant::Workload),
        ["Mutex Workload"]
    ),
    bench!("Sem Wait", Greybox, BenchKind::Sem(SemVariant::Wait), ["Sem Wait"]),
    bench!(
        "Sem Signal",
        Greybox,
        BenchKind::Sem(SemVariant::Signal),
        ["Sem Signal"]
    ),
    bench!(
        "Priority Sem",
        Greybox,
        BenchKind::Sem(SemVariant::Priority),
        ["Priority Sem"]
    ),
    bench!(
        "Sem Signal 2 and Sem Wait 2",
        Greybox,
        BenchKind::Sem(SemVariant::Looped),
        ["Sem Signal 2", "Sem Wait 2"]
    ),
    bench!(
        "Sem Workload",
        Greybox,
        BenchKind::Sem(SemVariant::Workload),
        ["Sem Workload"]
    ),
    bench!(
        "Partition Switch",
        Greybox,
        BenchKind::PartitionSwitch,
        ["Partition Switch"]
    ),
    bench!("APEX API", Apex, BenchKind::ApexLatency, []),
    bench!("Sobel", Complete, BenchKind::Sobel, ["SOBEL"]),
    bench!("ADPCM", Complete, BenchKind::Adpcm, ["ADPCM"]),
    bench!("Dijkstra", Complete, BenchKind::Dijkstra, ["DIJKSTRA"]),
    bench!("APEX APP 1", Complete, BenchKind::App1, ["APEX APP 1"]),
    bench!("APEX APP 2", Complete, BenchKind::App2, ["APEX APP 2"]),
    bench!(
        "APEX APP 3",
        Complete,
        BenchKind::App3,
        ["APEX APP 3 A", "APEX APP 3 B"]
    ),
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SuiteError {
    #[error("unknown benchmark `{name}`; valid names: {}", valid.join(", "))]
    UnknownBench { name: String, valid: Vec<String> },
    #[error("unknown APEX call `{0}`")]
    UnknownCall(String),
    #[error("{bench}: {source}")]
    Bench { bench: String, source: PerfError },
}

/// Looks a benchmark up by application name or by one of its row names,
/// ignoring case.
pub fn find_bench(name: &str) -> Result<&'static BenchDescriptor, SuiteError> {
    let hit = |s: &str| s.eq_ignore_ascii_case(name.trim());
    CATALOG
        .iter()
        .find(|b| hit(b.name))
        .or_else(|| CATALOG.iter().find(|b| b.row_names().into_iter().any(hit)))
        .ok_or_else(|| SuiteError::UnknownBench {
            name: name.to_string(),
            valid: CATALOG.iter().map(|b| b.name.to_string()).collect(),
        })
}

pub fn group(g: Group) -> impl Iterator<Item = &'static BenchDescriptor> {
    CATALOG.iter().filter(move |b| b.group == g)
}

/// Knobs shared by every benchmark run.
#[derive(Clone, Debug)]
pub struct SuiteParams {
    /// Overrides the per-group default when set.
    pub iterations: Option<u32>,
    /// Process count of the process switch test.
    pub process_count: usize,
    pub data: Rc<WorkloadData>,
}

impl Default for SuiteParams {
    fn default() -> Self {
        SuiteParams {
            iterations: None,
            process_count: 4,
            data: Rc::new(WorkloadData::default()),
        }
    }
}

impl SuiteParams {
    pub fn iterations_for(&self, b: &BenchDescriptor) -> u32 {
        self.iterations.unwrap_or_else(|| b.default_iterations()).max(1)
    }
}

/// One validated series.
#[derive(Clone, Debug, PartialEq)]
pub struct Measured {
    pub series: MeasurementSeries,
    pub stats: SummaryStats,
}

/// What a benchmark run produced: its rows plus digests of every kernel
/// output it computed, so callers can check results without timing.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchOutput {
    pub rows: Vec<Measured>,
    pub digests: Vec<(String, u64)>,
}

impl BenchOutput {
    pub fn row(&self, name: &str) -> Option<&Measured> {
        self.rows.iter().find(|m| m.series.name == name)
    }

    pub fn digest(&self, name: &str) -> Option<u64> {
        self.digests.iter().find(|(n, _)| n == name).map(|&(_, d)| d)
    }
}

pub fn run_bench<P: Platform>(
    platform: &P,
    bench: &BenchDescriptor,
    params: &SuiteParams,
) -> Result<BenchOutput, SuiteError> {
    let iters = params.iterations_for(bench);
    let out = match bench.kind {
        BenchKind::ProcessSwitch => run_process_switch(platform, params.process_count, iters),
        BenchKind::Mutex(v) => run_mutex_pair(platform, v, iters, &params.data),
        BenchKind::Sem(v) => run_sem_family(platform, v, iters, &params.data),
        BenchKind::PartitionSwitch => run_partition_switch(platform, iters),
        BenchKind::ApexLatency => run_apex_latency(platform, None, iters),
        BenchKind::Sobel | BenchKind::Adpcm | BenchKind::Dijkstra => {
            run_complete(platform, bench.kind, iters, &params.data)
        }
        BenchKind::App1 => run_apex_app(platform, 1, iters, &params.data, AppOptions::default()),
        BenchKind::App2 => run_apex_app(platform, 2, iters, &params.data, AppOptions::default()),
        BenchKind::App3 => run_apex_app(platform, 3, iters, &params.data, AppOptions::default()),
    };
    out.map_err(|source| SuiteError::Bench {
        bench: bench.name.to_string(),
        source,
    })
}

/// Shared state of one benchmark run: validated rows, the first failure and
/// the completion flag the platform polls.
#[derive(Clone)]
pub(crate) struct Session(Rc<SessionInner>);

struct SessionInner {
    rate: Rate,
    done: Cell<bool>,
    error: RefCell<Option<PerfError>>,
    rows: RefCell<Vec<Measured>>,
    digests: RefCell<Vec<(String, u64)>>,
    outstanding: Cell<usize>,
}

impl Session {
    pub(crate) fn new(rate: Rate) -> Self {
        Session(Rc::new(SessionInner {
            rate,
            done: Cell::new(false),
            error: RefCell::new(None),
            rows: RefCell::new(Vec::new()),
            digests: RefCell::new(Vec::new()),
            outstanding: Cell::new(0),
        }))
    }

    pub(crate) fn is_over(&self) -> bool {
        self.0.done.get() || self.0.error.borrow().is_some()
    }

    pub(crate) fn fail(&self, e: PerfError) {
        self.0.error.borrow_mut().get_or_insert(e);
    }

    pub(crate) fn finish(&self) {
        self.0.done.set(true);
    }

    /// Declares `n` tasks that each have to call [`Session::part_done`]
    /// before `finish_parts` validates and completes.
    pub(crate) fn expect_parts(&self, n: usize) {
        self.0.outstanding.set(n);
    }

    /// Returns true for the last outstanding part.
    pub(crate) fn part_done(&self) -> bool {
        let left = self.0.outstanding.get().saturating_sub(1);
        self.0.outstanding.set(left);
        left == 0
    }

    pub(crate) fn validate(&self, ctx: &MeasureContext) -> PerfResult<()> {
        let (series, stats) = ctx.validate(self.0.rate, true)?;
        self.0.rows.borrow_mut().push(Measured { series, stats });
        Ok(())
    }

    pub(crate) fn validate_all(&self, ctxs: &[MeasureContext]) -> PerfResult<()> {
        ctxs.iter().try_for_each(|c| self.validate(c))
    }

    pub(crate) fn digest(&self, name: &str, value: u64) {
        let mut d = self.0.digests.borrow_mut();
        match d.iter_mut().find(|(n, _)| n == name) {
            Some((_, v)) if *v != value => {
                drop(d);
                self.fail(PerfError::InvalidState(format!("{name} changed between iterations")));
            }
            Some(_) => {}
            None => d.push((name.to_string(), value)),
        }
    }

    /// Wraps a fallible task body; an error ends the run.
    pub(crate) fn task<B, F, Fut>(&self, f: F) -> TaskEntry<B>
    where
        B: PerfBackend,
        F: Fn(B) -> Fut + 'static,
        Fut: Future<Output = PerfResult<()>> + 'static,
    {
        let s = self.clone();
        TaskEntry::new(move |b| {
            let fut = f(b);
            let s = s.clone();
            async move {
                if let Err(e) = fut.await {
                    s.fail(e);
                }
            }
        })
    }

    /// Runs the deployment to completion and collects the rows.
    pub(crate) fn drive<P: Platform>(
        self,
        platform: &P,
        d: Deployment<P::Backend>,
        budget: Tick,
    ) -> PerfResult<BenchOutput> {
        let end = platform.run(d, budget, &|| self.is_over())?;
        if let Some(e) = self.0.error.borrow_mut().take() {
            return Err(e);
        }
        if !end.completed {
            return Err(PerfError::InvalidState(format!(
                "benchmark stalled at tick {} before completing",
                end.ticks
            )));
        }
        Ok(BenchOutput {
            rows: self.0.rows.take(),
            digests: self.0.digests.take(),
        })
    }
}

/// Generous tick budget for `iters` iterations of a benchmark.
pub(crate) fn budget(iters: u32, per_iter: Tick) -> Tick {
    (iters as Tick + 2) * per_iter + 10_000_000
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_shape() {
        assert_eq!(CATALOG.len(), 18);
        assert_eq!(group(Group::Greybox).count(), 11);
        assert_eq!(group(Group::Apex).count(), 1);
        assert_eq!(group(Group::Complete).count(), 6);
        let grey_rows: usize = group(Group::Greybox).map(|b| b.row_names().len()).sum();
        assert_eq!(grey_rows, 13);
    }

    #[test]
    fn lookup_by_app_or_row() {
        assert_eq!(find_bench("sobel").unwrap().name, "Sobel");
        assert_eq!(find_bench("Sem Wait 2").unwrap().name, "Sem Signal 2 and Sem Wait 2");
        assert_eq!(find_bench("QUEUE_WRITE").unwrap().name, "APEX API");
        assert!(matches!(find_bench("NoSuch"), Err(SuiteError::UnknownBench { .. })));
    }

    #[test]
    fn group_names() {
        assert_eq!("grey".parse::<Group>().unwrap(), Group::Greybox);
        assert!("x".parse::<Group>().is_err());
    }
}
