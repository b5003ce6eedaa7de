//! Batches of independent virtual-clock runs, e.g. one benchmark over many
//! seeds or cost tables.
//!
//! Each job boots its own executive, so jobs share nothing and can run on
//! separate threads. With the `parallel` feature (on by default) [`sweep`]
//! spreads them over the rayon pool; without it, or through
//! [`sweep_sequential`], they run one after the other. Both produce the same
//! rows in job order.
//!
//! Only the virtual clock is allowed here: host-clock samples would pick up
//! the other threads.

use std::rc::Rc;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::porting::{ApexPlatform, ApexSettings};
use crate::report::ReportRow;
use crate::suite::{self, BenchDescriptor, SuiteError, SuiteParams};
use crate::timebase::ClockKind;
use crate::workloads::WorkloadData;

#[derive(Clone, Debug)]
pub struct SweepJob {
    pub bench: &'static BenchDescriptor,
    /// Seed of the generated datasets and APP 3 payloads.
    pub seed: u64,
    pub iterations: Option<u32>,
    pub process_count: usize,
    /// The clock field is ignored; jobs always run on the virtual clock.
    pub settings: ApexSettings,
}

impl SweepJob {
    pub fn new(bench: &'static BenchDescriptor, seed: u64) -> Self {
        SweepJob {
            bench,
            seed,
            iterations: None,
            process_count: 4,
            settings: ApexSettings::default(),
        }
    }

    pub fn iterations(mut self, n: u32) -> Self {
        self.iterations = Some(n);
        self
    }

    pub fn run(&self) -> Result<Vec<ReportRow>, SuiteError> {
        let mut settings = self.settings.clone();
        settings.clock = ClockKind::Virtual;
        settings.record_trace = false;
        let platform = ApexPlatform::new(settings);
        let params = SuiteParams {
            iterations: self.iterations,
            process_count: self.process_count,
            data: Rc::new(WorkloadData::generate(self.seed)),
        };
        let out = suite::run_bench(&platform, self.bench, &params)?;
        Ok(out
            .rows
            .iter()
            .map(|m| ReportRow::from_measured(self.bench, m))
            .collect())
    }
}

pub type SweepResult = Result<Vec<ReportRow>, SuiteError>;

/// Runs every job, in parallel when the `parallel` feature is enabled.
pub fn sweep(jobs: &[SweepJob]) -> Vec<SweepResult> {
    #[cfg(feature = "parallel")]
    {
        jobs.par_iter().map(SweepJob::run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        sweep_sequential(jobs)
    }
}

pub fn sweep_sequential(jobs: &[SweepJob]) -> Vec<SweepResult> {
    jobs.iter().map(SweepJob::run).collect()
}

/// One job per seed for the same benchmark.
pub fn seed_jobs(
    bench: &'static BenchDescriptor,
    seeds: impl IntoIterator<Item = u64>,
    iterations: u32,
) -> Vec<SweepJob> {
    seeds
        .into_iter()
        .map(|s| SweepJob::new(bench, s).iterations(iterations))
        .collect()
}
