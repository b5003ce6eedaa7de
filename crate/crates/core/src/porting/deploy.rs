use crate::timebase::{Rate, Tick};

use super::{PerfBackend, PerfResult, TaskEntry};

/// One partition of a deployment. `main` runs once per partition start and
/// is expected to create the partition's tasks.
pub struct PartitionPlan<B> {
    pub name: String,
    pub memory_quota: u64,
    pub process_cap: Option<usize>,
    /// Lets `main` keep creating tasks after initialization.
    pub runtime_creation: bool,
    pub main: TaskEntry<B>,
}

impl<B: 'static> PartitionPlan<B> {
    pub const DEFAULT_QUOTA: u64 = 1 << 24;

    pub fn new(name: impl Into<String>, main: TaskEntry<B>) -> Self {
        PartitionPlan {
            name: name.into(),
            memory_quota: Self::DEFAULT_QUOTA,
            process_cap: None,
            runtime_creation: false,
            main,
        }
    }

    pub fn rebind<C: 'static>(self, wrap: impl Fn(C) -> B + 'static) -> PartitionPlan<C> {
        PartitionPlan {
            name: self.name,
            memory_quota: self.memory_quota,
            process_cap: self.process_cap,
            runtime_creation: self.runtime_creation,
            main: self.main.rebind(wrap),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowPlan {
    /// Index into [`Deployment::partitions`].
    pub partition: usize,
    pub offset: Tick,
    pub duration: Tick,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Link {
    Sampling,
    Queuing { capacity: usize },
}

/// A static connection between two named ports.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChannelPlan {
    pub link: Link,
    pub source: String,
    pub destination: String,
    pub max_size: usize,
}

pub struct Deployment<B> {
    pub frame: Tick,
    pub partitions: Vec<PartitionPlan<B>>,
    pub windows: Vec<WindowPlan>,
    pub channels: Vec<ChannelPlan>,
}

impl<B: 'static> Deployment<B> {
    pub const SINGLE_FRAME: Tick = 1_000_000;

    /// One partition that owns the whole major frame.
    pub fn single(plan: PartitionPlan<B>) -> Self {
        Deployment {
            frame: Self::SINGLE_FRAME,
            partitions: vec![plan],
            windows: vec![WindowPlan {
                partition: 0,
                offset: 0,
                duration: Self::SINGLE_FRAME,
            }],
            channels: Vec::new(),
        }
    }

    pub fn rebind<C: 'static>(self, wrap: impl Fn(C) -> B + Clone + 'static) -> Deployment<C> {
        Deployment {
            frame: self.frame,
            partitions: self.partitions.into_iter().map(|p| p.rebind(wrap.clone())).collect(),
            windows: self.windows,
            channels: self.channels,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunEnd {
    /// Clock reading when the run stopped.
    pub ticks: Tick,
    /// False when every task blocked or finished before `done` held.
    pub completed: bool,
}

/// Something that can boot a deployment and drive it.
pub trait Platform {
    type Backend: PerfBackend;

    fn rate(&self) -> Rate;

    /// Runs until `done` holds or nothing can make progress. Exceeding
    /// `budget` ticks is an error.
    fn run(&self, deployment: Deployment<Self::Backend>, budget: Tick, done: &dyn Fn() -> bool) -> PerfResult<RunEnd>;
}
