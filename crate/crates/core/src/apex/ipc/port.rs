use super::buffer::MessageQueue;
use crate::apex::types::{PartitionId, PortDirection, Validity};
use crate::timebase::Tick;

/// The single-slot medium behind a sampling source/destination pair.
#[derive(Debug, Clone)]
pub struct SamplingChannel {
    pub max_size: usize,
    pub message: Option<(Vec<u8>, Tick)>,
}

impl SamplingChannel {
    pub fn new(max_size: usize) -> Self {
        SamplingChannel {
            max_size,
            message: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SamplingPort {
    pub name: String,
    pub owner: PartitionId,
    pub direction: PortDirection,
    pub max_size: usize,
    pub refresh: Tick,
    pub channel: usize,
    pub last_validity: Validity,
}

impl SamplingPort {
    /// A message is valid while its age does not exceed the refresh period.
    pub fn validity(&self, written: Tick, now: Tick) -> Validity {
        if now.saturating_sub(written) <= self.refresh {
            Validity::Valid
        } else {
            Validity::Invalid
        }
    }
}

#[derive(Debug, Clone)]
pub struct QueuingChannel {
    pub queue: MessageQueue,
    /// Kernel index of the partitions owning each end, once created.
    pub source: Option<usize>,
    pub destination: Option<usize>,
}

impl QueuingChannel {
    pub fn new(capacity: usize, max_size: usize) -> Self {
        QueuingChannel {
            queue: MessageQueue::new(capacity, max_size),
            source: None,
            destination: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QueuingPort {
    pub name: String,
    pub owner: PartitionId,
    pub direction: PortDirection,
    pub capacity: usize,
    pub max_size: usize,
    pub channel: usize,
}
