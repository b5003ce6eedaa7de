use super::{check_size, Slot};
use crate::apex::types::{ApexResult, PartitionId};

/// Single-slot message board. Reads never consume the message.
#[derive(Debug, Clone)]
pub struct Blackboard {
    pub name: String,
    pub owner: PartitionId,
    pub max_size: usize,
    pub message: Option<Vec<u8>>,
    pub waiters: Vec<Slot>,
}

impl Blackboard {
    pub fn new(name: String, owner: PartitionId, max_size: usize) -> Self {
        Blackboard {
            name,
            owner,
            max_size,
            message: None,
            waiters: Vec::new(),
        }
    }

    /// Replaces the message and returns the readers it unblocks.
    pub fn display(&mut self, msg: Vec<u8>) -> ApexResult<Vec<Slot>> {
        check_size(&msg, self.max_size)?;
        self.message = Some(msg);
        Ok(std::mem::take(&mut self.waiters))
    }

    pub fn read(&self) -> Option<Vec<u8>> {
        self.message.clone()
    }

    pub fn clear(&mut self) {
        self.message = None;
    }

    pub fn remove_waiter(&mut self, slot: Slot) {
        self.waiters.retain(|&s| s != slot);
    }
}
