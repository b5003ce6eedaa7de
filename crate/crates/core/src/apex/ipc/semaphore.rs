use std::collections::VecDeque;

use super::Slot;
use crate::apex::call::SemaphoreStatus;
use crate::apex::types::{ApexError, ApexResult, PartitionId};

#[derive(Debug, Clone)]
pub struct Semaphore {
    pub name: String,
    pub owner: PartitionId,
    pub value: u32,
    pub max_value: u32,
    pub waiters: VecDeque<Slot>,
}

impl Semaphore {
    pub fn new(name: String, owner: PartitionId, initial: u32, max_value: u32) -> ApexResult<Self> {
        if max_value == 0 || initial > max_value {
            return Err(ApexError::InvalidParam(format!(
                "semaphore initial {initial} / max {max_value}"
            )));
        }
        Ok(Semaphore {
            name,
            owner,
            value: initial,
            max_value,
            waiters: VecDeque::new(),
        })
    }

    /// Takes a unit if one is available.
    pub fn try_wait(&mut self) -> bool {
        if self.value > 0 {
            self.value -= 1;
            true
        } else {
            false
        }
    }

    /// Hands the signal to the oldest waiter, or banks it.
    pub fn signal(&mut self) -> ApexResult<Option<Slot>> {
        if let Some(head) = self.waiters.pop_front() {
            return Ok(Some(head));
        }
        if self.value >= self.max_value {
            return Err(ApexError::Overflow);
        }
        self.value += 1;
        Ok(None)
    }

    pub fn remove_waiter(&mut self, slot: Slot) {
        self.waiters.retain(|&s| s != slot);
    }

    pub fn status(&self) -> SemaphoreStatus {
        SemaphoreStatus {
            value: self.value,
            max_value: self.max_value,
            waiting: self.waiters.len(),
        }
    }
}
