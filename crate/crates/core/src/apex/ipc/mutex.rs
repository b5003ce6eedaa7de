use std::collections::VecDeque;

use super::Slot;
use crate::apex::types::{ApexError, ApexResult, PartitionId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Acquire {
    Acquired,
    MustBlock,
}

/// Non-recursive mutex with a FIFO of blocked acquirers.
#[derive(Debug, Clone)]
pub struct Mutex {
    pub name: String,
    pub partition: PartitionId,
    pub owner: Option<Slot>,
    pub waiters: VecDeque<Slot>,
}

impl Mutex {
    pub fn new(name: String, partition: PartitionId) -> Self {
        Mutex {
            name,
            partition,
            owner: None,
            waiters: VecDeque::new(),
        }
    }

    pub fn acquire(&mut self, slot: Slot) -> ApexResult<Acquire> {
        match self.owner {
            None => {
                self.owner = Some(slot);
                Ok(Acquire::Acquired)
            }
            Some(o) if o == slot => Err(ApexError::InvalidState("mutex already owned by caller".into())),
            Some(_) => Ok(Acquire::MustBlock),
        }
    }

    /// Releases and passes ownership to the oldest waiter, returned so the
    /// kernel can wake it.
    pub fn release(&mut self, slot: Slot) -> ApexResult<Option<Slot>> {
        if self.owner != Some(slot) {
            return Err(ApexError::NotOwner);
        }
        self.owner = self.waiters.pop_front();
        Ok(self.owner)
    }

    pub fn remove_waiter(&mut self, slot: Slot) {
        self.waiters.retain(|&s| s != slot);
    }

    /// Drops everything a vanished process held or waited for.
    pub fn forget(&mut self, slot: Slot) -> Option<Slot> {
        self.remove_waiter(slot);
        if self.owner == Some(slot) {
            self.owner = self.waiters.pop_front();
            return self.owner;
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn handoff_follows_fifo() {
        let mut m = Mutex::new("m".into(), PartitionId(1));
        assert_eq!(m.acquire(1), Ok(Acquire::Acquired));
        assert_eq!(m.acquire(2), Ok(Acquire::MustBlock));
        m.waiters.push_back(2);
        m.waiters.push_back(3);
        assert_eq!(m.release(2), Err(ApexError::NotOwner));
        assert_eq!(m.release(1), Ok(Some(2)));
        assert_eq!(m.owner, Some(2));
        assert_eq!(m.waiters, [3]);
    }
}
