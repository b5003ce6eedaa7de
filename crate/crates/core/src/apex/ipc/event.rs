use super::Slot;
use crate::apex::call::EventStatus;
use crate::apex::types::{EventState, PartitionId};

#[derive(Debug, Clone)]
pub struct Event {
    pub name: String,
    pub owner: PartitionId,
    pub state: EventState,
    pub waiters: Vec<Slot>,
}

impl Event {
    pub fn new(name: String, owner: PartitionId) -> Self {
        Event {
            name,
            owner,
            state: EventState::Down,
            waiters: Vec::new(),
        }
    }

    /// Raises the event and returns every waiter, in blocking order.
    pub fn set(&mut self) -> Vec<Slot> {
        self.state = EventState::Up;
        std::mem::take(&mut self.waiters)
    }

    pub fn reset(&mut self) {
        self.state = EventState::Down;
    }

    pub fn is_up(&self) -> bool {
        self.state == EventState::Up
    }

    pub fn remove_waiter(&mut self, slot: Slot) {
        self.waiters.retain(|&s| s != slot);
    }

    pub fn status(&self) -> EventStatus {
        EventStatus {
            state: self.state,
            waiting: self.waiters.len(),
        }
    }
}
