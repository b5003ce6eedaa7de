use std::collections::VecDeque;

use super::Slot;
use crate::apex::types::PartitionId;

/// Bounded FIFO with queues of blocked senders (holding their message) and
/// blocked receivers. Shared by buffers and queuing channels.
#[derive(Debug, Clone)]
pub struct MessageQueue {
    pub capacity: usize,
    pub max_size: usize,
    pub queue: VecDeque<Vec<u8>>,
    pub send_waiters: VecDeque<(Slot, Vec<u8>)>,
    pub recv_waiters: VecDeque<Slot>,
}

impl MessageQueue {
    pub fn new(capacity: usize, max_size: usize) -> Self {
        MessageQueue {
            capacity,
            max_size,
            queue: VecDeque::new(),
            send_waiters: VecDeque::new(),
            recv_waiters: VecDeque::new(),
        }
    }

    pub fn is_full(&self) -> bool {
        self.queue.len() >= self.capacity
    }

    /// Appends unless full; hands the message back when it does not fit.
    pub fn push(&mut self, msg: Vec<u8>) -> Result<(), Vec<u8>> {
        if self.is_full() {
            Err(msg)
        } else {
            self.queue.push_back(msg);
            Ok(())
        }
    }

    pub fn pop(&mut self) -> Option<Vec<u8>> {
        self.queue.pop_front()
    }

    /// Moves the oldest blocked sender's message into the queue if there is
    /// room, returning that sender.
    pub fn admit_sender(&mut self) -> Option<Slot> {
        if self.is_full() {
            return None;
        }
        let (slot, msg) = self.send_waiters.pop_front()?;
        self.queue.push_back(msg);
        Some(slot)
    }

    /// Pairs the oldest blocked receiver with the oldest message.
    pub fn feed_receiver(&mut self) -> Option<(Slot, Vec<u8>)> {
        if self.queue.is_empty() {
            return None;
        }
        let slot = self.recv_waiters.pop_front()?;
        let msg = self.queue.pop_front().expect("queue checked non-empty");
        Some((slot, msg))
    }

    pub fn remove_waiter(&mut self, slot: Slot) {
        self.send_waiters.retain(|(s, _)| *s != slot);
        self.recv_waiters.retain(|&s| s != slot);
    }

    pub fn waiting(&self) -> usize {
        self.send_waiters.len() + self.recv_waiters.len()
    }
}

#[derive(Debug, Clone)]
pub struct Buffer {
    pub name: String,
    pub owner: PartitionId,
    pub queue: MessageQueue,
}

impl Buffer {
    pub fn new(name: String, owner: PartitionId, capacity: usize, max_size: usize) -> Self {
        Buffer {
            name,
            owner,
            queue: MessageQueue::new(capacity, max_size),
        }
    }
}
