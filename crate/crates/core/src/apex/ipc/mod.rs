//! Kernel-owned synchronization and communication objects.
//!
//! These types only keep queues and values. Blocking, waking and timeouts are
//! orchestrated by the kernel, which refers to processes by table slot.

mod blackboard;
mod buffer;
mod event;
mod mutex;
mod port;
mod semaphore;

pub use blackboard::Blackboard;
pub use buffer::{Buffer, MessageQueue};
pub use event::Event;
pub use mutex::{Acquire, Mutex};
pub use port::{QueuingChannel, QueuingPort, SamplingChannel, SamplingPort};
pub use semaphore::Semaphore;

use super::types::{ApexError, ApexResult};

pub(crate) type Slot = usize;

pub(crate) fn check_size(msg: &[u8], max: usize) -> ApexResult<()> {
    if msg.len() > max {
        Err(ApexError::MsgTooLong { len: msg.len(), max })
    } else {
        Ok(())
    }
}
