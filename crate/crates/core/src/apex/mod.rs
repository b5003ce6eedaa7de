//! A deterministic ARINC 653 module executive.
//!
//! Partitions run inside fixed windows of a cyclic major frame. Inside a
//! window, processes are scheduled preemptively by priority (FIFO among
//! equals). Process bodies are `async` blocks; every APEX service is an
//! await point at which the kernel charges the service cost and applies its
//! effect.

pub mod call;
pub mod config;
pub mod executor;
pub mod handle;
pub mod ipc;
pub mod kernel;
pub mod trace;
pub mod types;

pub use call::*;
pub use config::*;
pub use executor::{StopReason, System};
pub use handle::{Apex, Entry, ProcessFuture};
pub use kernel::{HealthRecord, Kernel};
pub use trace::{parse_trace, write_trace, TraceEvent, TraceKind};
pub use types::*;
