use std::cell::{Ref, RefCell};
use std::rc::Rc;
use std::task::{Context, Waker};

use super::config::{ConfigError, SystemConfig};
use super::handle::{Apex, ProcessFuture};
use super::kernel::{Decision, Kernel};
use super::trace::TraceEvent;
use crate::timebase::Tick;

/// Why a run loop returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The caller's completion predicate held.
    Done,
    /// Nothing can ever run again: every process is dormant or blocked
    /// without a timeout.
    Stalled,
    /// The tick budget ran out first.
    TickLimit,
}

/// A booted module: the kernel plus the bodies of its live processes.
///
/// Single-threaded and fully deterministic under the virtual clock: the same
/// configuration and entry points always produce the same trace.
pub struct System {
    kernel: Rc<RefCell<Kernel>>,
    bodies: Vec<Option<(u64, ProcessFuture)>>,
}

impl System {
    pub fn boot(config: SystemConfig) -> Result<System, ConfigError> {
        config.validate()?;
        Ok(System {
            kernel: Rc::new(RefCell::new(Kernel::new(config))),
            bodies: Vec::new(),
        })
    }

    pub fn kernel(&self) -> Ref<'_, Kernel> {
        self.kernel.borrow()
    }

    pub fn now(&self) -> Tick {
        self.kernel.borrow().now()
    }

    pub fn take_trace(&mut self) -> Vec<TraceEvent> {
        self.kernel.borrow_mut().take_trace()
    }

    /// Runs one scheduling decision. Returns false when the scheduler found
    /// nothing to run in the current window.
    pub fn step(&mut self) -> bool {
        let decision = self.kernel.borrow_mut().schedule();
        self.drop_discarded();
        match decision {
            Decision::Poll(slot) => {
                self.poll(slot);
                true
            }
            Decision::Progress => true,
            Decision::Idle => false,
        }
    }

    fn poll(&mut self, slot: usize) {
        let generation = self.kernel.borrow().generation_of(slot);
        if self.bodies.len() <= slot {
            self.bodies.resize_with(slot + 1, || None);
        }
        let fresh = !matches!(&self.bodies[slot], Some((g, _)) if *g == generation);
        if fresh {
            let entry = self.kernel.borrow().entry_of(slot);
            let apex = Apex::new(self.kernel.clone(), slot, generation);
            self.bodies[slot] = Some((generation, entry.spawn(apex)));
        }
        let (_, body) = self.bodies[slot].as_mut().unwrap();
        let mut cx = Context::from_waker(Waker::noop());
        let finished = body.as_mut().poll(&mut cx).is_ready();
        self.kernel.borrow_mut().after_poll(slot, finished);
        if finished {
            self.bodies[slot] = None;
        }
        self.drop_discarded();
    }

    fn drop_discarded(&mut self) {
        let gone = std::mem::take(&mut self.kernel.borrow_mut().discard);
        for slot in gone {
            if let Some(b) = self.bodies.get_mut(slot) {
                // dropped outside the kernel borrow: a body may own handles
                let _old = b.take();
            }
        }
    }

    /// Steps until `done` holds, nothing can run any more, or the clock
    /// passes `max_ticks`.
    pub fn run_until(&mut self, max_ticks: Tick, mut done: impl FnMut(&Kernel) -> bool) -> StopReason {
        loop {
            if done(&self.kernel.borrow()) {
                return StopReason::Done;
            }
            if self.now() >= max_ticks {
                return StopReason::TickLimit;
            }
            if !self.step() && !self.kernel.borrow().has_pending_work() {
                return StopReason::Stalled;
            }
        }
    }

    /// Runs until the system stalls or `max_ticks` is reached.
    pub fn run_for(&mut self, max_ticks: Tick) -> StopReason {
        self.run_until(max_ticks, |_| false)
    }
}
