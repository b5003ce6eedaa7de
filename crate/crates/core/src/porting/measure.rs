use std::cell::RefCell;
use std::rc::Rc;

use super::{PerfBackend, PerfError, PerfResult};
use crate::timebase::{MeasurementSeries, Rate, SampleRecorder, SummaryStats, Tick};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Declared,
    Ready,
    Validated,
}

#[derive(Debug)]
struct Inner {
    phase: Phase,
    recorder: SampleRecorder,
}

/// One named metric, driven through declare, initialize, any number of
/// start/end pairs and a final validate. Out-of-order use is rejected.
///
/// Clones share state, so a sample may start in one task and end in another.
#[derive(Clone, Debug)]
pub struct MeasureContext(Rc<RefCell<Inner>>);

impl MeasureContext {
    pub fn declare() -> Self {
        MeasureContext(Rc::new(RefCell::new(Inner {
            phase: Phase::Declared,
            recorder: SampleRecorder::new(""),
        })))
    }

    /// Shorthand for declare followed by initialize.
    pub fn named(name: impl Into<String>) -> Self {
        let ctx = Self::declare();
        ctx.initialize(name).expect("fresh context");
        ctx
    }

    pub fn name(&self) -> String {
        self.0.borrow().recorder.name().to_string()
    }

    pub fn len(&self) -> usize {
        self.0.borrow().recorder.series().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_open(&self) -> bool {
        self.0.borrow().recorder.is_open()
    }

    fn expect(&self, phase: Phase, what: &str) -> PerfResult<std::cell::RefMut<'_, Inner>> {
        let inner = self.0.borrow_mut();
        if inner.phase != phase {
            return Err(PerfError::Lifecycle(format!(
                "{what} on `{}` while {:?}",
                inner.recorder.name(),
                inner.phase
            )));
        }
        Ok(inner)
    }

    pub fn initialize(&self, name: impl Into<String>) -> PerfResult<()> {
        let mut inner = self.expect(Phase::Declared, "initialize")?;
        inner.recorder = SampleRecorder::new(name);
        inner.phase = Phase::Ready;
        Ok(())
    }

    pub fn start<B: PerfBackend>(&self, backend: &B) -> PerfResult<()> {
        self.start_at(backend.now())
    }

    pub fn start_at(&self, now: Tick) -> PerfResult<()> {
        let mut inner = self.expect(Phase::Ready, "start")?;
        inner
            .recorder
            .begin(now)
            .map_err(|e| PerfError::Lifecycle(e.to_string()))
    }

    /// Closes the open sample and returns its length.
    pub fn end<B: PerfBackend>(&self, backend: &B) -> PerfResult<Tick> {
        self.end_at(backend.now())
    }

    pub fn end_at(&self, now: Tick) -> PerfResult<Tick> {
        let mut inner = self.expect(Phase::Ready, "end")?;
        inner.recorder.end(now).map_err(|e| PerfError::Lifecycle(e.to_string()))
    }

    /// Drops an open sample, if any.
    pub fn cancel(&self) {
        self.0.borrow_mut().recorder.cancel();
    }

    pub fn series(&self) -> MeasurementSeries {
        self.0.borrow().recorder.series().clone()
    }

    /// Freezes the series and summarizes it.
    pub fn validate(&self, rate: Rate, with_stddev: bool) -> PerfResult<(MeasurementSeries, SummaryStats)> {
        let mut inner = self.expect(Phase::Ready, "validate")?;
        if inner.recorder.is_open() {
            return Err(PerfError::Lifecycle(format!(
                "validate on `{}` with an open sample",
                inner.recorder.name()
            )));
        }
        let series = inner.recorder.series().clone();
        let stats = series
            .summarize(rate, with_stddev)
            .map_err(|_| PerfError::EmptySeries(series.name.clone()))?;
        debug_assert!(stats.bcet_ticks as f64 <= stats.average_ticks && stats.average_ticks <= stats.wcet_ticks as f64);
        inner.phase = Phase::Validated;
        Ok((series, stats))
    }
}
