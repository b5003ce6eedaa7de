//! Clocks, cost model, sample recording and summary statistics.

mod clock;
mod cost;
mod measure;
mod stats;

pub use clock::{ClockBackend, ClockKind, Rate, RateError};
pub use cost::{work, CostTable};
pub use measure::{MeasureError, SampleRecorder};
pub use stats::{micros_display, summarize, ticks_to_micros_display, MeasurementSeries, StatsError, SummaryStats};

/// One unit of the measurement clock.
pub type Tick = u64;
